from .basis import MonomialBasis, SymmetryClass, build_basis, symmetry_operations
from .projection import (KernelPolynomial, ProjectionReport, Provenance, SingularGram, evaluate_kernel, onsager_c2,
                         onsager_kernel, project_kernel, projected_kernel, verify_kernel_symmetry)
from .spherotriangle import (TABLE1, SpherotriangleCoeffs, analytic_spherotriangle_coeffs, k_moments, k_theta,
                             quadratic_coeffs, steiner_kernel)
