from .moments import MeanField, MomentSet, SEEDS, boltzmann_moments, isotropic, mean_field, seed
from .solver import (OrderParameters, ReducedS2Solver, SCFConfig, SolutionBranch, free_energy, order_parameters,
                     reduce_to_s2, scf_solve)
from .analysis import TheoremReport, branch_sweep, dedupe, select_phase, validate_theorems
from .maier_saupe import maier_saupe_kernel, onset_coupling
