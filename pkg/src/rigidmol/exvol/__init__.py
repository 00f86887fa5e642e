from .result import ExcludedVolumeResult, Method
from .steiner import (CaseTag, EdgeSet, SteinerDecomposition, rod_excluded_volume, spherotriangle_excluded_volume,
                      steiner_v1, steiner_v2, steiner_v3)
