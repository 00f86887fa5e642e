from __future__ import annotations

from dataclasses import dataclass
import enum
from typing import Optional


class Method(str, enum.Enum):
    ANALYTIC = "Analytic"
    SLAB2D = "Slab2D"
    MONTE_CARLO = "MonteCarlo"
    MAYER_GRID = "MayerGrid"


@dataclass(frozen=True)
class ExcludedVolumeResult:
    value: float
    stderr: float
    method: Method
    case_tag: Optional[str] = None

    def to_json(self) -> dict:
        d = {"value": self.value, "stderr": self.stderr, "method": Method(self.method).value}
        if self.case_tag is not None:
            d["case_tag"] = self.case_tag
        return d
