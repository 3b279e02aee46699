from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .fields import SpectralField
from .state import ExtendedState

TRAJECTORY_COLUMNS = (
    "t",
    "Psi0",
    "Psi1",
    "Psi2",
    "H0_norm_sq",
    "H1_norm_sq",
    "eta_M0_sq",
    "Teta_M0_sq",
    "tail_sup",
    "LPsi0",
)

PAIR_COLUMNS = ("t", "diff_sq", "hat_Hm_sq", "bound")


@dataclass
class TrajectoryRecord:
    """
    Time series of one trajectory, sampled every record_stride steps
    """

    columns: Dict[str, np.ndarray]
    final_u: SpectralField
    seed: int
    trajectory_id: int
    dt: float
    record_stride: int
    final_state: Optional[ExtendedState] = None
    extras: Dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.columns["t"])

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def column(self, name: str) -> np.ndarray:
        if name in self.columns:
            return self.columns[name]
        return self.extras[name]


@dataclass
class PairedRecord:
    """
    Reference and nudged trajectories driven by the same (or, for the
    negative control, independent) noise
    """

    columns: Dict[str, np.ndarray]
    seed: int
    trajectory_id: int
    shared_noise: bool
    m: int
    rate: float
    initial_norm_sq: float
    meta: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.columns["t"])


def stack_column(records: List[TrajectoryRecord], name: str) -> np.ndarray:
    """
    (n_paths, n_records) array of one column across an ensemble
    """
    return np.vstack([r.column(name) for r in records])
