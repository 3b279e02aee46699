from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from ..core.exceptions import InvalidModeError, NonFiniteFieldError


@dataclass(frozen=True, eq=False)
class SpectralField:
    """
    Coefficients of u in the Dirichlet sine basis e_k(x) = sqrt(2) sin(k pi x),
    k = 1..N. coeffs[k - 1] is the coefficient of e_k.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidModeError("SpectralField needs a non-empty 1-D coefficient vector")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteFieldError("SpectralField has non-finite coefficients")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    @classmethod
    def zeros(cls, n_modes: int) -> "SpectralField":
        return cls(np.zeros(n_modes))

    @classmethod
    def basis(cls, k: int, n_modes: int) -> "SpectralField":
        """
        The basis field e_k truncated to n_modes
        """
        if k < 1 or k > n_modes:
            raise InvalidModeError(f"Mode {k} outside 1..{n_modes}")
        coeffs = np.zeros(n_modes)
        coeffs[k - 1] = 1.0
        return cls(coeffs)

    def _other(self, other: "SpectralField") -> np.ndarray:
        if other.n_modes != self.n_modes:
            raise InvalidModeError(
                f"Mode count mismatch: {self.n_modes} vs {other.n_modes}"
            )
        return other.coeffs

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs + self._other(other))

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs - self._other(other))

    def __mul__(self, scalar: Union[int, float]) -> "SpectralField":
        return SpectralField(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(-self.coeffs)

    def inner(self, other: "SpectralField") -> float:
        return float(np.dot(self.coeffs, self._other(other)))


@dataclass(frozen=True, eq=False)
class CollocationGrid:
    """
    Interior nodes x_j = j / (M + 1), j = 1..M, of the unit interval
    """

    n_points: int
    fast: bool = field(default=False)

    def __post_init__(self):
        if self.n_points < 1:
            raise InvalidModeError("Collocation grid needs at least one node")

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n_points + 1) / (self.n_points + 1)

    def sine_matrix(self, n_modes: int) -> np.ndarray:
        """
        S[j, k] = sqrt(2) sin((k + 1) pi x_j) for the first n_modes modes
        """
        return self._sine_matrix[:, :n_modes]

    @cached_property
    def _sine_matrix(self) -> np.ndarray:
        k = np.arange(1, self.n_points + 1)
        return np.sqrt(2.0) * np.sin(np.pi * np.outer(self.nodes, k))
