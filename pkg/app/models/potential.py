from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from ..core.exceptions import NoiseAssumptionError

NoiseFamily = Literal["diagonal", "power"]


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """
    Polynomial nonlinearity phi(x) = sum_i coeffs[i] x^i with certified
    constants. Built by services.potential.certify_potential.
    """

    coeffs: np.ndarray
    p0: int
    a1: float
    a2: float
    a3: float
    a_phi: float
    growth_exponents: Tuple[int, ...] = ()

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @cached_property
    def polynomial(self) -> Polynomial:
        return Polynomial(self.coeffs)

    @property
    def degree(self) -> int:
        return self.polynomial.degree()

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    @property
    def p1(self) -> int:
        return self.growth_exponents[0] if self.growth_exponents else 0

    def __call__(self, x) -> np.ndarray:
        return self.polynomial(np.asarray(x, dtype=float))

    def derivative(self, x, order: int = 1) -> np.ndarray:
        return self.polynomial.deriv(order)(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class P4Report:
    """
    Vanishing-derivative conditions at 0 and the p1 < 4 gate for order m
    """

    m: int
    required_orders: Tuple[int, ...]
    failing_orders: Tuple[int, ...]
    p1: int
    p1_ok: bool

    @property
    def vanishing_ok(self) -> bool:
        return not self.failing_orders

    @property
    def passed(self) -> bool:
        return self.vanishing_ok and self.p1_ok


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """
    Diagonal noise Q e_k = q_k e_k.

    diagonal: q lists q_1, q_2, ...; modes past the list carry no noise.
    power:    q_k = amplitude * k^(-exponent) for k <= cutoff; cutoff None
              means the family continues to infinity (traces may diverge).
    """

    q: np.ndarray
    m_trace: int = 0
    family: NoiseFamily = "diagonal"
    amplitude: Optional[float] = None
    exponent: Optional[float] = None
    cutoff: Optional[int] = None
    label: str = field(default="")

    def __post_init__(self):
        arr = np.array(self.q, dtype=float)
        if arr.ndim != 1:
            raise NoiseAssumptionError("Noise amplitudes must be a vector", anchor="Q1")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise NoiseAssumptionError("Noise amplitudes must be finite and non-negative", anchor="Q1")
        arr.setflags(write=False)
        object.__setattr__(self, "q", arr)

    @classmethod
    def diagonal(cls, values, m_trace: int = 0) -> "NoiseSpec":
        return cls(np.asarray(values, dtype=float), m_trace=m_trace, label="diagonal")

    @classmethod
    def power(
        cls,
        amplitude: float,
        exponent: float,
        n_modes: int,
        cutoff: Optional[int] = None,
        m_trace: int = 0,
    ) -> "NoiseSpec":
        if amplitude < 0:
            raise NoiseAssumptionError("Power-law amplitude must be non-negative", anchor="Q1")
        k = np.arange(1, n_modes + 1, dtype=float)
        q = amplitude * k ** (-float(exponent))
        if cutoff is not None:
            q[int(cutoff):] = 0.0
        return cls(
            q,
            m_trace=m_trace,
            family="power",
            amplitude=float(amplitude),
            exponent=float(exponent),
            cutoff=cutoff,
            label=f"power(k^-{exponent:g})",
        )

    @classmethod
    def zero(cls, n_modes: int) -> "NoiseSpec":
        return cls(np.zeros(n_modes), label="off")

    @property
    def is_zero(self) -> bool:
        return not np.any(self.q)

    def amplitudes(self, n_modes: int) -> np.ndarray:
        """
        q_1..q_n, zero-padded or truncated to n_modes
        """
        out = np.zeros(n_modes)
        n = min(n_modes, self.q.size)
        out[:n] = self.q[:n]
        return out
