from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Optional

import numpy as np

from ..core.exceptions import DomainError, InvalidGridError

KernelFamily = Literal["exponential", "tabulated"]


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """
    Memory kernel mu of class M_delta.

    exponential: mu(s) = mu0 * exp(-rate * s); rate defaults to delta.
    tabulated:   log-linear interpolation of (table_s, table_mu), continued
                 past the last entry with decay rate delta.
    """

    delta: float
    family: KernelFamily = "exponential"
    mu0: float = 1.0
    rate: Optional[float] = None
    table_s: Optional[np.ndarray] = None
    table_mu: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if self.family == "exponential":
            if self.rate is None:
                object.__setattr__(self, "rate", float(self.delta))
            if self.mu0 <= 0 or self.rate <= 0:
                raise DomainError("Exponential kernel needs mu0 > 0 and rate > 0")
        elif self.family == "tabulated":
            if self.table_s is None or self.table_mu is None:
                raise DomainError("Tabulated kernel needs table_s and table_mu")
            s = np.asarray(self.table_s, dtype=float)
            mu = np.asarray(self.table_mu, dtype=float)
            if s.shape != mu.shape or s.ndim != 1 or s.size < 2:
                raise DomainError("Kernel table must be two equal-length columns")
            if np.any(np.diff(s) <= 0):
                raise DomainError("Kernel table s column must be strictly increasing")
            object.__setattr__(self, "table_s", s)
            object.__setattr__(self, "table_mu", mu)
            object.__setattr__(self, "mu0", float(mu[0]))
        else:
            raise DomainError(f"Unknown kernel family {self.family!r}")

    def mu(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.family == "exponential":
            return self.mu0 * np.exp(-self.rate * s)
        # positivity is checked by the M1 validator, log only where defined
        with np.errstate(divide="ignore", invalid="ignore"):
            log_mu = np.log(self.table_mu)
        inside = np.interp(s, self.table_s, log_mu)
        beyond = log_mu[-1] - self.delta * (s - self.table_s[-1])
        return np.exp(np.where(s > self.table_s[-1], beyond, inside))

    def mu_prime(self, s) -> np.ndarray:
        """
        Closed-form derivative (exponential family only)
        """
        if self.family != "exponential":
            raise DomainError("Closed-form derivative only exists for exponential kernels")
        return -self.rate * self.mu(s)

    def l1_norm(self) -> float:
        if self.family == "exponential":
            return self.mu0 / self.rate
        s, mu = self.table_s, self.table_mu
        tail = mu[-1] / self.delta
        return float(np.trapezoid(mu, s) + tail)


@dataclass(frozen=True, eq=False)
class SGrid:
    """
    Memory-age grid: nodes[0] = 0 carries the boundary value eta(0) = 0,
    spacings grow geometrically by `ratio` up to s_max. Trapezoid weights.
    """

    nodes: np.ndarray
    weights: np.ndarray
    s_max: float
    ratio: float
    tail_tol: float
    quad_tol: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise InvalidGridError("s-grid needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidGridError("s-grid nodes must be strictly increasing")
        if weights.shape != nodes.shape or np.any(weights <= 0):
            raise InvalidGridError("s-grid weights must be positive, one per node")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.nodes.size

    @cached_property
    def spacings(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def min_spacing(self) -> float:
        return float(self.spacings.min())

    @property
    def max_spacing(self) -> float:
        return float(self.spacings.max())

    def upwind_derivative(self, values: np.ndarray) -> np.ndarray:
        """
        First-order one-sided derivative along the last axis, differencing
        from the smaller-s neighbour. Node 0 reuses the first interval.
        """
        if self.size < 2:
            raise InvalidGridError("Upwind derivative needs at least two nodes")
        diff = np.diff(values, axis=-1) / self.spacings
        return np.concatenate([diff[..., :1], diff], axis=-1)

    def is_same(self, other: "SGrid") -> bool:
        return self is other or (
            self.size == other.size and np.array_equal(self.nodes, other.nodes)
        )
