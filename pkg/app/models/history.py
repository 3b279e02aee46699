from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import interp1d

from ..core.exceptions import (
    GridMismatchError,
    InsufficientHistoryError,
    InvalidModeError,
    NonFiniteFieldError,
)
from .fields import SpectralField
from .kernel import KernelSpec, SGrid


@dataclass(frozen=True, eq=False)
class HistoryField:
    """
    eta_k(s_j) sampled on an s-grid: coeffs has shape (n_modes, grid.size)
    """

    coeffs: np.ndarray
    grid: SGrid
    kernel: KernelSpec

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.grid.size:
            raise GridMismatchError(
                f"History shape {arr.shape} does not match grid of {self.grid.size} nodes"
            )
        if not np.all(np.isfinite(arr)):
            raise NonFiniteFieldError("HistoryField has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, n_modes: int, grid: SGrid, kernel: KernelSpec) -> "HistoryField":
        return cls(np.zeros((n_modes, grid.size)), grid, kernel)

    @classmethod
    def from_profile(
        cls,
        profile: Callable[[np.ndarray], np.ndarray],
        modes: Union[SpectralField, np.ndarray],
        grid: SGrid,
        kernel: KernelSpec,
    ) -> "HistoryField":
        """
        eta(s) = profile(s) * modes, one shared s-profile for every mode
        """
        amplitudes = modes.coeffs if isinstance(modes, SpectralField) else np.asarray(modes)
        return cls(np.outer(amplitudes, profile(grid.nodes)), grid, kernel)

    def _check(self, other: "HistoryField") -> None:
        if not self.grid.is_same(other.grid) or self.n_modes != other.n_modes:
            raise GridMismatchError("Histories live on different grids or mode counts")

    def __add__(self, other: "HistoryField") -> "HistoryField":
        self._check(other)
        return HistoryField(self.coeffs + other.coeffs, self.grid, self.kernel)

    def __sub__(self, other: "HistoryField") -> "HistoryField":
        self._check(other)
        return HistoryField(self.coeffs - other.coeffs, self.grid, self.kernel)

    def __mul__(self, scalar: float) -> "HistoryField":
        return HistoryField(self.coeffs * float(scalar), self.grid, self.kernel)

    __rmul__ = __mul__


class PastPath:
    """
    Ring buffer of u snapshots and of the running time integral
    C(t) = int_0^t u, one row per step of size dt, spanning at least `span`.

    eta(t, s) = C(t) - C(t - s)                 for s <= t
              = eta0(s - t) + C(t)              for s > t
    Owned by one trajectory; mutated in place by `record`.
    """

    def __init__(
        self,
        u0: SpectralField,
        dt: float,
        span: float,
        eta0: Optional[HistoryField] = None,
    ):
        if dt <= 0 or span <= 0:
            raise InsufficientHistoryError("PastPath needs dt > 0 and span > 0")
        self.n_modes = u0.n_modes
        self.dt = float(dt)
        self.span = float(span)
        self.capacity = int(np.ceil(span / dt)) + 2
        self._u = np.zeros((self.capacity, self.n_modes))
        self._cum = np.zeros((self.capacity, self.n_modes))
        self._u[0] = u0.coeffs
        self.steps = 0
        self.eta0 = eta0
        self._eta0_interp = None
        if eta0 is not None:
            if eta0.n_modes != self.n_modes:
                raise InvalidModeError("Initial history has the wrong mode count")
            self._eta0_interp = interp1d(
                eta0.grid.nodes,
                eta0.coeffs,
                axis=1,
                bounds_error=False,
                fill_value=(eta0.coeffs[:, 0], eta0.coeffs[:, -1]),
                assume_sorted=True,
            )

    @classmethod
    def from_function(
        cls,
        u: Callable[[float], np.ndarray],
        t_end: float,
        dt: float,
        span: float,
        eta0: Optional[HistoryField] = None,
    ) -> "PastPath":
        """
        Record a synthetic path u(t) on t = 0, dt, ..., t_end
        """
        path = cls(SpectralField(u(0.0)), dt, span, eta0)
        n_steps = int(round(t_end / dt))
        for n in range(1, n_steps + 1):
            path.record(SpectralField(u(n * dt)))
        return path

    @property
    def t(self) -> float:
        return self.steps * self.dt

    @property
    def oldest_time(self) -> float:
        return max(0, self.steps - self.capacity + 1) * self.dt

    @property
    def current(self) -> np.ndarray:
        return self._u[self.steps % self.capacity].copy()

    def record(self, u: SpectralField) -> None:
        prev = self.steps % self.capacity
        nxt = (self.steps + 1) % self.capacity
        self._cum[nxt] = self._cum[prev] + 0.5 * self.dt * (self._u[prev] + u.coeffs)
        self._u[nxt] = u.coeffs
        self.steps += 1

    def _interpolate(self, buffer: np.ndarray, times: np.ndarray) -> np.ndarray:
        """
        Linear interpolation of a buffer at absolute times; returns (N, len(times))
        """
        pos = times / self.dt
        idx = np.floor(pos + 1e-9).astype(int)
        idx = np.clip(idx, 0, self.steps)
        frac = np.clip(pos - idx, 0.0, 1.0)
        nxt = np.minimum(idx + 1, self.steps)
        lo = buffer[idx % self.capacity]
        hi = buffer[nxt % self.capacity]
        return (lo * (1.0 - frac)[:, None] + hi * frac[:, None]).T

    def _check_window(self, t: float, earliest: float) -> None:
        if t > self.t + 1e-9 * max(1.0, self.t):
            raise InsufficientHistoryError(f"Time {t} is ahead of the recorded path ({self.t})")
        if earliest < self.oldest_time - 1e-9 * max(1.0, self.t):
            raise InsufficientHistoryError(
                f"Path only covers [{self.oldest_time}, {self.t}], need {earliest}"
            )

    def u_at(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        self._check_window(float(times.max()), float(times.min()))
        if times.min() < 0:
            raise InsufficientHistoryError("u is only recorded from t = 0")
        return self._interpolate(self._u, times)

    def history_matrix(self, s_nodes, t: Optional[float] = None) -> np.ndarray:
        """
        eta(t, s) for every s in s_nodes, shape (N, len(s_nodes))
        """
        t = self.t if t is None else float(t)
        s = np.atleast_1d(np.asarray(s_nodes, dtype=float))
        inside = s <= t
        earliest = t - s[inside].max() if inside.any() else t
        self._check_window(t, earliest)

        cum_t = self._interpolate(self._cum, np.array([t]))[:, 0]
        eta = np.empty((self.n_modes, s.size))
        if inside.any():
            eta[:, inside] = cum_t[:, None] - self._interpolate(self._cum, t - s[inside])
        if (~inside).any():
            beyond = np.broadcast_to(cum_t[:, None], (self.n_modes, int((~inside).sum())))
            if self._eta0_interp is not None:
                beyond = beyond + self._eta0_interp(s[~inside] - t)
            eta[:, ~inside] = beyond
        return eta

    def history_field(self, grid: SGrid, kernel: KernelSpec) -> HistoryField:
        return HistoryField(self.history_matrix(grid.nodes), grid, kernel)
