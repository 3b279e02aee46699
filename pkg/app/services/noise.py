import logging
from typing import List, Optional, Union

import numpy as np
from scipy.special import zeta

from ..core.exceptions import NoiseAssumptionError
from ..models.fields import SpectralField
from ..models.potential import NoiseSpec
from ..schemas.reports import CheckReport
from .spectral import eigenvalues

logger = logging.getLogger(__name__)

MODE_BLOCK = 64


def trace_QAmQ(noise: NoiseSpec, m: int = 0) -> float:
    """
    Tr(Q A^m Q) = sum_k q_k^2 alpha_k^m.

    Power families without a cutoff are summed to infinity in closed form
    and return inf when 2 exponent - 2m <= 1.
    """
    if m < 0:
        raise NoiseAssumptionError(f"Trace order must be >= 0, got {m}", anchor="Q2")
    if noise.family == "power" and noise.amplitude is not None:
        if noise.amplitude == 0.0:
            return 0.0
        if noise.cutoff is None:
            power = 2.0 * noise.exponent - 2.0 * m
            if power <= 1.0:
                logger.debug("Trace of order %d diverges for %s", m, noise.label)
                return float("inf")
            return float(noise.amplitude ** 2 * np.pi ** (2 * m) * zeta(power, 1))
        k = np.arange(1, noise.cutoff + 1, dtype=float)
        q = noise.amplitude * k ** (-noise.exponent)
        return float(np.sum(q ** 2 * eigenvalues(k.size) ** m))
    if noise.q.size == 0:
        return 0.0
    return float(np.sum(noise.q ** 2 * eigenvalues(noise.q.size) ** m))


def validate_noise(noise: NoiseSpec, m: Optional[int] = None) -> List[CheckReport]:
    """
    Q1 (finite trace of QQ*) always; Q2 (finite Tr(Q A^m Q)) when m is given
    """
    trace0 = trace_QAmQ(noise, 0)
    reports = [
        CheckReport(
            name="noise-trace",
            anchor="Q1",
            passed=bool(np.isfinite(trace0)),
            worst_margin=trace0,
            details={"trace_QQ": trace0, "sup_bound": 2.0 * trace0},
        )
    ]
    if m is not None:
        trace_m = trace_QAmQ(noise, m)
        reports.append(
            CheckReport(
                name="noise-regularity",
                anchor="Q2",
                passed=bool(np.isfinite(trace_m)),
                worst_margin=trace_m,
                details={"m": m, "trace_QAmQ": trace_m},
            )
        )
    return reports


def require_noise(noise: NoiseSpec, m: Optional[int] = None) -> List[CheckReport]:
    reports = validate_noise(noise, m)
    for report in reports:
        if not report.passed:
            raise NoiseAssumptionError(
                f"{report.name} failed: {report.details}", anchor=report.anchor
            )
    return reports


def make_stream(seed: int, trajectory_id: int = 0, block: int = 0) -> np.random.Generator:
    """
    Independent PCG64 stream for (seed, trajectory, mode block)
    """
    sequence = np.random.SeedSequence([int(seed), int(trajectory_id), int(block)])
    return np.random.Generator(np.random.PCG64(sequence))


class NoiseStream:
    """
    Standard normals for n_modes, one generator per block of MODE_BLOCK
    modes, so low-mode draws do not depend on the truncation N
    """

    def __init__(self, seed: int, trajectory_id: int, n_modes: int):
        self.seed = seed
        self.trajectory_id = trajectory_id
        self.n_modes = n_modes
        n_blocks = -(-n_modes // MODE_BLOCK)
        self._generators = [make_stream(seed, trajectory_id, b) for b in range(n_blocks)]

    def standard_normal(self) -> np.ndarray:
        draws = [g.standard_normal(MODE_BLOCK) for g in self._generators]
        return np.concatenate(draws)[: self.n_modes]


def sample_noise_increment(
    noise: Union[NoiseSpec, np.ndarray],
    dt: float,
    rng: Union[NoiseStream, np.random.Generator],
    n_modes: Optional[int] = None,
) -> SpectralField:
    """
    Q dW over one step: q_k sqrt(dt) xi_k
    """
    if dt <= 0:
        raise NoiseAssumptionError(f"dt must be positive, got {dt}")
    if isinstance(noise, NoiseSpec):
        q = noise.amplitudes(n_modes or noise.q.size)
    else:
        q = np.asarray(noise, dtype=float)
    if isinstance(rng, NoiseStream):
        xi = rng.standard_normal()
        if xi.size != q.size:
            raise NoiseAssumptionError("Noise stream and amplitude vector disagree on mode count")
    else:
        xi = rng.standard_normal(q.size)
    return SpectralField(q * np.sqrt(dt) * xi)
