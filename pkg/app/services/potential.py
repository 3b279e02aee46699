import logging
import math
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from ..core.exceptions import AliasingError, PotentialAssumptionError
from ..models.fields import CollocationGrid, SpectralField
from ..models.potential import P4Report, PotentialSpec
from ..schemas.reports import CheckReport
from .spectral import to_physical, to_spectral

logger = logging.getLogger(__name__)


def _real_roots(poly: Polynomial) -> np.ndarray:
    if poly.degree() < 1:
        return np.empty(0)
    roots = poly.roots()
    real = roots[np.abs(roots.imag) <= 1e-9 * (1.0 + np.abs(roots.real))].real
    return np.unique(real)


def certify_potential(poly: Sequence[float]) -> PotentialSpec:
    """
    Certify phi(x) = sum_i poly[i] x^i against P0-P3 and return its constants.

    Degree >= 2 must be odd with a negative leading coefficient. Degree <= 1
    (including phi = 0) is accepted as the linear class c1 x with c1 <= 0,
    certified with p0 = 1 and a2 = a3 = 0.
    """
    coeffs = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if coeffs.size == 0:
        coeffs = np.zeros(1)
    if coeffs[0] != 0.0:
        raise PotentialAssumptionError(f"phi(0) = {coeffs[0]} must vanish", anchor="P0")

    phi = Polynomial(coeffs)
    degree = phi.degree()

    if degree <= 1:
        c1 = float(coeffs[1]) if coeffs.size > 1 else 0.0
        if c1 > 0:
            raise PotentialAssumptionError(
                f"Linear phi = {c1} x is not dissipative (x phi(x) grows like x^2)", anchor="P2"
            )
        return PotentialSpec(
            coeffs=np.array([0.0, c1]),
            p0=1,
            a1=abs(c1),
            a2=0.0,
            a3=0.0,
            a_phi=c1,
            growth_exponents=(0,),
        )

    leading = float(coeffs[-1])
    if degree % 2 == 0 or leading >= 0:
        raise PotentialAssumptionError(
            f"phi of degree {degree} with leading coefficient {leading} violates the "
            "dissipativity bound; need odd degree and a negative leading term",
            anchor="P2",
        )

    dphi = phi.deriv()
    critical = _real_roots(phi.deriv(2))
    a_phi = float(np.max(dphi(critical))) if critical.size else float(dphi(0.0))

    a2 = abs(leading) / 2.0
    # x phi(x) + a2 |x|^(p0 + 1); p0 + 1 is even so |x|^(p0+1) = x^(p0+1)
    g = Polynomial([0.0, 1.0]) * phi + Polynomial.basis(degree + 1) * a2
    candidates = np.concatenate([[0.0], _real_roots(g.deriv())])
    a3 = max(0.0, float(np.max(g(candidates))))

    a1 = float(np.sum(np.abs(coeffs)))
    spec = PotentialSpec(
        coeffs=coeffs,
        p0=degree,
        a1=a1,
        a2=a2,
        a3=a3,
        a_phi=a_phi,
        growth_exponents=tuple(degree - i for i in range(1, degree + 1)),
    )
    logger.debug("Certified phi: p0=%d a1=%g a2=%g a3=%g a_phi=%g", degree, a1, a2, a3, a_phi)
    return spec


def verify_certificate(spec: PotentialSpec, radius: float = 100.0, n_points: int = 1_000_001) -> CheckReport:
    """
    Recheck P1, P2 and P3 on a uniform lattice over [-radius, radius]
    """
    x = np.linspace(-radius, radius, n_points)
    phi = spec(x)
    ax = np.abs(x)
    p1_rhs = spec.a1 * (1.0 + ax ** spec.p0)
    p2_rhs = -spec.a2 * ax ** (spec.p0 + 1) + spec.a3
    p3_lhs = spec.derivative(x)

    slack = 1e-9
    p1_viol = np.abs(phi) - p1_rhs - slack * (1.0 + np.abs(p1_rhs))
    p2_viol = x * phi - p2_rhs - slack * (1.0 + np.abs(p2_rhs))
    p3_viol = p3_lhs - spec.a_phi - slack * (1.0 + abs(spec.a_phi))
    counts = {
        "P1": int(np.sum(p1_viol > 0)),
        "P2": int(np.sum(p2_viol > 0)),
        "P3": int(np.sum(p3_viol > 0)),
    }
    worst = float(max(p1_viol.max(), p2_viol.max(), p3_viol.max()))
    return CheckReport(
        name="potential-certificate",
        anchor="P1-P3",
        passed=sum(counts.values()) == 0,
        worst_margin=worst,
        details={"violations": counts, "radius": radius, "points": n_points},
    )


def check_growth_bound(spec: PotentialSpec) -> float:
    """
    Smallest C with |phi(x)| <= C (|x| + |x|^p0) on a log-dense lattice
    """
    magnitude = np.geomspace(1e-6, 100.0, 20001)
    x = np.concatenate([-magnitude[::-1], magnitude])
    ax = np.abs(x)
    return float(np.max(np.abs(spec(x)) / (ax + ax ** spec.p0)))


def dealiased_size(p0: int, n_modes: int) -> int:
    return math.ceil((p0 + 1) / 2) * n_modes


def apply_potential(u: SpectralField, spec: PotentialSpec, grid: CollocationGrid) -> SpectralField:
    """
    phi(u) by collocation: to physical values, apply phi, back to N modes
    """
    required = dealiased_size(spec.p0, u.n_modes)
    if grid.n_points < required:
        raise AliasingError(
            f"phi of degree {spec.p0} on {u.n_modes} modes needs {required} collocation nodes, "
            f"got {grid.n_points}"
        )
    if spec.is_zero:
        return SpectralField.zeros(u.n_modes)
    values = to_physical(u, grid)
    return to_spectral(spec(values), grid, n_modes=u.n_modes)


def check_p4(spec: PotentialSpec, m: int) -> P4Report:
    """
    phi^(i)(0) = 0 for i = 2 .. 2 floor(m/2) - 2, and p1 < 4
    """
    orders = tuple(range(2, 2 * (m // 2) - 1))
    failing = tuple(
        i for i in orders if i < spec.coeffs.size and spec.coeffs[i] * math.factorial(i) != 0.0
    )
    return P4Report(
        m=m,
        required_orders=orders,
        failing_orders=failing,
        p1=spec.p1,
        p1_ok=spec.p1 < 4,
    )


def require_p4(spec: PotentialSpec, m: int) -> P4Report:
    report = check_p4(spec, m)
    if not report.passed:
        raise PotentialAssumptionError(
            f"Regularity order m = {m} needs phi^(i)(0) = 0 for i in {report.required_orders} "
            f"(failing {report.failing_orders}) and p1 < 4 (p1 = {report.p1})",
            anchor="P4",
        )
    return report
