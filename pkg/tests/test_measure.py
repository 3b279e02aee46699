import numpy as np
import pytest

from app.core.exceptions import ConfigurationError
from app.models.potential import NoiseSpec
from app.schemas.reports import MeasureEstimate, MomentEstimate
from app.services.measure import (
    MODAL,
    batch_means,
    default_burn_in,
    krylov_bogoliubov,
    measure_from_record,
    regularity_diagnostic,
    run_for_measure,
    spectral_decay_exponent,
    stationarity_test,
    tightness_diagnostic,
)
from app.services.monitors import plateau_ratio
from app.services.oracles import ou_discrete_variance, ou_stationary_variance

from .conftest import LINEAR_ZERO, make_model, make_stepper


def _estimate(**moments) -> MeasureEstimate:
    return MeasureEstimate(
        T=10.0,
        burn_in=1.0,
        dt=1e-3,
        n_batches=20,
        moments={k: MomentEstimate(estimate=v[0], stderr=v[1]) for k, v in moments.items()},
        tail_sup_avg=0.0,
        spectral_profile=[],
        alpha=[],
    )


def test_batch_means():
    mean, stderr = batch_means(np.full(400, 3.0))
    assert mean == 3.0
    assert stderr == 0.0
    rng = np.random.default_rng(0)
    mean, stderr = batch_means(rng.normal(size=4000), 40)
    assert abs(mean) < 4 * stderr
    assert stderr == pytest.approx(1 / np.sqrt(4000), rel=0.4)


def test_batch_means_needs_enough_data():
    with pytest.raises(ConfigurationError):
        batch_means(np.ones(100), 10)
    with pytest.raises(ConfigurationError):
        batch_means(np.ones(15), 20)


def test_stationarity_test():
    same = stationarity_test(_estimate(a=(1.0, 0.1)), _estimate(a=(1.1, 0.1)))
    assert same.verdict == "pass"
    assert same.z_scores["a"] == pytest.approx(-0.1 / np.hypot(0.1, 0.1))
    drift = stationarity_test(_estimate(a=(1.0, 0.01), b=(0.0, 0.0)), _estimate(a=(2.0, 0.01)))
    assert drift.verdict == "fail"
    assert set(drift.z_scores) == {"a"}


def test_spectral_decay_exponent():
    k = np.arange(1, 17, dtype=float)
    assert spectral_decay_exponent(k ** -4.0) == pytest.approx(-4.0)
    assert spectral_decay_exponent([1.0]) is None


def test_default_burn_in(allen_cahn_model):
    assert default_burn_in(allen_cahn_model) == pytest.approx(20.0)


def test_krylov_bogoliubov_needs_time_past_burn_in(ou_model):
    with pytest.raises(ConfigurationError):
        krylov_bogoliubov(ou_model, make_stepper(ou_model), 1.0, seed=0, burn_in=1.0)


def test_measure_from_short_record(ou_model):
    cfg = make_stepper(ou_model, stride=10)
    record = run_for_measure(ou_model, cfg, 1.0, seed=0)
    estimate = measure_from_record(record, ou_model, burn_in=0.2)
    assert MODAL in record.extras
    assert {"u1_sq", "u2_sq", "H2_norm_sq", "exp_beta_Psi0", "Psi0"} <= set(estimate.moments)
    assert len(estimate.spectral_profile) == 2
    assert estimate.spectral_profile[1] == 0.0
    assert estimate.burn_in == pytest.approx(0.2)
    with pytest.raises(ConfigurationError):
        measure_from_record(record, ou_model, burn_in=5.0)


def test_product_moments_of_single_mode(ou_model):
    cfg = make_stepper(ou_model, stride=10)
    record = run_for_measure(ou_model, cfg, 1.0, seed=4)
    moments = measure_from_record(record, ou_model, burn_in=0.2).moments
    assert moments["H3_norm_sq"].estimate == pytest.approx(np.pi ** 2 * moments["H2_norm_sq"].estimate)
    u1 = record.extras[MODAL][record.t >= 0.2 - 1e-12, 0]
    h2, h3 = np.pi ** 4 * u1 ** 2, np.pi ** 6 * u1 ** 2
    assert moments["H2_H3_product"].estimate == pytest.approx(np.mean(h2 * h3))
    assert moments["H1_H2_product"].estimate == pytest.approx(np.mean(np.pi ** 2 * u1 ** 2 * h2))


def test_regularity_refuses_rough_smooth_noise():
    rough = make_model(noise=NoiseSpec.power(1.0, 1.0, 16), n_modes=16)
    with pytest.raises(ConfigurationError) as info:
        regularity_diagnostic(rough, rough, make_stepper(rough), 1.0, seed=0)
    assert info.value.anchor == "Q2"


@pytest.mark.slow
def test_ou_stationary_variance(ou_model):
    dt = 5e-3
    cfg = make_stepper(ou_model, dt=dt, stride=20)
    record = run_for_measure(ou_model, cfg, 400.0, seed=21)
    estimate = measure_from_record(record, ou_model, burn_in=10.0)
    moment = estimate.moments["u1_sq"]
    assert moment.estimate == pytest.approx(ou_stationary_variance(1, 1.0, 1.0), rel=0.1)
    assert abs(moment.estimate - ou_discrete_variance(1, 1.0, 1.0, dt)) <= 4 * moment.stderr


@pytest.mark.slow
def test_ou_stationary_variance_at_full_horizon():
    model = make_model(LINEAR_ZERO, NoiseSpec.diagonal([1.0]), kappa=1.0, n_modes=8, n_nodes=128)
    dt = 1e-3
    record = run_for_measure(model, make_stepper(model, dt=dt, stride=10), 2000.0, seed=0)
    moment = measure_from_record(record, model, burn_in=100.0).moments["u1_sq"]
    assert moment.estimate == pytest.approx(1.0 / (2.0 * np.pi ** 2), rel=0.05)
    assert abs(moment.estimate - ou_discrete_variance(1, 1.0, 1.0, dt)) <= 3 * moment.stderr


@pytest.mark.slow
def test_tail_and_tightness_plateau():
    model = make_model(noise=NoiseSpec.diagonal(np.ones(8)), n_modes=8)
    cfg = make_stepper(model, dt=1e-2, stride=20)
    record = run_for_measure(model, cfg, 400.0, seed=8)
    assert plateau_ratio(record.column("tail_sup")) <= 2.0
    report = tightness_diagnostic(record)
    assert report.verdict == "bounded", report.details


@pytest.mark.slow
def test_smooth_noise_gives_faster_spectral_decay():
    smooth = make_model(noise=NoiseSpec.power(1.0, 3.0, 16), n_modes=16)
    rough = make_model(noise=NoiseSpec.power(1.0, 1.0, 16), n_modes=16)
    cfg = make_stepper(smooth, dt=5e-3, stride=10)
    report = regularity_diagnostic(smooth, rough, cfg, 50.0, seed=2, m=2)
    details = report.details
    assert details["smooth"]["decay_exponent"] < details["rough"]["decay_exponent"]
    assert details["smooth"]["stable"]["H1"]
