import numpy as np
import pytest

from app.core.exceptions import NoiseAssumptionError
from app.models.potential import NoiseSpec
from app.services.noise import (
    NoiseStream,
    make_stream,
    require_noise,
    sample_noise_increment,
    trace_QAmQ,
    validate_noise,
)


def test_power_family_traces():
    noise = NoiseSpec.power(1.0, 2.0, 8)
    assert trace_QAmQ(noise, 0) == pytest.approx(np.pi ** 4 / 90)
    assert trace_QAmQ(noise, 1) == pytest.approx(np.pi ** 2 * np.pi ** 2 / 6)


def test_rough_power_family_diverges():
    noise = NoiseSpec.power(1.0, 1.0, 8)
    assert trace_QAmQ(noise, 0) == pytest.approx(np.pi ** 2 / 6)
    assert trace_QAmQ(noise, 1) == float("inf")
    reports = validate_noise(noise, 1)
    assert [r.anchor for r in reports] == ["Q1", "Q2"]
    assert reports[0].passed and not reports[1].passed
    with pytest.raises(NoiseAssumptionError) as info:
        require_noise(noise, 1)
    assert info.value.anchor == "Q2"


def test_cutoff_makes_traces_finite():
    noise = NoiseSpec.power(1.0, 1.0, 8, cutoff=4)
    assert trace_QAmQ(noise, 1) == pytest.approx(4 * np.pi ** 2)
    np.testing.assert_array_equal(noise.q[4:], 0.0)


def test_diagonal_traces():
    noise = NoiseSpec.diagonal([1.0, 0.5])
    assert trace_QAmQ(noise, 0) == pytest.approx(1.25)
    assert trace_QAmQ(noise, 1) == pytest.approx(2 * np.pi ** 2)
    np.testing.assert_array_equal(noise.amplitudes(4), [1.0, 0.5, 0.0, 0.0])
    np.testing.assert_array_equal(noise.amplitudes(1), [1.0])
    assert trace_QAmQ(NoiseSpec.zero(4), 2) == 0.0


def test_invalid_noise():
    with pytest.raises(NoiseAssumptionError):
        NoiseSpec.diagonal([1.0, -0.5])
    with pytest.raises(NoiseAssumptionError):
        NoiseSpec.power(-1.0, 2.0, 4)
    with pytest.raises(NoiseAssumptionError):
        trace_QAmQ(NoiseSpec.zero(2), -1)


def test_stream_is_reproducible():
    a = NoiseStream(7, 0, 8)
    b = NoiseStream(7, 0, 8)
    for _ in range(3):
        np.testing.assert_array_equal(a.standard_normal(), b.standard_normal())
    other = NoiseStream(7, 1, 8).standard_normal()
    assert not np.allclose(other, NoiseStream(7, 0, 8).standard_normal())


def test_low_modes_do_not_depend_on_truncation():
    small = NoiseStream(3, 2, 8)
    large = NoiseStream(3, 2, 100)
    for _ in range(5):
        np.testing.assert_array_equal(small.standard_normal(), large.standard_normal()[:8])


def test_blocks_are_independent_streams():
    first = make_stream(1, 0, 0).standard_normal(64)
    second = make_stream(1, 0, 1).standard_normal(64)
    assert abs(np.corrcoef(first, second)[0, 1]) < 0.5


def test_increment_variance():
    rng = np.random.default_rng(0)
    draws = np.array(
        [sample_noise_increment(np.array([2.0, 0.0]), 0.01, rng).coeffs for _ in range(20_000)]
    )
    assert draws[:, 0].var() == pytest.approx(0.04, rel=0.05)
    assert not np.any(draws[:, 1])


def test_increment_from_spec_and_stream():
    noise = NoiseSpec.diagonal([1.0])
    increment = sample_noise_increment(noise, 0.25, NoiseStream(0, 0, 3), n_modes=3)
    assert increment.n_modes == 3
    assert increment.coeffs[1] == increment.coeffs[2] == 0.0
    with pytest.raises(NoiseAssumptionError):
        sample_noise_increment(noise, 0.0, np.random.default_rng(0))
    with pytest.raises(NoiseAssumptionError):
        sample_noise_increment(noise, 0.1, NoiseStream(0, 0, 3))
