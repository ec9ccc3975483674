import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seisdamage.signal import (DEFAULT_PERIODS, G, Accelerogram, IMConfig, RecordFormatError,
                               compute_intensity_measures, compute_response_spectrum,
                               integrate_series, load_accelerogram)

from . import oracles


def _harmonic(fn, amplitude=3.0, period=1.0, duration=20.0, dt=0.005):
    t = np.arange(int(round(duration / dt)) + 1) * dt
    return Accelerogram(dt, amplitude * fn(2.0 * np.pi * t / period))


def _random_record(seed, n=1500, dt=0.01):
    rng = np.random.default_rng(seed)
    t = np.arange(n) * dt
    envelope = (t / t[-1]) ** 2 * np.exp(-6.0 * t / t[-1]) * 50.0
    return Accelerogram(dt, envelope * rng.standard_normal(n))


finite_records = arrays(np.float64, st.integers(8, 300),
                        elements=st.floats(-20, 20, allow_nan=False, allow_infinity=False))


# ---------------------------------------------------------------------------
# loading


def test_two_column_parse(tmp_path):
    p = tmp_path / "rec.txt"
    p.write_text("# comment\n0.0 0.0\n0.01 1.0\n0.02 0.0\n")
    acc = load_accelerogram(p)
    assert acc.dt == 0.01
    np.testing.assert_array_equal(acc.samples, [0.0, 1.0, 0.0])
    assert acc.id == "rec"
    assert acc.source_unit == "mps2"


def test_npts_dt_in_g(tmp_path):
    p = tmp_path / "rec.at2"
    p.write_text("NPTS=3, DT=0.01\n0 1\n0\n")
    acc = load_accelerogram(p, units="g")
    assert acc.dt == 0.01
    np.testing.assert_array_equal(acc.samples, [0.0, 9.81, 0.0])
    assert acc.source_unit == "g"


def test_nonuniform_time_column_rejected(tmp_path):
    p = tmp_path / "rec.txt"
    p.write_text("0.0 0.0\n0.01 1.0\n0.03 0.0\n")
    with pytest.raises(RecordFormatError, match="non-uniform"):
        load_accelerogram(p)


def test_time_jitter_within_tolerance_accepted(tmp_path):
    p = tmp_path / "rec.txt"
    p.write_text("0.0 0.0\n0.01 1.0\n0.0200000000001 0.0\n")
    assert load_accelerogram(p).samples.size == 3


@pytest.mark.parametrize("text, match", [
    ("0.0 0.0\n0.01 abc\n", "non-numeric|abc"),
    ("0.0 1.0\n", "fewer than 2"),
    ("NPTS=4, DT=0.01\n0 1 0\n", "NPTS=4"),
    ("0.0 1.0 2.0\n0.01 1.0 2.0\n", "2 columns"),
])
def test_malformed_files(tmp_path, text, match):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(RecordFormatError, match=match):
        load_accelerogram(p)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_accelerogram(tmp_path / "absent.txt")


def test_accelerogram_validation():
    with pytest.raises(ValueError):
        Accelerogram(0.0, [0.0, 1.0])
    with pytest.raises(ValueError):
        Accelerogram(0.01, [1.0])
    with pytest.raises(ValueError):
        Accelerogram(0.01, [0.0, np.nan])
    acc = Accelerogram(0.01, [0.0, 1.0])
    with pytest.raises(ValueError):
        acc.samples[0] = 2.0


# ---------------------------------------------------------------------------
# integration


def test_integrate_constant_exact():
    acc = Accelerogram(0.01, np.full(101, 2.5))
    v = integrate_series(acc)
    np.testing.assert_allclose(v.samples, 2.5 * acc.times, rtol=0, atol=1e-12)
    assert v.samples[0] == 0.0 and v.dt == acc.dt


def test_integrate_zero():
    assert not np.any(integrate_series(Accelerogram(0.1, np.zeros(5))).samples)


def test_integrate_cosine_matches_antiderivative():
    acc = _harmonic(np.cos, 1.0, 1.0, 10.0, 0.001)
    v = integrate_series(acc)
    np.testing.assert_allclose(v.samples, np.sin(2 * np.pi * acc.times) / (2 * np.pi), atol=1e-4)


# ---------------------------------------------------------------------------
# response spectrum


def test_zero_record_spectrum():
    rs = compute_response_spectrum(Accelerogram(0.01, np.zeros(200)))
    assert not np.any(rs.sa) and not np.any(rs.psv) and not np.any(rs.sd)


def test_resonance_amplification():
    T0, xi = 0.5, 0.05
    dt = 0.005
    t = np.arange(int(50 * T0 / dt) + 1) * dt
    acc = Accelerogram(dt, np.sin(2 * np.pi * t / T0))
    rs = compute_response_spectrum(acc, xi, [T0])
    expected = oracles.steady_state_sd(T0, xi)
    assert abs(rs.sd[0] / expected - 1.0) < 0.05


def test_long_period_approaches_pgd():
    dt = 0.01
    t = np.arange(0, 30, dt)
    a = np.where(t < 0.5, np.sin(2 * np.pi * t / 0.5), 0.0) * 3.0
    acc = Accelerogram(dt, a)
    pgd = compute_intensity_measures(acc).pgd
    sd = compute_response_spectrum(acc, 0.05, [20.0]).sd[0]
    assert abs(sd / pgd - 1.0) < 0.10


def test_pseudo_spectral_identities_full_grid():
    rs = compute_response_spectrum(_random_record(0))
    w = 2 * np.pi / rs.periods
    np.testing.assert_allclose(rs.psv, rs.sd * w, rtol=1e-9, atol=0)
    np.testing.assert_allclose(rs.sa, rs.sd * w * w, rtol=1e-9, atol=0)
    assert np.all(np.diff(rs.periods) > 0)


def test_default_grid():
    assert DEFAULT_PERIODS[0] == 0.02 and DEFAULT_PERIODS[-1] == 4.0 and DEFAULT_PERIODS.size == 200


@pytest.mark.parametrize("periods", [[], [0.0, 1.0], [0.5, 0.4], [-1.0]])
def test_bad_period_grid(periods):
    with pytest.raises(ValueError):
        compute_response_spectrum(_random_record(1), 0.05, periods)


@pytest.mark.parametrize("damping", [0.0, 1.0, -0.1])
def test_bad_damping(damping):
    with pytest.raises(ValueError):
        compute_response_spectrum(_random_record(1), damping, [1.0])


# ---------------------------------------------------------------------------
# intensity measures


def test_constant_record_closed_forms():
    acc = Accelerogram(0.01, np.full(1001, 2.0))
    im = compute_intensity_measures(acc)
    assert im.pga == 2.0
    assert im.cav == pytest.approx(20.0, rel=1e-12)
    # pi/(2*9.81) * 4 * 10 = 6.40488...
    assert im.arias == pytest.approx(oracles.arias_constant(2.0, 10.0), rel=1e-12)
    assert im.tud == pytest.approx(10.0) and im.tbd == pytest.approx(10.0)
    assert im.pgv == pytest.approx(20.0, rel=1e-12)
    assert im.sed == pytest.approx(4.0 * 10.0 ** 3 / 3.0, rel=1e-3)


def test_constant_amplitude_significant_duration():
    acc = Accelerogram(0.01, np.full(1001, 2.0))
    assert abs(compute_intensity_measures(acc).tsd - 0.9 * acc.duration) <= acc.dt


def test_sine_record_peaks():
    A, T = 3.0, 1.0
    im = compute_intensity_measures(_harmonic(np.sin, A, T))
    assert abs(im.pga - A) < 1e-3
    # velocity from rest is (A T / 2 pi)(1 - cos), peaking at A T / pi
    assert abs(im.pgv - oracles.harmonic_pgv(A, T)) < 1e-3


def test_cosine_record_peaks():
    A, T = 3.0, 1.0
    im = compute_intensity_measures(_harmonic(np.cos, A, T))
    assert abs(im.pga - A) < 1e-3
    assert abs(im.pgv - A * T / (2 * np.pi)) < 1e-3


def test_all_zero_record():
    im = compute_intensity_measures(Accelerogram(0.01, np.zeros(100)))
    assert im.tud == im.tbd == im.tsd == 0.0
    assert im.vmax_over_amax == 0.0
    assert im.undefined == ("vmax_over_amax",)
    # every Sa ties at zero, so the peak period falls back to the smallest grid period
    assert im.pp == DEFAULT_PERIODS[0]
    assert all(v == 0.0 for k, v in im.as_dict().items() if k != "pp")


def test_underflowing_record_has_no_significant_duration():
    im = compute_intensity_measures(Accelerogram(0.01, np.full(50, 1e-170)))
    assert im.pga == 1e-170 and im.arias == 0.0
    assert im.tsd == 0.0 and im.undefined == ("tsd",)
    assert im.tud == im.tbd == pytest.approx(0.49)


def test_pp_is_argmax_on_grid():
    acc = _random_record(3)
    im = compute_intensity_measures(acc)
    rs = compute_response_spectrum(acc)
    assert im.pp == rs.periods[int(np.argmax(rs.sa))]


def test_epa_equals_band_mean_over_2p5():
    im = compute_intensity_measures(_random_record(4))
    assert im.epa == pytest.approx(im.asi / (0.4 * 2.5), rel=1e-12)


def test_detrend_flag_removes_linear_trend():
    acc = Accelerogram(0.01, 0.5 + 0.1 * np.arange(500) * 0.01)
    im = compute_intensity_measures(acc, IMConfig(detrend=True))
    assert im.pga < 1e-9


def test_measures_deterministic():
    acc = _random_record(5)
    assert compute_intensity_measures(acc) == compute_intensity_measures(acc)


def test_g_constant():
    assert G == 9.81


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scaling_laws(seed, lam):
    acc = _random_record(seed, n=800)
    base = compute_intensity_measures(acc)
    scaled = compute_intensity_measures(Accelerogram(acc.dt, lam * acc.samples))
    for name in ("pga", "pgv", "pgd", "cav", "asi", "hi", "epa"):
        assert getattr(scaled, name) == pytest.approx(lam * getattr(base, name), rel=1e-9)
    for name in ("arias", "sed"):
        assert getattr(scaled, name) == pytest.approx(lam * lam * getattr(base, name), rel=1e-9)
    for name in ("pp", "tud", "tbd", "tsd", "vmax_over_amax"):
        assert getattr(scaled, name) == pytest.approx(getattr(base, name), rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(finite_records, st.floats(0.001, 0.05))
def test_duration_ordering_and_signs(samples, dt):
    acc = Accelerogram(dt, samples)
    im = compute_intensity_measures(acc, IMConfig(periods=np.array([0.1, 0.3, 0.5, 1.0, 2.5])))
    values = im.as_dict()
    assert all(math.isfinite(v) and v >= 0.0 for v in values.values())
    eps = 1e-9 * max(acc.duration, 1.0)
    assert im.tud <= im.tbd + eps
    assert im.tbd <= acc.duration + eps
    assert im.tsd <= acc.duration + eps


@settings(max_examples=40, deadline=None)
@given(finite_records, arrays(np.float64, st.integers(1, 50),
                              elements=st.floats(-20, 20, allow_nan=False, allow_infinity=False)))
@example(np.array([8.0, 5.0] + [0.0] * 15), np.zeros(15))  # pairwise summation lost 1 ulp here
def test_arias_nondecreasing_when_appending(samples, extra):
    cfg = IMConfig(periods=np.array([0.1, 0.5, 2.5]))
    a1 = compute_intensity_measures(Accelerogram(0.01, samples), cfg).arias
    a2 = compute_intensity_measures(Accelerogram(0.01, np.concatenate([samples, extra])), cfg).arias
    assert a2 >= a1


@settings(max_examples=25, deadline=None)
@given(finite_records)
def test_spectrum_identities_property(samples):
    rs = compute_response_spectrum(Accelerogram(0.02, samples), 0.05, [0.05, 0.2, 1.0, 3.0])
    w = 2 * np.pi / rs.periods
    np.testing.assert_allclose(rs.psv, rs.sd * w, rtol=1e-9, atol=0)
    np.testing.assert_allclose(rs.sa, rs.sd * w * w, rtol=1e-9, atol=0)
