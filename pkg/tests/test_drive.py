import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptfloquet.drive import (DriveWaveform, Shape, antisymmetry_residual, check_antisymmetry,
                             check_zero_mean, evaluate, load_samples, mean_value, period_segments,
                             phase_integral)

amps = st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False)
omegas = st.floats(0.5, 30)
times = st.floats(-50, 50)


def test_square_sign_convention():
    w = DriveWaveform.square(1.0, 2 * np.pi)
    assert evaluate(w, 0.0) == 1
    assert evaluate(w, 0.6) == -1
    # +Delta0 on [-T/4, T/4)
    assert evaluate(w, -0.25) == 1
    assert evaluate(w, 0.25) == -1


@pytest.mark.parametrize("shape", ["square", "sin"])
def test_zero_amplitude(shape):
    w = DriveWaveform(shape, 0.0, 3.0)
    t = np.linspace(-2, 2, 17)
    assert np.all(evaluate(w, t) == 0)
    assert np.all(phase_integral(w, t) == 0)
    assert check_antisymmetry(w)


def test_sampled_needs_two_samples():
    with pytest.raises(ValueError):
        DriveWaveform.sampled([1.0], 1.0)


def test_sampled_rejects_nonzero_mean():
    with pytest.raises(ValueError):
        DriveWaveform.sampled([1.0, 0.5], 1.0)


def test_omega_positive():
    with pytest.raises(ValueError):
        DriveWaveform.square(1.0, 0.0)


def test_square_phase_integral_quarter_period():
    d0, om = 10.7, 15.0
    w = DriveWaveform.square(d0, om)
    T = w.period
    assert phase_integral(w, T / 4) == pytest.approx(d0 * T / 4, rel=1e-14)
    assert phase_integral(w, 3 * T / 4) == pytest.approx(-d0 * T / 4, rel=1e-14)
    assert abs(phase_integral(w, T)) < 1e-12


def test_sinusoid_phase_integral():
    w = DriveWaveform.sinusoid(2.0 + 1j, 3.0)
    t = np.linspace(0, 5, 41)
    np.testing.assert_allclose(phase_integral(w, t), (2.0 + 1j) / 3.0 * np.sin(3.0 * t), atol=1e-14)


def test_antisymmetry_default_vs_theta_zero():
    d0 = 1.3
    assert check_antisymmetry(DriveWaveform.square(d0, 2.0))
    w0 = DriveWaveform.square(d0, 2.0, theta=0.0)
    assert not check_antisymmetry(w0)
    # analytic value at t = T/4: Phi(-T/4) + Phi(T/4) = Delta0 T / 2
    T = w0.period
    r = phase_integral(w0, T / 4 - T / 2) + phase_integral(w0, T / 4)
    assert r == pytest.approx(d0 * T / 2, rel=1e-13)


def test_antisymmetry_needs_16_samples():
    with pytest.raises(ValueError):
        check_antisymmetry(DriveWaveform.square(1.0, 1.0), n_samples=8)


def test_sampled_matches_square():
    # four samples [+,+,-,-] starting at phase 0 reproduce square(x)
    sq = DriveWaveform.square(2.0, 5.0, theta=0.3)
    sm = DriveWaveform.sampled([1, 1, -1, -1], 5.0, amplitude=2.0, theta=0.3)
    t = np.linspace(-3, 3, 301)
    np.testing.assert_allclose(evaluate(sm, t), evaluate(sq, t))
    np.testing.assert_allclose(phase_integral(sm, t), phase_integral(sq, t), atol=1e-12)


def test_sampled_file_roundtrip(tmp_path):
    p = tmp_path / "wave.txt"
    p.write_text("1 0\n0 1\n-1 0\n0 -1\n")
    s = load_samples(p)
    np.testing.assert_allclose(s, [1, 1j, -1, -1j])
    w = DriveWaveform.from_file(p, 2.0)
    assert w.shape is Shape.SAMPLED
    assert check_zero_mean(w)


def test_breakpoints_square():
    w = DriveWaveform.square(1.0, 2 * np.pi)  # T = 1, jumps at 0.25 + k/2
    np.testing.assert_allclose(w.breakpoints(0.0, 1.0), [0.25, 0.75])
    np.testing.assert_allclose(w.breakpoints(0.25, 1.25), [0.75])
    assert w.breakpoints(0.0, 0.2).size == 0


def test_period_segments_cover_period():
    w = DriveWaveform.square(1.0, 2 * np.pi)
    segs = period_segments(w, 0.0, 512)
    assert [round(L, 12) for _, L, _ in segs] == [0.25, 0.5, 0.25]
    assert sum(n for *_, n in segs) == 512
    # misaligned request is corrected rather than rejected
    segs = period_segments(w, 0.1, 66)
    assert sum(L for _, L, _ in segs) == pytest.approx(1.0)


@given(amps, omegas, times)
def test_periodicity(d0, om, t):
    for w in (DriveWaveform.square(d0, om), DriveWaveform.sinusoid(d0, om)):
        T = w.period
        assert evaluate(w, t + T) == pytest.approx(evaluate(w, t), abs=1e-9 * (1 + abs(d0)))


@given(amps, omegas)
def test_zero_mean_closed_forms(d0, om):
    for w in (DriveWaveform.square(d0, om), DriveWaveform.sinusoid(d0, om)):
        assert abs(phase_integral(w, w.period)) < 1e-12 * max(1, abs(d0))
        assert abs(mean_value(w)) < 1e-12 * max(1, abs(d0)) * om


@given(amps, omegas)
def test_default_theta_antisymmetric(d0, om):
    for w in (DriveWaveform.square(d0, om), DriveWaveform.sinusoid(d0, om)):
        assert antisymmetry_residual(w) < 1e-10 * max(1, abs(d0))


@given(st.floats(-20, 20), omegas, times)
def test_hermitian_duality(x, om, t):
    for shape in ("square", "sin"):
        assert np.real(evaluate(DriveWaveform(shape, 1j * x, om), t)) == 0
        assert np.imag(evaluate(DriveWaveform(shape, x, om), t)) == 0


@settings(max_examples=30)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=12), omegas, st.floats(-3, 3))
def test_sampled_phase_integral_matches_quadrature(vals, om, t):
    vals = np.array(vals) - np.mean(vals)
    w = DriveWaveform.sampled(vals, om)
    # brute-force: fine midpoint sum of evaluate()
    n = 200_000
    grid = (np.arange(n) + 0.5) * (t / n)
    brute = np.sum(evaluate(w, grid)) * (t / n) if t != 0 else 0.0
    assert abs(phase_integral(w, t) - brute) < 1e-2 * (1 + abs(t))
