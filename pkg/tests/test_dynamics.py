import numpy as np
import pytest
from scipy.special import jv

from ptfloquet.drive import DriveWaveform
from ptfloquet.dynamics import (LatticeState, Trajectory, ballistic_velocity, effective_hopping, evolve,
                                gaussian_excitation, hopping_integrals, observables, single_site_excitation,
                                square_hopping_ratio)
from ptfloquet.errors import (ConstraintViolationError, DivergenceError, InsufficientDataError,
                              UndefinedObservableError)
from ptfloquet.floquet import LatticeConfig

# Hermitian square drive, omega = 15, |Delta0| = 10.7: sin(x)/x with x = |Delta0| T / 2,
# cross-checked by a 10^4-point trapezoid rule on exp(-2 Phi).
HERMITIAN_RATIO = 0.3497066007537892
HERMITIAN_TRAPEZOID = 0.34970657733698846


def undriven(omega=15.0):
    return DriveWaveform.square(0.0, omega)


def test_single_site():
    s = single_site_excitation(3)
    np.testing.assert_array_equal(s.amplitudes, [0, 1, 0])
    assert observables(s).norm == 1
    assert single_site_excitation(201).sites[[0, -1]].tolist() == [-100, 100]
    with pytest.raises(ValueError):
        single_site_excitation(4)


def test_gaussian_profile():
    s = gaussian_excitation(361, 4.0, np.pi / 4)
    n = s.sites
    np.testing.assert_allclose(s.amplitudes, np.exp(-(n / 4) ** 2 + 1j * n * np.pi / 4))
    np.testing.assert_allclose(np.abs(s.amplitudes), np.abs(gaussian_excitation(361, 4.0, 1.3).amplitudes))
    assert observables(gaussian_excitation(101, 200.0, 0.0)).mean == pytest.approx(0.0, abs=1e-12)
    # |c|^2 = exp(-2 n^2/16) -> sigma = 2 sites (the lattice sum is Gaussian-exact to 1e-12)
    assert observables(s).sigma == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(ValueError):
        gaussian_excitation(11, 0.0, 0.0)


def test_observables_two_sites():
    c = np.zeros(5, complex)
    c[2] = c[3] = 1 / np.sqrt(2)
    o = observables(LatticeState(c))
    assert (o.norm, o.mean, o.sigma) == pytest.approx((1.0, 0.5, 0.5))


def test_zero_norm_rejected():
    with pytest.raises(UndefinedObservableError):
        observables(LatticeState(np.zeros(5)))


def test_state_validation():
    with pytest.raises(ValueError):
        LatticeState(np.ones(4))
    with pytest.raises(ValueError):
        LatticeState(np.array([1, np.nan, 0]))


def test_bessel_oracle():
    # c_n(t) = i^n J_n(2 kappa t) on the infinite static lattice
    w = undriven(omega=2 * np.pi)  # period 1
    traj = evolve(single_site_excitation(201), w, n_periods=10, steps_per_period=256, keep_snapshots=True)
    n = np.arange(-100, 101)
    for k, t in enumerate(traj.times):
        np.testing.assert_allclose(traj.snapshots[k], jv(n, 2 * t) ** 2, atol=1e-6)
    # sum n^2 J_n(x)^2 = x^2/2  ->  sigma = sqrt(2) t
    sel = traj.times >= 2
    np.testing.assert_allclose(traj.sigma[sel], np.sqrt(2) * traj.times[sel], rtol=1e-2)


def test_undriven_parity_symmetric():
    traj = evolve(single_site_excitation(101), undriven(), n_periods=20, steps_per_period=128,
                  keep_snapshots=True)
    p = traj.snapshots[-1]
    np.testing.assert_array_equal(p, p[::-1])


def test_driven_mean_bounded():
    traj = evolve(single_site_excitation(201), DriveWaveform.square(10.7, 15.0), n_periods=40,
                  steps_per_period=256)
    assert np.max(np.abs(traj.mean)) < 2.0


def test_hermitian_norm_conserved():
    traj = evolve(single_site_excitation(201), DriveWaveform.square(-10.7j, 15.0), n_periods=80)
    assert np.max(np.abs(traj.norm - 1)) < 1e-7


def test_pt_norm_bounded_not_constant():
    traj = evolve(single_site_excitation(201), DriveWaveform.square(10.7, 15.0), n_periods=10,
                  steps_per_period=256)
    assert np.ptp(traj.norm) > 1e-3
    assert traj.norm.max() < 10
    assert not np.all(np.diff(traj.norm) > 0)


def test_step_refinement_convergence():
    w = DriveWaveform.square(10.7, 15.0)
    s0 = single_site_excitation(61)
    finals = [evolve(s0, w, n_periods=5, steps_per_period=m).final_state.amplitudes for m in (256, 512, 1024)]
    d1 = np.max(np.abs(finals[0] - finals[1]))
    d2 = np.max(np.abs(finals[1] - finals[2]))
    assert d2 < 1e-8
    # fourth order: error ratio ~ 16 per halving
    assert 10 < d1 / d2 < 24


def test_zero_periods_initial_only():
    traj = evolve(single_site_excitation(3), undriven(), n_periods=0)
    assert traj.times.tolist() == [0.0]
    assert traj.norm[0] == 1


def test_steps_must_be_even():
    with pytest.raises(ValueError):
        evolve(single_site_excitation(3), undriven(), n_periods=1, steps_per_period=33)


def test_sinusoid_propagation_runs():
    w = DriveWaveform.sinusoid(-5j, 15.0)
    traj = evolve(single_site_excitation(41), w, n_periods=3, steps_per_period=128)
    assert np.max(np.abs(traj.norm - 1)) < 1e-9


def test_edge_warning_recorded():
    traj = evolve(single_site_excitation(11), undriven(), n_periods=20, steps_per_period=128)
    assert traj.edge_time is not None
    assert traj.warnings


def test_divergence_raises():
    with pytest.raises(DivergenceError) as exc:
        evolve(single_site_excitation(11), DriveWaveform.square(400.0, 0.2), n_periods=5, steps_per_period=64)
    assert exc.value.time is not None


def test_snapshot_every():
    traj = evolve(single_site_excitation(21), undriven(), n_periods=6, steps_per_period=64, snapshot_every=3)
    assert len(traj.times) == 3


def _line_traj(n, slope=2.5):
    t = np.arange(n, dtype=float)
    return Trajectory(t, np.ones(n), np.zeros(n), slope * t + 1.0)


def test_ballistic_velocity_linear():
    fit = ballistic_velocity(_line_traj(40), (0, 39))
    assert fit.velocity == pytest.approx(2.5)
    assert fit.residual < 1e-12


def test_ballistic_velocity_insufficient():
    with pytest.raises(InsufficientDataError):
        ballistic_velocity(_line_traj(40), (0, 5))


def test_ballistic_velocity_undriven():
    traj = evolve(single_site_excitation(201), undriven(), n_periods=80, steps_per_period=128)
    fit = ballistic_velocity(traj, (2.0, 10.0))
    assert fit.velocity == pytest.approx(np.sqrt(2), rel=1e-3)


def test_effective_hopping_trivial():
    assert effective_hopping(DriveWaveform.square(0.0, 15.0)) == 1.0
    assert effective_hopping(DriveWaveform.square(0.0, 15.0), LatticeConfig(2.0)) == 2.0


def test_effective_hopping_pt():
    k = effective_hopping(DriveWaveform.square(10.7, 15.0))
    assert k.imag == pytest.approx(0, abs=1e-14)
    assert round(k.real, 1) == 2.1


def test_effective_hopping_hermitian_against_trapezoid_oracle():
    k = effective_hopping(DriveWaveform.square(-10.7j, 15.0))
    assert k.real == pytest.approx(HERMITIAN_RATIO, abs=1e-12)
    assert k.real == pytest.approx(HERMITIAN_TRAPEZOID, abs=1e-6)
    assert square_hopping_ratio(-10.7j, 2 * np.pi / 15) == pytest.approx(HERMITIAN_RATIO, abs=1e-12)


def test_effective_hopping_constraint():
    with pytest.raises(ConstraintViolationError):
        effective_hopping(DriveWaveform.square(3.0, 15.0, theta=0.0))


@pytest.mark.parametrize("w", [DriveWaveform.square(7.0, 11.0), DriveWaveform.sinusoid(9.0, 15.0),
                               DriveWaveform.sinusoid(-4j, 6.0)])
def test_mirror_identity(w):
    minus, plus = hopping_integrals(w)
    assert abs(minus - plus) < 1e-9


def test_sinusoid_hopping_is_bessel_i0():
    # <exp(-2 (D/w) sin wt)> = I0(2 D / w)
    from scipy.special import i0
    w = DriveWaveform.sinusoid(9.0, 15.0)
    assert effective_hopping(w).real == pytest.approx(i0(2 * 9.0 / 15.0), rel=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("d0", [6.0, 8.0, 10.7])
def test_hyperballistic_matches_effective_hopping(d0):
    base = ballistic_velocity(evolve(single_site_excitation(201), undriven(), n_periods=80)).velocity
    w = DriveWaveform.square(d0, 15.0)
    v = ballistic_velocity(evolve(single_site_excitation(201), w, n_periods=80)).velocity
    assert v / base == pytest.approx(effective_hopping(w).real, rel=0.2)
