"""Real-space propagation of the driven lattice and transport observables.

Amplitudes obey

    dc_n/dt = i kappa (c_{n-1} + c_{n+1}) + (-1)^n Delta(t) c_n

on a finite chain with hard walls, sites n = -(N-1)/2 ... (N-1)/2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .drive import DriveWaveform, Shape, check_antisymmetry, evaluate, period_segments, phase_integral
from .errors import ConstraintViolationError, DivergenceError, InsufficientDataError, UndefinedObservableError
from .floquet import DEFAULT_STEPS, LatticeConfig

log = logging.getLogger(__name__)

EDGE_FRACTION = 1e-6
MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class LatticeState:
    amplitudes: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1 or a.size % 2 == 0:
            raise ValueError(f"need an odd number of sites, got {a.size}")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", a)

    @property
    def size(self) -> int:
        return self.amplitudes.size

    @property
    def sites(self) -> np.ndarray:
        return site_indices(self.size)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class Observables:
    norm: float
    mean: float
    sigma: float


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    norm: np.ndarray
    mean: np.ndarray
    sigma: np.ndarray
    snapshots: np.ndarray | None = None
    edge_time: float | None = None
    warnings: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def final_state(self) -> LatticeState:
        return self.meta["final_state"]


@dataclass(frozen=True)
class VelocityFit:
    velocity: float
    intercept: float
    residual: float
    window: tuple
    n_samples: int


def site_indices(n_sites: int) -> np.ndarray:
    half = (n_sites - 1) // 2
    return np.arange(-half, half + 1)


def _check_sites(n_sites):
    if n_sites < 3 or n_sites % 2 == 0:
        raise ValueError(f"site count must be odd and >= 3, got {n_sites}")


def single_site_excitation(n_sites: int) -> LatticeState:
    _check_sites(n_sites)
    c = np.zeros(n_sites, dtype=complex)
    c[(n_sites - 1) // 2] = 1.0
    return LatticeState(c)


def gaussian_excitation(n_sites: int, width: float = 4.0, momentum: float = np.pi / 4) -> LatticeState:
    """c_n = exp(-(n/width)**2 + i n momentum), left unnormalised."""
    if n_sites % 2 == 0:
        raise ValueError(f"site count must be odd, got {n_sites}")
    if not width > 0:
        raise ValueError("width must be positive")
    n = site_indices(n_sites)
    return LatticeState(np.exp(-((n / width) ** 2) + 1j * n * momentum))


def _moments(prob, n):
    norm = prob.sum()
    if not norm > 0:
        raise UndefinedObservableError("state has zero norm")
    mean = (n * prob).sum() / norm
    var = ((n - mean) ** 2 * prob).sum() / norm
    return float(norm), float(mean), float(np.sqrt(max(var, 0.0)))


def observables(state: LatticeState) -> Observables:
    return Observables(*_moments(state.probabilities, state.sites))


def _rhs(c, delta, parity, hop):
    out = (delta * parity) * c
    out[1:] += hop * c[:-1]
    out[:-1] += hop * c[1:]
    return out


def _propagate(c, n_periods, segments, seg_delta, piecewise, w, t_start, T, parity, hop, snapshot_every, record):
    for p in range(n_periods):
        tp = t_start + p * T
        for (a, L, m), dconst in zip(segments, seg_delta):
            h = L / m
            for k in range(m):
                if piecewise:
                    d1 = d2 = d3 = dconst
                else:
                    t = tp + a + k * h
                    d1, d2, d3 = evaluate(w, t), evaluate(w, t + h / 2), evaluate(w, t + h)
                k1 = _rhs(c, d1, parity, hop)
                k2 = _rhs(c + (h / 2) * k1, d2, parity, hop)
                k3 = _rhs(c + (h / 2) * k2, d2, parity, hop)
                k4 = _rhs(c + h * k3, d3, parity, hop)
                c = c + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t_end = t_start + (p + 1) * T
        if not np.all(np.isfinite(c)):
            raise DivergenceError(f"amplitudes diverged by t={t_end:.6g}", time=t_end)
        if (p + 1) % snapshot_every == 0:
            record(t_end, c)
    return c


def evolve(state: LatticeState, w: DriveWaveform, cfg: LatticeConfig = LatticeConfig(),
           n_periods: int = 80, steps_per_period: int = DEFAULT_STEPS, snapshot_every: int = 1,
           keep_snapshots: bool = False) -> Trajectory:
    """Fixed-step RK4 propagation with step boundaries on drive discontinuities.

    Observables are sampled at the start and every ``snapshot_every`` periods.
    A wavefront reaching the edge (occupation of an end site above 1e-6 of the
    peak) is recorded in ``edge_time`` and ``warnings``; non-finite amplitudes
    raise DivergenceError.
    """
    if n_periods < 0:
        raise ValueError("n_periods must be non-negative")
    if steps_per_period < 2 or steps_per_period % 2:
        raise ValueError("steps_per_period must be even")
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")

    n = state.sites
    parity = np.where(n % 2 == 0, 1.0, -1.0)
    hop = 1j * cfg.kappa
    T = w.period
    t_start = state.t
    segments = period_segments(w, t_start, steps_per_period)
    piecewise = w.piecewise_constant
    # drive value per segment, identical every period
    seg_delta = [evaluate(w, t_start + a + L / 2) for a, L, _ in segments]

    c = state.amplitudes.copy()
    times, rows, snaps = [], [], []
    edge_time = None
    warnings = []

    def record(t, c):
        nonlocal edge_time
        prob = np.abs(c) ** 2
        times.append(t)
        rows.append(_moments(prob, n))
        if keep_snapshots:
            snaps.append(prob)
        if edge_time is None and max(prob[0], prob[-1]) > EDGE_FRACTION * prob.max():
            edge_time = t
            msg = f"wavefront reached the lattice edge at t={t:.6g}"
            warnings.append(msg)
            log.warning(msg)

    record(t_start, c)
    # overflow surfaces as non-finite amplitudes and is reported as DivergenceError
    with np.errstate(over="ignore", invalid="ignore"):
        c = _propagate(c, n_periods, segments, seg_delta, piecewise, w, t_start, T, parity, hop,
                       snapshot_every, record)

    arr = np.array(rows).reshape(-1, 3)
    meta = {
        "final_state": LatticeState(c, t_start + n_periods * T),
        "omega": w.omega, "delta0": w.amplitude, "shape": w.shape.value, "theta": w.phase,
        "kappa": cfg.kappa, "sites": state.size, "steps_per_period": steps_per_period,
        "n_periods": n_periods, "snapshot_every": snapshot_every,
    }
    return Trajectory(np.array(times), arr[:, 0], arr[:, 1], arr[:, 2],
                      np.array(snaps) if keep_snapshots else None, edge_time, tuple(warnings), meta)


def default_fit_window(traj: Trajectory) -> tuple:
    """[25%, 95%] of the run, cut off where the wavefront hit the edge."""
    t0, t1 = traj.times[0], traj.times[-1]
    lo = t0 + 0.25 * (t1 - t0)
    hi = t0 + 0.95 * (t1 - t0)
    if traj.edge_time is not None:
        hi = min(hi, traj.edge_time)
    return lo, hi


def ballistic_velocity(traj: Trajectory, fit_window: tuple | None = None) -> VelocityFit:
    """Slope of a least-squares line through sigma(t) inside ``fit_window``."""
    lo, hi = default_fit_window(traj) if fit_window is None else fit_window
    # half-sample slack so that window ends landing on sample times are kept
    eps = 1e-9 * max(abs(hi), 1.0)
    sel = (traj.times >= lo - eps) & (traj.times <= hi + eps)
    t, s = traj.times[sel], traj.sigma[sel]
    if t.size < MIN_FIT_SAMPLES:
        raise InsufficientDataError(f"{t.size} samples in window [{lo:g}, {hi:g}], need {MIN_FIT_SAMPLES}")
    if not np.all(np.isfinite(s)):
        raise InsufficientDataError("non-finite sigma samples in the fit window")
    slope, icpt = np.polyfit(t, s, 1)
    resid = float(np.sqrt(np.mean((s - (slope * t + icpt)) ** 2)))
    return VelocityFit(float(slope), float(icpt), resid, (float(lo), float(hi)), int(t.size))


def _gauss_legendre(f, edges, nodes=32, sub=8):
    """Composite Gauss-Legendre over [edges[0], edges[-1]], splitting at ``edges``."""
    x, wts = np.polynomial.legendre.leggauss(nodes)
    total = 0.0 + 0.0j
    for a, b in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(a, b, sub + 1)
        for u, v in zip(cuts[:-1], cuts[1:]):
            half = (v - u) / 2
            total += half * np.sum(wts * f(u + half * (x + 1)))
    return total


def square_hopping_ratio(delta0, T: float) -> complex:
    """Closed form kappa'/kappa = sinh(z)/z with z = Delta0 T / 2 (1 at z = 0)."""
    z = complex(delta0) * T / 2
    if abs(z) < 1e-8:
        return 1.0 + z * z / 6
    return complex(np.sinh(z) / z)


def hopping_integrals(w: DriveWaveform):
    """Period averages of exp(-2 Phi) and exp(+2 Phi), by quadrature."""
    T = w.period
    edges = np.concatenate([[0.0], w.breakpoints(0.0, T), [T]])
    minus = _gauss_legendre(lambda t: np.exp(-2 * phase_integral(w, t)), edges) / T
    plus = _gauss_legendre(lambda t: np.exp(2 * phase_integral(w, t)), edges) / T
    return complex(minus), complex(plus)


def effective_hopping(w: DriveWaveform, cfg: LatticeConfig = LatticeConfig(), check_tol: float = 1e-9) -> complex:
    """High-frequency renormalised hopping kappa' = kappa <exp(-2 Phi)>.

    Raises ConstraintViolationError unless the drive satisfies
    Phi(t - T/2) = -Phi(t); under that constraint the exp(+2 Phi) average is
    identical and is checked, as is the square-wave closed form.
    """
    if not check_antisymmetry(w):
        raise ConstraintViolationError("drive violates Phi(t - T/2) = -Phi(t)")
    minus, plus = hopping_integrals(w)
    scale = max(abs(minus), 1.0)
    if abs(minus - plus) > check_tol * scale:
        raise ArithmeticError(f"mirror integrals disagree: {minus} vs {plus}")
    if w.shape is Shape.SQUARE:
        closed = square_hopping_ratio(w.amplitude, w.period)
        if abs(minus - closed) > check_tol * scale:
            raise ArithmeticError(f"quadrature {minus} disagrees with closed form {closed}")
    return cfg.kappa * minus
