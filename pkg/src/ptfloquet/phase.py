"""PT phase classification, threshold search and phase maps for square-wave drive."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .drive import DriveWaveform
from .errors import BracketError, DivergenceError, NoUnbrokenPhaseError
from .floquet import DEFAULT_NQ, LatticeConfig, analytic_square_batch, cosh_sinhc, multipliers, q_grid

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_BISECT_TOL = 1e-3
WORKERS_ENV = "PTFLOQUET_WORKERS"
_GOLDEN = (np.sqrt(5.0) - 1) / 2


def worker_count() -> int:
    """Worker cap from ``$PTFLOQUET_WORKERS`` (default: CPU count, at most 8)."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class PhasePoint:
    omega: float
    delta0: float
    unbroken: bool
    max_imag: float


@dataclass
class ThresholdCurve:
    omegas: np.ndarray
    thresholds: np.ndarray
    meta: dict = field(default_factory=dict)

    def linear_fit(self):
        """Least-squares line through (omega, threshold); returns slope, intercept, R^2."""
        A = np.vstack([self.omegas, np.ones_like(self.omegas)]).T
        (slope, icpt), *_ = np.linalg.lstsq(A, self.thresholds, rcond=None)
        resid = self.thresholds - (slope * self.omegas + icpt)
        ss_tot = np.sum((self.thresholds - self.thresholds.mean()) ** 2)
        r2 = 1.0 - np.sum(resid**2) / ss_tot
        return float(slope), float(icpt), float(r2)

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.thresholds) >= 0))


def _imag_max(M, T, axis=None):
    # a multiplier that underflowed to 0 means |E''| = inf, i.e. broken
    with np.errstate(divide="ignore"):
        return np.abs(np.log(np.abs(multipliers(M)))).max(axis=axis) / T


def _half_trace(q, w, cfg):
    """|Re tr M / 2| = |C**2 - (Delta0**2 + |rho|**2) (S/lambda)**2| for M = M2 M1."""
    r2 = np.abs(cfg.rho(q)) ** 2
    d2 = w.amplitude**2
    C, g = cosh_sinhc(d2 - r2, w.period / 2)
    with np.errstate(over="ignore", invalid="ignore"):
        return np.abs((C * C - (d2 + r2) * g * g).real)


def max_imag_refined(w: DriveWaveform, cfg: LatticeConfig = LatticeConfig(), n_q: int = DEFAULT_NQ,
                     iterations: int = 32) -> float:
    """max_q |E''| on the grid, refined around near-critical peaks of |tr M / 2|.

    With real amplitude the multipliers are (eta, 1/eta) and the spectrum is
    real iff |tr M / 2| <= 1.  Resonant broken windows can be much narrower
    than the grid spacing at small amplitude, so every grid peak of the smooth
    function |tr M / 2| lying in (0.99, 1] is polished by a golden-section
    search over its two neighbouring cells.  Peaks already above 1 are broken
    on the grid and are left as sampled.
    """
    q = q_grid(n_q)
    M = analytic_square_batch(q, w, cfg)[0]
    h = _half_trace(q, w, cfg)
    E_imag = _imag_max(M, w.period, axis=-1)
    peaks = np.flatnonzero((h >= np.roll(h, 1)) & (h >= np.roll(h, -1)) & (h > 0.99) & (h <= 1.0))
    best = float(E_imag.max())
    if peaks.size == 0:
        return best
    dq = q[1] - q[0]
    a = q[peaks] - dq
    b = q[peaks] + dq
    for _ in range(iterations):
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = _half_trace(c, w, cfg)
        fd = _half_trace(d, w, cfg)
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    qs = (a + b) / 2
    Mr = analytic_square_batch(qs, w, cfg)[0]
    refined = _imag_max(Mr, w.period)
    return max(best, float(refined))


def is_unbroken(omega: float, delta0: float, cfg: LatticeConfig = LatticeConfig(),
                n_q: int = DEFAULT_NQ, tol: float = DEFAULT_TOL) -> PhasePoint:
    """Classify a square-wave drive point; overflow counts as broken (max_imag = inf).

    ``max_imag`` is the grid maximum of |E''| refined near peaks of
    |tr M / 2| (see :func:`max_imag_refined`).
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if delta0 < 0:
        raise ValueError("delta0 must be non-negative")
    w = DriveWaveform.square(delta0 * cfg.kappa, omega * cfg.kappa)
    try:
        mi = max_imag_refined(w, cfg, n_q) / cfg.kappa
    except DivergenceError:
        mi = np.inf
    return PhasePoint(float(omega), float(delta0), bool(mi < tol), float(mi))


def threshold_amplitude(omega: float, cfg: LatticeConfig = LatticeConfig(), n_q: int = DEFAULT_NQ,
                        bisect_tol: float = DEFAULT_BISECT_TOL, tol: float = DEFAULT_TOL) -> float:
    """Largest unbroken amplitude at ``omega`` (bisection, grid-relative).

    Raises NoUnbrokenPhaseError when already ``delta0 = bisect_tol`` is broken.
    """

    def ok(d):
        return is_unbroken(omega, d, cfg, n_q, tol).unbroken

    if not ok(bisect_tol):
        raise NoUnbrokenPhaseError(f"no unbroken phase at omega={omega:g}")
    lo, hi = bisect_tol, max(1.0, 2 * bisect_tol)
    while ok(hi):
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise BracketError(f"no symmetry breaking found below delta0={hi:g}")
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def threshold_curve(omegas, cfg: LatticeConfig = LatticeConfig(), n_q: int = DEFAULT_NQ,
                    bisect_tol: float = DEFAULT_BISECT_TOL, tol: float = DEFAULT_TOL) -> ThresholdCurve:
    omegas = np.asarray(omegas, dtype=float)
    with ThreadPoolExecutor(worker_count()) as ex:
        th = list(ex.map(lambda o: threshold_amplitude(o, cfg, n_q, bisect_tol, tol), omegas))
    curve = ThresholdCurve(omegas, np.array(th),
                           {"n_q": n_q, "tol": tol, "bisect_tol": bisect_tol, "kappa": cfg.kappa})
    if not curve.is_monotone():
        log.warning("threshold curve is not monotone in omega")
    return curve


def phase_map(omegas, deltas, cfg: LatticeConfig = LatticeConfig(), n_q: int = DEFAULT_NQ,
              tol: float = DEFAULT_TOL) -> list[list[PhasePoint]]:
    """Rectangular scan, ``result[i][j]`` at ``(omegas[i], deltas[j])``.

    Rows are evaluated concurrently; the output order is fixed by the inputs.
    A broken point followed by an unbroken one along delta0 (omega >= 5) is
    logged as a warning, since monotonicity is observed rather than proven.
    """
    omegas = np.asarray(omegas, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if np.any(omegas <= 0) or np.any(deltas < 0):
        raise ValueError("omega must be positive and delta0 non-negative")

    def row(om):
        return [is_unbroken(om, d, cfg, n_q, tol) for d in deltas]

    with ThreadPoolExecutor(worker_count()) as ex:
        grid = list(ex.map(row, omegas))
    for r in grid:
        if r and r[0].omega >= 5 and reentrant(r):
            log.warning("re-entrant unbroken phase at omega=%g", r[0].omega)
    return grid


def reentrant(row: list[PhasePoint]) -> bool:
    """True if an unbroken point follows a broken one along the row."""
    seen_broken = False
    for p in row:
        if not p.unbroken:
            seen_broken = True
        elif seen_broken:
            return True
    return False


def transition_index(row: list[PhasePoint]) -> int | None:
    """Index of the first broken point in a row, or None."""
    for j, p in enumerate(row):
        if not p.unbroken:
            return j
    return None


def minimum_frequency(cfg: LatticeConfig = LatticeConfig(), search=(1.0, 10.0), tol: float = 1e-3,
                      n_q: int = DEFAULT_NQ, bisect_tol: float = DEFAULT_BISECT_TOL,
                      class_tol: float = DEFAULT_TOL) -> float:
    """Onset frequency of the unbroken phase, by bisection on omega.

    The predicate is "a threshold exists", i.e. ``delta0 = bisect_tol`` is
    unbroken.  The interval must have the predicate false at its lower end and
    true at its upper end.
    """
    lo, hi = map(float, search)

    def has_phase(om):
        return is_unbroken(om, bisect_tol, cfg, n_q, class_tol).unbroken

    if has_phase(lo) or not has_phase(hi):
        raise BracketError(f"[{lo:g}, {hi:g}] does not bracket the unbroken-phase onset")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_phase(mid):
            hi = mid
        else:
            lo = mid
    return hi
