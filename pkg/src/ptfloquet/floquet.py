"""Bloch-space monodromy matrices and complex quasi-energy bands.

For quasi-momentum q the even/odd sublattice amplitudes (A, B) obey

    d/dt [A, B] = G(t) [A, B],   G = [[Delta(t), i rho], [i conj(rho), -Delta(t)]]

with rho = kappa (1 + exp(iq)).  G is traceless and G**2 = lambda**2 * I with
lambda**2 = Delta**2 - |rho|**2, so over an interval of constant drive

    exp(G tau) = cosh(lambda tau) I + sinh(lambda tau)/lambda G.

Both coefficients are even in lambda and are evaluated as functions of
lambda**2, so the branch of the square root never matters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .drive import DriveWaveform, Shape, evaluate, period_segments
from .errors import DivergenceError

DEFAULT_NQ = 512
DEFAULT_STEPS = 512
_TAYLOR_CUTOFF = 1e-4


@dataclass(frozen=True)
class LatticeConfig:
    kappa: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    def rho(self, q):
        return self.kappa * (1.0 + np.exp(1j * np.asarray(q, dtype=float)))


@dataclass(frozen=True)
class MonodromyMatrix:
    """One-period propagator at quasi-momentum ``q``.

    ``rho``, ``lam2``, ``C`` and ``S_over_lam`` are only populated by the
    analytic square-wave construction.
    """

    q: float
    matrix: np.ndarray
    rho: complex | None = None
    lam2: complex | None = None
    C: complex | None = None
    S_over_lam: complex | None = None

    @property
    def det(self) -> complex:
        m = self.matrix
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def multipliers(self) -> np.ndarray:
        return multipliers(self.matrix)


def cosh_sinhc(lam2, tau):
    """Return ``cosh(lambda tau)`` and ``sinh(lambda tau) / lambda``.

    Both are entire, even functions of lambda; a short Taylor series replaces
    the direct formula where ``|lambda| tau`` is tiny.
    """
    lam2 = np.asarray(lam2, dtype=complex)
    z2 = lam2 * tau * tau
    small = np.abs(z2) < _TAYLOR_CUTOFF**2
    lam = np.sqrt(np.where(small, 1.0, lam2))
    with np.errstate(over="ignore", invalid="ignore"):
        f = np.where(small, 1 + z2 / 2 + z2 * z2 / 24, np.cosh(lam * tau))
        g = np.where(small, tau * (1 + z2 / 6 + z2 * z2 / 120), np.sinh(lam * tau) / lam)
    return f, g


def segment_propagator(q, delta, tau, cfg: LatticeConfig):
    """exp(G tau) for constant drive ``delta``; shape ``q.shape + (2, 2)``."""
    rho = cfg.rho(q)
    delta = complex(delta)
    f, g = cosh_sinhc(delta * delta - np.abs(rho) ** 2, tau)
    out = np.empty(np.shape(rho) + (2, 2), dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        out[..., 0, 0] = f + g * delta
        out[..., 0, 1] = 1j * rho * g
        out[..., 1, 0] = 1j * np.conj(rho) * g
        out[..., 1, 1] = f - g * delta
    return out


def _check_finite(m, what="monodromy"):
    if not np.all(np.isfinite(m)):
        raise DivergenceError(f"non-finite {what} entries (deep broken phase?)")
    return m


def analytic_square_batch(q, w: DriveWaveform, cfg: LatticeConfig):
    """Closed-form M = M2 @ M1 on an array of quasi-momenta.

    M1 propagates the +Delta0 half cycle and M2 the -Delta0 half cycle, so the
    base point is the waveform's ``cycle_start``.
    """
    if w.shape is not Shape.SQUARE:
        raise ValueError(f"analytic monodromy needs a square wave, got {w.shape.value}")
    q = np.asarray(q, dtype=float)
    d0 = w.amplitude
    rho = cfg.rho(q)
    lam2 = d0 * d0 - np.abs(rho) ** 2
    C, g = cosh_sinhc(lam2, w.period / 2)
    with np.errstate(over="ignore", invalid="ignore"):
        M1 = np.empty(q.shape + (2, 2), dtype=complex)
        M1[..., 0, 0] = C + d0 * g
        M1[..., 0, 1] = 1j * rho * g
        M1[..., 1, 0] = 1j * np.conj(rho) * g
        M1[..., 1, 1] = C - d0 * g
        M2 = M1.copy()
        M2[..., 0, 0] = C - d0 * g
        M2[..., 1, 1] = C + d0 * g
        M = _check_finite(M2 @ M1)
    return M, rho, lam2, C, g


def monodromy_analytic_square(q: float, w: DriveWaveform, cfg: LatticeConfig = LatticeConfig()) -> MonodromyMatrix:
    M, rho, lam2, C, g = analytic_square_batch(np.float64(q), w, cfg)
    return MonodromyMatrix(float(q), M, complex(rho), complex(lam2), complex(C), complex(g))


def _exact_batch(q, w: DriveWaveform, cfg: LatticeConfig, t0: float, steps_per_period: int):
    U = np.broadcast_to(np.eye(2, dtype=complex), q.shape + (2, 2)).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        # one closed-form step per grid interval, so steps_per_period keeps its
        # meaning and the result is not bit-identical to the analytic product
        for start, length, n in period_segments(w, t0, steps_per_period):
            delta = evaluate(w, t0 + start + length / 2)
            P = segment_propagator(q, delta, length / n, cfg)
            for _ in range(n):
                U = P @ U
    return _check_finite(U)


def _rk4_batch(q, w: DriveWaveform, cfg: LatticeConfig, t0: float, steps_per_period: int):
    rho = cfg.rho(q)
    off = np.zeros(q.shape + (2, 2), dtype=complex)
    off[..., 0, 1] = 1j * rho
    off[..., 1, 0] = 1j * np.conj(rho)
    sz = np.array([[1.0, 0.0], [0.0, -1.0]])

    def rhs(t, Y):
        return (off + evaluate(w, t) * sz) @ Y

    Y = np.broadcast_to(np.eye(2, dtype=complex), q.shape + (2, 2)).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for start, length, n in period_segments(w, t0, steps_per_period):
            h = length / n
            # Piecewise-constant drives are sampled at the segment midpoint so
            # that stage times on a discontinuity cannot pick the wrong side.
            mid = w.piecewise_constant
            for k in range(n):
                t = t0 + start + k * h
                if mid:
                    tm = t0 + start + length / 2
                    ta = tb = tc = tm
                else:
                    ta, tb, tc = t, t + h / 2, t + h
                k1 = rhs(ta, Y)
                k2 = rhs(tb, Y + (h / 2) * k1)
                k3 = rhs(tb, Y + (h / 2) * k2)
                k4 = rhs(tc, Y + h * k3)
                Y = Y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return _check_finite(Y)


def numeric_batch(q, w: DriveWaveform, cfg: LatticeConfig = LatticeConfig(),
                  steps_per_period: int = DEFAULT_STEPS, t0: float | None = None, method: str = "auto"):
    """Monodromy over ``[t0, t0 + T]`` by direct propagation of identity columns.

    ``method`` is ``"exact"`` (segment exponentials, piecewise-constant drives
    only), ``"rk4"`` (classical fixed step) or ``"auto"``.
    """
    if steps_per_period < 64:
        raise ValueError("steps_per_period must be at least 64")
    q = np.asarray(q, dtype=float)
    if t0 is None:
        t0 = w.cycle_start
    if method == "auto":
        method = "exact" if w.piecewise_constant else "rk4"
    if method == "exact":
        if not w.piecewise_constant:
            raise ValueError("exact propagation needs a piecewise-constant drive")
        return _exact_batch(q, w, cfg, t0, steps_per_period)
    if method == "rk4":
        return _rk4_batch(q, w, cfg, t0, steps_per_period)
    raise ValueError(f"unknown method {method!r}")


def monodromy_numeric(q: float, w: DriveWaveform, cfg: LatticeConfig = LatticeConfig(),
                      steps_per_period: int = DEFAULT_STEPS, t0: float | None = None,
                      method: str = "auto") -> MonodromyMatrix:
    """Numeric monodromy at a single quasi-momentum.

    The default base point ``t0`` is ``w.cycle_start``, which makes the result
    directly comparable with :func:`monodromy_analytic_square`.
    """
    M = numeric_batch(np.float64(q), w, cfg, steps_per_period, t0, method)
    return MonodromyMatrix(float(q), M)


def multipliers(M) -> np.ndarray:
    """Eigenvalues of 2x2 matrices (last two axes) from the characteristic quadratic.

    The discriminant is formed as ((a - d)/2)**2 + b c, which avoids the
    cancellation in tr**2/4 - det when the eigenvalues are close to each other.
    The smaller root comes from det / larger root.
    """
    M = np.asarray(M, dtype=complex)
    a, b, c, d = M[..., 0, 0], M[..., 0, 1], M[..., 1, 0], M[..., 1, 1]
    half_tr = (a + d) / 2
    root = np.sqrt(((a - d) / 2) ** 2 + b * c)
    # pick the sign that avoids cancellation
    root = np.where((half_tr.conjugate() * root).real < 0, -root, root)
    eta1 = half_tr + root
    det = a * d - b * c
    with np.errstate(divide="ignore", invalid="ignore"):
        eta2 = np.where(eta1 != 0, det / eta1, half_tr - root)
    return np.stack([eta1, eta2], axis=-1)


def energies_from_multipliers(eta, T: float):
    """E' + i E'' with E' = arg(eta)/T in (-pi/T, pi/T] and E'' = -log|eta|/T."""
    eta = np.asarray(eta, dtype=complex)
    if np.any(eta == 0):
        raise ArithmeticError("zero Floquet multiplier")
    # +0.0 turns a negative-zero imaginary part into +0 so arg(-1) = +pi
    arg = np.arctan2(eta.imag + 0.0, eta.real)
    return (arg - 1j * np.log(np.abs(eta))) / T


def quasi_energies(M, T: float) -> np.ndarray:
    """Complex quasi-energies ``E' + i E''`` of a monodromy matrix (or a stack).

    Returns an array with a trailing axis of length 2, one entry per band.
    """
    m = M.matrix if isinstance(M, MonodromyMatrix) else M
    if not np.all(np.isfinite(m)):
        raise DivergenceError("non-finite monodromy matrix")
    return energies_from_multipliers(multipliers(m), T)


def q_grid(n_q: int) -> np.ndarray:
    """Uniform grid on [-pi, pi), endpoint excluded."""
    if n_q < 2:
        raise ValueError("n_q must be at least 2")
    return -np.pi + (2 * np.pi / n_q) * np.arange(n_q)


def order_bands(eta: np.ndarray) -> np.ndarray:
    """Reorder multiplier pairs (n_q, 2) so each column is continuous in q.

    Seeds with the first grid point and, step by step, keeps or swaps the pair
    to minimise the distance to the previous point.
    """
    out = eta.copy()
    for k in range(1, len(out)):
        prev = out[k - 1]
        cur = out[k]
        keep = abs(cur[0] - prev[0]) + abs(cur[1] - prev[1])
        swap = abs(cur[1] - prev[0]) + abs(cur[0] - prev[1])
        if swap < keep:
            out[k] = cur[::-1]
    return out


@dataclass(frozen=True)
class QuasiEnergySpectrum:
    q: np.ndarray
    energies: np.ndarray  # (n_q, 2) complex, E' + i E''
    omega: float
    delta0: complex
    kappa: float
    meta: dict = field(default_factory=dict)

    @property
    def real(self) -> np.ndarray:
        return self.energies.real

    @property
    def imag(self) -> np.ndarray:
        return self.energies.imag

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.energies.imag)))

    def upper_band(self) -> np.ndarray:
        """|E'| per grid point; the two bands are mirror images."""
        return np.max(np.abs(self.energies.real), axis=1)

    def bandwidth(self) -> float:
        """Extent of the upper band, max |E'| - min |E'| over the grid."""
        u = self.upper_band()
        return float(u.max() - u.min())

    def rows(self):
        for qi, (e1, e2) in zip(self.q, self.energies):
            yield (qi, e1.real, e1.imag, e2.real, e2.imag)


def spectrum(w: DriveWaveform, cfg: LatticeConfig = LatticeConfig(), n_q: int = DEFAULT_NQ,
             steps_per_period: int = DEFAULT_STEPS) -> QuasiEnergySpectrum:
    """Complex quasi-energy bands on a uniform grid of ``n_q`` quasi-momenta.

    Square waves use the closed-form monodromy; other drives are propagated
    numerically.  Bands are ordered by continuity in q.
    """
    q = q_grid(n_q)
    if w.shape is Shape.SQUARE:
        M = analytic_square_batch(q, w, cfg)[0]
        path = "analytic"
    else:
        M = numeric_batch(q, w, cfg, steps_per_period)
        path = "numeric"
    eta = order_bands(multipliers(M))
    E = energies_from_multipliers(eta, w.period)
    return QuasiEnergySpectrum(q, E, w.omega, w.amplitude, cfg.kappa,
                               {"n_q": n_q, "path": path, "steps_per_period": steps_per_period})
