"""Periodic complex on-site drives Delta(t) and their phase integrals.

A drive is real-amplitude for gain/loss (PT) modulation and imaginary-amplitude
for an ordinary (Hermitian) potential modulation.  All waveforms are written in
terms of the phase variable ``x = omega * t + theta``:

* square:     Delta(t) = Delta0 * (+1 if x mod 2pi in [0, pi) else -1)
* sinusoid:   Delta(t) = Delta0 * cos(x)
* sampled:    Delta(t) = Delta0 * s[k],  k = floor(K * (x mod 2pi) / 2pi)

Default phases are chosen so that Phi(t - T/2) = -Phi(t) holds exactly:
theta = pi/2 for the square wave (drive +Delta0 on [-T/4, T/4)) and theta = 0
for the cosine.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi

CLOSED_FORM_TOL = 1e-10
SAMPLED_TOL = 1e-6


class Shape(str, enum.Enum):
    SQUARE = "square"
    SINUSOID = "sin"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class DriveWaveform:
    """Periodic zero-mean drive ``Delta(t)``.

    Parameters
    ----------
    shape : Shape
    amplitude : complex
        Delta0 in units of the hopping rate.
    omega : float
        Angular frequency; the period is ``2 pi / omega``.
    theta : float or None
        Phase offset.  ``None`` selects the antisymmetric default for the shape.
    samples : tuple of complex
        One period of the profile for ``Shape.SAMPLED``, uniformly spaced in
        phase and held constant between samples.
    """

    shape: Shape
    amplitude: complex
    omega: float
    theta: float | None = None
    samples: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.shape is Shape.SAMPLED:
            if len(self.samples) < 2:
                raise ValueError("sampled waveform needs at least 2 samples")
            object.__setattr__(self, "samples", tuple(complex(s) for s in self.samples))
            s = np.asarray(self.samples)
            scale = max(np.abs(s).max(), 1.0)
            if abs(s.mean()) > SAMPLED_TOL * scale:
                raise ValueError(f"sampled waveform has nonzero mean {s.mean():.3g}")

    @classmethod
    def square(cls, amplitude, omega, theta=None):
        return cls(Shape.SQUARE, amplitude, omega, theta)

    @classmethod
    def sinusoid(cls, amplitude, omega, theta=None):
        return cls(Shape.SINUSOID, amplitude, omega, theta)

    @classmethod
    def sampled(cls, samples, omega, amplitude=1.0, theta=None):
        return cls(Shape.SAMPLED, amplitude, omega, theta, tuple(samples))

    @classmethod
    def from_file(cls, path, omega, amplitude=1.0, theta=None):
        """Read a sampled profile: one ``re im`` pair per line."""
        return cls.sampled(load_samples(path), omega, amplitude, theta)

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    @property
    def phase(self) -> float:
        """Resolved phase offset theta."""
        if self.theta is not None:
            return float(self.theta)
        return np.pi / 2 if self.shape is Shape.SQUARE else 0.0

    @property
    def cycle_start(self) -> float:
        """Time at which the phase variable is 0, i.e. ``-theta / omega``.

        For the square wave this is the start of the +Delta0 half cycle.
        """
        return -self.phase / self.omega

    @property
    def piecewise_constant(self) -> bool:
        return self.shape is not Shape.SINUSOID

    @cached_property
    def _samples(self) -> np.ndarray:
        return np.asarray(self.samples, dtype=complex)

    @cached_property
    def _sample_cumsum(self) -> np.ndarray:
        h = TWO_PI / len(self.samples)
        return np.concatenate([[0.0], np.cumsum(self._samples) * h])

    def _phase_breaks(self) -> np.ndarray:
        """Discontinuity locations in the phase variable, within [0, 2pi)."""
        if self.shape is Shape.SQUARE:
            return np.array([0.0, np.pi])
        if self.shape is Shape.SAMPLED:
            return np.arange(len(self.samples)) * (TWO_PI / len(self.samples))
        return np.empty(0)

    def breakpoints(self, t_start: float, t_end: float) -> np.ndarray:
        """Sorted drive discontinuities strictly inside ``(t_start, t_end)``."""
        breaks = self._phase_breaks()
        if breaks.size == 0 or t_end <= t_start:
            return np.empty(0)
        x0 = self.omega * t_start + self.phase
        x1 = self.omega * t_end + self.phase
        m0 = np.floor(x0 / TWO_PI)
        m1 = np.floor(x1 / TWO_PI)
        xs = (np.arange(m0, m1 + 1)[:, None] * TWO_PI + breaks[None, :]).ravel()
        ts = (xs - self.phase) / self.omega
        # Drop points that only differ from the ends by rounding.
        eps = 1e-12 * self.period
        return np.sort(ts[(ts > t_start + eps) & (ts < t_end - eps)])

    def __call__(self, t):
        return evaluate(self, t)


def load_samples(path) -> np.ndarray:
    data = np.loadtxt(Path(path), ndmin=2)
    if data.shape[1] == 1:
        return data[:, 0].astype(complex)
    return data[:, 0] + 1j * data[:, 1]


def _square_antiderivative(x):
    """Antiderivative of square(x) with F(0) = 0; triangular, period 2pi."""
    u = np.mod(x, TWO_PI)
    return np.where(u < np.pi, u, TWO_PI - u)


def _sampled_antiderivative(w: DriveWaveform, x):
    K = len(w.samples)
    h = TWO_PI / K
    m = np.floor(np.asarray(x) / TWO_PI)
    u = np.asarray(x) - m * TWO_PI
    k = np.minimum((u / h).astype(int), K - 1)
    cs = w._sample_cumsum
    return m * cs[-1] + cs[k] + (u - k * h) * w._samples[k]


def evaluate(w: DriveWaveform, t):
    """Drive value Delta(t); accepts scalars or arrays."""
    x = w.omega * np.asarray(t, dtype=float) + w.phase
    if w.shape is Shape.SQUARE:
        val = np.where(np.mod(x, TWO_PI) < np.pi, 1.0, -1.0) * w.amplitude
    elif w.shape is Shape.SINUSOID:
        val = np.cos(x) * w.amplitude
    else:
        K = len(w.samples)
        k = np.minimum((np.mod(x, TWO_PI) * (K / TWO_PI)).astype(int), K - 1)
        val = w._samples[k] * w.amplitude
    return val[()] if np.ndim(val) == 0 else val


def phase_integral(w: DriveWaveform, t):
    """Phi(t) = integral of Delta from 0 to t (exact for every shape)."""
    x = w.omega * np.asarray(t, dtype=float) + w.phase
    x0 = w.phase
    if w.shape is Shape.SQUARE:
        F = _square_antiderivative(x) - _square_antiderivative(x0)
    elif w.shape is Shape.SINUSOID:
        F = np.sin(x) - np.sin(x0)
    else:
        F = _sampled_antiderivative(w, x) - _sampled_antiderivative(w, x0)
    val = F * (w.amplitude / w.omega)
    return val[()] if np.ndim(val) == 0 else val


def mean_value(w: DriveWaveform) -> complex:
    """Period average of Delta(t)."""
    return complex(phase_integral(w, w.period)) / w.period


def default_tolerance(w: DriveWaveform) -> float:
    return SAMPLED_TOL if w.shape is Shape.SAMPLED else CLOSED_FORM_TOL


def antisymmetry_residual(w: DriveWaveform, n_samples: int = 256) -> float:
    """max over a uniform grid on [0, T) of |Phi(t - T/2) + Phi(t)|."""
    t = np.arange(n_samples) * (w.period / n_samples)
    r = phase_integral(w, t - w.period / 2) + phase_integral(w, t)
    return float(np.max(np.abs(r)))


def check_antisymmetry(w: DriveWaveform, n_samples: int = 256, tol: float | None = None) -> bool:
    if n_samples < 16:
        raise ValueError("n_samples must be at least 16")
    if tol is None:
        tol = default_tolerance(w)
    return antisymmetry_residual(w, n_samples) < tol


def check_zero_mean(w: DriveWaveform, tol: float | None = None) -> bool:
    if tol is None:
        tol = default_tolerance(w)
    return abs(phase_integral(w, w.period)) < tol


def period_segments(w: DriveWaveform, t0: float, steps_per_period: int):
    """Split ``[t0, t0 + T]`` at drive discontinuities and share out steps.

    Returns a list of ``(start, length, n_steps)`` with start relative to
    ``t0``.  Every segment gets at least one step, so the total may exceed
    ``steps_per_period`` when the drive has many discontinuities.
    """
    T = w.period
    edges = np.concatenate([[t0], w.breakpoints(t0, t0 + T), [t0 + T]]) - t0
    edges[-1] = T
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(round(steps_per_period * (b - a) / T)))
        out.append((float(a), float(b - a), n))
    return out
