"""Floquet spectra, PT phase diagram and transport of a lattice with periodic gain/loss drive."""

__version__ = "0.1.0"

from .drive import DriveWaveform, Shape, check_antisymmetry, evaluate, phase_integral
from .dynamics import (LatticeState, Trajectory, ballistic_velocity, effective_hopping, evolve,
                       gaussian_excitation, observables, single_site_excitation)
from .errors import (BracketError, ConstraintViolationError, DivergenceError, FloquetError,
                     InsufficientDataError, NoUnbrokenPhaseError, UndefinedObservableError)
from .floquet import (LatticeConfig, MonodromyMatrix, QuasiEnergySpectrum, monodromy_analytic_square,
                      monodromy_numeric, quasi_energies, spectrum)
from .phase import PhasePoint, ThresholdCurve, is_unbroken, minimum_frequency, phase_map, threshold_amplitude
