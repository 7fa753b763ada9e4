"""Command-line entry point: ``ptfloquet <subcommand> ...``.

All quantities are in units of the hopping rate unless ``--kappa`` is given.

Exit codes:
  0  success
  1  other library error
  2  usage error (unknown flag, bad value)
  3  invalid argument rejected by the library
  4  no unbroken PT phase at the requested frequency
  5  search interval does not bracket the transition
  6  numerical divergence (broken phase blow-up)
  7  drive violates the antisymmetry / zero-mean constraint
  8  observable undefined or too few samples for a fit
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

import numpy as np

from . import __version__
from .drive import (DriveWaveform, antisymmetry_residual, check_antisymmetry, check_zero_mean,
                    default_tolerance, phase_integral)
from .dynamics import (ballistic_velocity, effective_hopping, evolve, gaussian_excitation,
                       single_site_excitation)
from .errors import (BracketError, ConstraintViolationError, DivergenceError, FloquetError,
                     InsufficientDataError, NoUnbrokenPhaseError, UndefinedObservableError)
from .floquet import DEFAULT_NQ, DEFAULT_STEPS, LatticeConfig, spectrum
from .phase import DEFAULT_BISECT_TOL, DEFAULT_TOL, minimum_frequency, phase_map, threshold_amplitude

EXIT_CODES = [
    (NoUnbrokenPhaseError, 4),
    (BracketError, 5),
    (DivergenceError, 6),
    (ConstraintViolationError, 7),
    (UndefinedObservableError, 8),
    (InsufficientDataError, 8),
    (FloquetError, 1),
    (ValueError, 3),
]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


@contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def write_table(path, header, rows, meta, out_format="csv"):
    """Write rows with the run metadata embedded (comment lines or a JSON field)."""
    rows = list(rows)
    with _open_out(path) as fh:
        if out_format == "json":
            doc = {"meta": meta, "columns": list(header),
                   "rows": [[_jsonable(v) for v in r] for r in rows]}
            json.dump(doc, fh, indent=1)
            fh.write("\n")
            return
        for k, v in meta.items():
            fh.write(f"# {k}={v}\n")
        fh.write(",".join(str(h) for h in header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(v) for v in r) + "\n")


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if np.isfinite(v) else str(v)


def _meta(args) -> dict:
    d = {"version": __version__}
    for k, v in sorted(vars(args).items()):
        if k not in ("func",):
            d[k] = v
    return d


def _summary(args, line):
    # keep stdout clean when the table itself goes there
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    print(line, file=stream)


def build_waveform(args, cfg: LatticeConfig) -> DriveWaveform:
    spec = args.waveform
    omega = args.omega * cfg.kappa
    re = args.delta0_re
    im = args.delta0_im
    if spec.startswith("file:"):
        amp = complex(1.0 if re is None else re, 0.0 if im is None else im)
        return DriveWaveform.from_file(spec[5:], omega, amp * cfg.kappa, args.theta)
    amp = complex(re or 0.0, im or 0.0) * cfg.kappa
    if spec == "square":
        return DriveWaveform.square(amp, omega, args.theta)
    if spec in ("sin", "sinusoid"):
        return DriveWaveform.sinusoid(amp, omega, args.theta)
    raise ValueError(f"unknown waveform {spec!r}; use square, sin or file:<path>")


def _add_drive_args(p, omega_default=15.0):
    p.add_argument("--waveform", default="square", help="square | sin | file:<path>")
    p.add_argument("--omega", type=float, default=omega_default)
    p.add_argument("--delta0-re", type=float, default=None)
    p.add_argument("--delta0-im", type=float, default=None)
    p.add_argument("--theta", type=float, default=None,
                   help="phase offset; default is the antisymmetric choice for the shape")


def cmd_spectrum(args):
    cfg = LatticeConfig(args.kappa)
    w = build_waveform(args, cfg)
    spec = spectrum(w, cfg, args.nq, args.steps_per_period)
    write_table(args.out, ["q", "E1_re", "E1_im", "E2_re", "E2_im"], spec.rows(), _meta(args), args.format)
    _summary(args, f"bandwidth={spec.bandwidth():.12g} max_imag={spec.max_imag():.6g} path={spec.meta['path']}")


def cmd_phase_diagram(args):
    cfg = LatticeConfig(args.kappa)
    if args.omega_steps < 1 or args.delta_steps < 1:
        raise ValueError("step counts must be positive")
    omegas = np.linspace(args.omega_min, args.omega_max, args.omega_steps)
    deltas = np.linspace(args.delta_min, args.delta_max, args.delta_steps)
    grid = phase_map(omegas, deltas, cfg, args.nq, args.tol)
    rows = [(p.omega, p.delta0, p.unbroken, p.max_imag) for r in grid for p in r]
    write_table(args.out, ["omega", "delta0", "unbroken", "max_imag"], rows, _meta(args), args.format)
    n_unb = sum(r[2] for r in rows)
    _summary(args, f"points={len(rows)} unbroken={n_unb}")


def cmd_threshold(args):
    cfg = LatticeConfig(args.kappa)
    rows = [(om, threshold_amplitude(om, cfg, args.nq, args.bisect_tol, args.tol)) for om in args.omega]
    write_table(args.out, ["omega", "delta0_th"], rows, _meta(args), args.format)
    if args.out not in (None, "-"):
        for om, th in rows:
            print(f"omega={om:g} delta0_th={th:.6f}")


def cmd_min_frequency(args):
    cfg = LatticeConfig(args.kappa)
    om = minimum_frequency(cfg, (args.omega_lo, args.omega_hi), args.bisect_omega, args.nq,
                           args.bisect_tol, args.tol)
    write_table(args.out, ["omega_m"], [(om,)], _meta(args), args.format)
    if args.out not in (None, "-"):
        print(f"omega_m={om:.6f}")


def cmd_evolve(args):
    cfg = LatticeConfig(args.kappa)
    w = build_waveform(args, cfg)
    if args.init == "single":
        s0 = single_site_excitation(args.sites)
    else:
        s0 = gaussian_excitation(args.sites, args.width, args.momentum)
    traj = evolve(s0, w, cfg, args.periods, args.steps_per_period, args.snapshots_every,
                  keep_snapshots=args.dump_field is not None)
    meta = _meta(args)
    if traj.warnings:
        meta["warnings"] = "; ".join(traj.warnings)
    rows = zip(traj.times, traj.norm, traj.mean, traj.sigma)
    write_table(args.out, ["t", "norm", "mean", "sigma"], rows, meta, args.format)
    if args.dump_field is not None:
        write_table(args.dump_field, [int(n) for n in s0.sites], traj.snapshots, meta, args.format)
    line = f"t_end={traj.times[-1]:.6g} norm={traj.norm[-1]:.12g} sigma={traj.sigma[-1]:.12g}"
    try:
        line += f" V={ballistic_velocity(traj).velocity:.6g}"
    except InsufficientDataError:
        pass
    _summary(args, line)


def cmd_hopping(args):
    cfg = LatticeConfig(args.kappa)
    w = build_waveform(args, cfg)
    k = effective_hopping(w, cfg)
    write_table(args.out, ["kappa_eff_re", "kappa_eff_im", "ratio_abs"],
                [(k.real, k.imag, abs(k) / cfg.kappa)], _meta(args), args.format)


def cmd_check_drive(args):
    cfg = LatticeConfig(args.kappa)
    w = build_waveform(args, cfg)
    tol = args.tol if args.tol is not None else default_tolerance(w)
    mean_res = abs(complex(phase_integral(w, w.period)))
    anti_res = antisymmetry_residual(w, args.samples)
    zero_ok = check_zero_mean(w, tol)
    anti_ok = check_antisymmetry(w, args.samples, tol)
    write_table(args.out, ["zero_mean_residual", "zero_mean_ok", "antisymmetry_residual", "antisymmetry_ok"],
                [(mean_res, zero_ok, anti_res, anti_ok)], _meta(args), args.format)
    if not (zero_ok and anti_ok):
        raise ConstraintViolationError("drive constraint check failed")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptfloquet", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kappa", type=float, default=1.0, help="hopping rate (energy unit)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", default="-", help="output path, '-' for stdout")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="quasi-energy bands over the Brillouin zone")
    _add_drive_args(s)
    s.add_argument("--nq", type=int, default=DEFAULT_NQ)
    s.add_argument("--steps-per-period", type=int, default=DEFAULT_STEPS)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("phase-diagram", parents=[common], help="broken/unbroken map in (omega, delta0)")
    s.add_argument("--omega-min", type=float, default=1.0)
    s.add_argument("--omega-max", type=float, default=20.0)
    s.add_argument("--omega-steps", type=int, default=96)
    s.add_argument("--delta-min", type=float, default=0.0)
    s.add_argument("--delta-max", type=float, default=16.0)
    s.add_argument("--delta-steps", type=int, default=81)
    s.add_argument("--nq", type=int, default=DEFAULT_NQ)
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.set_defaults(func=cmd_phase_diagram)

    s = sub.add_parser("threshold", parents=[common], help="symmetry-breaking amplitude at given omega")
    s.add_argument("--omega", type=float, nargs="+", required=True)
    s.add_argument("--nq", type=int, default=DEFAULT_NQ)
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--bisect-tol", type=float, default=DEFAULT_BISECT_TOL)
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("min-frequency", parents=[common], help="onset frequency of the unbroken phase")
    s.add_argument("--omega-lo", type=float, default=1.0)
    s.add_argument("--omega-hi", type=float, default=10.0)
    s.add_argument("--bisect-omega", type=float, default=1e-3)
    s.add_argument("--nq", type=int, default=DEFAULT_NQ)
    s.add_argument("--tol", type=float, default=DEFAULT_TOL)
    s.add_argument("--bisect-tol", type=float, default=DEFAULT_BISECT_TOL)
    s.set_defaults(func=cmd_min_frequency)

    s = sub.add_parser("evolve", parents=[common], help="real-space wavepacket propagation")
    _add_drive_args(s)
    s.add_argument("--sites", type=int, default=201)
    s.add_argument("--init", choices=["single", "gaussian"], default="single")
    s.add_argument("--width", type=float, default=4.0)
    s.add_argument("--momentum", type=float, default=np.pi / 4)
    s.add_argument("--periods", type=int, default=80)
    s.add_argument("--steps-per-period", type=int, default=DEFAULT_STEPS)
    s.add_argument("--snapshots-every", type=int, default=1)
    s.add_argument("--dump-field", default=None, help="write |c_n|^2 per snapshot to this path")
    s.set_defaults(func=cmd_evolve)

    s = sub.add_parser("hopping", parents=[common], help="effective hopping rate of the drive")
    _add_drive_args(s)
    s.set_defaults(func=cmd_hopping)

    s = sub.add_parser("check-drive", parents=[common], help="validate zero mean and antisymmetry")
    _add_drive_args(s)
    s.add_argument("--samples", type=int, default=256)
    s.add_argument("--tol", type=float, default=None)
    s.set_defaults(func=cmd_check_drive)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # mapped to documented exit codes
        for cls, code in EXIT_CODES:
            if isinstance(exc, cls):
                print(f"ptfloquet {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
                return code
        raise
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
