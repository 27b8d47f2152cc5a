"""Command-line interface.

Exit codes: 0 on success, 2 for configuration or input errors, 3 for
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .channels import ChannelRepr
from .errors import NumericalError
from .matrix_io import counts_from_json, counts_to_json, load_matrix, matrix_to_json
from .qubit import DrivenQubitParams, model_liouvillian
from .spectral import classify_modes, eig_general, TYPE_NAMES
from .superop import liouvillian_matrix, propagator
from .sweep import SweepConfig, time_estimate, write_sweep
from .tomography import METHODS, NoiseModel, simulate_records, to_liouvillian, tomogram_from_records
from .uncertainty import FidelityProfile, gamma_error_bars

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _shots(value):
    if value == "exact":
        return None
    n = int(value)
    if n <= 0:
        raise argparse.ArgumentTypeError("shots must be positive or 'exact'")
    return n


def _add_model_args(p, gamma_x=True):
    if gamma_x:
        p.add_argument("--gamma-x", type=float, default=0.0)
    p.add_argument("--gamma-y", type=float, default=2.0)
    p.add_argument("--gamma-minus", type=float, default=0.0)
    p.add_argument("--omega", type=float, default=1.0)


def _params(args):
    return DrivenQubitParams(args.omega, args.gamma_minus, args.gamma_x, args.gamma_y)


def _dt(args):
    return args.dt if args.dt is not None else 1 / (15 * args.omega)


def _emit(obj, path):
    text = json.dumps(obj, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _spectrum_dict(M):
    es = eig_general(M)
    reg = classify_modes(es)
    d = es.to_dict()
    d["regime"] = {"types": [TYPE_NAMES[t] for t in reg.types], "gap": reg.spectral_gap, "label": reg.label}
    return d


def cmd_sweep(args):
    cfg = SweepConfig(
        gamma_x_min=args.gamma_x_min,
        gamma_x_max=args.gamma_x_max,
        points=args.points,
        gamma_y=args.gamma_y,
        gamma_minus=args.gamma_minus,
        omega=args.omega,
        dt=args.dt,
        method=args.method,
        shots=args.shots,
        white_noise=args.white_noise,
        seed=args.seed,
        workers=args.workers,
        gamma_errors=args.gamma_errors,
    )
    rows, report = write_sweep(cfg, args.out, emit_s_matrix=args.emit_s_matrix)
    leps = ", ".join(f"{r['gamma_x']:.6f}" for r in report["leps"]) or "none"
    print(f"wrote {len(rows)} rows to {args.out}; LEPs at gamma_x = {leps}", file=sys.stderr)


def cmd_spectrum(args):
    if args.matrix:
        M = load_matrix(args.matrix)
    else:
        M = liouvillian_matrix(model_liouvillian(_params(args))).matrix
    _emit(_spectrum_dict(M), args.out)


def cmd_qpt_sim(args):
    L = liouvillian_matrix(model_liouvillian(_params(args)))
    dt = _dt(args)
    S = propagator(L, dt, args.mode)
    records = simulate_records(S, NoiseModel(args.white_noise, args.shots, args.seed))
    _emit(counts_to_json(records, dt, args.omega), args.out)


def cmd_reconstruct(args):
    with open(args.counts) as fh:
        records, dt, _ = counts_from_json(json.load(fh))
    tomo = tomogram_from_records(records, args.method, dt)
    L, residual = to_liouvillian(tomo, return_residual=True)
    out = {"method": args.method, "dt": dt, "residual": residual, "liouvillian": matrix_to_json(L.matrix)}
    out["spectrum"] = _spectrum_dict(L.matrix)
    _emit(out, args.out)


def cmd_dilate(args):
    L = liouvillian_matrix(model_liouvillian(_params(args)))
    S = propagator(L, _dt(args), args.mode)
    cr = ChannelRepr.from_superoperator(S, env_dim=args.env_dim, clamp_threshold=args.clamp_threshold)
    _emit(
        {
            "kraus": [matrix_to_json(A) for A in cr.kraus.operators],
            "weights": list(cr.kraus.weights),
            "unitary": matrix_to_json(cr.dilation.matrix),
            "env_dim": cr.dilation.env_dim,
            "cp_deficit": cr.kraus.cp_deficit,
        },
        args.out,
    )


def _read_profile(path):
    g, f = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"gamma_prime", "fidelity"} <= set(reader.fieldnames):
            raise ValueError("profile CSV needs the columns gamma_prime, fidelity")
        for row in reader:
            g.append(float(row["gamma_prime"]))
            f.append(float(row["fidelity"]))
    return FidelityProfile.from_table(g, f)


def cmd_errorbars(args):
    fit = gamma_error_bars(_read_profile(args.profile), args.white_noise, args.dim, args.mode)
    _emit(fit.__dict__, args.out)


def cmd_time_estimate(args):
    print(f"{time_estimate(args.experiments, args.shots, args.shot_time):g}")


def build_parser():
    parser = argparse.ArgumentParser(prog="lepkit", description="Liouvillian exceptional points from simulated tomography")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="tomography sweep along gamma_x, written as CSV")
    p.add_argument("--gamma-x-min", type=float, default=0.0)
    p.add_argument("--gamma-x-max", type=float, default=4.0)
    p.add_argument("--points", type=int, default=30)
    _add_model_args(p, gamma_x=False)
    p.add_argument("--dt", type=float, default=None, help="time step (default 1/(15 omega))")
    p.add_argument("--method", choices=METHODS, default="m1")
    p.add_argument("--shots", type=_shots, default=20000, help="shots per record, or 'exact'")
    p.add_argument("--white-noise", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--gamma-errors", action="store_true", help="fill gamma error columns from the model profile")
    p.add_argument("--emit-s-matrix", action="store_true", help="also write S and L tomograms per point")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="eigen-analysis of the driven qubit or of a matrix JSON file")
    _add_model_args(p)
    p.add_argument("--matrix", help="matrix JSON file (overrides the model)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("qpt-sim", help="simulate tomography counts")
    _add_model_args(p)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--mode", choices=("first_order", "exact"), default="first_order")
    p.add_argument("--shots", type=_shots, default=20000)
    p.add_argument("--white-noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_qpt_sim)

    p = sub.add_parser("reconstruct", help="reconstruct a Liouvillian from a counts file")
    p.add_argument("--counts", required=True)
    p.add_argument("--method", choices=METHODS, default="m1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("dilate", help="Kraus operators and unitary dilation of the short-time map")
    _add_model_args(p)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--mode", choices=("first_order", "exact"), default="exact")
    p.add_argument("--env-dim", type=int, default=None)
    p.add_argument("--clamp-threshold", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("errorbars", help="rate error bars from a fidelity profile CSV")
    p.add_argument("--profile", required=True, help="CSV with columns gamma_prime, fidelity")
    p.add_argument("--white-noise", type=float, default=0.02)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--mode", choices=("symmetric", "asymmetric"), default="symmetric")
    p.add_argument("--out")
    p.set_defaults(func=cmd_errorbars)

    p = sub.add_parser("time-estimate", help="total measurement time")
    p.add_argument("--experiments", type=int, required=True)
    p.add_argument("--shots", type=int, default=20000)
    p.add_argument("--shot-time", type=float, required=True)
    p.set_defaults(func=cmd_time_estimate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
