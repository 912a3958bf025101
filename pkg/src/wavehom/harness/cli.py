"""Command-line harness.

Subcommands: cell, dispersion, solve-hetero, solve-effective, oracle,
compare, convergence, reproduce.  Exit code 0 on success; failures print a
machine-readable JSON error record to stderr and return 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import bloch_cell, effective_fdm, hetero_fdm, oracle_expansion
from ..config import load_setup
from ..core_types import SimulationConfig
from ..dispersion import DispersionCoefficients, decompose, fit_dispersion
from . import metrics, reproduce as reproduce_mod, snapshots


def _setup(args) -> "RunSetup":  # noqa: F821
    if not args.config:
        raise ValueError("this subcommand needs --config CONFIG.toml")
    setup = load_setup(args.config)
    cfg = setup.config
    overrides = {}
    for name in ("epsilon", "dt", "final_time", "output_every"):
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "dx", None) is not None:
        overrides["dx"] = tuple(args.dx)
    if overrides:
        cfg = SimulationConfig(
            epsilon=overrides.get("epsilon", cfg.epsilon),
            final_time=overrides.get("final_time", cfg.final_time),
            half_widths=cfg.half_widths,
            dx=overrides.get("dx", cfg.dx),
            dt=overrides.get("dt", cfg.dt),
            boundary=cfg.boundary,
            datum=cfg.datum,
            output_every=overrides.get("output_every", cfg.output_every),
        )
    return type(setup)(medium=setup.medium, datum=setup.datum, config=cfg)


def _cmd_cell(args) -> int:
    setup = _setup(args)
    n = setup.medium.dimension
    ks = np.linspace(args.k_min, args.k_max, args.k_count)
    lines = [",".join(f"k{d + 1}" for d in range(n)) + ",mu0"]
    if n == 1:
        grid = ks[:, None]
    else:
        mesh = np.meshgrid(*([ks] * n), indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=-1)
    for k in grid:
        mu = bloch_cell.mu0(setup.medium, k, args.cutoff)
        lines.append(",".join(f"{v:.17g}" for v in k) + f",{mu:.17g}")
    _emit(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_dispersion(args) -> int:
    setup = _setup(args)
    coeffs = fit_dispersion(setup.medium, args.cutoff)
    tensors = decompose(coeffs)
    record = {
        "a_star": coeffs.a_star,
        "alpha": coeffs.alpha,
        "beta": coeffs.beta,
        "dimension": coeffs.dimension,
        "case": tensors.case,
        "e_value": float(tensors.e[0, 0]),
        "f_iiii": float(tensors.f[0, 0, 0, 0]),
        "f_ijij": float(tensors.f[0, 1, 0, 1]) if coeffs.dimension > 1 else 0.0,
    }
    if args.json:
        _emit(args.out, json.dumps(record, indent=2, sort_keys=True) + "\n")
    else:
        lines = [f"a*     = {coeffs.a_star:.6f}",
                 f"alpha  = {coeffs.alpha:.6f}",
                 f"beta   = {coeffs.beta:.6f}",
                 f"case   = {tensors.case}",
                 f"E      = {record['e_value']:.6f} * I",
                 f"F_iiii = {record['f_iiii']:.6f}",
                 f"F_ijij = {record['f_ijij']:.6f}"]
        _emit(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_solve_hetero(args) -> int:
    setup = _setup(args)
    result = hetero_fdm.run(setup.config, setup.medium)
    snapshots.write_run(Path(args.out), result)
    return 0


def _cmd_solve_effective(args) -> int:
    setup = _setup(args)
    if args.a_star is not None:
        coeffs = DispersionCoefficients(
            a_star=args.a_star, alpha=args.alpha or 0.0, beta=args.beta or 0.0,
            dimension=setup.medium.dimension, h_k=0.0)
    else:
        coeffs = fit_dispersion(setup.medium)
    tensors = decompose(coeffs)
    result = effective_fdm.run(setup.config, tensors)
    snapshots.write_run(Path(args.out), result)
    return 0


def _cmd_oracle(args) -> int:
    setup = _setup(args)
    medium, datum, cfg = setup.medium, setup.datum, setup.config
    t = args.time if args.time is not None else cfg.final_time
    if args.mode == "parseval":
        lhs, rhs, gap = oracle_expansion.parseval_check(
            datum, medium, cfg.epsilon, args.bands)
        _emit(args.out, json.dumps({"lhs": lhs, "rhs": rhs, "gap": gap}) + "\n")
        return 0
    if args.mode == "blochcoef":
        value = oracle_expansion.bloch_coefficient(datum, medium, cfg.epsilon, args.k)
        _emit(args.out, json.dumps({"k": args.k, "real": value.real,
                                    "imag": value.imag}) + "\n")
        return 0
    grid = cfg.build_grid()
    if args.mode == "U":
        field = oracle_expansion.evaluate_U(datum, medium, cfg.epsilon, grid, t)
    elif args.mode == "v":
        coeffs = fit_dispersion(medium)
        field = oracle_expansion.evaluate_v(datum, coeffs, cfg.epsilon, grid, t)
    elif args.mode == "band0":
        field = oracle_expansion.band_m0_solution(datum, medium, cfg.epsilon, grid, t)
    else:
        raise ValueError(f"unknown oracle mode {args.mode!r}")
    out = Path(args.out or f"oracle_{args.mode}.csv")
    snapshots.write_snapshot(out, field)
    return 0


def _cmd_compare(args) -> int:
    u = snapshots.read_snapshot(Path(args.u))
    w = snapshots.read_snapshot(Path(args.w))
    report = metrics.error_report(u, w, epsilon=args.epsilon or 0.0,
                                  t=args.time or 0.0)
    _emit(args.out, json.dumps({
        "l2": report.l2, "linf": report.linf, "surrogate": report.surrogate,
        "epsilon": report.epsilon, "time": report.time}, indent=2) + "\n")
    return 0


def _cmd_convergence(args) -> int:
    setup = _setup(args)
    table = metrics.convergence_study(setup.medium, setup.datum, args.eps,
                                      t0=args.t0, workers=args.workers)
    lines = ["epsilon,time,l2_error,status"]
    for row in table.rows:
        lines.append(f"{row.epsilon:.17g},{row.time:.17g},{row.error:.17g},{row.status}")
    lines.append(f"# slope,{table.slope():.6g}")
    _emit(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_reproduce(args) -> int:
    written = reproduce_mod.reproduce(args.figure, args.out, eps_list=args.eps)
    for path in written:
        print(path)
    return 0


def _emit(out: str | None, text: str) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavehom",
        description="Dispersive long-time homogenization toolkit for periodic wave media")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("cell", help="dump mu0 on a k-grid as CSV")
    add_config(p)
    p.add_argument("--k-min", type=float, default=-0.5)
    p.add_argument("--k-max", type=float, default=0.5)
    p.add_argument("--k-count", type=int, default=33)
    p.add_argument("--cutoff", type=int, default=None)
    p.set_defaults(func=_cmd_cell)

    p = sub.add_parser("dispersion", help="extract a*, alpha, beta and the (E, F) split")
    add_config(p)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_dispersion)

    p = sub.add_parser("solve-hetero", help="run the heterogeneous solver")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="hetero_out")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--dx", type=float, nargs="+")
    p.add_argument("--final-time", dest="final_time", type=float)
    p.add_argument("--output-every", dest="output_every", type=int)
    p.set_defaults(func=_cmd_solve_hetero)

    p = sub.add_parser("solve-effective", help="run the dispersive effective solver")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="effective_out")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--dx", type=float, nargs="+")
    p.add_argument("--final-time", dest="final_time", type=float)
    p.add_argument("--output-every", dest="output_every", type=int)
    p.add_argument("--a-star", dest="a_star", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.set_defaults(func=_cmd_solve_effective)

    p = sub.add_parser("oracle", help="evaluate the quadrature oracles")
    p.add_argument("--mode", required=True,
                   choices=["U", "v", "band0", "parseval", "blochcoef"])
    add_config(p)
    p.add_argument("--time", type=float)
    p.add_argument("--bands", type=int, default=3)
    p.add_argument("--k", type=float, default=0.5)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("compare", help="error report between two snapshot CSVs")
    p.add_argument("--u", required=True, help="reference snapshot CSV")
    p.add_argument("--w", required=True, help="snapshot CSV to compare")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--time", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("convergence", help="epsilon-convergence table")
    add_config(p)
    p.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1])
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("reproduce", help="emit the data behind a reference figure")
    p.add_argument("figure", choices=list(reproduce_mod.FIGURE_IDS))
    p.add_argument("--out", default="reproduction")
    p.add_argument("--eps", type=float, nargs="+", default=None)
    p.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except Exception as exc:  # noqa: BLE001  machine-readable failure record
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
