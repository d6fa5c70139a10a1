"""Command-line interface: ``persmeasure <command> ...``.

Results go to stdout, or to ``--out``.  When ``PERSMEASURE_OUTPUT_DIR`` is
set, relative ``--out`` paths are resolved against it and commands without
``--out`` write ``<command>.<ext>`` there.

Exit status is 0 on success, 1 on usage or input errors and 2 when a solver
fails numerically.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .barycenter import BarycenterProblem, multistart_frechet_mean, solve_barycenter_lp
from .experiments import ExperimentConfig, convergence_experiment
from .io import format_curve_csv, format_measure, format_surface_csv, load_measure
from .representations import RepresentationGrid, SurfaceConfig, betti_curve, persistence_surface, silhouette
from .transport import NumericalFailure, bottleneck_distance, optimal_plan, ot_distance

OUTPUT_DIR_ENV = "PERSMEASURE_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _exponent(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(p) or p < 1:
        raise argparse.ArgumentTypeError("p must be at least 1")
    return p


def _n_values(text: str) -> list:
    """``a:b`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi = (int(s) for s in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b or a comma list, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty range of sample sizes")
    return values


def _num(x) -> str:
    return repr(float(x))


def _emit(args, text: str, default_name: str) -> None:
    base = os.environ.get(OUTPUT_DIR_ENV)
    path = args.out
    if path is None and base:
        path = os.path.join(base, default_name)
    elif path is not None and base and not os.path.isabs(path):
        path = os.path.join(base, path)
    if path is None:
        sys.stdout.write(text)
        return
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _cmd_dist(args) -> None:
    a, b = load_measure(args.a), load_measure(args.b)
    if math.isinf(args.p):
        if args.plan:
            raise UsageError("--plan needs a finite p")
        text = _num(bottleneck_distance(a, b)) + "\n"
    elif args.plan:
        text = optimal_plan(a, b, args.p).to_json() + "\n"
    else:
        text = _num(ot_distance(a, b, args.p)) + "\n"
    _emit(args, text, "dist.txt")


def _cmd_bottleneck(args) -> None:
    a, b = load_measure(args.a), load_measure(args.b)
    _emit(args, _num(bottleneck_distance(a, b)) + "\n", "bottleneck.txt")


def _cmd_barycenter(args) -> None:
    inputs = [load_measure(f) for f in args.input]
    problem = BarycenterProblem(inputs, args.weights, args.p)
    if args.exact:
        lp = solve_barycenter_lp(problem)
        measure, trace = lp.measure, [lp.integer_value]
        info = {"method": "lp", "energy": lp.integer_value, "lp_value": lp.lp_value}
    else:
        state = multistart_frechet_mean(
            problem, n_random=args.random_starts, rng=np.random.default_rng(args.seed), max_iter=args.max_iter
        )
        measure, trace = state.candidate, state.energy_trace
        info = {"method": "alternating", "energy": state.energy, "converged": state.converged}
    info.update({"p": problem.p, "weights": problem.weights.tolist(), "energy_trace": trace})
    text = format_measure(measure) + "# " + json.dumps(info) + "\n"
    _emit(args, text, "barycenter.txt")


def _cmd_surface(args) -> None:
    mu = load_measure(args.file)
    x0, x1, y0, y1 = args.grid
    nx = args.resolution
    ny = args.ny if args.ny is not None else nx
    grid = RepresentationGrid.plane(x0, x1, y0, y1, nx, ny)
    values = persistence_surface(mu, SurfaceConfig(args.sigma, args.p), grid)
    _emit(args, format_surface_csv(values, grid), "surface.csv")


def _line_grid(args) -> RepresentationGrid:
    return RepresentationGrid.line(args.grid[0], args.grid[1], args.samples)


def _cmd_silhouette(args) -> None:
    grid = _line_grid(args)
    _emit(args, format_curve_csv(silhouette(load_measure(args.file), args.p, grid), grid), "silhouette.csv")


def _cmd_betti(args) -> None:
    grid = _line_grid(args)
    _emit(args, format_curve_csv(betti_curve(load_measure(args.file), args.p, args.q, grid), grid), "betti.csv")


PLOT_SCRIPT = """\
import sys

import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt(sys.argv[1] if len(sys.argv) > 1 else {csv!r}, delimiter=",", names=True, comments="#")
plt.fill_between(data["n"], data["p10"], data["p90"], alpha=0.3, label="10-90%")
plt.plot(data["n"], data["median"], label="median")
plt.xlabel("n")
plt.ylabel("OT_p(mu_n, mu)")
plt.legend()
plt.savefig(sys.argv[2] if len(sys.argv) > 2 else "lln.png", dpi=150)
"""


def _cmd_lln(args) -> None:
    cfg = ExperimentConfig(n_values=tuple(args.n), trials=args.trials, p=args.p, m=args.m, seed=args.seed)
    rows = convergence_experiment(cfg)
    lines = ["# " + json.dumps(cfg.to_dict(), sort_keys=True), "n,median,p10,p90"]
    lines += [f"{r.n},{_num(r.median)},{_num(r.p10)},{_num(r.p90)}" for r in rows]
    _emit(args, "\n".join(lines) + "\n", "lln.csv")
    if args.plot_script:
        with open(args.plot_script, "w", encoding="utf-8") as fh:
            fh.write(PLOT_SCRIPT.format(csv=args.out or "lln.csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="persmeasure", description="Optimal partial transport for persistence measures.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    def command(name, help_text, func):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.set_defaults(func=func)
        return sp

    sp = command("dist", "OT_p distance between two measure files", _cmd_dist)
    sp.add_argument("--p", type=_exponent, default=2.0, help="exponent >= 1, or inf for the bottleneck distance")
    sp.add_argument("--plan", action="store_true", help="print an optimal plan as JSON instead")
    sp.add_argument("a")
    sp.add_argument("b")

    sp = command("bottleneck", "bottleneck distance between two diagram files", _cmd_bottleneck)
    sp.add_argument("a")
    sp.add_argument("b")

    sp = command("barycenter", "Frechet mean of several measure files", _cmd_barycenter)
    sp.add_argument("--input", nargs="+", required=True, metavar="FILE")
    sp.add_argument("--weights", nargs="+", type=float, help="one weight per input (default: uniform)")
    sp.add_argument("--p", type=_exponent, default=2.0)
    sp.add_argument("--exact", action="store_true", help="solve the exact LP (small diagram families only)")
    sp.add_argument("--random-starts", type=int, default=1, help="random seeds on top of one start per input")
    sp.add_argument("--max-iter", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)

    sp = command("surface", "persistence surface on a 2D grid (CSV)", _cmd_surface)
    sp.add_argument("--p", type=_exponent, default=1.0)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--grid", nargs=4, type=float, required=True, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    sp.add_argument("--resolution", type=int, default=50, metavar="N", help="nodes per axis")
    sp.add_argument("--ny", type=int, help="nodes along the death axis (default: same as --resolution)")
    sp.add_argument("file")

    for name, help_text, func in (
        ("silhouette", "silhouette on a 1D grid (CSV)", _cmd_silhouette),
        ("betti", "weighted Betti curve on a 1D grid (CSV)", _cmd_betti),
    ):
        sp = command(name, help_text, func)
        sp.add_argument("--p", type=_exponent, default=1.0)
        if name == "betti":
            sp.add_argument("--q", type=_exponent, default=1.0)
        sp.add_argument("--grid", nargs=2, type=float, required=True, metavar=("TMIN", "TMAX"))
        sp.add_argument("--samples", type=int, default=100)
        sp.add_argument("file")

    sp = command("lln", "convergence of rescaled 1D Rips diagrams (CSV)", _cmd_lln)
    sp.add_argument("--n", type=_n_values, default=list(range(2, 51)), help="a:b or a,b,c (default 2:50)")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--p", type=_exponent, default=2.0)
    sp.add_argument("--m", type=int, default=1000, help="atoms in the discretized limit measure")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--plot-script", metavar="PATH", help="also write a matplotlib script for the CSV")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except NumericalFailure as exc:
        print(f"persmeasure: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError, OSError) as exc:
        print(f"persmeasure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
