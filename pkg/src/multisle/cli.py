"""Command-line front end.

    multisle params --k 2
    multisle crossing-table --k 1 2 4 --x 0.2 0.5
    multisle simulate --k 2 --m 2 --horizon 1 --out run
    multisle mc --k 1 --m 3 --x 0.3 --samples 2000
    multisle null-check --k 3 --j 1 --kappa 4
    multisle fusion --k 4 --m 4

Exit codes: 0 success, 1 usage, 2 numerical failure, 3 check failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .affine import null_state_residual
from .algebra import enumerate_arch_topologies, enumerate_fusion_paths, kostka, model_params
from .dynamics import extract_traces, simulate
from .experiments import (
    ExperimentConfig,
    bessel_oracle,
    mc_double_arch,
    mc_triple_crossing,
    topology_census,
    z_between,
)
from .partition import PartitionFunction, crossing_probability, triple_blocks
from .special import ConvergenceError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3
NULL_TOL = 1e-10
MAX_UNRESOLVED = 0.02


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, Fraction):
        return fmt(v)
    if isinstance(v, (np.floating, float)):
        return float(f"{float(v):.12g}")
    if isinstance(v, np.integer):
        return int(v)
    return v


class Output:
    """Collects one table and writes it with the effective configuration header."""

    def __init__(self, args, config: dict):
        self.format = args.format
        self.path = args.out
        self.config = config
        self.columns: list[str] = []
        self.rows: list[list] = []
        self.notes: dict = {}

    def table(self, columns, rows):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]

    def render(self) -> str:
        if self.format == "json":
            doc = {
                "config": {k: _jsonable(v) for k, v in self.config.items()},
                "columns": self.columns,
                "rows": [[_jsonable(v) for v in r] for r in self.rows],
                **{k: _jsonable(v) for k, v in self.notes.items()},
            }
            return json.dumps(doc, indent=2) + "\n"
        buf = io.StringIO()
        for key, val in self.config.items():
            buf.write(f"# {key} = {fmt(val) if not isinstance(val, (list, tuple)) else ' '.join(map(fmt, val))}\n")
        for key, val in self.notes.items():
            buf.write(f"# {key}: {fmt(val)}\n")
        cells = [[fmt(v) for v in r] for r in self.rows]
        if self.format == "csv":
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.columns)
            w.writerows(cells)
        else:
            widths = [max(len(c), *(len(r[i]) for r in cells)) if cells else len(c)
                      for i, c in enumerate(self.columns)]
            buf.write("  ".join(c.ljust(w) for c, w in zip(self.columns, widths)).rstrip() + "\n")
            for r in cells:
                buf.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")
        return buf.getvalue()

    def emit(self):
        text = self.render()
        if self.path:
            with open(self.path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_params(args) -> int:
    out = Output(args, {"command": "params", "k": args.k})
    rows = []
    for k in args.k:
        p = model_params(k)
        rows.append(["kappa", k, p.kappa, float(p.kappa)])
        rows.append(["tau", k, p.tau, float(p.tau)])
        rows.append(["c", k, p.central_charge, float(p.central_charge)])
        rows.append(["h_Lambda", k, p.h_fund, float(p.h_fund)])
        channels = [0, 2] if k >= 2 else [0]
        if k >= 2:
            rows.append(["h_2Lambda", k, p.h_adj, float(p.h_adj)])
        for ch in channels:
            delta = p.delta(ch)
            d_eff = 2 * delta + 4 / p.kappa + 1
            rows.append([f"Delta_{ch}", k, delta, float(delta)])
            rows.append([f"d_eff_{ch}", k, d_eff, float(d_eff)])
    out.table(["quantity", "k", "exact", "value"], rows)
    out.emit()
    return EXIT_OK


DEFAULT_GRID = [round(0.05 * i, 2) for i in range(1, 20)]


def cmd_crossing_table(args) -> int:
    xs = args.x or DEFAULT_GRID
    for x in xs:
        if not 0 < x < 1:
            raise UsageError(f"x must lie in (0, 1), got {x}")
    out = Output(args, {"command": "crossing-table", "k": args.k, "x": xs})
    rows = []
    for k in args.k:
        for x in xs:
            z1, z2 = triple_blocks(k, x)
            p1, p2 = crossing_probability(k, x)
            rows.append([k, x, p1, p2, z1, z2])
    out.table(["k", "x", "P_C1", "P_C2", "Z_C1", "Z_C2"], rows)
    out.emit()
    return EXIT_OK


def _positions(m: int, x: float | None) -> list[float]:
    if m == 1:
        return [0.0]
    if m == 2:
        return [0.0, 1.0]
    if m == 3:
        x = 0.5 if x is None else x
        if not 0 < x < 1:
            raise UsageError("x must lie in (0, 1)")
        return [0.0, x, 1.0]
    return [float(i) for i in range(m)]


def _partition(k: int, m: int, channel: int):
    if m == 1:
        return None
    if m == 2:
        return PartitionFunction.double(k, channel)
    if m == 3:
        return PartitionFunction.triple(k)
    return PartitionFunction.factorized(k)


def _rates(args, m):
    if args.rates is None:
        return None
    if len(args.rates) != m:
        raise UsageError(f"--rates needs {m} values")
    return tuple(args.rates)


def cmd_simulate(args) -> int:
    k, m = args.k[0], args.m
    pos = _positions(m, args.x)
    rates = _rates(args, m)
    pf = _partition(k, m, args.channel)
    config = {
        "command": "simulate", "k": k, "m": m, "positions": pos, "channel": args.channel,
        "dt": args.dt, "horizon": args.horizon, "seed": args.seed, "sample": args.sample,
        "delta_collide": args.delta_collide if args.delta_collide else 1e-4 * (pos[-1] - pos[0] or 1),
        "rates": list(rates) if rates else [1 / m] * m, "noise": not args.zero_noise,
        "eps": args.eps, "stride": args.stride,
    }
    hist = simulate(
        pf, pos, dt=args.dt, horizon=args.horizon, seed=args.seed, sample=args.sample,
        rates=rates, delta_collide=config["delta_collide"], model=k, noise=not args.zero_noise,
    )
    traces = extract_traces(hist, eps=args.eps, stride=args.stride)
    out = Output(args, config)
    out.notes["topology"] = hist.topology().label()
    out.notes["arches"] = json.dumps([{"t": float(f"{t:.12g}"), "pair": [i + 1, j + 1]}
                                      for t, (i, j) in hist.events])
    out.table(["driver", "t", "re", "im"], [[a + 1, t, re, im] for a, t, re, im in traces.records()])
    out.emit()
    return EXIT_OK


def cmd_mc(args) -> int:
    k, m = args.k[0], args.m
    if m < 2 or (m > 3 and not args.census):
        raise UsageError("estimates need --m 2 or --m 3; larger m only with --census")
    pos = _positions(m, args.x)
    horizon = args.horizon if args.horizon is not None else (50.0 if m == 2 else 1e4)
    kind = {2: "double", 3: "triple"}.get(m, "factorized")
    cfg = ExperimentConfig(
        k=k, positions=tuple(pos), kind=kind, channel=args.channel,
        dt=args.dt, horizon=horizon, samples=args.samples, delta_collide=args.delta_collide,
        rates=_rates(args, m), seed=args.seed, dt_scale=(m == 3 and not args.fixed_step),
    )
    config = {"command": "mc", **cfg.effective(), "workers": args.workers, "digest": cfg.digest()}
    out = Output(args, config)
    status = EXIT_OK
    if args.census:
        census = topology_census(cfg, args.workers)
        n = sum(census.values())
        out.table(["topology", "count", "fraction"],
                  [[t.label(), c, c / n] for t, c in sorted(census.items())])
        out.emit()
        return status
    if m == 2:
        est = mc_double_arch(cfg, args.workers)
        ref = bessel_oracle(cfg)
        rec = est.record()
        rec["reference"] = ref.estimate
        rec["z"] = z_between(est, ref)
    else:
        est = mc_triple_crossing(cfg, args.workers)
        rec = est.record()
        if est.unresolved_fraction > MAX_UNRESOLVED:
            out.notes["warning"] = f"unresolved fraction {est.unresolved_fraction:.4g} exceeds {MAX_UNRESOLVED}"
            status = EXIT_CHECK
    out.table(list(rec), [list(rec.values())])
    out.emit()
    return status


def cmd_null_check(args) -> int:
    k = args.k[0]
    if args.j > k:
        raise UsageError(f"j={args.j} exceeds the level k={k}")
    p = model_params(k)
    kappa = Fraction(args.kappa).limit_denominator() if args.kappa is not None else p.kappa
    tau = Fraction(args.tau).limit_denominator() if args.tau is not None else p.tau
    r1, r2 = null_state_residual(k, args.j, kappa, tau)
    ok = r1 < NULL_TOL and r2 < NULL_TOL
    out = Output(args, {"command": "null-check", "k": k, "j": args.j, "kappa": kappa, "tau": tau,
                        "tolerance": NULL_TOL})
    out.table(["k", "j", "kappa", "tau", "r1", "r2", "null"], [[k, args.j, kappa, tau, r1, r2, ok]])
    out.emit()
    return EXIT_OK if ok else EXIT_CHECK


def cmd_fusion(args) -> int:
    k, m = args.k[0], args.m
    if m < 1:
        raise UsageError("m must be positive")
    if args.n is not None and not 0 <= args.n <= m // 2:
        raise UsageError(f"n must lie in 0..{m // 2}")
    config = {"command": "fusion", "k": k, "m": m}
    if args.n is not None:
        config["n"] = args.n
    out = Output(args, config)
    rows = []
    for j in range(m % 2, m + 1, 2):
        n = (m - j) // 2
        if args.n is not None and n != args.n:
            continue
        topo = len(enumerate_arch_topologies(m, n))
        if j > k:
            rows.append([j, n, 0, kostka(m, n), topo, "-"])
            continue
        paths = enumerate_fusion_paths(k, m, j)
        listing = " ".join("".join(map(str, p.labels)) for p in paths)
        rows.append([j, n, len(paths), kostka(m, n), topo, listing or "-"])
    out.table(["j_final", "arches", "paths", "kostka", "topologies", "labels"], rows)
    out.emit()
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, k_many: bool = False):
    p.add_argument("--k", type=int, nargs="+" if k_many else 1, required=True, help="WZW level(s)")
    p.add_argument("--format", choices=["csv", "json", "pretty"], default="pretty")
    p.add_argument("--out", default=None, help="write to this file instead of stdout")


def _dynamics_flags(p: argparse.ArgumentParser, horizon_default):
    p.add_argument("--x", type=float, default=None, help="middle seed for m=3 (cross-ratio)")
    p.add_argument("--channel", type=int, choices=[0, 2], default=0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=horizon_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-collide", type=float, default=None)
    p.add_argument("--rates", type=float, nargs="+", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="multisle", description="Multiple SLE from su(2)_k WZW boundary fields.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("params", help="kappa, tau, c, weights and d_eff per level")
    _common(p, k_many=True)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("crossing-table", help="exact three-curve crossing probabilities")
    _common(p, k_many=True)
    p.add_argument("--x", type=float, nargs="+", default=None)
    p.set_defaults(func=cmd_crossing_table)

    p = sub.add_parser("simulate", help="one seeded realisation: traces and arch events")
    _common(p)
    p.add_argument("--m", type=int, default=1)
    _dynamics_flags(p, 1.0)
    p.add_argument("--sample", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--zero-noise", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc", help="Monte Carlo arch and crossing estimates")
    _common(p)
    p.add_argument("--m", type=int, default=3)
    _dynamics_flags(p, None)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--census", action="store_true", help="report the topology census instead")
    p.add_argument("--fixed-step", action="store_true", help="disable scale-adapted steps for m=3")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("null-check", help="level-2 null-vector residuals")
    _common(p)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.set_defaults(func=cmd_null_check)

    p = sub.add_parser("fusion", help="fusion paths and arch-topology counts")
    _common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, default=None, help="only the row with this many arches")
    p.set_defaults(func=cmd_fusion)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        for name in ("m", "samples", "workers", "stride"):
            if getattr(args, name, 1) is not None and getattr(args, name, 1) < 1:
                raise UsageError(f"--{name} must be positive")
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"multisle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ConvergenceError) as exc:
        print(f"multisle: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
