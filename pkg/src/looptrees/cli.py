"""Command-line front end.  Every output starts with the resolved configuration."""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import re
import sys

import numpy as np

from . import bijections as bj
from . import exactasym as ea
from . import laws, metric, report, stable
from . import planetree as pt
from .errors import LooptreeError

FMT = "{:.17g}"


def num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FMT.format(float(x))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _dumps(obj) -> str:
    # repr of a Python float is the shortest string that round-trips
    return json.dumps(_clean(obj), indent=2, sort_keys=True)


def parse_sizes(text: str) -> list[int]:
    m = re.fullmatch(r"\s*2\^(\d+)\s*\.\.\s*2\^(\d+)\s*", text)
    if m:
        return report.powers_of_two(int(m.group(1)), int(m.group(2)))
    return [int(x) for x in text.split(",") if x.strip()]


def _config(args) -> dict:
    # neither thread count nor output location changes results
    return {k: v for k, v in sorted(vars(args).items()) if k not in {"func", "threads", "out"}}


@contextlib.contextmanager
def _sink(args, name: str):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w", encoding="utf-8", newline="\n") as fh:
            yield fh
    else:
        yield sys.stdout


def _header(fh, args) -> None:
    fh.write("# config: " + json.dumps(_clean(_config(args)), sort_keys=True) + "\n")


def _emit_json(args, name: str, payload: dict) -> None:
    with _sink(args, name) as fh:
        fh.write(_dumps({"config": _config(args), **payload}) + "\n")


def _emit_csv(args, name: str, columns, rows, trailer: dict | None = None) -> None:
    if args.format == "json":
        payload = {"columns": list(columns), "rows": [list(r) for r in rows]}
        if trailer is not None:
            payload.update(trailer)
        _emit_json(args, name.rsplit(".", 1)[0] + ".json", payload)
        return
    with _sink(args, name) as fh:
        _header(fh, args)
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(num(x) for x in row) + "\n")
        if trailer is not None and not args.out:
            fh.write("# " + json.dumps(_clean(trailer), sort_keys=True) + "\n")
    if trailer is not None and args.out:
        _emit_json(args, name.rsplit(".", 1)[0] + "_fit.json", trailer)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_laws_dump(args) -> None:
    law = laws.nu_law(args.a) if args.model == "typeI" else laws.nu_bar_law(args.a)
    head = law.head(args.kmax)
    _emit_csv(args, f"laws_{args.model}.csv", ["k", "mass"], ((k, m) for k, m in enumerate(head)))


def cmd_laws_constants(args) -> None:
    c = laws.ModelConstants()
    grid = [round(0.05 * i, 2) for i in range(1, 20) if i != 10]
    payload = {
        "r_c": c.r_c, "gamma": c.gamma, "z_black": c.z_black, "r_c_bar": c.r_c_bar, "z_black_bar": c.z_black_bar,
        "xi": {str(a): laws.xi(a) for a in grid},
        "c_alpha_typeI": {str(a): laws.c_alpha(a) for a in grid},
        "c_half_typeI": laws.critical_scale(laws.SQRT3 / (4.0 * math.sqrt(math.pi))),
        "c_alpha_typeII": {str(a): laws.c_alpha_type2(a) for a in grid if a >= 0.5},
        "c_half_typeII": laws.c_alpha_type2(0.5),
        "lambda": {str(a): laws.lambda_tilt(a) for a in grid if a < 0.5},
    }
    _emit_json(args, "constants.json", payload)


def cmd_bij_loop(args) -> None:
    with open(args.input, encoding="utf-8") as fh:
        trees = list(pt.read_trees(fh))
    with _sink(args, "loops.txt") as out:
        _header(out, args)
        for i, t in enumerate(trees):
            g = bj.loop_bar_of(t) if args.bar else bj.loop_of(t)
            out.write(f"# tree {i} vertices {g.vertex_count} edges {len(g.edges)}\n")
            for a, b in g.edges.tolist():
                out.write(f"{a} {b}\n")
            out.write("\n")


def cmd_scaling(args) -> None:
    sizes = parse_sizes(args.sizes)
    table = report.scaling_table(args.a, sizes, args.samples, args.seed, args.threads)
    rows = ((r["n"], r["mean_diameter"], r["stderr"], r["max_cycle_fraction"]) for r in table["rows"])
    _emit_csv(args, f"scaling_a{args.a}.csv", ["n", "mean_diameter", "stderr", "max_cycle_fraction"], rows,
              {"fit": table["fit"]})


def cmd_stable_density(args) -> None:
    rows = stable.density_table(args.alpha, args.xmax, args.step)
    _emit_csv(args, "stable_density.csv", ["x", "p1_minus_x"], rows)


def cmd_exact_perimeter(args) -> None:
    if args.model == "uipt":
        exponent, stated, derived = ea.UIPT_EXPONENT, ea.UIPT_STATED, ea.UIPT_LIMIT
    else:
        exponent, stated, derived = ea.BOLTZMANN_EXPONENT, ea.BOLTZMANN_CONSTANT, ea.BOLTZMANN_CONSTANT
    ns = list(range(1, args.nmax + 1))
    series = ea.perimeter_series(args.model, ns)
    rows = [(n, p, p * n ** (-exponent)) for n, p in zip(ns, series.values)]
    fit_ns = [n for n in report.powers_of_two(5, 30) if n <= args.nmax]
    trailer = {"target_slope": exponent, "stated_constant": stated, "derived_constant": derived}
    if len(fit_ns) >= 3:
        trailer["fit"] = metric.fit_exponent([(n, series.values[n - 1]) for n in fit_ns]).to_dict()
    _emit_csv(args, f"perimeter_{args.model}.csv", ["n", "pmf", "scaled_pmf"], rows, trailer)


def cmd_exact_llt(args) -> None:
    nu = laws.nu_law()
    rows = []
    for n in parse_sizes(args.n):
        r = ea.llt_error(nu, n)
        rows.append((n, r.a_n, r.error, r.argmax))
    _emit_csv(args, "llt.csv", ["n", "a_n", "sup_error", "argmax"], rows)


def _sample_law(name: str, a: float):
    if name == "nu":
        return report.regime_law(a)
    if name == "nu_bar":
        return laws.nu_bar_tilted_law(a) if a < 0.5 else laws.nu_bar_law(a)
    if name == "mu_black":
        return laws.mu_black_law()
    raise LooptreeError(f"unknown law {name!r}")


def cmd_sample(args) -> None:
    law = _sample_law(args.law, args.a)
    sampler = pt.ConditionedSampler(law, args.n)
    trees = sampler.sample_many(args.count, args.seed)
    with _sink(args, f"trees_{args.law}_n{args.n}.txt") as fh:
        _header(fh, args)
        pt.write_trees(trees, fh)


def cmd_report(args) -> None:
    fn = report.REPORTS[args.name]
    kwargs = {}
    if args.name in {"regimes"}:
        kwargs = {"seed": args.seed, "threads": args.threads}
    elif args.name in {"boundary", "weights"}:
        kwargs = {"seed": args.seed}
    result = fn(**kwargs)
    result.pop("seconds", None)
    _emit_json(args, f"report_{args.name}.json", result)
    if not result.get("pass", True):
        sys.stderr.write(f"report {args.name}: criterion not met\n")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--out", default=None, help="directory for output files (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], default=None)

    p = argparse.ArgumentParser(prog="looptrees", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    lw = sub.add_parser("laws", parents=[common]).add_subparsers(dest="action", required=True)
    d = lw.add_parser("dump", parents=[common])
    d.add_argument("--model", choices=["typeI", "typeII"], default="typeI")
    d.add_argument("--a", type=float, default=0.5)
    d.add_argument("--kmax", type=int, default=100)
    d.set_defaults(func=cmd_laws_dump)
    lw.add_parser("constants", parents=[common]).set_defaults(func=cmd_laws_constants)

    bij = sub.add_parser("bij", parents=[common]).add_subparsers(dest="action", required=True)
    lp = bij.add_parser("loop", parents=[common])
    lp.add_argument("--in", dest="input", required=True)
    lp.add_argument("--bar", action="store_true")
    lp.set_defaults(func=cmd_bij_loop)

    def scaling_args(q):
        q.add_argument("--a", type=float, default=0.5)
        q.add_argument("--sizes", default="2^10..2^14")
        q.add_argument("--samples", type=int, default=200)
        q.set_defaults(func=cmd_scaling)

    me = sub.add_parser("metric", parents=[common]).add_subparsers(dest="action", required=True)
    scaling_args(me.add_parser("scaling", parents=[common]))
    scaling_args(sub.add_parser("scaling", parents=[common]))

    st = sub.add_parser("stable", parents=[common]).add_subparsers(dest="action", required=True)
    dn = st.add_parser("density", parents=[common])
    dn.add_argument("--alpha", type=float, default=1.5)
    dn.add_argument("--xmax", type=float, default=10.0)
    dn.add_argument("--step", type=float, default=0.01)
    dn.set_defaults(func=cmd_stable_density)

    ex = sub.add_parser("exact", parents=[common]).add_subparsers(dest="action", required=True)
    pe = ex.add_parser("perimeter", parents=[common])
    pe.add_argument("--model", choices=["uipt", "boltzmann"], default="uipt")
    pe.add_argument("--nmax", type=int, default=4096)
    pe.set_defaults(func=cmd_exact_perimeter)
    ll = ex.add_parser("llt", parents=[common])
    ll.add_argument("--n", default="100,1000,10000")
    ll.set_defaults(func=cmd_exact_llt)

    sa = sub.add_parser("sample", parents=[common])
    sa.add_argument("--law", choices=["nu", "nu_bar", "mu_black"], default="nu")
    sa.add_argument("--a", type=float, default=0.5)
    sa.add_argument("--n", type=int, required=True)
    sa.add_argument("--count", type=int, default=1)
    sa.set_defaults(func=cmd_sample)

    rp = sub.add_parser("report", parents=[common])
    rp.add_argument("name", choices=sorted(report.REPORTS))
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (LooptreeError, ArithmeticError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
