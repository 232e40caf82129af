"""Command line front end: ``outdyn SUBCOMMAND MAP [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import CapExhausted, DomainError, ParseFailure, StructuralError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_CAP, EXIT_USAGE = 0, 2, 3, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else x.numerator
    if isinstance(x, (set, frozenset, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, list):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if hasattr(x, "item"):
        return x.item()
    return x


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")


def _require_eg(f) -> None:
    if not f.is_exponentially_growing():
        raise DomainError(f"map {f.name!r} has no exponentially growing stratum; "
                          "this subcommand needs an exponentially growing map")


def strata_report(f) -> dict:
    G = f.graph
    rows = []
    for s in f.strata:
        rows.append({"height": s.index, "edges": [G.names[e] for e in s.edges], "kind": s.kind,
                     "matrix": s.matrix, "lambda": round(s.pf["lambda"], 12) if s.pf else None})
    return {"map": f.name, "strata": rows}


def gpg_report(f) -> dict:
    from .lengths import constants
    from .nielsen import pg_structure
    G = f.graph
    pgs = pg_structure(f)
    out = {"map": f.name, "gpg_edges": sorted(G.names[e] for e in pgs.gpg_edges),
           "zero_edges": sorted(G.names[e] for e in pgs.zero_edges),
           "npg": [G.format(q) for q in pgs.npg],
           "poly_system": [[G.format_basis(w) for w in c.generators] for c in pgs.poly_system.components]}
    if f.is_exponentially_growing():
        c = constants(f)
        out["constants"] = {"K": c.K, "C": c.C, "C_f": c.C_f, "C_f_empirical": c.C_f_empirical, "N3K": c.N3K}
    return out


def inps_report(f) -> dict:
    from .nielsen import find_inps
    G = f.graph
    res = find_inps(f)
    recs = [{"path": G.format(r.path), "height": r.height, "kind": r.kind, "closed": r.closed,
             "period": r.period, "inverted": r.inverted} for r in res.records]
    return {"map": f.name, "inps": recs, "undecided": [G.format(p) if isinstance(p, tuple) else str(p)
                                                         for p in res.undecided],
            "exhaustive_up_to": res.exhaustive_up_to}


def full_report(f) -> dict:
    doc = strata_report(f)
    doc.update(gpg_report(f))
    doc.update({"inps": inps_report(f)["inps"], "validation": f.validate_structure()})
    return doc


def _seed_circuits(f, k, seed):
    from .dynamics import random_seeds
    return random_seeds(f, k, seed=seed)


def main(argv=None) -> int:
    p = _Parser(prog="outdyn", description="Train track maps, Nielsen paths, currents and dynamics.")
    p.add_argument("--seed", type=int, default=0, help="PRNG seed (always echoed)")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def with_map(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("map", help="map JSON file (or a bundled corpus name such as fib)")
        return sp

    with_map("strata", "filtration, strata kinds and PF eigenvalues")
    with_map("gpg", "polynomial subgraph, Nielsen families and constants")
    with_map("inps", "indivisible Nielsen paths")
    with_map("report", "everything above plus structure validation")
    sp = with_map("classify", "polynomial or exponential growth of a conjugacy class")
    sp.add_argument("--word", required=True, help="basis word, e.g. aba-b-")
    sp = with_map("current", "functionals of a rational current")
    sp.add_argument("--word", required=True)
    sp.add_argument("--window", type=int, default=3)
    sp = sub.add_parser("subst", help="limit frequencies of a substitution")
    sp.add_argument("file")
    sp.add_argument("--letter", default=None)
    sp.add_argument("--length", type=int, default=2, help="longest word length reported")
    sp = with_map("ns", "North-South convergence experiment")
    sp.add_argument("--inverse", required=True)
    sp.add_argument("--seeds", type=int, default=20)
    sp.add_argument("--iters", type=int, default=30)
    sp.add_argument("--window", type=int, default=3)
    sp.add_argument("--eps", type=float, default=1e-2)
    sp.add_argument("--csv", default=None, help="trace CSV path (default: stdout)")
    sp = with_map("growth-audit", "F-norm growth under the 3K-expanding power")
    sp.add_argument("--seeds", type=int, default=10)
    sp.add_argument("--iters", type=int, default=3)
    sp.add_argument("--burn-in", type=int, default=1)
    sp.add_argument("--delta", type=float, default=0.5)

    args = p.parse_args(argv)
    print(f"# seed={args.seed}", file=sys.stderr)
    try:
        return _run(args)
    except CapExhausted as exc:
        print(f"outdyn: cap exhausted: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValidationError, StructuralError, DomainError, ParseFailure) as exc:
        print(f"outdyn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"outdyn: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def _run(args) -> int:
    from .io import export_traces, load_graph_map, load_substitution, threads_from_env

    if args.cmd == "subst":
        from .substitution import limit_frequency
        sys_ = load_substitution(args.file)
        a = args.letter or sys_.alphabet[0]
        words = [(x,) for x in sys_.alphabet]
        if args.length >= 2:
            words += [(x, y) for x in sys_.alphabet for y in sys_.alphabet]
        rows = []
        for w in words:
            est = limit_frequency(sys_, a, w)
            rows.append({"word": "".join(w), "limit": est.value, "tolerance": est.tolerance,
                         "zero_flag": est.zero})
        _emit({"letter": a, "blocks": sys_.blocks, "frequencies": rows})
        return EXIT_OK

    f = load_graph_map(args.map)
    G = f.graph
    if args.cmd == "strata":
        _emit(strata_report(f))
    elif args.cmd == "gpg":
        _emit(gpg_report(f))
    elif args.cmd == "inps":
        _emit(inps_report(f))
    elif args.cmd == "report":
        _emit(full_report(f))
    elif args.cmd == "classify":
        from .nielsen import classify_growth
        c = G.circuit_of_word(G.parse_basis(args.word))
        r = classify_growth(f, c)
        dec = [[k, G.format(q)] for k, q in r.decomposition] if r.decomposition else None
        _emit({"word": args.word, "circuit": G.format(c.edges), "growth": r.kind, "decomposition": dec})
    elif args.cmd == "current":
        from .currents import current_functionals, in_kpg, rational_current
        from .lengths import lengths
        c = G.circuit_of_word(G.parse_basis(args.word))
        mu = rational_current(f, c, args.window)
        fn = current_functionals(f, mu)
        _emit({"word": args.word, "window": mu.window_len, "functionals": fn, "in_kpg": in_kpg(f, mu),
               "lengths": lengths(f, c)})
    elif args.cmd == "ns":
        from .dynamics import ns_experiment
        _require_eg(f)
        finv = load_graph_map(args.inverse)
        seeds = _seed_circuits(f, args.seeds, args.seed)
        traces = ns_experiment(f, finv, seeds, nmax=args.iters, window=args.window, eps=args.eps,
                               threads=threads_from_env())
        summary = {"seed": args.seed, "seeds": len(seeds),
                   "success_plus": sum(t.success_plus is not None for t in traces),
                   "success_minus": sum(t.success_minus is not None for t in traces),
                   "skipped": [[t.seed, t.skipped] for t in traces if t.skipped]}
        if args.csv:
            export_traces(traces, args.csv)
            _emit(summary)
        else:
            export_traces(traces, sys.stdout)
            print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    elif args.cmd == "growth-audit":
        from .dynamics import norm_growth_experiment
        _require_eg(f)
        seeds = _seed_circuits(f, args.seeds, args.seed)
        table = norm_growth_experiment(f, seeds, args.iters, args.burn_in, args.delta)
        _emit({"seed": args.seed, "table": table,
               "audit": all(e["audit"] for e in table if e["eligible"])})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
