"""Command-line front end: check, solve, bench, oracle, abstract."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from rpgcache import benchmarks
from rpgcache.abstraction import AbstractionTooLarge, AlphaMap, abstract_rpg
from rpgcache.caching import dump_cache, load_cache
from rpgcache.generate import dump_proposals
from rpgcache.logic import terms as T
from rpgcache.logic.backend import Backend, BackendError
from rpgcache.logic.sexpr import ParseError
from rpgcache.objective import SYS, UnsupportedObjective
from rpgcache.oracle import (
    EnumerationTooLarge,
    check_cache_entry,
    enumerate_template_soundness,
    env_part,
    explicit_solve,
    sample_phis,
)
from rpgcache.pipeline import (
    EXIT_BACKEND,
    EXIT_INCONCLUSIVE,
    EXIT_INVALID,
    EXIT_OK,
    MODES,
    PipelineConfig,
    run,
    verdict_json,
)
from rpgcache.rpg import RangeExplosion, finitize_semantics, parse_game, validate
from rpgcache.symbolic import Engine, IterationLimit
from rpgcache.templates import solve_abstract

log = logging.getLogger("rpgcache")


def _read_game(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse_game(text)


def _backend(args, theory: str) -> Backend:
    return Backend(args.solver_cmd, theory=theory, timeout=args.timeout)


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _emit(path: str | None, text: str):
    if path:
        Path(path).write_text(text)
        log.info("wrote %s", path)


def cmd_check(args) -> int:
    g, obj = _read_game(args.file)
    with _backend(args, g.theory) as b:
        report = validate(g, b)
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        for line in report.failures():
            print(line)
        print("ok" if report.ok else "invalid")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_solve(args) -> int:
    g, obj = _read_game(args.file)
    with _backend(args, g.theory) as b:
        report = validate(g, b)
        if not report.ok:
            for line in report.failures():
                print(line, file=sys.stderr)
            return EXIT_INVALID
        preloaded = load_cache(g, Path(args.load_cache).read_text()) if args.load_cache else []
        cfg = PipelineConfig(
            mode=args.mode, b=args.b, accel=args.accel, max_iters=args.max_iters,
            outer_max_iters=args.outer_max_iters, max_atoms=args.max_atoms, preloaded=preloaded,
        )
        try:
            res = run(g, obj, b, cfg)
        except IterationLimit as exc:
            out = {"status": "inconclusive", "reason": str(exc), "last_iterate": exc.region.to_json()}
            print(json.dumps(out, indent=2) if args.json else f"IterationLimit: {exc}")
            return EXIT_INCONCLUSIVE
        verdict = verdict_json(g, res.winning, b)
        _emit(args.emit_cache, dump_cache(res.entries))
        _emit(args.emit_proposals, dump_proposals(res.proposals))
        if args.emit_dot:
            for ag in res.abstract:
                _emit(f"{args.emit_dot}.{ag.direction}.dot", ag.to_dot())
    stats = res.stats_json(args.mode)
    if args.json:
        print(json.dumps({**verdict, "stats": stats}, indent=2))
    else:
        for l, f in verdict["winning"].items():
            print(f"{l}: {f}")
        print(f"realizable from: {', '.join(verdict['realizable_from']) or '(none)'}")
        print(f"cpre calls: {stats['cpre_calls']}, iterations: {stats['iterations']}, "
              f"cache hits: {len(stats['cache_hits'])}, time: {stats['seconds']}s")
    return EXIT_OK


def cmd_bench(args) -> int:
    text = benchmarks.benchmark_text(args.family, args.k)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def parse_range(text: str):
    """``lo..hi`` or ``lo..hi:step`` (step for real variables)."""
    body, _, step = text.partition(":")
    lo, sep, hi = body.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError(f"bad range {text!r}, expected lo..hi")
    if step:
        lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
        out, x = [], lo
        while x <= hi:
            out.append(x)
            x += step
        return out
    return list(range(int(lo), int(hi) + 1))


def _ranges(g, args) -> dict:
    ranges = {}
    default = parse_range(args.default_range)
    for v in g.variables + g.inputs:
        vals = default
        if v.sort is T.Sort.REAL:
            vals = [Fraction(x) for x in vals]
        ranges[v.val] = vals
    for item in args.range or []:
        name, _, spec = item.partition("=")
        if name not in ranges:
            raise SystemExit(f"unknown variable {name!r} in --range")
        ranges[name] = parse_range(spec)
    return ranges


def cmd_oracle(args) -> int:
    g, obj = _read_game(args.file)
    try:
        eg = finitize_semantics(g, _ranges(g, args))
    except RangeExplosion as exc:
        print(json.dumps({"error": str(exc)}))
        return EXIT_INVALID
    w_sys, w_env = explicit_solve(eg.graph, eg.graph.lift_objective(obj))
    report = {
        "states": eg.graph.n,
        "env_states": eg.n_env,
        "closed": eg.closed,
        "dropped_edges": eg.dropped_edges,
        "winning_env_states": len(env_part(eg, w_sys)),
    }
    ok = True
    with _backend(args, g.theory) as b:
        if args.compare:
            try:
                w = Engine(g, b).solve(obj)
                report["symbolic_agrees"] = eg.denotation(w) == env_part(eg, w_sys)
                ok &= report["symbolic_agrees"]
            except IterationLimit as exc:
                report["symbolic_agrees"] = None
                report["symbolic_error"] = str(exc)
        if args.check_cache:
            entries = load_cache(g, Path(args.check_cache).read_text())
            lo, hi = min(parse_range(args.default_range)), max(parse_range(args.default_range))
            checks = [check_cache_entry(e, eg, sample_phis(e.x_ind, lo, hi)).to_json() for e in entries]
            report["cache"] = checks
            ok &= all(c["ok"] for c in checks)
        if args.check_templates:
            report["templates"] = []
            try:
                for ag in abstract_rpg(g, b, max_atoms=args.max_atoms):
                    fobj = ag.graph.lift_objective(obj)
                    for p in (SYS, SYS.opponent):
                        try:
                            t = solve_abstract(ag.graph, fobj, p)
                            rep = enumerate_template_soundness(ag.graph, fobj, t, t.winning)
                        except (UnsupportedObjective, EnumerationTooLarge) as exc:
                            report["templates"].append({"game": ag.direction, "player": p.value, "skipped": str(exc)})
                            continue
                        report["templates"].append({
                            "game": ag.direction, "player": p.value, "ok": rep.ok,
                            "strategies": rep.strategies, "satisfying": rep.satisfying, "vacuous": rep.vacuous,
                        })
                        ok &= rep.ok
            except AbstractionTooLarge as exc:
                report["templates"].append({"skipped": str(exc)})
    report["ok"] = ok
    print(json.dumps(report, indent=2))
    return EXIT_OK if ok else 1


def cmd_abstract(args) -> int:
    g, obj = _read_game(args.file)
    with _backend(args, g.theory) as b:
        games = abstract_rpg(g, b, max_atoms=args.max_atoms)
    summary = []
    for ag in games:
        graph = ag.graph
        summary.append({
            "direction": ag.direction,
            "env_vertices": len(graph.vertices(SYS.opponent)),
            "sys_vertices": len(graph.vertices(SYS)),
            "edges": sum(len(s) for s in graph.succ),
            "must_edges": len(ag.must),
        })
        if args.emit_dot:
            _emit(f"{args.emit_dot}.{ag.direction}.dot", ag.to_dot())
    print(json.dumps({"atoms": len(games[0].domain.atoms), "games": summary}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpgcache", description="Solve reactive program games.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--solver-cmd", default=None, help="SMT solver command line (default: $RPG_SOLVER_CMD or 'z3 -in')")
        p.add_argument("--timeout", type=float, default=20.0, help="seconds per solver query")
        p.add_argument("--json", action="store_true")

    p = sub.add_parser("check", help="parse and validate a game file")
    p.add_argument("file")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="compute the system's winning region")
    p.add_argument("file")
    common(p)
    p.add_argument("--mode", choices=MODES, default="cache")
    p.add_argument("--accel", type=_on_off, default=True, metavar="{on,off}")
    p.add_argument("--b", type=int, default=0, help="max sub-game size, 0 for unbounded")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--outer-max-iters", type=int, default=100)
    p.add_argument("--max-atoms", type=int, default=12)
    p.add_argument("--emit-cache")
    p.add_argument("--load-cache")
    p.add_argument("--emit-dot", help="path prefix for abstract game DOT files")
    p.add_argument("--emit-proposals")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="print a benchmark game")
    p.add_argument("family", choices=benchmarks.FAMILIES)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="ground-truth checks on a finitization")
    p.add_argument("file")
    common(p)
    p.add_argument("--range", action="append", metavar="VAR=LO..HI[:STEP]")
    p.add_argument("--default-range", default="-3..3")
    p.add_argument("--compare", action="store_true", help="compare with the symbolic solver")
    p.add_argument("--check-cache", metavar="PATH")
    p.add_argument("--check-templates", action="store_true")
    p.add_argument("--max-atoms", type=int, default=12)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("abstract", help="build the abstract games")
    p.add_argument("file")
    common(p)
    p.add_argument("--max-atoms", type=int, default=12)
    p.add_argument("--emit-dot", help="path prefix for DOT files")
    p.set_defaults(func=cmd_abstract)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, T.SortError, UnsupportedObjective) as exc:
        print(f"invalid game: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BackendError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except FileNotFoundError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
