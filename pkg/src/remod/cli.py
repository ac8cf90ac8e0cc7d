"""Command-line entry point: ``remod <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .buildcost import BuildCostModel, fit_build_cost_model
from .errors import ParseError, RemodError
from .ingest import (
    PlantedSpec,
    dump_history,
    dump_snapshot,
    generate_planted,
    load_history,
    load_snapshot,
    load_timings,
    read_source,
    scramble,
)
from .metrics import PRESETS, Evaluator
from .model import Move, New, Solution, apply_solution, normalize_solution
from .search import (
    SearchConfig,
    default_workers,
    dump_front,
    dump_log,
    evolve,
    has_module_cycle,
    load_front,
    parse_solution_doc,
)
from .suggest import filter_suggestions, group_by_module, render_report

log = logging.getLogger("remod")


class UsageError(Exception):
    pass


# -- helpers ---------------------------------------------------------------------


def parse_moves(text: str, snapshot=None) -> Solution:
    """Parse ``class:target,...``; ``NEW`` makes a fresh module, ``NEW#n`` names one."""
    items = [tok.strip() for tok in text.split(",")]
    parsed = []
    for tok in items:
        cls, sep, target = tok.rpartition(":")
        cls, target = cls.strip(), target.strip()
        if not sep or not cls or not target:
            raise ParseError(f"bad move {tok!r}; expected class:target")
        if target == "NEW":
            parsed.append((cls, None))
        elif target.startswith("NEW#"):
            try:
                tag = int(target[4:])
            except ValueError:
                raise ParseError(f"bad new-module tag in {tok!r}") from None
            if tag < 0:
                raise ParseError(f"bad new-module tag in {tok!r}")
            parsed.append((cls, New(tag)))
        else:
            parsed.append((cls, target))
    explicit = [t.tag for _, t in parsed if isinstance(t, New)]
    fresh = max(explicit, default=-1) + 1
    moves = []
    for cls, target in parsed:
        if target is None:
            target, fresh = New(fresh), fresh + 1
        moves.append(Move(cls, target))
    return normalize_solution(moves, snapshot)


def _read_text(path) -> str:
    return read_source(path).decode("utf-8")


def _write_atomic(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _check_inputs(*paths):
    for p in paths:
        if p is not None and p != "-" and not Path(p).is_file():
            raise RemodError(f"input file not found: {p}")


def _load_inputs(args):
    _check_inputs(args.snapshot, getattr(args, "history", None), getattr(args, "model", None))
    snapshot = load_snapshot(read_source(args.snapshot))
    if getattr(args, "history", None):
        loaded = load_history(read_source(args.history), snapshot)
        snapshot = snapshot.with_history(loaded.commits)
    model = BuildCostModel()
    if getattr(args, "model", None):
        model = BuildCostModel.from_json(_read_text(args.model))
    return snapshot, model


def _int_range(text: str) -> tuple:
    lo, sep, hi = text.partition("-")
    try:
        lo = int(lo)
        hi = int(hi) if sep else lo
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or LO-HI, got {text!r}") from None
    return (lo, hi)


def _preset(text: str) -> str:
    if text not in PRESETS:
        raise argparse.ArgumentTypeError(f"unknown objective set {text!r}; choose cfg1..cfg11")
    return text


def _emit_manifest(args, effective: dict) -> None:
    manifest = {"remod": __version__, "subcommand": args.command, **effective}
    text = json.dumps(manifest, sort_keys=True)
    print(f"manifest: {text}", file=sys.stderr)
    if getattr(args, "manifest", None):
        _write_atomic(args.manifest, text + "\n")


def _paths(args, *names) -> dict:
    return {n: getattr(args, n) for n in names}


# -- subcommands -----------------------------------------------------------------


def cmd_fit_buildcost(args):
    _check_inputs(args.timings)
    loaded = load_timings(read_source(args.timings))
    for row, reason in loaded.rejected:
        log.warning("timings row %d rejected: %s", row, reason)
    model = fit_build_cost_model(loaded.samples)
    _emit_manifest(args, {"inputs": _paths(args, "timings"), "outputs": _paths(args, "out"),
                          "samples": len(loaded.samples), "rejected": len(loaded.rejected)})
    _write_atomic(args.out, model.to_json())


def cmd_evaluate(args):
    snapshot, model = _load_inputs(args)
    if args.moves is not None:
        solution = parse_moves(args.moves, snapshot)
    else:
        _check_inputs(args.solution)
        doc = json.loads(_read_text(args.solution))
        moves = doc.get("moves") if isinstance(doc, dict) else doc
        if not isinstance(moves, list):
            raise ParseError("solution document needs a moves list")
        solution = parse_solution_doc(moves, snapshot)
    apply_solution(snapshot, solution)  # validates classes and targets
    vec = Evaluator(snapshot, model, ("intra_md", "inter_md", "ebccb", "changes", "ccp", "crp"))(solution)
    out = {
        "solution": str(solution),
        "objectives": vec.as_dict(),
        "module_cycle": has_module_cycle(snapshot.graph, snapshot, solution),
    }
    _emit_manifest(args, {"inputs": _paths(args, "snapshot", "history", "model", "solution"),
                          "moves": args.moves, "model": asdict(model)})
    _write_atomic(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n")


def cmd_optimize(args):
    snapshot, model = _load_inputs(args)
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    generations = args.generations
    if generations is None and args.time_budget is None:
        generations = 100
    config = SearchConfig(
        population=args.population,
        generations=generations,
        time_budget=args.time_budget,
        p_mutation=args.p_mutation,
        p_crossover=args.p_crossover,
        min_cut_share=args.min_cut_share,
        init_moves=args.init_moves,
        min_cut_depth=args.min_cut_depth,
        neighborhood_c=args.neighborhood_c,
        archive=not args.no_archive,
        objectives=PRESETS[args.objectives],
        seed=seed,
        workers=args.workers or default_workers(),
    )
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    effective = asdict(config)
    effective["objective_set"] = args.objectives
    _emit_manifest(args, {"inputs": _paths(args, "snapshot", "history", "model"),
                          "outputs": _paths(args, "out", "log"),
                          "model": asdict(model), "config": effective})

    def progress(rec):
        log.info("generation %d: front %d, best %s", rec["generation"], rec["front_size"], rec["best"])

    result = evolve(config, snapshot, model, on_generation=progress)
    _write_atomic(args.out, dump_front(result.front))
    if args.log:
        _write_atomic(args.log, dump_log(result.log))


def cmd_suggest(args):
    snapshot, model = _load_inputs(args)
    _check_inputs(args.front)
    front = load_front(_read_text(args.front), snapshot)
    evaluator = Evaluator(snapshot, model, PRESETS["cfg1"])
    groups = filter_suggestions(group_by_module(front, snapshot, evaluator), args.max_moves)
    _emit_manifest(args, {"inputs": _paths(args, "front", "snapshot", "history", "model"),
                          "max_moves": args.max_moves, "format": args.format})
    _write_atomic(args.out, render_report(groups, snapshot, args.format))


def cmd_synth(args):
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    spec = PlantedSpec(
        modules=args.modules, classes=args.classes, intra=args.intra, inter=args.inter,
        commits=args.commits, scramble=args.scramble, seed=seed, loc=args.loc,
    )
    planted = generate_planted(spec)
    scramble_seed = args.scramble_seed if args.scramble_seed is not None else seed
    snapshot = scramble(planted, spec.scramble, scramble_seed) if spec.scramble else planted
    spec_doc = asdict(spec)
    spec_doc["scramble_seed"] = scramble_seed
    _emit_manifest(args, {"spec": spec_doc, "outputs": _paths(args, "out", "history_out", "truth_out")})
    _write_atomic(args.out, dump_snapshot(snapshot))
    if args.history_out:
        _write_atomic(args.history_out, dump_history(snapshot.history))
    if args.truth_out:
        moved = sorted(c for c in planted.classes if planted.assignment[c] != snapshot.assignment[c])
        doc = {"assignment": {c: planted.assignment[c] for c in planted.classes}, "scrambled": moved}
        _write_atomic(args.truth_out, json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="remod", description="Move-class refactoring search.")
    parser.add_argument("--version", action="version", version=f"remod {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--manifest", help="also write the run manifest to this file")
        p.add_argument("--out", required=out_default is None, default=out_default,
                       help="output file ('-' for stdout)")

    def inputs(p, history=True):
        p.add_argument("--snapshot", required=True)
        if history:
            p.add_argument("--history")
        p.add_argument("--model", help="build-cost model JSON (default a=1 b=1 c=0)")

    p = sub.add_parser("fit-buildcost", help="fit the build-cost regression")
    p.add_argument("--timings", required=True, help="CSV of loc,seconds")
    common(p)
    p.set_defaults(func=cmd_fit_buildcost)

    p = sub.add_parser("evaluate", help="score one solution against the baseline")
    inputs(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--moves", help="e.g. 'A:M2,B:NEW'")
    g.add_argument("--solution", help="JSON document with a moves list")
    common(p, "-")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="run the evolutionary search")
    inputs(p)
    p.add_argument("--generations", type=int)
    p.add_argument("--time-budget", type=float, metavar="SECONDS")
    p.add_argument("--population", type=int, default=500)
    p.add_argument("--seed", type=int)
    p.add_argument("--objectives", type=_preset, default="cfg1")
    p.add_argument("--workers", type=int, help="evaluation processes (default: CPU count)")
    p.add_argument("--init-moves", type=_int_range, default=(1, 100), metavar="LO-HI")
    p.add_argument("--p-mutation", type=float, default=0.5)
    p.add_argument("--p-crossover", type=float, default=1.0)
    p.add_argument("--min-cut-share", type=float, default=0.5)
    p.add_argument("--min-cut-depth", type=int, default=3)
    p.add_argument("--neighborhood-c", type=float, default=0.5)
    p.add_argument("--no-archive", action="store_true")
    p.add_argument("--log", help="per-generation log (line-delimited JSON)")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("suggest", help="split a front into reviewable suggestions")
    p.add_argument("--front", required=True)
    inputs(p)
    p.add_argument("--max-moves", type=int, default=10)
    p.add_argument("--format", choices=("text", "json"), default="text")
    common(p, "-")
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("synth", help="generate a planted-structure snapshot")
    p.add_argument("--modules", type=int, default=5)
    p.add_argument("--classes", type=_int_range, default=(10, 10), metavar="N|LO-HI")
    p.add_argument("--intra", type=float, default=0.4)
    p.add_argument("--inter", type=float, default=0.02)
    p.add_argument("--commits", type=int, default=200)
    p.add_argument("--scramble", type=float, default=0.0)
    p.add_argument("--loc", type=_int_range, default=(50, 500), metavar="LO-HI")
    p.add_argument("--seed", type=int)
    p.add_argument("--scramble-seed", type=int, help="default: --seed")
    p.add_argument("--history-out", help="write the commit history here")
    p.add_argument("--truth-out", help="write the planted assignment here")
    common(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"remod: error: {exc}", file=sys.stderr)
        return 2
    except (RemodError, ValueError, OSError) as exc:
        print(f"remod: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
