"""Command-line entry point: ``eqlab {ldim,run,check,repro}``.

Exit codes: 0 on success, 1 on a configuration error, 2 when a check fails.
"""

from __future__ import annotations

import argparse
import inspect
import json
import logging
import os
import sys

from . import acceptance
from .concepts import ClassError, VersionSpace, load_class
from .harness import ConfigError, ExperimentConfig, emit_outputs, run_experiment, summarize
from .littlestone import ldim, shattered_tree

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2

REPRO = {
    "theorem1": (3, 5, 6),
    "theorem1-lb": (7,),
    "theorem2": (8, 9, 10, 12),
    "theorem2-lb": (11,),
    "all": tuple(acceptance.ALL),
}
CHECK = (4, 12, 13, 14, 15)


def cmd_ldim(args) -> int:
    try:
        cls = load_class(args.cls)
    except (OSError, KeyError, ValueError, ClassError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    V = VersionSpace.full(cls)
    print(ldim(V))
    if args.witness:
        print(json.dumps(shattered_tree(V).to_json()))
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = ExperimentConfig.load(args.config)
        traces = open(args.trace, "w") if args.trace else None
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    on_trial = None
    if traces is not None:
        def on_trial(row, tr, session):
            text = tr.to_jsonl({"experiment_id": row.experiment_id, "trial": row.trial})
            if text:
                traces.write(text + "\n")

    game_sink_for = None
    if args.dump_game:
        os.makedirs(args.dump_game, exist_ok=True)

        def game_sink_for(trial):
            def sink(t, game):
                game.to_csv(os.path.join(args.dump_game, f"trial{trial:05d}_round{t:04d}.csv"))
            return sink

    try:
        rows = run_experiment(config, on_trial, game_sink_for)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        if traces is not None:
            traces.close()
    stats = summarize(rows)
    emit_outputs(rows, stats, args.out, args.stats, args.plot)
    for eid, s in stats.items():
        print(f"{eid}: n={s['n']} mean={s['mean']:.4f} std={s['std']:.4f} "
              f"ci99=+-{s['ci99_half_width']:.4f} min={s['min']} max={s['max']}")
    return EXIT_OK


def _run_criteria(numbers, trials=None) -> int:
    ok = True
    for n in numbers:
        fn = acceptance.ALL[n]
        kwargs = {}
        if trials is not None and "trials" in inspect.signature(fn).parameters:
            kwargs["trials"] = trials
        res = fn(**kwargs)
        print(res.line(), flush=True)
        ok &= res.passed
    return EXIT_OK if ok else EXIT_CHECK


def cmd_check(args) -> int:
    return _run_criteria(CHECK, args.trials)


def cmd_repro(args) -> int:
    return _run_criteria(REPRO[args.target], args.trials)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ldim", help="Littlestone dimension of a class file")
    p.add_argument("--class", dest="cls", required=True, help="class JSON file")
    p.add_argument("--witness", action="store_true", help="also print a shattered tree as JSON")
    p.set_defaults(func=cmd_ldim)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="results CSV")
    p.add_argument("--stats", help="summary JSON")
    p.add_argument("--trace", help="per-round JSONL transcript")
    p.add_argument("--plot", help="ECDF of query counts as SVG")
    p.add_argument("--dump-game", help="directory for per-round payoff matrices (CSV)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="symmetry and invariant suites")
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("repro", help="reproduce one group of acceptance numbers")
    p.add_argument("target", choices=sorted(REPRO))
    p.add_argument("--trials", type=int, default=None, help="override trial counts")
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
