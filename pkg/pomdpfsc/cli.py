"""Command-line entry point.

Stdout carries one JSON object per line (iteration records or the final
result); logs go to stderr. Exit codes: 0 success, 2 configuration error,
3 model error or unreadable model.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TextIO

from .belief import belief_label
from .errors import ConfigurationError, ModelError
from .formatting import json_safe
from .fsc import Fsc, fsc_size
from .fsc_io import export_dot, export_fsc
from .generators import gen_lanes, gen_lanes_plus, gen_paper_micro, gen_random_pomdp
from .model_io import emit_model, parse_model
from .models import Objective, Pomdp, Specification
from .saynt import (
    IterationRecord,
    SayntConfig,
    explore_beliefs,
    run_inductive_only,
    run_oneshot_q1,
    run_oneshot_q2,
    run_saynt,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3

MODES = ("saynt", "belief", "inductive", "oneshot-q1", "oneshot-q2")
GENERATORS = ("lanes", "lanes-plus", "fig2a", "fig2b", "fig4a", "random")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pomdpfsc",
        description="Synthesize finite-state controllers for POMDPs by belief exploration and inductive search.",
    )
    parser.add_argument("--mode", choices=MODES, help="synthesis mode; omit with --gen to emit the model")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", type=Path, help="JSON model file")
    source.add_argument("--gen", choices=GENERATORS, help="built-in model generator")
    parser.add_argument("--spec", choices=[o.value for o in Objective], default=Objective.MIN_REWARD.value)
    parser.add_argument("--t", type=float, default=900.0, help="global timeout in seconds")
    parser.add_argument("--ti", type=float, default=60.0, help="inductive phase timeout in seconds")
    parser.add_argument("--tb", type=float, default=10.0, help="belief phase timeout in seconds")
    parser.add_argument("--max-beliefs", type=int, default=100000, help="beliefs explored per belief phase")
    parser.add_argument("--posterior-aware", action="store_true", help="search posterior-aware FSCs")
    parser.add_argument("--invert-restriction", action="store_true", help="restrict actions when the belief FSC leads")
    parser.add_argument("--max-memory", type=int, default=None, help="stop inductive escalation after k nodes")
    parser.add_argument("--max-iterations", type=int, default=None, help="stop the anytime loop after N iterations")
    parser.add_argument("--export-fsc", type=Path, help="write the inductive (or only) controller here")
    parser.add_argument("--export-belief-fsc", type=Path, help="write the belief-based controller here")
    parser.add_argument("--export-dot", type=Path, help="write the best controller as a DOT digraph")
    parser.add_argument("--trace", type=Path, help="write inductive search events as JSON lines")
    parser.add_argument("--output", type=Path, help="generated model destination (default stdout)")
    parser.add_argument("--seed", type=int, default=0, help="seed for --gen random")
    parser.add_argument("--pu", type=float, default=0.5, help="lane upgrade probability")
    parser.add_argument("--lane-len", type=int, default=8, help="states per lane")
    parser.add_argument("--reps", type=int, default=1, help="Lanes copies for --gen lanes-plus")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    return parser


def _generate(args: argparse.Namespace) -> Pomdp:
    if args.gen == "lanes":
        return gen_lanes(p_u=args.pu, lane_len=args.lane_len)
    if args.gen == "lanes-plus":
        return gen_lanes_plus(args.reps, p_u=args.pu, lane_len=args.lane_len)
    if args.gen == "random":
        return gen_random_pomdp(args.seed)
    return gen_paper_micro(args.gen)


def _emit(out: TextIO, payload: Dict[str, object]) -> None:
    out.write(json.dumps(json_safe(payload)) + "\n")
    out.flush()


def _write_fsc(path: Optional[Path], fsc: Optional[Fsc], pomdp: Pomdp) -> None:
    if path is None or fsc is None:
        return
    path.write_bytes(export_fsc(fsc, pomdp=pomdp))
    logger.info("wrote controller to %s", path)


def _trace_writer(handle: TextIO) -> Callable[[Dict[str, object]], None]:
    def write(event: Dict[str, object]) -> None:
        handle.write(json.dumps(event) + "\n")

    return write


def _summary(mode: str, pomdp: Pomdp, fsc: Optional[Fsc], value: Optional[float]) -> Dict[str, object]:
    size = fsc_size(pomdp, fsc) if fsc is not None else None
    return {
        "mode": mode,
        "value": value,
        "nodes": fsc.num_nodes if fsc is not None else None,
        "size": None if size is None else {"gamma": size.gamma, "delta": size.delta, "total": size.total},
    }


def _run(args: argparse.Namespace, pomdp: Pomdp, out: TextIO) -> int:
    spec = Specification.for_pomdp(pomdp, args.spec)
    unaware = not args.posterior_aware
    trace_file = args.trace.open("w", encoding="utf-8") if args.trace is not None else None
    trace = _trace_writer(trace_file) if trace_file is not None else None

    try:
        best: Optional[Fsc] = None
        node_labels: Optional[Dict[int, str]] = None
        if args.mode == "saynt":
            config = SayntConfig(
                timeout=args.t,
                inductive_timeout=args.ti,
                belief_timeout=args.tb,
                max_beliefs=args.max_beliefs,
                posterior_unaware=unaware,
                invert_restriction=args.invert_restriction,
                max_memory=args.max_memory,
                max_iterations=args.max_iterations,
            )

            def stream(record: IterationRecord) -> None:
                _emit(out, record.as_json())

            result = run_saynt(pomdp, spec, config, trace=trace, on_record=stream)
            if result.records:
                last = result.records[-1]
                _write_fsc(args.export_fsc, last.fsc_inductive, pomdp)
                _write_fsc(args.export_belief_fsc, last.fsc_belief, pomdp)
            best = result.best_fsc
            _emit(out, {**_summary("saynt", pomdp, best, result.value), "stats": result.stats.as_dict()})
        elif args.mode == "belief":
            outcome = explore_beliefs(pomdp, spec, args.t, max_beliefs=args.max_beliefs)
            best, value = outcome.fsc, outcome.value
            fragment = outcome.fragment
            node_labels = {
                p: belief_label(pomdp, fragment.beliefs[b]) for p, b in enumerate(fragment.explored[: best.explored])
            }
            _write_fsc(args.export_fsc, best, pomdp)
            _write_fsc(args.export_belief_fsc, best, pomdp)
            _emit(out, _summary("belief", pomdp, best, value))
        elif args.mode == "inductive":
            best, ivalue = run_inductive_only(
                pomdp, spec, args.t, posterior_unaware=unaware, max_memory=args.max_memory, trace=trace
            )
            _write_fsc(args.export_fsc, best, pomdp)
            _emit(out, _summary("inductive", pomdp, best, ivalue))
        elif args.mode == "oneshot-q1":
            best, value = run_oneshot_q1(
                pomdp, spec, args.ti, args.tb, max_beliefs=args.max_beliefs, posterior_unaware=unaware,
                max_memory=args.max_memory,
            )
            _write_fsc(args.export_belief_fsc or args.export_fsc, best, pomdp)
            _emit(out, _summary("oneshot-q1", pomdp, best, value))
        else:
            best, ivalue = run_oneshot_q2(
                pomdp, spec, args.tb, args.ti, max_beliefs=args.max_beliefs, posterior_unaware=unaware,
                max_memory=args.max_memory,
            )
            _write_fsc(args.export_fsc, best, pomdp)
            _emit(out, _summary("oneshot-q2", pomdp, best, ivalue))
        if args.export_dot is not None and best is not None:
            args.export_dot.write_text(export_dot(best, pomdp=pomdp, node_labels=node_labels), encoding="utf-8")
    finally:
        if trace_file is not None:
            trace_file.close()
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, *, stdout: Optional[TextIO] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = stdout or sys.stdout
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.gen is not None:
            pomdp = _generate(args)
        else:
            pomdp = parse_model(args.model.read_bytes())
    except ConfigurationError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("cannot read model: %s", exc)
        return EXIT_MODEL
    except ModelError as exc:
        logger.error("invalid model: %s", exc)
        return EXIT_MODEL

    if args.mode is None:
        if args.gen is None:
            parser.print_usage(sys.stderr)
            logger.error("--mode is required with --model")
            return EXIT_CONFIG
        data = emit_model(pomdp)
        if args.output is not None:
            args.output.write_bytes(data)
        else:
            out.write(data.decode("utf-8") + "\n")
        return EXIT_OK

    try:
        return _run(args, pomdp, out)
    except ConfigurationError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except ModelError as exc:
        logger.error("%s", exc)
        return EXIT_MODEL


__all__: List[str] = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_MODEL"]
