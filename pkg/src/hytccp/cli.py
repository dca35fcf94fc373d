# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Command line front door: ``hytccp parse|run|explore|sample PROGRAM``."""
import argparse
import contextlib
import logging
import os
import re
import sys
from collections import Counter
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import cstore
from . import explorer
from . import trace_io
from .constraints import TRUE
from .engine import Terminal
from .exceptions import HytccpError
from .exceptions import ProgramError
from .hstore import HybridStore
from .lang import pretty
from .parser import parse_agent
from .parser import parse_constraint
from .parser import parse_file
from .report import render_report
from .report import report_entry
from .util import _read_template
from .util import RESOURCES

logger = logging.getLogger(__name__)

SEED_VARIABLE = "HYTCCP_SEED"
_CONT = re.compile(r"^\s*([A-Z_][A-Za-z0-9_']*)\s*=\s*([^:]+):(.+)$")


def rational(text):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def positive_rational(text):
    value = rational(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def continuous_entry(text):
    """``X=V:F``, the value and flow of one continuous variable."""
    match = _CONT.match(text)
    if match is None:
        raise argparse.ArgumentTypeError(f"expected X=VALUE:FLOW, got {text!r}")
    name, value, flow = match.groups()
    return name, (rational(value), rational(flow))


def _store_options(parser):
    parser.add_argument("program", metavar="PROGRAM", type=Path)
    parser.add_argument(
        "--entry",
        metavar="AGENT",
        help="agent to run instead of init, e.g. 'cooler(St, T)'.",
    )
    parser.add_argument(
        "--store",
        metavar="C",
        help="initial discrete store, e.g. 'St = [off|_] /\\ T >= 26'.",
    )
    parser.add_argument(
        "--cont",
        metavar="X=V:F",
        action="append",
        type=continuous_entry,
        default=[],
        help="initial value and flow of a continuous variable (repeatable).",
    )
    parser.add_argument(
        "--view",
        choices=explorer.VIEWS,
        default="global",
        help="observe the global store only, or include hidden variables.",
    )
    parser.add_argument("--output", "-o", metavar="PATH", type=Path)


def _run_options(parser):
    parser.add_argument(
        "--policy",
        choices=sorted(explorer.POLICIES),
        default="urgent",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"seed of the policy's choices (default: ${SEED_VARIABLE} or 0).",
    )
    parser.add_argument(
        "--horizon-step",
        type=positive_rational,
        default=Fraction(1),
        help="grid of candidate durations for the random policy.",
    )
    parser.add_argument("--max-steps", type=positive_int, default=10_000)
    parser.add_argument("--max-time", type=positive_rational, default=None)
    parser.add_argument("--zeno-steps", type=positive_int, default=10_000)
    parser.add_argument(
        "--raw",
        action="store_true",
        help="keep consecutive continuous steps apart.",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hytccp",
        description="Interpreter and simulator for hybrid timed ccp programs.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log progress (-v) or every step (-vv) to stderr.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    parse = commands.add_parser("parse", help="check a program and print it back.")
    parse.add_argument("program", metavar="PROGRAM", type=Path)

    run = commands.add_parser("run", help="simulate one trace.")
    _store_options(run)
    _run_options(run)
    run.add_argument(
        "--format",
        choices=("jsonl", "text", "html"),
        default="jsonl",
    )

    explore = commands.add_parser("explore", help="enumerate bounded behaviours.")
    _store_options(explore)
    explore.add_argument("--max-depth", type=positive_int, default=40)
    explore.add_argument(
        "--duration-grid",
        type=positive_rational,
        default=None,
        help="also try every multiple of this duration.",
    )
    explore.add_argument("--workers", type=positive_int, default=1)

    sample = commands.add_parser("sample", help="sample one trace as CSV.")
    _store_options(sample)
    _run_options(sample)
    sample.add_argument("--step", type=positive_rational, required=True)
    return parser


def configure_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def resolve_seed(seed, environ=None):
    if seed is not None:
        return seed
    value = (environ if environ is not None else os.environ).get(SEED_VARIABLE)
    if not value:
        return 0
    try:
        return int(value)
    except ValueError:
        raise HytccpError(f"${SEED_VARIABLE} is not an integer: {value!r}")


def initial_store(options):
    discrete = TRUE if options.store is None else parse_constraint(options.store)
    continuous = cstore.ContinuousStore.from_mapping(dict(options.cont))
    return HybridStore(discrete, continuous)


def make_policy(options):
    seed = resolve_seed(options.seed)
    if options.policy == "random":
        return explorer.Random(seed, options.horizon_step)
    return explorer.POLICIES[options.policy](seed)


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            yield f


def _load(options):
    program = parse_file(options.program)
    entry = None
    if getattr(options, "entry", None):
        entry = parse_agent(options.entry, program)
    return program, entry


def cmd_parse(options):
    program = parse_file(options.program)
    sys.stdout.write(pretty(program))
    sys.stdout.write(f"% declarations: {', '.join(program.signatures)}\n")
    return 0


def _simulate(options):
    program, entry = _load(options)
    limits = explorer.Limits(
        max_steps=options.max_steps,
        max_time=options.max_time,
        zeno_steps=options.zeno_steps,
    )
    trace = explorer.run(
        program,
        initial_store(options),
        make_policy(options),
        limits,
        entry=entry,
        view=options.view,
    )
    if not options.raw:
        trace = explorer.coalesce(trace)
    return program, trace


def cmd_run(options):
    program, trace = _simulate(options)
    name = options.program.stem
    source = options.program.read_text(encoding="utf-8")
    with _output(options.output) as out:
        if options.format == "text":
            out.write(trace_io.render_text(trace, title=name))
        elif options.format == "html":
            document = trace_io.to_structured(trace, name, source)
            template = _read_template([RESOURCES])
            css = Path(RESOURCES, "style.css").read_text(encoding="utf-8")
            out.write(render_report(template, name, css, [report_entry(name, document)]))
        else:
            out.write(trace_io.dump_trace(trace, name, source))
    return 0


def cmd_explore(options):
    program, entry = _load(options)
    policy = explorer.Exhaustive(options.max_depth, options.duration_grid)
    behavior = explorer.enumerate(
        program,
        initial_store(options),
        policy,
        entry=entry,
        view=options.view,
        workers=options.workers,
    )
    classes = explorer.outcome_classes(
        t for t in behavior if t.terminal is not Terminal.LIMIT_REACHED
    )
    terminals = Counter(t.terminal.value for t in behavior)
    with _output(options.output) as out:
        out.write(f"traces: {len(behavior)}\n")
        for tag, count in sorted(terminals.items()):
            out.write(f"  {tag}: {count}\n")
        out.write(f"outcome classes: {len(classes)}\n")
        for store, members in sorted(classes.items()):
            out.write(f"  [{len(members)}] {store}\n")
    return 0


def cmd_sample(options):
    _, trace = _simulate(options)
    with _output(options.output) as out:
        trace_io.write_samples_csv(trace_io.to_samples(trace, options.step), out)
    return 0


COMMANDS = {
    "parse": cmd_parse,
    "run": cmd_run,
    "explore": cmd_explore,
    "sample": cmd_sample,
}


def diagnostic(error, program=None):
    if isinstance(error, ProgramError) and error.line is not None:
        source = error.source or program or "<input>"
        return f"{source}:{error.line}:{error.column}: error: {error.message}"
    prefix = f"{program}: " if program else ""
    return f"{prefix}error: {error}"


def main(args=None):
    options = build_parser().parse_args(args)
    configure_logging(options.verbose)
    logger.debug("hytccp %s: %s %s", __version__, options.command, options.program)
    try:
        return COMMANDS[options.command](options)
    except HytccpError as e:
        sys.stderr.write(diagnostic(e, options.program) + "\n")
        return e.exit_status
    except OSError as e:
        sys.stderr.write(f"hytccp: error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
