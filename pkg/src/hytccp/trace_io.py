# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Trace documents: line-delimited JSON, aligned text and CSV samples.

A document is one header line, one line per step and one footer line.
Every number is written twice, as an exact ``num/den`` string and as a
20 significant digit decimal; only the exact form is read back.
"""
import csv
import hashlib
import json
from dataclasses import dataclass
from decimal import Decimal
from decimal import localcontext
from fractions import Fraction
from typing import NamedTuple
from typing import Optional

from . import __version__
from . import cstore
from .constraints import FALSE
from .engine import Continuous
from .engine import SIGMA
from .engine import Terminal
from .exceptions import HytccpError
from .exceptions import TraceFormatError
from .explorer import coalesce
from .explorer import Trace
from .explorer import TraceStep
from .hstore import HybridStore
from .linear import render_rational
from .parser import parse_constraint
from .util import _read_template
from .util import RESOURCES

FORMAT = "hytccp-trace/1"
SAMPLES_HEADER = ("time", "variable", "value", "time_decimal", "value_decimal")


@dataclass(frozen=True)
class TraceDocument:
    header: dict
    steps: tuple
    footer: dict

    def records(self):
        return [self.header, *self.steps, self.footer]


def decimal(value):
    with localcontext() as context:
        context.prec = 20
        return str(Decimal(value.numerator) / Decimal(value.denominator))


def number(value):
    value = Fraction(value)
    return {"exact": render_rational(value), "decimal": decimal(value)}


def _read_number(record):
    try:
        return Fraction(record["exact"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise TraceFormatError(f"malformed number {record!r}") from e


def _store_record(store):
    return {
        "discrete": store.discrete.render(),
        "continuous": [
            {"var": name, "value": number(entry.value), "flow": number(entry.flow)}
            for name, entry in store.continuous.items()
        ],
        "inconsistent": store.inconsistent,
    }


def _read_store(record):
    try:
        text = record["discrete"]
        if text == "false":
            discrete = FALSE
        else:
            discrete = parse_constraint(text)
        entries = {
            item["var"]: (_read_number(item["value"]), _read_number(item["flow"]))
            for item in record["continuous"]
        }
    except KeyError as e:
        raise TraceFormatError(f"store record lacks {e}") from e
    except HytccpError as e:
        if isinstance(e, TraceFormatError):
            raise
        raise TraceFormatError(f"unreadable store: {e}") from e
    continuous = cstore.ContinuousStore.from_mapping(entries)
    if record.get("inconsistent") and not discrete.is_false:
        continuous = cstore.BOTTOM
    return HybridStore(discrete, continuous)


def program_digest(source):
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


def to_structured(trace, program_name=None, source=None):
    """The document of ``trace``; ``source`` is hashed into the header."""
    header = {
        "format": FORMAT,
        "generator": f"hytccp {__version__}",
        "program": program_name,
        "sha256": None if source is None else program_digest(source),
        "view": trace.view,
        "policy": trace.meta.get("policy"),
        "limits": trace.meta.get("limits"),
        "initial": _store_record(trace.initial),
    }
    steps = []
    times = trace.times()
    for index, (step, now) in enumerate(zip(trace.steps, times), start=1):
        if step.label is SIGMA:
            label = "sigma"
        else:
            label = {"tau": number(step.label.tau)}
        steps.append(
            {
                "step": index,
                "label": label,
                "time": number(now),
                "store": _store_record(step.store),
                "guards": [g.render() for g in step.guards],
            }
        )
    footer = {
        "terminal": trace.terminal.value,
        "steps": len(trace.steps),
        "time": number(trace.time),
    }
    return TraceDocument(header, tuple(steps), footer)


def dumps(document):
    lines = (
        json.dumps(record, ensure_ascii=False, separators=(",", ":"))
        for record in document.records()
    )
    return "".join(line + "\n" for line in lines)


def loads(text):
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"line {lineno}: {e.msg}") from e
    if len(records) < 2:
        raise TraceFormatError("a trace document needs a header and a footer")
    header, *steps, footer = records
    if header.get("format") != FORMAT:
        raise TraceFormatError(f"unsupported format {header.get('format')!r}")
    if footer.get("steps") != len(steps):
        raise TraceFormatError(
            f"footer announces {footer.get('steps')} steps, found {len(steps)}"
        )
    return TraceDocument(header, tuple(steps), footer)


def from_structured(document):
    """Rebuild labels and stores; guards are kept as their text."""
    steps = []
    for record in document.steps:
        label = record.get("label")
        if label == "sigma":
            label = SIGMA
        elif isinstance(label, dict) and "tau" in label:
            label = Continuous(_read_number(label["tau"]))
        else:
            raise TraceFormatError(f"unknown label {label!r}")
        guards = tuple(parse_constraint(g) for g in record.get("guards", ()))
        steps.append(TraceStep(label, _read_store(record["store"]), guards))
    try:
        terminal = Terminal(document.footer["terminal"])
    except (KeyError, ValueError) as e:
        raise TraceFormatError("missing or unknown terminal tag") from e
    meta = {
        key: document.header[key]
        for key in ("policy", "limits")
        if document.header.get(key)
    }
    return Trace(
        _read_store(document.header["initial"]),
        tuple(steps),
        terminal,
        document.header.get("view", "global"),
        meta,
    )


def dump_trace(trace, program_name=None, source=None):
    return dumps(to_structured(trace, program_name, source))


class Sample(NamedTuple):
    time: Fraction
    # both None on the event rows of a store without continuous variables
    variable: Optional[str]
    value: Optional[Fraction]


def to_samples(trace, step):
    """Piecewise-linear samples of every continuous variable.

    Values are taken at each multiple of ``step`` and at every step boundary.
    A discrete step that resets a value yields two rows with the same time.
    While no continuous variable exists, every step boundary yields one
    event row with an empty variable and value.
    """
    step = Fraction(step)
    if step <= 0:
        raise ValueError("sampling step must be positive")
    rows = []
    last = {}

    def emit(time, continuous):
        if not len(continuous):
            rows.append(Sample(time, None, None))
            return
        for name, entry in continuous.items():
            row = Sample(time, name, entry.value)
            if last.get(name) != row:
                rows.append(row)
                last[name] = row

    now = Fraction(0)
    store = trace.initial
    emit(now, store.continuous)
    for item in coalesce(trace).steps:
        if item.label is not SIGMA:
            end = now + item.label.tau
            tick = (now // step + 1) * step
            while tick < end and len(store.continuous):
                emit(tick, cstore.project(store.continuous, tick - now))
                tick += step
            now = end
        store = item.store
        emit(now, store.continuous)
    return rows


def write_samples_csv(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SAMPLES_HEADER)
    for row in rows:
        writer.writerow(
            [
                render_rational(row.time),
                row.variable or "",
                "" if row.value is None else render_rational(row.value),
                decimal(row.time),
                "" if row.value is None else decimal(row.value),
            ]
        )


def text_rows(trace):
    now = Fraction(0)
    rows = [{"step": 0, "label": "", "time": "0", "store": trace.initial}]
    for index, step in enumerate(trace.steps, start=1):
        if step.label is not SIGMA:
            now += step.label.tau
        rows.append(
            {
                "step": index,
                "label": step.label.render(),
                "time": render_rational(now),
                "store": step.store,
            }
        )
    return rows


def render_text(trace, title=None):
    """Aligned, human-oriented rendering; anonymous variables print as ``_``."""
    template = _read_template([RESOURCES], "trace.txt.jinja2", autoescape=False)
    rows = text_rows(trace)
    return template.render(
        title=title,
        rows=rows,
        label_width=max(len(r["label"]) for r in rows),
        time_width=max(len(r["time"]) for r in rows),
        terminal=trace.terminal.value,
        total=render_rational(trace.time),
    )
