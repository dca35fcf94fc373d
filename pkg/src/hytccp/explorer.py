# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Policies, traces, bounded enumeration and the post-hoc trace checker."""
import logging
import random
import threading
import warnings
from collections import Counter
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from dataclasses import field
from fractions import Fraction
from typing import Optional

from . import cstore
from .constraints import entails
from .constraints import hide_many
from .engine import Continuous
from .engine import Engine
from .engine import SIGMA
from .engine import Successor
from .engine import Terminal
from .exceptions import HytccpWarning
from .hstore import hentails
from .hstore import HybridStore
from .hstore import is_consistent
from .hstore import UNBOUNDED

logger = logging.getLogger(__name__)

VIEWS = ("global", "full")


@dataclass(frozen=True)
class Limits:
    max_steps: int = 10_000
    max_time: Optional[Fraction] = None
    max_depth: int = 40
    zeno_steps: int = 10_000

    def __post_init__(self):
        for name in ("max_steps", "max_depth", "zeno_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_time is not None and self.max_time <= 0:
            raise ValueError("max_time must be positive")
        if self.max_time is not None:
            object.__setattr__(self, "max_time", Fraction(self.max_time))

    def describe(self):
        return {
            "max_steps": self.max_steps,
            "max_time": None if self.max_time is None else str(self.max_time),
            "max_depth": self.max_depth,
            "zeno_steps": self.zeno_steps,
        }


def _ceiling(bound, remaining):
    """The largest duration worth considering, or None when unbounded."""
    limit = None if bound is UNBOUNDED else bound.tau
    if remaining is not None:
        limit = remaining if limit is None else min(limit, remaining)
    return limit


def _admissible_events(engine, options, remaining):
    bound = options.continuous.bound
    ceiling = _ceiling(bound, remaining)
    events = engine.event_times(options.source, ceiling)
    return [t for t in events if bound.admits(t)], ceiling


def _fallback_duration(events, remaining):
    if remaining is not None:
        return remaining
    duration = (events[-1] if events else Fraction(0)) + 1
    logger.warning("no time limit and no event ahead, advancing by %s", duration)
    return duration


def _endpoint(bound, events, remaining):
    """The longest admissible dwell, staying below a strict bound."""
    if bound is UNBOUNDED:
        return _fallback_duration(events, remaining)
    tau = bound.tau
    if bound.strict:
        below = [t for t in events if t < bound.tau]
        tau = ((below[-1] if below else Fraction(0)) + bound.tau) / 2
    if remaining is not None:
        tau = min(tau, remaining)
    return tau


class _Policy:
    name = None

    def duration(self, rng, engine, options, remaining):
        raise NotImplementedError

    def choose(self, rng, engine, options, remaining):
        """Pick a σ-successor, or a positive duration for the continuous option."""
        candidates = list(options.discrete)
        if options.continuous is not None:
            candidates.append(None)
        picked = candidates[0] if len(candidates) == 1 else rng.choice(candidates)
        if picked is None:
            return self.duration(rng, engine, options, remaining)
        return picked

    def describe(self):
        return {"name": self.name, "seed": self.seed}


@dataclass(frozen=True)
class Urgent(_Policy):
    """Let time pass only up to the next instant at which something changes."""

    seed: int = 0
    name = "urgent"

    def duration(self, rng, engine, options, remaining):
        events, _ = _admissible_events(engine, options, remaining)
        if events:
            return events[0]
        return _endpoint(options.continuous.bound, events, remaining)


@dataclass(frozen=True)
class Lazy(_Policy):
    """Dwell as long as the invariants and the store allow."""

    seed: int = 0
    name = "lazy"

    def duration(self, rng, engine, options, remaining):
        events, _ = _admissible_events(engine, options, remaining)
        return _endpoint(options.continuous.bound, events, remaining)


@dataclass(frozen=True)
class Random(_Policy):
    """Draw the step kind, then a duration from events and a regular grid."""

    seed: int = 0
    horizon_step: Fraction = Fraction(1)
    name = "random"

    def choose(self, rng, engine, options, remaining):
        if options.discrete and options.continuous is not None:
            if rng.random() < 0.5:
                return self.duration(rng, engine, options, remaining)
            return rng.choice(options.discrete)
        if options.discrete:
            return rng.choice(options.discrete)
        return self.duration(rng, engine, options, remaining)

    def duration(self, rng, engine, options, remaining):
        grid = duration_grid(engine, options, remaining, self.horizon_step)
        return rng.choice(grid)

    def describe(self):
        return {
            "name": self.name,
            "seed": self.seed,
            "horizon_step": str(self.horizon_step),
        }


@dataclass(frozen=True)
class Exhaustive:
    """Every successor; durations from event times and interval endpoints."""

    max_depth: int = 40
    duration_grid: Optional[Fraction] = None
    name = "exhaustive"

    def durations(self, engine, options):
        if self.duration_grid is None:
            events, _ = _admissible_events(engine, options, None)
            found = set(events)
            found.add(_endpoint(options.continuous.bound, events, None))
            return sorted(found)
        return duration_grid(engine, options, None, self.duration_grid)

    def describe(self):
        grid = None if self.duration_grid is None else str(self.duration_grid)
        return {"name": self.name, "max_depth": self.max_depth, "grid": grid}


POLICIES = {"urgent": Urgent, "lazy": Lazy, "random": Random}


def duration_grid(engine, options, remaining, step):
    """Events plus multiples of ``step``, all admissible, in increasing order."""
    bound = options.continuous.bound
    events, ceiling = _admissible_events(engine, options, remaining)
    if ceiling is None:
        ceiling = (events[-1] if events else Fraction(0)) + 10 * step
    found = set(events)
    multiple = step
    while multiple <= ceiling:
        if bound.admits(multiple):
            found.add(multiple)
        multiple += step
    if not found:
        found.add(_endpoint(bound, events, remaining))
    return sorted(found)


@dataclass(frozen=True)
class TraceStep:
    label: object
    store: HybridStore
    # guards of the ask branches selected in this step, scopes projected away
    guards: tuple = ()


@dataclass(frozen=True)
class Trace:
    initial: HybridStore
    steps: tuple = ()
    terminal: Terminal = Terminal.SUCCESS
    view: str = "global"
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def time(self):
        return sum(
            (s.label.tau for s in self.steps if s.label is not SIGMA), Fraction(0)
        )

    @property
    def stores(self):
        return (self.initial,) + tuple(s.store for s in self.steps)

    @property
    def final(self):
        return self.steps[-1].store if self.steps else self.initial

    def times(self):
        """Cumulative time after each step."""
        now = Fraction(0)
        result = []
        for step in self.steps:
            if step.label is not SIGMA:
                now += step.label.tau
            result.append(now)
        return result


def _viewer(engine, view):
    if view not in VIEWS:
        raise ValueError(f"unknown view {view!r}, expected one of {VIEWS}")
    if view == "full":
        return engine.observed_store
    return lambda cfg: cfg.store


def run(program, init, policy=None, limits=None, entry=None, view="global"):
    """Simulate one trace of ``program`` from ``init``."""
    policy = policy or Urgent()
    limits = limits or Limits()
    engine = Engine(program)
    observe = _viewer(engine, view)
    cfg = engine.start(init, entry)
    initial = observe(cfg)
    rng = random.Random(policy.seed)
    steps = []
    now = Fraction(0)
    streak = 0
    terminal = Terminal.LIMIT_REACHED
    while len(steps) < limits.max_steps:
        options = engine.compose_options(cfg)
        if options.blocked:
            terminal = engine.terminal_status(cfg)
            break
        remaining = None if limits.max_time is None else limits.max_time - now
        picked = policy.choose(rng, engine, options, remaining)
        if not isinstance(picked, Successor):
            picked = Fraction(picked)
            cfg = engine.advance(options, picked)
            now += picked
            streak = 0
            steps.append(TraceStep(Continuous(picked), observe(cfg)))
        else:
            cfg = picked.configuration
            streak += 1
            steps.append(TraceStep(SIGMA, observe(cfg), picked.guards))
        if cfg.inconsistent:
            terminal = Terminal.INCONSISTENT
            break
        if limits.max_time is not None and now >= limits.max_time:
            break
        if streak >= limits.zeno_steps:
            message = f"{streak} discrete steps without time passing, giving up"
            logger.warning(message)
            warnings.warn(HytccpWarning(message))
            break
    logger.info(
        "run finished after %d steps at time %s: %s",
        len(steps),
        now,
        terminal.value,
    )
    meta = {"policy": policy.describe(), "limits": limits.describe()}
    return Trace(initial, tuple(steps), terminal, view, meta)


def coalesce(trace):
    """Merge adjacent continuous steps into one."""
    steps = []
    for step in trace.steps:
        if steps and step.label is not SIGMA and steps[-1].label is not SIGMA:
            tau = steps[-1].label.tau + step.label.tau
            steps[-1] = TraceStep(Continuous(tau), step.store)
        else:
            steps.append(step)
    return Trace(trace.initial, tuple(steps), trace.terminal, trace.view, trace.meta)


def behavior(trace):
    """The store sequence of a trace with labels dropped, after coalescing."""
    return coalesce(trace).stores


@dataclass(frozen=True)
class Behavior:
    """The maximal traces found by :func:`enumerate`; see :meth:`closure`."""

    traces: frozenset
    prefix_closed: bool = True

    def __iter__(self):
        return iter(self.traces)

    def __len__(self):
        return len(self.traces)

    def closure(self):
        """Every prefix of every trace, as label-free store sequences."""
        sequences = set()
        for trace in self.traces:
            stores = behavior(trace)
            for end in range(1, len(stores) + 1):
                sequences.add(stores[:end])
        return frozenset(sequences)

    def terminals(self):
        return Counter(t.terminal.value for t in self.traces)


class _Memo:
    def __init__(self):
        self._table = {}
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            return self._table.get(key)

    def insert(self, key, value):
        with self._lock:
            return self._table.setdefault(key, value)


def enumerate(program, init, policy=None, entry=None, view="global", workers=1):
    """All traces of at most ``policy.max_depth`` steps."""
    policy = policy or Exhaustive()
    engine = Engine(program)
    observe = _viewer(engine, view)
    memo = _Memo()

    def successors(cfg):
        options = engine.compose_options(cfg)
        found = [
            (TraceStep(SIGMA, observe(s.configuration), s.guards), s.configuration)
            for s in options.discrete
        ]
        if options.continuous is not None:
            for tau in policy.durations(engine, options):
                following = engine.advance(options, tau)
                found.append((TraceStep(Continuous(tau), observe(following)), following))
        return options, found

    def explore(cfg, depth):
        key = (cfg.agent, cfg.store, cfg.fresh, cfg.inconsistent, depth)
        known = memo.get(key)
        if known is not None:
            return known
        if cfg.inconsistent:
            return memo.insert(key, frozenset([((), Terminal.INCONSISTENT)]))
        options, found = successors(cfg)
        if options.blocked:
            return memo.insert(key, frozenset([((), engine.terminal_status(cfg))]))
        if depth == 0:
            return memo.insert(key, frozenset([((), Terminal.LIMIT_REACHED)]))
        suffixes = set()
        for step, following in found:
            for rest, terminal in explore(following, depth - 1):
                suffixes.add(((step,) + rest, terminal))
        return memo.insert(key, frozenset(suffixes))

    start = engine.start(init, entry)
    if workers > 1 and policy.max_depth > 0:
        options, found = successors(start)
        if options.blocked:
            suffixes = frozenset([((), engine.terminal_status(start))])
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(lambda item: explore(item[1], policy.max_depth - 1), found)
                )
            suffixes = frozenset(
                ((step,) + rest, terminal)
                for (step, _), branch in zip(found, results)
                for rest, terminal in branch
            )
    else:
        suffixes = explore(start, policy.max_depth)
    meta = {"policy": policy.describe()}
    traces = frozenset(
        Trace(observe(start), steps, terminal, view, meta) for steps, terminal in suffixes
    )
    logger.info("enumerated %d maximal traces", len(traces))
    return Behavior(traces)


def outcome_classes(traces):
    """Group traces by the rendering of their final store."""
    classes = defaultdict(list)
    for trace in traces:
        classes[trace.final.render(hide_anonymous=True)].append(trace)
    return dict(classes)


def check_trace(trace):
    """Re-verify a trace step by step; returns the problems found."""
    problems = []
    previous = trace.initial
    last = len(trace.steps) - 1
    index = 0
    for step in trace.steps:
        index += 1
        store = step.store
        if step.label is SIGMA:
            vanished = previous.discrete.variables - store.discrete.variables
            if not entails(store.discrete, hide_many(vanished, previous.discrete)):
                problems.append(f"step {index}: discrete store lost information")
            for guard in step.guards:
                if not hentails(previous, guard):
                    problems.append(
                        f"step {index}: guard {guard.render()} was not entailed"
                    )
        else:
            tau = step.label.tau
            if tau <= 0:
                problems.append(f"step {index}: non-positive duration")
            if store.discrete != previous.discrete:
                problems.append(f"step {index}: time step changed the discrete store")
            if store.continuous != cstore.project(previous.continuous, tau):
                problems.append(f"step {index}: values did not evolve linearly")
        consistent = not store.inconsistent and is_consistent(store)
        allowed = index - 1 == last and trace.terminal is Terminal.INCONSISTENT
        if not consistent and not allowed:
            problems.append(f"step {index}: inconsistent store")
        previous = store
    return problems
