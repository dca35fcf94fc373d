# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""The small-step transition system.

Every agent contributes a :class:`StepOptions`: its discrete moves, given
as effects (what it tells, which continuous entries it sets) against the
shared store, and at most one continuous option with the dwell times it
admits. Parallel components all read the same input store; the effects of
the components that fire are conjoined and merged, then applied in one
σ-step. Time passes only if every component that is not blocked admits it.

Local scopes rename their variables apart when first entered and keep
their local store on the :class:`~hytccp.lang.Hide` node. Only the hidden
part of the local store is kept there; everything else is lifted to the
global store with the hidden variables projected away.
"""
import enum
import itertools
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import cstore
from .constraints import conjoin
from .constraints import conjoin_all
from .constraints import hide_many
from .constraints import TRUE
from .constraints import Var
from .exceptions import InconsistentInitialStore
from .exceptions import MissingDeclaration
from .exceptions import NoCurrentValue
from .hstore import entailment_onset
from .hstore import event_times
from .hstore import hentails
from .hstore import HybridStore
from .hstore import is_consistent
from .hstore import looser
from .hstore import max_duration
from .hstore import project_store
from .hstore import tighter
from .hstore import UNBOUNDED
from .lang import Call
from .lang import Change
from .lang import Choice
from .lang import components
from .lang import free_variables
from .lang import Hide
from .lang import KEEP
from .lang import Now
from .lang import Parallel
from .lang import rename
from .lang import STOP
from .lang import Stop
from .lang import Tell
from .linear import render_rational

logger = logging.getLogger(__name__)

_SUFFIX = re.compile(r"#(\d+)$")


class Discrete:
    """The σ label."""

    def render(self):
        return "σ"

    def __repr__(self):
        return "SIGMA"


SIGMA = Discrete()


@dataclass(frozen=True)
class Continuous:
    tau: Fraction

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("continuous steps need a positive duration")

    def render(self):
        return f"τ={render_rational(self.tau)}"


class Terminal(enum.Enum):
    SUCCESS = "success"
    SUSPENDED = "suspended"
    INCONSISTENT = "inconsistent"
    LIMIT_REACHED = "limit-reached"


@dataclass(frozen=True)
class Configuration:
    agent: object
    store: HybridStore
    # next free suffix for variables renamed apart during this run
    fresh: int = 1
    inconsistent: bool = False


@dataclass(frozen=True)
class Move:
    agent: object
    told: object = TRUE
    delta: cstore.ContinuousStore = cstore.EMPTY
    guards: tuple = ()


@dataclass(frozen=True)
class ContinuousOption:
    bound: object
    residual: object

    @property
    def strict(self):
        return self.bound.strict


@dataclass(frozen=True)
class StepOptions:
    discrete: tuple = ()
    continuous: Optional[ContinuousOption] = None

    @property
    def blocked(self):
        return not self.discrete and self.continuous is None


@dataclass(frozen=True)
class Successor:
    configuration: Configuration
    guards: tuple = ()

    label = SIGMA


@dataclass(frozen=True)
class GlobalOptions:
    source: Configuration
    discrete: tuple = ()
    continuous: Optional[ContinuousOption] = None

    @property
    def blocked(self):
        return not self.discrete and self.continuous is None


class _Supply:
    def __init__(self, start):
        self._counter = itertools.count(start)
        self.next_free = start

    def fresh(self, var):
        index = next(self._counter)
        self.next_free = index + 1
        return Var(f"{var.name.split('#')[0]}#{index}", var.continuous)


def _max_suffix(names):
    found = [int(m.group(1)) for n in names if (m := _SUFFIX.search(n))]
    return max(found, default=0)


def _scope(variables, body, local):
    """Wrap ``body`` in an opened scope, dropping or flattening trivial ones."""
    if isinstance(body, Stop):
        return STOP
    if isinstance(body, Hide) and body.opened:
        merged = HybridStore(
            conjoin(local.discrete, body.local.discrete),
            cstore.merge(local.continuous, body.local.continuous),
        )
        return Hide(variables + body.variables, body.body, merged, True)
    return Hide(variables, body, local, True)


def _rebuild(tree, parts):
    if isinstance(tree, Parallel):
        left = _rebuild(tree.left, parts)
        right = _rebuild(tree.right, parts)
        if isinstance(left, Stop):
            return right
        if isinstance(right, Stop):
            return left
        return Parallel(left, right)
    return next(parts)


class Engine:
    def __init__(self, program):
        self.program = program
        self._locals = {}
        for declaration in program.declarations:
            params = {p.name for p in declaration.params}
            self._locals[declaration.name] = sorted(
                free_variables(declaration.body) - params
            )

    def start(self, store, entry=None):
        """The initial configuration; anonymous variables of the entry are
        renamed apart from those of the store."""
        if not is_consistent(store) or store.inconsistent:
            raise InconsistentInitialStore(
                f"initial store {store.render()} is inconsistent"
            )
        agent = self.program.entry if entry is None else entry
        names = set(store.discrete.variables) | store.continuous.domain
        names |= free_variables(agent)
        supply = _Supply(_max_suffix(names) + 1)
        anonymous = sorted(n for n in free_variables(agent) if n.startswith("_"))
        agent = rename(agent, {n: supply.fresh(Var(n)) for n in anonymous})
        return Configuration(agent, store, supply.next_free)

    # per-agent options

    def agent_options(self, cfg):
        return self._options(cfg.agent, cfg.store, _Supply(cfg.fresh))

    def _options(self, agent, store, supply):
        if isinstance(agent, Stop):
            return StepOptions()
        if isinstance(agent, Tell):
            return StepOptions((Move(STOP, told=agent.constraint),))
        if isinstance(agent, Change):
            return StepOptions((self._change(agent, store),))
        if isinstance(agent, Call):
            return StepOptions((Move(self._expand(agent, supply)),))
        if isinstance(agent, Choice):
            return self._choice(agent, store)
        if isinstance(agent, Now):
            return self._now(agent, store, supply)
        if isinstance(agent, Hide):
            return self._hide(agent, store, supply)
        if isinstance(agent, Parallel):
            return self._compose(agent, store, supply)
        raise TypeError(f"not an agent: {agent!r}")

    def _change(self, agent, store):
        name = agent.var.name
        value, flow = agent.value, agent.flow
        if value is KEEP or flow is KEEP:
            if name not in store.continuous:
                raise NoCurrentValue(name)
            current = store.continuous[name]
            value = current.value if value is KEEP else value
            flow = current.flow if flow is KEEP else flow
        delta = cstore.ContinuousStore.from_mapping({name: (value, flow)})
        return Move(STOP, delta=delta)

    def _expand(self, call, supply):
        declaration = self.program.get(call.name)
        if declaration is None or declaration.arity != len(call.args):
            raise MissingDeclaration(call.name, len(call.args))
        mapping = {p.name: a for p, a in zip(declaration.params, call.args)}
        for name in self._locals[call.name]:
            mapping[name] = supply.fresh(Var(name))
        logger.debug("expanding %s", declaration.signature)
        return rename(declaration.body, mapping)

    def _choice(self, agent, store):
        moves = tuple(
            Move(branch.body, guards=(branch.guard,))
            for branch in agent.asks
            if hentails(store, branch.guard)
        )
        bound = None
        for invariant in agent.casks:
            bound = looser(bound, max_duration(store, invariant))
        continuous = ContinuousOption(bound, agent) if bound is not None else None
        return StepOptions(moves, continuous)

    def _now(self, agent, store, supply):
        if hentails(store, agent.cond):
            chosen = agent.then
            cap = max_duration(store, agent.cond)
        else:
            chosen = agent.orelse
            cap = entailment_onset(store, agent.cond)
        options = self._options(chosen, store, supply)
        if options.blocked:
            return StepOptions((Move(chosen),))
        continuous = options.continuous
        if continuous is not None:
            bound = tighter(continuous.bound, cap)
            continuous = None
            if bound is not None:
                continuous = ContinuousOption(bound, options.continuous.residual)
        return StepOptions(options.discrete, continuous)

    def _hide(self, agent, store, supply):
        if not agent.opened:
            fresh = tuple(supply.fresh(v) for v in agent.variables)
            body = rename(
                agent.body, {v.name: f for v, f in zip(agent.variables, fresh)}
            )
            return StepOptions((Move(Hide(fresh, body, agent.local, True)),))
        names = [v.name for v in agent.variables]
        local = agent.local
        combined = HybridStore(
            conjoin(local.discrete, hide_many(names, store.discrete)),
            cstore.merge(
                local.continuous, cstore.hide_cont_many(names, store.continuous)
            ),
        )
        options = self._options(agent.body, combined, supply)
        moves = tuple(self._lift(agent, move, names) for move in options.discrete)
        continuous = None
        if options.continuous is not None:
            residual = Hide(agent.variables, options.continuous.residual, local, True)
            continuous = ContinuousOption(options.continuous.bound, residual)
        return StepOptions(moves, continuous)

    def _lift(self, agent, move, names):
        local = agent.local
        told_local = conjoin(local.discrete, move.told)
        continuous_local = cstore.update(
            local.continuous, cstore.restrict(move.delta, set(names))
        )
        if move.told.is_true:
            told = TRUE
        else:
            told = hide_many(names, told_local)
        return Move(
            _scope(
                agent.variables, move.agent, HybridStore(told_local, continuous_local)
            ),
            told,
            cstore.hide_cont_many(names, move.delta),
            tuple(hide_many(names, guard) for guard in move.guards),
        )

    def _compose(self, agent, store, supply):
        parts = components(agent)
        options = [self._options(part, store, supply) for part in parts]
        moves = []
        if any(o.discrete for o in options):
            choices = []
            for o in options:
                alternatives = list(o.discrete)
                if not alternatives:
                    alternatives.append(None)
                choices.append(alternatives)
            for combination in itertools.product(*choices):
                fired = [m for m in combination if m is not None]
                if not fired:
                    continue
                delta = cstore.EMPTY
                for move in fired:
                    delta = cstore.merge(delta, move.delta)
                agents = (
                    part if m is None else m.agent
                    for part, m in zip(parts, combination)
                )
                moves.append(
                    Move(
                        _rebuild(agent, agents),
                        conjoin_all(m.told for m in fired),
                        delta,
                        tuple(g for m in fired for g in m.guards),
                    )
                )
        continuous = None
        if all(not o.discrete or o.continuous for o in options) and any(
            o.continuous for o in options
        ):
            bound = UNBOUNDED
            for o in options:
                if o.continuous is not None:
                    bound = tighter(bound, o.continuous.bound)
            residuals = (
                part if o.continuous is None else o.continuous.residual
                for part, o in zip(parts, options)
            )
            continuous = ContinuousOption(bound, _rebuild(agent, residuals))
        return StepOptions(tuple(moves), continuous)

    # global steps

    def compose_options(self, cfg):
        """All global successors of ``cfg``: σ-successors plus one continuous
        option capped so the store stays consistent."""
        if cfg.inconsistent:
            return GlobalOptions(cfg)
        supply = _Supply(cfg.fresh)
        options = self._options(cfg.agent, cfg.store, supply)
        successors = []
        for move in options.discrete:
            store = HybridStore(
                conjoin(cfg.store.discrete, move.told),
                cstore.update(cfg.store.continuous, move.delta),
            )
            inconsistent = store.inconsistent or not is_consistent(store)
            successors.append(
                Successor(
                    Configuration(move.agent, store, supply.next_free, inconsistent),
                    move.guards,
                )
            )
        continuous = options.continuous
        if continuous is not None:
            bound = tighter(continuous.bound, max_duration(cfg.store, TRUE))
            continuous = None
            if bound is not None:
                continuous = ContinuousOption(bound, options.continuous.residual)
        logger.debug(
            "%d discrete successors, continuous %s",
            len(successors),
            continuous.bound.render() if continuous else "none",
        )
        return GlobalOptions(cfg, tuple(successors), continuous)

    def advance(self, options, tau):
        """The configuration reached by letting ``tau`` time units pass."""
        if options.continuous is None or not options.continuous.bound.admits(tau):
            raise ValueError(f"duration {tau} is not admissible here")
        cfg = options.source
        return Configuration(
            _advance(options.continuous.residual, tau),
            project_store(cfg.store, tau),
            cfg.fresh,
        )

    def event_times(self, cfg, horizon=None):
        """Instants at which some active guard or invariant changes status."""
        found = set()
        for store, guards in _active_guards(cfg.agent, cfg.store):
            found.update(event_times(store, guards, horizon))
        return sorted(found)

    def terminal_status(self, cfg):
        if cfg.inconsistent:
            return Terminal.INCONSISTENT
        if isinstance(cfg.agent, Stop):
            return Terminal.SUCCESS
        return Terminal.SUSPENDED

    def observed_store(self, cfg):
        """The global store together with every local store in the agent."""
        discrete, continuous = cfg.store.discrete, cfg.store.continuous
        for local in _local_stores(cfg.agent):
            discrete = conjoin(discrete, local.discrete)
            continuous = cstore.merge(continuous, local.continuous)
        return HybridStore(discrete, continuous)


def _advance(agent, tau):
    if isinstance(agent, Parallel):
        return Parallel(_advance(agent.left, tau), _advance(agent.right, tau))
    if isinstance(agent, Hide) and agent.opened:
        local = HybridStore(
            agent.local.discrete, cstore.project(agent.local.continuous, tau)
        )
        return Hide(agent.variables, _advance(agent.body, tau), local, True)
    return agent


def _active_guards(agent, store):
    if isinstance(agent, Choice):
        guards = [b.guard for b in agent.asks] + list(agent.casks)
        return [(store, guards)]
    if isinstance(agent, Now):
        return (
            [(store, [agent.cond])]
            + _active_guards(agent.then, store)
            + _active_guards(agent.orelse, store)
        )
    if isinstance(agent, Parallel):
        return _active_guards(agent.left, store) + _active_guards(agent.right, store)
    if isinstance(agent, Hide) and agent.opened:
        names = [v.name for v in agent.variables]
        combined = HybridStore(
            conjoin(agent.local.discrete, hide_many(names, store.discrete)),
            cstore.merge(
                agent.local.continuous, cstore.hide_cont_many(names, store.continuous)
            ),
        )
        return _active_guards(agent.body, combined)
    return []


def _local_stores(agent):
    if isinstance(agent, Parallel):
        yield from _local_stores(agent.left)
        yield from _local_stores(agent.right)
    elif isinstance(agent, Hide):
        if agent.opened:
            yield agent.local
        yield from _local_stores(agent.body)
    elif isinstance(agent, Now):
        yield from _local_stores(agent.then)
        yield from _local_stores(agent.orelse)
