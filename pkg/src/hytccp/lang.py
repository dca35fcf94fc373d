# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Agents, declarations and programs, plus the pretty-printer."""
import enum
from dataclasses import dataclass
from dataclasses import field
from fractions import Fraction
from typing import Optional
from typing import Tuple
from typing import Union

from . import cstore
from .constraints import Constraint
from .constraints import rename as rename_constraint
from .constraints import Var
from .hstore import HybridStore
from .linear import render_rational


class Keep(enum.Enum):
    """Value or flow left as it currently is, written ``_``."""

    KEEP = "_"

    def __repr__(self):
        return "KEEP"


KEEP = Keep.KEEP


@dataclass(frozen=True)
class Stop:
    pass


STOP = Stop()


@dataclass(frozen=True)
class Tell:
    constraint: Constraint


@dataclass(frozen=True)
class Parallel:
    left: object
    right: object


@dataclass(frozen=True)
class Now:
    cond: Constraint
    then: object
    orelse: object


@dataclass(frozen=True)
class Hide:
    variables: Tuple[Var, ...]
    body: object
    local: HybridStore = HybridStore.EMPTY
    # set once the bound variables have been renamed apart at scope entry
    opened: bool = False


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple[Var, ...] = ()


@dataclass(frozen=True)
class Change:
    var: Var
    value: Union[Fraction, Keep]
    flow: Union[Fraction, Keep]


@dataclass(frozen=True)
class Branch:
    guard: Constraint
    body: object


@dataclass(frozen=True)
class Choice:
    asks: Tuple[Branch, ...] = ()
    casks: Tuple[Constraint, ...] = ()


@dataclass(frozen=True)
class Declaration:
    name: str
    params: Tuple[Var, ...]
    body: object

    @property
    def arity(self):
        return len(self.params)

    @property
    def signature(self):
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class Program:
    declarations: Tuple[Declaration, ...]
    entry: object = Call("init")
    continuous: frozenset = frozenset()
    source: Optional[str] = field(default=None, compare=False)

    def __getitem__(self, name):
        for declaration in self.declarations:
            if declaration.name == name:
                return declaration
        raise KeyError(name)

    def get(self, name):
        try:
            return self[name]
        except KeyError:
            return None

    @property
    def signatures(self):
        return [d.signature for d in self.declarations]


def components(agent):
    """Flatten nested parallel composition, left to right."""
    if isinstance(agent, Parallel):
        return components(agent.left) + components(agent.right)
    return [agent]


def constraints_of(agent):
    """Every constraint that occurs syntactically in ``agent``."""
    if isinstance(agent, Tell):
        yield agent.constraint
    elif isinstance(agent, Parallel):
        yield from constraints_of(agent.left)
        yield from constraints_of(agent.right)
    elif isinstance(agent, Now):
        yield agent.cond
        yield from constraints_of(agent.then)
        yield from constraints_of(agent.orelse)
    elif isinstance(agent, Hide):
        yield from constraints_of(agent.body)
    elif isinstance(agent, Choice):
        for branch in agent.asks:
            yield branch.guard
            yield from constraints_of(branch.body)
        yield from agent.casks


def free_variables(agent):
    if isinstance(agent, (Stop,)):
        return frozenset()
    if isinstance(agent, Tell):
        return agent.constraint.variables
    if isinstance(agent, Parallel):
        return free_variables(agent.left) | free_variables(agent.right)
    if isinstance(agent, Now):
        return (
            agent.cond.variables
            | free_variables(agent.then)
            | free_variables(agent.orelse)
        )
    if isinstance(agent, Hide):
        bound = {v.name for v in agent.variables}
        return free_variables(agent.body) - bound
    if isinstance(agent, Call):
        return frozenset(v.name for v in agent.args)
    if isinstance(agent, Change):
        return frozenset([agent.var.name])
    names = set()
    for branch in agent.asks:
        names |= branch.guard.variables | free_variables(branch.body)
    for invariant in agent.casks:
        names |= invariant.variables
    return frozenset(names)


def rename(agent, mapping):
    """Capture-avoiding renaming; ``mapping`` sends names to :class:`Var`."""
    if not mapping or isinstance(agent, Stop):
        return agent
    if isinstance(agent, Tell):
        return Tell(rename_constraint(agent.constraint, mapping))
    if isinstance(agent, Parallel):
        return Parallel(rename(agent.left, mapping), rename(agent.right, mapping))
    if isinstance(agent, Now):
        return Now(
            rename_constraint(agent.cond, mapping),
            rename(agent.then, mapping),
            rename(agent.orelse, mapping),
        )
    if isinstance(agent, Hide):
        bound = {v.name for v in agent.variables}
        inner = {k: v for k, v in mapping.items() if k not in bound}
        body_free = free_variables(agent.body)
        images = {v.name for k, v in inner.items() if k in body_free}
        clash = bound & images
        if not clash:
            return Hide(
                agent.variables, rename(agent.body, inner), agent.local, agent.opened
            )
        # the binder would capture an image: rename it apart first
        taken = images | body_free | bound | set(inner)
        fresh = {}
        for name in sorted(clash):
            candidate = f"{name}'"
            while candidate in taken:
                candidate += "'"
            taken.add(candidate)
            fresh[name] = candidate
        variables = tuple(
            Var(fresh.get(v.name, v.name), v.continuous) for v in agent.variables
        )
        binders = {v.name: v for v in variables if v.name in fresh.values()}
        alpha = {name: binders[new] for name, new in fresh.items()}
        inner.update(alpha)
        local = HybridStore(
            rename_constraint(agent.local.discrete, alpha),
            cstore.rename_cont(agent.local.continuous, fresh),
        )
        return Hide(variables, rename(agent.body, inner), local, agent.opened)
    if isinstance(agent, Call):
        return Call(agent.name, tuple(mapping.get(v.name, v) for v in agent.args))
    if isinstance(agent, Change):
        return Change(mapping.get(agent.var.name, agent.var), agent.value, agent.flow)
    return Choice(
        tuple(
            Branch(rename_constraint(b.guard, mapping), rename(b.body, mapping))
            for b in agent.asks
        ),
        tuple(rename_constraint(inv, mapping) for inv in agent.casks),
    )


def pretty_agent(agent):
    if isinstance(agent, Stop):
        return "stop"
    if isinstance(agent, Tell):
        return f"tell({agent.constraint.render()})"
    if isinstance(agent, Parallel):
        right = pretty_agent(agent.right)
        if isinstance(agent.right, (Parallel, Choice)):
            right = f"({right})"
        left = pretty_agent(agent.left)
        if isinstance(agent.left, Choice):
            left = f"({left})"
        return f"{left} || {right}"
    if isinstance(agent, Now):
        return (
            f"now {agent.cond.render()} then {_primary(agent.then)}"
            f" else {_primary(agent.orelse)}"
        )
    if isinstance(agent, Hide):
        names = ", ".join(v.name for v in agent.variables)
        return f"exists {names} ({pretty_agent(agent.body)})"
    if isinstance(agent, Call):
        if not agent.args:
            return agent.name
        return f"{agent.name}({', '.join(v.name for v in agent.args)})"
    if isinstance(agent, Change):
        value = _number(agent.value)
        return f"change({agent.var.name}, {value}, {_number(agent.flow)})"
    branches = [
        f"ask({b.guard.render()}) -> {_primary(b.body)}" for b in agent.asks
    ]
    branches += [f"cask({inv.render()})" for inv in agent.casks]
    return " + ".join(branches)


def _primary(agent):
    text = pretty_agent(agent)
    if isinstance(agent, (Parallel, Choice)):
        return f"({text})"
    return text


def _number(value):
    if value is KEEP:
        return "_"
    return render_rational(value)


def pretty(program):
    lines = []
    if program.continuous:
        lines.append(f"cvar {', '.join(sorted(program.continuous))}.")
    for declaration in program.declarations:
        head = declaration.name
        if declaration.params:
            head += f"({', '.join(v.name for v in declaration.params)})"
        lines.append(f"{head} :-\n    {pretty_agent(declaration.body)}.")
    return "\n".join(lines) + "\n"
