# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Hybrid stores ``<c || c~>`` and the timing questions asked of them.

Dwell bounds and event times are computed exactly. Every continuous
variable ``x`` is replaced by ``v + f*tau`` in the numeric part of the
store and of the guard, all other variables are projected away with
Fourier-Motzkin, and the surviving single-variable atoms over ``tau`` give
the finitely many instants at which anything can change. Between two such
instants the truth of every guard is constant, so a single exact check per
piece decides it.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from . import cstore
from . import linear as lin
from .constraints import Constraint
from .constraints import conjoin
from .constraints import entails
from .constraints import Eq
from .constraints import Neq
from .constraints import numeric_equation
from .constraints import Num
from .constraints import TRUE
from .constraints import Var

# not a legal variable name, so it cannot clash with program variables
TAU = "#tau"


@dataclass(frozen=True)
class HybridStore:
    discrete: Constraint = TRUE
    continuous: cstore.ContinuousStore = cstore.EMPTY

    @cached_property
    def valued(self):
        """The discrete store plus ``x = value`` for every continuous variable."""
        if self.continuous.inconsistent:
            return Constraint(false=True)
        values = Constraint.of(
            Eq(Var(name, continuous=True), Num(entry.value))
            for name, entry in self.continuous.items()
        )
        return conjoin(self.discrete, values)

    @property
    def inconsistent(self):
        return self.discrete.is_false or self.continuous.inconsistent

    def render(self, hide_anonymous=False):
        continuous = self.continuous.render() or "true~"
        return f"⟨{self.discrete.render(hide_anonymous)} ‖ {continuous}⟩"

    def __str__(self):
        return self.render()


HybridStore.EMPTY = HybridStore()


@dataclass(frozen=True)
class PositiveBound:
    """Admissible dwell times ``(0, tau]``, or ``(0, tau)`` when strict."""

    tau: Fraction
    strict: bool = False

    def admits(self, tau):
        if self.strict:
            return 0 < tau < self.tau
        return 0 < tau <= self.tau

    def render(self):
        return f"{'<' if self.strict else '<='} {lin.render_rational(self.tau)}"


class _Unbounded:
    tau = None
    strict = False

    def admits(self, tau):
        return tau > 0

    def render(self):
        return "unbounded"

    def __repr__(self):
        return "UNBOUNDED"


UNBOUNDED = _Unbounded()


def tighter(a, b):
    """Intersection of two admissible sets; ``None`` stands for the empty set."""
    if a is None or b is None:
        return None
    if a is UNBOUNDED:
        return b
    if b is UNBOUNDED:
        return a
    if a.tau != b.tau:
        return a if a.tau < b.tau else b
    return PositiveBound(a.tau, a.strict or b.strict)


def looser(a, b):
    """Union of two admissible sets."""
    if a is None:
        return b
    if b is None:
        return a
    if a is UNBOUNDED or b is UNBOUNDED:
        return UNBOUNDED
    if a.tau != b.tau:
        return a if a.tau > b.tau else b
    return PositiveBound(a.tau, a.strict and b.strict)


def is_consistent(s):
    return not s.valued.is_false


def hentails(s, d):
    return entails(s.valued, d)


def project_store(s, tau):
    if tau == 0:
        return s
    return HybridStore(s.discrete, cstore.project(s.continuous, tau))


def _flows(s):
    return {
        name: ({TAU: entry.flow}, entry.value)
        for name, entry in s.continuous.items()
    }


def _timed(atoms, flows):
    timed = []
    for atom in atoms:
        atom = atom.substitute(flows)
        if atom is True:
            continue
        if atom is False:
            return None
        timed.append(atom)
    return timed


def _roots(atoms):
    projected = lin.project(atoms, {TAU})
    if projected is None:
        return set()
    return lin.roots(projected, TAU)


def _guard_atoms(d):
    """Numeric atoms of a guard whose truth may depend on time."""
    atoms = list(d.numeric_atoms())
    for atom in d.atoms:
        if isinstance(atom, Neq) and all(
            isinstance(t, (Var, Num)) for t in (atom.left, atom.right)
        ):
            equation = numeric_equation(atom.left, atom.right)
            if not isinstance(equation, bool):
                atoms.append(equation)
    return atoms


def candidate_times(s, guards, consistency=True):
    """Every instant at which a guard or the store's consistency may flip."""
    flows = _flows(s)
    base = _timed(s.discrete.numeric_atoms(), flows)
    if base is None:
        return []
    found = _roots(base) if consistency else set()
    for guard in guards:
        for atom in _guard_atoms(guard):
            for variant in (atom, *atom.negations()):
                variant = _timed([variant], flows)
                if variant:
                    found |= _roots(base + variant)
    return sorted(t for t in found if t > 0)


def _cut(prev):
    return None if prev == 0 else PositiveBound(prev)


def max_duration(s, inv):
    """The supremum of ``tau`` such that ``inv`` holds and ``s`` stays
    consistent at every instant of ``[0, tau]``."""

    def admissible(tau):
        projected = project_store(s, tau)
        return is_consistent(projected) and hentails(projected, inv)

    if not admissible(0):
        return None
    prev = Fraction(0)
    for point in candidate_times(s, [inv]):
        if not admissible((prev + point) / 2):
            return _cut(prev)
        if not admissible(point):
            return PositiveBound(point, strict=True)
        prev = point
    if admissible(prev + 1):
        return UNBOUNDED
    return _cut(prev)


def entailment_onset(s, c):
    """The dwell admissible before ``c`` first becomes entailed."""
    prev = Fraction(0)
    for point in candidate_times(s, [c], consistency=False):
        if hentails(project_store(s, (prev + point) / 2), c):
            return _cut(prev)
        if hentails(project_store(s, point), c):
            return PositiveBound(point)
        prev = point
    if hentails(project_store(s, prev + 1), c):
        return _cut(prev)
    return UNBOUNDED


def event_times(s, guards, horizon=None):
    """Instants in ``(0, horizon]`` at which some guard changes status."""
    guards = list(guards)
    points = candidate_times(s, guards, consistency=False)
    if horizon is not None:
        points = [t for t in points if t <= horizon]

    def status(tau):
        projected = project_store(s, tau)
        return tuple(hentails(projected, g) for g in guards)

    events = []
    for index, point in enumerate(points):
        before = (points[index - 1] if index else Fraction(0)) + point
        after = points[index + 1] if index + 1 < len(points) else point + 2
        at = status(point)
        if status(before / 2) != at or status((point + after) / 2) != at:
            events.append(point)
    return events


def render(s):
    return s.render()
