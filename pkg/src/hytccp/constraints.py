# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""The discrete constraint system.

Constraints are finite conjunctions of atoms over two sorts that share one
variable namespace: linear relations over the rationals and Herbrand terms
built from symbols, numbers and list cells (streams). Signals are nullary
atoms such as ``go``.

Every :class:`Constraint` is kept in a solved form. Term equations are
solved by unification with occurs check, bindings of variables to numbers
are substituted into the linear atoms, and the linear part is checked with
Fourier-Motzkin elimination and stored without redundant atoms. Variables
whose name starts with ``_`` are anonymous: they are existential inside a
store and act as wildcards inside a guard.
"""
from dataclasses import dataclass
from dataclasses import field
from fractions import Fraction
from functools import cached_property

from . import linear as lin
from .linear import Linear


@dataclass(frozen=True)
class Var:
    name: str
    continuous: bool = field(default=False, compare=False)

    @property
    def anonymous(self):
        return self.name.startswith("_")


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Cell:
    head: object
    tail: object


@dataclass(frozen=True)
class Nil:
    pass


NIL = Nil()


@dataclass(frozen=True)
class Eq:
    left: object
    right: object


@dataclass(frozen=True)
class Neq:
    left: object
    right: object


@dataclass(frozen=True)
class Signal:
    name: str


def render_term(term, hide_anonymous=False):
    if isinstance(term, Var):
        return "_" if hide_anonymous and term.anonymous else term.name
    if isinstance(term, Num):
        return lin.render_rational(term.value)
    if isinstance(term, Sym):
        return term.name
    if isinstance(term, Nil):
        return "[]"
    items = []
    while isinstance(term, Cell):
        items.append(render_term(term.head, hide_anonymous))
        term = term.tail
    if isinstance(term, Nil):
        return f"[{','.join(items)}]"
    return f"[{','.join(items)}|{render_term(term, hide_anonymous)}]"


def render_atom(atom, hide_anonymous=False):
    if isinstance(atom, Eq):
        left = render_term(atom.left, hide_anonymous)
        return f"{left} = {render_term(atom.right, hide_anonymous)}"
    if isinstance(atom, Neq):
        left = render_term(atom.left, hide_anonymous)
        return f"{left} != {render_term(atom.right, hide_anonymous)}"
    if isinstance(atom, Signal):
        return atom.name
    if hide_anonymous:
        return atom.render(lambda name: "_" if name.startswith("_") else name)
    return atom.render()


def term_variables(term):
    found = set()
    stack = [term]
    while stack:
        term = stack.pop()
        if isinstance(term, Var):
            found.add(term.name)
        elif isinstance(term, Cell):
            stack.extend((term.head, term.tail))
    return found


def atom_variables(atom):
    if isinstance(atom, (Eq, Neq)):
        return term_variables(atom.left) | term_variables(atom.right)
    if isinstance(atom, Signal):
        return set()
    return set(atom.variables)


def map_term(term, image):
    """Rebuild ``term`` replacing each variable ``v`` by ``image(v)``."""
    if isinstance(term, Var):
        replaced = image(term)
        return term if replaced is None else replaced
    if isinstance(term, Cell):
        return Cell(map_term(term.head, image), map_term(term.tail, image))
    return term


def map_atom(atom, image):
    if isinstance(atom, Eq):
        return Eq(map_term(atom.left, image), map_term(atom.right, image))
    if isinstance(atom, Neq):
        return Neq(map_term(atom.left, image), map_term(atom.right, image))
    if isinstance(atom, Signal):
        return atom
    mapping = {}
    for name in atom.variables:
        replaced = image(Var(name))
        if isinstance(replaced, Var):
            mapping[name] = replaced.name
        elif isinstance(replaced, Num):
            mapping[name] = replaced.value
    return atom.substitute(mapping) if mapping else atom


def _numeric(term):
    return isinstance(term, (Var, Num))


def _affine(term):
    if isinstance(term, Var):
        return {term.name: Fraction(1)}, Fraction(0)
    return {}, term.value


def numeric_equation(left, right, op=lin.EQ):
    """The linear atom ``left op right`` for two numeric terms."""
    left_terms, left_constant = _affine(left)
    right_terms, right_constant = _affine(right)
    terms = dict(left_terms)
    for name, c in right_terms.items():
        terms[name] = terms.get(name, 0) - c
    return Linear.make(terms, op, right_constant - left_constant)


class _Solver:
    def __init__(self, bindings=None):
        self.bindings = dict(bindings or {})

    def copy(self):
        return _Solver(self.bindings)

    def walk(self, term):
        while isinstance(term, Var) and term.name in self.bindings:
            term = self.bindings[term.name]
        return term

    def expand(self, term):
        term = self.walk(term)
        if not isinstance(term, Cell):
            return term
        heads = []
        while isinstance(term, Cell):
            heads.append(self.expand(term.head))
            term = self.walk(term.tail)
        result = term
        for head in reversed(heads):
            result = Cell(head, result)
        return result

    def occurs(self, name, term):
        stack = [term]
        while stack:
            term = self.walk(stack.pop())
            if isinstance(term, Var) and term.name == name:
                return True
            if isinstance(term, Cell):
                stack.extend((term.head, term.tail))
        return False

    def unify(self, left, right):
        stack = [(left, right)]
        while stack:
            a, b = stack.pop()
            a = self.walk(a)
            b = self.walk(b)
            if a == b:
                continue
            if isinstance(a, Var) and isinstance(b, Var):
                keep, drop = sorted((a, b), key=lambda v: (v.anonymous, v.name))
                self.bindings[drop.name] = keep
            elif isinstance(a, Var) or isinstance(b, Var):
                var, value = (a, b) if isinstance(a, Var) else (b, a)
                if self.occurs(var.name, value):
                    return False
                self.bindings[var.name] = value
            elif isinstance(a, Cell) and isinstance(b, Cell):
                stack.append((a.tail, b.tail))
                stack.append((a.head, b.head))
            else:
                return False
        return True

    def linear(self, atom):
        """Rewrite a linear atom through the bindings; ``False`` on a sort clash."""
        mapping = {}
        for name in atom.variables:
            term = self.walk(Var(name))
            if isinstance(term, Var):
                if term.name != name:
                    mapping[name] = term.name
            elif isinstance(term, Num):
                mapping[name] = term.value
            else:
                return False
        return atom.substitute(mapping) if mapping else atom


@dataclass
class _Solved:
    solver: _Solver
    linear: list
    disequations: list
    signals: frozenset


def _solve(atoms):
    solver = _Solver()
    linear, disequations, signals = [], [], set()
    for atom in atoms:
        if isinstance(atom, Eq):
            if not solver.unify(atom.left, atom.right):
                return None
        elif isinstance(atom, Neq):
            disequations.append(atom)
        elif isinstance(atom, Signal):
            signals.add(atom.name)
        else:
            linear.append(atom)
    while True:
        current = []
        changed = False
        for atom in linear:
            atom = solver.linear(atom)
            if atom is False:
                return None
            if atom is True:
                continue
            binding = _as_binding(atom)
            if binding is not None:
                if not solver.unify(*binding):
                    return None
                changed = True
                continue
            current.append(atom)
        linear = current
        if not changed:
            break
    if not lin.satisfiable(linear):
        return None
    linear = lin.irredundant(linear)
    kept = []
    for atom in disequations:
        verdict = _disequal(solver, linear, atom.left, atom.right)
        if verdict is None:
            return None
        if not verdict:
            kept.append(Neq(solver.expand(atom.left), solver.expand(atom.right)))
    return _Solved(solver, linear, kept, frozenset(signals))


def _as_binding(atom):
    # x = b and x - y = 0 become unifier bindings
    if atom.op != lin.EQ:
        return None
    if len(atom.coeffs) == 1:
        return Var(atom.coeffs[0][0]), Num(atom.bound)
    if len(atom.coeffs) == 2 and atom.bound == 0:
        (x, a), (y, b) = atom.coeffs
        if a == -b:
            return Var(x), Var(y)
    return None


def _disequal(solver, linear, left, right):
    """True if ``left != right`` is entailed, None if refuted, else False."""
    trial = solver.copy()
    if not trial.unify(left, right):
        return True
    added = {k: v for k, v in trial.bindings.items() if k not in solver.bindings}
    if not added:
        return None
    rewritten = [trial.linear(atom) for atom in linear]
    if any(atom is False for atom in rewritten):
        return True
    if not lin.satisfiable(a for a in rewritten if a is not True):
        return True
    for name, value in added.items():
        if not _numeric(value):
            return False
        equation = solver.linear(numeric_equation(Var(name), value))
        if equation is False:
            return True
        if equation is not True and not lin.entails(linear, equation):
            return False
    return None


def _sort_key(atom):
    return render_atom(atom)


@dataclass(frozen=True)
class Constraint:
    """A conjunction of atoms in solved form; build it with :meth:`of`."""

    atoms: tuple = ()
    false: bool = False

    @classmethod
    def of(cls, atoms):
        atoms = list(atoms)
        if any(atom is False for atom in atoms):
            return FALSE
        atoms = [atom for atom in atoms if atom is not True]
        if not atoms:
            return TRUE
        solved = _solve(atoms)
        if solved is None:
            return FALSE
        solver = solved.solver
        canonical = []
        for name in solver.bindings:
            if not name.startswith("_"):
                canonical.append(Eq(Var(name), solver.expand(Var(name))))
        canonical.extend(solved.linear)
        canonical.extend(solved.disequations)
        canonical.extend(Signal(name) for name in solved.signals)
        unique = {_sort_key(atom): atom for atom in canonical}
        constraint = cls(tuple(unique[key] for key in sorted(unique)))
        constraint.__dict__["_solved"] = solved
        return constraint

    @cached_property
    def _solved(self):
        return _solve(self.atoms)

    @cached_property
    def variables(self):
        names = set()
        for atom in self.atoms:
            names |= atom_variables(atom)
        return frozenset(names)

    @property
    def is_false(self):
        return self.false

    @property
    def is_true(self):
        return not self.false and not self.atoms

    @property
    def signals(self):
        return frozenset() if self.false else self._solved.signals

    def value_of(self, name):
        """The fully resolved term bound to ``name`` (the variable if free)."""
        return self._solved.solver.expand(Var(name))

    def numeric_atoms(self):
        """The linear view: linear atoms plus every numeric binding."""
        solved = self._solved
        atoms = list(solved.linear)
        for name in solved.solver.bindings:
            value = solved.solver.walk(Var(name))
            if _numeric(value):
                atoms.append(numeric_equation(Var(name), value))
        return atoms

    def render(self, hide_anonymous=False):
        if self.false:
            return "false"
        if not self.atoms:
            return "true"
        return " /\\ ".join(render_atom(a, hide_anonymous) for a in self.atoms)

    def __str__(self):
        return self.render()


TRUE = Constraint()
FALSE = Constraint(false=True)


def conjoin(c, d):
    if c.false or d.false:
        return FALSE
    if not d.atoms:
        return c
    if not c.atoms:
        return d
    return Constraint.of(c.atoms + _apart(c, d).atoms)


def _apart(c, d):
    """``d`` with the anonymous variables it shares with ``c`` renamed."""
    clash = sorted(n for n in d.variables if n.startswith("_") and n in c.variables)
    if not clash:
        return d
    taken = set(c.variables) | set(d.variables)
    mapping = {}
    for name in clash:
        fresh = _fresh_anonymous(name, taken)
        taken.add(fresh)
        mapping[name] = Var(fresh)
    return rename(d, mapping)


def conjoin_all(constraints):
    result = TRUE
    for constraint in constraints:
        result = conjoin(result, constraint)
    return result


def entails(c, d):
    """``c |- d``; the anonymous variables of ``d`` are existential."""
    if c.false:
        return True
    if d.false:
        return False
    if not d.atoms:
        return True
    d = _apart(c, d)
    solved = c._solved
    wildcards = {n for n in d.variables if n.startswith("_")}
    theta = {}
    for atom in d.atoms:
        if isinstance(atom, Signal) and atom.name not in solved.signals:
            return False
        if isinstance(atom, Eq) and not _matches(
            solved, atom.left, atom.right, wildcards, theta
        ):
            return False
    for atom in d.atoms:
        if isinstance(atom, Neq) and not _entails_disequation(
            c, solved, atom, wildcards, theta
        ):
            return False
    closed, open_ = [], []
    for atom in d.atoms:
        if not isinstance(atom, Linear):
            continue
        bound = _bind_linear(atom, theta)
        if bound is False:
            return False
        if bound is True:
            continue
        (open_ if set(bound.variables) & wildcards else closed).append(bound)
    if open_:
        keep = {n for a in open_ for n in a.variables} - wildcards
        projected = lin.project(open_, keep)
        if projected is None:
            return False
        closed.extend(projected)
    for atom in closed:
        rewritten = solved.solver.linear(atom)
        if rewritten is False or not lin.entails(solved.linear, rewritten):
            return False
    return True


def _entails_disequation(c, solved, atom, wildcards, theta):
    eq = Eq(_bind(atom.left, theta), _bind(atom.right, theta))
    if conjoin(c, Constraint.of([eq])).false:
        return True
    # a disequation the store keeps over its own existential variables
    for kept in solved.disequations:
        for left, right in ((kept.left, kept.right), (kept.right, kept.left)):
            trial = dict(theta)
            if _matches(solved, atom.left, left, wildcards, trial) and _matches(
                solved, atom.right, right, wildcards, trial
            ):
                theta.update(trial)
                return True
    return False


def _bind(term, theta):
    def image(var):
        return _bind(theta[var.name], theta) if var.name in theta else None

    return map_term(term, image)


def _bind_linear(atom, theta):
    mapping = {}
    for name in atom.variables:
        if name not in theta:
            continue
        term = _bind(Var(name), theta)
        if isinstance(term, Var):
            mapping[name] = term.name
        elif isinstance(term, Num):
            mapping[name] = term.value
        else:
            return False
    return atom.substitute(mapping) if mapping else atom


def _matches(solved, left, right, wildcards, theta):
    # one-way matching: wildcards take the store's terms, recorded in theta
    solver = solved.solver

    def resolve(term):
        while isinstance(term, Var):
            if term.name in theta:
                term = theta[term.name]
            elif term.name in solver.bindings:
                term = solver.bindings[term.name]
            else:
                break
        return term

    stack = [(left, right)]
    while stack:
        a, b = stack.pop()
        a = resolve(a)
        b = resolve(b)
        if a == b:
            continue
        if isinstance(a, Var) and a.name in wildcards:
            theta[a.name] = b
            continue
        if isinstance(b, Var) and b.name in wildcards:
            theta[b.name] = a
            continue
        if isinstance(a, Cell) and isinstance(b, Cell):
            stack.append((a.tail, b.tail))
            stack.append((a.head, b.head))
            continue
        if _numeric(a) and _numeric(b):
            equation = numeric_equation(a, b)
            if isinstance(equation, bool):
                if equation:
                    continue
                return False
            if lin.entails(solved.linear, equation):
                continue
        return False
    return True


def _fresh_anonymous(name, taken):
    base = name.lstrip("_")
    index = 1
    while f"_{base}#{index}" in taken:
        index += 1
    return f"_{base}#{index}"


def hide(name, c):
    return hide_many([name], c)


def hide_many(names, c):
    """Existentially quantify ``names`` away from ``c``."""
    if c.false or not c.atoms:
        return c
    names = sorted(set(names) & c.variables)
    if not names:
        return c
    atoms = list(c.atoms)
    taken = set(c.variables)
    for name in names:
        atoms = _hide_one(name, atoms, taken)
        if atoms is None:
            return FALSE
    return Constraint.of(atoms)


def _hide_one(name, atoms, taken):
    target = Var(name)
    binding = None
    aliases = []
    for atom in atoms:
        if isinstance(atom, Eq) and atom.left == target:
            binding = atom
        elif isinstance(atom, Eq) and atom.right == target:
            if isinstance(atom.left, Var):
                aliases.append(atom.left)
    if binding is not None:
        value = binding.right
        rest = [a for a in atoms if a is not binding]
        return _substitute(rest, target, value)
    if aliases:
        keep = min(aliases, key=lambda v: (v.anonymous, v.name))
        return _substitute(atoms, target, keep)
    # disequations on a hidden free variable are dropped
    atoms = [
        a for a in atoms if not (isinstance(a, Neq) and name in atom_variables(a))
    ]
    if any(isinstance(a, Eq) and name in atom_variables(a) for a in atoms):
        fresh = Var(_fresh_anonymous(name, taken))
        taken.add(fresh.name)
        return _substitute(atoms, target, fresh)
    linear_part = [a for a in atoms if isinstance(a, Linear)]
    others = [a for a in atoms if not isinstance(a, Linear)]
    if any(name in a.variables for a in linear_part):
        linear_part = lin.eliminate(linear_part, name)
        if linear_part is None:
            return None
    return [*others, *linear_part]


def _substitute(atoms, target, value):
    result = []
    for atom in atoms:
        if target.name not in atom_variables(atom):
            result.append(atom)
            continue
        mapped = map_atom(atom, lambda v: value if v == target else None)
        if isinstance(mapped, Eq) and mapped.left == mapped.right:
            continue
        result.append(mapped)
    return result


def rename(c, mapping):
    """Rename variables; ``mapping`` sends names to :class:`Var` objects."""
    if c.false or not c.atoms or not (set(mapping) & c.variables):
        return c
    image = mapping.get
    return Constraint.of(
        map_atom(atom, lambda v: image(v.name)) for atom in c.atoms
    )


def variables(c):
    return c.variables


def render(c):
    return c.render()


def stream_items(term):
    """Heads of a (possibly open) list term, in order."""
    items = []
    while isinstance(term, Cell):
        items.append(term.head)
        term = term.tail
    return items
