# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""Linear rational arithmetic.

A :class:`Linear` atom is ``sum(c_i * x_i) op bound`` with exact
:class:`~fractions.Fraction` coefficients and ``op`` one of ``=``, ``<=``
or ``<``. Relations written with ``>=`` or ``>`` are negated on
construction, and every atom is scaled so that its first coefficient is
``1`` or ``-1``. Satisfiability and projection use Fourier-Motzkin
elimination, which is plenty for the handful of atoms a store holds.
"""
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

EQ = "="
LE = "<="
LT = "<"

_FLIPPED = {">=": LE, ">": LT}


@dataclass(frozen=True, order=True)
class Linear:
    coeffs: tuple
    op: str
    bound: Fraction

    @classmethod
    def make(cls, coeffs, op, bound):
        """Normalise ``sum(coeffs) op bound``.

        Returns a :class:`Linear`, or a plain ``bool`` when no variable is
        left after cancelling zero coefficients.
        """
        terms = {name: Fraction(c) for name, c in coeffs.items() if c != 0}
        bound = Fraction(bound)
        if op in _FLIPPED:
            terms = {name: -c for name, c in terms.items()}
            bound = -bound
            op = _FLIPPED[op]
        if not terms:
            return _holds(op, bound)
        first = terms[min(terms)]
        scale = first if op == EQ else abs(first)
        return cls(
            tuple(sorted((name, c / scale) for name, c in terms.items())),
            op,
            bound / scale,
        )

    @property
    def variables(self):
        return frozenset(name for name, _ in self.coeffs)

    def coefficient(self, name):
        for var, c in self.coeffs:
            if var == name:
                return c
        return Fraction(0)

    def negations(self):
        """Atoms whose disjunction is the complement of this one."""
        terms = dict(self.coeffs)
        if self.op == EQ:
            return [
                Linear.make(terms, LT, self.bound),
                Linear.make(terms, ">", self.bound),
            ]
        flipped = ">" if self.op == LE else ">="
        return [Linear.make(terms, flipped, self.bound)]

    def substitute(self, mapping):
        """Replace variables by affine expressions.

        ``mapping`` sends a variable name to ``(coeffs, constant)``; a bare
        Fraction is accepted as a constant and a string as a renaming.
        """
        terms = {}
        bound = self.bound
        for name, c in self.coeffs:
            if name not in mapping:
                terms[name] = terms.get(name, 0) + c
                continue
            image = mapping[name]
            if isinstance(image, str):
                terms[image] = terms.get(image, 0) + c
                continue
            if isinstance(image, (int, Fraction)):
                image = ({}, image)
            sub_terms, constant = image
            for var, k in sub_terms.items():
                terms[var] = terms.get(var, 0) + c * k
            bound -= c * constant
        return Linear.make(terms, self.op, bound)

    def render(self, name_of=None):
        coeffs = self.coeffs
        if name_of is not None:
            coeffs = tuple((name_of(name), c) for name, c in coeffs)
        op = self.op
        bound = self.bound
        if op != EQ and coeffs[0][1] < 0:
            coeffs = tuple((name, -c) for name, c in coeffs)
            bound = -bound
            op = ">=" if op == LE else ">"
        return f"{render_sum(coeffs)} {op} {render_rational(bound)}"


def render_rational(value):
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def render_sum(coeffs):
    parts = []
    for index, (name, c) in enumerate(coeffs):
        sign = "-" if c < 0 else "+"
        magnitude = abs(c)
        term = name if magnitude == 1 else f"{render_rational(magnitude)}*{name}"
        if index == 0:
            parts.append(term if sign == "+" else f"-{term}")
        else:
            parts.append(f"{sign} {term}")
    return " ".join(parts)


def _holds(op, bound):
    # 0 op bound
    if op == EQ:
        return bound == 0
    if op == LE:
        return 0 <= bound
    return 0 < bound


def _combine(upper, lower, name):
    # upper has a positive coefficient for name, lower a negative one
    a = upper.coefficient(name)
    b = -lower.coefficient(name)
    terms = {}
    for var, c in upper.coeffs:
        terms[var] = terms.get(var, 0) + c * b
    for var, c in lower.coeffs:
        terms[var] = terms.get(var, 0) + c * a
    op = LT if LT in (upper.op, lower.op) else LE
    return Linear.make(terms, op, upper.bound * b + lower.bound * a)


def eliminate(atoms, name):
    """Project ``name`` out of a conjunction of atoms.

    Returns the resulting atom set, or ``None`` when a ground
    contradiction shows up on the way.
    """
    atoms = set(atoms)
    equalities = sorted(a for a in atoms if a.op == EQ and name in a.variables)
    if equalities:
        pivot = equalities[0]
        c = pivot.coefficient(name)
        rest = {var: -k / c for var, k in pivot.coeffs if var != name}
        image = (rest, pivot.bound / c)
        return _collect(
            a.substitute({name: image}) for a in atoms if a is not pivot
        )
    upper, lower, keep = [], [], []
    for atom in atoms:
        c = atom.coefficient(name)
        if c > 0:
            upper.append(atom)
        elif c < 0:
            lower.append(atom)
        else:
            keep.append(atom)
    combined = (_combine(u, l, name) for u, l in product(upper, lower))
    return _collect([*keep, *combined])


def _collect(atoms):
    result = set()
    for atom in atoms:
        if atom is True:
            continue
        if atom is False:
            return None
        result.add(atom)
    return result


def project(atoms, keep):
    """Eliminate every variable not in ``keep``; ``None`` if unsatisfiable."""
    current = _collect(atoms)
    if current is None:
        return None
    while True:
        names = sorted({n for a in current for n in a.variables} - set(keep))
        if not names:
            return current
        current = eliminate(current, names[0])
        if current is None:
            return None


def satisfiable(atoms):
    return project(atoms, ()) is not None


def entails(atoms, atom):
    """True when every rational solution of ``atoms`` satisfies ``atom``."""
    if atom is True:
        return True
    if not satisfiable(atoms):
        return True
    if atom is False:
        return False
    atoms = list(atoms)
    return not any(satisfiable([*atoms, n]) for n in atom.negations())


def irredundant(atoms):
    """Drop atoms implied by the others, keeping the sorted-first survivor."""
    kept = sorted(set(atoms))
    index = len(kept) - 1
    while index >= 0:
        others = kept[:index] + kept[index + 1 :]
        if others and entails(others, kept[index]):
            kept = others
        index -= 1
    return kept


def roots(atoms, name):
    """Values of ``name`` at which a single-variable atom changes truth."""
    found = set()
    for atom in atoms:
        if atom.variables == {name}:
            found.add(atom.bound / atom.coeffs[0][1])
    return found
