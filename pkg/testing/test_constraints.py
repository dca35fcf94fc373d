import random
from fractions import Fraction
from itertools import product

import pytest
from assertpy import assert_that

from hytccp.constraints import Cell
from hytccp.constraints import conjoin
from hytccp.constraints import entails
from hytccp.constraints import FALSE
from hytccp.constraints import hide
from hytccp.constraints import rename
from hytccp.constraints import stream_items
from hytccp.constraints import Sym
from hytccp.constraints import TRUE
from hytccp.constraints import Var
from hytccp.parser import parse_constraint as c

NAMES = ("X", "Y", "Z")
TERM_NAMES = ("S", "R", "T", "U")
ALL_NAMES = NAMES + TERM_NAMES
RELATIONS = ("<=", "<", ">=", ">", "=")


def equivalent(a, b):
    return entails(a, b) and entails(b, a)


def random_atom(rng, names=NAMES):
    coeffs = {name: rng.randint(-2, 2) for name in rng.sample(names, rng.randint(1, 2))}
    if not any(coeffs.values()):
        coeffs[next(iter(coeffs))] = 1
    return coeffs, rng.choice(RELATIONS), rng.randint(-4, 4)


def atom_text(coeffs, op, bound):
    parts = []
    for name, k in coeffs.items():
        if k == 0:
            continue
        if not parts:
            parts.append(f"{k}*{name}")
        else:
            parts.append(f"{'-' if k < 0 else '+'} {abs(k)}*{name}")
    return f"{' '.join(parts)} {op} {bound}"


def random_constraint(rng, size=None, names=NAMES):
    atoms = [random_atom(rng, names) for _ in range(size or rng.randint(1, 3))]
    return atoms, c(" /\\ ".join(atom_text(*atom) for atom in atoms))


def random_term_text(rng):
    stream = rng.choice(("S", "R"))
    tail = rng.choice(("T", "U"))
    kind = rng.randrange(4)
    if kind == 0:
        return f"{stream} = [{rng.choice(('a', 'b', 'X'))}|{tail}]"
    if kind == 1:
        return f"{stream} != [b|{tail}]"
    if kind == 2:
        return f"{stream} = [a|_]"
    return rng.choice(("go", "halt"))


def random_mixed(rng, size=None):
    """Linear, stream, disequation and signal atoms over one namespace."""
    texts = []
    for _ in range(size or rng.randint(1, 3)):
        if rng.random() < 0.5:
            texts.append(atom_text(*random_atom(rng)))
        else:
            texts.append(random_term_text(rng))
    return c(" /\\ ".join(texts))


class TestExamples:
    def test_conjoin_true_drops_weaker_bound(self):
        store = conjoin(c("X > 0 /\\ X > 5 /\\ Y = 9"), TRUE)
        assert_that(store.render()).is_equal_to("X > 5 /\\ Y = 9")

    def test_conjoin_clash_is_false(self):
        assert_that(conjoin(c("X = 0"), c("X = 7")).is_false).is_true()

    def test_conjoin_identity(self):
        store = c("X >= 1 /\\ St = [off|T]")
        assert_that(conjoin(store, TRUE)).is_same_as(store)
        assert_that(conjoin(TRUE, store)).is_same_as(store)

    def test_weakening(self):
        assert_that(entails(c("X > 5 /\\ Y = 9"), c("X > 0"))).is_true()
        assert_that(entails(c("X > 0"), c("X > 5"))).is_false()

    def test_stream_heads_clash(self):
        store = c("St = [off|T]")
        assert_that(entails(store, c("St = [on|_a]"))).is_false()
        assert_that(entails(store, c("St != [on|_a]"))).is_true()
        assert_that(entails(store, c("St = [off|_a]"))).is_true()

    def test_disequation_undecided(self):
        assert_that(entails(c("St = [off|T]"), c("T != [on|_a]"))).is_false()

    def test_hide_substitutes_binding(self):
        hidden = hide("X", c("X = 0 /\\ Y = X /\\ Z > 7"))
        assert_that(hidden.render()).is_equal_to("Y = 0 /\\ Z > 7")
        assert_that(hidden.variables).does_not_contain("X")

    def test_hide_absent_variable(self):
        store = c("Y >= 2")
        assert_that(hide("X", store)).is_same_as(store)

    def test_hide_empty_interval(self):
        assert_that(hide("X", c("X > 2 /\\ X < 1")).is_false).is_true()

    def test_hide_eliminates_linear(self):
        hidden = hide("X", c("Y <= X /\\ X <= 3"))
        assert_that(hidden.render()).is_equal_to("Y <= 3")

    def test_is_false(self):
        assert_that(FALSE.is_false).is_true()
        assert_that(TRUE.is_false).is_false()
        assert_that(c("X = 0 /\\ X = 7").is_false).is_true()

    def test_false_entails_everything(self):
        assert_that(entails(FALSE, c("X = 1"))).is_true()
        assert_that(entails(c("X = 1"), FALSE)).is_false()
        assert_that(entails(c("X = 1"), TRUE)).is_true()

    def test_signals_are_monotone(self):
        store = conjoin(c("go"), c("X = 1"))
        assert_that(store.signals).contains("go")
        assert_that(entails(store, c("go"))).is_true()
        assert_that(entails(store, c("stop_signal"))).is_false()

    def test_told_disequation_becomes_false(self):
        store = c("S != [dng|T]")
        assert_that(store.is_false).is_false()
        assert_that(conjoin(store, c("S = [dng|T]")).is_false).is_true()
        assert_that(conjoin(store, c("S = [safe|T]")).is_false).is_false()

    def test_numeric_binding_reaches_linear_atoms(self):
        assert_that(conjoin(c("T >= 26 /\\ T <= 30"), c("T = 31")).is_false).is_true()
        assert_that(entails(c("T = 29"), c("T <= 30"))).is_true()

    def test_occurs_check(self):
        assert_that(c("L = [a|L]").is_false).is_true()


class TestAnonymousVariables:
    def test_hidden_tails_stay_apart(self):
        hidden_q = hide("X", c("Q = [off|X]"))
        left = hide("X", conjoin(c("St = [on|X]"), hidden_q))
        right = conjoin(hide("X", c("St = [on|X]")), hidden_q)
        assert_that(equivalent(left, right)).is_true()
        assert_that(right.value_of("St").tail).is_not_equal_to(
            right.value_of("Q").tail
        )
        assert_that(entails(right, c("St = [on|_t] /\\ Q = [off|_t]"))).is_false()

    def test_repeated_wildcard_must_agree(self):
        guard = c("S = [a|_w] /\\ R = [b|_w]")
        assert_that(entails(c("S = [a|T] /\\ R = [b|U]"), guard)).is_false()
        assert_that(entails(c("S = [a|T] /\\ R = [b|T]"), guard)).is_true()

    def test_wildcard_in_linear_atom(self):
        assert_that(entails(c("X = 3"), c("X <= _w"))).is_true()
        guard = c("S = [_h|T] /\\ _h <= 3")
        assert_that(entails(c("S = [X|T] /\\ X <= 2"), guard)).is_true()
        assert_that(entails(c("S = [X|T] /\\ X <= 5"), guard)).is_false()
        assert_that(entails(c("S = [a|T]"), guard)).is_false()

    def test_hide_keeps_facts_about_a_stream_head(self):
        hidden = hide("X", c("S = [X|T] /\\ X <= 2"))
        assert_that(hidden.variables).does_not_contain("X")
        assert_that(entails(hidden, c("S = [_h|T] /\\ _h <= 2"))).is_true()
        assert_that(entails(hidden, c("S = [_h|T] /\\ _h <= 1"))).is_false()

    def test_disequation_over_existential_tail(self):
        store = hide("S", conjoin(c("S = [b|_]"), c("S != [b|T]")))
        assert_that(store.is_false).is_false()
        assert_that(entails(store, store)).is_true()
        assert_that(entails(conjoin(store, c("X = 1")), store)).is_true()

    def test_shared_anonymous_names_are_renamed_apart(self):
        store = conjoin(c("S = [a|_k]"), c("R = [b|_k]"))
        assert_that(store.value_of("S").tail).is_not_equal_to(
            store.value_of("R").tail
        )


class TestRendering:
    def test_rationals(self):
        assert_that(c("2*X <= 1").render()).is_equal_to("X <= 1/2")

    def test_streams(self):
        assert_that(c("S = [a,b|T]").render()).is_equal_to("S = [a,b|T]")
        assert_that(c("S = [a,b]").render()).is_equal_to("S = [a,b]")

    def test_hide_anonymous(self):
        store = c("S = [a|_k]")
        assert_that(store.render(hide_anonymous=True)).is_equal_to("S = [a|_]")
        assert_that(store.render()).is_equal_to("S = [a|_k]")

    def test_atoms_sorted(self):
        assert_that(c("go /\\ B = 1 /\\ A = 2").render()).is_equal_to(
            "A = 2 /\\ B = 1 /\\ go"
        )

    def test_stream_items(self):
        store = c("S = [on,off|T]")
        assert_that(stream_items(store.value_of("S"))).is_equal_to(
            [Sym("on"), Sym("off")]
        )
        assert_that(store.value_of("S")).is_instance_of(Cell)

    def test_rename(self):
        renamed = rename(c("X <= 1 /\\ S = [a|T]"), {"X": Var("X#1"), "T": Var("U")})
        assert_that(renamed.render()).is_equal_to("S = [a|U] /\\ X#1 <= 1")


@pytest.mark.parametrize("seed", range(10))
class TestLatticeLaws:
    def test_conjoin_commutative(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng)
            b = random_mixed(rng)
            assert_that(equivalent(conjoin(a, b), conjoin(b, a))).is_true()

    def test_conjoin_associative(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a, b, d = (random_mixed(rng) for _ in range(3))
            left = conjoin(conjoin(a, b), d)
            right = conjoin(a, conjoin(b, d))
            assert_that(equivalent(left, right)).is_true()

    def test_conjoin_idempotent(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng)
            assert_that(equivalent(conjoin(a, a), a)).is_true()

    def test_conjunction_entails_conjuncts(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng)
            b = random_mixed(rng)
            assert_that(entails(conjoin(a, b), a)).is_true()
            assert_that(entails(conjoin(a, b), b)).is_true()


@pytest.mark.parametrize("seed", range(10))
class TestEntailmentPreorder:
    def test_reflexive(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng)
            assert_that(entails(a, a)).is_true()

    def test_transitive(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng, size=3)
            extra = random_mixed(rng, size=1)
            b = hide(rng.choice(ALL_NAMES), a)
            d = hide(rng.choice(ALL_NAMES), b)
            assert_that(entails(a, b)).is_true()
            assert_that(entails(b, d)).is_true()
            assert_that(entails(a, d)).is_true()
            if entails(a, extra) and entails(extra, d):
                assert_that(entails(conjoin(a, extra), d)).is_true()


@pytest.mark.parametrize("seed", range(10))
class TestCylindricAxioms:
    def test_hide_is_weaker(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng)
            assert_that(entails(a, hide(rng.choice(ALL_NAMES), a))).is_true()

    def test_hide_is_monotone(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng)
            extra = random_mixed(rng)
            b = conjoin(a, extra)
            x = rng.choice(ALL_NAMES)
            assert_that(entails(b, a)).is_true()
            assert_that(entails(hide(x, b), hide(x, a))).is_true()

    def test_hide_distributes_over_hidden_conjunct(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng)
            b = random_mixed(rng)
            x = rng.choice(ALL_NAMES)
            left = hide(x, conjoin(a, hide(x, b)))
            right = conjoin(hide(x, a), hide(x, b))
            assert_that(equivalent(left, right)).is_true()

    def test_hide_commutes(self, seed):
        rng = random.Random(seed)
        for _ in range(50):
            a = random_mixed(rng, size=rng.randint(2, 4))
            x, y = rng.sample(ALL_NAMES, 2)
            assert_that(equivalent(hide(x, hide(y, a)), hide(y, hide(x, a)))).is_true()


def _negate(coeffs, op, bound):
    flipped = {name: -k for name, k in coeffs.items()}
    return (flipped, "<" if op == "<=" else "<=", -bound)


def _rows(coeffs, op, bound):
    coeffs = {name: Fraction(k) for name, k in coeffs.items() if k}
    bound = Fraction(bound)
    flipped = {name: -k for name, k in coeffs.items()}
    if op == "<=" or op == "<":
        return [(coeffs, op, bound)]
    if op == ">=":
        return [(flipped, "<=", -bound)]
    if op == ">":
        return [(flipped, "<", -bound)]
    return [(coeffs, "<=", bound), (flipped, "<=", -bound)]


def _fm_satisfiable(rows):
    rows = list(rows)
    for name in NAMES:
        positive = [r for r in rows if r[0].get(name, 0) > 0]
        negative = [r for r in rows if r[0].get(name, 0) < 0]
        rows = [r for r in rows if r[0].get(name, 0) == 0]
        for (p, p_op, p_bound), (n, n_op, n_bound) in product(positive, negative):
            a, b = p[name], -n[name]
            combined = {}
            for var in set(p) | set(n):
                k = p.get(var, 0) * b + n.get(var, 0) * a
                if k and var != name:
                    combined[var] = k
            op = "<" if "<" in (p_op, n_op) else "<="
            rows.append((combined, op, p_bound * b + n_bound * a))
    for coeffs, op, bound in rows:
        assert not any(coeffs.values())
        if op == "<=" and bound < 0:
            return False
        if op == "<" and bound <= 0:
            return False
    return True


def _oracle_entails(store_atoms, goal):
    rows = [row for atom in store_atoms for row in _rows(*atom)]
    # an equation is refuted on either side
    complements = [_negate(*row) for row in _rows(*goal)]
    return not any(_fm_satisfiable(rows + [row]) for row in complements)


@pytest.mark.parametrize("seed", range(20))
def test_linear_entailment_agrees_with_oracle(seed):
    rng = random.Random(1000 + seed)
    for _ in range(50):
        size = rng.randint(1, 6)
        store_atoms, store = random_constraint(rng, size=size)
        goal = random_atom(rng)
        expected = _oracle_entails(store_atoms, goal)
        assert_that(entails(store, c(atom_text(*goal)))).is_equal_to(expected)
