import random
from fractions import Fraction

import pytest
from assertpy import assert_that

from hytccp.constraints import TRUE
from hytccp.cstore import ContinuousStore
from hytccp.hstore import entailment_onset
from hytccp.hstore import event_times
from hytccp.hstore import hentails
from hytccp.hstore import HybridStore
from hytccp.hstore import is_consistent
from hytccp.hstore import looser
from hytccp.hstore import max_duration
from hytccp.hstore import PositiveBound
from hytccp.hstore import project_store
from hytccp.hstore import tighter
from hytccp.hstore import UNBOUNDED
from hytccp.parser import parse_constraint as c

EPSILON = Fraction(1, 10**6)


def hybrid(discrete="true", **continuous):
    return HybridStore(c(discrete), ContinuousStore.from_mapping(continuous))


class TestConsistency:
    def test_initial_cooler_store(self):
        s = hybrid("T >= 26 /\\ T <= 30", T=(29, 2))
        assert_that(is_consistent(s)).is_true()

    def test_value_outside_bounds(self):
        s = hybrid("T >= 26 /\\ T <= 30", T=(31, 2))
        assert_that(is_consistent(s)).is_false()

    def test_empty(self):
        assert_that(is_consistent(HybridStore.EMPTY)).is_true()


class TestEntailment:
    def test_guard_at_boundary(self):
        s = hybrid("St = [off|_a]", T=(30, 2))
        assert_that(hentails(s, c("St = [off|_b] /\\ T = 30"))).is_true()

    def test_value_mismatch(self):
        assert_that(hentails(hybrid(T=(29, 2)), c("T = 30"))).is_false()

    def test_true(self):
        assert_that(hentails(hybrid(T=(29, 2)), TRUE)).is_true()


class TestProjection:
    def test_discrete_part_unchanged(self):
        s = hybrid("X > 10", Y=(2, 5))
        projected = project_store(s, 3)
        assert_that(projected.discrete).is_equal_to(s.discrete)
        assert_that(projected.continuous).is_equal_to(
            ContinuousStore.from_mapping({"Y": (17, 5)})
        )

    def test_zero(self):
        s = hybrid(Y=(2, 5))
        assert_that(project_store(s, 0)).is_same_as(s)

    def test_first_cooler_dwell(self):
        s = hybrid("T >= 26 /\\ T <= 30", T=(29, 2))
        projected = project_store(s, Fraction(1, 2))
        assert_that(projected.continuous["T"].value).is_equal_to(30)


class TestMaxDuration:
    def test_heating(self):
        s = hybrid("St = [off|_a] /\\ T >= 26 /\\ T <= 30", T=(29, 2))
        bound = max_duration(s, c("St = [off|_b] /\\ T <= 30"))
        assert_that(bound).is_equal_to(PositiveBound(Fraction(1, 2)))

    def test_cooling(self):
        s = hybrid("St = [on|_a] /\\ T >= 26 /\\ T <= 30", T=(30, Fraction(-1, 2)))
        bound = max_duration(s, c("St = [on|_b] /\\ T >= 26"))
        assert_that(bound).is_equal_to(PositiveBound(Fraction(8)))

    def test_unbounded(self):
        assert_that(max_duration(hybrid(X=(0, 0)), c("X <= 1"))).is_same_as(UNBOUNDED)

    def test_false_at_start(self):
        assert_that(max_duration(hybrid(X=(2, 1)), c("X <= 1"))).is_none()

    def test_only_at_start(self):
        assert_that(max_duration(hybrid(X=(1, 1)), c("X <= 1"))).is_none()

    def test_strict(self):
        bound = max_duration(hybrid(X=(0, 1)), c("X < 1"))
        assert_that(bound).is_equal_to(PositiveBound(Fraction(1), strict=True))
        assert_that(bound.admits(Fraction(1))).is_false()
        assert_that(bound.admits(Fraction(99, 100))).is_true()

    def test_consistency_caps_dwell(self):
        s = hybrid("X <= 4", X=(0, 1))
        assert_that(max_duration(s, TRUE)).is_equal_to(PositiveBound(Fraction(4)))

    def test_discrete_guard(self):
        s = hybrid("go", X=(0, 1))
        assert_that(max_duration(s, c("go"))).is_same_as(UNBOUNDED)
        assert_that(max_duration(s, c("halt"))).is_none()


class TestEventTimes:
    def test_mouse_halfway(self):
        s = hybrid(M=(0, 10))
        assert_that(event_times(s, [c("M = 50")])).is_equal_to([Fraction(5)])

    def test_horizon(self):
        s = hybrid(T=(29, 2))
        events = event_times(s, [c("T = 30")], horizon=Fraction(10))
        assert_that(events).is_equal_to([Fraction(1, 2)])

    def test_beyond_horizon(self):
        s = hybrid(T=(29, 2))
        assert_that(event_times(s, [c("T = 40")], horizon=Fraction(1))).is_empty()

    def test_time_invariant_guards(self):
        s = hybrid("go", X=(0, 1))
        assert_that(event_times(s, [c("go"), c("halt")])).is_empty()

    def test_several_guards(self):
        s = hybrid(X=(0, 1), Y=(10, -1))
        events = event_times(s, [c("X >= 2"), c("Y <= 4")])
        assert_that(events).is_equal_to([Fraction(2), Fraction(6)])


def test_entailment_onset():
    s = hybrid(X=(0, 1))
    assert_that(entailment_onset(s, c("X >= 2"))).is_equal_to(PositiveBound(2))
    assert_that(entailment_onset(s, c("X >= -1"))).is_none()
    assert_that(entailment_onset(s, c("Y = 1"))).is_same_as(UNBOUNDED)


def test_bounds_algebra():
    short, long = PositiveBound(Fraction(1)), PositiveBound(Fraction(2))
    assert_that(tighter(short, long)).is_equal_to(short)
    assert_that(tighter(UNBOUNDED, long)).is_equal_to(long)
    assert_that(tighter(short, None)).is_none()
    assert_that(looser(short, long)).is_equal_to(long)
    assert_that(looser(None, short)).is_equal_to(short)
    assert_that(looser(short, UNBOUNDED)).is_same_as(UNBOUNDED)
    strict = PositiveBound(Fraction(1), strict=True)
    assert_that(tighter(short, strict)).is_equal_to(strict)
    assert_that(looser(short, strict)).is_equal_to(short)


def test_render():
    s = hybrid("St = [off|_a]", T=(29, 2))
    assert_that(s.render()).is_equal_to("⟨St = [off|_a] ‖ T↦(29,2)⟩")
    assert_that(s.render(hide_anonymous=True)).is_equal_to("⟨St = [off|_] ‖ T↦(29,2)⟩")
    assert_that(HybridStore.EMPTY.render()).is_equal_to("⟨true ‖ true~⟩")


def _random_case(rng):
    continuous = {
        name: (rng.randint(-5, 5), rng.randint(-2, 2))
        for name in rng.sample(("X", "Y"), rng.randint(1, 2))
    }
    names = sorted(continuous)
    atoms = []
    for _ in range(rng.randint(1, 2)):
        coeffs = [(rng.randint(-2, 2), name) for name in names]
        if not any(k for k, _ in coeffs):
            coeffs[0] = (1, names[0])
        terms = " + ".join(f"{k}*{name}" for k, name in coeffs if k)
        terms = terms.replace("+ -", "- ")
        op = rng.choice(("<=", "<", ">=", ">"))
        atoms.append(f"{terms} {op} {rng.randint(-6, 6)}")
    return hybrid(**continuous), c(" /\\ ".join(atoms))


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_max_duration_against_sampling(seed):
    rng = random.Random(seed)
    for _ in range(50):
        s, invariant = _random_case(rng)
        bound = max_duration(s, invariant)

        def holds(tau):
            return hentails(project_store(s, tau), invariant)

        if bound is None:
            assert_that(holds(0) and holds(EPSILON)).is_false()
        elif bound is UNBOUNDED:
            assert_that([holds(0), holds(1), holds(10**6)]).does_not_contain(False)
        else:
            samples = [bound.tau * k / 1000 for k in range(1001)]
            if bound.strict:
                samples = samples[:-1]
                assert_that(holds(bound.tau)).is_false()
            else:
                assert_that(holds(bound.tau + EPSILON)).is_false()
            assert_that([tau for tau in samples if not holds(tau)]).is_empty()
