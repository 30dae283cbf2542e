import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mp_viz.dataset import CandidateSet
from mp_viz.errors import ConfigError
from mp_viz.nsga2 import (
    constraint_filter,
    crowding_distance,
    dominates,
    feasibility_mask,
    non_dominated_sort,
    nsga2_evolve,
    nsga2_generate,
    pareto_fraction,
    polynomial_mutation,
    repair_commutation,
    sbx_crossover,
)
from mp_viz.surrogate import ConstraintThresholds, SurrogateProblem


def brute_force_fronts(F, senses):
    """Peel fronts with the pairwise dominance definition."""
    remaining = set(range(len(F)))
    fronts = []
    while remaining:
        front = sorted(
            i for i in remaining
            if not any(dominates(F[j], F[i], senses) for j in remaining if j != i)
        )
        fronts.append(front)
        remaining -= set(front)
    return fronts


def test_dominance_respects_senses():
    senses = ["max", "min"]
    assert dominates([2.0, 1.0], [1.0, 1.0], senses)
    assert not dominates([1.0, 1.0], [1.0, 1.0], senses)
    assert not dominates([2.0, 3.0], [1.0, 1.0], senses)


def test_sort_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(0)
    for trial in range(100):
        n = int(rng.integers(1, 201)) if trial % 10 == 0 else int(rng.integers(1, 40))
        d = [2, 4, 13][trial % 3]
        # integer grid values produce plenty of ties
        F = rng.integers(0, 6, size=(n, d)).astype(float)
        senses = list(rng.choice(["min", "max"], size=d))
        assert non_dominated_sort(F, senses) == brute_force_fronts(F, senses)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 25), st.just(3)), elements=st.floats(-10, 10)))
def test_fronts_partition_and_order(F):
    senses = ["min", "max", "min"]
    fronts = non_dominated_sort(F, senses)
    flat = sorted(itertools.chain.from_iterable(fronts))
    assert flat == list(range(len(F)))
    rank = {i: r for r, front in enumerate(fronts) for i in front}
    for i in range(len(F)):
        for j in range(len(F)):
            if dominates(F[i], F[j], senses):
                assert rank[i] < rank[j]


def test_crowding_boundaries_are_infinite(rng):
    front = rng.random((8, 3))
    dist = crowding_distance(front)
    for m in range(3):
        assert np.isinf(dist[np.argmin(front[:, m])])
        assert np.isinf(dist[np.argmax(front[:, m])])
    assert np.isinf(crowding_distance(front[:2])).all()


def test_crowding_matches_hand_computation():
    front = np.array([[0.0, 4.0], [1.0, 2.0], [3.0, 1.0], [4.0, 0.0]])
    dist = crowding_distance(front)
    assert dist[1] == pytest.approx((3.0 - 0.0) / 4.0 + (4.0 - 1.0) / 4.0)
    assert dist[2] == pytest.approx((4.0 - 1.0) / 4.0 + (2.0 - 0.0) / 4.0)


def test_repair_orders_commutation_angles():
    params = np.array([[0.5] * 5 + [0.8, 0.2], [0.5] * 5 + [0.4, 0.4], [0.5] * 5 + [1.0, 1.0]])
    fixed = repair_commutation(params)
    assert (fixed[:, 5] < fixed[:, 6]).all()
    np.testing.assert_array_equal(fixed[0, 5:], [0.2, 0.8])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_variation_stays_in_the_unit_box(seed):
    rng = np.random.default_rng(seed)
    p1, p2 = rng.random(7), rng.random(7)
    c1, c2 = sbx_crossover(rng, p1, p2)
    for child in (c1, c2, polynomial_mutation(rng, c1)):
        assert ((child >= 0.0) & (child <= 1.0)).all()


def test_generation_zero_is_the_random_start():
    populations = nsga2_evolve(SurrogateProblem(), pop_size=8, generations=2, seed=3)
    first = next(populations)
    assert first.generation == 0
    assert first.offspring is first.members
    assert first.members.ids[0] == "g000-0000"
    rest = list(populations)
    assert [p.generation for p in rest] == [1, 2]
    assert all(len(p) == 8 for p in rest)
    assert rest[0].offspring.ids[-1] == "g001-0007"


def test_survivors_never_get_worse_on_front_zero():
    problem = SurrogateProblem.single_point("A")
    senses = problem.senses()
    previous = None
    for population in nsga2_evolve(problem, pop_size=12, generations=6, seed=1):
        front = population.members.objectives[population.ranks == 0]
        if previous is not None:
            # the new front is the first front of old survivors plus offspring
            for old in previous:
                assert not any(dominates(old, new, senses) for new in front)
        previous = front


@pytest.mark.parametrize("pop_size, generations", [(7, 1), (2, 1), (8, -1)])
def test_bad_optimizer_settings(pop_size, generations):
    with pytest.raises(ConfigError):
        next(nsga2_evolve(SurrogateProblem(), pop_size, generations, seed=0))


def test_zero_generations_returns_the_initial_population():
    cs = nsga2_generate(SurrogateProblem(), pop_size=20, generations=0, seed=42)
    assert cs.n == 20
    assert len(cs.column_names) == 13


def test_generate_is_seeded_and_unique():
    a = nsga2_generate(SurrogateProblem(), pop_size=10, generations=5, seed=9)
    b = nsga2_generate(SurrogateProblem(), pop_size=10, generations=5, seed=9)
    assert a == b
    assert 10 <= a.n <= 60
    assert len(set(map(bytes, a.params))) == a.n
    assert (a.params[:, 5] < a.params[:, 6]).all()
    assert a.param_names[0] == "bore_diameter"
    assert [op.label for op in a.operating_points] == ["A", "B", "C"]


def test_default_thresholds_check_efficiency_and_ripple_only():
    thresholds = ConstraintThresholds()
    assert (thresholds.efficiency_min, thresholds.ripple_max) == (0.5, 0.8)
    assert thresholds.torque_margin is None
    cs = nsga2_generate(SurrogateProblem(), pop_size=20, generations=10, seed=42)
    expected = (cs.column("A.efficiency") >= 0.5) & (cs.column("A.ripple") <= 0.8)
    np.testing.assert_array_equal(feasibility_mask(cs, thresholds), expected)


def test_constraint_filter_and_feasible_flags():
    problem = SurrogateProblem(thresholds=ConstraintThresholds(torque_margin=1.0))
    cs = nsga2_generate(problem, pop_size=20, generations=10, seed=42)
    kept, ratio = constraint_filter(cs, problem.thresholds)
    assert ratio == pytest.approx(kept.n / cs.n)
    np.testing.assert_array_equal(cs.feasible, feasibility_mask(cs, problem.thresholds))
    assert (kept.column("A.efficiency") >= 0.5).all()
    for op in cs.operating_points:
        assert (kept.column(f"{op.label}.torque") >= op.torque).all()
    everything, one = constraint_filter(cs, ConstraintThresholds.vacuous())
    assert one == 1.0 and everything.n == cs.n


def test_pareto_fraction(small_candidates):
    # c2 beats c0 and c1, c5 beats c3
    assert pareto_fraction(small_candidates) == pytest.approx(3 / 6)
    single = CandidateSet(("a", "b"), np.array([[1.0], [2.0]]), ("f",))
    assert pareto_fraction(single) == 0.5
