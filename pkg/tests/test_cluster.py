import numpy as np
import pytest
from oracles import (
    canonical_partition,
    first_ladder_merge_round,
    headline_count_brute,
    single_linkage_brute,
)

import opinionseg.cluster as cluster_mod
from opinionseg.cluster import (
    ClusterResult,
    ScheduleParams,
    UnionFind,
    count_clusters,
    schedule_epsilon,
)
from opinionseg.model import ModelParams, Population
from opinionseg.synthetic import banded_image


# --- UnionFind -------------------------------------------------------------


def test_union_find_basics():
    uf = UnionFind(5)
    assert uf.union(0, 1)
    assert uf.union(3, 4)
    assert not uf.union(1, 0)
    assert uf.find(0) == uf.find(1)
    assert uf.find(3) == uf.find(4)
    assert uf.find(2) not in (uf.find(0), uf.find(3))
    uf.union(1, 4)
    assert uf.find(0) == uf.find(3)


# --- count_clusters: hand cases ---------------------------------------------


def test_count_hand_case_three_groups():
    pop = Population(np.array([0.1, 0.1004, 0.5, 0.9, 0.9002]))
    res = count_clusters(pop, merge_tol=1e-3, mass_floor=0.01)
    assert res.num_clusters == 3
    assert res.headline_count == 3
    assert res.masses.tolist() == [0.4, 0.4, 0.2]
    assert res.centres[:, 0] == pytest.approx([0.1002, 0.9001, 0.5])


def test_count_mass_floor_drops_minor_clusters():
    values = np.concatenate([np.full(60, 0.2), np.full(39, 0.8), [0.5]])
    res = count_clusters(Population(values), merge_tol=1e-3, mass_floor=0.05)
    assert res.num_clusters == 3
    assert res.headline_count == 2
    assert res.minor_count == 1
    # minor cluster still has a centre, after the headline ones
    assert res.centres[2, 0] == 0.5


def test_count_single_linkage_chains():
    # consecutive gaps below tol chain into one cluster even though the
    # endpoints are far apart
    values = np.arange(0.0, 0.09, 0.0009)
    res = count_clusters(Population(values), merge_tol=1e-3)
    assert res.num_clusters == 1


def test_count_strict_boundary_at_exact_tol():
    # exactly tol apart must NOT merge; use a binary tol so the gap is exact
    tol = 0.0009765625  # 2^-10
    pop = Population(np.array([0.25, 0.25 + tol]))
    res = count_clusters(pop, merge_tol=tol)
    assert res.num_clusters == 2
    just_inside = np.array([0.25, 0.25 + tol - 2**-30])
    assert count_clusters(Population(just_inside), merge_tol=tol).num_clusters == 1


def test_count_promotes_largest_when_all_below_floor():
    pop = Population(np.array([0.1, 0.5, 0.9]))
    res = count_clusters(pop, merge_tol=1e-3, mass_floor=0.5)
    assert res.num_clusters == 3
    assert res.headline_count == 1


def test_count_orders_by_mass_then_centre():
    values = np.concatenate([np.full(3, 0.9), np.full(3, 0.1), np.full(4, 0.5)])
    res = count_clusters(Population(values), merge_tol=1e-3)
    assert res.masses.tolist() == [0.4, 0.3, 0.3]
    assert res.centres[:, 0] == pytest.approx([0.5, 0.1, 0.9], abs=1e-12)


def test_count_labels_align_with_centres():
    rng = np.random.default_rng(8)
    pop = Population(rng.random((40, 3)))
    res = count_clusters(pop, merge_tol=0.05)
    assert res.labels.shape == (40,)
    assert res.labels.min() >= 0 and res.labels.max() < res.num_clusters
    for k in range(res.num_clusters):
        members = pop.opinions[res.labels == k]
        assert members.shape[0] > 0
        assert res.centres[k] == pytest.approx(members.mean(axis=0), abs=1e-12)
        assert res.masses[k] == members.shape[0] / pop.n


def test_count_validates_params():
    pop = Population(np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        count_clusters(pop, merge_tol=0.0)
    with pytest.raises(ValueError):
        count_clusters(pop, mass_floor=1.5)


def test_count_single_agent():
    res = count_clusters(Population(np.array([0.3])))
    assert res.num_clusters == 1
    assert res.headline_count == 1
    assert res.masses[0] == 1.0


# --- count_clusters vs brute-force oracle ------------------------------------


def _random_population(rng: np.random.Generator) -> Population:
    n = int(rng.integers(1, 101))
    d = int(rng.choice([1, 2, 3]))
    style = rng.integers(0, 3)
    if style == 0:
        op = rng.random((n, d))
    elif style == 1:
        # tight blobs: the regime count_clusters actually runs in
        k = int(rng.integers(1, 6))
        centres = rng.random((k, d))
        op = centres[rng.integers(0, k, n)] + rng.normal(0, 2e-4, (n, d))
        op = np.clip(op, 0.0, 1.0)
    else:
        # lattice-ish values to stress ties and exact gaps
        op = rng.integers(0, 25, (n, d)) / 25.0
    return Population(op)


def test_count_matches_brute_force_oracle():
    rng = np.random.default_rng(2024)
    for trial in range(60):
        pop = _random_population(rng)
        tol = float(rng.choice([1e-3, 5e-3, 0.05]))
        res = count_clusters(pop, merge_tol=tol, mass_floor=0.01)
        want = single_linkage_brute(pop.opinions, tol)
        assert np.array_equal(canonical_partition(res.labels), want), f"trial {trial}"
        assert res.headline_count == headline_count_brute(pop.opinions, tol, 0.01)


def test_count_scalar_and_grid_paths_agree():
    # the 1-d sort path and the generic cell-hash path must produce the
    # same partition; embed scalars as a constant second component
    rng = np.random.default_rng(77)
    values = rng.random(200)
    res_1d = count_clusters(Population(values), merge_tol=2e-3)
    padded = np.column_stack([values, np.full(200, 0.5)])
    res_2d = count_clusters(Population(padded), merge_tol=2e-3)
    assert np.array_equal(
        canonical_partition(res_1d.labels), canonical_partition(res_2d.labels)
    )


# --- ScheduleParams ----------------------------------------------------------


def test_schedule_defaults_walk_ladder_to_one():
    sched = ScheduleParams(epsilon_0=0.1, delta_epsilon=0.01)
    rounds = sched.resolved_max_rounds()
    assert rounds == 91
    last = sched.epsilon_0 + (rounds - 1) * sched.delta_epsilon
    assert last == pytest.approx(1.0, abs=1e-9)
    beyond = sched.epsilon_0 + rounds * sched.delta_epsilon
    assert beyond > 1.0 + 1e-9


def test_schedule_params_validation():
    with pytest.raises(ValueError):
        ScheduleParams(target_c=0)
    with pytest.raises(ValueError):
        ScheduleParams(epsilon_0=0.0)
    with pytest.raises(ValueError):
        ScheduleParams(delta_epsilon=0.0)
    with pytest.raises(ValueError):
        ScheduleParams(max_rounds=0)


# --- schedule_epsilon --------------------------------------------------------


def test_schedule_stops_at_first_satisfying_round():
    # tones 0.3/0.5 merge already at epsilon_0=0.3 (gap 0.2 < 0.3)
    pop = banded_image(size=16, tones=(0.3, 0.5), fractions=(0.5, 0.5))
    res = schedule_epsilon(pop, ScheduleParams(target_c=1, epsilon_0=0.3), ModelParams())
    assert len(res.rounds) == 1
    assert res.clusters.headline_count == 1
    assert res.target_met and not res.overshoot
    assert res.epsilon_final == 0.3


def test_schedule_two_tone_merge_round_matches_ladder_oracle():
    pop = banded_image(size=16, tones=(0.1, 0.9), fractions=(0.5, 0.5))
    sched = ScheduleParams(target_c=1, epsilon_0=0.1, delta_epsilon=0.01)
    res = schedule_epsilon(pop, sched, ModelParams(seed=0))
    # merging needs the gap strictly inside epsilon; mirror the ladder
    gap = 0.9 - 0.1
    k_expect = first_ladder_merge_round(gap, 0.1, 0.01)
    assert res.rounds[-1].round_index == k_expect
    assert res.epsilon_final == 0.1 + k_expect * 0.01
    assert res.clusters.headline_count == 1
    assert res.target_met
    counts = [r.headline_count for r in res.rounds]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[:-1] == [2] * (len(counts) - 1)


def test_schedule_rounds_use_fresh_ladder_products():
    pop = banded_image(size=16, tones=(0.1, 0.9), fractions=(0.5, 0.5))
    sched = ScheduleParams(target_c=1, epsilon_0=0.1, delta_epsilon=0.01, max_rounds=5)
    res = schedule_epsilon(pop, sched, ModelParams())
    for r in res.rounds:
        assert r.epsilon == 0.1 + r.round_index * 0.01


def test_schedule_exhausts_ladder_without_target():
    # tones 0.0/1.0 never merge: the gap equals 1 and the gate is strict
    pop = banded_image(size=12, tones=(0.0, 1.0), fractions=(0.5, 0.5))
    sched = ScheduleParams(target_c=1, epsilon_0=0.9, delta_epsilon=0.05)
    res = schedule_epsilon(pop, sched, ModelParams())
    assert not res.target_met and not res.overshoot
    assert res.clusters.headline_count == 2
    # ladder: 0.9, 0.9 + 0.05, then 1.0000000000000002 clamps to 1.0
    assert [r.epsilon for r in res.rounds] == [0.9, 0.9 + 0.05, 1.0]
    assert res.converged_all


def test_schedule_reports_overshoot():
    # equal-mass tones at 0.1/0.5/0.9: both gaps open at the same epsilon,
    # so a target of 2 is jumped straight to 1
    pop = banded_image(size=18, tones=(0.1, 0.5, 0.9), fractions=(1 / 3, 1 / 3, 1 / 3))
    res = schedule_epsilon(pop, ScheduleParams(target_c=2), ModelParams(seed=0))
    assert res.clusters.headline_count == 1
    assert res.overshoot and not res.target_met


def test_schedule_aborts_on_count_increase(monkeypatch):
    pop = banded_image(size=8, tones=(0.2, 0.8), fractions=(0.5, 0.5))
    fake_counts = iter([4, 6])

    def fake_count(pop_, merge_tol, mass_floor):
        count = next(fake_counts)
        return ClusterResult(
            labels=np.zeros(pop_.n, dtype=np.int64),
            centres=np.array([[0.5]]),
            masses=np.array([1.0]),
            headline_count=count,
            merge_tol=merge_tol,
            mass_floor=mass_floor,
        )

    monkeypatch.setattr(cluster_mod, "count_clusters", fake_count)
    with pytest.raises(RuntimeError, match="rose from 4 to 6"):
        schedule_epsilon(pop, ScheduleParams(target_c=1), ModelParams())


def test_schedule_full_run_is_reproducible():
    pop = banded_image(size=16, tones=(0.1, 0.5, 0.9), fractions=(0.45, 0.10, 0.45))
    sched = ScheduleParams(target_c=2)
    res_a = schedule_epsilon(pop, sched, ModelParams(seed=5))
    res_b = schedule_epsilon(pop, sched, ModelParams(seed=5))
    assert np.array_equal(res_a.population.opinions, res_b.population.opinions)
    assert [r.sweeps for r in res_a.rounds] == [r.sweeps for r in res_b.rounds]
    assert res_a.epsilon_final == res_b.epsilon_final
