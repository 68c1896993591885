import itertools
import math

import numpy as np
import pytest

from sitabench.attack import (
    DEFAULT_ALICE,
    DEFAULT_BOB,
    HYPOTHESES,
    ClusteringError,
    OccupancyHypothesis,
    OccupantProfile,
    RoomModel,
    attack_accuracy,
    classify,
    classify_unsupervised,
    cluster_strategy,
    degrade_reading,
    emission_rate,
    hypothesis_levels,
    physics_strategy,
    run_attack_experiment,
    simulate_readings,
    steady_state_co2,
    supervised_strategy,
)

ROOM = RoomModel()
PROFILES = (DEFAULT_ALICE, DEFAULT_BOB)


class TestPhysics:
    def test_reference_occupant_emission(self):
        ref = OccupantProfile("ref", 70.0, 1.0)
        assert emission_rate(ref, ROOM) == ROOM.base_emission_m3_s

    def test_mass_ratio(self):
        a = OccupantProfile("a", 50.0, 1.0)
        b = OccupantProfile("b", 90.0, 1.0)
        assert math.isclose(emission_rate(a, ROOM) / emission_rate(b, ROOM), 5.0 / 9.0)

    def test_invalid_profiles_rejected(self):
        with pytest.raises(ValueError):
            OccupantProfile("x", 70.0, 0.0)
        with pytest.raises(ValueError):
            OccupantProfile("x", 0.0, 1.0)
        with pytest.raises(ValueError):
            RoomModel(ventilation_m3_s=0.0)

    def test_empty_room_is_outdoor_level(self):
        assert steady_state_co2(ROOM, ()) == ROOM.outdoor_co2_ppm

    def test_worked_example_1400ppm(self):
        room = RoomModel(ventilation_m3_s=0.1, outdoor_co2_ppm=400.0, base_emission_m3_s=1e-4)
        occupant = OccupantProfile("ref", 70.0, 1.0)
        assert math.isclose(steady_state_co2(room, (occupant,)), 1400.0)

    def test_additivity(self):
        a, b = PROFILES
        excess_a = steady_state_co2(ROOM, (a,)) - ROOM.outdoor_co2_ppm
        excess_b = steady_state_co2(ROOM, (b,)) - ROOM.outdoor_co2_ppm
        both = steady_state_co2(ROOM, (a, b))
        assert math.isclose(both, ROOM.outdoor_co2_ppm + excess_a + excess_b)

    def test_monotonicity(self):
        light = OccupantProfile("l", 50.0)
        heavy = OccupantProfile("h", 90.0)
        assert steady_state_co2(ROOM, (heavy,)) > steady_state_co2(ROOM, (light,))
        assert steady_state_co2(ROOM, (light, heavy)) > steady_state_co2(ROOM, (heavy,))
        windy = RoomModel(ventilation_m3_s=ROOM.ventilation_m3_s * 2)
        assert steady_state_co2(windy, (heavy,)) < steady_state_co2(ROOM, (heavy,))

    def test_default_levels_ascending(self):
        levels = hypothesis_levels(ROOM, PROFILES)
        values = [levels[h] for h in HYPOTHESES]
        assert values == sorted(values)
        assert values[0] == 400.0


class TestClassify:
    def test_exact_levels_recovered(self):
        levels = hypothesis_levels(ROOM, PROFILES)
        for hyp, level in levels.items():
            assert classify(level, ROOM, PROFILES) is hyp

    def test_outdoor_reading_is_empty(self):
        assert classify(ROOM.outdoor_co2_ppm, ROOM, PROFILES) is OccupancyHypothesis.EMPTY

    def test_tie_toward_fewer_occupants(self):
        levels = hypothesis_levels(ROOM, PROFILES)
        midpoint = (levels[OccupancyHypothesis.EMPTY] + levels[OccupancyHypothesis.PERSON_A]) / 2
        assert classify(midpoint, ROOM, PROFILES) is OccupancyHypothesis.EMPTY

    def test_identity_over_parameter_grid(self):
        for q, base in itertools.product((0.02, 0.04, 0.1), (2e-6, 5e-6, 2e-5)):
            room = RoomModel(ventilation_m3_s=q, base_emission_m3_s=base)
            levels = hypothesis_levels(room, PROFILES)
            assert len(set(levels.values())) == 4  # pairwise distinct
            for hyp, level in levels.items():
                assert classify(level, room, PROFILES) is hyp


def brute_force_kmeans_1d(x, k):
    """Optimal 1-D k-means via exhaustive contiguous partitions of sorted x."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    n = len(x)
    best = (math.inf, None)
    for cuts in itertools.combinations(range(1, n), k - 1):
        bounds = (0, *cuts, n)
        cost = 0.0
        for lo, hi in zip(bounds, bounds[1:]):
            seg = x[lo:hi]
            cost += float(np.sum((seg - seg.mean()) ** 2))
        if cost < best[0]:
            best = (cost, bounds)
    labels = np.empty(n, dtype=int)
    for i, (lo, hi) in enumerate(zip(best[1], best[1][1:])):
        labels[lo:hi] = i
    return x, labels


class TestClustering:
    def test_well_separated_levels_recovered(self):
        rng = np.random.Generator(np.random.Philox(key=5))
        centers = [400.0, 500.0, 600.0, 700.0]
        x = np.concatenate([c + rng.normal(0, 1.0, size=10) for c in centers])
        labels = classify_unsupervised(x, k=4, seed=0)
        expected = np.repeat(np.arange(4), 10)
        assert np.array_equal(labels, expected)

    def test_matches_brute_force_oracle_on_small_instances(self):
        for seed in range(5):
            rng = np.random.Generator(np.random.Philox(key=100 + seed))
            x = np.concatenate(
                [c + rng.normal(0, 0.5, size=4) for c in (0.0, 20.0, 40.0, 60.0)]
            )
            sorted_x, oracle_labels = brute_force_kmeans_1d(x, 4)
            got = classify_unsupervised(sorted_x, k=4, seed=seed)
            assert np.array_equal(got, oracle_labels)

    def test_all_identical_rejected(self):
        with pytest.raises(ClusteringError):
            classify_unsupervised([5.0] * 10, k=4)

    def test_k1_single_cluster(self):
        assert classify_unsupervised([1.0, 2.0, 9.0], k=1).tolist() == [0, 0, 0]

    def test_labels_ordered_by_centroid(self):
        labels = classify_unsupervised([700.0, 400.0, 500.0, 600.0], k=4, seed=3)
        assert labels.tolist() == [3, 0, 1, 2]

    def test_deterministic_in_seed(self):
        rng = np.random.Generator(np.random.Philox(key=6))
        x = rng.normal(500.0, 100.0, size=50)
        assert np.array_equal(
            classify_unsupervised(x, seed=9), classify_unsupervised(x, seed=9)
        )


class TestAccuracy:
    def test_truth_oracle_is_one(self):
        simulated = simulate_readings(ROOM, PROFILES, 50, seed=0)
        truths = [t for _, t in simulated]
        assert attack_accuracy(simulated, lambda readings: truths) == 1.0

    def test_noiseless_physics_is_one(self):
        simulated = simulate_readings(ROOM, PROFILES, 200, seed=1)
        assert attack_accuracy(simulated, physics_strategy(ROOM, PROFILES)) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            attack_accuracy([], physics_strategy(ROOM, PROFILES))

    def test_level1_not_better_than_level4_per_draw(self):
        fn = physics_strategy(ROOM, PROFILES)
        for seed in range(20):
            full = simulate_readings(ROOM, PROFILES, 100, seed=seed, noise_sd=4.0)
            coarse = [(degrade_reading(r, 1), t) for r, t in full]
            assert attack_accuracy(coarse, fn) <= attack_accuracy(full, fn)

    def test_degradation_monotone_in_expectation(self):
        fn = physics_strategy(ROOM, PROFILES)
        means = {}
        for level in (4, 2, 1):
            accs = [
                attack_accuracy(
                    simulate_readings(
                        ROOM, PROFILES, 100, seed=s, noise_sd=4.0, activity_level=level
                    ),
                    fn,
                )
                for s in range(100)
            ]
            means[level] = sum(accs) / len(accs)
        assert means[4] >= means[2] >= means[1]

    def test_supervised_strategy_noiseless(self):
        fn = supervised_strategy(ROOM, PROFILES, train_seed=3)
        simulated = simulate_readings(ROOM, PROFILES, 100, seed=4)
        assert attack_accuracy(simulated, fn) == 1.0

    def test_cluster_strategy_separated(self):
        fn = cluster_strategy(ROOM, PROFILES, seed=0)
        simulated = simulate_readings(ROOM, PROFILES, 100, seed=5, noise_sd=2.0)
        assert attack_accuracy(simulated, fn) >= 0.95


class TestDegrade:
    def test_levels(self):
        assert degrade_reading(487.3, 4) == 487.3
        assert degrade_reading(487.3, 3) == 487.0
        assert degrade_reading(487.3, 2) == 490.0
        assert degrade_reading(487.3, 1) == 500.0

    def test_level_zero_rejected(self):
        with pytest.raises(ValueError):
            degrade_reading(487.3, 0)


class TestExperimentGrid:
    def test_row_schema_and_count(self):
        rows = run_attack_experiment(
            ROOM,
            PROFILES,
            activity_levels=[4, 1],
            strategies=["physics", "supervised"],
            seeds=[0, 1],
            n=50,
            noise_sd=2.0,
        )
        assert len(rows) == 8
        assert set(rows[0]) == {"activity_level", "strategy", "seed", "accuracy"}
        assert all(0.0 <= row["accuracy"] <= 1.0 for row in rows)

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            run_attack_experiment(ROOM, PROFILES, [4], ["psychic"], [0])

    def test_cluster_failure_becomes_nan(self):
        # level-1 rounding can collapse readings below 4 distinct values
        tight = RoomModel(base_emission_m3_s=1e-7)
        rows = run_attack_experiment(
            tight, PROFILES, activity_levels=[1], strategies=["cluster"], seeds=[0], n=20
        )
        assert math.isnan(rows[0]["accuracy"])
