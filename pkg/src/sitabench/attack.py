"""Occupancy-inference attack on CO2 readings.

A well-mixed steady-state mass balance predicts the room concentration
under four hypotheses (empty / person A / person B / both); an attacker
classifies readings by nearest prediction, by 1-D k-means clustering, or by
a decision tree trained on labeled history. Accuracy is measured against
ground truth, optionally after degrading the readings with an Activity
level transformation.

Physical constants here are illustrative surrogates, not physiology: CO2
generation is modeled as base_emission * (mass / 70 kg) * sex_factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import models as models_mod
from .sita import round_half_up, truncate

REFERENCE_MASS_KG = 70.0


class OccupancyHypothesis(str, Enum):
    EMPTY = "empty"
    PERSON_A = "person_a"
    PERSON_B = "person_b"
    BOTH = "both"


# ordered by occupant count so distance ties resolve toward fewer occupants
HYPOTHESES = (
    OccupancyHypothesis.EMPTY,
    OccupancyHypothesis.PERSON_A,
    OccupancyHypothesis.PERSON_B,
    OccupancyHypothesis.BOTH,
)


@dataclass(frozen=True)
class OccupantProfile:
    name: str
    mass_kg: float
    sex_factor: float = 1.0

    def __post_init__(self):
        if self.mass_kg <= 0:
            raise ValueError("mass_kg must be > 0")
        if self.sex_factor <= 0:
            raise ValueError("sex_factor must be > 0")


@dataclass(frozen=True)
class RoomModel:
    volume_m3: float = 40.0
    ventilation_m3_s: float = 0.04
    outdoor_co2_ppm: float = 400.0
    base_emission_m3_s: float = 5e-6  # CO2 output of a 70 kg reference occupant

    def __post_init__(self):
        for name in ("volume_m3", "ventilation_m3_s", "outdoor_co2_ppm", "base_emission_m3_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


DEFAULT_ALICE = OccupantProfile("Alice", 50.0, 0.9)
DEFAULT_BOB = OccupantProfile("Bob", 90.0, 1.0)


def emission_rate(profile: OccupantProfile, room: RoomModel) -> float:
    """Mass-proportional CO2 generation in m^3/s."""
    return room.base_emission_m3_s * (profile.mass_kg / REFERENCE_MASS_KG) * profile.sex_factor


def steady_state_co2(room: RoomModel, occupants: tuple[OccupantProfile, ...] | list) -> float:
    """Equilibrium concentration of the well-mixed mass balance, in ppm."""
    generation = sum(emission_rate(p, room) for p in occupants)
    return room.outdoor_co2_ppm + 1e6 * generation / room.ventilation_m3_s


def hypothesis_levels(
    room: RoomModel, profiles: tuple[OccupantProfile, OccupantProfile]
) -> dict[OccupancyHypothesis, float]:
    a, b = profiles
    return {
        OccupancyHypothesis.EMPTY: steady_state_co2(room, ()),
        OccupancyHypothesis.PERSON_A: steady_state_co2(room, (a,)),
        OccupancyHypothesis.PERSON_B: steady_state_co2(room, (b,)),
        OccupancyHypothesis.BOTH: steady_state_co2(room, (a, b)),
    }


def classify(
    reading: float,
    room: RoomModel,
    profiles: tuple[OccupantProfile, OccupantProfile],
) -> OccupancyHypothesis:
    """Nearest-prediction hypothesis; ties go toward fewer occupants."""
    levels = hypothesis_levels(room, profiles)
    best = None
    best_dist = float("inf")
    for hyp in HYPOTHESES:
        dist = abs(reading - levels[hyp])
        if dist < best_dist:
            best = hyp
            best_dist = dist
    return best


class ClusteringError(ValueError):
    pass


def classify_unsupervised(readings, k: int = 4, seed: int = 0) -> np.ndarray:
    """1-D k-means with k-means++ seeding, deterministic in the seed.

    Cluster ids are relabeled by ascending centroid, so id 0 is the lowest
    CO2 group. Raises ClusteringError with fewer than k distinct readings.
    """
    x = np.asarray(readings, dtype=np.float64)
    if x.ndim != 1 or len(x) == 0:
        raise ClusteringError("readings must be a non-empty 1-D sequence")
    if k < 1:
        raise ClusteringError("k must be >= 1")
    distinct = np.unique(x)
    if len(distinct) < k:
        raise ClusteringError(f"need at least {k} distinct readings, got {len(distinct)}")

    rng = np.random.Generator(np.random.Philox(key=seed & (2**64 - 1)))
    centroids = np.empty(k)
    centroids[0] = x[int(rng.integers(0, len(x)))]
    for i in range(1, k):
        d2 = np.min((x[:, None] - centroids[None, :i]) ** 2, axis=1)
        total = d2.sum()
        if total == 0:
            # all points coincide with chosen centroids; pick an unused value
            unused = np.setdiff1d(distinct, centroids[:i])
            centroids[i] = unused[0]
            continue
        r = rng.random() * total
        centroids[i] = x[int(np.searchsorted(np.cumsum(d2), r))]

    assignment = np.zeros(len(x), dtype=np.int64)
    for _ in range(300):
        new_assignment = np.argmin(np.abs(x[:, None] - centroids[None, :]), axis=1)
        for i in range(k):
            members = x[new_assignment == i]
            if len(members):
                centroids[i] = members.mean()
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment

    order = np.argsort(centroids, kind="stable")
    relabel = np.empty(k, dtype=np.int64)
    relabel[order] = np.arange(k)
    return relabel[assignment]


def attack_accuracy(simulated: list[tuple[float, OccupancyHypothesis]], classify_fn) -> float:
    """Fraction of readings whose classified hypothesis equals the truth.

    ``classify_fn`` maps the full list of readings to a list of hypotheses.
    """
    if not simulated:
        raise ValueError("need at least one simulated reading")
    readings = [reading for reading, _ in simulated]
    predicted = classify_fn(readings)
    hits = sum(1 for (_, truth), guess in zip(simulated, predicted) if guess == truth)
    return hits / len(simulated)


def degrade_reading(reading: float, activity_level: int) -> float:
    """Apply the Activity dimension rule for one CO2 value (levels 1-4)."""
    if activity_level == 4:
        return reading
    if activity_level == 3:
        return float(truncate(reading))
    if activity_level == 2:
        return float(round_half_up(reading, 10))
    if activity_level == 1:
        return float(round_half_up(reading, 100))
    raise ValueError(f"activity level {activity_level} not usable for readings")


def simulate_readings(
    room: RoomModel,
    profiles: tuple[OccupantProfile, OccupantProfile],
    n: int,
    seed: int = 0,
    noise_sd: float = 0.0,
    activity_level: int = 4,
) -> list[tuple[float, OccupancyHypothesis]]:
    """Draw hypotheses uniformly, emit noisy (optionally SITA-degraded)
    steady-state readings paired with ground truth."""
    if n < 1:
        raise ValueError("n must be >= 1")
    levels = hypothesis_levels(room, profiles)
    rng = np.random.Generator(np.random.Philox(key=seed & (2**64 - 1)))
    out = []
    for _ in range(n):
        truth = HYPOTHESES[int(rng.integers(0, len(HYPOTHESES)))]
        reading = levels[truth] + (rng.normal(0.0, noise_sd) if noise_sd > 0 else 0.0)
        out.append((degrade_reading(reading, activity_level), truth))
    return out


def physics_strategy(room: RoomModel, profiles) -> callable:
    def run(readings):
        return [classify(v, room, profiles) for v in readings]

    return run


def cluster_strategy(room: RoomModel, profiles, seed: int = 0) -> callable:
    """Cluster into 4 groups and map ids to hypotheses by CO2 level."""
    ordered = _hypotheses_by_level(room, profiles)

    def run(readings):
        ids = classify_unsupervised(readings, k=4, seed=seed)
        return [ordered[i] for i in ids]

    return run


def _hypotheses_by_level(room: RoomModel, profiles) -> list[OccupancyHypothesis]:
    levels = hypothesis_levels(room, profiles)
    return sorted(HYPOTHESES, key=lambda h: levels[h])


def supervised_strategy(
    room: RoomModel,
    profiles: tuple[OccupantProfile, OccupantProfile],
    train_seed: int = 0,
    n_train: int = 200,
    noise_sd: float = 0.0,
) -> callable:
    """Train a decision tree on labeled history, classify by rounded index."""
    history = simulate_readings(room, profiles, n_train, seed=train_seed, noise_sd=noise_sd)
    ordered = _hypotheses_by_level(room, profiles)
    index = {h: i for i, h in enumerate(ordered)}
    X = np.asarray([[reading] for reading, _ in history])
    y = np.asarray([index[truth] for _, truth in history], dtype=np.float64)
    model = models_mod.fit(models_mod.ModelSpec("dtr", seed=train_seed), X, y)

    def run(readings):
        pred = models_mod.predict(model, np.asarray(readings, dtype=np.float64)[:, None])
        ids = np.clip(np.rint(pred), 0, 3).astype(int)
        return [ordered[i] for i in ids]

    return run


def run_attack_experiment(
    room: RoomModel,
    profiles: tuple[OccupantProfile, OccupantProfile],
    activity_levels: list[int],
    strategies: list[str],
    seeds: list[int],
    n: int = 200,
    noise_sd: float = 0.0,
) -> list[dict]:
    """Grid of (activity level, strategy, seed) -> accuracy rows."""
    rows = []
    for level in activity_levels:
        for strategy in strategies:
            for seed in seeds:
                simulated = simulate_readings(
                    room, profiles, n, seed=seed, noise_sd=noise_sd, activity_level=level
                )
                if strategy == "physics":
                    fn = physics_strategy(room, profiles)
                elif strategy == "cluster":
                    fn = cluster_strategy(room, profiles, seed=seed)
                elif strategy == "supervised":
                    fn = supervised_strategy(room, profiles, train_seed=seed + 1, noise_sd=noise_sd)
                else:
                    raise ValueError(f"unknown strategy {strategy!r}")
                try:
                    accuracy = attack_accuracy(simulated, fn)
                except ClusteringError:
                    accuracy = float("nan")
                rows.append(
                    {
                        "activity_level": level,
                        "strategy": strategy,
                        "seed": seed,
                        "accuracy": accuracy,
                    }
                )
    return rows
