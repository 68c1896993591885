"""Acceptance gate: seven criteria, one printed pass/fail line each.

Each test prints ``ACCEPTANCE <n> <name>: PASS`` (or FAIL) to the real
stdout so the lines survive pytest's capture. Criterion 5 is the expensive
one (full-scale trend reproduction over 10 seeds); the whole module is
designed to finish well inside its stated budgets on 4 cores.
"""
import itertools
import json
import math
import sys
import time

import numpy as np
import pytest

from sitabench import attack, models, runner
from sitabench.data import SensorRecord, parse_timestamp
from sitabench.evaluation import kfold, mae, r2, rmse
from sitabench.models import ModelSpec
from sitabench.sita import transform_activity, transform_spatial, transform_temporal


_CAPTURE = None


@pytest.fixture(autouse=True)
def _live_output(capfd):
    # keep a handle so announce() can print through pytest's fd capture
    global _CAPTURE
    _CAPTURE = capfd
    yield
    _CAPTURE = None


def announce(number, name, passed, detail=""):
    verdict = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    line = f"ACCEPTANCE {number} {name}: {verdict}{suffix}"
    if _CAPTURE is not None:
        with _CAPTURE.disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)
    assert passed, f"acceptance criterion {number} failed{suffix}"


def rng(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def test_1_sita_fidelity():
    """All 15 worked per-dimension transformation pairs, byte-for-byte."""
    started = time.perf_counter()
    ts = parse_timestamp("20181011141735")

    def render(fields):
        return ",".join(f.render() for f in fields)

    checks = [
        (render(transform_spatial("G.024", "2", 0)), "deleted,deleted"),
        (render(transform_spatial("G.024", "2", 1)), "building,deleted"),
        (render(transform_spatial("G.024", "2", 2)), "Ground Floor,deleted"),
        (render(transform_spatial("G.024", "2", 3)), "G.024,deleted"),
        (render(transform_spatial("G.024", "2", 4)), "G.024,2"),
        (render(transform_temporal(ts, 0)), "deleted,deleted"),
        (render(transform_temporal(ts, 1)), "20181001,deleted"),
        (render(transform_temporal(ts, 2)), "20181011,deleted"),
        (render(transform_temporal(ts, 3)), "20181011,140000"),
        (render(transform_temporal(ts, 4)), "20181011,141735"),
        (render(transform_activity((287.0, 27.6, 63.8, 25.0), 0)), "deleted,deleted,deleted,deleted"),
        (render(transform_activity((287.0, 27.6, 63.8, 25.0), 1)), "300,0,100,0"),
        (render(transform_activity((287.0, 27.6, 63.8, 25.0), 2)), "290,30,60,30"),
        (render(transform_activity((287.0, 27.6, 63.8, 25.0), 3)), "287,27,63,25"),
        (render(transform_activity((287.0, 27.6, 63.8, 25.0), 4)), "287.0,27.6,63.8,25.0"),
    ]
    mismatches = [(got, want) for got, want in checks if got != want]
    elapsed = time.perf_counter() - started
    announce(
        1,
        "sita-fidelity",
        not mismatches and elapsed < 1.0,
        f"15/15 pairs exact, {elapsed:.3f}s" if not mismatches else f"mismatches: {mismatches}",
    )


def test_2_metric_oracle():
    """r2/mae/rmse vs brute-force formulas on 1,000 seeded random pairs."""
    started = time.perf_counter()
    g = rng(2024)
    worst = 0.0
    for _ in range(1000):
        n = int(g.integers(2, 201))
        y = g.normal(scale=10.0, size=n)
        p = g.normal(scale=10.0, size=n)
        mae_oracle = sum(abs(a - b) for a, b in zip(y, p)) / n
        rmse_oracle = math.sqrt(sum((a - b) ** 2 for a, b in zip(y, p)) / n)
        ybar = sum(y) / n
        ss_tot = sum((a - ybar) ** 2 for a in y)
        r2_oracle = 1.0 - sum((a - b) ** 2 for a, b in zip(y, p)) / ss_tot
        worst = max(
            worst,
            abs(mae(y, p) - mae_oracle),
            abs(rmse(y, p) - rmse_oracle),
            abs(r2(y, p) - r2_oracle),
        )
    elapsed = time.perf_counter() - started
    announce(
        2,
        "metric-oracle",
        worst < 1e-9 and elapsed < 5.0,
        f"max |error| {worst:.2e} over 1000 pairs, {elapsed:.2f}s",
    )


def test_3_fold_plan_properties():
    """Disjointness, coverage, size spread, determinism for all n in
    [10, 500] and k in {2, 5, 10}."""
    started = time.perf_counter()
    ok = True
    for n, k in itertools.product(range(10, 501), (2, 5, 10)):
        plan = kfold(n, k=k)
        sizes = [len(val) for _, val in plan.folds]
        seen = np.concatenate([val for _, val in plan.folds])
        ok &= len(plan.folds) == k
        ok &= sorted(seen.tolist()) == list(range(n))  # coverage + disjoint
        ok &= max(sizes) - min(sizes) <= 1
        again = kfold(n, k=k)
        ok &= all(
            np.array_equal(va, vb) for (_, va), (_, vb) in zip(plan.folds, again.folds)
        )
        if not ok:
            break
    elapsed = time.perf_counter() - started
    announce(
        3,
        "fold-plan-properties",
        ok and elapsed < 10.0,
        f"n in [10,500] x k in {{2,5,10}}, {elapsed:.2f}s",
    )


def test_4_model_sanity():
    started = time.perf_counter()
    failures = []

    # LR recovers planted coefficients exactly (no noise)
    g = rng(4)
    X = g.normal(size=(200, 5))
    coef = np.asarray([3.0, -1.5, 0.25, 2.0, -4.0])
    y = X @ coef + 7.0
    lr = models.fit(ModelSpec("lr"), X, y)
    if np.max(np.abs(lr.state[0] - coef)) > 1e-6 or abs(lr.state[1] - 7.0) > 1e-6:
        failures.append("lr-planted-coefficients")

    # RR -> LR as alpha -> 0
    rr = models.fit(ModelSpec("rr", params={"alpha": 1e-8}), X, y)
    if np.max(np.abs(rr.state[0] - lr.state[0])) > 1e-4:
        failures.append("rr-limit")

    # unlimited DTR: zero training error on 100 distinct-row instances
    for seed in range(100):
        gi = rng(1000 + seed)
        Xi = gi.normal(size=(25, 3))
        yi = gi.normal(size=25)
        dtr = models.fit(ModelSpec("dtr"), Xi, yi)
        if np.max(np.abs(models.predict(dtr, Xi) - yi)) > 1e-12:
            failures.append(f"dtr-exact-fit-seed-{seed}")
            break

    # RF(B=1, no bootstrap, all features) equals DTR prediction-for-prediction
    g = rng(5)
    X = g.normal(size=(150, 4))
    y = g.normal(size=150)
    rf1 = models.fit(ModelSpec("rf", params={"n_trees": 1, "bootstrap": False}), X, y)
    dtr = models.fit(ModelSpec("dtr"), X, y)
    if not np.array_equal(models.predict(rf1, X), models.predict(dtr, X)):
        failures.append("rf1-equals-dtr")

    # GBR training MSE non-increasing over 100 stages
    y_gbr = X[:, 0] * 2.0 + np.sin(3.0 * X[:, 1]) + 0.1 * g.normal(size=150)
    gbr = models.fit(ModelSpec("gbr"), X, y_gbr)
    mses = [float(np.mean((y_gbr - gbr.state.predict(X, n_stages=s)) ** 2)) for s in range(101)]
    if any(b > a + 1e-12 for a, b in zip(mses, mses[1:])):
        failures.append("gbr-monotone-mse")

    elapsed = time.perf_counter() - started
    announce(
        4,
        "model-sanity",
        not failures and elapsed < 30.0,
        f"{elapsed:.1f}s" if not failures else ", ".join(failures),
    )


def test_5_trend_reproduction():
    """Directional trends on full-scale synthetic data over 10 seeds.

    20,736 records per seed (synthesizer defaults), holdout evaluation.
    The activity dimension is probed at level 1, its deepest level that
    keeps the CO2 target (level 0 deletes it and is skipped by design).
    """
    started = time.perf_counter()
    configs = ["4444", "0444", "4404", "4441"]
    model_names = list(runner.DEFAULT_MODELS)
    hits_a = hits_b = hits_c = 0
    n_seeds = 10
    for seed in range(n_seeds):
        config = runner.ExperimentConfig(
            source={"kind": "synth", "synth": {"seed": seed}},
            sweep=configs,
            models=model_names,
            eval_mode="holdout",
            seed=seed,
            jobs=4,
        )
        result = runner.run(config)
        score = {
            (cfg, m): result.cell(cfg, m).report.mean_r2
            for cfg in configs
            for m in model_names
        }
        # (a) every model strictly below its baseline at temporal level 0
        if all(score[("4404", m)] < score[("4444", m)] for m in model_names):
            hits_a += 1
        # (b) tree ranking: RF and DTR above LR and RR at baseline
        if min(score[("4444", "rf")], score[("4444", "dtr")]) > max(
            score[("4444", "lr")], score[("4444", "rr")]
        ):
            hits_b += 1
        # (c) temporal is the most damaging swept dimension
        def mean_drop(cfg):
            return float(
                np.mean([score[("4444", m)] - score[(cfg, m)] for m in model_names])
            )

        if mean_drop("4404") > mean_drop("0444") and mean_drop("4404") > mean_drop("4441"):
            hits_c += 1
    elapsed = time.perf_counter() - started
    passed = hits_a >= 8 and hits_b >= 8 and hits_c >= 8 and elapsed < 600.0
    announce(
        5,
        "trend-reproduction",
        passed,
        f"temporal-drop {hits_a}/10, tree-ranking {hits_b}/10, "
        f"temporal-most-affected {hits_c}/10 seeds, {elapsed:.0f}s",
    )


def test_6_attack_demonstration():
    started = time.perf_counter()
    room = attack.RoomModel()
    profiles = (attack.DEFAULT_ALICE, attack.DEFAULT_BOB)
    physics = attack.physics_strategy(room, profiles)

    # noiseless: exactly 1.0
    noiseless = attack.attack_accuracy(
        attack.simulate_readings(room, profiles, 400, seed=0), physics
    )

    levels = sorted(attack.hypothesis_levels(room, profiles).values())
    min_gap = min(b - a for a, b in zip(levels, levels[1:]))
    noise_sd = 0.05 * min_gap

    means = {}
    for level in (4, 2, 1):
        accs = [
            attack.attack_accuracy(
                attack.simulate_readings(
                    room, profiles, 100, seed=s, noise_sd=noise_sd, activity_level=level
                ),
                physics,
            )
            for s in range(100)
        ]
        means[level] = sum(accs) / len(accs)

    passed = (
        noiseless == 1.0
        and means[4] >= 0.95
        and means[4] >= means[2] >= means[1]
    )
    elapsed = time.perf_counter() - started
    announce(
        6,
        "attack-demonstration",
        passed and elapsed < 60.0,
        f"noiseless {noiseless:.3f}, mean accuracy 4/2/1 = "
        f"{means[4]:.3f}/{means[2]:.3f}/{means[1]:.3f}, {elapsed:.0f}s",
    )


def test_7_end_to_end_determinism(tmp_path):
    """Two identical CLI sweep runs produce byte-identical sweep.csv bodies.

    Uses a reduced dataset (3,456 records) with the full model list and all
    three sweep dimensions so the runtime stays near criterion 5's scale.
    """
    from click.testing import CliRunner

    from sitabench.cli import main

    started = time.perf_counter()
    config_doc = {
        "schema_version": 1,
        "source": {"kind": "synth", "synth": {"n_rooms": 4, "days": 6, "seed": 0}},
        "sweep": ["X444", "44X4", "444X"],
        "models": list(runner.DEFAULT_MODELS),
        "eval_mode": "holdout",
        "seed": 0,
        "jobs": 4,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config_doc))

    cli = CliRunner()
    bodies = []
    for run_dir in ("run_a", "run_b"):
        out = tmp_path / run_dir
        result = cli.invoke(
            main, ["sweep", "--config", str(config_path), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        bodies.append((out / "sweep.csv").read_bytes())
    elapsed = time.perf_counter() - started
    announce(
        7,
        "end-to-end-determinism",
        bodies[0] == bodies[1] and len(bodies[0]) > 0,
        f"{len(bodies[0])} byte bodies identical, {elapsed:.0f}s",
    )
