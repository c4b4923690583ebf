import csv
import io

import numpy as np
import pytest

from bayes_aco.colony import AcoConfig, optimize
from bayes_aco.harness import (
    ExperimentSpec,
    SpecError,
    bundled_map,
    bundled_spec,
    load_spec,
    parse_spec,
    run_experiment,
    stability_generation,
    sweep,
)

from conftest import fixture_map


def write_spec(tmp_path, body, name="exp.spec"):
    p = tmp_path / name
    p.write_text(body)
    return p


def test_parse_spec(tmp_path):
    (tmp_path / "tiny.grid").write_text("S..\n.c.\n..G\n")
    spec = load_spec(write_spec(tmp_path, """
# comment
map = tiny.grid
algorithm = improved
ants = 7
K = 3
rho = 0.25
weights = 1,1,1,1
lambda4 = 2
rounds = 2
replicates = 3
seed_base = 40
decay_per_round = 0.3
"""))
    assert spec.map_path == tmp_path / "tiny.grid"
    assert spec.arms == ("improved",)
    assert (spec.config.ants, spec.config.generations, spec.config.evaporation) == (7, 3, 0.25)
    # lambda4 replaces the normalised 0.25, then the four are renormalised
    assert spec.weights.as_tuple() == pytest.approx(np.array([0.25, 0.25, 0.25, 2]) / 2.75)
    assert (spec.rounds, spec.replicates, spec.seed_base) == (2, 3, 40)
    assert spec.moisture.decay_per_round == 0.3


@pytest.mark.parametrize(
    "body, message",
    [
        ("map = nowhere.grid\n", "not found"),
        ("ants = 3\n", "no 'map'"),
        ("map = open10.grid\nbogus = 1\n", "unknown spec key"),
        ("map = open10.grid\nants = many\n", "bad value"),
        ("map = open10.grid\nants = 0\n", "ants"),
        ("map = open10.grid\nreplicates = 0\n", "replicates"),
        ("map = open10.grid\nalgorithm = genetic\n", "algorithm"),
        ("map = open10.grid\nmap = open10.grid\n", "duplicate"),
        ("map open10.grid\n", "key = value"),
    ],
)
def test_spec_errors(tmp_path, body, message):
    with pytest.raises(SpecError, match=message):
        load_spec(write_spec(tmp_path, body))


def test_bundled_specs_carry_thresholds():
    for name in ("info_gain_front_and_rear", "info_gain_brick_pattern", "info_gain_dense_area"):
        spec = load_spec(bundled_spec(name))
        assert spec.min_info_gain == pytest.approx(1.10)
        assert spec.max_length_inflation == pytest.approx(1.25)
        assert spec.replicates == 20 and spec.arms == ("baseline", "improved")
    with pytest.raises(SpecError):
        bundled_spec("nope")


def test_single_baseline_replicate_is_plain_optimize(tmp_path):
    spec = ExperimentSpec(
        bundled_map("dense_area"), arms=("baseline",), rounds=1, replicates=1,
        seed_base=4, config=AcoConfig(generations=25),
    )
    report = run_experiment(spec, tmp_path)
    best, conv = optimize(fixture_map("dense_area"), AcoConfig(generations=25, seed=4))
    assert report.arms["baseline"].best_length[0] == best.length
    assert (tmp_path / "convergence_baseline_0.csv").read_text() == conv.to_csv()
    assert set(report.arms) == {"baseline"}


def test_improved_open_field_coverage_grows(tmp_path):
    spec = ExperimentSpec(
        bundled_map("open10"), arms=("improved",), rounds=3, replicates=2,
        config=AcoConfig(generations=40),
    )
    report = run_experiment(spec)
    cov = report.arms["improved"].coverage
    for row in cov:
        for a, b in zip(row, row[1:]):
            assert b > a or a == 1.0


def test_experiment_artifacts_are_byte_stable(tmp_path):
    spec = ExperimentSpec(
        bundled_map("brick_pattern"), rounds=2, replicates=2, seed_base=7,
        config=AcoConfig(generations=15),
    )
    run_experiment(spec, tmp_path / "a")
    run_experiment(spec, tmp_path / "b", jobs=2)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    assert {"report.csv", "irrigation_grid_baseline.csv", "irrigation_grid_improved.csv",
            "convergence_improved_1.csv"} <= set(names)
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    rows = list(csv.DictReader(io.StringIO((tmp_path / "a" / "report.csv").read_text())))
    assert {r["arm"] for r in rows} == {"baseline", "improved"}
    assert all(len(r["mean_length"].split(".")[1]) == 6 for r in rows)


def test_report_aggregates(tmp_path):
    spec = ExperimentSpec(
        bundled_map("dense_area"), rounds=2, replicates=3, config=AcoConfig(generations=15),
    )
    report = run_experiment(spec)
    for arm in report.arms.values():
        assert arm.replicates == 3
        assert arm.lengths.shape == (3, 2)
        assert arm.lengths.std(axis=0).min() >= 0
        expect = np.mean(arm.newly_explored[:, 1] / arm.lengths[:, 1])
        assert arm.info_per_length == pytest.approx(expect)
    assert report.info_gain() > 0 and report.length_inflation() > 0


def test_sweep_outputs_summary(tmp_path):
    spec = ExperimentSpec(
        bundled_map("open10"), arms=("baseline",), rounds=1, replicates=3,
        config=AcoConfig(generations=20),
    )
    results = sweep(spec, "K", [1, 100], tmp_path)
    assert [v for v, _ in results] == [1, 100]
    assert results[1][1].arms["baseline"].best_length.mean() <= results[0][1].arms["baseline"].best_length.mean()
    rows = list(csv.DictReader(io.StringIO((tmp_path / "sweep_summary.csv").read_text())))
    assert [r["value"] for r in rows] == ["1", "100"]
    lam = sweep(spec, "lambda4", [0.5])
    assert lam[0][1].spec.weights.unexplored == pytest.approx(0.5 / 1.15)
    m = sweep(spec, "M", [5])
    assert m[0][1].spec.config.ants == 5


def test_sweep_large_ant_counts_accepted():
    spec = ExperimentSpec(
        bundled_map("open10"), arms=("baseline",), rounds=1, replicates=1,
        config=AcoConfig(generations=2),
    )
    out = sweep(spec, "M", [100, 150, 200, 250])
    assert [r.spec.config.ants for _, r in out] == [100, 150, 200, 250]


def test_sweep_errors():
    spec = ExperimentSpec(bundled_map("open10"), replicates=1)
    with pytest.raises(SpecError, match="unknown sweep parameter"):
        sweep(spec, "gamma", [1])
    with pytest.raises(SpecError, match="at least one"):
        sweep(spec, "M", [])


def test_stability_generation():
    assert stability_generation([5.0] * 20) == 0
    assert stability_generation(np.arange(50, 0, -1.0), tolerance=0.5) is None
    series = np.concatenate([np.arange(100.0, 70.0, -1.0), np.full(40, 70.0)])
    assert stability_generation(series, window=10, tolerance=1.0) == 30
    assert stability_generation([np.inf] * 5 + [3.0] * 11) == 5
    assert stability_generation([1.0] * 5, window=10) is None
    with pytest.raises(ValueError):
        stability_generation([1.0], window=0)


def test_parse_spec_inline(tmp_path):
    spec = parse_spec("map = open10.grid\nalgorithm = baseline,improved\n")
    assert spec.arms == ("baseline", "improved")
    assert spec.with_overrides(replicates=2, seed_base=5).replicates == 2
