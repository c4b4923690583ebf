import csv
import io

import numpy as np
import pytest

from bayes_aco._kernel import walk_colony
from bayes_aco.bayes import (
    EXPLORE,
    FIRST_ROUND_WEIGHTS,
    CruiseSettings,
    DegenerateEvidenceError,
    EdgeFactors,
    FactorScores,
    FactorWeights,
    RiskTable,
    cruise_round,
    factor_scores,
    likelihood,
    min_risk_decision,
    posterior,
    run_cruises,
    select_next,
    step_distribution,
    swath,
    walk,
)
from bayes_aco.colony import AcoConfig, PheromoneField, Topology, transition_prior
from bayes_aco.field import DROUGHT_MAX, FieldState, apply_maximum_risk, record_pass
from bayes_aco.grid import neighbors, parse_map

from conftest import fixture_map


class ReplayRng:
    def __init__(self, values):
        self.values = list(values)
        self.i = 0

    def random(self):
        v = self.values[self.i]
        self.i += 1
        return v


def test_weights_normalised():
    w = FactorWeights(1, 1, 2, 4)
    assert w.as_tuple() == (0.125, 0.125, 0.25, 0.5)
    assert sum(FactorWeights().as_tuple()) == pytest.approx(1.0, abs=1e-12)
    assert FactorWeights.parse("1,1,0,0") == FactorWeights(0.5, 0.5, 0, 0)
    for bad in ("1,2,3", "a,b,c,d"):
        with pytest.raises(ValueError):
            FactorWeights.parse(bad)
    with pytest.raises(ValueError):
        FactorWeights(0, 0, 0, 0)
    with pytest.raises(ValueError):
        FactorWeights(-1, 1, 1, 1)


def test_scores_on_open_window():
    grid = fixture_map("open10")
    s = factor_scores(grid, FieldState.fresh(grid), (5, 4), (5, 5))
    assert s.f2 == 1.0
    assert s.f4 == 1.0 and s.f3 == 0.0


def test_obstacle_factor_value():
    # two components inside the window: a 1x4 wall and a 1x2 wall
    grid = parse_map(
        "S.........\n"
        "..####....\n"
        "..........\n"
        "..##......\n"
        "..........\n"
        ".........G\n"
    )
    s = factor_scores(grid, FieldState.fresh(grid), (2, 1), (2, 2))
    assert s.f2 == 1 / 8


def test_goal_factor_clamps_at_one():
    grid = fixture_map("open10")
    s = factor_scores(grid, FieldState.fresh(grid), (7, 8), (8, 9))
    assert s.f1 == 1.0
    s = factor_scores(grid, FieldState.fresh(grid), (7, 7), (8, 8))
    assert s.f1 == pytest.approx(2 ** -0.5, abs=1e-15)
    s = factor_scores(grid, FieldState.fresh(grid), (0, 0), (0, 1))
    assert s.f1 == pytest.approx(1 / np.hypot(9, 8), abs=1e-15)


def test_drought_factor_is_clipped():
    grid = fixture_map("open10")
    state = apply_maximum_risk(FieldState.fresh(grid), grid)
    s = factor_scores(grid, state, (5, 4), (5, 5))
    assert s.f3 == 1.0
    one = FieldState.fresh(grid)
    drought = one.drought.copy()
    drought[5, 6] = 3
    s = factor_scores(grid, one.copy(drought=drought), (5, 4), (5, 5))
    assert s.f3 == pytest.approx(3 / 25)


def test_likelihood_examples():
    s = FactorScores(0.4, 1.0, 0.9, 0.2)
    assert likelihood(s, FIRST_ROUND_WEIGHTS) == pytest.approx(0.7, abs=1e-15)
    assert likelihood(FactorScores(1, 1, 1, 1), FactorWeights(3, 1, 4, 1)) == pytest.approx(1.0)
    assert likelihood(s, FactorWeights(1, 0, 0, 0)) == 0.4


def test_posterior_examples():
    assert posterior([0.5, 0.5], [0.4, 0.1]) == pytest.approx([0.8, 0.2])
    prior = np.array([0.1, 0.6, 0.3])
    assert posterior(prior, [0.2, 0.2, 0.2]) == pytest.approx(prior, abs=1e-15)
    lik = np.array([0.3, 0.5, 0.2])
    assert posterior([1 / 3] * 3, lik) == pytest.approx(lik / lik.sum())
    with pytest.raises(DegenerateEvidenceError):
        posterior([0.5, 0.5], [0.0, 0.0])


def test_min_risk_examples():
    table = RiskTable()
    assert min_risk_decision([0.7, 0.3], table) == 0
    assert min_risk_decision([0.2, 0.8], table) == 1
    assert min_risk_decision([0.5, 0.5], table) == 0
    three = RiskTable(1 - np.eye(3))
    assert min_risk_decision([0.2, 0.5, 0.3], three) == 1
    with pytest.raises(ValueError):
        min_risk_decision([0.5, 0.5], three)


def test_risk_table_rules():
    with pytest.raises(ValueError):
        RiskTable(np.array([[0, -1], [1, 0]]))
    with pytest.raises(ValueError):
        RiskTable(np.array([[1, 1], [1, 0]])).check_diagonal()
    RiskTable().check_diagonal()
    t = RiskTable().lowered(EXPLORE, 0.3)
    assert t.table.tolist() == [[0.0, 0.7], [1.0, 0.0]]
    for _ in range(5):
        t = t.lowered(EXPLORE, 0.3)
    assert t.table[0, 1] == 0.0


def test_cruise_settings_validation():
    with pytest.raises(ValueError):
        CruiseSettings(risk=RiskTable(1 - np.eye(3)))
    with pytest.raises(ValueError):
        CruiseSettings(drought_max=0)
    with pytest.raises(ValueError):
        CruiseSettings(irrigation_radius=-1)


def _random_state(grid, seed):
    rng = np.random.default_rng(seed)
    return FieldState.fresh(grid).copy(
        traversal=rng.integers(0, 2, grid.cells.shape),
        drought=rng.integers(0, DROUGHT_MAX + 1, grid.cells.shape),
    )


@pytest.mark.parametrize("name", ["dense_area", "brick_pattern", "open10"])
def test_edge_tables_match_direct_scores(name):
    grid = fixture_map(name)
    topo = Topology(grid)
    tables = EdgeFactors(grid, topo)
    state = _random_state(grid, 4)
    f1, f2, f3, f4 = tables.scores(state)
    for i, d in zip(*np.nonzero(topo.valid)):
        frm = topo.coord(i)
        to = topo.coord(topo.nbr[i, d])
        s = factor_scores(grid, state, frm, to)
        assert (f1[i, d], f2[i, d], f3[i, d], f4[i, d]) == s.as_tuple()


def test_uniform_prior_reduces_to_score_ranking():
    grid = fixture_map("dense_area")
    topo = Topology(grid)
    cfg = AcoConfig(alpha=0, beta=0)
    field = PheromoneField.uniform(topo, 1.0)
    state = _random_state(grid, 1)
    at = (10, 10) if grid.traversable((10, 10)) else grid.start
    dist = step_distribution(grid, state, field, at, {at}, FIRST_ROUND_WEIGHTS, cfg, topo=topo)
    scores = {c: 0.5 * factor_scores(grid, state, at, c).f1 + 0.5 * factor_scores(grid, state, at, c).f2
              for c in dist}
    total = sum(scores.values())
    for c in dist:
        assert dist[c] == pytest.approx(scores[c] / total, abs=1e-12)


def test_unexplored_dry_candidate_wins():
    grid = fixture_map("open10")
    state = FieldState.fresh(grid)
    at = (5, 5)
    # explore and dry out the whole map except the window ahead of (5,6)
    everything = {(r, c) for r in range(10) for c in range(10)}
    ahead = {(r, c) for r in range(3, 8) for c in range(6, 10)}
    state = record_pass(state, grid, everything - ahead)
    state = apply_maximum_risk(state, grid)
    cfg = AcoConfig(alpha=0, beta=0)  # uniform prior
    field = PheromoneField.uniform(Topology(grid), 1.0)
    dist = step_distribution(grid, state, field, at, {at}, FactorWeights(0, 0, 0.5, 0.5), cfg)
    best = max(dist, key=dist.get)
    assert best == (5, 6)
    s = factor_scores(grid, state, at, (5, 6))
    assert s.f3 == 1.0 and s.f4 == 1.0
    assert all(dist[c] < dist[best] for c in dist if c != best)


def test_degenerate_evidence_falls_back_to_prior():
    grid = fixture_map("open10")
    state = FieldState.fresh(grid)  # no drought anywhere
    field = PheromoneField.uniform(Topology(grid), 1.0)
    cfg = AcoConfig()
    dist = step_distribution(grid, state, field, (4, 4), {(4, 4)}, FactorWeights(0, 0, 1, 0), cfg)
    assert dist == transition_prior(field, grid, (4, 4), {(4, 4)}, cfg)


def test_greedy_select_is_deterministic():
    grid = fixture_map("brick_pattern")
    state = _random_state(grid, 2)
    field = PheromoneField.uniform(Topology(grid), 1.0)
    picks = {
        select_next(grid, state, field, grid.start, {grid.start}, FactorWeights(), AcoConfig(),
                    greedy=True, risk=RiskTable())
        for _ in range(5)
    }
    assert len(picks) == 1
    with pytest.raises(ValueError):
        select_next(grid, state, field, grid.start, {grid.start}, FactorWeights(), AcoConfig())


@pytest.mark.parametrize("name", ["dense_area", "corridor_waves", "open10"])
@pytest.mark.parametrize("use_risk", [False, True])
def test_kernel_matches_reference_bayes_walk(name, use_risk):
    grid = fixture_map(name)
    topo = Topology(grid)
    tables = EdgeFactors(grid, topo)
    state = _random_state(grid, 9)
    weights = FactorWeights()
    cfg = AcoConfig()
    rng = np.random.default_rng(0)
    tau = np.where(topo.valid, rng.random(topo.valid.shape) + 0.05, 0)
    field = PheromoneField(tau, topo.valid, topo.width)
    risk = RiskTable(np.array([[0.0, 0.4], [1.0, 0.0]]))
    lik, f4 = tables.likelihood(state, weights)
    steps = cfg.steps_for(grid)
    u = rng.random((10, min(steps, topo.n_cells)))
    for greedy in (False, True):
        paths, n_cells, lengths, _, ok = walk_colony(
            topo.nbr, topo.cost, tau, topo.eta_edge, cfg.alpha, cfg.beta, lik, f4,
            True, use_risk, risk.table, topo.start, topo.goal, u, steps, greedy,
        )
        for a in range(2 if greedy else 10):
            ref = walk(grid, state, field, weights, cfg, ReplayRng(u[a]), greedy,
                       risk if use_risk else None)
            if ref is None:
                assert not ok[a]
                continue
            assert ok[a]
            assert tuple(topo.coord(i) for i in paths[a, : n_cells[a]]) == ref.cells


def test_swath_radius():
    grid = fixture_map("open10")
    from bayes_aco.colony import Path

    p = Path.from_cells([(0, 0), (1, 1)])
    assert swath(grid, p, 0) == {(0, 0), (1, 1)}
    assert swath(grid, p, 1) == {(r, c) for r in range(3) for c in range(3)}
    blocked = parse_map("S#\n.G\n")
    assert swath(blocked, Path.from_cells([(0, 0)]), 1) == {(0, 0), (1, 0), (1, 1)}


def test_cruise_round_irrigates_swath():
    grid = fixture_map("dense_area")
    state = FieldState.fresh(grid)
    path, new, rec = cruise_round(grid, state, FactorWeights(), AcoConfig(generations=20))
    for rc in swath(grid, path, 1):
        assert new.traversal[rc] == 0
    assert rec.newly_explored == len(swath(grid, path, 1))
    assert rec.cells_irrigated == sum(grid.crop_mask[rc] for rc in swath(grid, path, 1))


def test_round_one_ignores_field_tables():
    grid = fixture_map("front_and_rear")
    cfg = AcoConfig(seed=5, generations=30)
    fresh = cruise_round(grid, FieldState.fresh(grid), FactorWeights(), cfg)[0]
    noisy = cruise_round(grid, _random_state(grid, 77), FactorWeights(), cfg)[0]
    assert fresh == noisy


def test_second_round_explores_new_ground():
    grid = fixture_map("open10")
    report = run_cruises(grid, 2, config=AcoConfig(seed=0))
    first = swath(grid, report.rounds[0].path, 1)
    assert report.rounds[1].newly_explored >= 1
    assert any(c not in first for c in report.rounds[1].path.cells)


def test_cruise_report_contents():
    grid = fixture_map("open10")
    one = run_cruises(grid, 1, config=AcoConfig(seed=0, generations=20))
    assert len(one.rounds) == 1 and len(one.coverage) == 1
    rep = run_cruises(grid, 4, config=AcoConfig(seed=1, generations=20))
    assert np.all(np.diff(rep.coverage) >= 0)
    assert [r.round for r in rep.rounds] == [1, 2, 3, 4]
    assert rep.state.round == 4
    explore_loss = [r.table[EXPLORE, 1] for r in rep.risk_history]
    assert explore_loss[0] == 1.0
    assert all(b <= a for a, b in zip(explore_loss, explore_loss[1:]))
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0][:6] == [
        "round", "path_length", "cells_irrigated", "coverage_fraction",
        "mean_drought_before", "mean_drought_after",
    ]
    assert len(rows) == 5
    grid_rows = list(csv.reader(io.StringIO(rep.irrigation_grid_csv())))
    assert len(grid_rows) == 10 and all(len(r) == 10 for r in grid_rows)
    counts = np.array([[float(v) for v in r] for r in grid_rows])
    assert np.array_equal(counts, rep.irrigation_count)
    with pytest.raises(ValueError):
        run_cruises(grid, 0)


def test_baseline_arm_round_one_equals_plain_colony():
    from bayes_aco.colony import optimize

    grid = fixture_map("brick_pattern")
    cfg = AcoConfig(seed=3, generations=30)
    rep = run_cruises(grid, 2, config=cfg, algorithm="baseline")
    assert rep.rounds[0].path == optimize(grid, cfg)[0]
    with pytest.raises(ValueError):
        cruise_round(grid, FieldState.fresh(grid), FactorWeights(), cfg, algorithm="other")


def test_trace_records_every_step():
    grid = fixture_map("dense_area")
    rep = run_cruises(grid, 2, config=AcoConfig(seed=0, generations=15), record_trace=True)
    for rec in rep.rounds:
        assert len(rec.trace) == len(rec.path) - 1
        assert rec.planning_state is not None
        for step in rec.trace:
            assert step.chosen in step.candidates
            assert set(step.candidates) <= {c for c, _ in neighbors(grid, step.at)}
