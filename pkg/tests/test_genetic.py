"""Genetic operators, the evaluation loop and the search driver."""

from __future__ import annotations

import numpy as np
import pytest

from romga import (
    Chromosome,
    GaConfig,
    GaHistory,
    PersistenceError,
    PlumeParams,
    SearchSpace,
    Target,
    analytic_plume,
    build_mask,
    cost,
    read_history_csv,
    reconstruct_sample,
    run,
)
from romga.genetic import (
    HISTORY_COLUMNS,
    PENALTY_COST,
    GenerationRecord,
    _population_digest,
    crossover,
    evaluate_population,
    init_population,
    mutate,
    roulette_select,
    step_generation,
)

SPACE = SearchSpace((0.30, 0.50), (2, 5), (4, 10))


@pytest.fixture(scope="module")
def plume_target(plume_db, plume_grid, plume_times):
    mask = build_mask(plume_grid, (0.1, 0.9, 0.15, 0.7))
    truth = analytic_plume(PlumeParams(0.4, sigma=0.3), plume_grid, plume_times)
    return Target(truth.values[mask.indices], mask, plume_times)


class ScriptedRng:
    """Replays queued outputs; raises when a test consumes more than queued."""

    def __init__(self, randoms=(), integers=()):
        self._randoms = list(randoms)
        self._integers = list(integers)

    def random(self, size=None):
        assert size is None
        return self._randoms.pop(0)

    def integers(self, lo, hi):
        value = self._integers.pop(0)
        assert lo <= value < hi
        return value


# ---------------------------------------------------------------- spaces


def test_search_space_validation():
    with pytest.raises(ValueError):
        SearchSpace((0.5, 0.3), (2, 4), (1, 5))
    with pytest.raises(ValueError):
        SearchSpace((0.3, 0.5), (1, 4), (1, 5))  # ne below 2
    with pytest.raises(ValueError):
        SearchSpace((0.3, 0.5), (2, 4), (0, 5))  # m below 1
    with pytest.raises(ValueError):
        SearchSpace((0.3, 0.5), (4, 2), (1, 5))


def test_search_space_contains_and_clamp():
    assert SPACE.contains(Chromosome(0.4, 2, 5, 7))
    assert not SPACE.contains(Chromosome(0.29, 2, 5, 7))
    assert not SPACE.contains(Chromosome(0.4, 6, 5, 7))
    clamped = SPACE.clamp(Chromosome(0.7, 1, 9, 0))
    assert clamped == Chromosome(0.5, 2, 5, 4)


def test_config_validation():
    with pytest.raises(ValueError):
        GaConfig(SPACE, population_size=1)
    with pytest.raises(ValueError):
        GaConfig(SPACE, generations=-1)
    with pytest.raises(ValueError):
        GaConfig(SPACE, crossover_prob=1.5)
    with pytest.raises(ValueError):
        GaConfig(SPACE, mutation_prob=-0.1)
    with pytest.raises(ValueError):
        GaConfig(SPACE, population_size=5, elite_count=5)


# ---------------------------------------------------------------- init


def test_initial_population_respects_bounds_and_seed():
    cfg = GaConfig(SPACE, population_size=40, rng_seed=9)
    pop = init_population(cfg)
    assert len(pop) == 40
    assert all(SPACE.contains(c) for c in pop)
    assert pop == init_population(cfg)
    assert pop != init_population(GaConfig(SPACE, population_size=40, rng_seed=10))


def test_initial_population_handles_a_point_delta_range():
    space = SearchSpace((0.4, 0.4), (2, 5), (4, 10))
    pop = init_population(GaConfig(space, population_size=10))
    assert all(c.delta == 0.4 for c in pop)


# ---------------------------------------------------------------- roulette


def test_roulette_frequencies_follow_fitness():
    rng = np.random.default_rng(42)
    picks = roulette_select(np.array([1.0, 3.0]), 100_000, rng)
    freq = float(picks.mean())  # picks are 0/1, the mean is P(index 1)
    assert abs(freq - 0.75) <= 3.0 * np.sqrt(0.75 * 0.25 / 100_000)


def test_roulette_is_scale_invariant():
    f = np.array([1.0, 3.0, 2.5])
    a = roulette_select(f, 500, np.random.default_rng(11))
    b = roulette_select(2.0 * f, 500, np.random.default_rng(11))
    c = roulette_select(3.7 * f, 500, np.random.default_rng(11))
    assert np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_roulette_with_one_candidate_always_picks_it():
    rng = np.random.default_rng(4)
    picks = roulette_select(np.array([2.5]), 5, rng)
    assert picks.tolist() == [0, 0, 0, 0, 0]


def test_roulette_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        roulette_select(np.array([]), 3, rng)
    with pytest.raises(ValueError):
        roulette_select(np.array([1.0, 0.0]), 3, rng)
    with pytest.raises(ValueError):
        roulette_select(np.array([1.0, -2.0]), 3, rng)
    with pytest.raises(ValueError):
        roulette_select(np.array([1.0, np.inf]), 3, rng)


# ---------------------------------------------------------------- operators


def test_crossover_passes_parents_through_above_the_gate():
    cfg = GaConfig(SPACE, crossover_prob=0.8)
    a, b = Chromosome(0.35, 2, 3, 5), Chromosome(0.45, 4, 5, 9)
    out_a, out_b = crossover(a, b, ScriptedRng(randoms=[0.9]), cfg)
    assert out_a is a and out_b is b


def test_crossover_blends_delta_and_swaps_integer_tails():
    cfg = GaConfig(SPACE, crossover_prob=0.8)
    a, b = Chromosome(0.35, 2, 3, 5), Chromosome(0.45, 4, 5, 9)
    # gate 0.5 passes, beta 0.5 puts both children at the midpoint, cut
    # after gene 1 swaps (ne_x, m)
    out_a, out_b = crossover(a, b, ScriptedRng(randoms=[0.5, 0.5], integers=[1]), cfg)
    assert out_a == Chromosome(0.40, 2, 5, 9)
    assert out_b == Chromosome(0.40, 4, 3, 5)
    # cut after gene 2 swaps only m
    out_a, out_b = crossover(a, b, ScriptedRng(randoms=[0.5, 0.25], integers=[2]), cfg)
    assert out_a == Chromosome(0.25 * 0.35 + 0.75 * 0.45, 2, 3, 9)
    assert out_b == Chromosome(0.75 * 0.35 + 0.25 * 0.45, 4, 5, 5)


def test_crossover_children_stay_inside_the_space(rng):
    cfg = GaConfig(SPACE, crossover_prob=1.0)
    a, b = Chromosome(0.31, 2, 5, 4), Chromosome(0.49, 5, 2, 10)
    for _ in range(200):
        for child in crossover(a, b, rng, cfg):
            assert SPACE.contains(child)


def test_mutation_gate_and_branches():
    quiet = GaConfig(SPACE, mutation_prob=0.0)
    c = Chromosome(0.4, 3, 4, 7)
    assert mutate(c, ScriptedRng(randoms=[0.0]), quiet) is c

    loud = GaConfig(SPACE, mutation_prob=1.0)
    out = mutate(c, ScriptedRng(randoms=[0.5], integers=[1, 5]), loud)
    assert out == Chromosome(0.4, 5, 4, 7)
    out = mutate(c, ScriptedRng(randoms=[0.5], integers=[2, 2]), loud)
    assert out == Chromosome(0.4, 3, 2, 7)
    out = mutate(c, ScriptedRng(randoms=[0.5], integers=[3, 10]), loud)
    assert out == Chromosome(0.4, 3, 4, 10)


def test_mutation_resamples_one_gene_at_a_time(rng):
    cfg = GaConfig(SPACE, mutation_prob=1.0)
    c = Chromosome(0.4, 3, 4, 7)
    delta_changes = 0
    trials = 20_000
    for _ in range(trials):
        out = mutate(c, rng, cfg)
        assert SPACE.contains(out)
        changed = (
            (out.delta != c.delta)
            + (out.ne_t != c.ne_t)
            + (out.ne_x != c.ne_x)
            + (out.m != c.m)
        )
        assert changed <= 1  # a resample may also land on the old value
        delta_changes += out.delta != c.delta
    # the float gene is picked 1/4 of the time and almost surely moves
    assert abs(delta_changes / trials - 0.25) <= 3.0 * np.sqrt(0.25 * 0.75 / trials)


# ---------------------------------------------------------------- stepping


def test_step_preserves_size_and_elites(rng):
    cfg = GaConfig(SPACE, population_size=7, elite_count=2)
    pop = init_population(cfg)
    costs = np.linspace(1.0, 7.0, 7)
    fitnesses = 1.0 / costs
    nxt = step_generation(pop, costs, fitnesses, rng, cfg)
    assert len(nxt) == 7
    assert nxt[0] is pop[0] and nxt[1] is pop[1]
    assert all(SPACE.contains(c) for c in nxt)


def test_step_handles_odd_offspring_counts(rng):
    cfg = GaConfig(SPACE, population_size=6, elite_count=1)
    pop = init_population(cfg)
    costs = np.arange(1.0, 7.0)
    nxt = step_generation(pop, costs, 1.0 / costs, rng, cfg)
    assert len(nxt) == 6


# ---------------------------------------------------------------- evaluation


def test_node_chromosome_scores_like_the_trained_sample(plume_db, plume_target):
    # delta 0.35 is training sample 1; at full order the prediction is the
    # sample itself, so the cost must agree with scoring it directly.
    cfg = GaConfig(SPACE)
    costs, _ = evaluate_population([Chromosome(0.35, 2, 2, 10)], plume_db, plume_target, cfg)
    sample = reconstruct_sample(plume_db, 1, m=10)
    direct = cost(sample.values[plume_target.mask.indices], plume_target)
    assert costs[0] == pytest.approx(direct, rel=1e-8)


def test_identical_chromosomes_score_identically(plume_db, plume_target):
    cfg = GaConfig(SPACE)
    twins = [Chromosome(0.37, 3, 3, 8)] * 3
    costs, fitnesses = evaluate_population(twins, plume_db, plume_target, cfg)
    assert costs[0] == costs[1] == costs[2]
    assert np.all(fitnesses == 1.0 / (costs + 1e-12))


def test_evaluation_cache_short_circuits(plume_db, plume_target):
    cfg = GaConfig(SPACE)
    pop = [Chromosome(0.37, 3, 3, 8), Chromosome(0.44, 2, 4, 6)]
    cache: dict = {}
    costs, _ = evaluate_population(pop, plume_db, plume_target, cfg, cache)
    assert len(cache) == 2
    poisoned = {key: 123.5 for key in cache}
    again, _ = evaluate_population(pop, plume_db, plume_target, cfg, poisoned)
    assert again.tolist() == [123.5, 123.5]  # proves values came from the cache
    fresh, _ = evaluate_population(pop, plume_db, plume_target, cfg, {})
    assert np.array_equal(fresh, costs)


def test_rejected_requests_cost_the_penalty(plume_db, plume_target):
    cfg = GaConfig(SPACE)
    pop = [
        Chromosome(0.4, 9, 3, 8),   # ne_t beyond the sample count
        Chromosome(0.4, 3, 3, 8),
    ]
    costs, fitnesses = evaluate_population(pop, plume_db, plume_target, cfg)
    assert costs[0] == PENALTY_COST
    assert costs[1] < PENALTY_COST
    assert 0.0 < fitnesses[0] < fitnesses[1]


def test_cost_landscape_bottoms_out_at_the_true_parameter(plume_db, plume_target):
    cfg = GaConfig(SPACE)
    deltas = np.linspace(0.30, 0.50, 21)
    pop = [Chromosome(d, 3, 3, 10) for d in deltas]
    costs, _ = evaluate_population(pop, plume_db, plume_target, cfg)
    at_truth = costs[10]  # deltas[10] == 0.40
    assert deltas[10] == pytest.approx(0.40, abs=1e-12)
    others = [c for i, c in enumerate(costs) if abs(deltas[i] - 0.40) >= 0.0099]
    assert at_truth < min(others)


# ---------------------------------------------------------------- the driver


def test_run_validates_against_the_database(plume_db, plume_target):
    bad_hull = GaConfig(SearchSpace((0.25, 0.50), (2, 5), (4, 10)))
    with pytest.raises(ValueError):
        run(bad_hull, plume_db, plume_target)
    bad_ne = GaConfig(SearchSpace((0.30, 0.50), (2, 6), (4, 10)))
    with pytest.raises(ValueError):
        run(bad_ne, plume_db, plume_target)
    bad_m = GaConfig(SearchSpace((0.30, 0.50), (2, 5), (4, 11)))
    with pytest.raises(ValueError):
        run(bad_m, plume_db, plume_target)


def test_run_recovers_the_generating_parameter(plume_db, plume_target):
    cfg = GaConfig(SPACE, population_size=12, generations=8, rng_seed=5)
    best, history = run(cfg, plume_db, plume_target)
    assert abs(best.delta - 0.40) <= 0.02
    assert len(history) == 8
    assert [r.generation for r in history.records] == list(range(1, 9))


def test_run_is_deterministic(plume_db, plume_target):
    cfg = GaConfig(SPACE, population_size=8, generations=4, rng_seed=21)
    best_a, hist_a = run(cfg, plume_db, plume_target)
    best_b, hist_b = run(cfg, plume_db, plume_target)
    assert best_a == best_b
    assert hist_a.records == hist_b.records


def test_run_with_elitism_never_backslides(plume_db, plume_target):
    cfg = GaConfig(SPACE, population_size=10, generations=6, rng_seed=3, elite_count=1)
    best, history = run(cfg, plume_db, plume_target)
    series = [r.best_cost for r in history.records]
    assert all(b <= a for a, b in zip(series, series[1:]))
    assert min(series) == series[-1]
    # the returned best matches the cheapest recorded generation leader
    assert best == history.records[int(np.argmin(series))].best


def test_run_with_zero_generations_scores_the_initial_population(
    plume_db, plume_target
):
    cfg = GaConfig(SPACE, population_size=6, generations=0, rng_seed=1)
    best, history = run(cfg, plume_db, plume_target)
    assert len(history) == 1
    assert history.records[0].generation == 1
    assert SPACE.contains(best)


# ---------------------------------------------------------------- history


def _history():
    records = (
        GenerationRecord(1, Chromosome(0.4, 3, 2, 5), 0.25, 1.5, "aa"),
        GenerationRecord(2, Chromosome(0.41, 2, 2, 6), 0.125, 0.75, "bb"),
    )
    return GaHistory(records)


def test_history_round_trips_through_csv(tmp_path):
    path = tmp_path / "history.csv"
    history = _history()
    history.write_csv(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(HISTORY_COLUMNS)
    assert lines[1] == "1,0.4,3,2,5,0.25,1.5"
    back = read_history_csv(path)
    for orig, rec in zip(history.records, back.records):
        assert (rec.generation, rec.best, rec.best_cost, rec.avg_cost) == (
            orig.generation,
            orig.best,
            orig.best_cost,
            orig.avg_cost,
        )


def test_history_rewrites_are_byte_identical(tmp_path):
    history = _history()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    history.write_csv(a)
    history.write_csv(b)
    assert a.read_bytes() == b.read_bytes()


def test_history_reader_rejects_foreign_files(tmp_path):
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("alpha,beta\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_history_csv(wrong)
    short_row = tmp_path / "short.csv"
    short_row.write_text(",".join(HISTORY_COLUMNS) + "\n1,0.4,3\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_history_csv(short_row)
    garbled = tmp_path / "garbled.csv"
    garbled.write_text(
        ",".join(HISTORY_COLUMNS) + "\n1,zero point four,3,2,5,0.25,1.5\n",
        encoding="utf-8",
    )
    with pytest.raises(ValueError):
        read_history_csv(garbled)
    with pytest.raises(PersistenceError):
        read_history_csv(tmp_path / "absent.csv")
    with pytest.raises(PersistenceError):
        _history().write_csv(tmp_path / "no_dir" / "history.csv")


def test_population_digest_tracks_content():
    pop_a = [Chromosome(0.4, 3, 2, 5), Chromosome(0.41, 2, 2, 6)]
    pop_b = [Chromosome(0.4, 3, 2, 5), Chromosome(0.41, 2, 2, 7)]
    digest_a = _population_digest(pop_a)
    assert len(digest_a) == 16
    assert int(digest_a, 16) >= 0  # hex
    assert digest_a == _population_digest(list(pop_a))
    assert digest_a != _population_digest(pop_b)
