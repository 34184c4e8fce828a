"""Fitness, precision, and quality scoring."""

import random

from powlgen.model import Activity, Loop, PartialOrder, Silent, Xor, auto_fix_reuse, canonicalize
from powlgen.semantics import EventLog, SimulationConfig, enumerate_variants, simulate_log
from powlgen.translate import to_petri_net
from powlgen.conformance import (
    escaping_precision,
    evaluate_model,
    quality_score,
    replay_fitness,
)

from gen_strategies import random_model
from model_builders import bicycle_model


def log_of(*traces):
    return EventLog([(f"c{i + 1}", tuple(t)) for i, t in enumerate(traces)])


# ---------------------------------------------------------------------------
# Fitness
# ---------------------------------------------------------------------------

def test_fitness_hand_worked_sequence_example():
    net = to_petri_net(PartialOrder((Activity("A"), Activity("B")), frozenset({(0, 1)})))
    fitness, counters, fits = replay_fitness(net, log_of(["B"]))
    assert fitness == 0.5
    assert counters.to_dict() == {"produced": 2, "consumed": 2, "missing": 1, "remaining": 1}
    assert fits == [False]


def test_fitness_self_conformance_is_exact():
    m = canonicalize(bicycle_model())
    net = to_petri_net(m)
    log = simulate_log(m)
    fitness, counters, fits = replay_fitness(net, log)
    assert fitness == 1.0
    assert counters.missing == 0
    assert counters.remaining == 0
    assert all(fits)


def test_fitness_empty_trace_on_activity_net():
    fitness, counters, fits = replay_fitness(to_petri_net(Activity("A")), log_of([]))
    assert fitness == 0.0
    assert counters.to_dict() == {"produced": 1, "consumed": 1, "missing": 1, "remaining": 1}
    assert fits == [False]


def test_fitness_unknown_activity_counts_missing():
    fitness, counters, fits = replay_fitness(to_petri_net(Activity("A")), log_of(["A", "Z"]))
    assert fits == [False]
    assert counters.missing >= 1
    assert 0.0 <= fitness < 1.0


def test_fitness_handles_duplicate_labels_from_autofix():
    shared = Activity("Check")
    seq = PartialOrder((shared, Activity("Mid"), shared), frozenset({(0, 1), (1, 2)}))
    fixed, count = auto_fix_reuse(seq)
    assert count == 1
    m = canonicalize(fixed)
    fitness, _, fits = replay_fitness(to_petri_net(m), simulate_log(m))
    assert fitness == 1.0
    assert all(fits)


def test_fitness_counter_invariants_on_random_pairs():
    rng = random.Random(31)
    for _ in range(40):
        model = canonicalize(random_model(rng, max_depth=3, node_budget=8))
        other = canonicalize(random_model(rng, max_depth=3, node_budget=8))
        vs = enumerate_variants(other, SimulationConfig(max_variants=30))
        log = EventLog([(f"c{i}", t) for i, t in enumerate(sorted(vs.traces)[:10])])
        if not len(log):
            continue
        fitness, counters, _ = replay_fitness(to_petri_net(model), log)
        assert 0.0 <= fitness <= 1.0
        assert counters.missing <= counters.consumed
        assert counters.remaining <= counters.produced


# ---------------------------------------------------------------------------
# Precision
# ---------------------------------------------------------------------------

def test_precision_full_log_is_one():
    net = to_petri_net(Xor((Activity("A"), Activity("B"))))
    assert escaping_precision(net, log_of(["A"], ["B"])) == 1.0


def test_precision_half_covered_choice():
    net = to_petri_net(Xor((Activity("A"), Activity("B"))))
    assert escaping_precision(net, log_of(["A"])) == 0.5


def test_precision_capped_loop_log():
    net = to_petri_net(Loop(Activity("A"), Silent()))
    precision = escaping_precision(net, log_of(["A"], ["A", "A"]))
    assert precision < 1.0
    assert abs(precision - 0.8) < 1e-9


def test_precision_unreplayable_trace_stops_contributing():
    net = to_petri_net(Activity("A"))
    # after the impossible Z the belief is empty; the deeper states add nothing
    precision = escaping_precision(net, log_of(["Z", "A", "A"]))
    assert 0.0 <= precision <= 1.0


def test_precision_weight_consistency_with_duplicate_traces():
    net = to_petri_net(Xor((Activity("A"), Activity("B"))))
    single = escaping_precision(net, log_of(["A"]))
    doubled = escaping_precision(net, EventLog([("c1", ("A",)), ("c2", ("A",))]))
    assert single == doubled  # same states, proportional weights


# ---------------------------------------------------------------------------
# Quality and the composed report
# ---------------------------------------------------------------------------

def test_quality_examples():
    assert quality_score(1.0, 1.0) == 1.0
    assert abs(quality_score(1.0, 0.5) - 0.667) < 0.001
    assert quality_score(0.0, 0.0) == 0.0


def test_quality_bounds_and_symmetry():
    rng = random.Random(5)
    for _ in range(200):
        f, p = rng.random(), rng.random()
        q = quality_score(f, p)
        assert q == quality_score(p, f)
        if f + p > 0:
            assert q <= (f + p) / 2 + 1e-12


def test_evaluate_model_loop_free_self_conformance():
    m = canonicalize(PartialOrder(
        (Activity("A"), Xor((Activity("B"), Activity("C"))), Activity("D")),
        frozenset({(0, 1), (1, 2)}),
    ))
    report = evaluate_model(m, simulate_log(m))
    assert report.fitness == 1.0
    assert report.precision == 1.0
    assert report.quality == 1.0
    assert all(report.per_trace)


def test_evaluate_model_loops_lower_precision():
    m = canonicalize(bicycle_model())
    report = evaluate_model(m, simulate_log(m))
    assert report.fitness == 1.0
    assert report.precision < 1.0
    assert report.quality < 1.0
    assert report.quality > 0.9


def test_evaluate_model_flower_scores():
    flower = Loop(Xor((Activity("A"), Activity("B"), Activity("C"))), Silent())
    report = evaluate_model(flower, log_of(["A", "B", "C"]))
    assert report.fitness == 1.0
    assert abs(report.precision - 0.25) < 1e-9
    assert abs(report.quality - 0.4) < 1e-9


def test_report_serializes_to_json_shape():
    m = canonicalize(Xor((Activity("A"), Activity("B"))))
    report = evaluate_model(m, log_of(["A"]))
    data = report.to_dict()
    assert set(data) == {"fitness", "precision", "quality", "per_trace", "counters"}
    assert set(data["counters"]) == {"produced", "consumed", "missing", "remaining"}


def test_scores_in_bounds_fuzz():
    rng = random.Random(77)
    for _ in range(30):
        model = canonicalize(random_model(rng, max_depth=3, node_budget=7))
        source = canonicalize(random_model(rng, max_depth=3, node_budget=7))
        vs = enumerate_variants(source, SimulationConfig(max_variants=20))
        traces = sorted(vs.traces)[:8]
        if not traces:
            continue
        log = EventLog([(f"c{i}", t) for i, t in enumerate(traces)])
        report = evaluate_model(model, log)
        assert 0.0 <= report.fitness <= 1.0
        assert 0.0 <= report.precision <= 1.0
        assert 0.0 <= report.quality <= 1.0
