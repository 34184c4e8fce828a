"""Petri net and BPMN translation plus the export formats."""

import random

import pytest

from powlgen.model import Activity, Loop, PartialOrder, Silent, Xor, canonicalize
from powlgen.semantics import EventLog
from powlgen.translate import (
    check_workflow_shape,
    to_bpmn,
    to_petri_net,
    write_bpmn_xml,
    write_dot,
    write_pnml,
)
from powlgen.conformance import replay_fitness

from gen_strategies import random_model
from model_builders import bicycle_model
from oracles import expected_gateway_counts, read_pnml


def replay_fits(model, trace):
    net = to_petri_net(model)
    _, _, fits = replay_fitness(net, EventLog([("c1", tuple(trace))]))
    return fits[0]


# ---------------------------------------------------------------------------
# Petri net construction
# ---------------------------------------------------------------------------

def test_activity_net_shape():
    net = to_petri_net(Activity("A"))
    assert len(net.places) == 2
    assert len(net.transitions) == 1
    assert net.transitions[0].label == "A"
    assert len(net.arcs) == 2
    assert check_workflow_shape(net) == []


def test_xor_net_fuses_places():
    net = to_petri_net(Xor((Activity("A"), Activity("B"))))
    assert len(net.places) == 2  # fused entry and exit only
    labels = sorted(t.label for t in net.transitions)
    assert labels == ["A", "B"]
    assert replay_fits(Xor((Activity("A"), Activity("B"))), ["A"])
    assert replay_fits(Xor((Activity("A"), Activity("B"))), ["B"])
    assert not replay_fits(Xor((Activity("A"), Activity("B"))), ["A", "B"])


def test_loop_net_replay_language():
    loop = Loop(Activity("A"), Activity("B"))
    assert replay_fits(loop, ["A"])
    assert replay_fits(loop, ["A", "B", "A"])
    assert replay_fits(loop, ["A", "B", "A", "B", "A"])
    assert not replay_fits(loop, ["B"])
    assert not replay_fits(loop, ["A", "B"])


def test_order_net_enforces_precedence():
    po = PartialOrder((Activity("A"), Activity("B")), frozenset({(0, 1)}))
    assert replay_fits(po, ["A", "B"])
    assert not replay_fits(po, ["B", "A"])


def test_concurrent_net_allows_both_orders():
    po = PartialOrder((Activity("A"), Activity("B")), frozenset())
    assert replay_fits(po, ["A", "B"])
    assert replay_fits(po, ["B", "A"])


def test_silent_transitions_carry_no_label():
    net = to_petri_net(Loop(Activity("A"), Silent()))
    silent = [t for t in net.transitions if t.label is None]
    assert len(silent) == 3  # enter, exit, redo


def test_workflow_shape_random_models():
    rng = random.Random(11)
    for _ in range(80):
        net = to_petri_net(canonicalize(random_model(rng, max_depth=4)))
        assert check_workflow_shape(net) == []


def test_to_petri_net_rejects_invalid():
    bad = PartialOrder((Activity("A"), Activity("B")), frozenset({(0, 1), (1, 0)}))
    with pytest.raises(ValueError):
        to_petri_net(bad)


def test_net_ids_are_deterministic():
    m = bicycle_model()
    a = to_petri_net(m)
    b = to_petri_net(bicycle_model())
    assert a.places == b.places
    assert a.transitions == b.transitions
    assert a.arcs == b.arcs


# ---------------------------------------------------------------------------
# BPMN construction
# ---------------------------------------------------------------------------

def test_sequence_bpmn_has_zero_gateways():
    po = PartialOrder((Activity("A"), Activity("B")), frozenset({(0, 1)}))
    g = to_bpmn(po)
    kinds = [n.kind for n in g.nodes]
    assert kinds.count("task") == 2
    assert not any(k.endswith("_split") or k.endswith("_join") for k in kinds)
    # start -> A -> B -> end
    by_id = {n.nid: n for n in g.nodes}
    labels = []
    current = next(n.nid for n in g.nodes if n.kind == "start")
    while by_id[current].kind != "end":
        current = next(dst for src, dst in g.flows if src == current)
        if by_id[current].kind == "task":
            labels.append(by_id[current].label)
    assert labels == ["A", "B"]


def test_xor_bpmn_has_two_exclusive_gateways():
    g = to_bpmn(Xor((Activity("A"), Activity("B"))))
    assert len(g.by_kind("xor_split")) == 1
    assert len(g.by_kind("xor_join")) == 1
    assert len(g.by_kind("and_split")) == 0


def test_skippable_activity_bpmn():
    g = to_bpmn(Xor((Activity("A"), Silent())))
    split = g.by_kind("xor_split")[0]
    join = g.by_kind("xor_join")[0]
    # the silent branch collapses to a direct flow between the gateways
    assert (split.nid, join.nid) in g.flows


def test_loop_bpmn_has_back_edge():
    g = to_bpmn(Loop(Activity("A"), Activity("B")))
    assert len(g.by_kind("xor_split")) == 1
    assert len(g.by_kind("xor_join")) == 1
    split = g.by_kind("xor_split")[0]
    join = g.by_kind("xor_join")[0]
    # redo path runs from the split back to the join
    tasks = {n.nid: n.label for n in g.by_kind("task")}
    redo_path = [dst for src, dst in g.flows if src == split.nid and dst in tasks]
    assert any(tasks[nid] == "B" for nid in redo_path)
    assert (next(nid for nid, lab in tasks.items() if lab == "B"), join.nid) in g.flows


def test_concurrent_bpmn_has_parallel_pair():
    po = PartialOrder((Activity("A"), Activity("B")), frozenset())
    g = to_bpmn(po)
    assert len(g.by_kind("and_split")) == 1
    assert len(g.by_kind("and_join")) == 1


def test_bpmn_gateway_counts_match_tree_oracle():
    rng = random.Random(23)
    models = [canonicalize(random_model(rng, max_depth=4)) for _ in range(60)]
    models.append(canonicalize(bicycle_model()))
    for m in models:
        g = to_bpmn(m)
        xor_count = len(g.by_kind("xor_split")) + len(g.by_kind("xor_join"))
        and_count = len(g.by_kind("and_split")) + len(g.by_kind("and_join"))
        assert (xor_count, and_count) == expected_gateway_counts(m)


def test_bpmn_single_start_end_and_connected():
    rng = random.Random(29)
    for _ in range(40):
        g = to_bpmn(canonicalize(random_model(rng, max_depth=4)))
        assert len(g.by_kind("start")) == 1
        assert len(g.by_kind("end")) == 1
        # every node reachable from start
        adj = {}
        for src, dst in g.flows:
            adj.setdefault(src, []).append(dst)
        seen = set()
        stack = [g.by_kind("start")[0].nid]
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            seen.add(nid)
            stack.extend(adj.get(nid, []))
        assert seen == {n.nid for n in g.nodes}


def test_bpmn_deterministic():
    a = to_bpmn(bicycle_model())
    b = to_bpmn(bicycle_model())
    assert a.nodes == b.nodes
    assert a.flows == b.flows


def test_bpmn_elision_flag_keeps_gateways():
    po = PartialOrder((Activity("A"), Activity("B")), frozenset({(0, 1)}))
    g = to_bpmn(po, elide_trivial=False)
    assert len(g.by_kind("and_split")) >= 1


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_pnml_single_transition_with_name():
    doc = write_pnml(to_petri_net(Activity("A")))
    assert doc.count("<transition") == 1
    assert "<text>A</text>" in doc


def test_pnml_silent_transitions_have_no_name():
    doc = write_pnml(to_petri_net(Loop(Activity("A"), Silent())))
    places, transitions, arcs, initial, final = read_pnml(doc)
    assert sorted(lbl for lbl in transitions.values() if lbl) == ["A"]
    assert sum(1 for lbl in transitions.values() if lbl is None) == 3


def test_pnml_round_trip():
    net = to_petri_net(canonicalize(bicycle_model()))
    places, transitions, arcs, initial, final = read_pnml(write_pnml(net))
    assert places == list(net.places)
    assert transitions == {t.tid: t.label for t in net.transitions}
    assert arcs == list(net.arcs)
    assert initial == net.initial
    assert final == net.final


def test_bpmn_xml_contains_gateways():
    doc = write_bpmn_xml(to_bpmn(Xor((Activity("A"), Activity("B")))))
    assert doc.count("<exclusiveGateway") == 2
    assert doc.count("<task") == 2
    assert '<startEvent id="n0"' in doc or "<startEvent" in doc


def test_bpmn_xml_escapes_labels():
    doc = write_bpmn_xml(to_bpmn(Activity('Check "big" <orders> & more')))
    assert "&quot;big&quot;" in doc or '"big"' not in doc
    assert "&lt;orders&gt;" in doc
    assert "&amp; more" in doc


def test_dot_outputs_for_both_structures():
    net_dot = write_dot(to_petri_net(Activity("A")))
    assert net_dot.startswith("digraph")
    assert "shape=circle" in net_dot
    bpmn_dot = write_dot(to_bpmn(Xor((Activity("A"), Silent()))))
    assert "diamond" in bpmn_dot
