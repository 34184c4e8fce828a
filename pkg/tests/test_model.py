"""Core model types, validation, canonicalization, and structural equality."""

import random

import pytest

from powlgen.model import (
    Activity,
    ConstructionError,
    Diagnostic,
    DiagnosticError,
    Loop,
    PartialOrder,
    Severity,
    Silent,
    Xor,
    activity_labels,
    auto_fix_reuse,
    canonicalize,
    close_order,
    deep_copy,
    iter_positions,
    model_from_dict,
    model_to_dict,
    node_stats,
    structural_equal,
    validate,
)

from gen_strategies import random_model
from model_builders import bicycle_model


# ---------------------------------------------------------------------------
# Construction rules
# ---------------------------------------------------------------------------

def test_activity_label_is_trimmed():
    assert Activity("  Pay invoice \n").label == "Pay invoice"


def test_activity_rejects_empty_label():
    with pytest.raises(ConstructionError):
        Activity("   ")


def test_xor_requires_two_children():
    with pytest.raises(ConstructionError):
        Xor((Activity("A"),))
    Xor((Activity("A"), Silent()))  # fine


def test_partial_order_rejects_out_of_range_edges():
    with pytest.raises(ConstructionError):
        PartialOrder((Activity("A"),), frozenset({(0, 1)}))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def test_validate_clean_model():
    report = validate(bicycle_model())
    assert report.is_valid
    assert report.diagnostics == []


def test_validate_flags_reflexive_edge():
    po = PartialOrder((Activity("A"), Activity("B")), frozenset({(0, 0)}))
    report = validate(po)
    assert not report.is_valid
    codes = [d.code for d in report.diagnostics]
    assert codes == ["IRREFLEXIVITY_VIOLATION"]
    assert report.diagnostics[0].severity is Severity.CRITICAL


def test_validate_flags_order_cycle_with_cycle_members():
    a, b, c = Activity("A"), Activity("B"), Activity("C")
    po = PartialOrder((a, b, c), frozenset({(0, 1), (1, 2), (2, 0)}))
    report = validate(po)
    codes = [d.code for d in report.diagnostics]
    assert codes == ["ORDER_CYCLE"]
    msg = report.diagnostics[0].message
    assert "A" in msg and "B" in msg and "C" in msg


def test_validate_flags_submodel_reuse_with_both_paths():
    shared = Activity("Check")
    po = PartialOrder((shared, shared), frozenset())
    report = validate(po)
    assert report.is_valid  # adjustable only
    assert report.has_adjustable
    [diag] = report.diagnostics
    assert diag.code == "SUBMODEL_REUSE"
    assert diag.severity is Severity.ADJUSTABLE
    # message names both positions in the tree
    assert diag.message.count("nodes[") >= 2


def test_validate_never_raises_on_cyclic_reflexive_mix():
    a, b = Activity("A"), Activity("B")
    po = PartialOrder((a, b), frozenset({(0, 1), (1, 0), (0, 0)}))
    report = validate(po)
    codes = sorted(d.code for d in report.diagnostics)
    assert codes == ["IRREFLEXIVITY_VIOLATION", "ORDER_CYCLE"]


# ---------------------------------------------------------------------------
# close_order / canonicalize
# ---------------------------------------------------------------------------

def test_close_order_adds_transitive_edges():
    a, b, c = Activity("A"), Activity("B"), Activity("C")
    po = PartialOrder((a, b, c), frozenset({(0, 1), (1, 2)}))
    closed = close_order(po)
    assert closed.edges == frozenset({(0, 1), (1, 2), (0, 2)})


def test_close_order_returns_same_object_when_closed():
    a, b = Activity("A"), Activity("B")
    po = PartialOrder((a, b), frozenset({(0, 1)}))
    assert close_order(po) is po


def test_close_order_raises_on_cycle():
    a, b = Activity("A"), Activity("B")
    po = PartialOrder((a, b), frozenset({(0, 1), (1, 0)}))
    with pytest.raises(DiagnosticError) as exc:
        close_order(po)
    assert exc.value.diagnostic.code == "ORDER_CYCLE"


def test_canonicalize_closes_nested_orders_and_preserves_sharing():
    inner = PartialOrder(
        (Activity("A"), Activity("B"), Activity("C")),
        frozenset({(0, 1), (1, 2)}),
    )
    loop = Loop(inner, Silent())
    canon = canonicalize(loop)
    assert canon.do.edges == frozenset({(0, 1), (1, 2), (0, 2)})

    shared = Activity("S")
    xor = Xor((shared, shared))
    canon_xor = canonicalize(xor)
    assert canon_xor.children[0] is canon_xor.children[1]


# ---------------------------------------------------------------------------
# deep_copy / auto_fix_reuse
# ---------------------------------------------------------------------------

def test_deep_copy_creates_fresh_positions():
    m = bicycle_model()
    cp = deep_copy(m)
    assert cp is not m
    assert structural_equal(m, cp)
    originals = {id(node) for _, node in iter_positions(m)}
    copies = {id(node) for _, node in iter_positions(cp)}
    assert originals.isdisjoint(copies)


def test_auto_fix_reuse_replaces_second_occurrence():
    shared = Activity("Check")
    po = PartialOrder((shared, shared), frozenset({(0, 1)}))
    fixed, count = auto_fix_reuse(po)
    assert count == 1
    assert fixed.nodes[0] is not fixed.nodes[1]
    assert validate(fixed).diagnostics == []
    assert structural_equal(po, fixed)


def test_auto_fix_reuse_handles_nested_sharing():
    a = Activity("A")
    inner = Xor((a, a))
    outer = Xor((inner, inner))
    fixed, count = auto_fix_reuse(outer)
    assert count == 2
    assert validate(fixed).diagnostics == []


def test_auto_fix_reuse_no_change_returns_same_object():
    m = bicycle_model()
    fixed, count = auto_fix_reuse(m)
    assert count == 0
    assert fixed is m


# ---------------------------------------------------------------------------
# structural_equal
# ---------------------------------------------------------------------------

def test_structural_equal_ignores_xor_child_order():
    m1 = Xor((Activity("A"), Activity("B")))
    m2 = Xor((Activity("B"), Activity("A")))
    assert structural_equal(m1, m2)


def test_structural_equal_loop_is_positional():
    m1 = Loop(Activity("A"), Activity("B"))
    m2 = Loop(Activity("B"), Activity("A"))
    assert not structural_equal(m1, m2)


def test_structural_equal_order_permutation():
    a1, b1, c1 = Activity("A"), Activity("B"), Activity("C")
    a2, b2, c2 = Activity("A"), Activity("B"), Activity("C")
    m1 = PartialOrder((a1, b1, c1), frozenset({(0, 1), (1, 2), (0, 2)}))
    m2 = PartialOrder((c2, a2, b2), frozenset({(1, 2), (2, 0), (1, 0)}))
    assert structural_equal(m1, m2)


def test_structural_equal_compares_closures():
    a1, b1, c1 = Activity("A"), Activity("B"), Activity("C")
    a2, b2, c2 = Activity("A"), Activity("B"), Activity("C")
    chain = PartialOrder((a1, b1, c1), frozenset({(0, 1), (1, 2)}))
    closed = PartialOrder((a2, b2, c2), frozenset({(0, 1), (1, 2), (0, 2)}))
    assert structural_equal(chain, closed)


def test_structural_equal_detects_edge_difference():
    a1, b1 = Activity("A"), Activity("B")
    a2, b2 = Activity("A"), Activity("B")
    m1 = PartialOrder((a1, b1), frozenset({(0, 1)}))
    m2 = PartialOrder((a2, b2), frozenset())
    assert not structural_equal(m1, m2)


def test_structural_equal_duplicate_label_multiset():
    m1 = Xor((Activity("A"), Activity("A"), Activity("B")))
    m2 = Xor((Activity("A"), Activity("B"), Activity("A")))
    m3 = Xor((Activity("A"), Activity("B"), Activity("B")))
    assert structural_equal(m1, m2)
    assert not structural_equal(m1, m3)


# ---------------------------------------------------------------------------
# Introspection and serialization
# ---------------------------------------------------------------------------

def test_activity_labels_first_occurrence_order():
    m = bicycle_model()
    labels = activity_labels(m)
    assert labels[0] == "Create process instance"
    assert labels[-1] == "Finish process instance"
    assert len(labels) == 12


def test_node_stats_counts():
    stats = node_stats(bicycle_model())
    assert stats["activity"] == 12
    assert stats["xor"] == 2
    assert stats["loop"] == 1
    assert stats["partial_order"] == 3
    assert stats["silent"] == 1


def test_json_round_trip_random_models():
    rng = random.Random(7)
    for _ in range(50):
        m = random_model(rng)
        again = model_from_dict(model_to_dict(m))
        assert structural_equal(m, again)


def test_diagnostic_to_dict():
    d = Diagnostic("XOR_ARITY", "choice needs two children", path="children[0]")
    assert d.to_dict() == {
        "code": "XOR_ARITY",
        "severity": "critical",
        "message": "choice needs two children",
        "path": "children[0]",
    }
