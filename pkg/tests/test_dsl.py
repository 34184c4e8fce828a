"""Construction-language extraction, parsing, interpretation, and rendering."""

import random
from pathlib import Path

import pytest

from powlgen.dsl import (
    ActivityCall,
    Assign,
    ConstructionScript,
    GeneratorInit,
    ImportHeader,
    LoopCall,
    OrderCall,
    VarRef,
    XorCall,
    evaluate,
    extract_code,
    interpret_response,
    iter_exprs,
    parse,
    render,
)
from powlgen.model import (
    Activity,
    DiagnosticError,
    Loop,
    PartialOrder,
    Silent,
    Xor,
    structural_equal,
    validate,
)
from powlgen.semantics import enumerate_variants

from gen_strategies import random_model
from model_builders import bicycle_model

BICYCLE_SCRIPT = (Path(__file__).parent / "data" / "bicycle_script.txt").read_text()


def run(source: str):
    return evaluate(parse(ConstructionScript(source)))


# ---------------------------------------------------------------------------
# Code extraction
# ---------------------------------------------------------------------------

def test_extract_first_fenced_block():
    response = "Here is the model:\n```python\ngen = ModelGenerator()\n```\ndone"
    assert extract_code(response).source == "gen = ModelGenerator()"


def test_extract_plain_fence():
    response = "```\nx = gen.activity('A')\n```"
    assert extract_code(response).source == "x = gen.activity('A')"


def test_extract_without_fence_is_identity():
    script = "final_model = gen.activity('A')"
    assert extract_code(f"  {script}  \n").source == script


def test_extract_first_of_two_blocks():
    response = "```python\nfirst = 1\n```\ntext\n```python\nsecond = 2\n```"
    assert extract_code(response).source == "first = 1"


def test_extract_empty_response_raises():
    with pytest.raises(DiagnosticError) as exc:
        extract_code("   \n  ")
    assert exc.value.diagnostic.code == "EMPTY_RESPONSE"


def test_extract_empty_block_raises():
    with pytest.raises(DiagnosticError) as exc:
        extract_code("```python\n\n```")
    assert exc.value.diagnostic.code == "EMPTY_RESPONSE"


def test_extract_synthetic_response_corpus():
    """Extractor behavior over hand-built noisy responses."""
    script = "final_model = gen.activity('A')"
    cases = [
        (f"```python\n{script}\n```", script),
        (f"```\n{script}\n```", script),
        (f"Sure!\n\n```python\n{script}\n```\n\nHope this helps.", script),
        (f"Reasoning first.\n```python\n{script}\n```\n```python\nother = 1\n```", script),
        (script, script),
        (f"   {script}\n", script),
        # unterminated fence runs to the end of the response
        (f"```python\n{script}", script),
        # fence line with extra info string is not a fence, fall back to identity
        (f"~~~python\n{script}\n~~~", f"~~~python\n{script}\n~~~"),
        (f"```python\n{script}\n```\nTrailing notes about the model.", script),
        (f"intro\n```\n{script}\n```\noutro\n```\nignored = 2\n```", script),
    ]
    for response, expected in cases:
        assert extract_code(response).source == expected.strip()


def test_extract_requires_exact_fence_line():
    # an indented fence is prose, not a fence
    response = "  ```python\nfinal_model = gen.activity('A')\n  ```"
    assert extract_code(response).source == response.strip()


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def test_parse_reference_script_statement_counts():
    script_ast = parse(ConstructionScript(BICYCLE_SCRIPT))
    kinds = {}
    for expr in iter_exprs(script_ast):
        kinds[type(expr).__name__] = kinds.get(type(expr).__name__, 0) + 1
    assert kinds["ActivityCall"] == 12
    assert kinds["XorCall"] == 2
    assert kinds["LoopCall"] == 1
    assert kinds["OrderCall"] == 3
    assigns = [s for s in script_ast.statements if isinstance(s, Assign)]
    assert assigns[-1].var == "final_model"
    assert isinstance(script_ast.statements[0], ImportHeader)
    assert isinstance(script_ast.statements[1], GeneratorInit)


def test_parse_two_statement_script():
    script_ast = parse(ConstructionScript("x = gen.activity('A')\nfinal_model = x"))
    assigns = [s for s in script_ast.statements if isinstance(s, Assign)]
    assert len(assigns) == 2
    assert isinstance(assigns[0].value, ActivityCall)
    assert isinstance(assigns[1].value, VarRef)


def test_parse_unknown_function():
    with pytest.raises(DiagnosticError) as exc:
        parse(ConstructionScript("final_model = gen.sequence(a, b)"))
    assert exc.value.diagnostic.code == "UNKNOWN_FUNCTION"
    assert "sequence" in exc.value.diagnostic.message
    assert "gen.sequence(a, b)" in exc.value.diagnostic.message


def test_parse_rebinding_is_an_error():
    source = "a = gen.activity('A')\na = gen.activity('B')\nfinal_model = a"
    with pytest.raises(DiagnosticError) as exc:
        parse(ConstructionScript(source))
    assert exc.value.diagnostic.code == "PARSE_ERROR"
    assert "bound twice" in exc.value.diagnostic.message


def test_parse_syntax_error_quotes_line():
    with pytest.raises(DiagnosticError) as exc:
        parse(ConstructionScript("final_model = gen.xor(a,"))
    assert exc.value.diagnostic.code == "PARSE_ERROR"


def test_parse_rejects_control_flow():
    for source in [
        "for i in range(3):\n    pass",
        "if x:\n    y = 1",
        "def f():\n    return 1",
        "import os\nx = 1 + 2",
    ]:
        with pytest.raises(DiagnosticError) as exc:
            parse(ConstructionScript(source))
        assert exc.value.diagnostic.code == "PARSE_ERROR"


def test_parse_foreign_calls_are_unknown_functions():
    for source in [
        "x = os.system('true')",
        "print('hello')",
        "x = __import__('os')",
        "x = eval('1')",
        "final_model = gen.xor(os.getcwd(), None)",
    ]:
        with pytest.raises(DiagnosticError) as exc:
            parse(ConstructionScript(source))
        assert exc.value.diagnostic.code == "UNKNOWN_FUNCTION"


def test_parse_accepts_renamed_generator():
    source = (
        "builder = ModelGenerator()\n"
        "final_model = builder.activity('A')"
    )
    model, report = run(source)
    assert report.is_valid
    assert isinstance(model, Activity)


def test_parse_accepts_whitespace_and_quote_variants():
    source = (
        'a = gen.activity("Say \\"hi\\"")\n'
        "final_model = gen.loop( do = a , redo = None )"
    )
    model, report = run(source)
    assert report.is_valid
    assert isinstance(model, Loop)
    assert model.do.label == 'Say "hi"'


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def test_evaluate_reference_script():
    model, report = run(BICYCLE_SCRIPT)
    assert report.is_valid
    assert report.diagnostics == []
    assert structural_equal(model, bicycle_model())


def test_evaluate_xor_none_becomes_silent():
    model, report = run("a = gen.activity('A')\nfinal_model = gen.xor(a, None)")
    assert report.is_valid
    assert isinstance(model, Xor)
    kinds = sorted(type(c).__name__ for c in model.children)
    assert kinds == ["Activity", "Silent"]


def test_evaluate_loop_positional_and_default_redo():
    model, _ = run("a = gen.activity('A')\nfinal_model = gen.loop(a)")
    assert isinstance(model, Loop)
    assert isinstance(model.redo, Silent)


def test_evaluate_chain_and_singleton_dependencies():
    source = (
        "a = gen.activity('A')\nb = gen.activity('B')\nc = gen.activity('C')\n"
        "d = gen.activity('D')\n"
        "final_model = gen.partial_order(dependencies=[(a, b, c), (d,)])"
    )
    model, report = run(source)
    assert report.is_valid
    assert isinstance(model, PartialOrder)
    labels = [n.label for n in model.nodes]
    e = {(labels[i], labels[j]) for i, j in model.edges}
    # chain a->b->c closed, d isolated
    assert e == {("A", "B"), ("B", "C"), ("A", "C")}


def test_evaluate_repeated_mention_in_one_call_is_one_node():
    source = (
        "a = gen.activity('A')\nb = gen.activity('B')\nc = gen.activity('C')\n"
        "final_model = gen.partial_order(dependencies=[(a, b), (a, c)])"
    )
    model, report = run(source)
    assert report.diagnostics == []
    assert len(model.nodes) == 3


def test_evaluate_irreflexive_dependency_is_critical():
    source = (
        "a = gen.activity('A')\n"
        "final_model = gen.partial_order(dependencies=[(a, a)])"
    )
    model, report = run(source)
    assert model is None
    assert [d.code for d in report.diagnostics] == ["IRREFLEXIVITY_VIOLATION"]


def test_evaluate_order_cycle_is_critical():
    source = (
        "a = gen.activity('A')\nb = gen.activity('B')\n"
        "final_model = gen.partial_order(dependencies=[(a, b), (b, a)])"
    )
    model, report = run(source)
    assert model is None
    assert "ORDER_CYCLE" in [d.code for d in report.diagnostics]


def test_evaluate_undefined_variable():
    model, report = run("final_model = gen.xor(ghost, None)")
    assert model is None
    [diag] = report.diagnostics
    assert diag.code == "UNDEFINED_VARIABLE"
    assert "ghost" in diag.message


def test_evaluate_missing_final_model():
    model, report = run("a = gen.activity('A')")
    assert model is None
    assert "MISSING_FINAL_MODEL" in [d.code for d in report.diagnostics]


def test_evaluate_xor_arity():
    model, report = run("a = gen.activity('A')\nfinal_model = gen.xor(a)")
    assert model is None
    [diag] = report.diagnostics
    assert diag.code == "XOR_ARITY"


def test_evaluate_submodel_reuse_is_adjustable():
    source = (
        "a = gen.activity('A')\nb = gen.activity('B')\n"
        "x = gen.xor(a, b)\n"
        "final_model = gen.partial_order(dependencies=[(x, a)])"
    )
    model, report = run(source)
    assert model is not None
    assert report.is_valid  # adjustable only
    reuse = [d for d in report.diagnostics if d.code == "SUBMODEL_REUSE"]
    assert len(reuse) == 1
    assert "'a'" in reuse[0].message


def test_evaluate_copy_avoids_reuse():
    source = (
        "a = gen.activity('A')\nb = gen.activity('B')\n"
        "x = gen.xor(a, b)\n"
        "final_model = gen.partial_order(dependencies=[(x, a.copy())])"
    )
    model, report = run(source)
    assert report.diagnostics == []
    assert model is not None


def test_evaluate_unused_variable_warning():
    source = (
        "a = gen.activity('A')\nstray = gen.activity('B')\n"
        "final_model = gen.xor(a, None)"
    )
    model, report = run(source)
    assert model is not None
    assert report.is_valid
    [diag] = report.diagnostics
    assert diag.code == "UNUSED_VARIABLE"
    assert "stray" in diag.message


def test_evaluate_alias_final_model_not_unused():
    model, report = run("x = gen.activity('A')\nfinal_model = x")
    assert report.diagnostics == []
    assert isinstance(model, Activity)


def test_evaluate_none_final_model_is_silent():
    model, report = run("final_model = None")
    assert report.is_valid
    assert isinstance(model, Silent)


def test_evaluate_nested_calls_without_variables():
    model, report = run("final_model = gen.xor(gen.activity('A'), gen.activity('B'))")
    assert report.diagnostics == []
    assert isinstance(model, Xor)


def test_interpret_response_full_pipeline():
    response = f"The process model:\n```python\n{BICYCLE_SCRIPT}```\n"
    model, report = interpret_response(response)
    assert report.is_valid
    assert structural_equal(model, bicycle_model())


def test_interpret_response_surfaces_parse_diagnostics():
    model, report = interpret_response("```python\nfinal_model = gen.magic()\n```")
    assert model is None
    assert [d.code for d in report.diagnostics] == ["UNKNOWN_FUNCTION"]


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def test_render_activity_mentions_constructor():
    script = render(Activity("Ship bicycle"))
    assert "gen.activity('Ship bicycle')" in script.source
    assert "final_model = " in script.source


def test_render_xor_with_silent_uses_none():
    script = render(Xor((Activity("A"), Silent())))
    assert "gen.xor(a, None)" in script.source


def test_render_reference_model_round_trips():
    m = bicycle_model()
    model, report = run(render(m).source)
    assert report.diagnostics == []
    assert structural_equal(model, m)
    assert len(enumerate_variants(model).traces) == 33


def test_render_emits_reduction_not_closure():
    a, b, c = Activity("A"), Activity("B"), Activity("C")
    po = PartialOrder((a, b, c), frozenset({(0, 1), (1, 2), (0, 2)}))
    source = render(po).source
    assert "(a, b)" in source and "(b, c)" in source
    assert "(a, c)" not in source


def test_render_shared_silent_in_order_round_trips():
    s = Silent()
    a, b = Activity("A"), Activity("B")
    po = PartialOrder((s, a, b), frozenset({(0, 1), (0, 2)}))
    model, report = run(render(po).source)
    assert report.diagnostics == []
    assert structural_equal(model, po)


def test_render_deduplicates_variable_names():
    m = Xor((Activity("Check"), Activity("Check!"), Activity("check")))
    model, report = run(render(m).source)
    assert report.diagnostics == []
    assert structural_equal(model, m)


def test_render_keyword_label_round_trips():
    m = PartialOrder((Activity("class"), Activity("import")), frozenset({(0, 1)}))
    model, report = run(render(m).source)
    assert report.diagnostics == []
    assert structural_equal(model, m)


def test_render_random_round_trip():
    rng = random.Random(99)
    for _ in range(60):
        m = random_model(rng, max_depth=5)
        model, report = run(render(m).source)
        assert model is not None, report.diagnostics
        assert not report.has_critical
        assert structural_equal(model, m)


def test_render_valid_for_fresh_models_has_no_diagnostics():
    rng = random.Random(100)
    for _ in range(30):
        m = random_model(rng, max_depth=4)
        model, report = run(render(m).source)
        assert report.diagnostics == []
        assert validate(model).diagnostics == []
