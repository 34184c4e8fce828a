"""Parser, interpreter, and renderer for the model construction language.

Responses from a language model are never executed. The script text is parsed
with the stdlib ``ast`` module and walked against a closed grammar: the only
callables are ``activity``, ``xor``, ``loop``, ``partial_order`` on the
generator object, ``.copy()`` on bound variables, and the ``ModelGenerator()``
initializer. Everything else is rejected with a diagnostic that quotes the
offending line so the feedback loop can point the model at it.
"""

from __future__ import annotations

import ast as pyast
import keyword
import re
from dataclasses import dataclass, field

from .model import (
    Activity,
    ConstructionError,
    Diagnostic,
    DiagnosticError,
    Loop,
    PartialOrder,
    PowlNode,
    Silent,
    ValidationReport,
    Xor,
    canonicalize,
    deep_copy,
    validate,
)

__all__ = [
    "ConstructionScript",
    "ScriptAst",
    "ImportHeader",
    "GeneratorInit",
    "Assign",
    "ExprStmt",
    "ActivityCall",
    "XorCall",
    "LoopCall",
    "OrderCall",
    "VarRef",
    "CopyCall",
    "NoneLit",
    "extract_code",
    "parse",
    "evaluate",
    "render",
    "interpret_response",
    "iter_exprs",
]

GENERATOR_METHODS = ("activity", "xor", "loop", "partial_order")
IMPORT_HEADER = "from utils.model_generation import ModelGenerator"


@dataclass(frozen=True)
class ConstructionScript:
    source: str


# ---------------------------------------------------------------------------
# Script AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarRef:
    name: str
    lineno: int


@dataclass(frozen=True)
class CopyCall:
    name: str
    lineno: int


@dataclass(frozen=True)
class NoneLit:
    lineno: int


@dataclass(frozen=True)
class ActivityCall:
    label: str
    lineno: int


@dataclass(frozen=True)
class XorCall:
    args: tuple["Expr", ...]
    lineno: int


@dataclass(frozen=True)
class LoopCall:
    do: "Expr"
    redo: "Expr"
    lineno: int


@dataclass(frozen=True)
class OrderCall:
    groups: tuple[tuple["Expr", ...], ...]
    lineno: int


Expr = ActivityCall | XorCall | LoopCall | OrderCall | VarRef | CopyCall | NoneLit


@dataclass(frozen=True)
class ImportHeader:
    lineno: int


@dataclass(frozen=True)
class GeneratorInit:
    var: str
    lineno: int


@dataclass(frozen=True)
class Assign:
    var: str
    value: Expr
    lineno: int


@dataclass(frozen=True)
class ExprStmt:
    value: Expr
    lineno: int


Statement = ImportHeader | GeneratorInit | Assign | ExprStmt


@dataclass(frozen=True)
class ScriptAst:
    statements: tuple[Statement, ...]
    source: str = field(default="", compare=False)


def iter_exprs(node: ScriptAst | Statement | Expr):
    """Yield every expression in the AST, preorder, including nested args."""
    if isinstance(node, ScriptAst):
        for stmt in node.statements:
            yield from iter_exprs(stmt)
        return
    if isinstance(node, (Assign, ExprStmt)):
        yield from iter_exprs(node.value)
        return
    if isinstance(node, (ImportHeader, GeneratorInit)):
        return
    yield node
    if isinstance(node, XorCall):
        for arg in node.args:
            yield from iter_exprs(arg)
    elif isinstance(node, LoopCall):
        yield from iter_exprs(node.do)
        yield from iter_exprs(node.redo)
    elif isinstance(node, OrderCall):
        for group in node.groups:
            for item in group:
                yield from iter_exprs(item)


# ---------------------------------------------------------------------------
# Code extraction
# ---------------------------------------------------------------------------

def extract_code(llm_response: str) -> ConstructionScript:
    """Pull the first fenced code block out of a response.

    The fence line must be exactly ```` ```python ```` or ```` ``` ````. A
    response without any fence is taken verbatim. A blank result raises
    EMPTY_RESPONSE.
    """
    lines = llm_response.splitlines()
    block: list[str] | None = None
    for i, line in enumerate(lines):
        if line in ("```python", "```"):
            block = []
            for inner in lines[i + 1:]:
                if inner == "```":
                    break
                block.append(inner)
            break
    source = "\n".join(block) if block is not None else llm_response
    source = source.strip()
    if not source:
        raise DiagnosticError(
            Diagnostic("EMPTY_RESPONSE", "the response contains no code to interpret")
        )
    return ConstructionScript(source)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _line(source: str, lineno: int) -> str:
    lines = source.splitlines()
    if 1 <= lineno <= len(lines):
        return lines[lineno - 1].strip()
    return ""


def _parse_error(source: str, lineno: int, reason: str) -> DiagnosticError:
    quoted = _line(source, lineno)
    return DiagnosticError(
        Diagnostic("PARSE_ERROR", f"line {lineno}: {reason}: \"{quoted}\"")
    )


def _unknown_function(source: str, lineno: int, name: str) -> DiagnosticError:
    quoted = _line(source, lineno)
    return DiagnosticError(
        Diagnostic("UNKNOWN_FUNCTION", f"line {lineno}: unknown function '{name}': \"{quoted}\"")
    )


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.gen_names: set[str] = {"gen"}
        self.bound: set[str] = set()

    def run(self) -> ScriptAst:
        try:
            module = pyast.parse(self.source)
        except SyntaxError as exc:
            lineno = exc.lineno or 1
            raise _parse_error(self.source, lineno, f"invalid syntax ({exc.msg})") from None
        statements: list[Statement] = []
        for node in module.body:
            stmt = self.statement(node)
            if stmt is not None:
                statements.append(stmt)
        return ScriptAst(tuple(statements), self.source)

    def statement(self, node: pyast.stmt) -> Statement | None:
        if isinstance(node, (pyast.Import, pyast.ImportFrom)):
            return ImportHeader(node.lineno)
        if isinstance(node, pyast.Assign):
            if len(node.targets) != 1 or not isinstance(node.targets[0], pyast.Name):
                raise _parse_error(self.source, node.lineno,
                                   "assignments must bind a single variable")
            name = node.targets[0].id
            if self.is_generator_init(node.value):
                self.gen_names.add(name)
                return GeneratorInit(name, node.lineno)
            if name in self.bound:
                raise _parse_error(self.source, node.lineno,
                                   f"variable '{name}' is bound twice")
            if name in self.gen_names:
                raise _parse_error(self.source, node.lineno,
                                   f"'{name}' is the generator and cannot be rebound")
            value = self.expr(node.value)
            self.bound.add(name)
            return Assign(name, value, node.lineno)
        if isinstance(node, pyast.Expr):
            if isinstance(node.value, pyast.Constant) and isinstance(node.value.value, str):
                return None  # stray docstring, ignore
            if isinstance(node.value, pyast.Call):
                return ExprStmt(self.expr(node.value), node.lineno)
            raise _parse_error(self.source, node.lineno, "unsupported statement")
        raise _parse_error(self.source, node.lineno,
                           "only simple assignments are allowed")

    def is_generator_init(self, node: pyast.expr) -> bool:
        return (
            isinstance(node, pyast.Call)
            and isinstance(node.func, pyast.Name)
            and node.func.id == "ModelGenerator"
            and not node.args
            and not node.keywords
        )

    def expr(self, node: pyast.expr) -> Expr:
        if isinstance(node, pyast.Constant) and node.value is None:
            return NoneLit(node.lineno)
        if isinstance(node, pyast.Name):
            return VarRef(node.id, node.lineno)
        if isinstance(node, pyast.Call):
            return self.call(node)
        raise _parse_error(self.source, node.lineno, "unsupported expression")

    def call(self, node: pyast.Call) -> Expr:
        func = node.func
        if isinstance(func, pyast.Attribute) and isinstance(func.value, pyast.Name):
            receiver, method = func.value.id, func.attr
            if method == "copy" and receiver not in self.gen_names:
                if node.args or node.keywords:
                    raise _parse_error(self.source, node.lineno, "copy() takes no arguments")
                return CopyCall(receiver, node.lineno)
            if receiver in self.gen_names and method in GENERATOR_METHODS:
                return self.generator_call(method, node)
            raise _unknown_function(self.source, node.lineno, f"{receiver}.{method}")
        if isinstance(func, pyast.Name):
            # bare roster names are tolerated, anything else is foreign
            if func.id in GENERATOR_METHODS:
                return self.generator_call(func.id, node)
            raise _unknown_function(self.source, node.lineno, func.id)
        raise _parse_error(self.source, node.lineno, "unsupported call form")

    def generator_call(self, method: str, node: pyast.Call) -> Expr:
        if method == "activity":
            return self.activity_call(node)
        if method == "xor":
            if node.keywords:
                raise _parse_error(self.source, node.lineno,
                                   "xor takes positional arguments only")
            return XorCall(tuple(self.expr(a) for a in node.args), node.lineno)
        if method == "loop":
            return self.loop_call(node)
        return self.order_call(node)

    def activity_call(self, node: pyast.Call) -> ActivityCall:
        args = list(node.args)
        for kw in node.keywords:
            if kw.arg == "label":
                args.append(kw.value)
            else:
                raise _parse_error(self.source, node.lineno,
                                   f"activity got unexpected keyword '{kw.arg}'")
        if len(args) != 1:
            raise _parse_error(self.source, node.lineno, "activity takes exactly one label")
        arg = args[0]
        if not (isinstance(arg, pyast.Constant) and isinstance(arg.value, str)):
            raise _parse_error(self.source, node.lineno, "activity label must be a string literal")
        return ActivityCall(arg.value, node.lineno)

    def loop_call(self, node: pyast.Call) -> LoopCall:
        do: pyast.expr | None = None
        redo: pyast.expr | None = None
        if node.args:
            if len(node.args) > 2 or node.keywords:
                raise _parse_error(self.source, node.lineno,
                                   "loop takes do and redo arguments")
            do = node.args[0]
            redo = node.args[1] if len(node.args) == 2 else None
        for kw in node.keywords:
            if kw.arg == "do":
                do = kw.value
            elif kw.arg == "redo":
                redo = kw.value
            else:
                raise _parse_error(self.source, node.lineno,
                                   f"loop got unexpected keyword '{kw.arg}'")
        if do is None:
            raise _parse_error(self.source, node.lineno, "loop is missing its do argument")
        redo_expr = NoneLit(node.lineno) if redo is None else self.expr(redo)
        return LoopCall(self.expr(do), redo_expr, node.lineno)

    def order_call(self, node: pyast.Call) -> OrderCall:
        deps: pyast.expr | None = None
        if node.args:
            if len(node.args) != 1 or node.keywords:
                raise _parse_error(self.source, node.lineno,
                                   "partial_order takes a single dependencies argument")
            deps = node.args[0]
        for kw in node.keywords:
            if kw.arg != "dependencies":
                raise _parse_error(self.source, node.lineno,
                                   f"partial_order got unexpected keyword '{kw.arg}'")
            deps = kw.value
        if deps is None or not isinstance(deps, (pyast.List, pyast.Tuple)):
            raise _parse_error(self.source, node.lineno,
                               "partial_order needs dependencies=[...]")
        groups: list[tuple[Expr, ...]] = []
        for element in deps.elts:
            if isinstance(element, (pyast.Tuple, pyast.List)):
                if not element.elts:
                    raise _parse_error(self.source, node.lineno,
                                       "dependency tuples must not be empty")
                groups.append(tuple(self.expr(e) for e in element.elts))
            else:
                groups.append((self.expr(element),))
        return OrderCall(tuple(groups), node.lineno)


def parse(script: ConstructionScript) -> ScriptAst:
    """Parse a construction script against the closed grammar.

    Raises DiagnosticError with PARSE_ERROR or UNKNOWN_FUNCTION; the message
    quotes the offending line.
    """
    return _Parser(script.source).run()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

class _Abort(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic


class _Evaluator:
    def __init__(self, script_ast: ScriptAst):
        self.ast = script_ast
        self.source = script_ast.source
        self.env: dict[str, PowlNode] = {}
        self.diagnostics: list[Diagnostic] = []
        self.consumed: dict[int, str] = {}  # object id -> consumption site
        self.used_ids: set[int] = set()

    def run(self) -> tuple[PowlNode | None, ValidationReport]:
        try:
            for stmt in self.ast.statements:
                if isinstance(stmt, Assign):
                    self.env[stmt.var] = self.eval_expr(stmt.value)
                elif isinstance(stmt, ExprStmt):
                    self.eval_expr(stmt.value)
        except _Abort as abort:
            self.diagnostics.append(abort.diagnostic)
            return None, ValidationReport(self.diagnostics)

        if "final_model" not in self.env:
            self.diagnostics.append(Diagnostic(
                "MISSING_FINAL_MODEL",
                "the script never binds final_model, so there is no result to use",
            ))
            return None, ValidationReport(self.diagnostics)
        root = self.env["final_model"]
        self.used_ids.add(id(root))
        self.warn_unused()

        try:
            model = canonicalize(root)
        except DiagnosticError as exc:
            # cycle found while closing; gather everything validate can see
            self.diagnostics.append(exc.diagnostic)
            self.merge_validation(root, skip={exc.diagnostic.code, "SUBMODEL_REUSE"})
            return None, ValidationReport(self.diagnostics)
        self.merge_validation(model, skip={"SUBMODEL_REUSE"})
        report = ValidationReport(self.diagnostics)
        if report.has_critical:
            return None, report
        return model, report

    def merge_validation(self, model: PowlNode, skip: set[str]) -> None:
        # interpreter-side reuse tracking already reported SUBMODEL_REUSE with
        # script line numbers, so drop the positional duplicates
        for diag in validate(model).diagnostics:
            if diag.code not in skip:
                self.diagnostics.append(diag)

    def warn_unused(self) -> None:
        for var, obj in self.env.items():
            if var != "final_model" and id(obj) not in self.used_ids:
                self.diagnostics.append(Diagnostic(
                    "UNUSED_VARIABLE", f"variable '{var}' is never used", path=var,
                ))

    def consume(self, value: PowlNode, expr: Expr, lineno: int) -> None:
        site = f"line {lineno}"
        if isinstance(expr, VarRef):
            site = f"'{expr.name}' at line {lineno}"
        self.used_ids.add(id(value))
        prior = self.consumed.get(id(value))
        if prior is not None:
            self.diagnostics.append(Diagnostic(
                "SUBMODEL_REUSE",
                f"{site} places a sub-model that was already used at {prior}; "
                f"an automatic fix will insert a copy",
            ))
        else:
            self.consumed[id(value)] = site

    def eval_expr(self, expr: Expr) -> PowlNode:
        if isinstance(expr, NoneLit):
            return Silent()
        if isinstance(expr, VarRef):
            if expr.name not in self.env:
                raise _Abort(Diagnostic(
                    "UNDEFINED_VARIABLE",
                    f"line {expr.lineno}: variable '{expr.name}' is not defined: "
                    f"\"{_line(self.source, expr.lineno)}\"",
                ))
            return self.env[expr.name]
        if isinstance(expr, CopyCall):
            if expr.name not in self.env:
                raise _Abort(Diagnostic(
                    "UNDEFINED_VARIABLE",
                    f"line {expr.lineno}: variable '{expr.name}' is not defined: "
                    f"\"{_line(self.source, expr.lineno)}\"",
                ))
            self.used_ids.add(id(self.env[expr.name]))
            return deep_copy(self.env[expr.name])
        if isinstance(expr, ActivityCall):
            try:
                return Activity(expr.label)
            except ConstructionError as exc:
                raise _Abort(Diagnostic(
                    "PARSE_ERROR", f"line {expr.lineno}: {exc}",
                )) from None
        if isinstance(expr, XorCall):
            if len(expr.args) < 2:
                raise _Abort(Diagnostic(
                    "XOR_ARITY",
                    f"line {expr.lineno}: xor needs at least two children, got "
                    f"{len(expr.args)}: \"{_line(self.source, expr.lineno)}\"",
                ))
            children = []
            for arg in expr.args:
                child = self.eval_expr(arg)
                self.consume(child, arg, expr.lineno)
                children.append(child)
            return Xor(tuple(children))
        if isinstance(expr, LoopCall):
            do = self.eval_expr(expr.do)
            self.consume(do, expr.do, expr.lineno)
            redo = self.eval_expr(expr.redo)
            self.consume(redo, expr.redo, expr.lineno)
            return Loop(do, redo)
        assert isinstance(expr, OrderCall)
        return self.eval_order(expr)

    def eval_order(self, expr: OrderCall) -> PowlNode:
        # repeated mentions of the same variable inside one call refer to the
        # same node, that is how chains join into a DAG
        nodes: list[PowlNode] = []
        index: dict[int, int] = {}
        edges: set[tuple[int, int]] = set()

        def place(item: Expr) -> int:
            value = self.eval_expr(item)
            if id(value) in index:
                return index[id(value)]
            self.consume(value, item, expr.lineno)
            index[id(value)] = len(nodes)
            nodes.append(value)
            return index[id(value)]

        for group in expr.groups:
            ids = [place(item) for item in group]
            for a, b in zip(ids, ids[1:]):
                edges.add((a, b))
        try:
            return PartialOrder(tuple(nodes), frozenset(edges))
        except ConstructionError as exc:
            raise _Abort(Diagnostic(
                "PARSE_ERROR", f"line {expr.lineno}: {exc}",
            )) from None


def evaluate(script_ast: ScriptAst) -> tuple[PowlNode | None, ValidationReport]:
    """Interpret a parsed script. Returns the canonicalized model bound to
    final_model plus all diagnostics; the model is None when anything
    critical was found."""
    return _Evaluator(script_ast).run()


def interpret_response(llm_response: str) -> tuple[PowlNode | None, ValidationReport]:
    """extract_code + parse + evaluate with uniform error reporting."""
    try:
        script_ast = parse(extract_code(llm_response))
    except DiagnosticError as exc:
        return None, ValidationReport([exc.diagnostic])
    return evaluate(script_ast)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _slug(label: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")
    slug = slug[:30].rstrip("_")
    if not slug:
        return "act"
    if slug[0].isdigit():
        slug = f"a_{slug}"
    if keyword.iskeyword(slug) or slug in ("gen", "final_model", "ModelGenerator"):
        slug = f"{slug}_act"
    return slug


def _reduction(n: int, edges: frozenset[tuple[int, int]]) -> set[tuple[int, int]]:
    """Transitive reduction of a closed acyclic edge set."""
    closure = {(i, j) for i, j in edges if i != j}
    return {
        (i, j) for i, j in closure
        if not any((i, k) in closure and (k, j) in closure for k in range(n))
    }


def render(model: PowlNode) -> ConstructionScript:
    """Emit a construction script that evaluates back to an equal model.

    One assignment per node, children first, final_model last. Dependencies
    carry the transitive reduction; evaluation re-closes the order.
    """
    lines = [IMPORT_HEADER, "gen = ModelGenerator()"]
    names: dict[int, str] = {}
    taken: set[str] = set()
    counters = {"choice": 0, "loop": 0, "poset": 0, "skip": 0}

    def fresh(base: str) -> str:
        name = base
        suffix = 1
        while name in taken:
            suffix += 1
            name = f"{base}_{suffix}"
        taken.add(name)
        return name

    def counted(kind: str) -> str:
        counters[kind] += 1
        return fresh(f"{kind}_{counters[kind]}")

    def emit(node: PowlNode, as_final: bool = False) -> str:
        if id(node) in names and not as_final:
            return names[id(node)]
        if isinstance(node, Activity):
            name = "final_model" if as_final else fresh(_slug(node.label))
            lines.append(f"{name} = gen.activity({node.label!r})")
        elif isinstance(node, Silent):
            name = "final_model" if as_final else counted("skip")
            lines.append(f"{name} = None")
        elif isinstance(node, Xor):
            parts = [child_ref(c) for c in node.children]
            name = "final_model" if as_final else counted("choice")
            lines.append(f"{name} = gen.xor({', '.join(parts)})")
        elif isinstance(node, Loop):
            do = child_ref(node.do)
            redo = child_ref(node.redo)
            name = "final_model" if as_final else counted("loop")
            lines.append(f"{name} = gen.loop(do={do}, redo={redo})")
        else:
            assert isinstance(node, PartialOrder)
            refs = [emit(c) for c in node.nodes]
            reduction = _reduction(len(node.nodes), node.edges)
            connected = {i for edge in reduction for i in edge}
            groups = [f"({refs[i]}, {refs[j]})" for i, j in sorted(reduction)]
            groups += [f"({refs[i]},)" for i in range(len(refs)) if i not in connected]
            name = "final_model" if as_final else counted("poset")
            deps = ",\n    ".join(groups)
            lines.append(f"{name} = gen.partial_order(dependencies=[{deps}])")
        names[id(node)] = name
        return name

    def child_ref(node: PowlNode) -> str:
        # silent children of xor and loop render as the None literal
        if isinstance(node, Silent) and id(node) not in names:
            return "None"
        return emit(node)

    emit(model, as_final=True)
    return ConstructionScript("\n".join(lines) + "\n")
