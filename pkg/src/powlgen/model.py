"""Core POWL process-model terms and their validity rules.

A model is an immutable tree built from five node kinds: activities, silent
steps, exclusive choices, loops, and partial orders. Nodes compare by object
identity; the same object appearing at two tree positions is the "sub-model
reuse" defect that :func:`auto_fix_reuse` repairs by copying.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

__all__ = [
    "Activity",
    "Silent",
    "Xor",
    "Loop",
    "PartialOrder",
    "PowlNode",
    "Severity",
    "Diagnostic",
    "ValidationReport",
    "ConstructionError",
    "DiagnosticError",
    "validate",
    "close_order",
    "canonicalize",
    "deep_copy",
    "auto_fix_reuse",
    "structural_equal",
    "iter_positions",
    "activity_labels",
    "node_stats",
    "model_to_dict",
    "model_from_dict",
]


class ConstructionError(ValueError):
    """Raised when a node cannot be built at all (bad arity, bad index)."""


@dataclass(frozen=True, eq=False)
class Activity:
    """A labeled process step. Labels are trimmed, never empty."""

    label: str

    def __post_init__(self) -> None:
        trimmed = self.label.strip()
        if not trimmed:
            raise ConstructionError("activity label must be non-empty")
        object.__setattr__(self, "label", trimmed)


@dataclass(frozen=True, eq=False)
class Silent:
    """A step that executes without an observable event (tau)."""


@dataclass(frozen=True, eq=False)
class Xor:
    """Exclusive choice between two or more sub-models."""

    children: tuple["PowlNode", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ConstructionError("exclusive choice needs at least 2 children")


@dataclass(frozen=True, eq=False)
class Loop:
    """Loop with a mandatory do-part and a redo-part (Silent when absent).

    Execution is do (redo do)*: the do-part runs at least once.
    """

    do: "PowlNode"
    redo: "PowlNode"


@dataclass(frozen=True, eq=False)
class PartialOrder:
    """Strict order over sub-models; unordered pairs run concurrently.

    Edges are ordered index pairs into ``nodes``. Construction only checks
    that indices are in range; irreflexivity and acyclicity are reported by
    :func:`validate` so invalid LLM output can be diagnosed rather than
    crash.
    """

    nodes: tuple["PowlNode", ...]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", frozenset(self.edges))
        if not self.nodes:
            raise ConstructionError("partial order needs at least 1 node")
        n = len(self.nodes)
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ConstructionError(f"order edge ({i}, {j}) out of range for {n} nodes")


PowlNode = Union[Activity, Silent, Xor, Loop, PartialOrder]


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

class Severity(str, Enum):
    CRITICAL = "critical"
    ADJUSTABLE = "adjustable"
    WARNING = "warning"


# Each code has exactly one severity. Critical blocks model acceptance,
# adjustable is auto-repairable, warning is informational.
SEVERITY_BY_CODE: dict[str, Severity] = {
    "IRREFLEXIVITY_VIOLATION": Severity.CRITICAL,
    "ORDER_CYCLE": Severity.CRITICAL,
    "XOR_ARITY": Severity.CRITICAL,
    "UNDEFINED_VARIABLE": Severity.CRITICAL,
    "MISSING_FINAL_MODEL": Severity.CRITICAL,
    "PARSE_ERROR": Severity.CRITICAL,
    "UNKNOWN_FUNCTION": Severity.CRITICAL,
    "EMPTY_RESPONSE": Severity.CRITICAL,
    "UNPARSEABLE_EVALUATION": Severity.CRITICAL,
    "OPTIMIZATION_FAILED": Severity.CRITICAL,
    "SUBMODEL_REUSE": Severity.ADJUSTABLE,
    "UNUSED_VARIABLE": Severity.WARNING,
}


@dataclass(frozen=True)
class Diagnostic:
    """One finding about a model or script, phrased for LLM feedback."""

    code: str
    message: str
    path: str = ""
    severity: Severity = field(init=False)

    def __post_init__(self) -> None:
        try:
            sev = SEVERITY_BY_CODE[self.code]
        except KeyError:
            raise ValueError(f"unknown diagnostic code: {self.code}") from None
        object.__setattr__(self, "severity", sev)

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity.value,
            "message": self.message,
            "path": self.path,
        }


class DiagnosticError(Exception):
    """An operation failed with a specific diagnostic attached."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


@dataclass
class ValidationReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not any(d.severity is Severity.CRITICAL for d in self.diagnostics)

    def with_severity(self, severity: Severity) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity is severity]

    @property
    def has_critical(self) -> bool:
        return not self.is_valid

    @property
    def has_adjustable(self) -> bool:
        return any(d.severity is Severity.ADJUSTABLE for d in self.diagnostics)

    def to_dict(self) -> dict:
        return {
            "is_valid": self.is_valid,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }


# ---------------------------------------------------------------------------
# Tree walking
# ---------------------------------------------------------------------------

def _child_slots(node: PowlNode) -> list[tuple[str, PowlNode]]:
    if isinstance(node, Xor):
        return [(f"children[{i}]", c) for i, c in enumerate(node.children)]
    if isinstance(node, Loop):
        return [("do", node.do), ("redo", node.redo)]
    if isinstance(node, PartialOrder):
        return [(f"nodes[{i}]", c) for i, c in enumerate(node.nodes)]
    return []


def iter_positions(model: PowlNode) -> Iterator[tuple[str, PowlNode]]:
    """Yield (path, node) for every tree position, preorder.

    A shared node object is yielded once per position it occupies, but its
    subtree is only descended into on the first encounter so reuse cannot
    loop forever.
    """
    seen: set[int] = set()

    def walk(node: PowlNode, path: str) -> Iterator[tuple[str, PowlNode]]:
        yield path, node
        if id(node) in seen:
            return
        seen.add(id(node))
        for slot, child in _child_slots(node):
            yield from walk(child, f"{path}.{slot}")

    yield from walk(model, "root")


def activity_labels(model: PowlNode) -> list[str]:
    """Distinct activity labels, in first-occurrence order."""
    labels: list[str] = []
    for _, node in iter_positions(model):
        if isinstance(node, Activity) and node.label not in labels:
            labels.append(node.label)
    return labels


def node_stats(model: PowlNode) -> dict[str, int]:
    """Count tree positions per node kind (shared nodes count per position)."""
    counts = {"activity": 0, "silent": 0, "xor": 0, "loop": 0, "partial_order": 0}
    seen: set[int] = set()

    def walk(node: PowlNode) -> None:
        counts[_kind(node)] += 1
        if id(node) in seen:
            return
        seen.add(id(node))
        for _, child in _child_slots(node):
            walk(child)

    walk(model)
    return counts


def _kind(node: PowlNode) -> str:
    if isinstance(node, Activity):
        return "activity"
    if isinstance(node, Silent):
        return "silent"
    if isinstance(node, Xor):
        return "xor"
    if isinstance(node, Loop):
        return "loop"
    return "partial_order"


# ---------------------------------------------------------------------------
# Order closure
# ---------------------------------------------------------------------------

def _transitive_closure(n: int, edges: frozenset[tuple[int, int]]) -> set[tuple[int, int]]:
    succ: list[set[int]] = [set() for _ in range(n)]
    for i, j in edges:
        succ[i].add(j)
    for k in range(n):
        for i in range(n):
            if k in succ[i]:
                succ[i] |= succ[k]
    return {(i, j) for i in range(n) for j in succ[i]}


def _find_cycle(n: int, edges: frozenset[tuple[int, int]]) -> Optional[list[int]]:
    """Return one directed cycle as a node-index list, or None."""
    succ: list[list[int]] = [[] for _ in range(n)]
    for i, j in sorted(edges):
        succ[i].append(j)
    color = [0] * n  # 0 unvisited, 1 on stack, 2 done
    stack: list[int] = []

    def dfs(v: int) -> Optional[list[int]]:
        color[v] = 1
        stack.append(v)
        for w in succ[v]:
            if color[w] == 1:
                return stack[stack.index(w):] + [w]
            if color[w] == 0:
                found = dfs(w)
                if found:
                    return found
        stack.pop()
        color[v] = 2
        return None

    for v in range(n):
        if color[v] == 0:
            found = dfs(v)
            if found:
                return found
    return None


def close_order(po: PartialOrder) -> PartialOrder:
    """Return the partial order with its edge set transitively closed.

    Requires irreflexive input edges; raises :class:`DiagnosticError` with
    ORDER_CYCLE when the closure would force an (i, i) pair, i.e. the raw
    edges contain a directed cycle.
    """
    n = len(po.nodes)
    for i, j in po.edges:
        if i == j:
            raise DiagnosticError(Diagnostic(
                "IRREFLEXIVITY_VIOLATION",
                f"order edge from node {i} to itself is not allowed",
            ))
    closed = _transitive_closure(n, po.edges)
    if any(i == j for i, j in closed):
        cycle = _find_cycle(n, po.edges) or []
        names = " -> ".join(_describe_node(po.nodes[i]) for i in cycle)
        raise DiagnosticError(Diagnostic(
            "ORDER_CYCLE",
            f"order dependencies form a cycle: {names}" if names
            else "order dependencies form a cycle",
        ))
    if closed == set(po.edges):
        return po
    return PartialOrder(po.nodes, frozenset(closed))


def _describe_node(node: PowlNode) -> str:
    if isinstance(node, Activity):
        return repr(node.label)
    return _kind(node)


def canonicalize(model: PowlNode) -> PowlNode:
    """Close every partial order in the tree. Sharing is preserved."""
    rebuilt: dict[int, PowlNode] = {}

    def walk(node: PowlNode) -> PowlNode:
        if id(node) in rebuilt:
            return rebuilt[id(node)]
        if isinstance(node, Xor):
            children = tuple(walk(c) for c in node.children)
            out: PowlNode = node if children == node.children else Xor(children)
        elif isinstance(node, Loop):
            do, redo = walk(node.do), walk(node.redo)
            out = node if (do is node.do and redo is node.redo) else Loop(do, redo)
        elif isinstance(node, PartialOrder):
            nodes = tuple(walk(c) for c in node.nodes)
            po = node if nodes == node.nodes else PartialOrder(nodes, node.edges)
            out = close_order(po)
        else:
            out = node
        rebuilt[id(node)] = out
        return out

    return walk(model)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(model: PowlNode) -> ValidationReport:
    """Report every defect of a structurally well-formed tree.

    Never raises: invalid orders and sub-model reuse come back as
    diagnostics so the generation loop can feed them to the LLM.
    """
    report = ValidationReport()
    first_seen: dict[int, str] = {}

    for path, node in iter_positions(model):
        prior = first_seen.get(id(node))
        if prior is not None:
            report.diagnostics.append(Diagnostic(
                "SUBMODEL_REUSE",
                f"the sub-model at {path} is the same instance as the one at {prior}; "
                f"each sub-model may be used once, create a copy for further uses",
                path=path,
            ))
            continue
        first_seen[id(node)] = path

        if isinstance(node, PartialOrder):
            reflexive = sorted((i, j) for i, j in node.edges if i == j)
            for i, _ in reflexive:
                report.diagnostics.append(Diagnostic(
                    "IRREFLEXIVITY_VIOLATION",
                    f"partial order contains a self-dependency on node {i} "
                    f"({_describe_node(node.nodes[i])})",
                    path=path,
                ))
            proper = frozenset((i, j) for i, j in node.edges if i != j)
            closure = _transitive_closure(len(node.nodes), proper)
            if any(i == j for i, j in closure):
                cycle = _find_cycle(len(node.nodes), proper) or []
                names = " -> ".join(_describe_node(node.nodes[i]) for i in cycle)
                report.diagnostics.append(Diagnostic(
                    "ORDER_CYCLE",
                    f"order dependencies form a cycle: {names}",
                    path=path,
                ))
    return report


# ---------------------------------------------------------------------------
# Copying and reuse repair
# ---------------------------------------------------------------------------

def deep_copy(model: PowlNode) -> PowlNode:
    """Duplicate a model with fresh objects at every position.

    Internal sharing is deliberately not preserved: a copy is a plain tree,
    so copying a reused sub-model also removes any reuse inside it.
    """
    if isinstance(model, Activity):
        return Activity(model.label)
    if isinstance(model, Silent):
        return Silent()
    if isinstance(model, Xor):
        return Xor(tuple(deep_copy(c) for c in model.children))
    if isinstance(model, Loop):
        return Loop(deep_copy(model.do), deep_copy(model.redo))
    return PartialOrder(tuple(deep_copy(c) for c in model.nodes), model.edges)


def auto_fix_reuse(model: PowlNode) -> tuple[PowlNode, int]:
    """Replace every repeated occurrence of a node object with a deep copy.

    Returns the repaired model and the number of positions replaced. The
    trace language is unchanged since copies behave identically. Running it
    on a reuse-free model returns the model itself with a count of 0.
    """
    seen: set[int] = set()
    fixed = 0

    def walk(node: PowlNode) -> PowlNode:
        nonlocal fixed
        if id(node) in seen:
            fixed += 1
            return deep_copy(node)
        seen.add(id(node))
        if isinstance(node, Xor):
            children = tuple(walk(c) for c in node.children)
            return node if children == node.children else Xor(children)
        if isinstance(node, Loop):
            do, redo = walk(node.do), walk(node.redo)
            return node if (do is node.do and redo is node.redo) else Loop(do, redo)
        if isinstance(node, PartialOrder):
            nodes = tuple(walk(c) for c in node.nodes)
            return node if nodes == node.nodes else PartialOrder(nodes, node.edges)
        return node

    return walk(model), fixed


# ---------------------------------------------------------------------------
# Structural equality
# ---------------------------------------------------------------------------

def _fingerprint(node: PowlNode, memo: dict[int, tuple]) -> tuple:
    """Isomorphism-invariant key: equal models always get equal fingerprints."""
    cached = memo.get(id(node))
    if cached is not None:
        return cached
    if isinstance(node, Activity):
        fp: tuple = ("act", node.label)
    elif isinstance(node, Silent):
        fp = ("tau",)
    elif isinstance(node, Xor):
        fp = ("xor", tuple(sorted(_fingerprint(c, memo) for c in node.children)))
    elif isinstance(node, Loop):
        fp = ("loop", _fingerprint(node.do, memo), _fingerprint(node.redo, memo))
    else:
        node_fps = [_fingerprint(c, memo) for c in node.nodes]
        closure = _transitive_closure(len(node.nodes),
                                      frozenset((i, j) for i, j in node.edges if i != j))
        edge_fps = sorted((node_fps[i], node_fps[j]) for i, j in closure)
        fp = ("po", tuple(sorted(node_fps)), tuple(edge_fps))
    memo[id(node)] = fp
    return fp


def _match_multiset(xs: list[PowlNode], ys: list[PowlNode], memo: dict[int, tuple]) -> bool:
    """Backtracking bijection between two node lists under structural equality."""
    if len(xs) != len(ys):
        return False
    if not xs:
        return True
    x, rest = xs[0], xs[1:]
    x_fp = _fingerprint(x, memo)
    for k, y in enumerate(ys):
        if _fingerprint(y, memo) != x_fp:
            continue
        if structural_equal(x, y) and _match_multiset(rest, ys[:k] + ys[k + 1:], memo):
            return True
    return False


def structural_equal(a: PowlNode, b: PowlNode) -> bool:
    """True iff two models are isomorphic.

    Choice children match as a multiset (choice is symmetric), partial-order
    node listings may be permuted, and orders compare by transitive closure
    so a closed model equals its un-closed original. Loop do/redo parts are
    positional.
    """
    if type(a) is not type(b):
        return False
    if isinstance(a, Activity):
        return a.label == b.label
    if isinstance(a, Silent):
        return True
    if isinstance(a, Loop):
        return structural_equal(a.do, b.do) and structural_equal(a.redo, b.redo)
    memo: dict[int, tuple] = {}
    if isinstance(a, Xor):
        return _match_multiset(list(a.children), list(b.children), memo)

    assert isinstance(a, PartialOrder) and isinstance(b, PartialOrder)
    if len(a.nodes) != len(b.nodes):
        return False
    closure_a = _transitive_closure(len(a.nodes),
                                    frozenset((i, j) for i, j in a.edges if i != j))
    closure_b = _transitive_closure(len(b.nodes),
                                    frozenset((i, j) for i, j in b.edges if i != j))
    if len(closure_a) != len(closure_b):
        return False
    if _fingerprint(a, memo) != _fingerprint(b, memo):
        return False

    n = len(a.nodes)
    succ_a = [frozenset(j for i2, j in closure_a if i2 == i) for i in range(n)]
    pred_a = [frozenset(i2 for i2, j in closure_a if j == i) for i in range(n)]
    succ_b = [frozenset(j for i2, j in closure_b if i2 == i) for i in range(n)]
    pred_b = [frozenset(i2 for i2, j in closure_b if j == i) for i in range(n)]

    assignment: dict[int, int] = {}
    used: set[int] = set()

    def consistent(i: int, k: int) -> bool:
        if len(succ_a[i]) != len(succ_b[k]) or len(pred_a[i]) != len(pred_b[k]):
            return False
        for j, m in assignment.items():
            if ((i, j) in closure_a) != ((k, m) in closure_b):
                return False
            if ((j, i) in closure_a) != ((m, k) in closure_b):
                return False
        return True

    def assign(i: int) -> bool:
        if i == n:
            return True
        fp = _fingerprint(a.nodes[i], memo)
        for k in range(n):
            if k in used or _fingerprint(b.nodes[k], memo) != fp:
                continue
            if not consistent(i, k):
                continue
            if not structural_equal(a.nodes[i], b.nodes[k]):
                continue
            assignment[i] = k
            used.add(k)
            if assign(i + 1):
                return True
            del assignment[i]
            used.remove(k)
        return False

    return assign(0)


# ---------------------------------------------------------------------------
# JSON tree encoding (service API)
# ---------------------------------------------------------------------------

def model_to_dict(model: PowlNode) -> dict:
    if isinstance(model, Activity):
        return {"type": "activity", "label": model.label}
    if isinstance(model, Silent):
        return {"type": "silent"}
    if isinstance(model, Xor):
        return {"type": "xor", "children": [model_to_dict(c) for c in model.children]}
    if isinstance(model, Loop):
        return {"type": "loop", "do": model_to_dict(model.do), "redo": model_to_dict(model.redo)}
    return {
        "type": "partial_order",
        "nodes": [model_to_dict(c) for c in model.nodes],
        "edges": sorted([i, j] for i, j in model.edges),
    }


def model_from_dict(data: dict) -> PowlNode:
    kind = data.get("type")
    if kind == "activity":
        return Activity(data["label"])
    if kind == "silent":
        return Silent()
    if kind == "xor":
        return Xor(tuple(model_from_dict(c) for c in data["children"]))
    if kind == "loop":
        return Loop(model_from_dict(data["do"]), model_from_dict(data["redo"]))
    if kind == "partial_order":
        return PartialOrder(
            tuple(model_from_dict(c) for c in data["nodes"]),
            frozenset((int(i), int(j)) for i, j in data["edges"]),
        )
    raise ValueError(f"unknown node type in model JSON: {kind!r}")
