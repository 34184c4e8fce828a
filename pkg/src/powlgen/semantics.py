"""Bounded trace-variant enumeration and ground-truth log simulation.

Loops are unrolled up to a configurable cap on executions of the do-part
(default 2), every decision branch is explored, and the resulting log holds
exactly one case per distinct trace variant. A safety cap bounds the number
of variants; hitting it sets an explicit truncation flag instead of
silently sampling.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from xml.etree import ElementTree as ET

from .model import Activity, Loop, PartialOrder, PowlNode, Silent, Xor

Trace = tuple[str, ...]

__all__ = [
    "Trace",
    "SimulationConfig",
    "VariantSet",
    "EventLog",
    "SimulationError",
    "LogFormatError",
    "enumerate_variants",
    "simulate_log",
    "write_log",
    "read_log",
    "write_xes",
]


class SimulationError(RuntimeError):
    """Simulation could not produce a complete log (variant cap hit)."""


class LogFormatError(ValueError):
    """A log document has malformed rows; carries 1-based line numbers."""

    def __init__(self, message: str, lines: list[int]):
        super().__init__(f"{message} (line{'s' if len(lines) != 1 else ''} {', '.join(map(str, lines))})")
        self.lines = lines


@dataclass(frozen=True)
class SimulationConfig:
    loop_cap: int = 2
    max_variants: int = 10000

    def __post_init__(self) -> None:
        if self.loop_cap < 1:
            raise ValueError("loop_cap must be >= 1")
        if self.max_variants < 1:
            raise ValueError("max_variants must be >= 1")


@dataclass(frozen=True)
class VariantSet:
    traces: frozenset[Trace]
    truncated: bool = False

    def sorted(self) -> list[Trace]:
        return sorted(self.traces)


@dataclass
class EventLog:
    """Cases in insertion order; case ids must be unique."""

    cases: list[tuple[str, Trace]] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [cid for cid, _ in self.cases]
        if len(ids) != len(set(ids)):
            raise ValueError("case ids must be unique")

    def __len__(self) -> int:
        return len(self.cases)

    def traces(self) -> list[Trace]:
        return [trace for _, trace in self.cases]


# ---------------------------------------------------------------------------
# Variant enumeration
# ---------------------------------------------------------------------------

class _Budget:
    """Mutable cap shared by one enumeration run."""

    def __init__(self, limit: int):
        self.limit = limit
        self.truncated = False

    def add(self, acc: set[Trace], trace: Trace) -> bool:
        """Add to acc; return False once the cap would be exceeded."""
        if trace in acc:
            return True
        if len(acc) >= self.limit:
            self.truncated = True
            return False
        acc.add(trace)
        return True


def _enumerate(node: PowlNode, cap: int, budget: _Budget) -> set[Trace]:
    if isinstance(node, Activity):
        return {(node.label,)}
    if isinstance(node, Silent):
        return {()}
    if isinstance(node, Xor):
        acc: set[Trace] = set()
        for child in node.children:
            for trace in sorted(_enumerate(child, cap, budget)):
                if not budget.add(acc, trace):
                    return acc
        return acc
    if isinstance(node, Loop):
        do = sorted(_enumerate(node.do, cap, budget))
        redo = sorted(_enumerate(node.redo, cap, budget))
        acc = set()
        current: list[Trace] = do
        for k in range(cap):
            for trace in current:
                if not budget.add(acc, trace):
                    return acc
            if k + 1 < cap:
                nxt: set[Trace] = set()
                for a in current:
                    for b in redo:
                        for c in do:
                            nxt.add(a + b + c)
                            if len(nxt) > budget.limit:
                                budget.truncated = True
                                return acc
                current = sorted(nxt)
        return acc

    assert isinstance(node, PartialOrder)
    per_node = [sorted(_enumerate(child, cap, budget)) for child in node.nodes]
    n = len(node.nodes)
    preds: list[tuple[int, ...]] = [
        tuple(i for i, j in sorted(node.edges) if j == k and i != j) for k in range(n)
    ]
    acc = set()
    done = False

    def combos(idx: int, chosen: list[Trace]) -> None:
        nonlocal done
        if done:
            return
        if idx == n:
            _order_shuffles(tuple(chosen), preds, acc, budget)
            done = done or budget.truncated
            return
        for trace in per_node[idx]:
            combos(idx + 1, chosen + [trace])
            if done:
                return

    combos(0, [])
    return acc


def _order_shuffles(traces: tuple[Trace, ...], preds: list[tuple[int, ...]],
                    acc: set[Trace], budget: _Budget) -> None:
    """Merge per-node traces; node k may emit only once its predecessors finished."""
    n = len(traces)
    lengths = [len(t) for t in traces]
    pos = [0] * n
    prefix: list[str] = []

    def rec() -> bool:
        if all(pos[k] == lengths[k] for k in range(n)):
            return budget.add(acc, tuple(prefix))
        for k in range(n):
            if pos[k] >= lengths[k]:
                continue
            if any(pos[j] < lengths[j] for j in preds[k]):
                continue
            prefix.append(traces[k][pos[k]])
            pos[k] += 1
            ok = rec()
            pos[k] -= 1
            prefix.pop()
            if not ok:
                return False
        return True

    rec()


def enumerate_variants(model: PowlNode, cfg: SimulationConfig | None = None) -> VariantSet:
    """All distinct activity sequences the model admits under the loop cap.

    Edge sets are taken as-is: precedence flows only through nodes that emit
    events, so pass a canonicalized (transitively closed) model to get the
    intended ordering across silent branches.
    """
    cfg = cfg or SimulationConfig()
    budget = _Budget(cfg.max_variants)
    traces = _enumerate(model, cfg.loop_cap, budget)
    return VariantSet(frozenset(traces), budget.truncated)


def simulate_log(model: PowlNode, cfg: SimulationConfig | None = None) -> EventLog:
    """One case per variant, ids c1, c2, ... in lexicographic trace order."""
    variants = enumerate_variants(model, cfg)
    if variants.truncated:
        raise SimulationError(
            f"variant enumeration truncated at {len(variants.traces)} variants; "
            f"raise max_variants or simplify the model"
        )
    return EventLog([(f"c{i + 1}", trace) for i, trace in enumerate(variants.sorted())])


# ---------------------------------------------------------------------------
# Log serialization
# ---------------------------------------------------------------------------

_COLUMNS = ["case_id", "activity", "event_index"]


def write_log(log: EventLog) -> str:
    """CSV document with one row per event. Empty traces cannot be represented;
    they are rejected rather than silently dropped."""
    for cid, trace in log.cases:
        if not trace:
            raise ValueError(f"case {cid} has an empty trace; CSV logs require >= 1 event per case")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_COLUMNS)
    for cid, trace in log.cases:
        for idx, activity in enumerate(trace):
            writer.writerow([cid, activity, idx])
    return buf.getvalue()


def read_log(document: str) -> EventLog:
    reader = csv.reader(io.StringIO(document))
    rows = list(reader)
    if not rows or rows[0] != _COLUMNS:
        raise LogFormatError(f"expected header {','.join(_COLUMNS)}", [1])
    bad: list[int] = []
    events: dict[str, list[tuple[int, str]]] = {}
    order: list[str] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3 or not row[0] or not row[1]:
            bad.append(lineno)
            continue
        try:
            idx = int(row[2])
        except ValueError:
            bad.append(lineno)
            continue
        if row[0] not in events:
            events[row[0]] = []
            order.append(row[0])
        events[row[0]].append((idx, row[1]))
    if bad:
        raise LogFormatError("malformed log rows", bad)
    cases: list[tuple[str, Trace]] = []
    for cid in order:
        indexed = sorted(events[cid])
        if len({i for i, _ in indexed}) != len(indexed):
            raise LogFormatError(f"duplicate event_index in case {cid}", [])
        cases.append((cid, tuple(activity for _, activity in indexed)))
    return EventLog(cases)


def write_xes(log: EventLog) -> str:
    """Minimal XES document: traces, events, concept:name only."""
    root = ET.Element("log", {"xes.version": "1.0"})
    for cid, trace in log.cases:
        t = ET.SubElement(root, "trace")
        ET.SubElement(t, "string", {"key": "concept:name", "value": cid})
        for activity in trace:
            e = ET.SubElement(t, "event")
            ET.SubElement(e, "string", {"key": "concept:name", "value": activity})
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"
