"""Conformance scoring: token-replay fitness, escaping-edges precision,
and their harmonic-mean quality.

Replay tracks a belief set of markings rather than a single marking, so nets
with duplicate activity labels (a natural result of copy-based reuse fixes)
replay correctly. Silent transitions are free: they never touch the token
counters, and a breadth-first search over silent firings runs before an
event is declared missing.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .model import PowlNode
from .semantics import EventLog, Trace
from .translate.petri import PetriNet, to_petri_net, transition_io

__all__ = [
    "ReplayCounters",
    "ConformanceReport",
    "replay_fitness",
    "escaping_precision",
    "quality_score",
    "evaluate_model",
]

MAX_CLOSURE = 4096  # markings explored per silent-firing search
MAX_BELIEF = 256  # belief states kept per replay step

Marking = tuple[tuple[str, int], ...]  # sorted (place, count), counts > 0


@dataclass
class ReplayCounters:
    produced: int = 0
    consumed: int = 0
    missing: int = 0
    remaining: int = 0

    def merge(self, other: "ReplayCounters") -> None:
        self.produced += other.produced
        self.consumed += other.consumed
        self.missing += other.missing
        self.remaining += other.remaining

    def to_dict(self) -> dict:
        return {
            "produced": self.produced,
            "consumed": self.consumed,
            "missing": self.missing,
            "remaining": self.remaining,
        }


@dataclass
class ConformanceReport:
    fitness: float
    precision: float
    quality: float
    per_trace: list[bool]
    counters: ReplayCounters = field(default_factory=ReplayCounters)

    def to_dict(self) -> dict:
        return {
            "fitness": self.fitness,
            "precision": self.precision,
            "quality": self.quality,
            "per_trace": list(self.per_trace),
            "counters": self.counters.to_dict(),
        }


# ---------------------------------------------------------------------------
# Marking helpers
# ---------------------------------------------------------------------------

def _to_key(marking: dict[str, int]) -> Marking:
    return tuple(sorted((p, c) for p, c in marking.items() if c > 0))


def _total(marking: Marking) -> int:
    return sum(c for _, c in marking)


class _Replayer:
    def __init__(self, net: PetriNet):
        self.net = net
        io = transition_io(net)
        self.io = io
        self.silent = [t.tid for t in net.transitions if t.label is None]
        self.by_label: dict[str, list[str]] = {}
        for t in net.transitions:
            if t.label is not None:
                self.by_label.setdefault(t.label, []).append(t.tid)
        self.initial = _to_key(net.initial)
        self.final = dict(net.final)
        self._closure_cache: dict[Marking, tuple[Marking, ...]] = {}

    def enabled(self, marking: Marking, tid: str) -> bool:
        have = dict(marking)
        return all(have.get(p, 0) >= 1 for p in self.io[tid][0])

    def fire(self, marking: Marking, tid: str) -> Marking:
        have = dict(marking)
        pre, post = self.io[tid]
        for p in pre:
            have[p] -= 1
        for p in post:
            have[p] = have.get(p, 0) + 1
        return _to_key(have)

    def closure(self, marking: Marking) -> tuple[Marking, ...]:
        """All markings reachable through silent firings, the start included."""
        cached = self._closure_cache.get(marking)
        if cached is not None:
            return cached
        seen = {marking}
        order = [marking]
        queue = deque([marking])
        while queue and len(seen) < MAX_CLOSURE:
            current = queue.popleft()
            for tid in self.silent:
                if self.enabled(current, tid):
                    nxt = self.fire(current, tid)
                    if nxt not in seen:
                        seen.add(nxt)
                        order.append(nxt)
                        queue.append(nxt)
        result = tuple(order)
        self._closure_cache[marking] = result
        return result

    def belief_closure(self, belief: list[Marking]) -> list[Marking]:
        seen: set[Marking] = set()
        out: list[Marking] = []
        for marking in belief:
            for reached in self.closure(marking):
                if reached not in seen:
                    seen.add(reached)
                    out.append(reached)
        return out

    def advance(self, closed: list[Marking], label: str) -> list[Marking]:
        """Fire any transition with this label from any closure marking."""
        seen: set[Marking] = set()
        out: list[Marking] = []
        for marking in closed:
            for tid in self.by_label.get(label, ()):
                if self.enabled(marking, tid):
                    nxt = self.fire(marking, tid)
                    if nxt not in seen:
                        seen.add(nxt)
                        out.append(nxt)
                        if len(out) >= MAX_BELIEF:
                            return out
        return out

    def enabled_labels(self, closed: list[Marking]) -> set[str]:
        labels = set()
        for marking in closed:
            for label, tids in self.by_label.items():
                if label not in labels and any(self.enabled(marking, t) for t in tids):
                    labels.add(label)
        return labels

    # -- fitness ------------------------------------------------------------

    def replay_trace(self, trace: Trace) -> ReplayCounters:
        counters = ReplayCounters()
        counters.produced += _total(self.initial)
        belief: list[Marking] = [self.initial]
        for label in trace:
            if label not in self.by_label:
                # the model does not know this activity at all
                counters.missing += 1
                counters.consumed += 1
                continue
            closed = self.belief_closure(belief)
            advanced = self.advance(closed, label)
            if advanced:
                pre, post = self.io[self.by_label[label][0]]
                counters.consumed += len(pre)
                counters.produced += len(post)
                belief = advanced[:MAX_BELIEF]
                continue
            # not enabled anywhere: insert missing tokens for the cheapest
            # (marking, transition) pair and force the firing
            best: tuple[int, str, Marking] | None = None
            for marking in closed:
                have = dict(marking)
                for tid in self.by_label[label]:
                    missing = sum(1 for p in self.io[tid][0] if have.get(p, 0) < 1)
                    candidate = (missing, tid, marking)
                    if best is None or candidate < best:
                        best = candidate
            missing, tid, marking = best
            have = dict(marking)
            pre, post = self.io[tid]
            for p in pre:
                have[p] = max(have.get(p, 0), 1)
            counters.missing += missing
            counters.consumed += len(pre)
            counters.produced += len(post)
            belief = [self.fire(_to_key(have), tid)]

        # trace end: pick the closure marking that settles into the final
        # marking most cleanly
        best_end: tuple[int, int, Marking] | None = None
        for marking in self.belief_closure(belief):
            have = dict(marking)
            deficiency = 0
            taken = 0
            for place, need in self.final.items():
                take = min(have.get(place, 0), need)
                taken += take
                deficiency += need - take
            leftover = _total(marking) - taken
            candidate = (deficiency + leftover, deficiency, marking)
            if best_end is None or candidate < best_end:
                best_end = candidate
        _, _, final_marking = best_end
        have = dict(final_marking)
        deficiency = 0
        taken = 0
        for place, need in self.final.items():
            take = min(have.get(place, 0), need)
            taken += take
            deficiency += need - take
        counters.consumed += sum(self.final.values())
        counters.missing += deficiency
        counters.remaining += _total(final_marking) - taken
        return counters


def replay_fitness(net: PetriNet, log: EventLog) -> tuple[float, ReplayCounters, list[bool]]:
    """Token-replay fitness over the whole log plus per-trace fit flags."""
    replayer = _Replayer(net)
    total = ReplayCounters()
    fits: list[bool] = []
    for _, trace in log.cases:
        counters = replayer.replay_trace(trace)
        fits.append(counters.missing == 0 and counters.remaining == 0)
        total.merge(counters)
    missing_term = 1.0 - total.missing / total.consumed if total.consumed else 1.0
    remaining_term = 1.0 - total.remaining / total.produced if total.produced else 1.0
    return 0.5 * missing_term + 0.5 * remaining_term, total, fits


# ---------------------------------------------------------------------------
# Precision
# ---------------------------------------------------------------------------

class _PrefixNode:
    __slots__ = ("visits", "children")

    def __init__(self) -> None:
        self.visits = 0
        self.children: dict[str, _PrefixNode] = {}


def escaping_precision(net: PetriNet, log: EventLog) -> float:
    """Escaping-edges precision over the log's prefix automaton.

    Each trace visits all of its prefixes, the empty and the full one
    included. A prefix whose belief is empty (the log left the model's
    language) enables nothing and is skipped by the |E| > 0 guard.
    """
    root = _PrefixNode()
    for _, trace in log.cases:
        node = root
        node.visits += 1
        for label in trace:
            node = node.children.setdefault(label, _PrefixNode())
            node.visits += 1

    replayer = _Replayer(net)
    escaping_weight = 0
    enabled_weight = 0

    def walk(node: _PrefixNode, belief: list[Marking]) -> None:
        nonlocal escaping_weight, enabled_weight
        closed = replayer.belief_closure(belief)
        enabled = replayer.enabled_labels(closed)
        if enabled:
            reflected = set(node.children)
            escaping_weight += node.visits * len(enabled - reflected)
            enabled_weight += node.visits * len(enabled)
        for label, child in node.children.items():
            walk(child, replayer.advance(closed, label))

    walk(root, [replayer.initial])
    if enabled_weight == 0:
        return 1.0
    return 1.0 - escaping_weight / enabled_weight


def quality_score(fitness: float, precision: float) -> float:
    """Harmonic mean; defined as 0 when both inputs are 0."""
    if fitness + precision == 0:
        return 0.0
    return 2.0 * fitness * precision / (fitness + precision)


def evaluate_model(candidate: PowlNode, truth_log: EventLog) -> ConformanceReport:
    """Score a candidate model against a ground-truth log."""
    net = to_petri_net(candidate)
    fitness, counters, fits = replay_fitness(net, truth_log)
    precision = escaping_precision(net, truth_log)
    return ConformanceReport(
        fitness=fitness,
        precision=precision,
        quality=quality_score(fitness, precision),
        per_trace=fits,
        counters=counters,
    )
