"""Workflow Petri net construction from process models.

Place-bordered recursive translation: every fragment sits between an entry
and an exit place, choices fuse those places, loops and partial orders wire
fragments together with silent transitions. The result is a workflow net
with one source, one sink, and unit markings.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ..model import Activity, Loop, PartialOrder, PowlNode, Silent, Xor, validate

__all__ = ["Transition", "PetriNet", "to_petri_net", "transition_io", "check_workflow_shape"]


@dataclass(frozen=True)
class Transition:
    tid: str
    label: str | None = None  # None means silent

    @property
    def is_silent(self) -> bool:
        return self.label is None


@dataclass
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[Transition, ...]
    arcs: tuple[tuple[str, str], ...]  # (source id, target id)
    initial: dict[str, int]
    final: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "places": list(self.places),
            "transitions": [
                {"id": t.tid, "label": t.label} for t in self.transitions
            ],
            "arcs": [{"source": s, "target": t} for s, t in self.arcs],
            "initial_marking": dict(self.initial),
            "final_marking": dict(self.final),
        }


class _Builder:
    def __init__(self) -> None:
        self.places: list[str] = []
        self.transitions: list[Transition] = []
        self.arcs: list[tuple[str, str]] = []

    def place(self) -> str:
        pid = f"p{len(self.places)}"
        self.places.append(pid)
        return pid

    def transition(self, label: str | None) -> str:
        tid = f"t{len(self.transitions)}"
        self.transitions.append(Transition(tid, label))
        return tid

    def arc(self, src: str, dst: str) -> None:
        self.arcs.append((src, dst))

    def build(self, node: PowlNode, entry: str, exit_: str) -> None:
        if isinstance(node, (Activity, Silent)):
            t = self.transition(node.label if isinstance(node, Activity) else None)
            self.arc(entry, t)
            self.arc(t, exit_)
        elif isinstance(node, Xor):
            for child in node.children:
                self.build(child, entry, exit_)
        elif isinstance(node, Loop):
            t_enter = self.transition(None)
            p1 = self.place()
            p2 = self.place()
            t_exit = self.transition(None)
            self.arc(entry, t_enter)
            self.arc(t_enter, p1)
            self.build(node.do, p1, p2)
            self.build(node.redo, p2, p1)
            self.arc(p2, t_exit)
            self.arc(t_exit, exit_)
        else:
            assert isinstance(node, PartialOrder)
            self.build_order(node, entry, exit_)

    def build_order(self, node: PartialOrder, entry: str, exit_: str) -> None:
        n = len(node.nodes)
        edges = sorted((i, j) for i, j in node.edges if i != j)
        preds: list[list[int]] = [[] for _ in range(n)]
        succs: list[list[int]] = [[] for _ in range(n)]
        for i, j in edges:
            preds[j].append(i)
            succs[i].append(j)

        t_split = self.transition(None)
        self.arc(entry, t_split)
        entries = [self.place() for _ in range(n)]
        exits = [self.place() for _ in range(n)]
        buffers = {(i, j): self.place() for i, j in edges}
        for k in range(n):
            self.build(node.nodes[k], entries[k], exits[k])
        t_join = self.transition(None)
        self.arc(t_join, exit_)

        for k in range(n):
            if preds[k]:
                t_in = self.transition(None)
                for i in preds[k]:
                    self.arc(buffers[(i, k)], t_in)
                self.arc(t_in, entries[k])
            else:
                self.arc(t_split, entries[k])
            if succs[k]:
                t_out = self.transition(None)
                self.arc(exits[k], t_out)
                for j in succs[k]:
                    self.arc(t_out, buffers[(k, j)])
            else:
                self.arc(exits[k], t_join)


def to_petri_net(model: PowlNode) -> PetriNet:
    """Translate a valid model into a workflow net. Silent transitions have
    no label, ids are assigned in construction order so output is stable."""
    report = validate(model)
    if not report.is_valid:
        raise ValueError(f"cannot translate an invalid model: {report.to_dict()}")
    b = _Builder()
    source = b.place()
    sink = b.place()
    b.build(model, source, sink)
    return PetriNet(
        places=tuple(b.places),
        transitions=tuple(b.transitions),
        arcs=tuple(b.arcs),
        initial={source: 1},
        final={sink: 1},
    )


def transition_io(net: PetriNet) -> dict[str, tuple[tuple[str, ...], tuple[str, ...]]]:
    """Map transition id to its (input places, output places)."""
    pre: dict[str, list[str]] = {t.tid: [] for t in net.transitions}
    post: dict[str, list[str]] = {t.tid: [] for t in net.transitions}
    place_set = set(net.places)
    for src, dst in net.arcs:
        if src in place_set:
            pre[dst].append(src)
        else:
            post[src].append(dst)
    return {tid: (tuple(pre[tid]), tuple(post[tid])) for tid in pre}


def check_workflow_shape(net: PetriNet) -> list[str]:
    """Workflow-net shape violations; an empty list means the net is sound
    in shape: one source, one sink, unit markings, all nodes on a path."""
    problems: list[str] = []
    place_set = set(net.places)
    incoming: dict[str, int] = {p: 0 for p in net.places}
    outgoing: dict[str, int] = {p: 0 for p in net.places}
    forward: dict[str, list[str]] = {}
    backward: dict[str, list[str]] = {}
    for src, dst in net.arcs:
        forward.setdefault(src, []).append(dst)
        backward.setdefault(dst, []).append(src)
        if src in place_set:
            outgoing[src] += 1
        if dst in place_set:
            incoming[dst] += 1

    sources = [p for p in net.places if incoming[p] == 0]
    sinks = [p for p in net.places if outgoing[p] == 0]
    if len(sources) != 1:
        problems.append(f"expected exactly one source place, found {sources}")
    if len(sinks) != 1:
        problems.append(f"expected exactly one sink place, found {sinks}")
    if sources and net.initial != {sources[0]: 1}:
        problems.append(f"initial marking {net.initial} is not one token on {sources[0]}")
    if sinks and net.final != {sinks[0]: 1}:
        problems.append(f"final marking {net.final} is not one token on {sinks[0]}")

    if sources and sinks:
        def reach(start: str, adj: dict[str, list[str]]) -> set[str]:
            seen = {start}
            queue = deque([start])
            while queue:
                for nxt in adj.get(queue.popleft(), []):
                    if nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)
            return seen

        on_path = reach(sources[0], forward) & reach(sinks[0], backward)
        everything = set(net.places) | {t.tid for t in net.transitions}
        stranded = everything - on_path
        if stranded:
            problems.append(f"nodes not on any source-to-sink path: {sorted(stranded)}")
    return problems
