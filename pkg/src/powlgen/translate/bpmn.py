"""BPMN graph construction, mapped directly from the process model tree.

Choices become exclusive gateway pairs, loops an exclusive join/split pair
with a back edge, partial orders parallel gateways routed along the
transitive reduction of the order. Gateways with one incoming and one
outgoing flow are elided by default.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..model import Activity, Loop, PartialOrder, PowlNode, Silent, Xor, validate

__all__ = ["BpmnNode", "BpmnGraph", "to_bpmn"]

GATEWAY_KINDS = ("xor_split", "xor_join", "and_split", "and_join", "pass")


@dataclass(frozen=True)
class BpmnNode:
    nid: str
    kind: str  # start | end | task | xor_split | xor_join | and_split | and_join
    label: str | None = None


@dataclass
class BpmnGraph:
    nodes: tuple[BpmnNode, ...]
    flows: tuple[tuple[str, str], ...]

    def by_kind(self, kind: str) -> list[BpmnNode]:
        return [n for n in self.nodes if n.kind == kind]

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.nid, "kind": n.kind, "label": n.label} for n in self.nodes
            ],
            "edges": [{"source": s, "target": t} for s, t in self.flows],
        }


class _Builder:
    def __init__(self) -> None:
        self.nodes: list[BpmnNode] = []
        self.flows: list[tuple[str, str]] = []

    def add(self, kind: str, label: str | None = None) -> str:
        nid = f"n{len(self.nodes)}"
        self.nodes.append(BpmnNode(nid, kind, label))
        return nid

    def flow(self, src: str, dst: str) -> None:
        self.flows.append((src, dst))

    def build(self, node: PowlNode) -> tuple[str, str]:
        """Return (entry node id, exit node id) of the fragment."""
        if isinstance(node, Activity):
            nid = self.add("task", node.label)
            return nid, nid
        if isinstance(node, Silent):
            # placeholder that the elision pass removes, leaving a plain flow
            nid = self.add("pass")
            return nid, nid
        if isinstance(node, Xor):
            split = self.add("xor_split")
            join = self.add("xor_join")
            for child in node.children:
                c_in, c_out = self.build(child)
                self.flow(split, c_in)
                self.flow(c_out, join)
            return split, join
        if isinstance(node, Loop):
            join = self.add("xor_join")
            split = self.add("xor_split")
            d_in, d_out = self.build(node.do)
            self.flow(join, d_in)
            self.flow(d_out, split)
            r_in, r_out = self.build(node.redo)
            self.flow(split, r_in)
            self.flow(r_out, join)
            return join, split
        assert isinstance(node, PartialOrder)
        return self.build_order(node)

    def build_order(self, node: PartialOrder) -> tuple[str, str]:
        n = len(node.nodes)
        reduction = _reduction(n, node.edges)
        split = self.add("and_split")
        join = self.add("and_join")
        gate_in: list[str] = []
        gate_out: list[str] = []
        for k in range(n):
            g_in = self.add("and_join")
            f_in, f_out = self.build(node.nodes[k])
            g_out = self.add("and_split")
            self.flow(g_in, f_in)
            self.flow(f_out, g_out)
            gate_in.append(g_in)
            gate_out.append(g_out)
        has_pred = {j for _, j in reduction}
        has_succ = {i for i, _ in reduction}
        for k in range(n):
            if k not in has_pred:
                self.flow(split, gate_in[k])
            if k not in has_succ:
                self.flow(gate_out[k], join)
        for i, j in sorted(reduction):
            self.flow(gate_out[i], gate_in[j])
        return split, join


def _reduction(n: int, edges: frozenset[tuple[int, int]]) -> set[tuple[int, int]]:
    proper = {(i, j) for i, j in edges if i != j}
    return {
        (i, j) for i, j in proper
        if not any((i, k) in proper and (k, j) in proper for k in range(n))
    }


def _elide_trivial_gateways(nodes: list[BpmnNode], flows: list[tuple[str, str]]) -> tuple[list[BpmnNode], list[tuple[str, str]]]:
    changed = True
    while changed:
        changed = False
        for node in nodes:
            if node.kind not in GATEWAY_KINDS:
                continue
            ins = [f for f in flows if f[1] == node.nid]
            outs = [f for f in flows if f[0] == node.nid]
            if len(ins) == 1 and len(outs) == 1:
                flows.remove(ins[0])
                flows.remove(outs[0])
                flows.append((ins[0][0], outs[0][1]))
                nodes.remove(node)
                changed = True
                break
    return nodes, flows


def to_bpmn(model: PowlNode, elide_trivial: bool = True) -> BpmnGraph:
    """Translate a valid model into a BPMN graph with deterministic ids."""
    report = validate(model)
    if not report.is_valid:
        raise ValueError(f"cannot translate an invalid model: {report.to_dict()}")
    b = _Builder()
    start = b.add("start")
    end = b.add("end")
    entry, exit_ = b.build(model)
    b.flow(start, entry)
    b.flow(exit_, end)
    nodes, flows = b.nodes, b.flows
    if elide_trivial:
        nodes, flows = _elide_trivial_gateways(nodes, flows)
    else:
        # the silent placeholders are not part of the exported vocabulary
        nodes, flows = _elide_pass_nodes(nodes, flows)
    return BpmnGraph(tuple(nodes), tuple(flows))


def _elide_pass_nodes(nodes: list[BpmnNode], flows: list[tuple[str, str]]) -> tuple[list[BpmnNode], list[tuple[str, str]]]:
    for node in list(nodes):
        if node.kind == "pass":
            ins = [f for f in flows if f[1] == node.nid]
            outs = [f for f in flows if f[0] == node.nid]
            for f in ins + outs:
                flows.remove(f)
            for src, _ in ins:
                for _, dst in outs:
                    flows.append((src, dst))
            nodes.remove(node)
    return nodes, flows
