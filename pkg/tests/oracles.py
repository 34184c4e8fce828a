"""Independent reference computations the test suite checks the library against.

These are deliberately written with different algorithms than the library:
variant enumeration here generates every interleaving and filters afterwards,
cycle detection delegates to networkx. Keep them slow and obvious.
"""

from __future__ import annotations

import itertools

import networkx as nx

from powlgen.model import Activity, Loop, PartialOrder, PowlNode, Silent, Xor

Trace = tuple[str, ...]


def _all_interleavings(seqs: list[tuple]) -> set[tuple]:
    """Every merge of the given sequences that keeps each one's inner order."""
    if not seqs:
        return {()}
    results: set[tuple] = set()

    def go(prefix: tuple, remaining: tuple[tuple, ...]) -> None:
        if all(not s for s in remaining):
            results.add(prefix)
            return
        for idx, s in enumerate(remaining):
            if s:
                rest = remaining[:idx] + (s[1:],) + remaining[idx + 1:]
                go(prefix + (s[0],), rest)

    go((), tuple(seqs))
    return results


def brute_force_variants(model: PowlNode, loop_cap: int = 2) -> set[Trace]:
    """Enumerate trace variants by exhaustive interleaving plus filtering."""
    if isinstance(model, Activity):
        return {(model.label,)}
    if isinstance(model, Silent):
        return {()}
    if isinstance(model, Xor):
        out: set[Trace] = set()
        for child in model.children:
            out |= brute_force_variants(child, loop_cap)
        return out
    if isinstance(model, Loop):
        do = brute_force_variants(model.do, loop_cap)
        redo = brute_force_variants(model.redo, loop_cap)
        out = set()
        current = set(do)
        for _ in range(loop_cap):
            out |= current
            current = {a + b + c for a in current for b in redo for c in do}
        return out

    assert isinstance(model, PartialOrder)
    per_node = [sorted(brute_force_variants(child, loop_cap)) for child in model.nodes]
    out = set()
    for combo in itertools.product(*per_node):
        # Tag every event with its node index so the filter can see origins.
        tagged = [tuple((idx, ev) for ev in trace) for idx, trace in enumerate(combo)]
        for interleaving in _all_interleavings(tagged):
            ok = True
            for i, j in model.edges:
                if i == j:
                    continue
                last_i = max((pos for pos, (idx, _) in enumerate(interleaving) if idx == i),
                             default=-1)
                first_j = min((pos for pos, (idx, _) in enumerate(interleaving) if idx == j),
                              default=len(interleaving))
                if last_i > first_j:
                    ok = False
                    break
            if ok:
                out.add(tuple(ev for _, ev in interleaving))
    return out


def order_has_cycle(n: int, edges: set[tuple[int, int]]) -> bool:
    """networkx-backed check that an edge set over n nodes contains a cycle."""
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    return not nx.is_directed_acyclic_graph(g)


def expected_gateway_counts(model: PowlNode) -> tuple[int, int]:
    """(exclusive, parallel) gateway counts an elided BPMN graph must have.

    Walks the process tree directly: every choice and loop contributes two
    exclusive gateways; partial orders contribute parallel gateways wherever
    the transitive reduction (networkx) fans out or in.
    """
    xor_count = 0
    and_count = 0

    def walk(node: PowlNode) -> None:
        nonlocal xor_count, and_count
        if isinstance(node, (Activity, Silent)):
            return
        if isinstance(node, Xor):
            xor_count += 2
            for child in node.children:
                walk(child)
            return
        if isinstance(node, Loop):
            xor_count += 2
            walk(node.do)
            walk(node.redo)
            return
        assert isinstance(node, PartialOrder)
        n = len(node.nodes)
        g = nx.DiGraph()
        g.add_nodes_from(range(n))
        g.add_edges_from((i, j) for i, j in node.edges if i != j)
        reduced = nx.transitive_reduction(g)
        minimal = [k for k in range(n) if reduced.in_degree(k) == 0]
        maximal = [k for k in range(n) if reduced.out_degree(k) == 0]
        if len(minimal) > 1:
            and_count += 1
        if len(maximal) > 1:
            and_count += 1
        and_count += sum(1 for k in range(n) if reduced.in_degree(k) >= 2)
        and_count += sum(1 for k in range(n) if reduced.out_degree(k) >= 2)
        for child in node.nodes:
            walk(child)

    walk(model)
    return xor_count, and_count


def read_pnml(document: str):
    """Tiny PNML reader used to round-trip exports in tests."""
    from xml.etree import ElementTree as ET

    ns = {"pnml": "http://www.pnml.org/version-2009/grammar/pnml"}
    root = ET.fromstring(document)
    page = root.find("pnml:net/pnml:page", ns)
    places = []
    initial = {}
    for place in page.findall("pnml:place", ns):
        pid = place.get("id")
        places.append(pid)
        marking = place.find("pnml:initialMarking/pnml:text", ns)
        if marking is not None:
            initial[pid] = int(marking.text)
    transitions = {}
    for trans in page.findall("pnml:transition", ns):
        name = trans.find("pnml:name/pnml:text", ns)
        transitions[trans.get("id")] = None if name is None else name.text
    arcs = [(a.get("source"), a.get("target")) for a in page.findall("pnml:arc", ns)]
    final = {}
    for place in root.findall("pnml:net/pnml:finalmarkings/pnml:marking/pnml:place", ns):
        final[place.get("idref")] = int(place.find("pnml:text", ns).text)
    return places, transitions, arcs, initial, final
