"""File formats for translated models: PNML, BPMN 2.0 XML, and DOT."""

from __future__ import annotations

from xml.etree import ElementTree as ET

from .bpmn import BpmnGraph
from .petri import PetriNet

__all__ = ["write_pnml", "write_bpmn_xml", "write_dot"]

PNML_NS = "http://www.pnml.org/version-2009/grammar/pnml"
PNML_NET_TYPE = "http://www.pnml.org/version-2009/grammar/ptnet"
BPMN_NS = "http://www.omg.org/spec/BPMN/20100524/MODEL"

_BPMN_TAGS = {
    "start": "startEvent",
    "end": "endEvent",
    "task": "task",
    "xor_split": "exclusiveGateway",
    "xor_join": "exclusiveGateway",
    "and_split": "parallelGateway",
    "and_join": "parallelGateway",
}


def _doc(root: ET.Element) -> str:
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def write_pnml(net: PetriNet) -> str:
    """PNML document; silent transitions carry no name element."""
    root = ET.Element("pnml", {"xmlns": PNML_NS})
    net_el = ET.SubElement(root, "net", {"id": "net1", "type": PNML_NET_TYPE})
    page = ET.SubElement(net_el, "page", {"id": "page1"})
    for pid in net.places:
        place = ET.SubElement(page, "place", {"id": pid})
        if pid in net.initial:
            marking = ET.SubElement(place, "initialMarking")
            ET.SubElement(marking, "text").text = str(net.initial[pid])
    for t in net.transitions:
        trans = ET.SubElement(page, "transition", {"id": t.tid})
        if t.label is not None:
            name = ET.SubElement(trans, "name")
            ET.SubElement(name, "text").text = t.label
    for i, (src, dst) in enumerate(net.arcs):
        ET.SubElement(page, "arc", {"id": f"a{i}", "source": src, "target": dst})
    finals = ET.SubElement(net_el, "finalmarkings")
    marking = ET.SubElement(finals, "marking")
    for pid, count in sorted(net.final.items()):
        place = ET.SubElement(marking, "place", {"idref": pid})
        ET.SubElement(place, "text").text = str(count)
    return _doc(root)


def write_bpmn_xml(graph: BpmnGraph) -> str:
    """BPMN 2.0 XML with tasks, exclusive and parallel gateways, and flows."""
    root = ET.Element("definitions", {
        "xmlns": BPMN_NS,
        "id": "definitions1",
        "targetNamespace": "http://powlgen/bpmn",
    })
    process = ET.SubElement(root, "process", {"id": "process1", "isExecutable": "false"})
    for node in graph.nodes:
        attrs = {"id": node.nid}
        if node.label:
            attrs["name"] = node.label
        ET.SubElement(process, _BPMN_TAGS[node.kind], attrs)
    for i, (src, dst) in enumerate(graph.flows):
        ET.SubElement(process, "sequenceFlow", {
            "id": f"flow{i}", "sourceRef": src, "targetRef": dst,
        })
    return _doc(root)


def write_dot(obj: PetriNet | BpmnGraph) -> str:
    """DOT digraph for quick visual inspection."""
    lines = ["digraph G {", "  rankdir=LR;"]
    if isinstance(obj, PetriNet):
        for pid in obj.places:
            peripheries = "2" if pid in obj.final else "1"
            fill = ", style=filled, fillcolor=lightgray" if pid in obj.initial else ""
            lines.append(f'  "{pid}" [shape=circle, peripheries={peripheries}{fill}, label=""];')
        for t in obj.transitions:
            if t.label is None:
                lines.append(f'  "{t.tid}" [shape=box, style=filled, fillcolor=black, label="", width=0.1];')
            else:
                lines.append(f'  "{t.tid}" [shape=box, label="{_dot_escape(t.label)}"];')
        for src, dst in obj.arcs:
            lines.append(f'  "{src}" -> "{dst}";')
    else:
        shapes = {
            "start": "circle",
            "end": "doublecircle",
            "task": "box",
            "xor_split": "diamond",
            "xor_join": "diamond",
            "and_split": "diamond",
            "and_join": "diamond",
        }
        for node in obj.nodes:
            shape = shapes.get(node.kind, "box")
            if node.kind in ("xor_split", "xor_join"):
                label = "X"
            elif node.kind in ("and_split", "and_join"):
                label = "+"
            else:
                label = node.label or node.kind
            lines.append(f'  "{node.nid}" [shape={shape}, label="{_dot_escape(label)}"];')
        for src, dst in obj.flows:
            lines.append(f'  "{src}" -> "{dst}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')
