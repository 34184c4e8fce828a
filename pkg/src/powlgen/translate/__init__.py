"""Model translation: workflow Petri nets, BPMN graphs, and file formats."""

from .bpmn import BpmnGraph, BpmnNode, to_bpmn
from .petri import PetriNet, Transition, check_workflow_shape, to_petri_net, transition_io
from .serialize import write_bpmn_xml, write_dot, write_pnml

__all__ = [
    "PetriNet",
    "Transition",
    "to_petri_net",
    "transition_io",
    "check_workflow_shape",
    "BpmnGraph",
    "BpmnNode",
    "to_bpmn",
    "write_pnml",
    "write_bpmn_xml",
    "write_dot",
]
