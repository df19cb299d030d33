"""Temporal sortition over metric populations.

Draw sequences of panels whose individual panels, prefixes and union are
proportionally representative, with equal selection probability for every
individual, and audit how representative a given sequence really is.
"""

from .audit import (
    AuditReport,
    audit_sequence,
    brute_force_pfc,
    brute_force_prf,
    fairness_audit,
    pfc_factor,
    prf_factor,
)
from .capture import GroupNode, equal_size_capture, modified_greedy_capture
from .chain import build_level_families, chain_based_representation, construct_chain
from .errors import (
    ConfigurationError,
    DivisibilityError,
    InputError,
    InvariantViolation,
    SortitionError,
    StructuralError,
)
from .federated import (
    composition_audit,
    expanding_approval_partition,
    federated_assignment,
    federated_pipeline,
)
from .instances import fixture, generate
from .metric import Instance, validate
from .nested import build_tree, find_representative, nested_based_representation
from .sequence import PanelSequence, Seat

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "ConfigurationError",
    "DivisibilityError",
    "GroupNode",
    "InputError",
    "Instance",
    "InvariantViolation",
    "PanelSequence",
    "Seat",
    "SortitionError",
    "StructuralError",
    "audit_sequence",
    "brute_force_pfc",
    "brute_force_prf",
    "build_level_families",
    "build_tree",
    "chain_based_representation",
    "composition_audit",
    "construct_chain",
    "equal_size_capture",
    "expanding_approval_partition",
    "fairness_audit",
    "federated_assignment",
    "federated_pipeline",
    "find_representative",
    "fixture",
    "generate",
    "modified_greedy_capture",
    "nested_based_representation",
    "pfc_factor",
    "prf_factor",
    "validate",
]
