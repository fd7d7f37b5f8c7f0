"""Timed DCR graph engine and an off-chain conformance monitor for contract traces."""
from .core import (
    ANY,
    INFINITE,
    DcrGraph,
    EnabledVerdict,
    Marking,
    Relation,
    RelationKind,
    TimeMode,
    advance_time,
    enabled_events,
    execute,
    flatten,
    is_accepting,
    is_enabled,
)
from .expr import eval_expr, eval_guard, parse_duration, parse_expr, pretty
from .model import ModelDocument, load_model, parse_model, serialize_model, validate_model

__version__ = "0.1.0"
