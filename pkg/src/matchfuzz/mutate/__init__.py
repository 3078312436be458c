"""Validity-preserving structured mutation of IR modules."""

from .config import (
    DEFAULT_WEIGHTS,
    LimitExceeded,
    MutationNoOp,
    MutatorConfig,
    NoCallable,
    NoCandidateOpcode,
    NothingDead,
    STRATEGY_NAMES,
    TypeUniverse,
)
from .strategies import (
    count_unstored_placeholders,
    fixup_placeholders,
    generate_call,
    generate_function,
    generate_instruction,
    insert_scfg,
    mutate_step,
    mutate_step_inplace,
    sink_value,
)

__all__ = [
    "DEFAULT_WEIGHTS",
    "LimitExceeded",
    "MutationNoOp",
    "MutatorConfig",
    "NoCallable",
    "NoCandidateOpcode",
    "NothingDead",
    "STRATEGY_NAMES",
    "TypeUniverse",
    "count_unstored_placeholders",
    "fixup_placeholders",
    "generate_call",
    "generate_function",
    "generate_instruction",
    "insert_scfg",
    "mutate_step",
    "mutate_step_inplace",
    "sink_value",
]
