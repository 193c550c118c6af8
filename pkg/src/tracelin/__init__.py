"""tracelin: timeboxed-trace linearizability checking.

Record multithreaded operation histories from reference concurrent
structures, decide via explicit-state search whether each history
linearizes through a pluggable state-machine model, and export
explorable counterexample state graphs on failure.
"""

from .values import (
    Value,
    ValueMap,
    ValueSet,
    canonical_decode,
    canonical_encode,
    value_eq,
    value_hash,
)
from .trace import (
    TimeboxedAction,
    Trace,
    TraceMeta,
    TraceParseError,
    TraceValidationError,
    Violation,
    read_trace,
    shrink_timeboxes,
    validate_trace,
    write_trace,
)
from .models import (
    AtomicQueue,
    MODEL_REGISTRY,
    ModelSpec,
    OpSig,
    OrderedMapRange,
    PerProducerFIFO,
    SpecificationError,
    enabled_actions_hint,
    get_model,
)
from .linearizer import (
    Accepted,
    ActionRef,
    CheckOptions,
    CheckResourceError,
    CheckStats,
    Rejected,
    StateGraph,
    Verdict,
    check,
    export_graph,
    replay_witness,
    viable_actions,
)
from .oracle import OracleBoundExceeded, oracle_check
from .workload import (
    BugId,
    Jitter,
    LockQueue,
    SegQueue,
    SnapshotMap,
    WorkloadConfig,
    emit_fuzzer_template,
    record_run,
)

__version__ = "0.1.0"

__all__ = [
    "Accepted",
    "ActionRef",
    "AtomicQueue",
    "BugId",
    "CheckOptions",
    "CheckResourceError",
    "CheckStats",
    "Jitter",
    "LockQueue",
    "MODEL_REGISTRY",
    "ModelSpec",
    "OpSig",
    "OracleBoundExceeded",
    "OrderedMapRange",
    "PerProducerFIFO",
    "Rejected",
    "SegQueue",
    "SnapshotMap",
    "SpecificationError",
    "StateGraph",
    "TimeboxedAction",
    "Trace",
    "TraceMeta",
    "TraceParseError",
    "TraceValidationError",
    "Value",
    "ValueMap",
    "ValueSet",
    "Verdict",
    "Violation",
    "WorkloadConfig",
    "canonical_decode",
    "canonical_encode",
    "check",
    "emit_fuzzer_template",
    "enabled_actions_hint",
    "export_graph",
    "get_model",
    "oracle_check",
    "read_trace",
    "record_run",
    "replay_witness",
    "shrink_timeboxes",
    "validate_trace",
    "value_eq",
    "value_hash",
    "viable_actions",
    "write_trace",
]
