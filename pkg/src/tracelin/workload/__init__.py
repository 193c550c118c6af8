from .recorder import RecordRunError, WorkloadConfig, record_run
from .structures import (
    BUG_MODEL,
    EMPTY,
    BugId,
    Jitter,
    LockQueue,
    SegQueue,
    SnapshotMap,
)
from .template import emit_fuzzer_template

__all__ = [
    "BUG_MODEL",
    "EMPTY",
    "BugId",
    "Jitter",
    "LockQueue",
    "RecordRunError",
    "SegQueue",
    "SnapshotMap",
    "WorkloadConfig",
    "emit_fuzzer_template",
    "record_run",
]
