"""Secret key generation from RSSI reciprocity on LoRaWAN-class links.

Pipeline: paired probe traces (real CSV logs or the built-in link
simulator) are segmented into blocks, normalized, quantized into
preliminary keys, filtered by bit disagreement rate, reconciled via
BCH syndrome exchange, randomness-tested and hashed into 128-bit
session keys with explicit leakage accounting.
"""

from .amplify import FinalKey, RandomnessReport, amplify, key_context, test_randomness
from .chansim import (
    LinkRealization,
    SimConfig,
    calibrated_config,
    parse_eve_csv,
    schedule,
    serialize_eve_csv,
    simulate,
)
from .metrics import EvalReport, EveSummary, evaluate, eve_advantage, kgr_curve
from .pipeline import (
    PreliminaryKey,
    QuantizerConfig,
    bdr,
    enhance,
    normalize,
    quantize,
    quantize_difference,
    quantize_threshold,
)
from .reconcile import (
    BchCode,
    CodeParams,
    ReconcileResult,
    default_codes,
    pick_code,
    reconcile,
    syndrome,
    verification_digest,
)
from .runner import RunConfig, StageError, run_pipeline, run_sweep
from .trace import (
    ChannelProfile,
    ProbeSample,
    ProbeTrace,
    TraceFormatError,
    align,
    parse_trace_csv,
    segment,
    serialize_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "FinalKey",
    "RandomnessReport",
    "amplify",
    "key_context",
    "test_randomness",
    "LinkRealization",
    "SimConfig",
    "calibrated_config",
    "parse_eve_csv",
    "schedule",
    "serialize_eve_csv",
    "simulate",
    "EvalReport",
    "EveSummary",
    "evaluate",
    "eve_advantage",
    "kgr_curve",
    "PreliminaryKey",
    "QuantizerConfig",
    "bdr",
    "enhance",
    "normalize",
    "quantize",
    "quantize_difference",
    "quantize_threshold",
    "BchCode",
    "CodeParams",
    "ReconcileResult",
    "default_codes",
    "pick_code",
    "reconcile",
    "syndrome",
    "verification_digest",
    "RunConfig",
    "StageError",
    "run_pipeline",
    "run_sweep",
    "ChannelProfile",
    "ProbeSample",
    "ProbeTrace",
    "TraceFormatError",
    "align",
    "parse_trace_csv",
    "segment",
    "serialize_trace_csv",
    "__version__",
]
