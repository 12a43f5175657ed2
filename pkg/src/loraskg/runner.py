"""End-to-end pipeline orchestration and report generation.

Wires one input source (trace CSV or simulator) through segmentation,
normalization, optional enhancement, quantization, acceptance
filtering, reconciliation, randomness testing and amplification, and
serializes the results (report JSON, per-quantizer transcript CSV and
key files) atomically.
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import chansim, metrics, pipeline
from . import trace as trace_mod
from .amplify import (
    DEFAULT_ALPHA,
    KEY_BITS,
    FinalKey,
    RandomnessReport,
    amplify,
    key_context,
    test_randomness,
)
from .reconcile import (
    VERIFY_DIGEST_BYTES,
    BchCode,
    TranscriptRecord,
    default_codes,
    pick_code,
    reconcile as reconcile_block,
    transcript_record,
    write_transcript_csv,
)

KEY_LABELS = ("AppSKey", "NwkSEncKey")

KGR_ACCOUNTING = (
    "KGR counts all probed time (rejected blocks included); "
    "reconciliation/verification airtime is excluded from the KGR clock "
    "and reported separately as transcript_overhead_bits"
)


class StageError(RuntimeError):
    """A pipeline stage failed; message carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.__cause__ = cause


@dataclass
class RunConfig:
    """One pipeline invocation.

    Exactly one of input_csv / sim must be set.  `cutoff` drives run
    and report acceptance; `cutoffs` drives the sweep.  All cutoffs
    must lie in (0, 0.25], the range the configured codes can cover.
    """

    input_csv: str | None = None
    eve_csv: str | None = None
    sim: chansim.SimConfig | None = None
    quantizers: tuple[str, ...] = pipeline.QUANTIZERS
    enhance_degree: int | None = None
    cutoff: float = 0.2
    cutoffs: tuple[float, ...] = (0.05, 0.10, 0.15, 0.20, 0.25)
    alpha: float = DEFAULT_ALPHA
    paper_mode: bool = False
    block_size: int = 128
    out_dir: str = "out"

    def __post_init__(self):
        if (self.input_csv is None) == (self.sim is None):
            raise ValueError("exactly one input source required: input_csv or sim")
        if self.eve_csv is not None and self.input_csv is None:
            raise ValueError("eve_csv requires input_csv")
        for c in (self.cutoff, *self.cutoffs):
            if not 0.0 < c <= 0.25:
                raise ValueError(f"cutoff {c} outside (0, 0.25]")
        for q in self.quantizers:
            if q not in pipeline.QUANTIZERS:
                raise ValueError(f"unknown quantizer {q!r}")
        if not self.quantizers:
            raise ValueError("at least one quantizer required")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")


@dataclass
class BlockOutcome:
    """Everything the report needs about one block under one quantizer."""

    block_index: int
    bdr_ab: float
    bdr_ea: float | None
    accepted: bool
    reconciled: bool | None = None
    corrected_errors: int | None = None
    randomness: RandomnessReport | None = None

    def to_dict(self) -> dict:
        r = self.randomness
        return {
            "block_index": self.block_index,
            "bdr_ab": self.bdr_ab,
            "bdr_ea": self.bdr_ea,
            "accepted": self.accepted,
            "reconciled": self.reconciled,
            "corrected_errors": self.corrected_errors,
            "randomness": None
            if r is None
            else {
                "monobit_p": r.monobit_p,
                "runs_p": r.runs_p,
                "passed": r.passed,
            },
        }


@dataclass
class QuantizerOutcome:
    report: metrics.EvalReport
    outcomes: list[BlockOutcome]
    eve: metrics.EveSummary | None
    code: BchCode
    transcript: list[TranscriptRecord]
    keys: list[tuple[str, FinalKey]]  # (label, key)
    pending_blocks: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d["per_block"] = [o.to_dict() for o in self.outcomes]
        syndrome_bits = self.code.n - self.code.k
        digest_bits = 8 * VERIFY_DIGEST_BYTES
        reconciled = sum(1 for o in self.outcomes if o.reconciled)
        d["reconciliation"] = {
            "code_id": self.code.code_id,
            "syndrome_bits_per_block": syndrome_bits,
            "digest_bits_per_block": digest_bits,
            "blocks_attempted": sum(1 for o in self.outcomes if o.reconciled is not None),
            "blocks_reconciled": reconciled,
            "blocks_passing_randomness": sum(
                1 for o in self.outcomes if o.randomness is not None and o.randomness.passed
            ),
            "transcript_overhead_bits": reconciled * (syndrome_bits + digest_bits),
        }
        d["eve"] = (
            None
            if self.eve is None
            else {
                "mean_bdr": self.eve.mean_bdr,
                "fraction_below_quarter": self.eve.fraction_below_quarter,
                "alarm": self.eve.alarm,
            }
        )
        d["keys"] = [
            {
                "label": label,
                "hex": key.hex,
                "source_blocks": key.source_blocks,
                "leakage_bits": key.leakage_total,
            }
            for label, key in self.keys
        ]
        d["pending_blocks"] = self.pending_blocks
        return d


def _config_dict(config: RunConfig) -> dict:
    d = dataclasses.asdict(config)
    d["quantizers"] = list(config.quantizers)
    d["cutoffs"] = list(config.cutoffs)
    return d


def load_input(config: RunConfig) -> tuple[trace_mod.ProbeTrace, np.ndarray | None]:
    """Produce the aligned trace and per-sample Eve values (if any)."""
    if config.sim is not None:
        realization = chansim.simulate(config.sim)
        aligned = trace_mod.align(realization.trace)
        return aligned, realization.eve
    with open(config.input_csv, encoding="utf-8") as f:
        parsed = trace_mod.parse_trace_csv(f)
    aligned = trace_mod.align(parsed)
    if config.eve_csv is None:
        return aligned, None
    with open(config.eve_csv, encoding="utf-8") as f:
        eve_map = chansim.parse_eve_csv(f)
    try:
        eve = np.array([eve_map[s.uplink_counter] for s in aligned.samples])
    except KeyError as e:
        raise ValueError(f"eve trace missing uplink_counter {e.args[0]}") from None
    return aligned, eve


def _quantize_blocks(
    pairs: list[tuple[trace_mod.ChannelProfile, trace_mod.ChannelProfile]],
    eve_values: np.ndarray | None,
    method: str,
    enhance_degree: int | None,
    block_size: int,
) -> list[tuple[pipeline.PreliminaryKey, ...]]:
    def prep(profile: trace_mod.ChannelProfile) -> pipeline.PreliminaryKey:
        p = pipeline.normalize(profile)
        if enhance_degree is not None:
            p = pipeline.enhance(p, enhance_degree)
        return pipeline.quantize(p, method)

    tuples = []
    for alice_prof, bob_prof in pairs:
        keys = [prep(alice_prof), prep(bob_prof)]
        if eve_values is not None:
            b = alice_prof.block_index
            eve_prof = trace_mod.ChannelProfile(
                values=eve_values[b * block_size : (b + 1) * block_size],
                party="eve",
                block_index=b,
            )
            keys.append(prep(eve_prof))
        tuples.append(tuple(keys))
    return tuples


def _amplify_keys(
    passing: list[tuple[int, np.ndarray]],
    code: BchCode,
    paper_mode: bool,
) -> tuple[list[tuple[str, FinalKey]], list[int]]:
    """Group randomness-passing blocks into final keys.

    Each reconciled block contributes k bits of residual entropy (its
    n bits minus the n-k syndrome bits leaked); blocks accumulate
    until such contributions reach 128.  In paper mode every block
    yields one key and the gate is off.
    """
    group_size = 1 if paper_mode else math.ceil(KEY_BITS / code.k)
    syndrome_bits = code.n - code.k
    keys: list[tuple[str, FinalKey]] = []
    for i in range(0, len(passing) - len(passing) % group_size, group_size):
        group = passing[i : i + group_size]
        indices = [b for b, _ in group]
        final = amplify(
            [bits for _, bits in group],
            transcript_leakage=len(group) * syndrome_bits,
            context=key_context(indices),
            source_blocks=indices,
            check_entropy=not paper_mode,
        )
        keys.append((KEY_LABELS[len(keys) % 2], final))
    pending = [b for b, _ in passing[len(passing) - len(passing) % group_size :]]
    return keys, pending


def run_quantizer(
    pairs: list[tuple[trace_mod.ChannelProfile, trace_mod.ChannelProfile]],
    eve_values: np.ndarray | None,
    method: str,
    config: RunConfig,
    probe_period: float,
) -> QuantizerOutcome:
    """Full pipeline for one quantizer choice."""
    try:
        tuples = _quantize_blocks(
            pairs, eve_values, method, config.enhance_degree, config.block_size
        )
    except ValueError as e:
        raise StageError("quantize", e) from e

    try:
        report = metrics.evaluate(
            tuples, config.cutoff, probe_period, config.block_size, method
        )
        eve_summary = metrics.eve_advantage(tuples) if eve_values is not None else None
    except ValueError as e:
        raise StageError("evaluate", e) from e

    # Cutoffs beyond the strongest code's t/n (about 0.2126) still run:
    # blocks accepted above that rate go to the strongest code and fail
    # reconciliation individually instead of aborting the whole run.
    try:
        code = pick_code(config.cutoff, config.block_size)
    except ValueError as e:
        usable = [c for c in default_codes() if c.n <= config.block_size]
        if not usable:
            raise StageError("reconcile", e) from e
        code = max(usable, key=lambda c: c.t)

    outcomes = []
    transcript = []
    passing: list[tuple[int, np.ndarray]] = []
    for keys, block in zip(tuples, report.per_block):
        outcome = BlockOutcome(
            block_index=block.block_index,
            bdr_ab=block.bdr_ab,
            bdr_ea=block.bdr_ea,
            accepted=block.accepted,
        )
        outcomes.append(outcome)
        if not block.accepted:
            continue
        alice_bits = keys[0].bits
        rec, syn, digest = transcript_record(block.block_index, alice_bits, code)
        transcript.append(rec)
        result = reconcile_block(keys[1], syn, code, digest)
        outcome.reconciled = result.success
        outcome.corrected_errors = result.corrected_errors
        if not result.success:
            continue
        outcome.randomness = test_randomness(result.key, config.alpha)
        if outcome.randomness.passed:
            passing.append((block.block_index, result.key))

    try:
        keys_out, pending = _amplify_keys(passing, code, config.paper_mode)
    except ValueError as e:
        raise StageError("amplify", e) from e
    return QuantizerOutcome(
        report=report,
        outcomes=outcomes,
        eve=eve_summary,
        code=code,
        transcript=transcript,
        keys=keys_out,
        pending_blocks=pending,
    )


def run_pipeline(config: RunConfig) -> dict[str, QuantizerOutcome]:
    """Execute the pipeline for every configured quantizer."""
    try:
        aligned, eve_values = load_input(config)
    except (OSError, ValueError) as e:
        raise StageError("input", e) from e
    try:
        pairs = trace_mod.segment(aligned, config.block_size)
    except ValueError as e:
        raise StageError("segment", e) from e
    period = aligned.probe_period
    if period is None or period <= 0:
        raise StageError("input", ValueError("trace has no usable probe period"))
    return {
        q: run_quantizer(pairs, eve_values, q, config, period)
        for q in config.quantizers
    }


def run_sweep(config: RunConfig) -> list[tuple[float, dict[str, float]]]:
    """KGR vs cutoff rows for every configured quantizer."""
    try:
        aligned, eve_values = load_input(config)
    except (OSError, ValueError) as e:
        raise StageError("input", e) from e
    try:
        pairs = trace_mod.segment(aligned, config.block_size)
    except ValueError as e:
        raise StageError("segment", e) from e
    period = aligned.probe_period
    if period is None or period <= 0:
        raise StageError("input", ValueError("trace has no usable probe period"))
    try:
        blocks_by_q = {
            q: _quantize_blocks(
                pairs, eve_values, q, config.enhance_degree, config.block_size
            )
            for q in config.quantizers
        }
        return metrics.kgr_curve(blocks_by_q, config.cutoffs, period, config.block_size)
    except ValueError as e:
        raise StageError("sweep", e) from e


def build_report(config: RunConfig, outcomes: dict[str, QuantizerOutcome]) -> dict:
    return {
        "kgr_accounting": KGR_ACCOUNTING,
        "config": _config_dict(config),
        "quantizers": {q: oc.to_dict() for q, oc in outcomes.items()},
    }


def atomic_write(path: str, content: str) -> None:
    """Write via temp file + rename so readers never see partial output."""
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(config: RunConfig, outcomes: dict[str, QuantizerOutcome]) -> list[str]:
    """Write report JSON, per-quantizer transcript CSV and key files."""
    os.makedirs(config.out_dir, exist_ok=True)
    written = []

    report_path = os.path.join(config.out_dir, "report.json")
    report = build_report(config, outcomes)
    atomic_write(report_path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    written.append(report_path)

    for q, oc in outcomes.items():
        tpath = os.path.join(config.out_dir, f"transcript_{q}.csv")
        buf = io.StringIO()
        write_transcript_csv(oc.transcript, buf)
        atomic_write(tpath, buf.getvalue())
        written.append(tpath)

        kpath = os.path.join(config.out_dir, f"keys_{q}.txt")
        lines = [
            f"{key.hex} {label} blocks={','.join(map(str, key.source_blocks))} "
            f"leakage_bits={key.leakage_total}"
            for label, key in oc.keys
        ]
        atomic_write(kpath, "".join(line + "\n" for line in lines))
        written.append(kpath)
    return written
