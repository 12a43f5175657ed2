"""BDR/KGR statistics, acceptance filtering and Eve advantage.

The key generation rate counts all probed time: rejected blocks still
consumed airtime, so kgr = accepted_blocks * L / (total_blocks * L *
probe_period).  Under this rule kgr * mean_key_time = L identically.
Reconciliation/verification airtime is not part of the KGR clock and
is reported separately as transcript overhead.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Sequence

from .pipeline import PreliminaryKey, bdr

KeyTuple = Sequence[PreliminaryKey]  # (alice, bob) or (alice, bob, eve)


@dataclass(frozen=True)
class BlockResult:
    block_index: int
    bdr_ab: float
    bdr_ea: float | None
    accepted: bool


@dataclass
class EvalReport:
    """Per-block disagreement results plus rate summary for one quantizer."""

    per_block: list[BlockResult]
    mean_bdr: float
    kgr: float
    mean_key_time: float
    quantizer: str
    max_bdr_cutoff: float
    probe_period: float
    key_len: int

    @property
    def accepted_count(self) -> int:
        return sum(r.accepted for r in self.per_block)

    def to_dict(self) -> dict:
        return {
            "per_block": [
                {
                    "block_index": r.block_index,
                    "bdr_ab": r.bdr_ab,
                    "bdr_ea": r.bdr_ea,
                    "accepted": r.accepted,
                }
                for r in self.per_block
            ],
            "summary": {
                "quantizer": self.quantizer,
                "max_bdr_cutoff": self.max_bdr_cutoff,
                "total_blocks": len(self.per_block),
                "accepted_blocks": self.accepted_count,
                "mean_bdr": self.mean_bdr,
                "kgr_bits_per_s": self.kgr,
                "mean_key_time_s": self.mean_key_time if math.isfinite(self.mean_key_time) else None,
                "probe_period_s": self.probe_period,
                "key_len": self.key_len,
            },
        }


@dataclass(frozen=True)
class EveSummary:
    """Eavesdropper disagreement statistics against the reference party."""

    mean_bdr: float
    fraction_below_quarter: float
    alarm: bool


def evaluate(
    blocks: list[KeyTuple],
    cutoff: float,
    probe_period: float,
    key_len: int = 128,
    quantizer: str = "",
) -> EvalReport:
    """Score key pairs against an acceptance cutoff and compute KGR.

    A block is accepted when bdr(alice, bob) <= cutoff.  KGR counts all
    probed time: accepted_count * L / (total_count * L * probe_period).
    mean_key_time is L / kgr, infinite when nothing is accepted.
    """
    if not blocks:
        raise ValueError("no blocks to evaluate")
    if probe_period <= 0:
        raise ValueError("probe_period must be positive")
    per_block = []
    for keys in blocks:
        alice, bob = keys[0], keys[1]
        eve = keys[2] if len(keys) > 2 else None
        d = bdr(alice, bob)
        per_block.append(
            BlockResult(
                block_index=alice.block_index,
                bdr_ab=d,
                bdr_ea=bdr(eve, alice) if eve is not None else None,
                accepted=d <= cutoff,
            )
        )
    accepted = sum(r.accepted for r in per_block)
    total = len(per_block)
    kgr = (accepted * key_len) / (total * key_len * probe_period)
    return EvalReport(
        per_block=per_block,
        mean_bdr=sum(r.bdr_ab for r in per_block) / total,
        kgr=kgr,
        mean_key_time=key_len / kgr if kgr > 0 else math.inf,
        quantizer=quantizer,
        max_bdr_cutoff=cutoff,
        probe_period=probe_period,
        key_len=key_len,
    )


def kgr_curve(
    blocks_by_quantizer: dict[str, list[KeyTuple]],
    cutoffs: Sequence[float],
    probe_period: float,
    key_len: int = 128,
) -> list[tuple[float, dict[str, float]]]:
    """KGR as a function of the acceptance cutoff, per quantizer.

    Cutoffs must be sorted ascending; each (cutoff, quantizer) cell is
    one evaluate() run.
    """
    if list(cutoffs) != sorted(cutoffs):
        raise ValueError("cutoffs must be sorted ascending")
    rows = []
    for cutoff in cutoffs:
        cell = {
            name: evaluate(blocks, cutoff, probe_period, key_len, name).kgr
            for name, blocks in blocks_by_quantizer.items()
        }
        rows.append((float(cutoff), cell))
    return rows


def write_kgr_csv(rows: list[tuple[float, dict[str, float]]], sink: IO[str]) -> None:
    """Emit the cutoff sweep as plot data: cutoff,kgr_threshold,kgr_difference."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("cutoff", "kgr_threshold", "kgr_difference"))
    for cutoff, cell in rows:
        writer.writerow(
            (
                repr(cutoff),
                "" if "threshold" not in cell else repr(cell["threshold"]),
                "" if "difference" not in cell else repr(cell["difference"]),
            )
        )


def eve_advantage(blocks: list[KeyTuple], target: str = "alice") -> EveSummary:
    """Eve's disagreement statistics against Alice's (or Bob's) keys.

    The alarm flag is raised when Eve's mean BDR drops well below the
    random-guessing level, i.e. her observations track the legitimate
    channel.
    """
    if target not in ("alice", "bob"):
        raise ValueError(f"target must be alice or bob, got {target!r}")
    triples = [keys for keys in blocks if len(keys) > 2]
    if not triples:
        raise ValueError("no Eve data")
    ref = 0 if target == "alice" else 1
    rates = [bdr(keys[2], keys[ref]) for keys in triples]
    mean = sum(rates) / len(rates)
    below = sum(r < 0.25 for r in rates) / len(rates)
    return EveSummary(mean_bdr=mean, fraction_below_quarter=below, alarm=mean < 0.1)
