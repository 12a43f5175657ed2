"""Probe trace data model: ingestion, alignment, block segmentation.

A probe trace pairs the gateway's RSSI measurement of each uplink with
the device's report of the preceding downlink ack.  Traces come from
real logs (CSV) or from the link simulator, and are cut into fixed-size
blocks that feed the key generation pipeline.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import warnings
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

_COLUMNS = ("uplink_counter", "t", "rssi_dev", "rssi_gw")
_SNR_COLUMNS = ("snr_dev", "snr_gw")


class TraceFormatError(ValueError):
    """A trace file is syntactically malformed."""


@dataclass(frozen=True)
class ProbeSample:
    """One probing round: uplink measurement plus reported downlink RSSI.

    Either RSSI may be None when the corresponding measurement is
    missing from the log; such samples are removed by `align`.
    """

    uplink_counter: int
    t: float
    rssi_dev: float | None
    rssi_gw: float | None
    snr_dev: float | None = None
    snr_gw: float | None = None


@dataclass
class ProbeTrace:
    """Ordered probe samples with a nominal probing period.

    Samples are ordered by uplink_counter with no duplicates; `meta`
    carries free-form labels and bookkeeping counters from ingestion
    and alignment.
    """

    samples: list[ProbeSample]
    probe_period: float | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(eq=False)
class ChannelProfile:
    """One party's view of one block of channel measurements."""

    values: np.ndarray
    party: str
    block_index: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("profile values must be one-dimensional")
        if self.party not in ("alice", "bob", "eve"):
            raise ValueError(f"unknown party {self.party!r}")


def _parse_float(text: str, column: str, line_no: int) -> float | None:
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise TraceFormatError(
            f"line {line_no}: {column} is not a number: {text!r}"
        ) from None
    if column.startswith("rssi") and not math.isfinite(value):
        raise ValueError(f"line {line_no}: non-finite {column}: {text!r}")
    return value


def _count_inversions(seq: list[int]) -> int:
    """Number of out-of-order pairs, by merge sort."""

    def rec(a: list[int]) -> tuple[list[int], int]:
        if len(a) <= 1:
            return a, 0
        mid = len(a) // 2
        left, nl = rec(a[:mid])
        right, nr = rec(a[mid:])
        merged, inv, i, j = [], nl + nr, 0, 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                merged.append(right[j])
                j += 1
                inv += len(left) - i
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged, inv

    return rec(seq)[1]


def _infer_period(samples: list[ProbeSample]) -> float | None:
    if len(samples) < 2:
        return None
    diffs = [b.t - a.t for a, b in zip(samples, samples[1:])]
    return float(statistics.median(diffs))


def parse_trace_csv(source: str | IO[str] | Iterable[str]) -> ProbeTrace:
    """Parse the probe trace CSV format.

    Parameters
    ----------
    source : str or text stream
        CSV content with header ``uplink_counter,t,rssi_dev,rssi_gw``
        and optional trailing ``snr_dev,snr_gw`` columns.  Empty RSSI
        cells mark missing measurements.

    Returns
    -------
    ProbeTrace
        Samples sorted by uplink counter.  Out-of-order input rows are
        re-sorted; the number of inverted pairs is warned about and
        recorded in ``meta["inversions"]``.

    Raises
    ------
    TraceFormatError
        Missing or unknown header, wrong field count, unparseable
        number (all with the offending line number).
    ValueError
        Non-finite RSSI, negative counter, or duplicate counter.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError("empty input: missing header row") from None
    header = [h.strip() for h in header]
    if tuple(header[:4]) != _COLUMNS or tuple(header[4:]) not in ((), _SNR_COLUMNS):
        raise TraceFormatError(
            f"line 1: expected header {','.join(_COLUMNS)}"
            f"[,{','.join(_SNR_COLUMNS)}], got {','.join(header)!r}"
        )
    has_snr = len(header) == 6

    samples = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise TraceFormatError(
                f"line {line_no}: expected {len(header)} fields, got {len(row)}"
            )
        try:
            counter = int(row[0])
        except ValueError:
            raise TraceFormatError(
                f"line {line_no}: uplink_counter is not an integer: {row[0]!r}"
            ) from None
        if counter < 0:
            raise ValueError(f"line {line_no}: negative uplink_counter {counter}")
        t = _parse_float(row[1], "t", line_no)
        if t is None:
            raise TraceFormatError(f"line {line_no}: t must not be empty")
        samples.append(
            ProbeSample(
                uplink_counter=counter,
                t=t,
                rssi_dev=_parse_float(row[2], "rssi_dev", line_no),
                rssi_gw=_parse_float(row[3], "rssi_gw", line_no),
                snr_dev=_parse_float(row[4], "snr_dev", line_no) if has_snr else None,
                snr_gw=_parse_float(row[5], "snr_gw", line_no) if has_snr else None,
            )
        )

    counters = [s.uplink_counter for s in samples]
    seen: set[int] = set()
    for c in counters:
        if c in seen:
            raise ValueError(f"duplicate uplink_counter {c}")
        seen.add(c)
    inversions = _count_inversions(counters)
    if inversions:
        warnings.warn(f"{inversions} out-of-order sample pair(s) re-sorted")
        samples.sort(key=lambda s: s.uplink_counter)
    return ProbeTrace(
        samples=samples,
        probe_period=_infer_period(samples),
        meta={"inversions": inversions},
    )


def serialize_trace_csv(trace: ProbeTrace, sink: IO[str]) -> None:
    """Write a trace in the CSV format understood by parse_trace_csv.

    SNR columns are emitted only when some sample carries SNR values.
    Floats use repr, so parse(serialize(t)) reproduces the samples
    exactly.
    """
    has_snr = any(s.snr_dev is not None or s.snr_gw is not None for s in trace.samples)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(_COLUMNS + _SNR_COLUMNS if has_snr else _COLUMNS)

    def cell(v: float | None) -> str:
        return "" if v is None else repr(v)

    for s in trace.samples:
        row = [str(s.uplink_counter), repr(s.t), cell(s.rssi_dev), cell(s.rssi_gw)]
        if has_snr:
            row += [cell(s.snr_dev), cell(s.snr_gw)]
        writer.writerow(row)


def align(trace: ProbeTrace) -> ProbeTrace:
    """Keep only fully paired samples; record gaps and drops in meta.

    A sample survives when both rssi_dev and rssi_gw are present.
    Counter gaps are tolerated (they only shorten the trace) and their
    count is stored in ``meta["gap_count"]``; the number of unpaired
    samples removed accumulates in ``meta["dropped_unpaired"]`` so the
    operation is idempotent.

    Raises
    ------
    ValueError
        If no sample survives ("no aligned samples").
    """
    kept = [s for s in trace.samples if s.rssi_dev is not None and s.rssi_gw is not None]
    if not kept:
        raise ValueError("no aligned samples")
    gaps = sum(b.uplink_counter - a.uplink_counter - 1 for a, b in zip(kept, kept[1:]))
    meta = dict(trace.meta)
    meta["gap_count"] = gaps
    meta["dropped_unpaired"] = meta.get("dropped_unpaired", 0) + len(trace.samples) - len(kept)
    return ProbeTrace(samples=kept, probe_period=trace.probe_period, meta=meta)


def segment(
    trace: ProbeTrace, block_size: int = 128
) -> list[tuple[ChannelProfile, ChannelProfile]]:
    """Cut an aligned trace into (alice, bob) profile pairs.

    Alice's profile carries the gateway-side values (rssi_gw), Bob's
    the device-side values (rssi_dev).  Produces floor(len/block_size)
    pairs; the trailing remainder is discarded.

    Raises
    ------
    ValueError
        Fewer samples than one block ("insufficient samples").
    """
    if block_size <= 0:
        raise ValueError("block_size must be positive")
    n_blocks = len(trace.samples) // block_size
    if n_blocks == 0:
        raise ValueError(
            f"insufficient samples: {len(trace.samples)} < block size {block_size}"
        )
    gw = np.array([s.rssi_gw for s in trace.samples], dtype=np.float64)
    dev = np.array([s.rssi_dev for s in trace.samples], dtype=np.float64)
    pairs = []
    for b in range(n_blocks):
        sl = slice(b * block_size, (b + 1) * block_size)
        pairs.append(
            (
                ChannelProfile(values=gw[sl], party="alice", block_index=b),
                ChannelProfile(values=dev[sl], party="bob", block_index=b),
            )
        )
    return pairs
