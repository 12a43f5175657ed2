"""Synthetic reciprocal-channel link simulator.

Generates correlated RSSI observations for Alice (gateway), Bob
(device) and a passive eavesdropper under a class A probing schedule:
the device uplinks every probe_period seconds and receives the ack in
a receive window rx_delay seconds later.  The shared fading process is
a scalar Gauss-Markov (AR(1)) sequence in the dB domain; the half
duplex delay enters as correlation decay rather than as a continuous
time model.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import IO

import numpy as np

from .trace import ProbeSample, ProbeTrace


@dataclass(frozen=True)
class SimConfig:
    """Link simulation parameters.

    Parameters
    ----------
    n_samples : int
        Number of probing rounds.
    probe_period : float
        Seconds between uplinks.
    rx_delay : float
        Class A receive window delay in seconds (RX1 default 1 s).
    ar_coeff : float
        AR(1) coefficient of the fading process across one probe
        period, in [0, 1).
    noise_std_alice, noise_std_bob, noise_std_eve : float
        Std-dev of per-party measurement noise, relative to the unit
        innovation scale of the fading process.
    gain_alice, gain_bob : float
        Constant dB offsets (receiver chain gains).
    eve_corr : float
        Correlation of Eve's channel with the legitimate one, |c| <= 1.
    eve_distance : float
        Eve's distance from the legitimate parties in meters (only
        checked for consistency against wavelength/2).
    wavelength : float
        Carrier wavelength in meters.
    seed : int
        PRNG seed; identical configs produce bit-identical output.
    """

    n_samples: int
    probe_period: float = 10.0
    rx_delay: float = 1.0
    ar_coeff: float = 0.95
    noise_std_alice: float = 0.105
    noise_std_bob: float = 0.105
    noise_std_eve: float = 0.0
    gain_alice: float = 0.0
    gain_bob: float = 0.0
    eve_corr: float = 0.0
    eve_distance: float = 10.0
    wavelength: float = 0.3456
    seed: int = 0

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ValueError("n_samples must be positive")
        if not 0.0 <= self.ar_coeff < 1.0:
            raise ValueError("ar_coeff must be in [0, 1)")
        if abs(self.eve_corr) > 1.0:
            raise ValueError("eve_corr must be in [-1, 1]")
        for name in ("noise_std_alice", "noise_std_bob", "noise_std_eve"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.probe_period <= 0.0:
            raise ValueError("probe_period must be positive")
        if self.rx_delay < 0.0:
            raise ValueError("rx_delay must be >= 0")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be positive")
        if self.eve_distance <= self.wavelength / 2 and self.eve_corr < 1.0:
            warnings.warn(
                "eve_distance within half a wavelength but eve_corr < 1: "
                "inconsistent with the channel decorrelation assumption"
            )


@dataclass(eq=False)
class LinkRealization:
    """One simulated link: a paired probe trace plus Eve's observations.

    `trace` carries both parties' measurements per probing round
    (rssi_gw = Alice's uplink measurement, rssi_dev = Bob's downlink
    measurement); `eve` holds the eavesdropper's RSSI at the same
    uplink instants, so all sequences share length and timestamps.
    """

    trace: ProbeTrace
    eve: np.ndarray

    def _view(self, party: str) -> ProbeTrace:
        keep_gw = party == "alice"
        samples = [
            ProbeSample(
                uplink_counter=s.uplink_counter,
                t=s.t,
                rssi_dev=None if keep_gw else s.rssi_dev,
                rssi_gw=s.rssi_gw if keep_gw else None,
            )
            for s in self.trace.samples
        ]
        return ProbeTrace(samples, self.trace.probe_period, dict(self.trace.meta))

    @property
    def alice(self) -> ProbeTrace:
        """Gateway-side view: only the rssi_gw column filled."""
        return self._view("alice")

    @property
    def bob(self) -> ProbeTrace:
        """Device-side view: only the rssi_dev column filled."""
        return self._view("bob")


def calibrated_config(n_samples: int = 22912, seed: int = 0, **overrides) -> SimConfig:
    """Scenario tuned so the difference quantizer lands near its field
    measured operating point: mean BDR about 0.1165 and a KGR at cutoff
    0.2 close to 0.1 bit/s at the 10 s probing period.

    Under this AR(1) model the delay refresh term alone puts a floor of
    about 0.134 on the difference BDR at rx_delay 1 s, so the scenario
    shortens the receive delay to 0.5 s; measurement noise then sets
    the operating point.
    """
    base = dict(
        n_samples=n_samples,
        probe_period=10.0,
        rx_delay=0.5,
        ar_coeff=0.95,
        noise_std_alice=0.105,
        noise_std_bob=0.105,
        seed=seed,
    )
    base.update(overrides)
    return SimConfig(**base)


def schedule(config: SimConfig) -> list[tuple[float, float]]:
    """Class A probing instants: (uplink_t, downlink_t) per round.

    uplink_t_k = k * probe_period, downlink_t_k = uplink_t_k + rx_delay.

    Raises
    ------
    ValueError
        If probe_period <= rx_delay (next uplink would precede the
        downlink window).
    """
    if config.probe_period <= config.rx_delay:
        raise ValueError(
            f"probe_period {config.probe_period} must exceed rx_delay {config.rx_delay}"
        )
    return [
        (k * config.probe_period, k * config.probe_period + config.rx_delay)
        for k in range(config.n_samples)
    ]


def simulate(config: SimConfig) -> LinkRealization:
    """Draw one link realization.

    The shared process is g_k = ar_coeff * g_{k-1} + w_k with unit
    variance innovations and a stationary start, so Var(g) =
    1/(1-ar_coeff^2).  Alice observes g at the uplink instant; Bob
    observes it rx_delay later, modeled by correlation decay rho =
    ar_coeff^(rx_delay/probe_period) against an independent refresh
    term.  Eve's channel mixes g with an independent process of the
    same statistics at weight eve_corr.  All draws come from one
    seeded generator in a fixed order, so output is deterministic in
    the config.
    """
    n = config.n_samples
    a = config.ar_coeff
    rng = np.random.default_rng(config.seed)
    w = rng.standard_normal(n)
    v = rng.standard_normal(n)
    hw = rng.standard_normal(n)
    eps_a = rng.standard_normal(n)
    eps_b = rng.standard_normal(n)
    eps_e = rng.standard_normal(n)

    sigma_g = 1.0 / math.sqrt(1.0 - a * a)

    def ar1(innov: np.ndarray) -> np.ndarray:
        out = np.empty(n)
        out[0] = sigma_g * innov[0]
        for k in range(1, n):
            out[k] = a * out[k - 1] + innov[k]
        return out

    g = ar1(w)
    rho = a ** (config.rx_delay / config.probe_period)
    g_delayed = rho * g + math.sqrt(1.0 - rho * rho) * sigma_g * v
    h = ar1(hw)

    alice = g + config.gain_alice + config.noise_std_alice * eps_a
    bob = g_delayed + config.gain_bob + config.noise_std_bob * eps_b
    c = config.eve_corr
    eve = c * g + math.sqrt(1.0 - c * c) * h + config.noise_std_eve * eps_e

    samples = [
        ProbeSample(
            uplink_counter=k,
            t=k * config.probe_period,
            rssi_dev=float(bob[k]),
            rssi_gw=float(alice[k]),
        )
        for k in range(n)
    ]
    trace = ProbeTrace(
        samples=samples,
        probe_period=config.probe_period,
        meta={"source": "sim", "seed": config.seed},
    )
    return LinkRealization(trace=trace, eve=eve)


def serialize_eve_csv(realization: LinkRealization, sink: IO[str]) -> None:
    """Write Eve's observations as a sibling CSV to the paired trace."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("uplink_counter", "t", "rssi_eve"))
    for s, value in zip(realization.trace.samples, realization.eve):
        writer.writerow((str(s.uplink_counter), repr(s.t), repr(float(value))))


def parse_eve_csv(source: str | IO[str]) -> dict[int, float]:
    """Read an Eve sibling CSV; returns {uplink_counter: rssi_eve}."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["uplink_counter", "t", "rssi_eve"]:
        raise ValueError("expected header uplink_counter,t,rssi_eve")
    out: dict[int, float] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"line {line_no}: expected 3 fields, got {len(row)}")
        counter = int(row[0])
        if counter in out:
            raise ValueError(f"duplicate uplink_counter {counter}")
        out[counter] = float(row[2])
    return out
