"""Command-line interface.

Subcommands: simulate (emit synthetic trace CSVs), run (full pipeline
to report/transcript/keys), sweep (KGR vs cutoff plot data), report
(summarize an existing report JSON).  Options may come from a JSON
config file (--config); explicit flags override file values.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import sys

from . import chansim, metrics, runner
from .runner import RunConfig, StageError
from .trace import serialize_trace_csv

DEFAULT_SIM_SAMPLES = 22912


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return data


def _sim_config(args: argparse.Namespace, file_cfg: dict) -> chansim.SimConfig | None:
    """Assemble the simulator config from file and flags, if requested."""
    sim_fields = dict(file_cfg.get("sim") or {})
    if getattr(args, "sim", None) is not None and args.sim != "":
        sim_fields.update(_load_json(args.sim))
    elif getattr(args, "sim", None) is None and not sim_fields:
        return None
    sim_fields.setdefault("n_samples", DEFAULT_SIM_SAMPLES)
    if getattr(args, "seed", None) is not None:
        sim_fields["seed"] = args.seed
    return chansim.SimConfig(**sim_fields)


def _quantizers(value: str) -> tuple[str, ...]:
    return ("threshold", "difference") if value == "both" else (value,)


def _run_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = _load_json(args.config) if args.config else {}
    sim = _sim_config(args, file_cfg)

    fields = {
        f.name: file_cfg[f.name]
        for f in dataclasses.fields(RunConfig)
        if f.name in file_cfg and f.name != "sim"
    }
    if "quantizers" in fields:
        fields["quantizers"] = tuple(fields["quantizers"])
    if "cutoffs" in fields:
        fields["cutoffs"] = tuple(fields["cutoffs"])
    if sim is not None:
        fields["sim"] = sim
        fields.pop("input_csv", None)
    if args.input is not None:
        fields["input_csv"] = args.input
        fields.pop("sim", None)
    if getattr(args, "eve", None) is not None:
        fields["eve_csv"] = args.eve
    if args.quantizer is not None:
        fields["quantizers"] = _quantizers(args.quantizer)
    if getattr(args, "cutoff", None) is not None:
        fields["cutoff"] = args.cutoff
    if getattr(args, "cutoffs", None) is not None:
        fields["cutoffs"] = tuple(float(c) for c in args.cutoffs.split(","))
    if args.enhance_degree is not None:
        fields["enhance_degree"] = args.enhance_degree
    if args.alpha is not None:
        fields["alpha"] = args.alpha
    if args.paper_mode is not None:
        fields["paper_mode"] = args.paper_mode
    if args.out is not None:
        fields["out_dir"] = args.out
    return RunConfig(**fields)


def cmd_simulate(args: argparse.Namespace) -> int:
    file_cfg = _load_json(args.config) if args.config else {}
    sim = _sim_config(args, file_cfg)
    if sim is None:
        sim = chansim.SimConfig(
            n_samples=DEFAULT_SIM_SAMPLES,
            seed=args.seed if args.seed is not None else 0,
        )
    out_dir = args.out if args.out is not None else file_cfg.get("out_dir", "out")
    realization = chansim.simulate(sim)
    os.makedirs(out_dir, exist_ok=True)

    trace_path = os.path.join(out_dir, "trace.csv")
    buf = io.StringIO()
    serialize_trace_csv(realization.trace, buf)
    runner.atomic_write(trace_path, buf.getvalue())

    eve_path = os.path.join(out_dir, "eve.csv")
    buf = io.StringIO()
    chansim.serialize_eve_csv(realization, buf)
    runner.atomic_write(eve_path, buf.getvalue())

    print(
        f"simulated {sim.n_samples} samples "
        f"(period {sim.probe_period} s, seed {sim.seed}) -> {trace_path}, {eve_path}"
    )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _run_config(args)
    outcomes = runner.run_pipeline(config)
    written = runner.write_outputs(config, outcomes)
    for q, oc in outcomes.items():
        s = oc.report
        print(
            f"{q}: {len(s.per_block)} blocks, {s.accepted_count} accepted "
            f"(cutoff {s.max_bdr_cutoff}), mean BDR {s.mean_bdr:.4f}, "
            f"KGR {s.kgr:.4f} bit/s, {len(oc.keys)} key(s)"
        )
    print("wrote " + ", ".join(written))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _run_config(args)
    rows = runner.run_sweep(config)
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "sweep.csv")
    buf = io.StringIO()
    metrics.write_kgr_csv(rows, buf)
    runner.atomic_write(path, buf.getvalue())
    print(f"swept {len(rows)} cutoffs x {len(config.quantizers)} quantizer(s) -> {path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = _load_json(args.report)
    print(report.get("kgr_accounting", ""))
    for q, data in sorted(report.get("quantizers", {}).items()):
        s = data["summary"]
        mkt = s["mean_key_time_s"]
        mkt_text = "inf" if mkt is None else f"{mkt:.1f} s ({mkt / 60:.2f} min)"
        print(
            f"{q}: {s['total_blocks']} blocks, {s['accepted_blocks']} accepted "
            f"(cutoff {s['max_bdr_cutoff']}), mean BDR {s['mean_bdr']:.4f}, "
            f"KGR {s['kgr_bits_per_s']:.4f} bit/s, mean key time {mkt_text}, "
            f"{len(data['keys'])} key(s)"
        )
        if data.get("eve") is not None:
            eve = data["eve"]
            alarm = " ALARM" if eve["alarm"] else ""
            print(
                f"  eve: mean BDR {eve['mean_bdr']:.4f}, "
                f"{eve['fraction_below_quarter']:.1%} of blocks below 0.25{alarm}"
            )
    return 0


def _add_common(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--input", help="paired probe trace CSV")
    p.add_argument("--eve", help="eavesdropper sibling CSV (with --input)")
    p.add_argument(
        "--sim",
        nargs="?",
        const="",
        help="simulate the input; optional value is a simulator JSON config",
    )
    p.add_argument("--seed", type=int, help="simulator seed override")
    p.add_argument(
        "--quantizer",
        choices=("threshold", "difference", "both"),
        help="quantization method(s) to run",
    )
    if sweep:
        p.add_argument("--cutoffs", help="comma-separated BDR cutoffs, ascending")
    else:
        p.add_argument("--cutoff", type=float, help="max preliminary-key BDR accepted")
    p.add_argument("--enhance-degree", type=int, help="polynomial smoothing degree")
    p.add_argument("--alpha", type=float, help="randomness test significance level")
    p.add_argument(
        "--paper-mode",
        action="store_const",
        const=True,
        help="one key per block; disables the residual entropy gate",
    )
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loraskg",
        description="Secret key generation from RSSI reciprocity on LoRaWAN-class links",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="emit synthetic trace CSVs")
    p_sim.add_argument("--config", help="JSON config file")
    p_sim.add_argument("--sim", nargs="?", const="", help="simulator JSON config")
    p_sim.add_argument("--seed", type=int, help="simulator seed override")
    p_sim.add_argument("--out", help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_run = sub.add_parser("run", help="full pipeline to report/transcript/keys")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="KGR vs cutoff plot data")
    _add_common(p_sweep, sweep=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("report", help="summarize an existing report JSON")
    p_rep.add_argument("report", help="path to report.json")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as e:
        print(f"error in stage {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
