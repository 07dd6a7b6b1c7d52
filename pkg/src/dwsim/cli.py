"""Command-line entry point: ``dwsim <subcommand> [options]``.

Exit codes: 0 success, 2 usage error, 3 configuration error, 4 I/O error,
5 degenerate input with ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import io
from .config import PRESETS, ScenarioConfig, parse_override, read_values
from .errors import ConfigError, DegenerateInputError, ParameterError
from .harness import calibrate_threshold, parse_arm, run_monte_carlo, run_scenario
from .signals import SampledSignal, band_power, psd_welch

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_DEGENERATE = 5

log = logging.getLogger("dwsim")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", type=Path, help="flat key = value config file")
    g.add_argument("--preset", choices=PRESETS, help="start from a shipped preset")
    g.add_argument("--out-dir", type=Path, help="output directory (overrides out_dir)")
    g.add_argument("--seed", type=lambda s: int(s, 0), help="master seed (u64)")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; repeatable")
    g.add_argument("--strict", action="store_true",
                   help="treat degenerate-input warnings as errors")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="dwsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="run one scenario and write traces")

    a = sub.add_parser("attack", parents=[common], help="run one scenario with the attack enabled")
    a.add_argument("--alpha", type=float)
    a.add_argument("--beta", type=float)
    a.add_argument("--gamma", type=float)
    a.add_argument("--mode", choices=("proportional", "split_noise", "naive"))

    for name, helptext in (("montecarlo", "detection statistics over many trials"),
                           ("calibrate", "choose a D_w threshold for a target false-alarm rate")):
        m = sub.add_parser(name, parents=[common], help=helptext)
        m.add_argument("--trials", type=int)
        m.add_argument("--workers", type=int)
        if name == "montecarlo":
            m.add_argument("--arms", help="comma-separated arm specs, e.g. none,naive:1,proportional:0.5")
        else:
            m.add_argument("--attack-arm", default="naive:1.0", help="arm to separate from 'none'")
            m.add_argument("--target-far", type=float)

    p = sub.add_parser("psd", parents=[common], help="Welch PSD of a trace CSV")
    p.add_argument("trace", type=Path)
    p.add_argument("--segment-s", type=float, help="segment length in seconds (default: whole trace)")
    p.add_argument("--overlap", type=float, default=0.75)
    p.add_argument("--no-wrap", action="store_true", help="disable circular segmentation")
    p.add_argument("--band", action="append", default=[], metavar="LO:HI",
                   help="report band power over [LO, HI] Hz; repeatable")
    p.add_argument("-o", "--output", type=Path, help="PSD CSV path (default: <out-dir>/<trace>_psd.csv)")
    return parser


def load_config(args, extra=()):
    cfg = ScenarioConfig.preset(args.preset) if args.preset else ScenarioConfig()
    if args.config:
        cfg = cfg.with_overrides(read_values(args.config))
    overrides = dict(parse_override(s) for s in args.set)
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out_dir is not None:
        overrides["out_dir"] = str(args.out_dir)
    overrides.update(extra)
    return cfg.with_overrides(overrides) if overrides else cfg


def _print_verdict(result):
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    v = result.verdict
    if v is None:
        print("verdict: none (detector skipped)")
        return
    print(f"D_w = {v.d_w:.4f}  mean(S)/a0 = {v.reported_mean_ratio:.4f}  "
          f"variance ratio = {v.variance_ratio:.4f}")
    print(f"decision: {v.decision.value}  fault_flag: {v.fault_flag}  "
          f"classification: {result.classification.value}")


def cmd_simulate(args, extra=()):
    cfg = load_config(args, extra)
    result = run_scenario(cfg, out_dir=cfg["out_dir"])
    _print_verdict(result)
    print(f"outputs in {cfg['out_dir']}")
    if result.warnings and args.strict:
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_attack(args):
    extra = {"attack.enabled": True}
    for key in ("alpha", "beta", "gamma", "mode"):
        if getattr(args, key) is not None:
            extra[f"attack.{key}"] = getattr(args, key)
    return cmd_simulate(args, extra)


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def cmd_montecarlo(args):
    extra = {}
    if args.arms:
        extra["montecarlo.arms"] = args.arms
    cfg = load_config(args, extra)
    summary = run_monte_carlo(cfg, trials=args.trials, workers=args.workers)
    out = Path(cfg["out_dir"])
    payload = summary.to_dict(include_samples=True)
    payload["digest"] = summary.digest()
    payload["config"] = cfg.to_dict()
    _write_json(out / "montecarlo_summary.json", payload)
    print(f"{summary.trials} trials, threshold {summary.threshold_used}, "
          f"{summary.runtime_s:.1f} s, digest {summary.digest()[:16]}")
    for a in summary.arms:
        print(f"  {a.name:<20} D_w {a.d_w_mean:+.4f} ± {a.d_w_std:.4f}  detected {a.detection_rate:.2%}  "
              f"variance alarm {a.variance_detection_rate:.2%}  fault {a.fault_rate:.2%}")
    if summary.false_alarm_rate is not None:
        print(f"false-alarm rate: {summary.false_alarm_rate:.2%}")
    return EXIT_OK


def cmd_calibrate(args):
    extra = {}
    if args.target_far is not None:
        extra["calibrate.target_far"] = args.target_far
    cfg = load_config(args, extra)
    attack = parse_arm(args.attack_arm)
    summary = run_monte_carlo(cfg, trials=args.trials, arms=[parse_arm("none"), attack],
                              workers=args.workers)
    cal = calibrate_threshold(summary.arm("none").d_w, summary.arm(attack.name).d_w,
                              cfg["calibrate.target_far"])
    payload = {"threshold": cal.threshold, "false_alarm_rate": cal.false_alarm_rate,
               "miss_rate": cal.miss_rate, "warning": cal.warning,
               "target_far": cfg["calibrate.target_far"], "attack_arm": attack.name,
               "trials": summary.trials, "config": cfg.to_dict()}
    _write_json(Path(cfg["out_dir"]) / "calibration.json", payload)
    print(f"threshold {cal.threshold:.4f}: false-alarm {cal.false_alarm_rate:.2%}, "
          f"miss {cal.miss_rate:.2%} against {attack.name}")
    return EXIT_OK


def cmd_psd(args):
    cfg = load_config(args)
    t, v, fs = io.read_trace(args.trace)
    x = SampledSignal(v, fs, t[0])
    seg = len(x) if args.segment_s is None else int(round(args.segment_s * fs))
    p = psd_welch(x, seg, args.overlap, circular=not args.no_wrap)
    out = args.output or Path(cfg["out_dir"]) / f"{args.trace.stem}_psd.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_columns(out, io.PSD_HEADER, p.freqs_hz, p.psd)
    print(f"{len(x)} samples at {fs:g} Hz; resolution {p.resolution_hz:.4g} Hz; "
          f"total power {p.total_power:.6g}; written to {out}")
    for band in args.band:
        lo, _, hi = band.partition(":")
        print(f"  band [{lo}, {hi}] Hz: {band_power(p, float(lo), float(hi)):.6g}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "attack": cmd_attack,
    "montecarlo": cmd_montecarlo,
    "calibrate": cmd_calibrate,
    "psd": cmd_psd,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore" if not args.verbose else "default")
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateInputError as exc:
        print(f"degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
