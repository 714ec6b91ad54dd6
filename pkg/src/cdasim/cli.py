"""Command-line front end.

    cdasim waveform   --preset two-node [--node 1] [--output-dir DIR]
    cdasim crlb       --preset three-node [--paper-c] [--output-dir DIR]
    cdasim montecarlo --nodes 3 --trials 10000 --seed 7 [--output-dir DIR]
    cdasim scenario   two_node.cfg [--no-correction] [--seed S] [--output-dir DIR]
    cdasim selftest

Exit status: 0 success, 1 usage error, 2 configuration or I/O error,
3 selftest failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import _io
from .analysis import DEFAULT_TRIALS, gain_probability_sweep, write_crlb_report, write_curve_csv
from .constants import BEAMFORMING_CARRIER, PAPER_SPEED_OF_LIGHT, SPEED_OF_LIGHT
from .presets import PRESET_NAMES, get_preset
from .scenario import ConfigError, load_config, run_scenario, with_seed, write_result
from .selftest import all_passed, run_selftest
from .waveform import assign_signatures, synthesize, validate_spec, write_waveform

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_SELFTEST = 0, 1, 2, 3
SUBCOMMANDS = ("waveform", "crlb", "montecarlo", "scenario", "selftest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output-dir", type=Path, default=None, help="where artifacts are written (default: cwd)")
    common.add_argument("--paper-c", action="store_true", help="use c = 3e8 m/s")
    common.add_argument("--seed", type=int, default=None)

    parser = _Parser(prog="cdasim", description="Open-loop coherent distributed array simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("waveform", parents=[common], help="synthesize and export a ranging waveform")
    p.add_argument("--preset", default="two-node", choices=PRESET_NAMES)
    p.add_argument("--node", type=int, default=1, help="signature index (1-based)")

    p = sub.add_parser("crlb", parents=[common], help="print the ranging bound for a preset")
    p.add_argument("--preset", default="two-node", choices=PRESET_NAMES)

    p = sub.add_parser("montecarlo", parents=[common], help="coherent-gain probability curves")
    p.add_argument("--nodes", type=int, action="append", help="array size; repeatable (default 2,3,10,30,100)")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("scenario", parents=[common], help="run a moving-array experiment")
    p.add_argument("config", help="config file path or bundled name (two_node.cfg, three_node.cfg)")
    p.add_argument("--no-correction", action="store_true", help="freeze the initial phase correction")

    sub.add_parser("selftest", parents=[common], help="check the headline reproduction numbers")
    return parser


def _out(args) -> Path:
    return Path(".") if args.output_dir is None else args.output_dir


def _c(args) -> float:
    return PAPER_SPEED_OF_LIGHT if args.paper_c else SPEED_OF_LIGHT


def cmd_waveform(args) -> int:
    preset = get_preset(args.preset)
    n_nodes = max(args.node, preset.n_connections)
    validate_spec(preset.spec, n_nodes)
    sig = assign_signatures(preset.spec.n_pulses, n_nodes)[args.node - 1]
    path = _out(args) / f"waveform_{preset.name}_node{args.node}.csv"
    write_waveform(path, synthesize(preset.spec, sig), preset.spec, sig)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_crlb(args) -> int:
    preset = get_preset(args.preset)
    c = _c(args)
    reports = preset.alternatives(c)
    main = reports["quoted_bandwidth"]
    print(f"preset            {preset.name}")
    print(f"msbw              {main.msbw:.6e} rad^2/s^2")
    print(f"snr               {main.snr_db:.2f} dB")
    print(f"processing gain   {main.processing_gain_db:.4f} dB")
    print(f"post-processing   {main.post_snr_db:.4f} dB")
    print(f"delay variance    {main.delay_variance:.6e} s^2")
    print(f"range std         {main.range_std * 1e3:.4f} mm")
    print(f"max frequency     {main.max_frequency / 1e9:.4f} GHz")
    for label, rep in reports.items():
        if label != "quoted_bandwidth":
            print(
                f"alt {label:<20} msbw {rep.msbw:.6e}, range std {rep.range_std * 1e3:.4f} mm, "
                f"max frequency {rep.max_frequency / 1e9:.4f} GHz"
            )
    if args.output_dir is not None:
        extra = {"preset": preset.name, "alternatives": {k: v.to_dict() for k, v in reports.items()}}
        write_crlb_report(args.output_dir / f"crlb_{preset.name}.json", main, extra)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    nodes = args.nodes or [2, 3, 10, 30, 100]
    if any(n < 1 for n in nodes) or args.trials < 1 or args.workers < 1:
        raise UsageError("cdasim montecarlo: --nodes, --trials and --workers must be positive")
    seed = 0 if args.seed is None else args.seed
    wavelength = _c(args) / BEAMFORMING_CARRIER
    for n in nodes:
        curve = gain_probability_sweep(
            n, threshold=args.threshold, trials=args.trials, seed=seed, wavelength=wavelength, workers=args.workers
        )
        path = write_curve_csv(_out(args) / f"gain_curve_n{n}.csv", curve)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = with_seed(config, args.seed)
    if args.paper_c:
        config = replace(config, ranging_link=replace(config.ranging_link, speed_of_light=PAPER_SPEED_OF_LIGHT))
    if args.no_correction:
        config = replace(config, correction_enabled=False)
    result = run_scenario(config)
    for path in write_result(result, _out(args)):
        print(f"wrote {path}")
    s = result.summary()
    print(
        f"min relative amplitude {s['min_relative_amplitude']:.4f}, "
        f"mean {s['mean_relative_amplitude']:.4f}, flagged tracker updates {s['diverged_updates']}"
    )
    return EXIT_OK


def cmd_selftest(args) -> int:
    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if args.output_dir is not None:
        rows = [(name, ok, detail) for name, ok, detail in results]
        _io.write_csv(args.output_dir / "selftest.csv", ("check", "passed", "detail"), rows)
    return EXIT_OK if all_passed(results) else EXIT_SELFTEST


COMMANDS = {
    "waveform": cmd_waveform,
    "crlb": cmd_crlb,
    "montecarlo": cmd_montecarlo,
    "scenario": cmd_scenario,
    "selftest": cmd_selftest,
}


def dispatch(argv=None) -> int:
    """Parse ``argv`` and run one subcommand; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ValueError) as exc:
        print(f"cdasim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cdasim: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None):
    sys.exit(dispatch(argv))
