"""Command-line front end: ``rundrift detect | generate | evaluate``.

Reports go to stdout as JSON; human-readable summaries go to stderr.
Exit codes: 0 success, 2 unreadable or malformed input, 3 invalid
configuration or drift specification.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .evaluation import score_gradual, score_sudden
from .generator import GoldStandard, ModelError, compose, spec_from_json
from .log import LogFormatError, parse_csv, parse_xes, stream_traces, write_csv, write_xes
from .pipeline import DriftReport, detect
from .sudden import ConfigError, DetectorConfig

EXIT_INPUT = 2
EXIT_CONFIG = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _infer_format(path: Path, flag: str | None) -> str:
    if flag:
        return flag
    return "csv" if path.suffix.lower() == ".csv" else "xes"


def _load_json(path: str, what: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read {what} {path}: {exc}", EXIT_INPUT) from None


def _config_from_args(args) -> DetectorConfig:
    phi = args.phi_divisor if args.phi_divisor is not None else (5 if args.gradual else 3)
    try:
        return DetectorConfig(init_window=args.window, max_buffer=args.buffer,
                              chi_threshold=args.threshold, phi_divisor=phi,
                              min_window=args.min_window, max_window=args.max_window,
                              adaptive=not args.fixed_window)
    except ConfigError as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_CONFIG) from None


def cmd_detect(args) -> int:
    config = _config_from_args(args)
    path = Path(args.input)
    fmt = _infer_format(path, args.format)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT) from None
    try:
        log = parse_csv(data) if fmt == "csv" else parse_xes(data)
    except LogFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None

    traces = stream_traces(log)
    report, det = detect(traces, config, gradual=args.gradual, alpha=args.gradual_alpha,
                         log_id=path.name)
    if args.p_series:
        with open(args.p_series, "w", encoding="utf-8", newline="") as fh:
            det.write_p_series(fh)
        report.p_series_path = args.p_series
    json.dump(report.to_json(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    print(f"{report.n_traces} traces: {len(report.sudden)} sudden, "
          f"{len(report.gradual)} gradual drift(s)", file=sys.stderr)
    for d in report.sudden:
        print(f"  sudden  at {d.position} (confirmed at {d.confirmed_at}, w={d.window_at_detection})",
              file=sys.stderr)
    for g in report.gradual:
        print(f"  gradual {g.start}-{g.end} (weights {g.weight_before:.2f}/{g.weight_after:.2f})",
              file=sys.stderr)
    return 0


def cmd_generate(args) -> int:
    spec_obj = _load_json(args.spec, "spec")
    try:
        spec = spec_from_json(spec_obj)
    except ModelError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    log, gold = compose(spec, seed=args.seed)
    out = Path(args.output)
    fmt = _infer_format(out, args.format)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        (write_csv if fmt == "csv" else write_xes)(log, fh)
    gold_path = Path(args.gold) if args.gold else out.with_suffix(".gold.json")
    with open(gold_path, "w", encoding="utf-8") as fh:
        json.dump(gold.to_json(), fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(log)} traces to {out}, gold standard to {gold_path}", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    try:
        report = DriftReport.from_json(_load_json(args.report, "report"))
        gold = GoldStandard.from_json(_load_json(args.gold, "gold standard"))
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"schema mismatch: {exc}", EXIT_INPUT) from None
    results = {"sudden": score_sudden(report.sudden, gold.sudden_positions),
               "gradual": score_gradual(report.gradual, gold.gradual_intervals)}
    json.dump({k: r.to_json() for k, r in results.items()}, sys.stdout, indent=2)
    sys.stdout.write("\n")
    for kind, r in results.items():
        print(f"{kind:8s} {r.summary()}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rundrift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect drifts in an XES or CSV event log")
    p.add_argument("input")
    p.add_argument("--format", choices=("xes", "csv"), help="input format (default: by extension)")
    p.add_argument("--window", type=int, default=100, help="initial window size")
    p.add_argument("--phi-divisor", type=int, default=None,
                   help="oscillation filter divisor (default 3, or 5 with --gradual)")
    p.add_argument("--threshold", type=float, default=0.05, help="p-value threshold")
    p.add_argument("--min-window", type=int, default=None)
    p.add_argument("--max-window", type=int, default=None)
    p.add_argument("--buffer", type=int, default=None, help="maximum buffer size")
    p.add_argument("--fixed-window", action="store_true", help="disable adaptive window sizing")
    p.add_argument("--gradual", action="store_true", help="classify drift pairs as gradual drifts")
    p.add_argument("--gradual-alpha", type=float, default=0.05)
    p.add_argument("--p-series", metavar="PATH", help="write the p-value series as CSV")
    p.add_argument("--seed", type=int, default=0, help="accepted for symmetry; detection is deterministic")
    p.set_defaults(func=cmd_detect)

    g = sub.add_parser("generate", help="generate a synthetic log and its gold standard")
    g.add_argument("spec", help="drift specification JSON")
    g.add_argument("-o", "--output", required=True, help="log file to write")
    g.add_argument("--gold", help="gold standard path (default: <output>.gold.json)")
    g.add_argument("--format", choices=("xes", "csv"))
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="score a detection report against a gold standard")
    e.add_argument("report")
    e.add_argument("gold")
    e.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"rundrift: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
