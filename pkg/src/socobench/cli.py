"""Command-line entry point.

Subcommands: `ratio` (per-round rules vs the offline oracle), `regret`
(expert-aggregation runs vs comparator sequences), `oracle` (offline
optimum export), `verify` (invariant audits), and `sweep` (any mix).

Exit codes are a contract: 0 all checks pass, 1 a bound or invariant was
violated (or a cell errored), 2 usage/config trouble. All configuration is
explicit; no environment variables are read.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import defaultdict

from .harness import (
    REGRET_ALGOS,
    RATIO_ALGOS,
    ConfigError,
    fit_scaling,
    load_config,
    run_experiment,
)
from .reports import oracle_to_csv, write_report
from .verify import VerifySettings, run_verify

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}")


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _apply_overrides(doc: dict, overrides: list[str]) -> dict:
    for text in overrides:
        key, value = _parse_override(text)
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        leaf = parts[-1]
        if isinstance(node, list):
            node[int(leaf)] = value
        else:
            node[leaf] = value
    return doc


def _prepare(args, allowed_algos=None) -> "ExperimentConfig":
    doc = _load_json(args.config)
    if args.set:
        doc = _apply_overrides(doc, args.set)
    if args.seed is not None:
        doc["seed"] = args.seed
    config = load_config(doc)
    if allowed_algos is not None:
        for algo in config.algorithms:
            if algo.name not in allowed_algos:
                raise ConfigError(
                    f"algorithm {algo.name!r} is not valid for this subcommand "
                    f"(expected one of {sorted(allowed_algos)})"
                )
    if args.out is not None:
        config.output_path = args.out
    if getattr(args, "plots", False):
        config.plots = True
    return config


def _emit_report(config, rows) -> int:
    path = config.output_path or "report.csv"
    write_report(rows, path)
    print(f"wrote {len(rows)} rows to {path}")
    if config.plots:
        from .plots import render_report_figures

        for fig_path in render_report_figures(rows, path):
            print(f"wrote {fig_path}")
    flags = [row["bound_satisfied"] for row in rows]
    if any(flag == "error" for flag in flags):
        return EXIT_VIOLATION
    if any(flag is False for flag in flags):
        return EXIT_VIOLATION
    return EXIT_OK


def _cmd_ratio(args) -> int:
    config = _prepare(args, allowed_algos=set(RATIO_ALGOS))
    if config.oracle is None:
        raise ConfigError("ratio runs need an oracle section")
    rows = run_experiment(config, log=lambda msg: print(msg, file=sys.stderr), jobs=args.jobs)
    return _emit_report(config, rows)


def _cmd_regret(args) -> int:
    config = _prepare(args, allowed_algos=set(REGRET_ALGOS))
    rows = run_experiment(config, log=lambda msg: print(msg, file=sys.stderr), jobs=args.jobs)
    code = _emit_report(config, rows)
    groups = defaultdict(list)
    for row in rows:
        if row.get("regret") is not None:
            groups[row["_comparator"]].append(row)
    for comp, group in sorted(groups.items()):
        print(f"fit_scaling comparator={comp} value={fit_scaling(group):.6g}")
    return code


def _cmd_sweep(args) -> int:
    config = _prepare(args)
    rows = run_experiment(config, log=lambda msg: print(msg, file=sys.stderr), jobs=args.jobs)
    return _emit_report(config, rows)


def _cmd_oracle(args) -> int:
    import os

    from .harness import _compute_oracle, generate_instance

    config = _prepare(args)
    if config.oracle is None:
        raise ConfigError("oracle runs need an oracle section")
    out_base = config.output_path or "oracle.csv"
    stem, ext = os.path.splitext(out_base)
    for i_idx, inst in enumerate(config.instances):
        costs = generate_instance(inst)
        start = inst.start if inst.start is not None else inst.domain.center()
        m_kind = inst.default_switching()
        result = _compute_oracle(config.oracle, costs, inst.domain, start, m_kind, config.solver)
        path = out_base if len(config.instances) == 1 else f"{stem}_{i_idx:03d}{ext or '.csv'}"
        with open(path, "w", newline="") as fh:
            fh.write(oracle_to_csv(result, costs, start, m_kind))
        extra = f" slack={result.slack:.6g}" if result.slack is not None else ""
        print(f"instance {i_idx}: total={result.total:.12g} method={result.method}{extra} -> {path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    doc = None
    if args.config is not None:
        doc = _load_json(args.config)
        if args.set:
            doc = _apply_overrides(doc, args.set)
    try:
        settings = VerifySettings.from_json(doc)
    except ValueError as exc:
        raise ConfigError(str(exc))
    if args.seed is not None:
        settings.seed = args.seed
    lines, failures = run_verify(settings)
    for line in lines:
        print(line)
    return EXIT_VIOLATION if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socobench",
        description="Smoothed online optimization testbed: ratio/regret runs, oracles, audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config path")
        p.add_argument("--out", help="output CSV path (overrides config)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="config override, dotted keys allowed (repeatable)")
        p.add_argument("--jobs", type=int, default=1, help="worker threads (cells stay deterministic)")

    p = sub.add_parser("ratio", help="per-round rules vs the offline optimum")
    add_common(p)
    p.add_argument("--plots", action="store_true", help="render figures next to the CSV")
    p.set_defaults(func=_cmd_ratio)

    p = sub.add_parser("regret", help="expert-aggregation runs vs comparators")
    add_common(p)
    p.add_argument("--plots", action="store_true", help="render figures next to the CSV")
    p.set_defaults(func=_cmd_regret)

    p = sub.add_parser("sweep", help="any mix of algorithms and metrics")
    add_common(p)
    p.add_argument("--plots", action="store_true", help="render figures next to the CSV")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("oracle", help="offline optimal cost of each instance")
    add_common(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("verify", help="invariant audit suites")
    add_common(p, config_required=False)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
