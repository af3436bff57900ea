"""Command line interface: ``randdecouple {simulate,sweep,verify-group,compare}``.

Exit codes: 0 success, 2 configuration error, 3 budget or validity error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as ex
from .errors import BudgetError, UnsupportedConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="override mc.master_seed and protocol.seed")
    p.add_argument("--n", type=int, help="override mc.n_realizations")
    p.add_argument("--out", help="CSV output path (default: outputs.csv_path or stdout)")
    p.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo chunks")
    p.add_argument("--timing", action="store_true", help="record wall time (CSV no longer byte-stable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randdecouple", description="Simulate bang-bang decoupling protocols on finite open quantum systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    p.add_argument("config")
    _add_run_options(p)

    p = sub.add_parser("sweep", help="sweep one scenario parameter")
    p.add_argument("config")
    _add_run_options(p)

    p = sub.add_parser("compare", help="free vs cyclic vs random on one scenario")
    p.add_argument("config")
    _add_run_options(p)

    p = sub.add_parser("verify-group", help="check closure and irreducibility of a group")
    p.add_argument("group", help="builtin name (pauli_1, pauli_2), JSON file, or JSON literal")
    return parser


def _emit_csv(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)


def _cmd_simulate(args) -> int:
    doc = ex.apply_overrides(ex.load_json(args.config), args.seed, args.n)
    text, report, _ = ex.simulate(doc, workers=args.workers, timing=args.timing, out=args.out)
    csv_target = args.out or doc.get("outputs", {}).get("csv_path")
    _emit_csv(text, csv_target)
    sys.stderr.write(report)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    doc = ex.load_json(args.config)
    if "base" in doc:
        doc["base"] = ex.apply_overrides(doc["base"], args.seed, args.n)
    result = ex.sweep(doc, workers=args.workers, timing=args.timing)
    out = args.out or doc.get("base", {}).get("outputs", {}).get("csv_path")
    text = ex.write_csv(result.rows, out)
    _emit_csv(text, out)
    report = ex.format_sweep_report(result)
    report_path = doc.get("base", {}).get("outputs", {}).get("report_path")
    if report_path:
        Path(report_path).write_text(report, encoding="utf-8")
    sys.stderr.write(report)
    return EXIT_OK


def _cmd_compare(args) -> int:
    doc = ex.apply_overrides(ex.load_json(args.config), args.seed, args.n)
    rows, notes = ex.compare(doc, workers=args.workers, timing=args.timing)
    out = args.out or doc.get("outputs", {}).get("csv_path")
    text = ex.write_csv(rows, out)
    _emit_csv(text, out)
    for note in notes:
        sys.stderr.write(f"note: {note}\n")
    return EXIT_OK


def _load_group_arg(arg: str):
    path = Path(arg)
    if path.suffix == ".json" or path.is_file():
        doc = ex.load_json(path)
        return doc.get("group", doc) if isinstance(doc, dict) else doc
    stripped = arg.strip()
    if stripped.startswith(("[", "{")):
        try:
            return json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ex.ConfigError(f"group literal:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return stripped


def _cmd_verify_group(args) -> int:
    verdict = ex.verify_group_spec(_load_group_arg(args.group))
    print(f"|G|               {verdict.size}")
    print(f"closed            {verdict.closed}")
    print(f"closure residual  {verdict.worst_residual:.3e}")
    print(f"irreducible       {verdict.irreducible}")
    return EXIT_OK if verdict.closed else 1


COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "verify-group": _cmd_verify_group,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (BudgetError, UnsupportedConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        # ConfigError and validation failures of the sub-configs
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
