"""``rspsim`` command line: run, sweep, sample, verify.

Exit codes: 0 success, 1 an invariant or check failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Optional

from . import sampling
from .config import RENORMALIZATION_POLICY, RunConfig, load_config, sweep_point
from .engine import ProtocolReport, TrialStats, run_exact, sample
from .oracle import OracleReport, born_enumerate
from .protocol import COEFFICIENT_NAMES, MAGNITUDE_NAMES, ValidationError
from .suite import (
    DEFAULT_VERIFY_CASES,
    DEFAULT_VERIFY_SEED,
    Check,
    run_checks,
    verify_suite,
    z_score,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID = 0, 1, 2


def _num(x: Optional[float]) -> Optional[float]:
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _state(sv) -> Optional[list]:
    if sv is None:
        return None
    return [[float(z.real), float(z.imag)] for z in sv.amps]


def report_to_dict(report: ProtocolReport) -> dict[str, Any]:
    branches = []
    for b in report.branches:
        entry = {
            "index": b.index,
            "probability": b.probability,
            "ancilla_pass_probability": b.ancilla_pass_probability,
            "success_contribution": b.success_contribution,
            "succeeds_via": b.succeeds_via,
            "fidelity": b.fidelity,
            "final_state": _state(b.final_state),
        }
        if b.filter is not None:
            entry["filter"] = {"F": list(b.filter.F), "G": [float(g) for g in b.filter.G]}
        branches.append(entry)
    return {
        "branches": branches,
        "total_success": report.total_success,
        "analytic_success": report.analytic_success,
        "bound": report.bound,
        "ratio": report.ratio,
        "notes": list(report.notes),
    }


def oracle_to_dict(oracle: OracleReport) -> dict[str, Any]:
    return {
        "branch_probabilities": oracle.branch_probabilities,
        "pass_probabilities": oracle.pass_probabilities,
        "success_contributions": oracle.success_contributions,
        "fidelities": oracle.fidelities,
        "total_success": oracle.total_success,
        "checks": {k: {"deviation": _num(d), "passed": ok} for k, (d, ok) in oracle.checks().items()},
    }


def checks_to_dict(checks: list[Check]) -> dict[str, Any]:
    out = {}
    for c in checks:
        key = f"{c.variant}:{c.name}" if c.variant else c.name
        out[key] = {"deviation": _num(c.deviation), "tolerance": c.tolerance, "passed": c.passed}
    return out


def dumps(doc: dict[str, Any]) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def to_csv(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args) -> RunConfig:
    if not args.config:
        raise ValidationError("--config is required")
    return load_config(args.config).with_overrides(trials=args.trials, seed=args.seed)


def cmd_run(args) -> int:
    cfg = _load(args)
    if cfg.sweep is not None:
        raise ValidationError("config has a sweep; use the 'sweep' command")
    target, channel = cfg.inputs()
    report = run_exact(target, channel)
    oracle = born_enumerate(target, channel)
    checks = run_checks(report, oracle)
    passed = all(c.passed for c in checks)
    if args.format == "csv":
        header = ["branch", "probability", "ancilla_pass_probability", "success_contribution",
                  "succeeds_via", "fidelity"]
        rows = [[b.index, b.probability, b.ancilla_pass_probability, b.success_contribution,
                 b.succeeds_via, b.fidelity] for b in report.branches]
        _emit(to_csv(header, rows), args.out)
    else:
        doc = {
            "protocol": cfg.protocol.value,
            "config": cfg.to_dict(),
            "report": report_to_dict(report),
            "oracle": oracle_to_dict(oracle),
            "invariants": checks_to_dict(checks),
            "passed": passed,
        }
        _emit(dumps(doc), args.out)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def sweep_columns(cfg: RunConfig) -> list[str]:
    n = cfg.protocol.branch_count
    return ([cfg.sweep.parameter, "status"] + list(MAGNITUDE_NAMES[:n]) + list(COEFFICIENT_NAMES[:n])
            + ["analytic_success", "exact_total", "bound", "ratio"]
            + [f"p_branch_{i}" for i in range(1, n + 1)] + ["renormalization"])


def sweep_rows(cfg: RunConfig) -> list[list[Any]]:
    n = cfg.protocol.branch_count
    rows = []
    for value in cfg.sweep.grid():
        try:
            point = sweep_point(cfg, value)
            target, channel = point.inputs()
        except ValidationError:
            rows.append([value, "skipped"] + [None] * (2 * n + 4 + n) + [RENORMALIZATION_POLICY])
            continue
        report = run_exact(target, channel)
        rows.append([value, "ok"] + list(point.target_magnitudes) + list(point.channel_magnitudes)
                    + [report.analytic_success, report.total_success, report.bound, report.ratio]
                    + [b.probability for b in report.branches] + [RENORMALIZATION_POLICY])
    return rows


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.sweep is None:
        raise ValidationError("config has no 'sweep' section")
    header, rows = sweep_columns(cfg), sweep_rows(cfg)
    if args.format == "json":
        doc = {"config": cfg.to_dict(), "columns": header, "renormalization": RENORMALIZATION_POLICY,
               "rows": [[_num(x) if isinstance(x, float) else x for x in r] for r in rows]}
        _emit(dumps(doc), args.out)
    else:
        _emit(to_csv(header, rows), args.out)
    return EXIT_OK


def sample_document(cfg: RunConfig, stats: TrialStats, exact: float) -> dict[str, Any]:
    return {
        "config": cfg.to_dict(),
        "trials": stats.trials,
        "successes": stats.successes,
        "estimate": stats.estimate,
        "std_error": stats.std_error,
        "seed": stats.seed,
        "rng": stats.algorithm,
        "branch_counts": list(stats.branch_counts),
        "exact": exact,
        "z_score": _num(z_score(stats, exact)),
    }


def cmd_sample(args) -> int:
    cfg = _load(args)
    if cfg.trials is None or cfg.seed is None:
        raise ValidationError("sampling needs both trials and seed (config or --trials/--seed)")
    if cfg.trials < 1:
        raise ValidationError("trials must be at least 1")
    target, channel = cfg.inputs()
    report = run_exact(target, channel)
    stats = sample(target, channel, cfg.trials, cfg.seed, report=report)
    doc = sample_document(cfg, stats, report.total_success)
    if args.format == "csv":
        keys = ["trials", "successes", "estimate", "std_error", "seed", "rng", "exact", "z_score"]
        _emit(to_csv(keys, [[doc[k] for k in keys]]), args.out)
    else:
        _emit(dumps(doc), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = DEFAULT_VERIFY_SEED if args.seed is None else args.seed
    cases = DEFAULT_VERIFY_CASES if args.trials is None else args.trials
    if cases < 1:
        raise ValidationError("--trials (random cases per protocol) must be at least 1")
    checks = verify_suite(seed=seed, cases=cases, inject_uncorrected=args.inject_uncorrected_filter)
    passed = all(c.passed for c in checks)
    if args.format == "json":
        text = dumps({"seed": seed, "cases_per_protocol": cases, "backend": sampling.BACKEND,
                      "injected_uncorrected_filter": args.inject_uncorrected_filter,
                      "checks": checks_to_dict(checks), "passed": passed})
    elif args.format == "csv":
        text = to_csv(["protocol", "check", "deviation", "tolerance", "verdict"],
                      [[c.variant, c.name, c.deviation, c.tolerance, "PASS" if c.passed else "FAIL"]
                       for c in checks])
    else:
        lines = [f"seed={seed} cases/protocol={cases}", f"{'protocol':<11} {'check':<18} {'deviation':>12} "
                 f"{'tolerance':>10}  verdict"]
        for c in checks:
            lines.append(f"{c.variant:<11} {c.name:<18} {c.deviation:>12.3e} {c.tolerance:>10.1e}  "
                         f"{'PASS' if c.passed else 'FAIL'}")
        failed = [f"{c.variant}:{c.name}" for c in checks if not c.passed]
        lines.append("all checks passed" if passed else "FAILED: " + ", ".join(failed))
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rspsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats, default):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--out", help="output path (default: stdout)")

    common(sub.add_parser("run", help="exact run plus oracle cross-check"), ["json", "csv"], "json")
    common(sub.add_parser("sweep", help="tabulate success over a parameter grid"), ["csv", "json"], "csv")
    common(sub.add_parser("sample", help="seeded Monte Carlo estimate"), ["json", "csv"], "json")
    p = sub.add_parser("verify", help="randomized invariant suite")
    common(p, ["text", "json", "csv"], "text")
    p.add_argument("--inject-uncorrected-filter", action="store_true",
                   help="use the bd/ac fourth entry in the two-pair branch-2 filter (expected to fail)")
    return parser


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "sample": cmd_sample, "verify": cmd_verify}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"rspsim {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
