"""Command-line front end.

Subcommands:
  run <config>          run an experiment and verify its certificates
  check-axioms <config> randomized space-axiom verification
  check-moduli          synthetic combinator certification suite
  list-presets          enumerate schedules, objectives, rates, counters

Exit codes: 0 all pass, 1 failure, 2 partial-only, 3 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .config import ConfigError, load_experiment
from .runner import VALID_RATE_IDS, exit_code_for, run_axiom_check, run_experiment
from .schedules import PRESETS
from .synthetic import run_combinator_checks
from .verify import STANDARD_COUNTERS

OBJECTIVES = ["squared_distance", "l1", "indicator"]


def _cmd_run(args) -> int:
    try:
        exp = load_experiment(args.config)
        result = run_experiment(exp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    for v in result.verdicts:
        line = f"[{v.status.value.upper():7s}] {v.check_id}"
        if v.detail:
            line += f" - {v.detail}"
        print(line)
    for name, path in result.artifacts.items():
        print(f"wrote {name}: {path}")
    return result.exit_code


def _cmd_check_axioms(args) -> int:
    try:
        exp = load_experiment(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    report, code = run_axiom_check(exp)
    status = "PASS" if report.passed else "FAIL"
    print(f"[{status}] axioms on {exp.space.__class__.__name__}: "
          f"{report.samples} samples, tol {report.tol}, seed {report.seed}, "
          f"worst margin {report.worst_margin:.3e}")
    if report.first_violation:
        axiom, index, excess = report.first_violation
        print(f"  first violation: {axiom} at sample {index} (excess {excess:.3e})")
    return code


def _cmd_check_moduli(args) -> int:
    failures = 0
    total = 0
    for seed in range(args.seeds):
        for res in run_combinator_checks(seed, k_max=args.k_max, n_max=args.n_max):
            total += 1
            if not res.ok:
                failures += 1
                print(f"[FAIL] seed {seed}: {res.name} - {res.note}")
    status = "PASS" if failures == 0 else "FAIL"
    print(f"[{status}] combinator suite: {total - failures}/{total} checks "
          f"over {args.seeds} seeds (exact arithmetic)")
    return 0 if failures == 0 else 1


def _cmd_list_presets(args) -> int:
    print("schedule presets:")
    for name in PRESETS:
        print(f"  {name}")
    print("objectives:")
    for name in OBJECTIVES:
        print(f"  {name}")
    print("rate identifiers:")
    for name in VALID_RATE_IDS:
        print(f"  {name}")
    print("counter functions:")
    for name in STANDARD_COUNTERS:
        print(f"  {name}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="vamcert",
        description="Run viscosity-type proximal iterations and certify "
                    "quantitative rate witnesses against measured residuals.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.set_defaults(fn=_cmd_run)

    p_ax = sub.add_parser("check-axioms", help="randomized space-axiom check")
    p_ax.add_argument("config", help="path to a JSON config with a space block")
    p_ax.set_defaults(fn=_cmd_check_axioms)

    p_mod = sub.add_parser("check-moduli", help="synthetic combinator suite")
    p_mod.add_argument("--seeds", type=int, default=20)
    p_mod.add_argument("--k-max", type=int, default=100)
    p_mod.add_argument("--n-max", type=int, default=100)
    p_mod.set_defaults(fn=_cmd_check_moduli)

    p_list = sub.add_parser("list-presets", help="list presets and identifiers")
    p_list.set_defaults(fn=_cmd_list_presets)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
