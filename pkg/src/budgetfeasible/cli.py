"""Command-line front end: gen, run, audit, bench.

Exit codes: 0 success, 1 property violation, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction

from . import instances as inst_io
from .core import CapExceededError, InputError, format_rational
from .indsys import IndependenceSystemSpec
from .mechanisms import (
    ISK_MECHANISMS,
    MECHANISM_NAMES,
    CoinSource,
    RandISK,
    get_mechanism,
)
from .oracle import brute_force_opt
from .payments import audit, run_with_payments
from .valuations import AdditiveSpec, CoverageSpec

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

BENCH_COLUMNS = ["seed", "mechanism", "value", "opt", "ratio", "total_payment", "budget"]


class UsageError(Exception):
    pass


def _ratio_str(r) -> str:
    return "inf" if r == math.inf else f"{float(r):.6f}"


def _ratio(opt: Fraction, value: Fraction):
    if value == 0:
        return Fraction(1) if opt == 0 else math.inf
    return opt / value


def check_compatible(mechanism: str, instance) -> None:
    val = instance.valuation
    family = instance.family or inst_io.family_of(val)
    if mechanism == "sm-frac" and not isinstance(val, CoverageSpec):
        raise UsageError(f"sm-frac requires the coverage family, not {family}")
    if mechanism in ("greedy-sm", "sm-exact") and family not in (
            "coverage", "knapsack", "forest", "partition-matroid"):
        raise UsageError(f"{mechanism} needs a submodular valuation; {family} is not")
    if mechanism in ISK_MECHANISMS and not isinstance(val, (AdditiveSpec, IndependenceSystemSpec)):
        raise UsageError(f"{mechanism} needs an independence-system family, not {family}")


def _mechanism_for(name: str, seed):
    if name == "rand-isk" and seed is None:
        raise UsageError("rand-isk requires an explicit --seed")
    return get_mechanism(name, seed=seed)


def run_report(instance, mechanism_name: str, seed=None, oracle: bool = False) -> dict:
    check_compatible(mechanism_name, instance)
    mech = _mechanism_for(mechanism_name, seed)
    outcome = run_with_payments(mech, instance)
    report = {
        "mechanism": mechanism_name,
        "family": instance.family,
        "winners": sorted(outcome.winners),
        "payments": {str(i): format_rational(outcome.payments[i])
                     for i in sorted(outcome.winners)},
        "value": format_rational(outcome.value),
        "budget": format_rational(instance.budget),
        "total_payment": format_rational(outcome.total_payment),
        "budget_feasible": outcome.total_payment <= instance.budget,
        "exact_payments": outcome.exact,
    }
    if isinstance(mech, RandISK):
        report["seed"] = seed
        report["draw"] = mech.u
    if oracle:
        opt = brute_force_opt(instance)[1]
        r = _ratio(opt, outcome.value)
        report["opt"] = format_rational(opt)
        report["ratio"] = "inf" if r == math.inf else format_rational(r)
    return report


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands

def cmd_gen(args) -> int:
    size = args.agents if args.agents is not None else args.edges
    if size is None:
        size = 8
    instance = inst_io.generate(args.family, size, args.seed)
    _emit(inst_io.dumps(instance), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    instance = inst_io.load(args.instance)
    report = run_report(instance, args.mechanism, args.seed, args.oracle)
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def _trial_instances(args):
    if args.instance:
        yield args.seed, inst_io.load(args.instance)
        return
    if not args.family:
        raise UsageError("give an instance file or --family with --trials")
    size = args.agents if args.agents is not None else 8
    base = args.seed if args.seed is not None else 0
    for t in range(args.trials):
        yield base + t, inst_io.generate(args.family, size, base + t)


def cmd_audit(args) -> int:
    rows = []
    failures = []
    count = 0
    for seed, instance in _trial_instances(args):
        check_compatible(args.mechanism, instance)
        mech = _mechanism_for(args.mechanism, seed if args.mechanism == "rand-isk" else None)
        report = audit(mech, instance, args.grid)
        count += 1
        if args.csv:
            winners = mech.allocate(instance, instance.costs)
            value = instance.valuation.value(frozenset(winners))
            opt = brute_force_opt(instance)[1]
            rows.append({"seed": seed, "mechanism": args.mechanism, "passed": report.passed,
                         "value": format_rational(value), "opt": format_rational(opt),
                         "ratio": _ratio_str(_ratio(opt, value)),
                         "total_payment": format_rational(report.payment_total),
                         "budget": format_rational(instance.budget)})
        if not report.passed:
            failures.append((seed, report))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["seed", "mechanism", "passed", "value", "opt",
                                               "ratio", "total_payment", "budget"])
            w.writeheader()
            w.writerows(rows)
    if failures:
        for seed, report in failures[:5]:
            for check in report.failures():
                print(f"FAIL seed={seed} {report.mechanism} {check.property}: "
                      f"{_jsonable(check.counterexample)}")
        print(f"{len(failures)} of {count} audited instances violated a property")
        return EXIT_VIOLATION
    print(f"audited {count} instance(s) with {args.mechanism}: all checks passed")
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in obj]
    return obj


def bench_rows(family: str, mechanisms: list[str], trials: int, seed: int, size: int):
    rows = []
    for t in range(trials):
        s = seed + t
        instance = inst_io.generate(family, size, s)
        opt = brute_force_opt(instance)[1]
        for name in mechanisms:
            check_compatible(name, instance)
            mech = get_mechanism(name, seed=s)
            outcome = run_with_payments(mech, instance, strict=False)
            rows.append({"seed": s, "mechanism": name,
                         "value": format_rational(outcome.value),
                         "opt": format_rational(opt),
                         "ratio": _ratio(opt, outcome.value),
                         "total_payment": format_rational(outcome.total_payment),
                         "budget": format_rational(instance.budget)})
    return rows


def cmd_bench(args) -> int:
    mechanisms = [m for m in args.mechanisms.split(",") if m]
    for m in mechanisms:
        if m not in MECHANISM_NAMES:
            raise UsageError(f"unknown mechanism {m!r}")
    size = args.agents if args.agents is not None else 8
    rows = bench_rows(args.family, mechanisms, args.trials, args.seed or 0, size)
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({**row, "ratio": _ratio_str(row["ratio"])})
        for name in mechanisms if rows else []:
            ratios = [r["ratio"] for r in rows if r["mechanism"] == name]
            finite = [float(r) for r in ratios if r != math.inf]
            worst = math.inf if math.inf in ratios else max(finite)
            mean = math.inf if math.inf in ratios else sum(finite) / len(finite)
            w.writerow({"seed": "max", "mechanism": name, "ratio": _ratio_str(worst)})
            w.writerow({"seed": "mean", "mechanism": name, "ratio": _ratio_str(mean)})
    finally:
        if args.csv:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="budgetfeasible",
                                description="Budget-feasible procurement mechanisms")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a random instance as JSON")
    g.add_argument("--family", required=True, choices=inst_io.FAMILIES)
    size = g.add_mutually_exclusive_group()
    size.add_argument("--agents", type=int)
    size.add_argument("--edges", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run a mechanism with threshold payments")
    r.add_argument("instance")
    r.add_argument("--mechanism", required=True, choices=MECHANISM_NAMES)
    r.add_argument("--seed", type=int)
    r.add_argument("--oracle", action="store_true", help="also report OPT and the ratio")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", help="audit truthfulness, IR and budget feasibility")
    a.add_argument("instance", nargs="?")
    a.add_argument("--mechanism", required=True, choices=MECHANISM_NAMES)
    a.add_argument("--family", choices=inst_io.FAMILIES)
    a.add_argument("--trials", type=int, default=1)
    a.add_argument("--agents", "--edges", dest="agents", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--grid", type=int, default=8)
    a.add_argument("--csv")
    a.set_defaults(func=cmd_audit)

    b = sub.add_parser("bench", help="approximation ratios against brute force")
    b.add_argument("--family", required=True, choices=inst_io.FAMILIES)
    b.add_argument("--mechanisms", required=True, help="comma-separated mechanism names")
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--agents", "--edges", dest="agents", type=int)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InputError, CapExceededError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
