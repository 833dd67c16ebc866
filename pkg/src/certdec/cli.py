"""Command-line scenario runner.

Exit codes: 0 success, 2 configuration error, 3 a guarantee audit failed.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from certdec import adoption, config, sim

EXIT_OK, EXIT_CONFIG, EXIT_AUDIT = 0, 2, 3


def shipped_configs() -> dict:
    root = resources.files("certdec") / "configs"
    return {p.name: p for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".cfg")}


def resolve_config(name: str) -> Path:
    """A filesystem path, or the name of a config shipped with the package."""
    path = Path(name)
    if path.exists():
        return path
    shipped = shipped_configs()
    for key in (name, f"{name}.cfg"):
        if key in shipped:
            return Path(str(shipped[key]))
    return path


def _emit(report: sim.SimReport, out_dir: str) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_AUDIT


def _load(args) -> sim.Scenario:
    scenario = config.load(resolve_config(args.config), args.overrides)
    if args.dump_config:
        Path(args.dump_config).write_text(config.dumps(scenario))
    return scenario


def cmd_run(args) -> int:
    scenario = _load(args)
    return _emit(sim.run(scenario, args.workers), args.out)


def cmd_ecert(args) -> int:
    scenario = _load(args)
    if scenario.name != "ecert":
        raise config.ConfigError(f"the ecert command needs name = ecert, got {scenario.name!r}",
                                 key="name")
    return _emit(sim.run_ecert(scenario, args.workers), args.out)


def cmd_audit(args) -> int:
    scenario = _load(args)
    allowed = sim.CHALLENGERS.get(scenario.name, ())
    if args.challenger not in allowed:
        raise config.ConfigError(
            f"challenger {args.challenger!r} not available for {scenario.name!r}; "
            f"choose from {', '.join(allowed) or 'none'}", key="challenger")
    return _emit(sim.run_dominance_audit(scenario, args.challenger, args.workers), args.out)


def cmd_adopt(args) -> int:
    if not 0 < args.alpha < 1:
        raise config.ConfigError(f"alpha must be in (0, 1), got {args.alpha}", key="alpha")
    if not 0 <= args.C < 1:
        raise config.ConfigError(f"C must be in [0, 1), got {args.C}", key="C")
    if not 0 <= args.u <= 1:
        raise config.ConfigError(f"u must be in [0, 1], got {args.u}", key="u")
    if args.constant is None:
        rule = adoption.threshold_rule(args.C, args.u, args.resolution)
        label = f"threshold u*1(r <= {args.C})"
    else:
        r = adoption.unit_grid(args.resolution)
        rule = adoption.AdoptionRule(r, np.full(r.size, args.constant), max(args.constant, args.u))
        label = f"constant q = {args.constant}"
    print(f"rule: {label}")
    print(f"{'alpha':>8} {'C':>8} {'u':>6} {'C+u*a*(1-C)':>12} {'lemma sup':>12} feasible")
    for alpha in sorted({args.alpha, 0.01, 0.05, 0.1}):
        print(f"{alpha:8.3f} {args.C:8.3f} {rule.cap_u:6.2f} "
              f"{adoption.risk_bound(rule.cap_u, alpha, args.C):12.6f} "
              f"{adoption.lemma_worst_case(rule, alpha, args.C):12.6f} "
              f"{adoption.is_feasible(rule, alpha, args.C)}")
    report = sim.audit_adoption(args.alpha, args.C, rule.cap_u, args.n, args.seed, rule)
    return _emit(report, args.out)


def cmd_selftest(args) -> int:
    failures = 0
    for name, path in shipped_configs().items():
        scenario = config.load(Path(str(path)), [f"n_reps={args.n_reps}"])
        reports = [sim.run(scenario, args.workers)]
        for challenger in sim.CHALLENGERS.get(scenario.name, ()):
            reports.append(sim.run_dominance_audit(scenario, challenger, args.workers))
        for rep in reports:
            for c in rep.checks:
                failures += not c.passed
                if not c.passed or args.verbose:
                    mark = "PASS" if c.passed else "FAIL"
                    print(f"[{mark}] {name} {c.name}: {c.statistic:.6g} <= {c.bound:.6g}")
        print(f"{name}: {'ok' if all(r.passed for r in reports) else 'FAILED'}")
    for alpha in (0.05, 0.1):
        for C in (0.3, 0.5, 0.7):
            rep = sim.audit_adoption(alpha, C, n=args.n_reps, seed=1)
            failures += not rep.passed
            print(f"adoption alpha={alpha} C={C}: {'ok' if rep.passed else 'FAILED'}")
    print(f"selftest: {failures} failed check(s)")
    return EXIT_OK if failures == 0 else EXIT_AUDIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="certdec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="config file, or the name of a shipped config")
        p.add_argument("overrides", nargs="*", metavar="key=value")
        p.add_argument("--out", default=".", help="directory for report.csv")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--dump-config", metavar="PATH",
                       help="write the fully resolved scenario to PATH")
        p.set_defaults(func=func)
        return p

    scenario_cmd("run", cmd_run, "run a scenario and audit its guarantees")
    scenario_cmd("ecert", cmd_ecert, "run an E-certificate scenario")
    audit = scenario_cmd("audit", cmd_audit, "dominance audit against a challenger certificate")
    audit.add_argument("--challenger", default="trivial")

    adopt = sub.add_parser("adopt", help="evaluate an adoption rule")
    adopt.add_argument("--alpha", type=float, default=0.05)
    adopt.add_argument("--C", type=float, default=0.5)
    adopt.add_argument("--u", type=float, default=1.0)
    adopt.add_argument("--constant", type=float, default=None,
                       help="evaluate q(r) = constant instead of the threshold rule")
    adopt.add_argument("--resolution", type=int, default=adoption.DEFAULT_RESOLUTION)
    adopt.add_argument("--n", type=int, default=100_000)
    adopt.add_argument("--seed", type=int, default=0)
    adopt.add_argument("--out", default=".")
    adopt.set_defaults(func=cmd_adopt)

    selftest = sub.add_parser("selftest", help="run every shipped scenario and audit")
    selftest.add_argument("--n-reps", type=int, default=20_000)
    selftest.add_argument("--workers", type=int, default=1)
    selftest.add_argument("-v", "--verbose", action="store_true")
    selftest.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    # overrides may follow options, e.g. `run winners --out x n_reps=1000`
    if extra:
        if not hasattr(args, "overrides") or any(x.startswith("-") or "=" not in x
                                                 for x in extra):
            parser.error(f"unrecognized arguments: {' '.join(extra)}")
        args.overrides = list(args.overrides) + extra
    try:
        return args.func(args)
    except config.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
