"""Command line entry point: ``gaplab {run,check,converge,gen}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness


def _load(args) -> harness.ExperimentConfig:
    cfg = harness.resolve_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    out = args.out or cfg.outputs
    report = harness.run_experiment(cfg, out_dir=out)
    for c in report.checks:
        status = "ok" if c.passed else ("FAIL" if c.fatal else "fail (non-fatal)")
        print(f"{c.id:34s} {status}")
    print(f"outputs written to {out}")
    return 0 if report.fatal_ok else 1


def _cmd_check(args) -> int:
    from . import acceptance
    names = args.only or None
    unknown = [n for n in names or [] if n not in acceptance.CRITERIA]
    if unknown:
        print(f"unknown criteria {unknown}; choose from {list(acceptance.CRITERIA)}", file=sys.stderr)
        return 2
    results = acceptance.run_all(names)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        payload = [{"name": r.name, "passed": r.passed, "summary": r.summary,
                    "details": harness._jsonable(r.details)} for r in results]
        (Path(args.out) / "acceptance.json").write_text(harness._dumps(payload))
    return 0 if all(r.passed for r in results) else 1


def _cmd_converge(args) -> int:
    cfg = _load(args)
    K_list = args.K or cfg.convergence.get("K_list")
    if not K_list:
        print("no K list: pass --K or set convergence.K_list in the config", file=sys.stderr)
        return 2
    rows = harness.convergence_study(cfg, sorted(K_list))
    text = harness.convergence_csv(rows)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "convergence.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def _cmd_gen(args) -> int:
    cfg = _load(args)
    v = cfg.build_potential()
    text = json.dumps(v.to_json_dict(), sort_keys=True) + "\n"
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "potential.json").write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaplab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_config=True):
        sp.add_argument("--config", required=need_config,
                        help="YAML file, or the name of a bundled config")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", help="output directory")

    common(sub.add_parser("run", help="run one experiment and write its tables"))
    ck = sub.add_parser("check", help="run the acceptance suite")
    ck.add_argument("--out", help="write acceptance.json here")
    ck.add_argument("--only", nargs="+", metavar="NAME", help="run only these criteria")
    cv = sub.add_parser("converge", help="truncation study over several K")
    common(cv)
    cv.add_argument("--K", type=int, nargs="+", help="ascending truncation radii")
    common(sub.add_parser("gen", help="write the configured potential as JSON"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "check": _cmd_check, "converge": _cmd_converge, "gen": _cmd_gen}[args.command]
    try:
        return handler(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except harness.ExperimentError as exc:
        print(f"experiment aborted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
