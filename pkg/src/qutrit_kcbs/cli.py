"""Command-line front end.

    kcbs ideal     [--config F] [--seed N] [--jitter S] [--out R.json]
    kcbs simulate  [--config F] [--seed N] [--shots N] [--jitter S] [--postselect]
                   [--out R.json] [--csv T.csv] [--workers K]
    kcbs lhv       [--out R.json]
    kcbs optimize  [--seed N] [--starts K] [--out R.json]
    kcbs audit     [--config F] [--seed N] [--jitter S] [--out R.json]

Flag values override config-file values.  Exit codes: 0 success, 2 config
error, 3 statistical failure (nothing left to estimate from).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .errors import ConfigError, EmptyTally
from .geometry import QUANTUM_MIN, optimal_pentagram, symmetric_pentagram
from .optimize import SearchConfig, optimize_state
from .pipeline import shared_measurement_audit
from .report import RunConfig, dumps, make_pipeline, run_ideal, run_lhv, run_montecarlo, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STATS = 3


def _load_config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    overrides = {
        "seed": getattr(args, "seed", None),
        "shots": getattr(args, "shots", None),
        "jitterSigma": getattr(args, "jitter", None),
    }
    for key, val in overrides.items():
        if val is not None:
            data[key] = val
    if getattr(args, "postselect", False):
        data["postselect"] = True
    return RunConfig.from_dict(data)


def _emit(payload, out) -> None:
    text = dumps(payload)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(report) -> None:
    for name, est, bound in (("eq1", report.eq1_lhs, report.eq1_bound), ("eq2", report.eq2_lhs, report.eq2_bound)):
        v = report.verdicts[name]
        print(f"{name}: {est.mean:.10f} +- {est.stderr:.2g}  (bound {bound})  {v.status}  z={v.z:.3g}",
              file=sys.stderr)
    print(f"overlap term: {report.overlap_term.mean:.10f}  audit: {'pass' if report.audit.passed else 'FAIL'}",
          file=sys.stderr)
    if report.double_clicks:
        print(f"double clicks recorded as (-1,-1): {report.double_clicks}", file=sys.stderr)


def cmd_ideal(args) -> int:
    report = run_ideal(_load_config(args))
    _summary(report)
    _emit(report, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    report = run_montecarlo(_load_config(args), workers=args.workers)
    _summary(report)
    _emit(report, args.out)
    if args.csv:
        write_csv(report, args.csv)
    return EXIT_OK


def cmd_lhv(args) -> int:
    t0 = time.perf_counter()
    result = run_lhv()
    result["seconds"] = time.perf_counter() - t0
    print(f"eq1 classical minimum {result['eq1_min']}, eq2 classical minimum {result['eq2_min']}", file=sys.stderr)
    _emit(result, args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _load_config(args)
    pent = optimal_pentagram() if cfg.theta == "optimal" else symmetric_pentagram(float(cfg.theta))
    res = optimize_state(pent, SearchConfig(starts=args.starts, seed=cfg.seed))
    payload = {
        "value": res.value,
        "analytic": QUANTUM_MIN,
        "state": [[z.real, z.imag] for z in res.state.amplitudes.tolist()],
        "converged": res.converged,
        "evaluations": res.evaluations,
        "bestStart": res.start_index,
        "seed": cfg.seed,
        "starts": args.starts,
    }
    print(f"best value {res.value:.12f} (analytic {QUANTUM_MIN:.12f})", file=sys.stderr)
    _emit(payload, args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    cfg = _load_config(args)
    audit = shared_measurement_audit(make_pipeline(cfg))
    print(f"audit {'pass' if audit.passed else 'FAIL'}, overlap {audit.overlap:.15f}", file=sys.stderr)
    _emit(audit, args.out)
    return EXIT_OK if audit.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kcbs", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, shots=False, jitter=True):
        p.add_argument("--config", help="JSON RunConfig (lowerCamelCase keys)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="write the JSON result here instead of stdout")
        if jitter:
            p.add_argument("--jitter", type=float, help="stdev (rad) of extra rotation per inter-stage transform")
        if shots:
            p.add_argument("--shots", type=int)

    p = sub.add_parser("ideal", help="exact, noise-free evaluation")
    common(p)
    p.set_defaults(func=cmd_ideal)

    p = sub.add_parser("simulate", help="Monte Carlo photon counting")
    common(p, shots=True)
    p.add_argument("--postselect", action="store_true", help="drop shots without any click")
    p.add_argument("--csv", help="write tallies as CSV")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lhv", help="exhaustive hidden-variable bounds")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lhv)

    p = sub.add_parser("optimize", help="numerical search for the maximal violation")
    common(p, jitter=False)
    p.add_argument("--starts", type=int, default=20)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("audit", help="shared-measurement audit of the pipeline")
    common(p)
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyTally as exc:
        print(f"statistical failure: {exc}", file=sys.stderr)
        return EXIT_STATS


if __name__ == "__main__":
    sys.exit(main())
