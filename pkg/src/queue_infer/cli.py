"""Command-line entry point: ``queue-infer <command> [flags]``."""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, io
from .asymptotics import WEIGHTINGS, kernel, normal_band
from .bootstrap import BlockConfig, bootstrap_H
from .distributions import parse_continuous_spec, parse_spec
from .errors import QueueInferError
from .estimator import compute_Z, estimate
from .simulator import SimConfig, discretize, simulate_discrete, simulate_mg_inf_continuous

@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error[cli]: {message}\n")
        sys.exit(2)


def _clean(obj):
    """Replace non-finite floats with None so reports stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _report(cfg: RunConfig, result: dict, warnings: list) -> str:
    return io.dumps(
        _clean(
            {
                "tool": "queue-infer",
                "version": __version__,
                "config": asdict(cfg),
                "result": result,
                "warnings": list(warnings),
            }
        )
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="input", default="-", help="input CSV path ('-' for stdin)")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="queue-infer", description="Service-time inference for discrete-time GI/G/inf queues.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="simulate count paths t,A,D")
    s.add_argument("--arrival", required=True, help="poisson:L | geometric:p | negbin:r,p | point:s | empirical:csv")
    s.add_argument("--service", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--burn-in", type=int, default=None)
    s.add_argument("--report", default=None, help="optional JSON report path")

    s = sub.add_parser("discretize", parents=[common], help="bin a continuous M/G/inf trace")
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="simulate a trace with this arrival rate instead of reading --in")
    s.add_argument("--service-cont", default="exp:1", help="exp:rate | det:duration")
    s.add_argument("--horizon", type=float, default=None)
    s.add_argument("--trace-out", default=None, help="also write the trace as kind,time CSV")
    s.add_argument("--report", default=None)

    for name, helptext in (("estimate", "estimate c, H and G with normal bands"),
                           ("kernel", "plug-in covariance kernel")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--x-max", type=int, default=20)
        s.add_argument("--lag-L", type=int, default=None)
        s.add_argument("--weighting", choices=WEIGHTINGS, default="bartlett")
        if name == "estimate":
            s.add_argument("--level", type=float, default=0.95)
            s.add_argument("--mode", choices=("pointwise", "uniform"), default="pointwise")

    s = sub.add_parser("bootstrap", parents=[common], help="moving-block bootstrap intervals")
    s.add_argument("--x-max", type=int, default=20)
    s.add_argument("--level", type=float, default=0.90)
    s.add_argument("--block-b", type=int, default=None, help="block length (default round(n^(1/3)))")
    s.add_argument("--block-B", type=int, default=500, help="number of replicates")
    s.add_argument("--ci", choices=("percentile", "basic"), default="percentile")
    s.add_argument("--dump", default=None, help="write replicates as rep,x,h_star,g_star CSV")

    s = sub.add_parser("mc-validate", parents=[common], help="run the Monte Carlo validation presets")
    s.add_argument("--criteria", default=None, help="comma-separated criterion ids (default: all)")
    s.add_argument("--reps", type=int, default=None, help="override repetitions of the coverage study")
    return p


def _cmd_simulate(args, cfg):
    arrival, service = parse_spec(args.arrival), parse_spec(args.service)
    paths = simulate_discrete(arrival, service, SimConfig(n=args.n, burn_in=args.burn_in, seed=args.seed))
    io.write_text(args.out, io.counts_to_csv(paths))
    warnings = []
    if paths.meta["in_service_at_end"]:
        warnings.append(f"dropped departures: {paths.meta['in_service_at_end']} customers still in service at n")
    if args.report:
        io.write_text(args.report, _report(cfg, {"meta": paths.meta, "n": paths.n}, warnings))


def _cmd_discretize(args, cfg):
    if args.lam is not None:
        if args.horizon is None:
            raise QueueInferError("--horizon is required with --lambda")
        trace = simulate_mg_inf_continuous(args.lam, parse_continuous_spec(args.service_cont), args.horizon, args.seed)
    else:
        trace = io.ingest_trace(args.input, args.horizon)
    if args.trace_out:
        io.write_text(args.trace_out, io.trace_to_csv(trace))
    paths = discretize(trace, args.h)
    io.write_text(args.out, io.counts_to_csv(paths))
    warnings = []
    if trace.dropped_departures:
        warnings.append(f"dropped departures: {trace.dropped_departures} beyond horizon")
    if args.report:
        io.write_text(args.report, _report(cfg, {"meta": paths.meta, "n": paths.n}, warnings))


def _cmd_estimate(args, cfg):
    paths = io.ingest_counts(args.input)
    z = compute_Z(paths)
    est = estimate(paths, args.x_max, z=z)
    ks = kernel(paths, args.x_max, L=args.lag_L, weighting=args.weighting, z=z)
    band = normal_band(est.g_hat_raw, ks.v_kernel, paths.n, args.level, args.mode, seed=args.seed)
    result = est.to_dict()
    result["band"] = {
        "mode": args.mode,
        "level": args.level,
        "critical": band.critical,
        "lag_L": ks.lag_L,
        "weighting": ks.weighting,
        "lower": band.lower,
        "upper": band.upper,
    }
    warnings = list(est.warnings) + [w for w in ks.warnings if w not in est.warnings] + band.warnings
    io.write_text(args.out, _report(cfg, result, warnings))


def _cmd_kernel(args, cfg):
    paths = io.ingest_counts(args.input)
    ks = kernel(paths, args.x_max, L=args.lag_L, weighting=args.weighting)
    io.write_text(args.out, _report(cfg, ks.to_dict(), ks.warnings))


def _cmd_bootstrap(args, cfg):
    paths = io.ingest_counts(args.input)
    z = compute_Z(paths)
    rule = "explicit" if args.block_b is not None else "n_cbrt"
    bcfg = BlockConfig(b=args.block_b, B=args.block_B, seed=args.seed, rule=rule)
    res = bootstrap_H(paths, z, args.x_max, bcfg, level=args.level, ci=args.ci)
    if args.dump:
        lines = ["rep,x,h_star,g_star"]
        for r in range(res.h_star.shape[0]):
            for x in range(res.h_star.shape[1]):
                g = repr(float(res.g_star[r, x])) if x < res.g_star.shape[1] else ""
                lines.append(f"{r},{x + 1},{float(res.h_star[r, x])!r},{g}")
        io.write_text(args.dump, "\n".join(lines) + "\n")
    io.write_text(args.out, _report(cfg, res.to_dict(), res.warnings))


def _cmd_mc_validate(args, cfg):
    from . import validation

    ids = None
    if args.criteria:
        try:
            ids = [int(tok) for tok in args.criteria.split(",") if tok.strip()]
        except ValueError:
            raise QueueInferError(f"bad --criteria list {args.criteria!r}") from None
        unknown = [i for i in ids if i not in validation.CRITERIA]
        if unknown:
            raise QueueInferError(f"unknown criteria {unknown}")
    overrides = {6: {"reps": args.reps}} if args.reps is not None else {}
    results = validation.run_criteria(ids, overrides)
    for res in results:
        sys.stderr.write(res.line() + "\n")
    payload = {
        "all_passed": all(r.passed for r in results),
        "criteria": [r.to_dict() for r in results],
    }
    io.write_text(args.out, _report(cfg, payload, []))
    return 0 if payload["all_passed"] else 1


HANDLERS = {
    "simulate": _cmd_simulate,
    "discretize": _cmd_discretize,
    "estimate": _cmd_estimate,
    "kernel": _cmd_kernel,
    "bootstrap": _cmd_bootstrap,
    "mc-validate": _cmd_mc_validate,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in sorted(vars(args).items()) if k != "command"}
    cfg = RunConfig(args.command, params)
    try:
        status = HANDLERS[args.command](args, cfg)
    except QueueInferError as exc:
        sys.stderr.write(exc.cli_line() + "\n")
        return 2
    return int(status or 0)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
