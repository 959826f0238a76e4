"""Command-line interface: ``logcave {fit,eval,sample,partition}``.

Exit codes: 0 success, 2 malformed input, 3 degenerate sample, 4 solver or
sampler failure.  Every invocation appends one JSON line to the run manifest.
"""

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import DegenerateSampleSet, LogCaveError, PreconditionError
from .lp_core import OUTSIDE_HULL, SampleSet, TentLP
from .optimizer import FitAborted, SolverConfig, fit
from .sampler import SamplerConfig, TentSampler, build_decomposition, estimate_log_partition
from .tent_model import TentParams

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_SOLVER = 0, 2, 3, 4


class InputError(Exception):
    """Malformed CSV or JSON input."""


def _fmt(v):
    return format(float(v), ".17g")


def read_points_csv(path):
    """Rows of floats; a non-numeric first row is treated as a header."""
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path} contains no data rows")

    def parse(row):
        return [float(c) for c in row]

    try:
        parse(rows[0])
    except ValueError:
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path} contains no data rows")
    try:
        data = [parse(r) for r in rows]
    except ValueError as exc:
        raise InputError(f"non-numeric value in {path}: {exc}") from exc
    width = {len(r) for r in data}
    if len(width) != 1:
        raise InputError(f"rows of {path} have differing column counts")
    arr = np.array(data, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{path} contains non-finite values")
    return arr


def write_rows(path, rows):
    lines = "".join(",".join(_fmt(v) for v in np.atleast_1d(r)) + "\n" for r in rows)
    if path in (None, "-"):
        sys.stdout.write(lines)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(lines)


def _emit_json(path, obj):
    text = json.dumps(obj, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def load_fit(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    if doc.get("schemaVersion") != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schemaVersion {doc.get('schemaVersion')!r}")
    try:
        X = SampleSet.from_rows(np.array(doc["points"], dtype=float))
        params = TentParams.normalized(doc["y"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed fit report ({exc})") from exc
    return doc, X, params


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LOGCAVE_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise InputError(f"LOGCAVE_SEED must be an integer, got {env!r}") from exc
    # fresh entropy, recorded so the run can be replayed
    return int(np.random.SeedSequence().entropy)


def _sampler_cfg(args, default_delta, seed):
    return SamplerConfig(delta=args.delta if args.delta is not None else default_delta,
                         tau=args.tau, seed=seed, walk_steps=args.walk_steps,
                         volume_backend=args.volume_backend)


def cmd_fit(args, ctx):
    X = SampleSet.from_rows(read_points_csv(args.input))
    seed = _seed(args)
    scfg = None
    if args.delta is not None or args.walk_steps is not None or args.volume_backend != "grid":
        base = SolverConfig(epsilon=args.epsilon, tau=args.tau).sampler_for(X.n, X.d)
        scfg = SamplerConfig(delta=args.delta if args.delta is not None else base.delta, tau=args.tau, seed=seed,
                             walk_steps=args.walk_steps, volume_backend=args.volume_backend)
    cfg = SolverConfig(epsilon=args.epsilon, tau=args.tau, max_iters=args.max_iters,
                       step_scale=args.step_scale, sampler=scfg, seed=seed)
    ctx["config"] = {"epsilon": cfg.epsilon, "tau": cfg.tau, "maxIters": cfg.max_iters,
                     "stepScale": cfg.step_scale, "delta": args.delta,
                     "walkSteps": args.walk_steps, "volumeBackend": args.volume_backend}
    started = time.perf_counter()
    try:
        report = fit(X, cfg)
        status = EXIT_OK
    except FitAborted as exc:
        report = exc.partial
        status = EXIT_SOLVER
        ctx["error"] = str(exc)
    diag = dict(report.diagnostics)
    diag.pop("wallClockSeconds", None)
    doc = {
        "schemaVersion": SCHEMA_VERSION,
        "points": X.points.T.tolist(),
        "y": report.y_final.y.tolist(),
        "loglik": None if np.isnan(report.loglik) else report.loglik,
        "logPartition": None if np.isnan(report.log_partition) else report.log_partition,
        "iterations": report.iterations,
        "seed": report.seed,
        "config": ctx["config"],
        "diagnostics": diag,
        "complete": status == EXIT_OK,
        "wallClockSeconds": time.perf_counter() - started,
    }
    _emit_json(args.output, doc)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            fh.write("iteration,surrogate,loglik\n")
            for k, F, ll in report.surrogate_trace:
                fh.write(f"{k},{_fmt(F)},{_fmt(ll)}\n")
    ctx["seed"] = report.seed
    ctx["outcome"] = {"iterations": report.iterations, "loglik": doc["loglik"],
                      "acceptanceRate": diag.get("acceptanceRate")}
    return status


def cmd_eval(args, ctx):
    doc, X, params = load_fit(args.fit)
    Q = read_points_csv(args.points)
    if Q.shape[1] != X.d:
        raise InputError(f"query points have {Q.shape[1]} columns, expected {X.d}")
    seed = _seed(args)
    if args.delta is not None or doc.get("logPartition") is None:
        est = estimate_log_partition(X, params, _sampler_cfg(args, 0.01, seed),
                                     np.random.default_rng(seed))
        A = est.value
    else:
        A = float(doc["logPartition"])
    lp = TentLP(X, params)
    vals = []
    for q in Q:
        h = lp.value(q)
        vals.append(0.0 if h is OUTSIDE_HULL else float(np.exp(h - A)))
    write_rows(args.output, [[v] for v in vals])
    ctx["seed"] = seed
    ctx["outcome"] = {"queries": len(vals), "logPartition": A}
    return EXIT_OK


def cmd_sample(args, ctx):
    _, X, params = load_fit(args.fit)
    if args.count < 0:
        raise InputError("--count must be non-negative")
    seed = _seed(args)
    cfg = _sampler_cfg(args, 0.01, seed)
    rng = np.random.default_rng(seed)
    dec = build_decomposition(X, params, cfg, rng)
    sampler = TentSampler(dec, cfg)
    Z = sampler.draw_many(args.count, rng) if args.count else np.empty((0, X.d))
    write_rows(args.output, Z)
    ctx["seed"] = seed
    ctx["outcome"] = {"count": int(args.count), "acceptanceRate": sampler.acceptance_rate,
                      "proposals": sampler.proposals}
    return EXIT_OK


def cmd_partition(args, ctx):
    if args.fit:
        _, X, params = load_fit(args.fit)
    elif args.points and args.heights:
        X = SampleSet.from_rows(read_points_csv(args.points))
        try:
            y = [float(v) for v in args.heights.split(",")]
        except ValueError as exc:
            raise InputError(f"--heights must be comma-separated numbers: {exc}") from exc
        if len(y) != X.n:
            raise InputError(f"--heights has {len(y)} values for {X.n} points")
        params = TentParams.normalized(y)
    else:
        raise InputError("give a fit report or both --points and --heights")
    seed = _seed(args)
    cfg = _sampler_cfg(args, 0.01, seed)
    est = estimate_log_partition(X, params, cfg, np.random.default_rng(seed))
    out = {"logPartition": est.value, "relError": est.rel_error, "delta": est.delta,
           "tau": est.tau, "seed": seed, "trials": est.trials}
    _emit_json(args.output, out)
    ctx["seed"] = seed
    ctx["outcome"] = {"logPartition": est.value, "relError": est.rel_error}
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="logcave",
                                description="Log-concave maximum likelihood with tent densities.")
    p.add_argument("--version", action="version", version=f"logcave {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, delta_help):
        sp.add_argument("--tau", type=float, default=0.05, help="failure probability")
        sp.add_argument("--seed", type=int, default=None,
                        help="RNG seed (falls back to $LOGCAVE_SEED)")
        sp.add_argument("--delta", type=float, default=None, help=delta_help)
        sp.add_argument("--walk-steps", type=int, default=None,
                        help="hit-and-run moves per sample (default 1 in d=1, else 100 d^2)")
        sp.add_argument("--volume-backend", choices=("grid", "mc"), default="grid")
        sp.add_argument("--output", "-o", default="-", help="output path ('-' for stdout)")
        sp.add_argument("--manifest", default=None,
                        help="run manifest (JSONL; default $LOGCAVE_MANIFEST or ./logcave-runs.jsonl)")

    f = sub.add_parser("fit", help="fit tent heights to a CSV of points")
    f.add_argument("input")
    f.add_argument("--epsilon", type=float, default=0.1)
    f.add_argument("--max-iters", type=int, default=None)
    f.add_argument("--step-scale", type=float, default=1.0)
    f.add_argument("--trace", default=None, help="write the objective trace as CSV")
    common(f, "sampler accuracy (default epsilon / (2 diam))")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="evaluate a fitted density at query points")
    e.add_argument("fit")
    e.add_argument("points")
    common(e, "re-estimate the normalizer at this accuracy")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sample", help="draw points from a fitted density")
    s.add_argument("fit")
    s.add_argument("--count", "-k", type=int, default=1)
    common(s, "sampler accuracy (default 0.01)")
    s.set_defaults(func=cmd_sample)

    q = sub.add_parser("partition", help="estimate the log normalizing constant")
    q.add_argument("fit", nargs="?")
    q.add_argument("--points", default=None)
    q.add_argument("--heights", default=None, help="comma-separated pole heights")
    common(q, "accuracy, below 1/16 (default 0.01)")
    q.set_defaults(func=cmd_partition)
    return p


def _append_manifest(args, ctx, status, started):
    path = args.manifest or os.environ.get("LOGCAVE_MANIFEST") or "logcave-runs.jsonl"
    record = {
        "command": args.command,
        "input": getattr(args, "input", None) or getattr(args, "fit", None),
        "config": ctx.get("config", {k: v for k, v in vars(args).items()
                                     if k not in ("func", "manifest")}),
        "seed": ctx.get("seed"),
        "version": __version__,
        "wallClockSeconds": time.perf_counter() - started,
        "exitCode": status,
        "outcome": ctx.get("outcome"),
        "error": ctx.get("error"),
    }
    with open(path, "a") as fh:
        fh.write(json.dumps(record, default=str) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    ctx = {}
    started = time.perf_counter()
    try:
        status = args.func(args, ctx)
    except InputError as exc:
        ctx["error"] = str(exc)
        status = EXIT_INPUT
    except DegenerateSampleSet as exc:
        ctx["error"] = f"{exc} (rank {exc.rank})"
        status = EXIT_DEGENERATE
    except PreconditionError as exc:
        ctx["error"] = str(exc)
        status = EXIT_INPUT
    except LogCaveError as exc:
        ctx["error"] = str(exc)
        status = EXIT_SOLVER
    if ctx.get("error"):
        print(f"logcave: {ctx['error']}", file=sys.stderr)
    _append_manifest(args, ctx, status, started)
    return status


if __name__ == "__main__":
    sys.exit(main())
