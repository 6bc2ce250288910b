"""Command-line entry point: ``srdf <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 solver did not converge (outputs
are still written), 3 enumeration cap exceeded, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .distortion import fixed_set_instance
from .emit import curve_rows, file_stem, spec_hash, to_csv, to_json
from .envelope import PiecewiseLinearCurve
from .errors import CapExceeded, InfeasibleDistortion, ValidationError
from .instances import example1, example2
from .oracle import brute_force_rate
from .prob import subset_label
from .problem import PE_TOKEN, ProblemSpec, parse_problem_spec
from .srdf import (
    SolverOptions,
    SrdfResult,
    fixed_set_srdf,
    irs_srdf,
    mrs_informed_srdf,
    mrs_uninformed_bound,
    pe_fixed_set_srdf,
)
from .tables import DeltaRange

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_CAP, EXIT_IO = range(5)
ENV_PREFIX = "SRDF_"

SPEC_COMMANDS = ("fixed-set", "pe-fixed-set", "irs", "mrs-informed",
                 "mrs-uninformed-bound", "oracle")
COMMANDS = SPEC_COMMANDS + ("example1", "example2")

# flag name -> (option field, type)
SOLVER_FLAGS = {
    "lambda-min": ("lambda_min", float),
    "lambda-max": ("lambda_max", float),
    "lambda-points": ("lambda_points", int),
    "tol": ("tol", float),
    "max-iter": ("max_iter", int),
    "grid": ("grid", int),
    "cap": ("cap", int),
    "threads": ("threads", int),
    "seed": ("seed", int),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="srdf", description="Sampling rate distortion functions.",
        epilog=f"Every solver flag can also be set through an {ENV_PREFIX}<FLAG> environment "
               "variable (e.g. SRDF_LAMBDA_POINTS); flags win.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "fixed-set": "curve for a fixed sampled set (--set)",
        "pe-fixed-set": "fixed-set curve for probability of error via the alpha reduction",
        "irs": "independent random sampler: envelope of fixed-set curves",
        "mrs-informed": "memoryless random sampler, informed decoder",
        "mrs-uninformed-bound": "upper bound for the memoryless sampler, uninformed decoder",
        "oracle": "compare the fixed-set solver with brute-force grid search",
        "example1": "three curves of the erasure/Hamming example",
        "example2": "curves of the virtual BSC example",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        if name in SPEC_COMMANDS:
            p.add_argument("spec", help="problem spec (JSON)")
        if name in ("fixed-set", "pe-fixed-set", "oracle"):
            p.add_argument("--set", dest="subset", required=True,
                           help="sampled components, 1-based and comma separated (e.g. 1,3)")
        if name in ("irs", "mrs-informed", "mrs-uninformed-bound"):
            p.add_argument("--k", type=int, help="override the spec's k")
        if name == "oracle":
            p.add_argument("--resolution", type=int, default=40,
                           help="grid kernels use multiples of 1/resolution (default 40)")
        if name == "example2":
            p.add_argument("--p", type=float, default=0.1, help="P(X_1 = 1) (default 0.1)")
            p.add_argument("--q", type=float, default=0.5, help="BSC crossover (default 0.5)")
        for flag, (_, kind) in SOLVER_FLAGS.items():
            p.add_argument(f"--{flag}", type=kind, default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--out", default=None, help="output directory (default .)")
    return parser


def _env(name, kind):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return None
    try:
        return kind(raw)
    except ValueError:
        raise ValidationError(f"{ENV_PREFIX}{name.upper().replace('-', '_')}={raw!r} "
                              f"is not a valid {kind.__name__}") from None


def resolve_options(args, spec):
    """Spec options, then environment, then flags (each overriding the last)."""
    values = dict(spec.options)
    for flag, (fname, kind) in SOLVER_FLAGS.items():
        env = _env(flag, kind)
        if env is not None:
            values[fname] = env
        flag_value = getattr(args, fname)
        if flag_value is not None:
            values[fname] = flag_value
    opts = SolverOptions(**values)
    if opts.lambda_min <= 0 or opts.lambda_max < opts.lambda_min or opts.lambda_points < 1:
        raise ValidationError("need 0 < lambda-min <= lambda-max and lambda-points >= 1")
    if opts.tol <= 0 or opts.max_iter < 1 or opts.grid < 1 or opts.cap < 1 or opts.threads < 1:
        raise ValidationError("tol, max-iter, grid, cap and threads must be positive")
    return opts


def parse_subset(text, m):
    try:
        members = sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError:
        raise ValidationError(f"--set {text!r}: expected comma-separated component numbers") \
            from None
    if not members or members[0] < 1 or members[-1] > m:
        raise ValidationError(f"--set {text!r}: components must lie in 1..{m}")
    return tuple(i - 1 for i in members)


def _load_spec(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _IOFailure(f"cannot read spec {path}: {exc}") from None
    return parse_problem_spec(text), text


class _IOFailure(Exception):
    pass


def _k(args, spec):
    k = args.k if getattr(args, "k", None) is not None else spec.k
    if not 1 <= k <= spec.m:
        raise ValidationError(f"k = {k} is outside [1, {spec.m}]")
    return k


def _check_pe(spec):
    if spec.distortion == PE_TOKEN:
        return
    d = spec.distortion_table()
    if d.shape[0] != d.shape[1] or np.any(d.forbidden) or \
            not np.array_equal(d.values, 1.0 - np.eye(d.shape[0])):
        raise ValidationError("pe-fixed-set needs the probability-of-error distortion")


def _oracle(spec, subset, opts, resolution):
    pmf, d = spec.joint_pmf(), spec.distortion_table()
    solved = fixed_set_srdf(pmf, d, subset, opts)
    inst = fixed_set_instance(pmf, d, subset)
    lo, hi = solved.delta_range.delta_min, solved.delta_range.delta_max
    grid = np.linspace(lo, hi, opts.grid) if hi > lo else np.array([lo])
    pts = brute_force_rate(inst, grid, resolution)
    dedup = [p for i, p in enumerate(pts) if i == 0 or p.delta > pts[i - 1].delta]
    curve = PiecewiseLinearCurve(dedup, label="oracle")
    gap = max(abs(p.rate - solved.rate(max(p.delta, solved.curve.delta_min))) for p in pts)
    oracle = SrdfResult(f"oracle_{solved.label}", curve, DeltaRange(lo, hi),
                        {"grid": {"kind": "grid-kernel search", "resolution": resolution}},
                        diagnostics={"max_abs_gap_bits": gap, "points": len(pts)})
    return [solved, oracle]


def compute(args, spec, opts):
    """The list of results a command produces."""
    pmf, d = spec.joint_pmf(), spec.distortion_table()
    cmd = args.command
    if cmd == "fixed-set":
        return [fixed_set_srdf(pmf, d, parse_subset(args.subset, spec.m), opts)]
    if cmd == "pe-fixed-set":
        _check_pe(spec)
        return [pe_fixed_set_srdf(pmf, parse_subset(args.subset, spec.m), opts,
                                  spec.reproduction)]
    if cmd == "irs":
        return [irs_srdf(pmf, d, _k(args, spec), opts)]
    if cmd == "mrs-informed":
        return [mrs_informed_srdf(pmf, d, _k(args, spec), opts)]
    if cmd == "mrs-uninformed-bound":
        return list(mrs_uninformed_bound(pmf, d, _k(args, spec), opts))
    if cmd == "oracle":
        return _oracle(spec, parse_subset(args.subset, spec.m), opts, args.resolution)
    if cmd == "example1":
        return [fixed_set_srdf(pmf, d, (0,), opts), fixed_set_srdf(pmf, d, (1,), opts),
                irs_srdf(pmf, d, 1, opts)]
    if cmd == "example2":
        raw, conv = mrs_uninformed_bound(pmf, d, 1, opts)
        return [mrs_informed_srdf(pmf, d, 1, opts), fixed_set_srdf(pmf, d, (0,), opts),
                fixed_set_srdf(pmf, d, (1,), opts), irs_srdf(pmf, d, 1, opts), raw, conv]
    raise ValidationError(f"unknown command {cmd}")


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "id"):
        return obj.id
    return str(obj)


def _witness_id(w):
    if w is None:
        return None
    if getattr(w, "is_constant", None) and w.is_constant():
        return subset_label(w.subset(0))
    return getattr(w, "id", w)


def write_outputs(results, out_dir, fmt, opts, metadata):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = dict(metadata, version=__version__, options=vars_of(opts), results=[])
    for res in results:
        rows = curve_rows(res, opts.grid)
        name = f"{file_stem(res.label)}.{fmt}"
        text = to_csv(rows) if fmt == "csv" else to_json(res, rows, metadata)
        (out_dir / name).write_text(text)
        rng = res.delta_range
        report["results"].append({
            "label": res.label,
            "file": name,
            "delta_range": {"delta_min": rng.delta_min, "delta_max": rng.delta_max,
                            "min_witness": _witness_id(rng.sampler_witness),
                            "max_witness": _witness_id(rng.max_witness)},
            "convex": res.convex,
            "converged": res.converged,
            "vertices": [[v.delta, v.rate, str(v.witness)] for v in res.curve.vertices],
            "witnesses": res.registry,
            "diagnostics": res.diagnostics,
        })
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, default=_jsonable) + "\n")
    return report


def vars_of(opts):
    return {k: getattr(opts, k) for k in opts.__dataclass_fields__}


def _spec_for(args):
    if args.command == "example1":
        pmf, d, repro = example1()
        spec = ProblemSpec.from_problem(pmf, d, repro, k=1)
        return spec, spec.to_json()
    if args.command == "example2":
        pmf, d, repro = example2(args.p, args.q)
        spec = ProblemSpec.from_problem(pmf, d, repro, k=1)
        return spec, spec.to_json()
    return _load_spec(args.spec)


def run_command(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec, text = _spec_for(args)
        opts = resolve_options(args, spec)
        fmt = args.format or os.environ.get(ENV_PREFIX + "FORMAT", "csv")
        if fmt not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, not {fmt!r}")
        out = args.out or os.environ.get(ENV_PREFIX + "OUT", ".")
        results = compute(args, spec, opts)
        metadata = {"command": args.command, "spec_sha256": spec_hash(text), "seed": opts.seed}
        write_outputs(results, out, fmt, opts, metadata)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleDistortion as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (_IOFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not all(r.converged for r in results):
        print("warning: some slopes hit max-iter before converging", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def main(argv=None):
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
