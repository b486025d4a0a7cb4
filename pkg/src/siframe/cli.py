"""Command-line interface.

Subcommands: analyze, dual, reconstruct, oracle, diagnose-scaling,
corpus.  Exit codes: 0 when the run completed and the frame verdict is
positive, 2 when it completed with a negative verdict, 1 on error.
Reports are JSON (or flat CSV); with ``--stable`` the output is
byte-identical across runs of the same configuration and seed.
``SIFRAME_THREADS`` caps BLAS/FFT thread pools.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from importlib import resources

import numpy as np

from . import fileio
from .corpus import corpus_build, corpus_list
from .duality import dual_generators, random_coefficients, reconstruct, \
    scaling_limit_diagnostic
from .errors import SiframeError
from .fiberization import FrequencyGrid, default_truncation
from .grids import subtract_fields
from .lattice_ops import synthesize
from .mixed_norms import Lpq_norm
from .report import run_analyze, run_oracle

_CORPUS_ARGS = ("order", "sigma", "cutoff", "base", "shift")


def _parse_step(text):
    """Grid step given as a float or a fraction like 1/64."""
    return float(Fraction(text))


def _parse_shift(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected integers like 1,0") from None


def _parse_fibers(text):
    try:
        n1, n2 = text.lower().split("x")
        return int(n1), int(n2)
    except ValueError:
        raise argparse.ArgumentTypeError("expected N1xN2, e.g. 128x8") from None


def _emit(payload, args):
    if getattr(args, "format", "json") == "csv":
        lines = []

        def flat(prefix, obj):
            if isinstance(obj, dict):
                for k in sorted(obj):
                    flat(f"{prefix}{k}." if prefix else f"{k}.", obj[k])
            elif isinstance(obj, (list, tuple)):
                for i, v in enumerate(obj):
                    flat(f"{prefix}{i}.", v)
            else:
                lines.append(f"{prefix[:-1]},{obj}")

        flat("", payload)
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config_from_args(args):
    cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg.update(json.load(fh))
    for key in ("corpus", "d", "p", "q", "J", "rank_tol", "trials", "seed"):
        v = getattr(args, key.replace("-", "_"), None)
        if v is not None:
            cfg[key] = v
    if args.h is not None:
        cfg["h"] = args.h
    if args.fibers is not None:
        cfg["n1"], cfg["n2"] = args.fibers
    if args.stable:
        cfg["stable"] = True
    for key in _CORPUS_ARGS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def _add_common(sp):
    sp.add_argument("--config", help="JSON config file (flags override)")
    sp.add_argument("--corpus", help="corpus generator name")
    sp.add_argument("--d", type=int, help="spatial dimension")
    sp.add_argument("--h", type=_parse_step, help="grid step (float or 1/64)")
    sp.add_argument("--p", help="time exponent (number or inf)")
    sp.add_argument("--q", help="spatial exponent (number or inf)")
    sp.add_argument("--fibers", type=_parse_fibers, help="frequency nodes N1xN2")
    sp.add_argument("--J", type=int, help="periodization truncation radius")
    sp.add_argument("--rank-tol", dest="rank_tol", type=float)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output path (default stdout)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--stable", action="store_true",
                    help="omit timestamps for byte-identical reports")
    sp.add_argument("--order", type=int, help="spline order (bspline corpus)")
    sp.add_argument("--sigma", type=float, help="gaussian width")
    sp.add_argument("--cutoff", type=int, help="gaussian truncation radius")
    sp.add_argument("--base", help="shifted_pair base entry")
    sp.add_argument("--shift", type=_parse_shift,
                    help="shifted_pair lattice shift, e.g. 1,0")


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="siframe",
        description="Frame analysis for shift-invariant spaces in mixed norms",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze", help="full pipeline report")
    _add_common(sp)

    sp = sub.add_parser("dual", help="construct and save dual generators")
    _add_common(sp)
    sp.add_argument("--dual-out", required=True,
                    help="path prefix for the dual system files")

    sp = sub.add_parser("reconstruct", help="reconstruction error check")
    _add_common(sp)
    sp.add_argument("--taps", type=int, default=50)

    sp = sub.add_parser("oracle", help="finite-group equivalence verdict")
    sp.add_argument("--scenario", required=True,
                    help="bundled name (delta, diff-filter, random-20) or path")
    sp.add_argument("--rank-tol", dest="rank_tol", type=float)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("diagnose-scaling", help="dyadic scaling diagnostic")
    _add_common(sp)
    sp.add_argument("--n-max", dest="n_max", type=int, default=10)

    sp = sub.add_parser("corpus", help="list or emit corpus generators")
    sp.add_argument("action", choices=("list", "emit"))
    sp.add_argument("--name")
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--h", type=_parse_step, default=1.0 / 32)
    sp.add_argument("--order", type=int)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--cutoff", type=int)
    sp.add_argument("--base")
    sp.add_argument("--shift", type=_parse_shift)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


def _corpus_params(args):
    return {
        k: getattr(args, k)
        for k in ("order", "sigma", "cutoff", "base", "shift")
        if getattr(args, k, None) is not None
    }


def _cmd_analyze(args):
    report = run_analyze(_config_from_args(args))
    _emit(report.to_dict(), args)
    return 0 if report.verdict else 2


def _cmd_dual(args):
    cfg = _config_from_args(args)
    system = corpus_build(
        cfg.get("corpus", "box"), d=cfg.get("d", 1), h=cfg.get("h", 1.0 / 32),
        **{k: cfg[k] for k in _CORPUS_ARGS if k in cfg}
    )
    J = cfg.get("J") or default_truncation(system)
    freq = FrequencyGrid(system.d, cfg.get("n1", 64), cfg.get("n2", 4), J)
    dual = dual_generators(system, freq, cfg.get("rank_tol", 1e-8))
    fileio.save_dual(dual, args.dual_out)
    _emit(
        {
            "construction": dual.construction,
            "residual": dual.residual,
            "tail_mass": dual.tail_mass,
            "k0": dual.k0,
            "files": args.dual_out + ".json",
        },
        args,
    )
    return 0


def _cmd_reconstruct(args):
    cfg = _config_from_args(args)
    system = corpus_build(
        cfg.get("corpus", "bspline"), d=cfg.get("d", 1), h=cfg.get("h", 1.0 / 32),
        **{k: cfg[k] for k in _CORPUS_ARGS if k in cfg}
    )
    J = cfg.get("J") or default_truncation(system)
    freq = FrequencyGrid(system.d, cfg.get("n1", 64), cfg.get("n2", 4), J)
    dual = dual_generators(system, freq, cfg.get("rank_tol", 1e-8))
    rng = np.random.default_rng(cfg.get("seed", 0))
    coeffs = random_coefficients(rng, system.r, system.d, taps=args.taps)
    f = synthesize(system, coeffs)
    g = reconstruct(f, system, dual)
    err = Lpq_norm(subtract_fields(g, f), (2, 2)) / Lpq_norm(f, (2, 2))
    _emit({"relative_error_22": err, "taps": args.taps,
           "residual": dual.residual}, args)
    return 0


def _scenario_path(name):
    if os.path.exists(name):
        return name
    ref = resources.files("siframe") / "scenarios" / f"{name}.json"
    if ref.is_file():
        return str(ref)
    raise SiframeError(f"no scenario named {name!r}")


def _cmd_oracle(args):
    path = _scenario_path(args.scenario)
    with open(path, "r", encoding="utf-8") as fh:
        scenario = json.load(fh)
    if args.rank_tol is not None:
        scenario["rank_tol"] = args.rank_tol
    result = run_oracle(scenario)
    _emit(result, args)
    return 0 if result["frame"] else 2


def _cmd_diagnose(args):
    cfg = _config_from_args(args)
    system = corpus_build(
        cfg.get("corpus", "diff_filtered_box"), d=cfg.get("d", 1),
        h=cfg.get("h", 1.0 / 8),
        **{k: cfg[k] for k in _CORPUS_ARGS if k in cfg}
    )
    diag = scaling_limit_diagnostic(system.generators[0], args.n_max)
    decayed = diag.values[-1] <= 1e-2 * diag.values[0]
    _emit(
        {
            "n": list(diag.n_values),
            "values": list(diag.values),
            "ratio": diag.ratio(),
            "decayed": bool(decayed),
        },
        args,
    )
    return 0 if decayed else 2


def _cmd_corpus(args):
    if args.action == "list":
        rows = [
            {"name": e.name, "params": e.params, "expected": e.expected}
            for e in corpus_list()
        ]
        _emit({"entries": rows}, args)
        return 0
    if not args.name or not args.out:
        raise SiframeError("corpus emit needs --name and --out")
    system = corpus_build(args.name, d=args.d, h=args.h, **_corpus_params(args))
    fileio.save_system(system, args.out)
    sys.stdout.write(f"wrote {args.out}.json\n")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    threads = os.environ.get("SIFRAME_THREADS")
    commands = {
        "analyze": _cmd_analyze,
        "dual": _cmd_dual,
        "reconstruct": _cmd_reconstruct,
        "oracle": _cmd_oracle,
        "diagnose-scaling": _cmd_diagnose,
        "corpus": _cmd_corpus,
    }
    try:
        if threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=int(threads)):
                return commands[args.command](args)
        return commands[args.command](args)
    except SiframeError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
