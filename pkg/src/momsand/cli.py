"""Command-line surface: seeded experiments with machine-readable reports.

Every subcommand prints one JSON report to stdout (and to --out when given)
containing the tool version, the fully resolved configuration, and the
results.  Reports are byte-identical across reruns with the same config,
whatever MOMSAND_THREADS says, except for the wall_time_s field.

Subcommands:
  moments         moment table for a distribution spec
  certify         fit hypothesis certificates and derive the constants
  verify          run the sandwich comparison over coefficient draws
  riesz           torus norms and the probabilistic comparison
  perpetuity      partial-sum bracket for an (X, B) pair
  counterexample  signed-factor ratio blow-up report

Exit codes: 0 all passed, 1 a verification verdict failed, 2 usage or
parsing error, 3 a hypothesis could not be certified (degeneracy).

Config files are JSON objects whose keys mirror the flag names with
underscores (e.g. {"dist": "uniform:lo=0,hi=2", "p": 0.5}); explicit flags
win over config values.  The resolved config embedded in each report can be
fed back via --config to reproduce the run.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from . import __version__
from . import dist_core as dc
from . import montecarlo as mc
from .assumptions import (
    PairSpec,
    check_pair_nondegeneracy,
    fit_large_p,
    fit_small_p,
    verify_large_p,
    verify_small_p,
)
from .constants import optimize_large_p, optimize_small_p
from .errors import (
    ChainLengthMismatchError,
    DegenerateModulusError,
    DegenerateZeroError,
    EmptyWindowError,
    EnumerationTooLargeError,
    InvalidOrderError,
    KTooLargeError,
    NonfiniteMomentError,
    NotIncreasingError,
    NotLacunaryError,
    NotNormalizedError,
    NoValidQError,
    TooFewPointsError,
)
from .riesz import (
    LacunarySequence,
    RieszCombination,
    check_lacunary,
    corollary_check,
    corollary_ratio_scan,
    riesz_lp_norm,
)

_USAGE_ERRORS = (
    ValueError,
    OSError,
    json.JSONDecodeError,
    InvalidOrderError,
    DegenerateZeroError,
    NonfiniteMomentError,
    EnumerationTooLargeError,
    TooFewPointsError,
    ChainLengthMismatchError,
    NotIncreasingError,
)
_HYPOTHESIS_ERRORS = (
    DegenerateModulusError,
    EmptyWindowError,
    NoValidQError,
    KTooLargeError,
    NotLacunaryError,
    NotNormalizedError,
)

_DEFAULTS = {
    ("moments", "q"): "1,2",
    ("verify", "reps"): 50_000,
    ("verify", "seed"): 0,
    ("verify", "norm"): "l2",
    ("verify", "dim"): 1,
    ("counterexample", "n"): 100,
    ("counterexample", "p"): 4.0,
    ("counterexample", "reps"): 100_000,
    ("counterexample", "seed"): 0,
    ("riesz", "reps"): 200_000,
    ("riesz", "seed"): 0,
    ("perpetuity", "reps"): 50_000,
    ("perpetuity", "seed"): 0,
    ("perpetuity", "norm"): "l2",
    ("perpetuity", "coupling"): "independent",
    ("perpetuity", "p"): 1.0,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momsand",
        description="numerical laboratory for two-sided moment bounds on sums of products",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--out", help="also write the JSON report to this path")
        sp.add_argument("--seed", type=int, help="base seed for all streams")
        sp.add_argument("--reps", type=int, help="Monte Carlo replications")

    sp = sub.add_parser("moments", help="moment table for a distribution spec")
    common(sp)
    sp.add_argument("--dist", help="distribution spec, e.g. twopoint:a=0.5,b=1.5,pa=0.5")
    sp.add_argument("--q", help="comma list of moment orders")

    sp = sub.add_parser("certify", help="fit certificates and derive constants")
    common(sp)
    sp.add_argument("--dist")
    sp.add_argument("--p", type=float)
    sp.add_argument("--grid-a", dest="grid_a", help="comma list of truncation levels A")
    sp.add_argument("--grid-q", dest="grid_q", help="comma list of moment orders q")

    sp = sub.add_parser("verify", help="sandwich comparison over coefficient draws")
    common(sp)
    sp.add_argument("--dist")
    sp.add_argument("--p", type=float)
    sp.add_argument("--n", type=int, help="number of product factors")
    sp.add_argument("--dim", type=int, help="coefficient dimension d")
    sp.add_argument("--norm", choices=mc.NORM_KINDS)
    sp.add_argument(
        "--coeffs",
        help="explicit '1,-1,1' or '1,0;0,1' vectors, or random:count=K,scale=S",
    )
    sp.add_argument("--grid-a", dest="grid_a")
    sp.add_argument("--grid-q", dest="grid_q")
    sp.add_argument("--csv", help="dump per-replication samples of the first draw")

    sp = sub.add_parser("riesz", help="torus norms vs the probabilistic model")
    common(sp)
    sp.add_argument("--seq", help="comma list of increasing frequencies")
    sp.add_argument("--p", type=float)
    sp.add_argument("--term", type=int, help="single product index i")
    sp.add_argument("--coeffs", help="comma list a0,a1,...")
    sp.add_argument("--draws", type=int, help="random coefficient draws to scan")
    sp.add_argument("--quad-points", dest="quad_points", type=int)

    sp = sub.add_parser("perpetuity", help="partial-sum bracket for an (X, B) pair")
    common(sp)
    sp.add_argument("--dist", help="X law (nonnegative)")
    sp.add_argument("--b-dist", dest="b_dist", action="append", help="B component law (repeatable)")
    sp.add_argument("--coupling", choices=("independent", "comonotone-scalar"))
    sp.add_argument("--p", type=float)
    sp.add_argument("--n-list", dest="n_list", help="comma list of horizons n")
    sp.add_argument("--norm", choices=mc.NORM_KINDS)
    sp.add_argument("--grid-a", dest="grid_a")
    sp.add_argument("--grid-q", dest="grid_q")
    sp.add_argument(
        "--fixed-point-demo",
        dest="fixed_point_demo",
        action="store_true",
        default=None,
        help="run the degenerate pair X=0.5, B=1 whose bracket must fail",
    )

    sp = sub.add_parser("counterexample", help="signed-factor ratio blow-up")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float)

    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ValueError("config file must hold a JSON object")
    dests = sorted(
        k for k in vars(args) if k not in ("command", "config")
    )
    unknown = set(cfg) - set(dests) - {"command", "config"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    resolved = {"command": args.command}
    for dest in dests:
        value = getattr(args, dest)
        if value is None:
            value = cfg.get(dest)
        if value is None:
            value = _DEFAULTS.get((args.command, dest))
        resolved[dest] = value
    return resolved


def _require(resolved: dict, key: str):
    value = resolved.get(key)
    if value is None:
        raise ValueError(f"--{key.replace('_', '-')} is required for {resolved['command']}")
    return value


def _float_list(text: str) -> list[float]:
    return [float(part) for part in str(text).split(",") if part.strip() != ""]


def _int_list(text: str) -> list[int]:
    return [int(part) for part in str(text).split(",") if part.strip() != ""]


def _grid(resolved: dict, key: str):
    raw = resolved.get(key)
    return tuple(_float_list(raw)) if raw is not None else None


def _coefficient_sets(resolved: dict) -> list[mc.CoefficientSet]:
    text = resolved.get("coeffs")
    norm = resolved.get("norm") or "l2"
    seed = int(resolved.get("seed") or 0)
    if text and str(text).startswith("random:"):
        params = {}
        body = str(text)[len("random:"):]
        for item in body.split(","):
            if not item:
                continue
            key, _, val = item.partition("=")
            params[key.strip()] = val.strip()
        extra = set(params) - {"count", "scale", "seed"}
        if extra:
            raise ValueError(f"unknown random coefficient options: {sorted(extra)}")
        count = int(params.get("count", 20))
        scale = float(params.get("scale", 1.0))
        cseed = int(params.get("seed", seed))
        n = _require(resolved, "n")
        dim = int(resolved.get("dim") or 1)
        sets = []
        for d in range(count):
            gen = dc.RandomSource(cseed, 500 + d).generator()
            mat = scale * gen.standard_normal((int(n) + 1, dim))
            sets.append(
                mc.CoefficientSet(
                    tuple(tuple(float(x) for x in row) for row in mat), norm
                )
            )
        return sets
    if text:
        text = str(text)
        if ";" in text:
            rows = [
                tuple(float(x) for x in chunk.split(",")) for chunk in text.split(";")
            ]
        else:
            rows = [(float(x),) for x in text.split(",")]
        return [mc.CoefficientSet(tuple(rows), norm)]
    if resolved.get("n") is not None:
        resolved = dict(resolved)
        resolved["coeffs"] = "random:count=20,scale=1.0"
        return _coefficient_sets(resolved)
    raise ValueError("verify needs --coeffs or --n")


def _certify_pipeline(spec, p: float, resolved: dict):
    """Optimize the constants, then refit the certificate the winner used."""
    grid_a = _grid(resolved, "grid_a")
    grid_q = _grid(resolved, "grid_q")
    if p <= 1.0:
        bundle = optimize_small_p(spec, p, grid_a) if grid_a else optimize_small_p(spec, p)
        best_a = bundle.trace[-1]["value"]
        cert = fit_small_p(spec, p, a_param=best_a)
        recheck = verify_small_p(spec, cert)
    else:
        kwargs = {}
        if grid_a:
            kwargs["a_grid"] = grid_a
        if grid_q:
            kwargs["q_grid"] = grid_q
        bundle = optimize_large_p(spec, p, **kwargs)
        best_a, best_q = bundle.trace[-1]["value"]
        cert = fit_large_p(spec, p, q_grid=[best_q], a_grid=[best_a])
        recheck = verify_large_p(spec, cert)
    return bundle, cert, recheck


def cmd_moments(resolved: dict):
    spec = dc.parse_spec(_require(resolved, "dist"))
    qs = _float_list(resolved["q"])
    table = [dc.abs_moment(spec, q) for q in qs]
    return {"table": table}, 0


def cmd_certify(resolved: dict):
    spec0 = dc.parse_spec(_require(resolved, "dist"))
    p = float(_require(resolved, "p"))
    spec, scale = dc.normalize_unit_p_moment(spec0, p)
    bundle, cert, recheck = _certify_pipeline(spec, p, resolved)
    results = {
        "normalized_spec": dc.spec_to_text(spec),
        "normalization_scale": scale,
        "certificate": cert,
        "bundle": bundle,
        "recheck": recheck,
    }
    return results, 0


def cmd_verify(resolved: dict):
    spec0 = dc.parse_spec(_require(resolved, "dist"))
    p = float(_require(resolved, "p"))
    reps = int(resolved["reps"])
    seed = int(resolved["seed"])
    spec, scale = dc.normalize_unit_p_moment(spec0, p)
    src = dc.RandomSource(seed, 0)
    try:
        bundle, cert, recheck = _certify_pipeline(spec, p, resolved)
    except DegenerateModulusError as exc:
        # No certificate can exist; report the ratio blow-up that explains why.
        n = int(resolved.get("n") or 100)
        ce = mc.khintchine_counterexample(n, p, reps, src, spec=spec)
        results = {
            "normalized_spec": dc.spec_to_text(spec),
            "degenerate": str(exc),
            "counterexample": ce,
            "verdict": mc.FAIL,
            "note": "no two-sided comparison holds for a degenerate |X|",
        }
        return results, 1
    sets = _coefficient_sets(resolved)
    rows = []
    any_fail = False
    all_pass = True
    for d, coeffs in enumerate(sets):
        rep = mc.run_sandwich(spec, p, coeffs, bundle, reps, src.child(600 + d))
        rows.append({"coefficients": list(coeffs.vectors), "report": rep})
        any_fail = any_fail or rep.verdict == mc.FAIL
        all_pass = all_pass and rep.verdict == mc.PASS
    if resolved.get("csv"):
        mc.estimate_lhs(spec, sets[0], p, reps, src.child(700), csv_path=resolved["csv"])
    ratios = [row["report"].ratio for row in rows]
    results = {
        "normalized_spec": dc.spec_to_text(spec),
        "normalization_scale": scale,
        "certificate": cert,
        "bundle": bundle,
        "recheck": recheck,
        "draws": len(rows),
        "reports": rows,
        "min_ratio": min(ratios),
        "max_ratio": max(ratios),
        "all_pass": all_pass,
    }
    return results, 1 if any_fail else 0


def cmd_riesz(resolved: dict):
    seq = LacunarySequence(tuple(_int_list(_require(resolved, "seq"))))
    p = float(_require(resolved, "p"))
    reps = int(resolved["reps"])
    seed = int(resolved["seed"])
    quad_points = resolved.get("quad_points")
    quad_points = int(quad_points) if quad_points is not None else None
    src = dc.RandomSource(seed, 0)
    lac = check_lacunary(seq)
    if resolved.get("term") is not None:
        i = int(resolved["term"])
        comb = RieszCombination(seq, (0.0,) * i + (1.0,))
        torus = riesz_lp_norm(comb, p, quad_points)
        factor_p = dc.abs_moment(dc.riesz_factor(), p).value
        results = {
            "lacunary": lac,
            "term": i,
            "torus": torus,
            "probabilistic_exact": factor_p**i,
        }
        return results, 0
    if resolved.get("coeffs") is not None:
        comb = RieszCombination(seq, tuple(_float_list(resolved["coeffs"])))
        report = corollary_check(comb, p, reps, src, quad_points)
        return {"lacunary": lac, "check": report}, 0
    if resolved.get("draws") is not None:
        scan = corollary_ratio_scan(seq, p, int(resolved["draws"]), reps, src, quad_points)
        return {"lacunary": lac, "scan": scan}, 0
    raise ValueError("riesz needs one of --term, --coeffs, --draws")


def cmd_perpetuity(resolved: dict):
    p = float(_require(resolved, "p"))
    reps = int(resolved["reps"])
    seed = int(resolved["seed"])
    norm = resolved.get("norm") or "l2"
    src = dc.RandomSource(seed, 0)
    if resolved.get("fixed_point_demo"):
        pair = PairSpec(
            x_spec=dc.finitely_supported([(0.5, 1.0)]),
            b_specs=(dc.finitely_supported([(1.0, 1.0)]),),
            coupling="independent",
            norm=norm,
        )
        n_list = _int_list(resolved.get("n_list") or "1,2,4,8,16,32,64")
        rows = mc.goldie_bracket(
            pair, p, n_list, (0.05, 10.0), reps, src, require_normalized=False
        )
        middles = [row.middle.mean for row in rows]
        closed = [(2.0 * (1.0 - 0.5**n)) ** p / n for n in n_list]
        decreasing = all(a > b for a, b in zip(middles, middles[1:]))
        demo_ok = decreasing and rows[-1].verdict == mc.FAIL
        results = {
            "pair": {"x": "finite:atoms=0.5@1", "b": ["finite:atoms=1@1"]},
            "bracket": (0.05, 10.0),
            "rows": rows,
            "closed_form": closed,
            "demonstrated": demo_ok,
            "note": "X has a fixed point Xv+B = v at v = 2, so (1/n)E|S_n|^p "
            "sinks below any positive lower edge",
        }
        return results, 0 if demo_ok else 1
    x0 = dc.parse_spec(_require(resolved, "dist"))
    b_texts = resolved.get("b_dist") or []
    if not b_texts:
        raise ValueError("perpetuity needs at least one --b-dist")
    b_specs = tuple(dc.parse_spec(t) for t in b_texts)
    x_spec, scale = dc.normalize_unit_p_moment(x0, p)
    pair = PairSpec(
        x_spec=x_spec,
        b_specs=b_specs,
        coupling=resolved["coupling"],
        norm=norm,
    )
    nondeg = check_pair_nondegeneracy(pair, 10_000, src.child(50))
    bundle, cert, recheck = _certify_pipeline(x_spec, p, resolved)
    handle = (bundle, cert) if pair.coupling == "comonotone-scalar" else bundle
    n_list = _int_list(resolved.get("n_list") or "1,2,3,4,5,6")
    rows = mc.goldie_bracket(pair, p, n_list, handle, reps, src.child(1))
    any_fail = any(row.verdict == mc.FAIL for row in rows)
    results = {
        "normalized_x": dc.spec_to_text(x_spec),
        "normalization_scale": scale,
        "nondegeneracy": nondeg,
        "certificate": cert,
        "bundle": bundle,
        "recheck": recheck,
        "rows": rows,
    }
    return results, 1 if any_fail else 0


def cmd_counterexample(resolved: dict):
    n = int(resolved["n"])
    p = float(resolved["p"])
    reps = int(resolved["reps"])
    src = dc.RandomSource(int(resolved["seed"]), 0)
    report = mc.khintchine_counterexample(n, p, reps, src)
    return {"counterexample": report}, 0


_DISPATCH = {
    "moments": cmd_moments,
    "certify": cmd_certify,
    "verify": cmd_verify,
    "riesz": cmd_riesz,
    "perpetuity": cmd_perpetuity,
    "counterexample": cmd_counterexample,
}


def _encode(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        resolved = _resolve_config(args)
        results, code = _DISPATCH[args.command](resolved)
    except _HYPOTHESIS_ERRORS as exc:
        print(f"hypothesis error: {exc}", file=sys.stderr)
        return 3
    except _USAGE_ERRORS as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    report = {
        "tool": "momsand",
        "version": __version__,
        "command": args.command,
        "config": resolved,
        "results": results,
        "wall_time_s": time.perf_counter() - t0,
    }
    text = json.dumps(report, indent=2, sort_keys=True, default=_encode)
    print(text)
    if resolved.get("out"):
        with open(resolved["out"], "w") as fh:
            fh.write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
