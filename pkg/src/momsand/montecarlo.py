"""Monte Carlo and exact-enumeration engines for the moment sandwich.

The quantity under study is E || sum_i v_i R_i ||^p where R_0 = 1 and
R_i = X_1 ... X_i is a product of i.i.d. factors.  Three engines coexist:

  * estimate_lhs: seeded Monte Carlo over independent product paths, with a
    3-sigma confidence interval,
  * brute_force_lhs: exact enumeration of all s^n outcomes of a finite-
    support factor law (the oracle the estimators are judged against),
  * rhs_sum: the comparison sum  sum_i ||v_i||^p (E|X|^p)^i  from the moment
    oracle.

Determinism contract: a report depends only on (seed, stream, reps), never
on the worker count.  Replications are cut into fixed blocks of 4096; block
j draws from the counter-offset generator RandomSource.generator(block=j),
blocks are concatenated in index order, and reductions use numpy's pairwise
summation on the assembled array.  The coefficient contraction is an
explicit loop over the n+1 vectors (elementwise kernels only) so that BLAS
threading cannot reorder floating-point sums.

Enumeration walks outcomes lexicographically by factor index, factor 1 most
significant, multiplying probabilities in index order; above 1e5 outcomes
the walk is split by prefix so peak memory stays bounded.

The same machinery covers perpetuity partial sums S_n = sum_i R_{i-1} B_i
driven by an i.i.d. pair (X, B) under the couplings PairSpec declares, the
bracket (1/n) E||S_n||^p vs lower_c/upper_C multiples of E||B||^p, and the
classical signed counterexample showing why a degenerate |X| breaks any
two-sided comparison.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import dist_core as dc
from ._pool import map_indexed
from .assumptions import (
    LargePCertificate,
    PairSpec,
    SmallPCertificate,
    draw_pair,
)
from .constants import (
    LARGE_P,
    SMALL_P,
    ConstantBundle,
    lower_constant_large_p,
    lower_constant_small_p,
)
from .errors import ChainLengthMismatchError, EnumerationTooLargeError, NotNormalizedError

CHUNK = 4096
ENUM_CAP = 10**7
ENUM_BLOCK = 10**5
PERP_CAP = 10**6
MIN_REPS = 10**3

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

NORM_KINDS = ("l1", "l2", "sup")


@dataclass(frozen=True)
class CoefficientSet:
    """Vectors v_0 .. v_n in R^d plus the norm the sum is measured in."""

    vectors: tuple[tuple[float, ...], ...]
    norm: str = "l2"

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("need at least v_0")
        dims = {len(v) for v in self.vectors}
        if len(dims) != 1 or 0 in dims:
            raise ValueError("all vectors must share one dimension d >= 1")
        if self.norm not in NORM_KINDS:
            raise ValueError(f"unknown norm {self.norm!r}")

    @property
    def dim(self) -> int:
        return len(self.vectors[0])

    @property
    def n(self) -> int:
        return len(self.vectors) - 1

    def matrix(self) -> np.ndarray:
        return np.asarray(self.vectors, dtype=float)


def coefficient_set(vectors, norm: str = "l2") -> CoefficientSet:
    """Build a CoefficientSet from scalars or vectors."""
    rows = []
    for v in vectors:
        if np.isscalar(v):
            rows.append((float(v),))
        else:
            rows.append(tuple(float(c) for c in v))
    return CoefficientSet(vectors=tuple(rows), norm=norm)


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    std_error: float
    replications: int
    seed: int | None
    exact: bool


@dataclass(frozen=True)
class SandwichReport:
    lhs: EstimateWithCI
    rhs_sum: float
    bundle: ConstantBundle
    verdict: str
    ratio: float


@dataclass(frozen=True)
class GoldieBracketRow:
    n: int
    lower_edge: float
    middle: EstimateWithCI
    upper_edge: float
    b_moment: EstimateWithCI
    verdict: str
    lower_certified: bool
    exact: bool


def holder_norm(points: np.ndarray, kind: str) -> np.ndarray:
    """Row norms of an (m, d) array without BLAS reductions."""
    a = np.abs(points)
    if kind == "l1":
        return a.sum(axis=1)
    if kind == "l2":
        return np.sqrt((a * a).sum(axis=1))
    if kind == "sup":
        return a.max(axis=1)
    raise ValueError(f"unknown norm {kind!r}")


def _vector_norm(vec, kind: str) -> float:
    return float(holder_norm(np.asarray([vec], dtype=float), kind)[0])


def _write_csv(path: str, values: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("rep,value\n")
        for r, v in enumerate(values):
            fh.write(f"{r},{float(v)!r}\n")


def _stats(values: np.ndarray, reps: int, seed: int | None) -> EstimateWithCI:
    mean = float(np.mean(values))
    if reps > 1:
        se = math.sqrt(float(np.var(values, ddof=1)) / reps)
    else:
        se = 0.0
    return EstimateWithCI(mean=mean, std_error=se, replications=reps, seed=seed, exact=False)


def estimate_lhs(
    spec: dc.DistributionSpec,
    coeffs: CoefficientSet,
    p: float,
    reps: int,
    src: dc.RandomSource,
    csv_path: str | None = None,
) -> EstimateWithCI:
    """Monte Carlo mean of ||sum_i v_i R_i||^p over independent paths."""
    if p <= 0.0:
        raise ValueError("p must be positive")
    if reps < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} replications, got {reps}")
    n = coeffs.n
    if n == 0:
        value = _vector_norm(coeffs.vectors[0], coeffs.norm) ** p
        return EstimateWithCI(
            mean=value, std_error=0.0, replications=0, seed=src.seed, exact=True
        )

    vmat = coeffs.matrix()
    blocks = []
    start = 0
    j = 0
    while start < reps:
        m = min(CHUNK, reps - start)
        blocks.append((j, m))
        start += m
        j += 1

    def run_block(block) -> np.ndarray:
        idx, m = block
        gen = src.generator(block=idx)
        draws = dc.sample(spec, (m, n), gen)
        prods = np.cumprod(draws, axis=1)
        acc = np.tile(vmat[0], (m, 1))
        for i in range(1, n + 1):
            acc = acc + prods[:, i - 1][:, None] * vmat[i][None, :]
        return holder_norm(acc, coeffs.norm) ** p

    values = np.concatenate(map_indexed(run_block, blocks))
    if csv_path is not None:
        _write_csv(csv_path, values)
    return _stats(values, reps, src.seed)


# ---------------------------------------------------------------------------
# exact enumeration


def _grow_paths(svals, sprobs, vmat, start, stop, acc0, r0, p0):
    """Extend partial paths through factors start..stop, lexicographic order."""
    acc = np.atleast_2d(np.asarray(acc0, dtype=float))
    r = np.atleast_1d(np.asarray(r0, dtype=float))
    pr = np.atleast_1d(np.asarray(p0, dtype=float))
    s = len(svals)
    for i in range(start, stop + 1):
        r = (r[:, None] * svals[None, :]).ravel()
        pr = (pr[:, None] * sprobs[None, :]).ravel()
        acc = np.repeat(acc, s, axis=0) + r[:, None] * vmat[i][None, :]
    return acc, r, pr


def _enum_blocks(spec: dc.DistributionSpec, coeffs: CoefficientSet, p: float):
    """Yield (values, probs) blocks of the outcome distribution, in order."""
    support = dc.finite_support(spec)
    if support is None:
        raise ValueError("enumeration needs a finite-support factor law")
    svals, sprobs = support
    s = len(svals)
    n = coeffs.n
    total = s**n
    if total > ENUM_CAP:
        raise EnumerationTooLargeError(
            f"support^factors = {s}^{n} = {total} exceeds the 1e7 cap"
        )
    vmat = coeffs.matrix()
    if n == 0:
        yield (
            np.asarray([_vector_norm(coeffs.vectors[0], coeffs.norm) ** p]),
            np.asarray([1.0]),
        )
        return
    prefix_len = 0
    while s ** (n - prefix_len) > ENUM_BLOCK:
        prefix_len += 1
    if prefix_len == 0:
        acc, _, pr = _grow_paths(svals, sprobs, vmat, 1, n, vmat[0], 1.0, 1.0)
        yield holder_norm(acc, coeffs.norm) ** p, pr
        return
    for combo in itertools.product(range(s), repeat=prefix_len):
        acc0 = np.array(vmat[0], dtype=float)
        r0 = 1.0
        p0 = 1.0
        for i, jdx in enumerate(combo, start=1):
            r0 = r0 * float(svals[jdx])
            p0 = p0 * float(sprobs[jdx])
            acc0 = acc0 + r0 * vmat[i]
        acc, _, pr = _grow_paths(svals, sprobs, vmat, prefix_len + 1, n, acc0, r0, p0)
        yield holder_norm(acc, coeffs.norm) ** p, pr


def enumerate_lhs_distribution(spec, coeffs: CoefficientSet, p: float):
    """Full outcome distribution (values of ||sum v_i R_i||^p, probabilities)."""
    vals = []
    probs = []
    for v, pr in _enum_blocks(spec, coeffs, p):
        vals.append(v)
        probs.append(pr)
    return np.concatenate(vals), np.concatenate(probs)


def brute_force_lhs(spec, coeffs: CoefficientSet, p: float) -> EstimateWithCI:
    """Exact E||sum v_i R_i||^p by weighted enumeration."""
    if p <= 0.0:
        raise ValueError("p must be positive")
    partial = []
    count = 0
    for v, pr in _enum_blocks(spec, coeffs, p):
        partial.append(float(np.sum(v * pr)))
        count += len(v)
    return EstimateWithCI(
        mean=math.fsum(partial),
        std_error=0.0,
        replications=count,
        seed=None,
        exact=True,
    )


def rhs_sum(spec, coeffs: CoefficientSet, p: float) -> float:
    """sum_i ||v_i||^p (E|X|^p)^i with the exact moment oracle."""
    mp = dc.abs_moment(spec, p).value
    terms = [
        _vector_norm(v, coeffs.norm) ** p * mp**i for i, v in enumerate(coeffs.vectors)
    ]
    return math.fsum(terms)


def _bracket_verdict(ci_lo, ci_hi, lo_edge, hi_edge, check_lower=True):
    if (ci_lo >= lo_edge or not check_lower) and ci_hi <= hi_edge:
        return PASS
    if ci_hi < lo_edge and check_lower:
        return FAIL
    if ci_lo > hi_edge:
        return FAIL
    return INCONCLUSIVE


def run_sandwich(
    spec: dc.DistributionSpec,
    p: float,
    coeffs: CoefficientSet,
    bundle: ConstantBundle,
    reps: int,
    src: dc.RandomSource,
) -> SandwichReport:
    """Compare the (estimated or exact) LHS against the certified bracket."""
    if bundle.regime == SMALL_P and not p <= 1.0:
        raise ValueError("SmallP bundle used with p > 1")
    if bundle.regime == LARGE_P and not p > 1.0:
        raise ValueError("LargeP bundle used with p <= 1")
    support = dc.finite_support(spec)
    if support is not None and len(support[0]) ** coeffs.n <= ENUM_CAP:
        lhs = brute_force_lhs(spec, coeffs, p)
    else:
        lhs = estimate_lhs(spec, coeffs, p, reps, src)
    rhs = rhs_sum(spec, coeffs, p)
    tol = 1e-9 * rhs
    lo_edge = bundle.lower_c * rhs - tol
    hi_edge = bundle.upper_C * rhs + tol
    ci_lo = lhs.mean - 3.0 * lhs.std_error
    ci_hi = lhs.mean + 3.0 * lhs.std_error
    verdict = _bracket_verdict(ci_lo, ci_hi, lo_edge, hi_edge)
    ratio = lhs.mean / rhs if rhs > 0.0 else math.nan
    return SandwichReport(lhs=lhs, rhs_sum=rhs, bundle=bundle, verdict=verdict, ratio=ratio)


def khintchine_counterexample(
    n: int, p: float, reps: int, src: dc.RandomSource, spec: dc.DistributionSpec | None = None
) -> dict:
    """Ratio E|R_1 + ... + R_n|^p / n for sign factors.

    Products of independent signs are again independent signs, so the sum
    behaves like a signed random walk: for p > 2 the ratio grows without
    bound, which is exactly what a degenerate |X| (lambda = 1, mu = 0) does
    to any would-be two-sided comparison.  Pass another degenerate-|X| spec
    to watch the same blow-up there.
    """
    if n < 1:
        raise ValueError("need n >= 1 summands")
    if spec is None:
        spec = dc.rademacher_sign()
    coeffs = coefficient_set([0.0] + [1.0] * n)
    support = dc.finite_support(spec)
    if support is not None and len(support[0]) ** n <= ENUM_CAP:
        lhs = brute_force_lhs(spec, coeffs, p)
    else:
        lhs = estimate_lhs(spec, coeffs, p, reps, src)
    rhs = rhs_sum(spec, coeffs, p)
    return {
        "n": n,
        "p": p,
        "lhs": lhs,
        "rhs_sum": rhs,
        "ratio": lhs.mean / rhs,
    }


# ---------------------------------------------------------------------------
# perpetuity partial sums


def perpetuity_lhs(
    pair: PairSpec,
    n: int,
    p: float,
    reps: int,
    src: dc.RandomSource,
    csv_path: str | None = None,
) -> EstimateWithCI:
    """Monte Carlo E||S_n||^p with S_n = sum_{i=1..n} R_{i-1} B_i."""
    if n < 1:
        raise ValueError("need n >= 1 terms")
    if p <= 0.0:
        raise ValueError("p must be positive")
    if reps < MIN_REPS:
        raise ValueError(f"need at least {MIN_REPS} replications, got {reps}")
    blocks = []
    start = 0
    j = 0
    while start < reps:
        m = min(CHUNK, reps - start)
        blocks.append((j, m))
        start += m
        j += 1

    def run_block(block) -> np.ndarray:
        idx, m = block
        gen = src.generator(block=idx)
        r = np.ones(m)
        acc = np.zeros((m, pair.dim))
        for _ in range(n):
            x, b = draw_pair(pair, m, gen)
            acc = acc + r[:, None] * b
            r = r * x
        return holder_norm(acc, pair.norm) ** p

    values = np.concatenate(map_indexed(run_block, blocks))
    if csv_path is not None:
        _write_csv(csv_path, values)
    return _stats(values, reps, src.seed)


def _pair_branches(pair: PairSpec):
    """Joint (x, B, prob) atoms of one step, or None if not finite."""
    xs = dc.finite_support(pair.x_spec)
    if xs is None:
        return None
    bs = [dc.finite_support(b) for b in pair.b_specs]
    if any(b is None for b in bs):
        return None
    if pair.coupling == "comonotone-scalar":
        xv, xp = xs
        bv, bp = bs[0]
        cuts = np.concatenate([[0.0], np.cumsum(xp)[:-1], np.cumsum(bp)[:-1], [1.0]])
        cuts = np.unique(cuts)
        widths = np.diff(cuts)
        keep = widths > 1e-15
        mids = ((cuts[:-1] + cuts[1:]) / 2.0)[keep]
        x = dc.quantile(pair.x_spec, mids)
        b = dc.quantile(pair.b_specs[0], mids)[:, None]
        return x, b, widths[keep]
    xv, xp = xs
    idx_grids = np.meshgrid(
        np.arange(len(xv)), *[np.arange(len(bv)) for bv, _ in bs], indexing="ij"
    )
    flat = [g.ravel() for g in idx_grids]
    x = xv[flat[0]]
    prob = xp[flat[0]].copy()
    cols = []
    for j, (bv, bp) in enumerate(bs):
        cols.append(bv[flat[j + 1]])
        prob *= bp[flat[j + 1]]
    return x, np.column_stack(cols), prob


def brute_force_perpetuity(pair: PairSpec, n: int, p: float) -> EstimateWithCI:
    """Exact E||S_n||^p by enumerating the joint step atoms."""
    if n < 1:
        raise ValueError("need n >= 1 terms")
    branches = _pair_branches(pair)
    if branches is None:
        raise ValueError("exact perpetuity needs finite-support X and B")
    xb, bb, pb = branches
    width = len(xb)
    if width**n > PERP_CAP:
        raise EnumerationTooLargeError(
            f"branching^steps = {width}^{n} exceeds the 1e6 cap"
        )
    r = np.ones(1)
    acc = np.zeros((1, pair.dim))
    pr = np.ones(1)
    for _ in range(n):
        m = len(r)
        r_rep = np.repeat(r, width)
        acc = np.repeat(acc, width, axis=0) + r_rep[:, None] * np.tile(bb, (m, 1))
        r = r_rep * np.tile(xb, m)
        pr = np.repeat(pr, width) * np.tile(pb, m)
    values = holder_norm(acc, pair.norm) ** p
    return EstimateWithCI(
        mean=float(np.sum(values * pr)),
        std_error=0.0,
        replications=len(values),
        seed=None,
        exact=True,
    )


def dependent_upper_constant(p: float, lambda_chain) -> float:
    """Upper constant for pairs where B may depend on X.

    Same descent as the independent recursion but the geometric tail starts
    at exponent zero, so the chain factor multiplies only the denominator:
    D(p) = 2^p (1 + D(p-1) / (1 - lambda_1^{p-1})), D(p) = 1 for p <= 1.
    """
    if p <= 0.0:
        raise ValueError("p must be positive")
    chain = tuple(float(x) for x in lambda_chain)
    need = max(math.ceil(p) - 1, 0)
    if len(chain) != need:
        raise ChainLengthMismatchError(
            f"chain length {len(chain)} != ceil(p)-1 = {need} for p = {p}"
        )
    if p <= 1.0:
        return 1.0
    if any(not (0.0 < lam < 1.0) for lam in chain):
        raise ValueError("chain ratios must lie strictly inside (0, 1)")
    rest = dependent_upper_constant(p - 1.0, chain[1:])
    return 2.0**p * (1.0 + rest / (1.0 - chain[0] ** (p - 1.0)))


def _b_norm_moment(
    pair: PairSpec, p: float, reps: int, src: dc.RandomSource
) -> EstimateWithCI:
    """E||B||^p: exact for finite or scalar B, Monte Carlo otherwise."""
    supports = [dc.finite_support(b) for b in pair.b_specs]
    if all(s is not None for s in supports):
        sizes = 1
        for s in supports:
            sizes *= len(s[0])
        if sizes <= PERP_CAP:
            grids = np.meshgrid(*[np.arange(len(s[0])) for s in supports], indexing="ij")
            flat = [g.ravel() for g in grids]
            cols = []
            prob = np.ones(sizes)
            for j, (bv, bp) in enumerate(supports):
                cols.append(bv[flat[j]])
                prob *= bp[flat[j]]
            values = holder_norm(np.column_stack(cols), pair.norm) ** p
            return EstimateWithCI(
                mean=float(np.sum(values * prob)),
                std_error=0.0,
                replications=sizes,
                seed=None,
                exact=True,
            )
    if pair.dim == 1:
        est = dc.abs_moment(pair.b_specs[0], p)
        return EstimateWithCI(
            mean=est.value, std_error=0.0, replications=0, seed=None, exact=True
        )
    gen = src.child(10_000).generator()
    _, b = draw_pair(pair, max(reps, MIN_REPS), gen)
    values = holder_norm(b, pair.norm) ** p
    return _stats(values, len(values), src.seed)


def _resolve_bracket_constants(pair: PairSpec, p: float, bundle_or_certs):
    """(lower_c, upper_C, lower_certified) for the declared coupling."""
    cert = None
    if isinstance(bundle_or_certs, tuple) and len(bundle_or_certs) == 2:
        first, second = bundle_or_certs
        if isinstance(first, ConstantBundle):
            bundle, cert = first, second
        else:
            lo, hi = float(first), float(second)
            return lo, hi, True
    elif isinstance(bundle_or_certs, ConstantBundle):
        bundle = bundle_or_certs
    elif isinstance(bundle_or_certs, SmallPCertificate):
        cert = bundle_or_certs
        bundle = lower_constant_small_p(cert)
    elif isinstance(bundle_or_certs, LargePCertificate):
        cert = bundle_or_certs
        bundle = lower_constant_large_p(cert)
    else:
        raise TypeError("pass a ConstantBundle, a certificate, or (lower, upper)")
    if pair.coupling == "independent":
        return bundle.lower_c, bundle.upper_C, True
    if p <= 1.0:
        return bundle.lower_c, 1.0, False
    if not isinstance(cert, LargePCertificate):
        raise ValueError(
            "dependent coupling with p > 1 needs the large-p certificate "
            "(its ratio chain feeds the dependent upper constant)"
        )
    return bundle.lower_c, dependent_upper_constant(p, cert.lam_chain), False


def goldie_bracket(
    pair: PairSpec,
    p: float,
    n_list,
    bundle_or_certs,
    reps: int,
    src: dc.RandomSource,
    require_normalized: bool = True,
) -> list[GoldieBracketRow]:
    """Bracket (1/n) E||S_n||^p between lower_c and upper_C times E||B||^p.

    The comparison presumes E X^p = 1 so that sum_i E R_{i-1}^p = n; pass
    require_normalized=False only to demonstrate how the bracket fails
    without that normalization (the fixed-point degeneracy).
    """
    if require_normalized:
        mp = dc.abs_moment(pair.x_spec, p).value
        if abs(mp - 1.0) > 1e-9:
            raise NotNormalizedError(
                f"pair has E X^p = {mp!r}; normalize X or pass require_normalized=False"
            )
    lower_c, upper_c, lower_certified = _resolve_bracket_constants(pair, p, bundle_or_certs)
    b_mom = _b_norm_moment(pair, p, reps, src)
    tol = 1e-9 * b_mom.mean
    lo_edge = lower_c * (b_mom.mean - 3.0 * b_mom.std_error) - tol
    hi_edge = upper_c * (b_mom.mean + 3.0 * b_mom.std_error) + tol

    rows = []
    branches = _pair_branches(pair)
    for idx, n in enumerate(n_list):
        exact = branches is not None and len(branches[0]) ** n <= PERP_CAP
        if exact:
            est = brute_force_perpetuity(pair, n, p)
        else:
            est = perpetuity_lhs(pair, n, p, reps, src.child(idx))
        middle = EstimateWithCI(
            mean=est.mean / n,
            std_error=est.std_error / n,
            replications=est.replications,
            seed=est.seed,
            exact=est.exact,
        )
        ci_lo = middle.mean - 3.0 * middle.std_error
        ci_hi = middle.mean + 3.0 * middle.std_error
        verdict = _bracket_verdict(ci_lo, ci_hi, lo_edge, hi_edge, check_lower=lower_certified)
        rows.append(
            GoldieBracketRow(
                n=n,
                lower_edge=lower_c * b_mom.mean,
                middle=middle,
                upper_edge=upper_c * b_mom.mean,
                b_moment=b_mom,
                verdict=verdict,
                lower_certified=lower_certified,
                exact=middle.exact,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# certified tail inequalities, checked on enumerated distributions


def lambda_weighted_sum(coeffs: CoefficientSet, p: float, lam: float) -> float:
    """sum_i lambda^i ||v_i||^p, the scale the tail bounds are stated in."""
    return math.fsum(
        _vector_norm(v, coeffs.norm) ** p * lam**i for i, v in enumerate(coeffs.vectors)
    )


def tail_check_large_p(
    spec, coeffs: CoefficientSet, p: float, q: float, lam: float, t_grid=(1.0, 2.0, 4.0, 8.0)
) -> list[dict]:
    """P(||sum v_i R_i||^p >= t * sum lambda^i ||v_i||^p) <= (1-lam)^((1-p)q/p) t^(-q/p)."""
    values, probs = enumerate_lhs_distribution(spec, coeffs, p)
    base = lambda_weighted_sum(coeffs, p, lam)
    rows = []
    for t in t_grid:
        mass = float(np.sum(probs[values >= t * base]))
        bound = (1.0 - lam) ** ((1.0 - p) * q / p) * t ** (-q / p)
        rows.append({"t": t, "tail_prob": mass, "bound": bound, "ok": mass <= bound + 1e-12})
    return rows


def tail_check_small_p(
    spec, coeffs: CoefficientSet, p: float, lam: float, t_grid=(1.0, 2.0, 4.0, 8.0)
) -> list[dict]:
    """P(||sum v_i R_i||^p >= (t/(1-lam)) sum lambda^i ||v_i||^p) <= t^(-1/2)."""
    values, probs = enumerate_lhs_distribution(spec, coeffs, p)
    base = lambda_weighted_sum(coeffs, p, lam)
    rows = []
    for t in t_grid:
        mass = float(np.sum(probs[values >= (t / (1.0 - lam)) * base]))
        bound = t ** (-0.5)
        rows.append({"t": t, "tail_prob": mass, "bound": bound, "ok": mass <= bound + 1e-12})
    return rows
