"""Riesz products on the torus and their probabilistic model.

For an increasing sequence of positive integers n_1 < ... < n_m the products

    Rbar_i(t) = prod_{j <= i} (1 + cos(n_j t)),   Rbar_0 = 1,

are nonnegative trigonometric polynomials with mean one.  When consecutive
ratios satisfy n_{k+1}/n_k >= 3, no frequency of one factor can be reached
by sums and differences of the earlier ones, so moments of combinations
sum a_i Rbar_i against normalized Lebesgue measure match the moments of the
probabilistic model sum a_i R_i built from i.i.d. factors distributed as
1 + cos(U), U uniform on the circle: both means are sum a_i, and at p = 2
both sides reduce to sum_{i,j} a_i a_j (3/2)^{min(i,j)}.

L_p norms on the torus are computed by the uniform-grid mean over N points,
which for periodic integrands is the trapezoid rule and is exact for
trigonometric polynomials of degree below N.  |.|^p with non-integer p has
kinks where the combination vanishes; the N vs N/2 Richardson difference is
reported as the error estimate instead of special-casing roots.  Grids
stream in fixed blocks so no full grid is ever stored, and partial sums
combine in block order regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dist_core as dc
from ._pool import map_indexed
from .errors import NotIncreasingError, NotLacunaryError, TooFewPointsError
from .montecarlo import EstimateWithCI, coefficient_set, estimate_lhs

MAX_TERM = 2**20
MIN_POINTS = 4096
POINTS_PER_FREQ = 64
_BLOCK = 2**20

RATIO_FLOOR = 3.0


@dataclass(frozen=True)
class LacunarySequence:
    terms: tuple[int, ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("sequence must be nonempty")
        clean = []
        for t in self.terms:
            it = int(t)
            if it != t or it < 1:
                raise ValueError(f"terms must be positive integers, got {t!r}")
            clean.append(it)
        object.__setattr__(self, "terms", tuple(clean))
        for a, b in zip(self.terms, self.terms[1:]):
            if not b > a:
                raise NotIncreasingError(f"terms must increase strictly: {a} !< {b}")
        if self.terms[-1] > MAX_TERM:
            raise ValueError(f"largest term {self.terms[-1]} exceeds the 2^20 cap")

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(b / a for a, b in zip(self.terms, self.terms[1:]))

    @property
    def tail_sum(self) -> float:
        return math.fsum(a / b for a, b in zip(self.terms, self.terms[1:]))


@dataclass(frozen=True)
class RieszCombination:
    seq: LacunarySequence
    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not coeffs:
            raise ValueError("need at least the constant coefficient a_0")
        if len(coeffs) > self.seq.m + 1:
            raise ValueError(
                f"{len(coeffs)} coefficients but the sequence supports only "
                f"{self.seq.m + 1} products (a_0 .. a_{self.seq.m})"
            )


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    points: int


def check_lacunary(seq) -> dict:
    """Ratio report; the lacunary flag needs every ratio >= 3."""
    if not isinstance(seq, LacunarySequence):
        seq = LacunarySequence(tuple(seq))
    ratios = seq.ratios
    min_ratio = min(ratios) if ratios else math.inf
    return {
        "terms": list(seq.terms),
        "ratios": list(ratios),
        "min_ratio": min_ratio,
        "tail_sum": seq.tail_sum,
        "lacunary": min_ratio >= RATIO_FLOOR,
    }


def riesz_eval(seq: LacunarySequence, i: int, t):
    """Rbar_i(t) = prod_{j <= i} (1 + cos(n_j t)); Rbar_0 = 1."""
    if not 0 <= i <= seq.m:
        raise ValueError(f"index i = {i} outside 0..{seq.m}")
    arr = np.asarray(t, dtype=float)
    out = np.ones_like(arr)
    for j in range(i):
        out = out * (1.0 + np.cos(seq.terms[j] * arr))
    if np.ndim(t) == 0:
        return float(out)
    return out


def _combination_values(comb: RieszCombination, t: np.ndarray) -> np.ndarray:
    coeffs = comb.coefficients
    acc = np.full_like(t, coeffs[0])
    prod = np.ones_like(t)
    for i in range(1, len(coeffs)):
        prod = prod * (1.0 + np.cos(comb.seq.terms[i - 1] * t))
        if coeffs[i] != 0.0:
            acc = acc + coeffs[i] * prod
    return acc


def riesz_lp_norm(
    comb: RieszCombination, p: float, quad_points: int | None = None
) -> QuadResult:
    """Uniform-grid mean of |sum a_i Rbar_i|^p over the torus.

    The N-point grid mean equals the trapezoid rule for periodic functions
    and integrates trigonometric polynomials of degree < N exactly; the
    error estimate is the difference against the N/2 subgrid.
    """
    if p < 1.0:
        raise ValueError("torus norms are computed for p >= 1")
    n_max = comb.seq.terms[len(comb.coefficients) - 2] if len(comb.coefficients) > 1 else 1
    floor = max(MIN_POINTS, POINTS_PER_FREQ * n_max)
    n_pts = floor if quad_points is None else int(quad_points)
    if n_pts < floor:
        raise TooFewPointsError(
            f"{n_pts} grid points < required max(4096, 64 * n_max) = {floor}"
        )
    if n_pts % 2:
        n_pts += 1

    blocks = []
    start = 0
    while start < n_pts:
        stop = min(start + _BLOCK, n_pts)
        blocks.append((start, stop))
        start = stop

    step = 2.0 * math.pi / n_pts

    def run_block(block):
        lo, hi = block
        t = np.arange(lo, hi, dtype=float) * step
        vals = np.abs(_combination_values(comb, t)) ** p
        evens = vals[0::2] if lo % 2 == 0 else vals[1::2]
        return float(np.sum(vals)), float(np.sum(evens))

    partials = map_indexed(run_block, blocks)
    total = math.fsum(s for s, _ in partials)
    total_even = math.fsum(e for _, e in partials)
    value = total / n_pts
    half_value = total_even / (n_pts // 2)
    return QuadResult(value=value, error_estimate=abs(value - half_value), points=n_pts)


def _probabilistic_side(
    comb: RieszCombination, p: float, reps: int, src: dc.RandomSource
) -> EstimateWithCI:
    """E|sum a_i R_i|^p for products of i.i.d. 1 + cos(U) factors."""
    coeffs = comb.coefficients
    spec = dc.riesz_factor()
    if p == 2.0:
        m2 = 1.5
        total = 0.0
        for i, ai in enumerate(coeffs):
            for j, aj in enumerate(coeffs):
                total += ai * aj * m2 ** min(i, j)
        return EstimateWithCI(
            mean=total, std_error=0.0, replications=0, seed=None, exact=True
        )
    if p == 1.0 and all(a >= 0.0 for a in coeffs):
        return EstimateWithCI(
            mean=math.fsum(coeffs), std_error=0.0, replications=0, seed=None, exact=True
        )
    return estimate_lhs(spec, coefficient_set(list(coeffs)), p, reps, src)


def corollary_check(
    comb: RieszCombination,
    p: float,
    reps: int,
    src: dc.RandomSource,
    quad_points: int | None = None,
) -> dict:
    """Torus norm vs probabilistic moment for one combination.

    Evidence, not certification: the comparison constants are not explicit,
    so the report carries both sides, their per-term norms, and the ratio.
    """
    verdict = check_lacunary(comb.seq)
    if not verdict["lacunary"]:
        raise NotLacunaryError(
            f"min ratio {verdict['min_ratio']} < 3; the comparison needs ratio >= 3"
        )
    torus = riesz_lp_norm(comb, p, quad_points)
    prob = _probabilistic_side(comb, p, reps, src)
    factor_p = dc.abs_moment(dc.riesz_factor(), p).value
    per_term = []
    for i in range(len(comb.coefficients)):
        unit = RieszCombination(comb.seq, (0.0,) * i + (1.0,))
        per_term.append(
            {
                "i": i,
                "torus": riesz_lp_norm(unit, p, quad_points).value,
                "probabilistic": factor_p**i,
            }
        )
    ratio = torus.value / prob.mean if prob.mean != 0.0 else math.inf
    return {
        "p": p,
        "sequence": list(comb.seq.terms),
        "coefficients": list(comb.coefficients),
        "torus": torus,
        "probabilistic": prob,
        "per_term": per_term,
        "ratio": ratio,
    }


def corollary_ratio_scan(
    seq: LacunarySequence,
    p: float,
    draws: int,
    reps: int,
    src: dc.RandomSource,
    quad_points: int | None = None,
) -> dict:
    """Ratio statistics across random coefficient draws.

    The min and max ratio over draws play the role of empirical surrogates
    for the two comparison constants.
    """
    if draws < 1:
        raise ValueError("need at least one draw")
    ratios = []
    reports = []
    for d in range(draws):
        gen = src.child(1000 + d).generator()
        coeffs = tuple(float(c) for c in gen.standard_normal(seq.m + 1))
        comb = RieszCombination(seq, coeffs)
        rep = corollary_check(comb, p, reps, src.child(2000 + d), quad_points)
        ratios.append(rep["ratio"])
        reports.append(rep)
    return {
        "p": p,
        "draws": draws,
        "ratios": ratios,
        "min_ratio": min(ratios),
        "max_ratio": max(ratios),
        "reports": reports,
    }
