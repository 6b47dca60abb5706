"""Distribution specifications, moment oracles, and seeded sampling.

A DistributionSpec describes the law of a scalar random variable X from a
small set of parametric families (two-point, general finite support, uniform,
lognormal, exponential, the "Riesz factor" law of 1 + cos U with U uniform on
[0, 2pi], Rademacher signs, and scaled copies of any of these).  On top of the
specs the module provides

  * abs_moment: E|X|^q with a method tag (finite sum, closed form, or
    quadrature) and a certified absolute error,
  * normalize_unit_p_moment: rescale so that E|X|^p = 1,
  * sample_products: seeded simulation of product paths R_0 = 1,
    R_i = X_1 ... X_i,
  * expect: E f(X) for arbitrary integrands with declared kink locations,
    used by the hypothesis fitters.

Sampling is counter-based: a RandomSource is a (seed, stream_id) pair and
every draw is a deterministic function of it, so identical sources reproduce
bitwise-identical paths no matter how work is scheduled.  All families are
sampled by inverse-CDF transform of a single uniform per draw, which is also
what makes comonotone coupling of two specs trivial (share the uniform).

Text form: specs parse from "family:key=value,..." strings, for example
"twopoint:a=0.5,b=1.5,pa=0.5", "uniform:lo=0,hi=2", "riesz",
"finite:atoms=-1@0.25|0.5@0.5|2@0.25", and
"scaled:scale=0.5,base=(twopoint:a=1,b=3,pa=0.5)".
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import (
    DegenerateZeroError,
    InvalidOrderError,
    NonfiniteMomentError,
)

TWO_POINT = "twopoint"
FINITE = "finite"
UNIFORM = "uniform"
LOGNORMAL = "lognormal"
EXPONENTIAL = "exponential"
RIESZ_FACTOR = "riesz"
RADEMACHER = "rademacher"
SCALED = "scaled"

FAMILIES = (
    TWO_POINT,
    FINITE,
    UNIFORM,
    LOGNORMAL,
    EXPONENTIAL,
    RIESZ_FACTOR,
    RADEMACHER,
    SCALED,
)

# method tags for MomentEstimate
CLOSED_FORM = "ClosedForm"
QUADRATURE = "Quadrature"
MONTE_CARLO = "MonteCarlo"
FINITE_SUM = "FiniteSum"

_PROB_SUM_TOL = 1e-9
_DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class DistributionSpec:
    """Tagged union over the supported families; use the factory functions."""

    family: str
    a: float | None = None
    b: float | None = None
    prob_a: float | None = None
    atoms: tuple[tuple[float, float], ...] | None = None
    lo: float | None = None
    hi: float | None = None
    mu: float | None = None
    sigma: float | None = None
    rate: float | None = None
    base: "DistributionSpec | None" = None
    scale: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == TWO_POINT:
            if not (0.0 < self.prob_a < 1.0):
                raise ValueError("prob_a must lie strictly inside (0, 1)")
        elif self.family == FINITE:
            if not self.atoms:
                raise ValueError("finite support needs at least one atom")
            total = math.fsum(pr for _, pr in self.atoms)
            if any(pr <= 0.0 for _, pr in self.atoms):
                raise ValueError("atom probabilities must be positive")
            if abs(total - 1.0) > _PROB_SUM_TOL:
                raise ValueError(f"atom probabilities sum to {total}, not 1")
            # store exactly normalized so enumeration identities are tight
            object.__setattr__(
                self,
                "atoms",
                tuple((float(v), float(pr) / total) for v, pr in self.atoms),
            )
        elif self.family == UNIFORM:
            if not (self.lo < self.hi):
                raise ValueError("uniform requires lo < hi")
        elif self.family == LOGNORMAL:
            if not (self.sigma > 0.0):
                raise ValueError("lognormal requires sigma > 0")
        elif self.family == EXPONENTIAL:
            if not (self.rate > 0.0):
                raise ValueError("exponential requires rate > 0")
        elif self.family == SCALED:
            if self.base is None or self.scale is None or self.scale == 0.0:
                raise ValueError("scaled copy needs a base spec and scale != 0")


def two_point(a: float, b: float, prob_a: float) -> DistributionSpec:
    return DistributionSpec(TWO_POINT, a=float(a), b=float(b), prob_a=float(prob_a))


def finitely_supported(atoms) -> DistributionSpec:
    return DistributionSpec(FINITE, atoms=tuple((float(v), float(p)) for v, p in atoms))


def uniform(lo: float, hi: float) -> DistributionSpec:
    return DistributionSpec(UNIFORM, lo=float(lo), hi=float(hi))


def log_normal(mu: float, sigma: float) -> DistributionSpec:
    return DistributionSpec(LOGNORMAL, mu=float(mu), sigma=float(sigma))


def exponential(rate: float) -> DistributionSpec:
    return DistributionSpec(EXPONENTIAL, rate=float(rate))


def riesz_factor() -> DistributionSpec:
    return DistributionSpec(RIESZ_FACTOR)


def rademacher_sign() -> DistributionSpec:
    return DistributionSpec(RADEMACHER)


def scaled_copy(base: DistributionSpec, scale: float) -> DistributionSpec:
    # composing scales keeps normalization a single exact multiplication
    if base.family == SCALED:
        return DistributionSpec(SCALED, base=base.base, scale=float(scale) * base.scale)
    return DistributionSpec(SCALED, base=base, scale=float(scale))


@dataclass(frozen=True)
class MomentEstimate:
    q: float
    value: float
    abs_error: float
    method: str


@dataclass(frozen=True)
class RandomSource:
    """Counter-based stream identity: (seed, stream_id) keys a Philox stream.

    Vectorized simulations carve a stream into fixed-size replication blocks;
    block b draws from a disjoint counter region of the same keyed stream, so
    results do not depend on how many workers process the blocks.
    """

    seed: int
    stream_id: int = 0

    def generator(self, block: int = 0) -> np.random.Generator:
        key = np.array([self.seed % 2**64, self.stream_id % 2**64], dtype=np.uint64)
        bitgen = np.random.Philox(counter=[0, 0, block, 0], key=key)
        return np.random.Generator(bitgen)

    def child(self, offset: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream_id + offset)


# ---------------------------------------------------------------------------
# support structure helpers


def finite_support(spec: DistributionSpec):
    """(values, probs) arrays in declaration order, or None if continuous."""
    if spec.family == TWO_POINT:
        return (
            np.array([spec.a, spec.b]),
            np.array([spec.prob_a, 1.0 - spec.prob_a]),
        )
    if spec.family == FINITE:
        vals = np.array([v for v, _ in spec.atoms])
        probs = np.array([p for _, p in spec.atoms])
        return vals, probs
    if spec.family == RADEMACHER:
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    if spec.family == SCALED:
        sup = finite_support(spec.base)
        if sup is None:
            return None
        return sup[0] * spec.scale, sup[1]
    return None


def is_nonnegative(spec: DistributionSpec) -> bool:
    """True when X >= 0 almost surely can be read off the parameters."""
    if spec.family in (LOGNORMAL, EXPONENTIAL, RIESZ_FACTOR):
        return True
    if spec.family == UNIFORM:
        return spec.lo >= 0.0
    if spec.family == SCALED:
        return spec.scale > 0.0 and is_nonnegative(spec.base)
    sup = finite_support(spec)
    if sup is not None:
        return bool(np.all(sup[0] >= 0.0))
    return False


# ---------------------------------------------------------------------------
# moments


def abs_moment(spec: DistributionSpec, q: float) -> MomentEstimate:
    """E|X|^q with a certified absolute error.

    Finite-support families sum exactly; uniform, lognormal, and exponential
    have closed forms; the Riesz factor is integrated by an algebraic-weight
    quadrature rule that is exact to roundoff for every q > 0.
    """
    if not (q > 0.0):
        raise InvalidOrderError(f"moment order must be positive, got {q}")
    q = float(q)

    if spec.family == SCALED:
        inner = abs_moment(spec.base, q)
        s = abs(spec.scale) ** q
        return MomentEstimate(q, s * inner.value, s * inner.abs_error, inner.method)

    sup = finite_support(spec)
    if sup is not None:
        vals, probs = sup
        value = math.fsum(p * abs(v) ** q for v, p in zip(vals, probs))
        return MomentEstimate(q, value, 0.0, FINITE_SUM)

    if spec.family == UNIFORM:
        value = _uniform_abs_moment(spec.lo, spec.hi, q)
        return MomentEstimate(q, value, 0.0, CLOSED_FORM)

    if spec.family == LOGNORMAL:
        value = math.exp(q * spec.mu + 0.5 * q * q * spec.sigma * spec.sigma)
        if not math.isfinite(value):
            raise NonfiniteMomentError(f"lognormal moment overflow at q={q}")
        return MomentEstimate(q, value, 0.0, CLOSED_FORM)

    if spec.family == EXPONENTIAL:
        value = math.exp(special.gammaln(q + 1.0) - q * math.log(spec.rate))
        if not math.isfinite(value):
            raise NonfiniteMomentError(f"exponential moment overflow at q={q}")
        return MomentEstimate(q, value, 0.0, CLOSED_FORM)

    if spec.family == RIESZ_FACTOR:
        value, err = _riesz_factor_moment(q)
        return MomentEstimate(q, value, err, QUADRATURE)

    raise AssertionError(f"unhandled family {spec.family}")


def _uniform_abs_moment(lo: float, hi: float, q: float) -> float:
    # integral of |x|^q over [lo, hi] divided by the width; split at 0 if needed
    width = hi - lo
    if lo >= 0.0:
        num = hi ** (q + 1.0) - lo ** (q + 1.0)
    elif hi <= 0.0:
        num = (-lo) ** (q + 1.0) - (-hi) ** (q + 1.0)
    else:
        num = (-lo) ** (q + 1.0) + hi ** (q + 1.0)
    return num / ((q + 1.0) * width)


def _riesz_factor_moment(q: float) -> tuple[float, float]:
    """(1/2pi) int_0^{2pi} (1+cos t)^q dt by singularity-aware quadrature.

    Reduction: the integral equals (2^{q+1}/pi) int_0^{pi/2} sin^{2q} u du.
    The integrand vanishes like u^{2q} at u = 0, so a plain panel rule stalls
    for small q; QUADPACK's algebraic-weight rule integrates
    (sin u / u)^{2q} * u^{2q} with the u^{2q} factor treated analytically and
    is exact to roundoff for every q > 0.
    """
    a = 2.0 * q

    def smooth_part(u: float) -> float:
        if u == 0.0:
            return 1.0
        return (math.sin(u) / u) ** a

    val, err = integrate.quad(
        smooth_part,
        0.0,
        math.pi / 2.0,
        weight="alg",
        wvar=(a, 0.0),
        epsabs=1e-14,
        epsrel=1e-13,
        limit=200,
    )
    c = 2.0 ** (q + 1.0) / math.pi
    return c * val, c * abs(err)


def normalize_unit_p_moment(spec: DistributionSpec, p: float):
    """Return (scaled spec, scale) with E|scale*X|^p = 1."""
    est = abs_moment(spec, p)
    if est.value <= 0.0:
        raise DegenerateZeroError("cannot normalize a law concentrated at zero")
    scale = est.value ** (-1.0 / p)
    return scaled_copy(spec, scale), scale


def is_degenerate_modulus(spec: DistributionSpec, p: float) -> bool:
    """Cauchy-Schwarz equality test: (E|X|^{p/2})^2 >= (1 - 1e-9) E|X|^p."""
    half = abs_moment(spec, p / 2.0).value
    full = abs_moment(spec, p).value
    if full <= 0.0:
        return True
    return half * half >= (1.0 - _DEGENERACY_TOL) * full


# ---------------------------------------------------------------------------
# sampling


def quantile(spec: DistributionSpec, u):
    """Inverse CDF, vectorized over u in [0, 1); monotone nondecreasing."""
    u = np.asarray(u, dtype=float)
    if spec.family == SCALED:
        if spec.scale >= 0.0:
            return spec.scale * quantile(spec.base, u)
        return spec.scale * quantile(spec.base, 1.0 - u)
    sup = finite_support(spec)
    if sup is not None:
        vals, probs = sup
        order = np.argsort(vals, kind="stable")
        vals = vals[order]
        cum = np.cumsum(probs[order])[:-1]
        idx = np.searchsorted(cum, u, side="right")
        return vals[idx]
    if spec.family == UNIFORM:
        return spec.lo + (spec.hi - spec.lo) * u
    if spec.family == LOGNORMAL:
        return np.exp(spec.mu + spec.sigma * special.ndtri(u))
    if spec.family == EXPONENTIAL:
        return -np.log1p(-u) / spec.rate
    if spec.family == RIESZ_FACTOR:
        return 1.0 - np.cos(np.pi * u)
    raise AssertionError(f"unhandled family {spec.family}")


def sample(spec: DistributionSpec, size: int, gen: np.random.Generator) -> np.ndarray:
    """Draw samples: one uniform per draw pushed through the quantile map."""
    return quantile(spec, gen.random(size))


def sample_products(spec: DistributionSpec, n: int, src: RandomSource) -> np.ndarray:
    """Product path R_0 = 1, R_i = R_{i-1} X_i for i = 1..n."""
    if n < 0:
        raise ValueError("path length must be nonnegative")
    path = np.empty(n + 1)
    path[0] = 1.0
    if n > 0:
        xs = sample(spec, n, src.generator())
        path[1:] = np.cumprod(xs)
    return path


# ---------------------------------------------------------------------------
# general expectations (used by the hypothesis fitters)


def expect(spec: DistributionSpec, fn, breaks=()):
    """E fn(X) and an absolute error bound.

    fn is a scalar callable.  breaks lists x-locations where fn kinks or
    jumps; quadrature subdivides there so window indicators and absolute
    values integrate accurately.  Finite-support laws sum exactly.
    """
    if spec.family == SCALED:
        s = spec.scale
        inner_breaks = [bk / s for bk in breaks]
        return expect(spec.base, lambda x: fn(s * x), inner_breaks)

    sup = finite_support(spec)
    if sup is not None:
        vals, probs = sup
        value = math.fsum(p * fn(v) for v, p in zip(vals, probs))
        return value, 0.0

    if spec.family == UNIFORM:
        width = spec.hi - spec.lo
        return _quad_segments(lambda x: fn(x) / width, spec.lo, spec.hi, breaks)

    if spec.family == LOGNORMAL:
        m, s = spec.mu, spec.sigma

        def integrand(x: float) -> float:
            z = (math.log(x) - m) / s
            dens = math.exp(-0.5 * z * z) / (x * s * math.sqrt(2.0 * math.pi))
            return fn(x) * dens

        return _quad_segments(integrand, 0.0, math.inf, breaks)

    if spec.family == EXPONENTIAL:
        r = spec.rate

        def integrand(x: float) -> float:
            return fn(x) * r * math.exp(-r * x)

        return _quad_segments(integrand, 0.0, math.inf, breaks)

    if spec.family == RIESZ_FACTOR:
        # X = 1 + cos t with t uniform on [0, pi] by symmetry
        t_breaks = [
            math.acos(min(1.0, max(-1.0, bk - 1.0))) for bk in breaks if 0.0 <= bk <= 2.0
        ]

        def integrand(t: float) -> float:
            return fn(1.0 + math.cos(t)) / math.pi

        return _quad_segments(integrand, 0.0, math.pi, t_breaks)

    raise AssertionError(f"unhandled family {spec.family}")


def _quad_segments(f, lo: float, hi: float, knots) -> tuple[float, float]:
    pts = sorted({float(k) for k in knots if lo < k < hi})
    if math.isinf(hi):
        edges = [lo] + pts
        total = 0.0
        err = 0.0
        for left, right in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(f, left, right, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += v
            err += abs(e)
        v, e = integrate.quad(f, edges[-1], math.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
        return total + v, err + abs(e)
    v, e = integrate.quad(
        f, lo, hi, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200
    )
    return v, abs(e)


# ---------------------------------------------------------------------------
# text form


def spec_to_text(spec: DistributionSpec) -> str:
    if spec.family == TWO_POINT:
        return f"twopoint:a={spec.a!r},b={spec.b!r},pa={spec.prob_a!r}"
    if spec.family == FINITE:
        body = "|".join(f"{v!r}@{p!r}" for v, p in spec.atoms)
        return f"finite:atoms={body}"
    if spec.family == UNIFORM:
        return f"uniform:lo={spec.lo!r},hi={spec.hi!r}"
    if spec.family == LOGNORMAL:
        return f"lognormal:mu={spec.mu!r},sigma={spec.sigma!r}"
    if spec.family == EXPONENTIAL:
        return f"exponential:rate={spec.rate!r}"
    if spec.family == RIESZ_FACTOR:
        return "riesz"
    if spec.family == RADEMACHER:
        return "rademacher"
    if spec.family == SCALED:
        return f"scaled:scale={spec.scale!r},base=({spec_to_text(spec.base)})"
    raise AssertionError(f"unhandled family {spec.family}")


def parse_spec(text: str) -> DistributionSpec:
    """Parse the "family:key=value,..." text form; inverse of spec_to_text."""
    text = text.strip()
    family, _, rest = text.partition(":")
    family = family.strip().lower()
    kv = _split_params(rest)
    try:
        if family == TWO_POINT:
            return two_point(float(kv["a"]), float(kv["b"]), float(kv["pa"]))
        if family == FINITE:
            atoms = []
            for piece in kv["atoms"].split("|"):
                v, _, pr = piece.partition("@")
                atoms.append((float(v), float(pr)))
            return finitely_supported(atoms)
        if family == UNIFORM:
            return uniform(float(kv["lo"]), float(kv["hi"]))
        if family == LOGNORMAL:
            return log_normal(float(kv["mu"]), float(kv["sigma"]))
        if family == EXPONENTIAL:
            return exponential(float(kv["rate"]))
        if family == RIESZ_FACTOR:
            return riesz_factor()
        if family == RADEMACHER:
            return rademacher_sign()
        if family == SCALED:
            base_text = kv["base"]
            if base_text.startswith("(") and base_text.endswith(")"):
                base_text = base_text[1:-1]
            return scaled_copy(parse_spec(base_text), float(kv["scale"]))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed distribution spec {text!r}: {exc}") from exc
    raise ValueError(f"unknown distribution family {family!r}")


def _split_params(rest: str) -> dict:
    """Split "k=v,k=v" at depth zero of parentheses."""
    out = {}
    depth = 0
    piece = []
    pieces = []
    for ch in rest:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            pieces.append("".join(piece))
            piece = []
        else:
            piece.append(ch)
    if piece:
        pieces.append("".join(piece))
    for item in pieces:
        if not item.strip():
            continue
        key, _, value = item.partition("=")
        out[key.strip().lower()] = value.strip()
    return out
