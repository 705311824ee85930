"""Stand-alone numeric oracles for the interaction and Taylor estimates.

Two-peak interaction integrals ∫ f^a(x − p_i) g^b(x − p_j) dx with
exponentially localized factors concentrate near peak i when a > b, and
scale like e^{−b|y₀|} |y₀|^{b(1−N)/2} in the separation y₀.  The adaptive
quadratures here provide independent numbers against which the reduction
module's leading-order coefficients are validated, plus an empirical check
of the Taylor-remainder bound |(a+b)₊^p − Σ_{m≤k} C(p,m) a^{p−m} b^m| ≤
C |b|^p used throughout the expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

X2_CUTOFF = 30.0  # transverse truncation; integrands decay like e^{-(a+...)r}


@dataclass(frozen=True)
class InteractionSpec:
    """Two localized radial factors with exponents a > b > 0 at distance y₀."""

    f: Callable[[float], float]
    g: Callable[[float], float]
    a: float
    b: float
    y0: float
    dimension: int = 1
    half_cell: bool = False
    full_line: bool = False

    def __post_init__(self):
        if not self.a > self.b > 0:
            raise ValueError("need a > b > 0")
        if abs(self.y0) <= 2:
            raise ValueError("separation |y0| must be large compared to 1")
        if self.dimension not in (1, 2):
            raise ValueError("only line and strip integrals are provided")

    @property
    def cell(self) -> tuple[float, float]:
        """Ω_i around peak i at the origin, neighbor at y₀ (or half-cell Ω_i⁺)."""
        if self.full_line:
            return (-abs(self.y0) - 40.0, abs(self.y0) + 40.0)
        half = abs(self.y0) / 2
        lo = 0.0 if self.half_cell else -half
        return (lo, half) if self.y0 > 0 else (-half, -lo)


def _x1_integrand(spec: InteractionSpec):
    if spec.dimension == 1:
        return lambda x: spec.f(abs(x)) ** spec.a * spec.g(abs(x - spec.y0)) ** spec.b

    def integrand(x):
        inner, err = quad(
            lambda t: spec.f(math.hypot(x, t)) ** spec.a
            * spec.g(math.hypot(x - spec.y0, t)) ** spec.b,
            0.0,
            X2_CUTOFF,
            epsabs=1e-300,
            epsrel=1e-9,
            limit=200,
        )
        return 2 * inner  # even in the transverse variable

    return integrand


def interaction_quadrature(spec: InteractionSpec) -> float:
    """Adaptive quadrature of ∫_Ω f^a(x − p_i) g^b(x − p_j) dx.

    Subdivision is focused near both peaks where the factors are sharp.

    Raises
    ------
    RuntimeError
        If the estimated quadrature error exceeds 1% of the value.
    """
    lo, hi = spec.cell
    interior = [x for x in (0.0,) if lo < x < hi]
    val, err = quad(
        _x1_integrand(spec),
        lo,
        hi,
        points=interior or None,
        epsabs=1e-300,
        epsrel=1e-8,
        limit=400,
    )
    if err > 0.01 * abs(val):
        raise RuntimeError(f"quadrature error {err:.3e} above 1% of {val:.3e}")
    return val


def rescale(spec: InteractionSpec, value: float) -> float:
    """value / (e^{−b|y₀|} |y₀|^{b(1−N)/2})."""
    y = abs(spec.y0)
    return value * math.exp(spec.b * y) * y ** (spec.b * (spec.dimension - 1) / 2)


def mass_constant(spec: InteractionSpec) -> float:
    """C₀ = ∫_{ℝ^N} f^a(x) e^{x·ω} dx with ω the unit vector toward y₀.

    The exponential tilt is the surviving factor of the neighbor's tail
    once e^{−b|y₀|} |y₀|^{b(1−N)/2} has been scaled out; it converges
    because a > b ≥ the tail rate.
    """
    sign = 1.0 if spec.y0 > 0 else -1.0
    if spec.dimension == 1:
        val, _ = quad(
            lambda x: spec.f(abs(x)) ** spec.a * math.exp(spec.b * sign * x),
            -40.0,
            40.0,
            points=[0.0],
            epsabs=1e-300,
            epsrel=1e-10,
            limit=400,
        )
        return val

    def outer(x):
        inner, _ = quad(
            lambda t: spec.f(math.hypot(x, t)) ** spec.a,
            0.0,
            X2_CUTOFF,
            epsabs=1e-300,
            epsrel=1e-9,
            limit=200,
        )
        return 2 * inner * math.exp(spec.b * sign * x)

    val, _ = quad(outer, -40.0, 40.0, points=[0.0],
                  epsabs=1e-300, epsrel=1e-8, limit=400)
    return val


@dataclass
class LimitEstimate:
    separations: np.ndarray
    rescaled: np.ndarray
    limit: float


def interaction_limit(spec: InteractionSpec, separations) -> LimitEstimate:
    """Rescaled integrals along a |y₀| sweep with Richardson extrapolation.

    The rescaled value converges to L·C₀ with corrections O(1/|y₀|); the
    last two sweep points are extrapolated linearly in 1/|y₀|.

    Raises
    ------
    RuntimeError
        If the sweep does not approach its last value monotonically.
    """
    ys = np.asarray(sorted(separations), dtype=float)
    vals = []
    for y in ys:
        s = InteractionSpec(
            spec.f, spec.g, spec.a, spec.b, float(np.sign(spec.y0) * y),
            spec.dimension, spec.half_cell,
        )
        vals.append(rescale(s, interaction_quadrature(s)))
    vals = np.array(vals)
    gaps = np.abs(vals - vals[-1])
    if np.any(np.diff(gaps[:-1]) > 0):
        raise RuntimeError(f"rescaled sweep not monotone toward its tail: {vals}")
    y1, y2 = ys[-2:]
    r1, r2 = vals[-2:]
    limit = (y2 * r2 - y1 * r1) / (y2 - y1)
    return LimitEstimate(separations=ys, rescaled=vals, limit=float(limit))


def _binomial(p: float, m: int) -> float:
    out = 1.0
    for j in range(m):
        out *= (p - j) / (j + 1)
    return out


def taylor_remainder(a: float, b: float, p: float) -> float:
    """|−(a+b)₊^p + Σ_{m=0}^{k} C(p,m) a^{p−m} b^m| for k = floor(p).

    Integer p with a+b ≥ 0 is an exact polynomial identity (remainder 0);
    the smooth regime |b| ≤ a/2 uses the binomial tail series to avoid the
    cancellation of the direct difference; the rest is evaluated directly.
    """
    k = math.floor(p)
    s = a + b
    if b == 0:
        return 0.0
    if float(p).is_integer() and k == p and s >= 0:
        return 0.0
    if abs(b) <= 0.5 * a and s > 0:
        t = b / a
        total, m, term = 0.0, k + 1, _binomial(p, k + 1) * (b / a) ** (k + 1)
        while True:
            total += term
            m += 1
            term *= (p - m + 1) / m * t
            if abs(term) < 1e-18 * abs(total) or m > 300:
                break
        return abs(a**p * total)
    head = math.fsum(_binomial(p, m) * a ** (p - m) * b**m for m in range(k + 1))
    plus = s**p if s > 0 else 0.0
    return abs(-plus + head)


@dataclass
class TaylorReport:
    max_ratio: float
    argmax: tuple[float, float]
    samples: int


def taylor_remainder_check(samples: int, p: float, seed: int) -> TaylorReport:
    """Empirical sup of taylor_remainder(a, b, p)/|b|^p over random (a, b).

    a is log-uniform and b signed log-uniform on [1e−3, 1e3], covering both
    the smooth a ≫ |b| regime and the truncation regime a + b < 0.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    rng = np.random.default_rng(seed)
    log_a = rng.uniform(np.log(1e-3), np.log(1e3), samples)
    log_b = rng.uniform(np.log(1e-3), np.log(1e3), samples)
    signs = rng.choice((-1.0, 1.0), samples)
    best, arg = 0.0, (0.0, 0.0)
    for la, lb, sg in zip(log_a, log_b, signs):
        a, b = math.exp(la), sg * math.exp(lb)
        ratio = taylor_remainder(a, b, p) / abs(b) ** p
        if ratio > best:
            best, arg = ratio, (a, b)
    return TaylorReport(max_ratio=best, argmax=arg, samples=samples)
