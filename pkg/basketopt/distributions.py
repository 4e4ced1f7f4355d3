#!/usr/bin/env python3
"""
Special functions and divergences for BasketOptimizer
Beta function, regularized incomplete beta, binomial pmf, KLD/JSD by quadrature
and the closed-form Hellinger distance between beta distributions
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
from scipy import integrate
from scipy.special import betaln

from .errors import DomainError, NumericalError

# Continued fraction settings for the regularized incomplete beta
CF_TOLERANCE = 1e-14
CF_MAX_ITERATIONS = 300
_FPMIN = 1e-300

# Adaptive quadrature settings for the divergences
QUAD_EPSABS = 1e-9
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200

_LN2 = math.log(2.0)


class DivergenceKind(str, Enum):
    """Similarity metric used by the borrowing weights"""
    JSD = "jsd"
    HELLINGER = "hellinger"


@dataclass(frozen=True)
class BetaShapes:
    """Shape pair (alpha, beta) of a beta distribution"""
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"Beta shape {name} must be positive and finite, got {value}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def mode(self) -> float:
        """Interior mode, or the mean when the density is not unimodal inside (0,1)"""
        if self.alpha > 1 and self.beta > 1:
            return (self.alpha - 1) / (self.alpha + self.beta - 2)
        return self.mean

    def as_tuple(self) -> Tuple[float, float]:
        return (self.alpha, self.beta)


def _check_shape(value: float, name: str):
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value}")


def log_beta(a: float, b: float) -> float:
    """Natural log of the beta function B(a, b)"""
    _check_shape(a, "a")
    _check_shape(b, "b")
    return float(betaln(a, b))


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Modified Lentz evaluation of the incomplete beta continued fraction"""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d

    for m in range(1, CF_MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOLERANCE:
            return h

    raise NumericalError(
        f"Incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}",
        iterations=CF_MAX_ITERATIONS,
    )


def reg_inc_beta(x: float, shapes: BetaShapes) -> float:
    """Regularized incomplete beta I_x(alpha, beta), the beta CDF at x"""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0

    a, b = shapes.alpha, shapes.beta
    log_front = a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    front = math.exp(log_front)
    if x > a / (a + b):
        value = 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b
    else:
        value = front * _beta_continued_fraction(a, b, x) / a
    return min(max(value, 0.0), 1.0)


def _guard(values: np.ndarray) -> np.ndarray:
    return np.where(np.abs(values) < _FPMIN, _FPMIN, values)


def _beta_continued_fraction_array(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Element-wise Lentz evaluation; converged entries are frozen"""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 / _guard(1.0 - qab * x / qap)
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)

    for m in range(1, CF_MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 / _guard(1.0 + aa * d)
        c = _guard(1.0 + aa / c)
        h = np.where(done, h, h * d * c)

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 / _guard(1.0 + aa * d)
        c = _guard(1.0 + aa / c)
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < CF_TOLERANCE
        if done.all():
            return h

    raise NumericalError(
        f"Incomplete beta continued fraction did not converge for {int((~done).sum())} entries",
        iterations=CF_MAX_ITERATIONS,
    )


def _inc_beta_terms(x, alpha, beta):
    """Validated broadcast inputs plus the log prefactor and Lentz terms of the interior entries"""
    x, a, b = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)
    )
    if np.any((x < 0) | (x > 1)):
        raise DomainError("x must lie in [0, 1]")
    if np.any(~np.isfinite(a) | ~np.isfinite(b) | (a <= 0) | (b <= 0)):
        raise DomainError("Beta shapes must be positive and finite")

    inner = (x > 0.0) & (x < 1.0)
    if not inner.any():
        return x, inner, None

    xi, ai, bi = x[inner], a[inner], b[inner]
    log_front = ai * np.log(xi) + bi * np.log1p(-xi) - betaln(ai, bi)
    swap = xi > ai / (ai + bi)

    # Swapped entries evaluate I_{1-x}(b, a)
    ca = np.where(swap, bi, ai)
    cb = np.where(swap, ai, bi)
    cx = np.where(swap, 1.0 - xi, xi)
    cf = _beta_continued_fraction_array(ca, cb, cx)
    return x, inner, (log_front, swap, cf, ca)


def reg_inc_beta_array(x, alpha, beta) -> np.ndarray:
    """Vectorized I_x(alpha, beta) over broadcast arrays, same algorithm as reg_inc_beta"""
    x, inner, terms = _inc_beta_terms(x, alpha, beta)
    result = np.where(x >= 1.0, 1.0, 0.0)
    if terms is None:
        return result

    log_front, swap, cf, ca = terms
    tail = np.exp(log_front) * cf / ca
    result[inner] = np.clip(np.where(swap, 1.0 - tail, tail), 0.0, 1.0)
    return result


def log_reg_inc_beta_array(x, alpha, beta) -> np.ndarray:
    """Natural log of I_x(alpha, beta); stays finite where the CDF itself underflows"""
    x, inner, terms = _inc_beta_terms(x, alpha, beta)
    result = np.where(x >= 1.0, 0.0, -np.inf)
    if terms is None:
        return result

    log_front, swap, cf, ca = terms
    log_tail = log_front + np.log(cf / ca)
    with np.errstate(divide="ignore"):
        upper = np.log1p(-np.minimum(np.exp(log_tail), 1.0))
    result[inner] = np.minimum(np.where(swap, upper, log_tail), 0.0)
    return result


def binom_pmf(k: int, n: int, p: float) -> float:
    """Binomial probability C(n,k) p^k (1-p)^(n-k), evaluated in log space"""
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"Binomial pmf needs 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Success probability must lie in [0, 1], got {p}")
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    log_pmf = math.log(math.comb(n, k)) + k * math.log(p) + (n - k) * math.log1p(-p)
    return math.exp(log_pmf)


def binom_pmf_vector(n: int, p: float) -> np.ndarray:
    """pmf over all counts 0..n"""
    return np.array([binom_pmf(k, n, p) for k in range(n + 1)])


def _log_density(x: float, shapes: BetaShapes, log_norm: float) -> float:
    return (shapes.alpha - 1.0) * math.log(x) + (shapes.beta - 1.0) * math.log1p(-x) - log_norm


def _breakpoints(p: BetaShapes, q: BetaShapes) -> list:
    return sorted({m for m in (p.mode, q.mode) if 0.0 < m < 1.0})


def _integrate(integrand, points: list, what: str) -> float:
    result = integrate.quad(
        integrand, 0.0, 1.0,
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT,
        points=points or None, full_output=1,
    )
    # A fourth element is only present when QUADPACK reports a problem
    if len(result) > 3:
        raise NumericalError(f"{what} quadrature did not converge: {result[3]}")
    return result[0]


def kld(p: BetaShapes, q: BetaShapes) -> float:
    """Kullback-Leibler divergence KLD(P, Q) between two beta distributions"""
    if p == q:
        return 0.0
    norm_p = log_beta(p.alpha, p.beta)
    norm_q = log_beta(q.alpha, q.beta)

    def integrand(x: float) -> float:
        if x <= 0.0 or x >= 1.0:
            return 0.0
        lp = _log_density(x, p, norm_p)
        lq = _log_density(x, q, norm_q)
        return math.exp(lp) * (lp - lq)

    return max(_integrate(integrand, _breakpoints(p, q), "KLD"), 0.0)


def jsd(p: BetaShapes, q: BetaShapes) -> float:
    """Jensen-Shannon divergence with natural logarithm, 0 <= jsd <= ln 2"""
    if p == q:
        return 0.0
    norm_p = log_beta(p.alpha, p.beta)
    norm_q = log_beta(q.alpha, q.beta)

    def integrand(x: float) -> float:
        if x <= 0.0 or x >= 1.0:
            return 0.0
        lp = _log_density(x, p, norm_p)
        lq = _log_density(x, q, norm_q)
        # log of the mixture density M = (P + Q) / 2
        lm = max(lp, lq) + math.log1p(math.exp(-abs(lp - lq))) - _LN2
        return 0.5 * (math.exp(lp) * (lp - lm) + math.exp(lq) * (lq - lm))

    value = _integrate(integrand, _breakpoints(p, q), "JSD")
    return min(max(value, 0.0), _LN2)


def hellinger(p: BetaShapes, q: BetaShapes) -> float:
    """Closed-form Hellinger-type distance 1 - B(mean shapes)/sqrt(B(p) B(q))"""
    if p == q:
        return 0.0
    log_ratio = (
        log_beta((p.alpha + q.alpha) / 2.0, (p.beta + q.beta) / 2.0)
        - 0.5 * (log_beta(p.alpha, p.beta) + log_beta(q.alpha, q.beta))
    )
    return min(max(1.0 - math.exp(log_ratio), 0.0), 1.0)


def divergence(kind: DivergenceKind, p: BetaShapes, q: BetaShapes) -> float:
    """Dispatch to the configured divergence"""
    if DivergenceKind(kind) is DivergenceKind.HELLINGER:
        return hellinger(p, q)
    return jsd(p, q)
