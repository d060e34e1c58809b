"""Constants and worst-case error bounds for the extrapolated rules.

The bounds grow like ``(const)^|u|`` and quickly leave double range for
large subsets, so everything is accumulated in natural-log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.special import bernoulli, comb, logsumexp

from .errors import CapacityError, ConfigurationError, DigitRangeError
from .quadrature import evaluations, extrapolation_weights

SUBSET_LIMIT = 20
SUP_SAMPLES = 100_000


@dataclass
class BoundParameters:
    """Inputs of the worst-case bounds.

    Supply either product weights ``gamma`` (``gamma_u = prod_{j in u}
    gamma_j``) or an explicit ``subset_weights`` map from frozensets of
    1-based coordinates to ``gamma_u``.  ``q`` and ``r`` are recorded but
    never enter the bound.
    """

    alpha: int
    p: int = 2
    t: int = 0
    dims: int = 1
    gamma: Sequence[float] | None = None
    subset_weights: Mapping[frozenset, float] | None = None
    q: float = math.inf
    r: float = math.inf

    def __post_init__(self):
        if self.t < 0:
            raise ConfigurationError("t must be non-negative")
        if (self.gamma is None) == (self.subset_weights is None):
            raise ConfigurationError("give exactly one of gamma or subset_weights")
        if self.gamma is not None:
            if len(self.gamma) != self.dims:
                raise ConfigurationError(f"{len(self.gamma)} weights for {self.dims} dims")
            if min(self.gamma) < 0:
                raise ConfigurationError("weights must be non-negative")
        elif any(w < 0 for w in self.subset_weights.values()):
            raise ConfigurationError("weights must be non-negative")


def bernoulli_value(tau: int) -> float:
    """``b_tau = B_tau(0) / tau!`` (so ``b_1 = -1/2``)."""
    return float(bernoulli(tau)[tau]) / math.factorial(tau)


def scaled_bernoulli_poly(tau: int) -> np.polynomial.Polynomial:
    """``b_tau(x) = B_tau(x) / tau!`` as a polynomial in ``x``."""
    b = bernoulli(tau)
    coef = np.zeros(tau + 1)
    for k in range(tau + 1):
        coef[tau - k] = comb(tau, k, exact=True) * b[k]
    return np.polynomial.Polynomial(coef / math.factorial(tau))


def sup_periodic_bernoulli(alpha: int) -> float:
    """``sup_{x in [0,1)} |b_alpha(x)|`` by dense sampling plus critical points."""
    poly = scaled_bernoulli_poly(alpha)
    xs = np.linspace(0.0, 1.0, SUP_SAMPLES + 1)
    crit = [r.real for r in poly.deriv().roots() if abs(r.imag) < 1e-12 and 0.0 <= r.real <= 1.0]
    # x = 1 is a limit point of [0,1), so it counts towards the supremum
    cands = np.concatenate([xs, np.array(crit, dtype=float), [0.0, 1.0]])
    return float(np.max(np.abs(poly(cands))))


def c_alpha(alpha: int, p: int = 2) -> float:
    """Walsh-coefficient decay constant; defined for ``alpha >= 2``."""
    if alpha < 2:
        raise DigitRangeError("C_alpha requires alpha >= 2")
    sin_term = 2.0 * math.sin(math.pi / p)
    first = (1 + 1 / p + 1 / (p * (p + 1))) ** (alpha - 2)
    second = 3 + 2 / p + (2 * p + 1) / (p - 1)
    third = max(2 / sin_term**alpha, max(1 / sin_term**z for z in range(1, alpha)))
    return first * second * third


def a_alpha(alpha: int, p: int = 2) -> float:
    """``sum_l p^(-mu_alpha(l))`` over all ``l >= 0`` in closed form.

    The series diverges for ``alpha = 1`` and ``inf`` is returned.
    """
    if alpha == 1:
        return math.inf
    def prod(w):
        out = Fraction(1)
        for i in range(1, w + 1):
            out *= Fraction(p - 1, p**i - 1)
        return out

    total = 1 + sum(prod(w) for w in range(1, alpha))
    total += Fraction(p**alpha - 1, p**alpha - p) * prod(alpha)
    return float(total)


def d_alpha(alpha: int) -> float:
    """``max(|b_1|, ..., |b_(alpha-1)|, sup |b~_alpha|)``."""
    vals = [abs(bernoulli_value(tau)) for tau in range(1, alpha)]
    vals.append(sup_periodic_bernoulli(alpha))
    return max(vals)


def e_constant(k: int, alpha: int, p: int = 2) -> float:
    return p ** (alpha * k) * (1 / p + (p / (p - 1)) ** (alpha * k))


def bound_constants(alpha: int, p: int = 2) -> dict:
    """``{"C_alpha", "A_alpha", "D_alpha"}``; ``C_alpha`` is ``None`` for ``alpha < 2``."""
    if alpha < 1:
        raise DigitRangeError("alpha must be >= 1")
    return {
        "C_alpha": c_alpha(alpha, p) if alpha >= 2 else None,
        "A_alpha": a_alpha(alpha, p),
        "D_alpha": d_alpha(alpha),
    }


def _log_common(k: int, alpha: int, p: int, t: int) -> float:
    """``log(p^t A^k C^k E_k + (alpha+1)^k D^k)``."""
    consts = bound_constants(alpha, p)
    ratio = p / (p - 1)
    log_e = alpha * k * math.log(p) + alpha * k * math.log(ratio) + math.log1p(ratio ** (-alpha * k) / p)
    first = t * math.log(p) + k * (math.log(consts["A_alpha"]) + math.log(consts["C_alpha"])) + log_e
    second = k * (math.log(alpha + 1) + math.log(consts["D_alpha"]))
    return float(np.logaddexp(first, second))


def log_u_constant(k: int, alpha: int, t: int, p: int = 2) -> float:
    """Natural log of the square-matrix rule constant for ``|u| = k``."""
    weights = extrapolation_weights(alpha, p)
    tail = sum(abs(float(w)) * (alpha * p ** (alpha + 1 - i)) ** alpha for i, w in enumerate(weights))
    return alpha * k * math.log(2 * alpha) + _log_common(k, alpha, p, t) + math.log(tail)


def log_v_constant(k: int, alpha: int, t: int, p: int = 2) -> float:
    """Natural log of the fixed-``m`` rule constant for ``|u| = k``."""
    weights = extrapolation_weights(alpha, p)
    tail = sum(abs(float(w)) for w in weights)
    log_p_2 = math.log(2) / math.log(p)
    return alpha * k * math.log(alpha / log_p_2) + _log_common(k, alpha, p, t) + math.log(tail)


def u_constant(k: int, alpha: int, t: int, p: int = 2) -> float:
    return math.exp(log_u_constant(k, alpha, t, p))


def v_constant(k: int, alpha: int, t: int, p: int = 2) -> float:
    return math.exp(log_v_constant(k, alpha, t, p))


def log_weight_sums(params: BoundParameters) -> np.ndarray:
    """``log sum_{|u|=k} gamma_u`` for ``k = 0..dims``."""
    s = params.dims
    with np.errstate(divide="ignore"):
        if params.gamma is not None:
            # elementary symmetric polynomials of the product weights
            log_e = np.full(s + 1, -np.inf)
            log_e[0] = 0.0
            for g in params.gamma:
                lg = np.log(g)
                log_e[1:] = np.logaddexp(log_e[1:], lg + log_e[:-1])
            return log_e
        if s > SUBSET_LIMIT:
            raise CapacityError(f"explicit subset weights need dims <= {SUBSET_LIMIT}")
        sums = np.zeros(s + 1)
        for u, w in params.subset_weights.items():
            u = frozenset(u)
            if not u or not u <= set(range(1, s + 1)):
                raise ConfigurationError(f"subset {sorted(u)} not a non-empty subset of 1..{s}")
            sums[len(u)] += w
        return np.log(sums)


VARIANTS = ("extrapolated-square", "extrapolated-fixed-m")


def _valid_n(N: int, variant: str, alpha: int, p: int) -> bool:
    m = 1
    while evaluations(variant, m, alpha, p) < N:
        m += 1
    return evaluations(variant, m, alpha, p) == N


def error_bound(params: BoundParameters, N: int, variant: str = "extrapolated-square") -> float:
    """Worst-case error bound ``sum_u gamma_u K_|u| (log_p N)^(alpha|u|) / N^alpha``.

    ``variant`` selects the square-matrix rule (``"extrapolated-square"``,
    ``N = p^m + ... + p^(m+alpha-1)``, constant ``U``) or the fixed-``m``
    rule (``"extrapolated-fixed-m"``, ``N = alpha p^m``, constant ``V``).
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown bound variant {variant!r}")
    alpha, p, t = params.alpha, params.p, params.t
    if alpha < 2:
        raise DigitRangeError("bounds require alpha >= 2")
    if not _valid_n(N, variant, alpha, p):
        raise ConfigurationError(f"N={N} is not an evaluation count of {variant}")
    log_const = log_u_constant if variant == "extrapolated-square" else log_v_constant
    log_g = log_weight_sums(params)
    log_log_n = math.log(math.log(N) / math.log(p))
    terms = [
        log_g[k] + log_const(k, alpha, t, p) + alpha * k * log_log_n - alpha * math.log(N)
        for k in range(1, params.dims + 1)
        if np.isfinite(log_g[k])
    ]
    if not terms:
        return 0.0
    return float(np.exp(logsumexp(terms)))


def constants_report(alpha: int, p: int, t: int, dims: int) -> dict:
    """Serializable constants, including ``U`` for each subset size."""
    consts = bound_constants(alpha, p)
    # JSON has no infinity; A_1 diverges
    report = {k: (None if v is not None and math.isinf(v) else v) for k, v in consts.items()}
    if alpha < 2:
        return report
    log10_u = [log_u_constant(k, alpha, t, p) / math.log(10) for k in range(1, dims + 1)]
    log10_v = [log_v_constant(k, alpha, t, p) / math.log(10) for k in range(1, dims + 1)]
    report["U_per_cardinality"] = [10**x if x < 300 else None for x in log10_u]
    report["log10_U_per_cardinality"] = log10_u
    report["V_per_cardinality"] = [10**x if x < 300 else None for x in log10_v]
    report["log10_V_per_cardinality"] = log10_v
    return report
