"""QMC rules, Richardson extrapolation and the two extrapolated algorithms."""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from .constructions import DigitalSequence
from .digital import (
    DigitalNet,
    GeneratingMatrix,
    PointSet,
    check_family,
    numerators_to_real,
    truncate_numerators,
)
from .errors import CapacityError, ConfigurationError, DigitRangeError

GRID_LIMIT = 1 << 26

#: Rows per block when summing over a materialised PointSet.
POINTSET_BLOCK = 1 << 16


class Integrand:
    """A vectorised integrand on ``[0,1)^s`` with an evaluation counter.

    ``func`` receives an ``(N, s)`` float array and returns ``N`` values.
    Values of a wider float dtype (``longdouble`` or a quad dtype) are
    summed without first rounding them to double.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], dims: int, name: str = "f", exact: float | None = None):
        self.func = func
        self.dims = dims
        self.name = name
        self.exact = exact
        self.evaluations = 0
        self._lock = threading.Lock()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dims:
            raise ConfigurationError(f"integrand {self.name} expects {self.dims} dims, got shape {x.shape}")
        values = np.asarray(self.func(x))
        if values.dtype.kind in "biuf" and values.dtype.itemsize <= 8:
            values = values.astype(np.float64, copy=False)
        with self._lock:
            self.evaluations += x.shape[0]
        return values

    def reset_counter(self):
        with self._lock:
            self.evaluations = 0

    def __repr__(self):
        return f"Integrand({self.name!r}, dims={self.dims})"


def constant(c: float, dims: int) -> Integrand:
    return Integrand(lambda x: np.full(x.shape[0], c), dims, name=f"const({c})", exact=c)


PointsLike = Union[PointSet, DigitalNet]


def _split(values: np.ndarray) -> list[float]:
    """Doubles whose sum carries ``values`` to about 106 bits."""
    if values.dtype == np.float64:
        return values.tolist()
    hi = values.astype(np.float64)
    lo = (values - hi.astype(values.dtype)).astype(np.float64)
    return hi.tolist() + lo.tolist()


def _block_sum(values: np.ndarray) -> tuple[float, float]:
    """Correctly rounded sum and the rounded residual, ``sum ~ s + r``."""
    terms = _split(values)
    s = math.fsum(terms)
    terms.append(-s)
    return s, math.fsum(terms)


def qmc(f: Integrand, points: PointsLike, precision: int | None = None, threads: int = 1, exact: bool = False):
    """Equal-weight average of ``f`` over a point set.

    Nodes may first be truncated to ``precision`` digits.  Each block sum is
    kept as a correctly rounded double plus its residual and the blocks are
    combined exactly; the block partition depends only on the point set, so
    the result is bit-identical for any ``threads``.

    Returns a float, or with ``exact=True`` the ``Fraction`` holding the
    accumulated average before the final rounding.
    """
    if isinstance(points, DigitalNet):
        n, p, total, dims = points.n, points.p, points.size, points.dims
        nblocks = points.num_blocks()

        block = points.block
    else:
        n, p, total, dims = points.n, points.p, len(points), points.dims
        nblocks = -(-total // POINTSET_BLOCK)

        def block(q):
            return points.numerators[q * POINTSET_BLOCK : (q + 1) * POINTSET_BLOCK]

    if dims != f.dims:
        raise ConfigurationError(f"point set has {dims} dims, integrand {f.dims}")
    if precision is not None and precision < n:
        target = precision
    else:
        target = n

    def work(q):
        v = block(q)
        if target != n:
            v = truncate_numerators(v, n, target, p)
        return _block_sum(f(numerators_to_real(v, target, p)))

    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, range(nblocks)))
    else:
        partials = [work(q) for q in range(nblocks)]
    mean = sum((Fraction(a) + Fraction(b) for a, b in partials), Fraction(0)) / total
    return mean if exact else float(mean)


def regular_grid(f: Integrand, n: int, s: int | None = None, p: int = 2, threads: int = 1) -> float:
    """Average of ``f`` over the left-endpoint grid ``{h / p^n}^s``."""
    s = f.dims if s is None else s
    if p ** (n * s) > GRID_LIMIT:
        raise CapacityError(f"{p}^({n}*{s}) grid points exceed the limit")
    axes = np.meshgrid(*[np.arange(p**n, dtype=np.uint64)] * s, indexing="ij")
    v = np.stack([a.ravel() for a in axes], axis=1)
    return qmc(f, PointSet(v, n, p), threads=threads)


def extrapolation_weights(alpha: int, p: int = 2) -> list[Fraction]:
    """Closed-form weights ``w_0..w_(alpha-1)``; they sum to one."""
    if alpha < 1:
        raise DigitRangeError("alpha must be >= 1")
    weights = []
    for i in range(alpha):
        w = Fraction(1)
        for j in range(1, alpha - i):
            w *= Fraction(-1, p**j - 1)
        for j in range(1, i + 1):
            w *= Fraction(p**j, p**j - 1)
        weights.append(w)
    return weights


def richardson_level(values: Sequence[float], tau: int, p: int = 2) -> list[float]:
    """One Richardson step removing the ``p^(-tau n)`` term."""
    if len(values) < 2:
        raise DigitRangeError("need at least two estimates to extrapolate")
    q = p**tau
    return [(q * values[i + 1] - values[i]) / (q - 1) for i in range(len(values) - 1)]


@dataclass
class ExtrapolationTableau:
    """Triangular array ``levels[tau-1][i] = I^(tau)_(first+i)``."""

    p: int
    alpha: int
    first: int
    levels: list[list[float]] = field(default_factory=list)

    @classmethod
    def build(cls, level1: Sequence, alpha: int, p: int = 2, first: int = 0) -> "ExtrapolationTableau":
        """Entries are exact rationals; floats are converted without rounding."""
        if len(level1) < alpha:
            raise DigitRangeError(f"{len(level1)} level-1 estimates cannot support alpha={alpha}")
        levels = [[Fraction(v) for v in level1]]
        for tau in range(1, alpha):
            levels.append(richardson_level(levels[-1], tau, p))
        return cls(p, alpha, first, levels)

    def value(self, tau: int, m: int) -> float:
        row = self.levels[tau - 1]
        i = m - self.first
        if not 0 <= i < len(row):
            raise DigitRangeError(f"I^({tau})_{m} not in tableau")
        return float(row[i])

    def level(self, tau: int) -> dict[int, float]:
        return {self.first + i: float(v) for i, v in enumerate(self.levels[tau - 1])}

    @property
    def weights(self) -> list[Fraction]:
        return extrapolation_weights(self.alpha, self.p)

    def combined(self, m: int) -> float:
        """``sum_i w_i I^(1)_(m+i)``, evaluated exactly and rounded once."""
        row = self.levels[0]
        i0 = m - self.first
        if i0 < 0 or i0 + self.alpha > len(row):
            raise DigitRangeError(f"level-1 window for m={m} not available")
        return float(sum(w * row[i0 + i] for i, w in enumerate(self.weights)))


def _check_dims(f: Integrand, dims: int):
    if f.dims != dims:
        raise ConfigurationError(f"sequence has {dims} dims, integrand {f.dims}")


def square_net(spec: DigitalSequence, m: int) -> DigitalNet:
    """Net from the square matrices ``C^[m x m]``."""
    return DigitalNet(spec.submatrices(m, m))


class ExtensibleRule:
    """Square-matrix extrapolation that grows in ``m`` without recomputation.

    Level-1 estimates ``I(f; P^[i x i])`` are cached, so extending the
    range by one costs exactly one new QMC sum.
    """

    def __init__(self, f: Integrand, spec: DigitalSequence, alpha: int, threads: int = 1):
        _check_dims(f, spec.dims)
        if alpha < 1:
            raise DigitRangeError("alpha must be >= 1")
        self.f = f
        self.spec = spec
        self.alpha = alpha
        self.threads = threads
        self.level1: dict[int, Fraction] = {}

    def _exact(self, i: int) -> Fraction:
        if i not in self.level1:
            self.level1[i] = qmc(self.f, square_net(self.spec, i), threads=self.threads, exact=True)
        return self.level1[i]

    def estimate(self, i: int) -> float:
        """``I(f; P^[i x i])``."""
        return float(self._exact(i))

    def tableau(self, m_min: int, m_max: int) -> ExtrapolationTableau:
        if m_min < 1 or m_max - m_min < self.alpha - 1:
            raise DigitRangeError(f"window [{m_min}, {m_max}] too small for alpha={self.alpha}")
        values = [self._exact(i) for i in range(m_min, m_max + 1)]
        return ExtrapolationTableau.build(values, self.alpha, self.spec.p, m_min)

    def compute(self, m_min: int, m_max: int) -> dict[int, float]:
        return self.tableau(m_min, m_max).level(self.alpha)


def algorithm1(f: Integrand, spec: DigitalSequence, m: int, alpha: int, threads: int = 1) -> float:
    """Extrapolated QMC with square matrices ``C^[(m+i) x (m+i)]``, ``0 <= i < alpha``.

    Uses ``p^m + ... + p^(m+alpha-1)`` evaluations.
    """
    return ExtensibleRule(f, spec, alpha, threads).compute(m, m + alpha - 1)[m]


def algorithm1_extensible(f: Integrand, spec: DigitalSequence, m_min: int, m_max: int, alpha: int, threads: int = 1) -> dict[int, float]:
    """``I^(alpha)_m`` for ``m_min <= m <= m_max - alpha + 1`` from shared level-1 sums."""
    return ExtensibleRule(f, spec, alpha, threads).compute(m_min, m_max)


def fixed_m_matrices(net, m: int, alpha: int) -> list[GeneratingMatrix]:
    """Upper ``m + alpha - 1`` rows of an order-``alpha`` net with ``m`` columns."""
    rows = m + alpha - 1
    if isinstance(net, DigitalSequence):
        return net.submatrices(rows, m)
    n, cols, _ = check_family(net)
    if cols != m:
        raise ConfigurationError(f"matrices have {cols} columns, expected m={m}")
    if n < rows:
        raise CapacityError(f"{n} rows available, algorithm needs {rows}")
    return [c.submatrix(rows, m) for c in net]


def algorithm2_tableau(f: Integrand, net, m: int, alpha: int, threads: int = 1) -> ExtrapolationTableau:
    mats = fixed_m_matrices(net, m, alpha)
    _check_dims(f, len(mats))
    p = mats[0].p
    level1 = [
        qmc(f, DigitalNet([c.submatrix(m + i, m) for c in mats]), threads=threads, exact=True)
        for i in range(alpha)
    ]
    return ExtrapolationTableau.build(level1, alpha, p, m)


def algorithm2(f: Integrand, net, m: int, alpha: int, threads: int = 1) -> float:
    """Extrapolation over precision: fixed ``m`` columns, rows ``m .. m+alpha-1``.

    ``net`` is either a digital sequence or explicit order-``alpha``
    matrices with ``m`` columns.  Uses ``alpha p^m`` evaluations.
    """
    return algorithm2_tableau(f, net, m, alpha, threads).value(alpha, m)


def plain_qmc(f: Integrand, spec: DigitalSequence, m: int, truncate_u: int | None = None, threads: int = 1) -> float:
    """QMC over the first ``p^m`` points of ``spec`` at precision ``min(alpha m, u)``.

    Truncating the matrices to ``u`` rows gives exactly the truncated nodes.
    """
    _check_dims(f, spec.dims)
    n = spec.max_rows(m)
    if truncate_u is not None:
        n = min(n, truncate_u)
    return qmc(f, DigitalNet(spec.submatrices(n, m)), threads=threads)


def evaluations(algorithm: str, m: int, alpha: int, p: int = 2) -> int:
    """Integrand evaluations used by one estimate at ``m``."""
    if algorithm == "plain":
        return p**m
    if algorithm == "extrapolated-square":
        return sum(p ** (m + i) for i in range(alpha))
    if algorithm == "extrapolated-fixed-m":
        return alpha * p**m
    raise ConfigurationError(f"unknown algorithm {algorithm!r}")
