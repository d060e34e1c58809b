"""Walsh functions over F_p with exact exponent bookkeeping.

A Walsh value ``omega_p^e`` is carried as the integer ``e mod p``; complex
numbers are formed only when a caller asks for them.
"""

from __future__ import annotations

import cmath
from typing import Callable, Sequence

import numpy as np

from .digital import FixedPointCoord, numerator_digits, numerators_to_real
from .dual import nu
from .errors import CapacityError

GRID_LIMIT = 1 << 26


def root_of_unity(e: int, p: int) -> complex:
    """``omega_p^e`` with exact values for ``e = 0`` and ``p = 2``."""
    e %= p
    if e == 0:
        return 1 + 0j
    if p == 2:
        return -1 + 0j
    return cmath.exp(2j * cmath.pi * e / p)


def walsh_exponent(k, x) -> int:
    """Exponent of ``wal_k(x)``; vectors of indices and coordinates multiply."""
    if isinstance(x, FixedPointCoord):
        xi = x.digits()
        kappa = nu(int(k), len(xi), x.p)
        return sum(a * b for a, b in zip(kappa, xi)) % x.p
    k = tuple(k)
    x = tuple(x)
    if len(k) != len(x):
        raise ValueError("index and point dimensions differ")
    if not x:
        return 0
    return sum(walsh_exponent(kj, xj) for kj, xj in zip(k, x)) % x[0].p


def walsh(k, x) -> complex:
    """``wal_k(x)`` for scalar or vector arguments."""
    p = x.p if isinstance(x, FixedPointCoord) else x[0].p
    return root_of_unity(walsh_exponent(k, x), p)


def walsh_exponents(k: Sequence[int], numerators: np.ndarray, n: int, p: int) -> np.ndarray:
    """Exponents of ``wal_k`` at every row of an ``(N, s)`` numerator array."""
    v = np.asarray(numerators, dtype=np.uint64)
    if v.ndim == 1:
        v = v[:, None]
    e = np.zeros(v.shape[0], dtype=np.int64)
    for j, kj in enumerate(k):
        kappa = np.array(nu(int(kj), n, p), dtype=np.int64)
        if not kappa.any():
            continue
        e += numerator_digits(v[:, j], n, p).astype(np.int64) @ kappa
    return e % p


def character_mean(exponents: np.ndarray, p: int) -> complex:
    """Mean of ``omega_p^e`` over ``e``.

    Exact when the result is 1 (all exponents zero) or 0 (all residues
    equally frequent); since ``1 + omega + ... + omega^(p-1)`` is the minimal
    relation among the roots, these are the only ways to obtain 1 or 0.
    """
    exponents = np.asarray(exponents) % p
    total = exponents.size
    counts = np.bincount(exponents.ravel().astype(np.int64), minlength=p)
    if counts[0] == total:
        return 1 + 0j
    if (counts == counts[0]).all():
        return 0j
    return sum(int(c) * root_of_unity(e, p) for e, c in enumerate(counts)) / total


def walsh_grid_mean(k: int, n: int, p: int = 2) -> complex:
    """Mean of ``wal_k`` over the grid ``{h / p^n : h < p^n}``."""
    if p**n > GRID_LIMIT:
        raise CapacityError("grid too large")
    h = np.arange(p**n, dtype=np.uint64)
    return character_mean(walsh_exponents([k], h[:, None], n, p), p)


def net_walsh_mean(k: Sequence[int], numerators: np.ndarray, n: int, p: int) -> complex:
    """Mean of ``wal_k`` over the rows of a point set."""
    return character_mean(walsh_exponents(k, numerators, n, p), p)


def walsh_coefficient_oracle(
    f: Callable[[np.ndarray], np.ndarray], k, n: int, p: int = 2
) -> complex:
    """Grid-quadrature estimate of the ``k``-th Walsh coefficient of ``f``.

    ``wal_k`` is constant on each cell of the grid ``p^-n Z^s`` when every
    ``k_j < p^n``, so ``f`` is sampled at the cell midpoints (error
    ``O(p^-2n)`` for smooth ``f``) while the exponent is read from the cell
    index.  ``f`` maps an ``(N, s)`` array to ``N`` values.  Values are first summed
    per exponent class, then combined as ``sum_e omega^-e (S_e - S_0)``,
    which equals the plain sum because the roots of unity add up to zero;
    a constant ``f`` therefore yields an exact zero for ``k != 0``.
    """
    k = (int(k),) if isinstance(k, (int, np.integer)) else tuple(int(x) for x in k)
    s = len(k)
    if p ** (n * s) > GRID_LIMIT:
        raise CapacityError(f"{p}^({n}*{s}) grid evaluations exceed the limit")
    axes = np.meshgrid(*[np.arange(p**n, dtype=np.uint64)] * s, indexing="ij")
    v = np.stack([a.ravel() for a in axes], axis=1)
    mid = numerators_to_real(v, n, p) + 0.5 / p**n
    values = np.asarray(f(mid), dtype=np.float64)
    e = walsh_exponents(k, v, n, p)
    present = np.unique(e)
    if present.size == 1:
        r = int(present[0])
        return complex(float(values.sum()) * root_of_unity(-r, p)) / p ** (n * s)
    sums = [float(np.sum(values[e == r], dtype=np.float64)) for r in range(p)]
    total = sum((sums[r] - sums[0]) * root_of_unity(-r, p) for r in range(1, p))
    return complex(total) / p ** (n * s)
