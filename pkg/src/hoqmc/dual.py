"""Dual nets, the weight function and exhaustive strength checks."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .digital import GeneratingMatrix, check_family
from .errors import CapacityError

#: Exhaustive enumerations are limited to this many candidate vectors.
ENUMERATION_LIMIT = 1 << 26

_CHUNK = 1 << 18


def nu(k: int, n: int, p: int = 2) -> tuple[int, ...]:
    """First ``n`` base-``p`` digits of ``k``, least significant first."""
    out = []
    for _ in range(n):
        k, d = divmod(k, p)
        out.append(d)
    return tuple(out)


def _as_vector(k) -> tuple[int, ...]:
    if isinstance(k, (int, np.integer)):
        return (int(k),)
    return tuple(int(x) for x in k)


def dual_syndrome(matrices: Sequence[GeneratingMatrix], k) -> np.ndarray:
    """``C_1^T nu_n(k_1) + ... + C_s^T nu_n(k_s)`` over F_p."""
    n, m, p = check_family(matrices)
    k = _as_vector(k)
    if len(k) != len(matrices):
        raise ValueError(f"dual vector has {len(k)} components for {len(matrices)} matrices")
    acc = np.zeros(m, dtype=np.int64)
    for c, kj in zip(matrices, k):
        acc += c.transpose_apply(nu(kj, n, p))
    return acc % p


def is_dual(matrices: Sequence[GeneratingMatrix], k) -> bool:
    return not dual_syndrome(matrices, k).any()


def _syndrome_tables(matrices, bound):
    """Per coordinate: ``C_j^T nu_n(k)`` for all ``k < bound``, shape (bound, m)."""
    n, m, p = check_family(matrices)
    ks = np.arange(bound, dtype=np.int64)
    kappa = np.empty((bound, n), dtype=np.int64)
    rest = ks.copy()
    for i in range(n):
        rest, kappa[:, i] = np.divmod(rest, p)
    return [(kappa @ c.entries.astype(np.int64)) % p for c in matrices]


def enumerate_dual(matrices: Sequence[GeneratingMatrix], bound: int) -> list[tuple[int, ...]]:
    """All dual vectors with every component below ``bound``, in lexicographic order."""
    n, m, p = check_family(matrices)
    s = len(matrices)
    total = bound**s
    if total > ENUMERATION_LIMIT:
        raise CapacityError(f"{bound}^{s} candidates exceed the enumeration limit")
    tables = _syndrome_tables(matrices, bound)
    found = []
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        comps = []
        rest = flat.copy()
        for _ in range(s):
            rest, c = np.divmod(rest, bound)
            comps.append(c)
        comps.reverse()  # first component most significant: flat order is lexicographic
        acc = np.zeros((flat.size, m), dtype=np.int64)
        for tab, c in zip(tables, comps):
            acc += tab[c]
        hit = ~((acc % p).any(axis=1))
        found.extend(zip(*(c[hit].tolist() for c in comps)))
    return [tuple(v) for v in found]


def mu_alpha(k, alpha: int, p: int = 2) -> int:
    """Sum of the ``alpha`` largest nonzero-digit positions of ``k``.

    Positions are 1-based: digit ``kappa`` at ``p^(c-1)`` has position ``c``.
    Vectors are weighted componentwise and summed.
    """
    if not isinstance(k, (int, np.integer)):
        return sum(mu_alpha(int(kj), alpha, p) for kj in k)
    positions = []
    c = 1
    k = int(k)
    while k:
        k, d = divmod(k, p)
        if d:
            positions.append(c)
        c += 1
    return sum(sorted(positions, reverse=True)[:alpha])


def mu_alpha_table(bound: int, alpha: int, p: int = 2) -> np.ndarray:
    """``mu_alpha(k)`` for all ``k < bound`` as an integer array."""
    ks = np.arange(bound, dtype=np.int64)
    ndig = max(1, int(np.ceil(np.log(max(bound, 2)) / np.log(p))) + 1)
    pos = np.zeros((bound, ndig), dtype=np.int64)
    rest = ks.copy()
    for i in range(ndig):
        rest, d = np.divmod(rest, p)
        pos[:, i] = np.where(d > 0, i + 1, 0)
    pos = -np.sort(-pos, axis=1)
    return pos[:, :alpha].sum(axis=1)


def net_strength(matrices: Sequence[GeneratingMatrix], alpha: int) -> int:
    """``min mu_alpha`` over nonzero dual vectors, capped at ``n + 1``.

    Candidates are all ``k`` with components below ``p^n``; the vector
    ``(p^n, 0, ..., 0)`` is always dual and supplies the cap.
    """
    n, m, p = check_family(matrices)
    s = len(matrices)
    bound = p**n
    if bound**s > ENUMERATION_LIMIT:
        raise CapacityError(f"{p}^({n}*{s}) candidates exceed the enumeration limit")
    weights = mu_alpha_table(bound, alpha, p)
    best = n + 1
    for k in enumerate_dual(matrices, bound):
        if any(k):
            best = min(best, int(sum(weights[kj] for kj in k)))
    return best


def inferred_t(strength: int, alpha: int, m: int) -> int:
    """Smallest ``t >= 0`` with ``strength > alpha m - t``."""
    return max(0, alpha * m - strength + 1)
