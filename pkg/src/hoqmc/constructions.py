"""Sobol' generating matrices, digit interlacing and truncated submatrices."""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .digital import (
    WORD_BITS,
    GeneratingMatrix,
    check_family,
    check_precision,
    digits_to_numerators,
    numerator_digits,
)
from .errors import CapacityError, ConfigurationError, DigitRangeError, DirectionNumberError

DEFAULT_DIRECTION_FILE = "new-joe-kuo-6.1000.txt"


@dataclass(frozen=True)
class DirectionRecord:
    d: int
    degree: int
    a: int
    m_init: tuple[int, ...]


class DirectionNumberTable:
    """Sobol' primitive polynomials and initial direction integers.

    Dimension 1 is always the van der Corput (identity) matrix and is not
    stored in the file.
    """

    def __init__(self, records: Sequence[DirectionRecord] = ()):
        self.records = tuple(records)
        for i, rec in enumerate(self.records):
            if rec.d != i + 2:
                raise DirectionNumberError(f"dimension {rec.d} out of order, expected {i + 2}")

    @property
    def max_dims(self) -> int:
        return len(self.records) + 1

    def record(self, d: int) -> DirectionRecord | None:
        """Record for 1-based dimension ``d`` (``None`` for dimension 1)."""
        if d < 1 or d > self.max_dims:
            raise CapacityError(f"dimension {d} outside table range 1..{self.max_dims}")
        return None if d == 1 else self.records[d - 2]

    @lru_cache(maxsize=None)
    def direction_integers(self, d: int, count: int = WORD_BITS) -> tuple[int, ...]:
        """``m_1, ..., m_count`` for dimension ``d`` from the Sobol' recurrence.

        Column ``l`` of the generating matrix holds the binary digits of
        ``m_l / 2^l``.
        """
        rec = self.record(d)
        if rec is None:
            return (1,) * count
        s, a = rec.degree, rec.a
        m = list(rec.m_init[:count])
        for i in range(s, count):
            new = m[i - s] ^ (m[i - s] << s)
            for k in range(1, s):
                if (a >> (s - 1 - k)) & 1:
                    new ^= m[i - k] << k
            m.append(new)
        return tuple(m)


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise DirectionNumberError(f"not an integer: {token!r}", lineno) from None


def parse_direction_numbers(text: str) -> DirectionNumberTable:
    """Parse Joe-Kuo ``d s a m_i...`` text (first line is a header)."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if lineno == 1 or not line.strip():
            continue
        fields = [_parse_int(t, lineno) for t in line.split()]
        if len(fields) < 4:
            raise DirectionNumberError("expected columns 'd s a m_1 ... m_s'", lineno)
        d, s, a, *m_init = fields
        if s < 1 or len(m_init) != s:
            raise DirectionNumberError(f"degree {s} but {len(m_init)} initial direction integers", lineno)
        if not 0 <= a < 1 << max(s - 1, 0):
            raise DirectionNumberError(f"coefficient a={a} does not fit degree {s}", lineno)
        for i, mi in enumerate(m_init, start=1):
            if mi % 2 == 0 or not 0 < mi < 1 << i:
                raise DirectionNumberError(f"m_{i}={mi} must be odd and below 2^{i}", lineno)
        records.append(DirectionRecord(d, s, a, tuple(m_init)))
    return DirectionNumberTable(records)


def load_direction_numbers(path) -> DirectionNumberTable:
    return parse_direction_numbers(Path(path).read_text())


def default_direction_path() -> Path:
    """``$HOQMC_DATA/<file>`` if present, else the copy bundled with the package."""
    env = os.environ.get("HOQMC_DATA")
    if env:
        candidate = Path(env) / DEFAULT_DIRECTION_FILE
        if candidate.is_file():
            return candidate
    return Path(str(resources.files("hoqmc") / "data" / DEFAULT_DIRECTION_FILE))


@lru_cache(maxsize=4)
def _load_cached(path: str) -> DirectionNumberTable:
    return load_direction_numbers(path)


def default_table() -> DirectionNumberTable:
    return _load_cached(str(default_direction_path()))


def sobol_matrices(table: DirectionNumberTable, dims: int, n: int, m: int) -> list[GeneratingMatrix]:
    """Order-1 Sobol' matrices ``C_1..C_dims`` of shape ``n x m``.

    Entry ``(k, l)`` is bit ``l - k`` of ``m_l`` for ``k <= l`` and zero
    below the diagonal, so rows ``k > m`` are always zero.
    """
    if n < 1 or m < 1:
        raise DigitRangeError("n and m must be positive")
    if dims > table.max_dims:
        raise CapacityError(f"{dims} dimensions requested, table covers {table.max_dims}")
    if m > WORD_BITS:
        raise CapacityError(f"{m} columns exceed the {WORD_BITS}-digit capacity")
    mats = []
    k = np.arange(1, n + 1)[:, None]
    l = np.arange(1, m + 1)[None, :]
    shift = np.where(k <= l, l - k, 0)
    for d in range(1, dims + 1):
        mi = np.array(table.direction_integers(d)[:m], dtype=np.uint64)[None, :]
        bits = (mi >> shift.astype(np.uint64)) & np.uint64(1)
        mats.append(GeneratingMatrix(np.where(k <= l, bits, 0), 2))
    return mats


def interlace_matrices(matrices: Sequence[GeneratingMatrix], alpha: int) -> list[GeneratingMatrix]:
    """Row-interleave groups of ``alpha`` matrices into ``alpha n x m`` matrices.

    Row ``alpha (l-1) + h`` of ``D_j`` is row ``l`` of ``C_(alpha (j-1) + h)``.
    """
    if alpha < 1:
        raise ConfigurationError("interlacing factor must be >= 1")
    n, m, p = check_family(matrices)
    if len(matrices) % alpha:
        raise ConfigurationError(f"{len(matrices)} matrices not divisible by alpha={alpha}")
    if alpha == 1:
        return list(matrices)
    out = []
    for j in range(len(matrices) // alpha):
        group = np.stack([c.entries for c in matrices[alpha * j : alpha * (j + 1)]])
        out.append(GeneratingMatrix(group.transpose(1, 0, 2).reshape(alpha * n, m), p))
    return out


def interlace_point(numerators, n: int, alpha: int, p: int = 2) -> np.ndarray:
    """Digit interlacing of exact coordinates.

    ``numerators`` has trailing axis of length ``alpha * s`` (precision
    ``n``); the result has trailing axis ``s`` at precision ``alpha * n``.
    Output digit ``alpha (i-1) + j`` is digit ``i`` of input ``j`` of the
    block.
    """
    v = np.asarray(numerators, dtype=np.uint64)
    if v.shape[-1] % alpha:
        raise ConfigurationError(f"{v.shape[-1]} coordinates not divisible by alpha={alpha}")
    check_precision(alpha * n, p)
    s = v.shape[-1] // alpha
    digits = numerator_digits(v, n, p)  # (..., alpha*s, n)
    digits = digits.reshape(v.shape[:-1] + (s, alpha, n))
    digits = np.swapaxes(digits, -1, -2).reshape(v.shape[:-1] + (s, alpha * n))
    return digits_to_numerators(digits, p)


class DigitalSequence:
    """A digital sequence whose first ``p^m`` points need at most ``max_rows(m)`` digits."""

    p = 2
    dims: int
    alpha: int = 1

    def max_rows(self, m: int) -> int:
        return self.alpha * m

    def matrices(self, n: int, m: int) -> list[GeneratingMatrix]:
        raise NotImplementedError

    def submatrices(self, n: int, m: int) -> list[GeneratingMatrix]:
        return submatrix(self, n, m)


class SobolSequence(DigitalSequence):
    """Order-1 Sobol' sequence; column depth ``K_j(l) <= l``."""

    def __init__(self, dims: int, table: DirectionNumberTable | None = None):
        self.table = table if table is not None else default_table()
        if dims < 1:
            raise ConfigurationError(f"dimension count must be positive, got {dims}")
        if dims > self.table.max_dims:
            raise CapacityError(f"{dims} dimensions requested, table covers {self.table.max_dims}")
        self.dims = dims

    def matrices(self, n: int, m: int) -> list[GeneratingMatrix]:
        check_precision(n, 2)
        return sobol_matrices(self.table, self.dims, n, m)

    def __repr__(self):
        return f"SobolSequence(dims={self.dims})"


class InterlacedSequence(DigitalSequence):
    """Order-``alpha`` sequence ``D_alpha(S)`` from an order-1 base sequence in ``alpha s`` dims."""

    def __init__(self, base: DigitalSequence, alpha: int):
        if alpha < 1:
            raise ConfigurationError("interlacing factor must be >= 1")
        if base.dims % alpha:
            raise ConfigurationError(f"base has {base.dims} dims, not divisible by alpha={alpha}")
        self.base = base
        self.alpha = alpha
        self.dims = base.dims // alpha
        self.p = base.p

    def matrices(self, n: int, m: int) -> list[GeneratingMatrix]:
        check_precision(n, self.p)
        base_rows = -(-n // self.alpha)
        inter = interlace_matrices(self.base.matrices(base_rows, m), self.alpha)
        return [c.submatrix(n, m) for c in inter]

    def __repr__(self):
        return f"InterlacedSequence({self.base!r}, alpha={self.alpha})"


def interlaced_sobol(dims: int, alpha: int, table: DirectionNumberTable | None = None) -> InterlacedSequence:
    """Order-``alpha`` Sobol' sequence in ``dims`` dimensions."""
    return InterlacedSequence(SobolSequence(alpha * dims, table), alpha)


def submatrix(spec: DigitalSequence, n: int, m: int) -> list[GeneratingMatrix]:
    """Upper-left ``n x m`` generating matrices ``C^[n x m]`` of a sequence."""
    if n < 1 or m < 1:
        raise DigitRangeError("n and m must be positive")
    check_precision(n, spec.p)
    if m > WORD_BITS:
        raise CapacityError(f"{m} columns exceed capacity")
    return spec.matrices(n, m)


def interlaced_t_bound(t: int, alpha: int, s: int, m: int | None = None) -> int:
    """Quality parameter of the interlaced net (``m`` given) or sequence (``m=None``)."""
    if min(t, alpha, s) < 0 or (m is not None and m < 0):
        raise DigitRangeError("parameters must be non-negative")
    if m is not None:
        return alpha * min(m, t + (s * (alpha - 1)) // 2)
    return alpha * t + s * alpha * (alpha - 1) // 2


def format_matrices(matrices: Sequence[GeneratingMatrix]) -> str:
    """One block per matrix, rows as base-p digit strings, blank-line separated."""
    blocks = []
    for c in matrices:
        blocks.append("\n".join("".join(str(int(d)) for d in row) for row in c.entries))
    return "\n\n".join(blocks) + "\n"


def parse_matrices(text: str, p: int = 2) -> list[GeneratingMatrix]:
    """Inverse of :func:`format_matrices`."""
    mats = []
    for block in text.strip().split("\n\n"):
        rows = [r.strip() for r in block.strip().splitlines() if r.strip()]
        if not rows:
            continue
        try:
            mats.append(GeneratingMatrix([[int(ch, 36) for ch in r] for r in rows], p))
        except ValueError as exc:
            raise ConfigurationError(f"bad matrix block: {exc}") from None
    if not mats:
        raise ConfigurationError("no matrices found")
    check_family(mats)
    return mats
