"""Exact digital-net arithmetic over prime fields.

Digit conventions used throughout the package:

* index digits ``eta`` are least-significant first,
  ``h = eta[0] + eta[1] p + ... + eta[m-1] p^(m-1)``;
* coordinate digits ``xi`` are most-significant first,
  ``x = xi[0]/p + xi[1]/p^2 + ... + xi[n-1]/p^n``.

A coordinate is stored as its integer numerator ``v = x p^n`` together with
its precision ``n``; floats appear only when an integrand is evaluated.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, ConfigurationError, DigitRangeError

#: Largest numerator bit-length held in an unsigned 64-bit word.
WORD_BITS = 63

#: Points per evaluation block are chosen so that a block holds about this
#: many coordinates.  Depends only on (p, s), never on the worker count.
BLOCK_COORDINATES = 1 << 20

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31)


def check_prime(p: int) -> int:
    """Return ``p`` if it is a supported prime base (2 <= p <= 31)."""
    if int(p) != p or p not in _SMALL_PRIMES:
        raise ConfigurationError(f"base must be a prime in [2, 31], got {p!r}")
    return int(p)


def max_precision(p: int) -> int:
    """Largest digit count ``n`` such that ``p**n`` numerators fit in 63 bits."""
    n = 0
    while p ** (n + 1) <= 1 << WORD_BITS:
        n += 1
    return min(n, WORD_BITS)


def check_precision(n: int, p: int) -> int:
    if n < 0:
        raise DigitRangeError(f"precision must be non-negative, got {n}")
    if n > max_precision(p):
        raise CapacityError(
            f"precision {n} exceeds the {max_precision(p)}-digit capacity for base {p}"
        )
    return n


def expand_index(h: int, length: int, p: int = 2) -> tuple[int, ...]:
    """Base-``p`` digits of ``h``, least-significant first.

    >>> expand_index(7, 2, 3)
    (1, 2)
    """
    check_prime(p)
    if h < 0 or h >= p**length:
        raise DigitRangeError(f"index {h} not representable with {length} base-{p} digits")
    digits = []
    for _ in range(length):
        h, d = divmod(h, p)
        digits.append(d)
    return tuple(digits)


def compose_index(digits: Sequence[int], p: int = 2) -> int:
    """Inverse of :func:`expand_index`."""
    h = 0
    for d in reversed(digits):
        h = h * p + int(d)
    return h


@dataclass(frozen=True)
class FixedPointCoord:
    """The exact number ``v / p**n`` in ``[0, 1)``."""

    v: int
    n: int
    p: int = 2

    def __post_init__(self):
        check_prime(self.p)
        if self.n < 0:
            raise DigitRangeError("precision must be non-negative")
        if not 0 <= self.v < self.p**self.n:
            raise DigitRangeError(f"numerator {self.v} outside [0, {self.p}^{self.n})")

    @classmethod
    def from_digits(cls, digits: Sequence[int], p: int = 2) -> "FixedPointCoord":
        v = 0
        for d in digits:
            if not 0 <= d < p:
                raise DigitRangeError(f"digit {d} not in F_{p}")
            v = v * p + int(d)
        return cls(v, len(digits), p)

    def digits(self) -> tuple[int, ...]:
        """Coordinate digits ``xi_1 ... xi_n``, most significant first."""
        return tuple(reversed(expand_index(self.v, self.n, self.p)))

    def truncate(self, m: int) -> "FixedPointCoord":
        return truncate(self, m)

    def to_real(self) -> float:
        return to_real(self)


def truncate(x: FixedPointCoord, m: int) -> FixedPointCoord:
    """Keep the leading ``m`` digits of ``x``."""
    if m < 0 or m > x.n:
        raise DigitRangeError(f"cannot truncate a {x.n}-digit coordinate to {m} digits")
    return FixedPointCoord(x.v // x.p ** (x.n - m), m, x.p)


def to_real(x: FixedPointCoord) -> float:
    """Nearest double to ``v / p**n``; exact for p = 2 and n <= 52."""
    if x.p == 2:
        return float(np.ldexp(float(x.v), -x.n))
    return x.v / x.p**x.n


def numerators_to_real(v: np.ndarray, n: int, p: int) -> np.ndarray:
    """Vectorised :func:`to_real` for an array of numerators."""
    v = np.asarray(v)
    if p == 2:
        return np.ldexp(v.astype(np.float64), -n)
    return v.astype(np.float64) / float(p**n)


def truncate_numerators(v: np.ndarray, n: int, m: int, p: int) -> np.ndarray:
    """Vectorised :func:`truncate`; returns numerators at precision ``m``."""
    if m < 0 or m > n:
        raise DigitRangeError(f"cannot truncate {n}-digit numerators to {m} digits")
    if m == n:
        return v
    if p == 2:
        return v >> np.uint64(n - m)
    return v // np.uint64(p ** (n - m))


def numerator_digits(v: np.ndarray, n: int, p: int) -> np.ndarray:
    """Digits of numerators, shape ``v.shape + (n,)``, most significant first."""
    v = np.asarray(v, dtype=np.uint64)
    out = np.empty(v.shape + (n,), dtype=np.uint8)
    rest = v.copy()
    pp = np.uint64(p)
    for i in range(n - 1, -1, -1):
        out[..., i] = rest % pp
        rest //= pp
    return out


def digits_to_numerators(digits: np.ndarray, p: int) -> np.ndarray:
    """Inverse of :func:`numerator_digits` along the last axis."""
    digits = np.asarray(digits)
    v = np.zeros(digits.shape[:-1], dtype=np.uint64)
    pp = np.uint64(p)
    for i in range(digits.shape[-1]):
        v = v * pp + digits[..., i].astype(np.uint64)
    return v


class GeneratingMatrix:
    """An ``n x m`` matrix over F_p.

    Entries are kept as a read-only ``uint8`` array.  For ``p = 2`` the
    columns are additionally available bit-packed, one word per column,
    with row 1 in the most significant of the ``n`` bits, so that a point
    numerator is the XOR of the columns selected by the index bits.
    """

    __slots__ = ("entries", "p", "_packed")

    def __init__(self, entries, p: int = 2):
        self.p = check_prime(p)
        a = np.array(entries, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ConfigurationError(f"generating matrix must be 2-D and non-empty, got shape {a.shape}")
        if a.min() < 0 or a.max() >= p:
            raise ConfigurationError(f"matrix entries must lie in F_{p}")
        self.entries = a.astype(np.uint8)
        self.entries.setflags(write=False)
        self._packed = None

    @classmethod
    def identity(cls, n: int, p: int = 2) -> "GeneratingMatrix":
        return cls(np.eye(n, dtype=np.uint8), p)

    @classmethod
    def zeros(cls, n: int, m: int, p: int = 2) -> "GeneratingMatrix":
        return cls(np.zeros((n, m), dtype=np.uint8), p)

    @classmethod
    def from_columns(cls, words: Sequence[int], n: int) -> "GeneratingMatrix":
        """Build a binary matrix from packed column words (row 1 = top bit)."""
        bits = [[(int(w) >> (n - 1 - k)) & 1 for w in words] for k in range(n)]
        return cls(bits, 2)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def submatrix(self, n: int, m: int) -> "GeneratingMatrix":
        """Upper-left ``n x m`` block; rows beyond ``self.n`` are zero-padded."""
        if m > self.m or n < 1 or m < 1:
            raise DigitRangeError(f"cannot take a {n}x{m} block of a {self.n}x{self.m} matrix")
        if n <= self.n:
            return GeneratingMatrix(self.entries[:n, :m], self.p)
        pad = np.zeros((n - self.n, m), dtype=np.uint8)
        return GeneratingMatrix(np.vstack([self.entries[:, :m], pad]), self.p)

    def packed_columns(self) -> np.ndarray:
        if self.p != 2:
            raise ConfigurationError("bit-packed columns exist only for p = 2")
        if self.n > WORD_BITS:
            raise CapacityError(f"{self.n} rows exceed the {WORD_BITS}-bit column word")
        if self._packed is None:
            weights = [1 << (self.n - 1 - k) for k in range(self.n)]
            words = [sum(w for w, bit in zip(weights, col) if bit) for col in self.entries.T]
            self._packed = np.array(words, dtype=np.uint64)
            self._packed.setflags(write=False)
        return self._packed

    def transpose_apply(self, k_digits: Sequence[int]) -> np.ndarray:
        """``C^T kappa`` over F_p for a length-``n`` digit vector."""
        kappa = np.asarray(k_digits, dtype=np.int64)
        return (self.entries.T.astype(np.int64) @ kappa) % self.p

    def __eq__(self, other):
        if not isinstance(other, GeneratingMatrix):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.p, self.entries.shape, self.entries.tobytes()))

    def __repr__(self):
        return f"GeneratingMatrix(n={self.n}, m={self.m}, p={self.p})"


def check_family(matrices: Sequence[GeneratingMatrix]) -> tuple[int, int, int]:
    """Validate a list of generating matrices; returns ``(n, m, p)``."""
    if len(matrices) == 0:
        raise ConfigurationError("need at least one generating matrix")
    first = matrices[0]
    for c in matrices[1:]:
        if c.shape != first.shape or c.p != first.p:
            raise ConfigurationError(
                f"mismatched generating matrices: {first!r} vs {c!r}"
            )
    return first.n, first.m, first.p


def generate_point(matrices: Sequence[GeneratingMatrix], h: int) -> tuple[FixedPointCoord, ...]:
    """The ``h``-th point of the digital net with the given matrices."""
    n, m, p = check_family(matrices)
    eta = np.array(expand_index(h, m, p), dtype=np.int64)
    point = []
    for c in matrices:
        xi = (c.entries.astype(np.int64) @ eta) % p
        point.append(FixedPointCoord.from_digits([int(d) for d in xi], p))
    return tuple(point)


@dataclass(frozen=True, eq=False)
class PointSet:
    """``N`` points in ``[0,1)^s`` as exact numerators of shared precision."""

    numerators: np.ndarray
    n: int
    p: int = 2

    def __post_init__(self):
        if self.numerators.ndim != 2:
            raise ConfigurationError("point numerators must be an (N, s) array")

    def __len__(self):
        return self.numerators.shape[0]

    @property
    def dims(self) -> int:
        return self.numerators.shape[1]

    def coord(self, h: int, j: int) -> FixedPointCoord:
        return FixedPointCoord(int(self.numerators[h, j]), self.n, self.p)

    def truncate(self, m: int) -> "PointSet":
        return PointSet(truncate_numerators(self.numerators, self.n, m, self.p), m, self.p)

    def to_real(self) -> np.ndarray:
        return numerators_to_real(self.numerators, self.n, self.p)

    def as_fractions(self) -> list[list[tuple[int, int]]]:
        """Rows of ``(v, p**n)`` pairs."""
        q = self.p**self.n
        return [[(int(v), q) for v in row] for row in self.numerators]


class DigitalNet:
    """Lazy digital net ``{x_h : 0 <= h < p^m}`` in index order.

    Points are produced block by block.  Because the net is linear in the
    index digits, ``x_(h0 + r) = x_h0 (+) x_r`` digitwise whenever ``h0`` is
    a multiple of the block size ``p^b`` and ``r < p^b``; one table of the
    low ``p^b`` points is built once and shifted per block.
    """

    def __init__(self, matrices: Sequence[GeneratingMatrix]):
        self.matrices = tuple(matrices)
        self.n, self.m, self.p = check_family(self.matrices)
        check_precision(self.n, self.p)
        if self.p**self.m > 1 << WORD_BITS:
            raise CapacityError(f"{self.p}^{self.m} points overflow the index word")
        self._low = None
        self._lock = threading.Lock()

    @property
    def dims(self) -> int:
        return len(self.matrices)

    @property
    def size(self) -> int:
        return self.p**self.m

    def __len__(self):
        return self.size

    def block_digits(self) -> int:
        """Number of low index digits ``b`` covered by one block."""
        b = 0
        while b < self.m and self.p ** (b + 1) * self.dims <= BLOCK_COORDINATES:
            b += 1
        return b

    def _low_table(self, b: int) -> np.ndarray:
        count = self.p**b
        if self.p == 2:
            cols = np.stack([c.packed_columns() for c in self.matrices], axis=1)
            table = np.zeros((count, self.dims), dtype=np.uint64)
            size = 1
            for k in range(b):
                table[size : 2 * size] = table[:size] ^ cols[k]
                size *= 2
            return table
        return self._numerators_generic(np.arange(count, dtype=np.int64))

    def _offset(self, h0: int) -> np.ndarray:
        if self.p == 2:
            out = np.zeros(self.dims, dtype=np.uint64)
            k = 0
            while h0:
                if h0 & 1:
                    out ^= np.array([c.packed_columns()[k] for c in self.matrices], dtype=np.uint64)
                h0 >>= 1
                k += 1
            return out
        return self._numerators_generic(np.array([h0], dtype=np.int64))[0]

    def _numerators_generic(self, idx: np.ndarray) -> np.ndarray:
        p, m = self.p, self.m
        eta = np.empty((idx.size, m), dtype=np.int64)
        rest = idx.copy()
        for i in range(m):
            rest, eta[:, i] = np.divmod(rest, p)
        out = np.empty((idx.size, self.dims), dtype=np.uint64)
        for j, c in enumerate(self.matrices):
            xi = (eta @ c.entries.T.astype(np.int64)) % p
            out[:, j] = digits_to_numerators(xi, p)
        return out

    def _add_digitwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.p == 2:
            return a ^ b
        da = numerator_digits(a, self.n, self.p).astype(np.int64)
        db = numerator_digits(b, self.n, self.p).astype(np.int64)
        return digits_to_numerators((da + db) % self.p, self.p)

    def _table(self) -> np.ndarray:
        with self._lock:
            if self._low is None:
                self._low = self._low_table(self.block_digits())
                self._low.setflags(write=False)
            return self._low

    def block(self, q: int) -> np.ndarray:
        """Numerators of the ``q``-th index block."""
        table = self._table()
        h0 = q * table.shape[0]
        if h0 == 0:
            return table
        return self._add_digitwise(table, np.broadcast_to(self._offset(h0), table.shape))

    def blocks(self, start_block: int = 0, stop_block: int | None = None) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(h0, numerators)`` for consecutive index blocks."""
        nblocks = self.num_blocks()
        stop = nblocks if stop_block is None else min(stop_block, nblocks)
        count = self.p ** self.block_digits()
        for q in range(start_block, stop):
            yield q * count, self.block(q)

    def num_blocks(self) -> int:
        return self.size // self.p ** self.block_digits()

    def points(self) -> PointSet:
        parts = [v for _, v in self.blocks()]
        return PointSet(np.concatenate(parts, axis=0), self.n, self.p)


def generate_net(matrices: Sequence[GeneratingMatrix]) -> PointSet:
    """All ``p^m`` points of the digital net, in index order."""
    return DigitalNet(matrices).points()
