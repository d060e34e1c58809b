"""Benchmark integrands with closed-form integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy_quaddtype import QuadPrecDType

from .errors import ConfigurationError
from .quadrature import Integrand

TAGS = ("f1", "f2", "f3", "f4")
PRECISIONS = ("quad", "double")


def power_weights(dims: int, a: float) -> np.ndarray:
    """``gamma_j = j^(-a)`` for ``j = 1..dims``."""
    return np.arange(1, dims + 1, dtype=np.float64) ** (-a)


def parse_gamma(spec: str, dims: int) -> np.ndarray:
    """Parse ``pow:<a>`` into power weights."""
    kind, _, arg = spec.partition(":")
    if kind != "pow" or not arg:
        raise ConfigurationError(f"unsupported weight spec {spec!r}; use pow:<a>")
    try:
        return power_weights(dims, float(arg))
    except ValueError:
        raise ConfigurationError(f"bad exponent in {spec!r}") from None


def f1(x: np.ndarray) -> np.ndarray:
    """``x^3 (log x + 1/4)``, extended by its limit 0 at ``x = 0``."""
    x = x[:, 0]
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = xp**3 * (np.log(xp) + 0.25)
    return out


def f2(x: np.ndarray) -> np.ndarray:
    """``(1/2 - xy)^6`` on ``xy <= 1/2``, zero elsewhere."""
    xy = x[:, 0] * x[:, 1]
    out = np.zeros_like(xy)
    inside = xy <= 0.5
    d = 0.5 - xy[inside]
    d2 = d * d  # quad pow warns at 0
    out[inside] = d2 * d2 * d2
    return out


@dataclass
class TestFunction:
    """One of the four benchmark integrands.

    ``f1`` is one-dimensional and ``f2`` two-dimensional; ``f3`` and ``f4``
    take per-coordinate weights ``gamma``.

    ``precision="quad"`` evaluates in IEEE binary128, so evaluation
    round-off stays far below the extrapolated errors even at ``m = 22``;
    ``"double"`` uses plain ``float64``.  The default is quad for the
    low-dimensional ``f1``, ``f2`` and double for ``f3``, ``f4``.
    """

    __test__ = False  # not a pytest class

    tag: str
    dims: int = 1
    c1: float = 1.3
    c2: float = 1.0
    gamma: np.ndarray = field(default=None)
    precision: str | None = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ConfigurationError(f"unknown test function {self.tag!r}")
        if self.tag == "f1" and self.dims != 1:
            raise ConfigurationError("f1 is one-dimensional")
        if self.tag == "f2" and self.dims != 2:
            raise ConfigurationError("f2 is two-dimensional")
        if self.tag in ("f3", "f4"):
            if self.gamma is None:
                self.gamma = power_weights(self.dims, 2.0)
            self.gamma = np.asarray(self.gamma, dtype=np.float64)
            if self.gamma.shape != (self.dims,):
                raise ConfigurationError(f"need {self.dims} weights, got {self.gamma.shape}")
        if self.precision is None:
            self.precision = "quad" if self.tag in ("f1", "f2") else "double"
        if self.precision not in PRECISIONS:
            raise ConfigurationError(f"precision must be one of {PRECISIONS}")
        if self.tag == "f3" and self.c1 <= 0:
            raise ConfigurationError("f3 needs c1 > 0")
        if self.tag == "f4" and self.c2 == 0:
            raise ConfigurationError("f4 needs c2 != 0")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.dims:
            raise ConfigurationError(f"{self.tag} expects {self.dims} dims, got {x.shape[1]}")
        if self.precision == "quad":
            x = x.astype(QuadPrecDType())
        if self.tag == "f1":
            return f1(x)
        if self.tag == "f2":
            return f2(x)
        if self.tag == "f3":
            one = np.ones(1, dtype=x.dtype)
            gamma = self.gamma.astype(x.dtype)
            power = np.zeros_like(x)
            pos = x > 0
            power[pos] = x[pos] ** self.c1
            factors = one + gamma * (power - one / (one + self.c1))
            return np.prod(factors, axis=1)
        return np.exp(self.c2 * np.sum(x * self.gamma.astype(x.dtype), axis=1))

    def exact_integral(self) -> float:
        if self.tag == "f1":
            return 0.0
        if self.tag == "f2":
            return (363 / 140 + math.log(2)) / 896
        if self.tag == "f3":
            return 1.0
        cg = self.c2 * self.gamma
        return float(np.prod(np.expm1(cg) / cg))

    def integrand(self) -> Integrand:
        return Integrand(self, self.dims, name=self.tag, exact=self.exact_integral())


def eval_test_function(tf: TestFunction, x) -> float:
    """Value of ``tf`` at a single point."""
    return float(tf(np.asarray(x, dtype=np.float64)[None, :])[0])


def exact_integral(tf: TestFunction) -> float:
    return tf.exact_integral()
