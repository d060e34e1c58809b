"""Convergence and precision sweeps over the benchmark integrands."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, replace
from typing import IO, Iterable, Sequence, Union

import numpy as np

from .constructions import DirectionNumberTable, InterlacedSequence, interlaced_sobol
from .errors import ConfigurationError, HoqmcError
from .quadrature import ExtensibleRule, Integrand, algorithm2_tableau, evaluations, plain_qmc
from .testfunctions import TestFunction

ALGORITHMS = ("plain", "extrapolated-square", "extrapolated-fixed-m")
CSV_COLUMNS = ("m", "N", "estimate", "abs_error", "seconds")


class SlopeError(HoqmcError, ValueError):
    """A convergence slope is undefined for the selected records."""


@dataclass
class ExperimentConfig:
    """One sweep over ``m_min <= m <= m_max``.

    ``level`` picks the extrapolation level reported (default ``alpha``);
    ``level = 1`` gives the plain square-matrix estimates that feed it.
    """

    function: Union[TestFunction, Integrand]
    algorithm: str = "extrapolated-square"
    alpha: int = 2
    p: int = 2
    m_min: int = 3
    m_max: int = 10
    level: int | None = None
    truncate_u: int | None = None
    threads: int = 1
    table: DirectionNumberTable | None = None
    timing: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.m_min < 1 or self.m_max < self.m_min:
            raise ConfigurationError(f"empty m range [{self.m_min}, {self.m_max}]")
        if self.alpha < 1:
            raise ConfigurationError("alpha must be >= 1")
        if self.p != 2:
            raise ConfigurationError("the bundled Sobol' construction is binary; use --base 2")
        if self.truncate_u is not None and not 1 <= self.truncate_u <= 63:
            raise ConfigurationError("truncation precision u must lie in [1, 63]")
        lvl = self.extrapolation_level
        if not 1 <= lvl <= self.alpha:
            raise ConfigurationError(f"level {lvl} outside 1..alpha={self.alpha}")

    @property
    def extrapolation_level(self) -> int:
        return self.alpha if self.level is None else self.level

    def integrand(self) -> Integrand:
        if isinstance(self.function, Integrand):
            return self.function
        return self.function.integrand()

    def sequence(self) -> InterlacedSequence:
        return interlaced_sobol(self.integrand().dims, self.alpha, self.table)


@dataclass
class ConvergenceRecord:
    m: int
    N: int
    estimate: float
    abs_error: float
    seconds: float | None = None


def _record(m, N, estimate, exact, seconds, timing):
    return ConvergenceRecord(m, N, estimate, abs(estimate - exact), seconds if timing else None)


def run_convergence(config: ExperimentConfig) -> list[ConvergenceRecord]:
    """One record per ``m``; the square rule shares its level-1 sums across ``m``."""
    f = config.integrand()
    if f.exact is None:
        raise ConfigurationError(f"integrand {f.name} has no known integral")
    seq = config.sequence()
    tau = config.extrapolation_level
    records = []
    if config.algorithm == "extrapolated-square":
        rule = ExtensibleRule(f, seq, tau, config.threads)
        cost = {}
        for i in range(config.m_min, config.m_max + tau):
            t0 = time.perf_counter()
            rule.estimate(i)
            cost[i] = time.perf_counter() - t0
        tab = rule.tableau(config.m_min, config.m_max + tau - 1)
        for m in range(config.m_min, config.m_max + 1):
            seconds = sum(cost[m + i] for i in range(tau))
            N = evaluations(config.algorithm, m, tau, config.p)
            records.append(_record(m, N, tab.value(tau, m), f.exact, seconds, config.timing))
        return records
    for m in range(config.m_min, config.m_max + 1):
        t0 = time.perf_counter()
        if config.algorithm == "extrapolated-fixed-m":
            est = algorithm2_tableau(f, seq, m, config.alpha, config.threads).value(tau, m)
            N = evaluations(config.algorithm, m, tau, config.p)
        else:
            est = plain_qmc(f, seq, m, config.truncate_u, config.threads)
            N = config.p**m
        records.append(_record(m, N, est, f.exact, time.perf_counter() - t0, config.timing))
    return records


def precision_sweep(config: ExperimentConfig, u_values: Iterable[int]) -> dict[int, list[ConvergenceRecord]]:
    """Plain QMC with order-``alpha`` nodes truncated to ``min(alpha m, u)`` digits."""
    out = {}
    for u in u_values:
        out[u] = run_convergence(replace(config, algorithm="plain", truncate_u=u))
    return out


def estimate_slope(records: Sequence[ConvergenceRecord], m_window: tuple[int, int] | None = None) -> float:
    """Least-squares slope of ``log(abs_error)`` against ``log(N)``."""
    if m_window is not None:
        lo, hi = m_window
        records = [r for r in records if lo <= r.m <= hi]
    if len(records) < 3:
        raise SlopeError(f"need at least 3 records, got {len(records)}")
    errors = np.array([r.abs_error for r in records], dtype=np.float64)
    if (errors <= 0).any():
        raise SlopeError("zero error in window: convergence is exact, slope undefined")
    log_n = np.log([float(r.N) for r in records])
    slope, _ = np.polyfit(log_n, np.log(errors), 1)
    return float(slope)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(records: Sequence[ConvergenceRecord], stream: IO[str], extra: dict | None = None, header: bool = True) -> None:
    """CSV with columns ``m,N,estimate,abs_error,seconds``, prefixed by any ``extra`` constants."""
    extra = extra or {}
    writer = csv.writer(stream, lineterminator="\n")
    if header:
        writer.writerow(list(extra) + list(CSV_COLUMNS))
    for r in records:
        writer.writerow([_fmt(v) for v in extra.values()] + [_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def write_json(records: Sequence[ConvergenceRecord], stream: IO[str], extra: dict | None = None) -> None:
    extra = extra or {}
    json.dump([{**extra, **asdict(r)} for r in records], stream, indent=1)
    stream.write("\n")
