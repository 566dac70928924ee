"""Run statistics, campaign summaries and the Geweke convergence diagnostic."""
from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    InvalidInputError,
    check_chain,
    check_non_negative_int,
    check_positive_int,
)
from .graph import TrendGraph
from .walk import Outcome, SampleTrace

GEWEKE_DRAWS = 1100
GEWEKE_BURN_IN = 100
GEWEKE_FIRST = 0.10
GEWEKE_LAST = 0.50
GEWEKE_POINTS = 30
GEWEKE_BAND = 1.0
GEWEKE_MIN_LENGTH = 20
BATCH_COUNT = 10

SUMMARY_METRICS = ("filtered", "sampled", "duplicated", "followers", "memory_mb")
PCT_METRICS = ("pct_sampled", "pct_duplicated")


@dataclass(frozen=True)
class RunReport:
    generator: str
    collected: int
    filtered: int
    sampled: int
    duplicated: int
    followers: int
    iterations: int
    elapsed_ms: int = 0
    memory_mb_estimate: float = 0.0

    def __post_init__(self):
        for name in ("collected", "filtered", "sampled", "duplicated",
                     "followers", "iterations", "elapsed_ms"):
            check_non_negative_int(getattr(self, name), name)
        if self.sampled + self.duplicated > self.iterations:
            raise InvalidInputError("sampled + duplicated exceeds iterations")
        if self.memory_mb_estimate < 0:
            raise InvalidInputError("memory estimate must be non-negative")

    @property
    def rejected(self) -> int:
        return self.iterations - self.sampled - self.duplicated

    def _pct(self, count):
        return 100.0 * count / self.iterations if self.iterations else 0.0

    @property
    def pct_sampled(self) -> float:
        return self._pct(self.sampled)

    @property
    def pct_duplicated(self) -> float:
        return self._pct(self.duplicated)

    @property
    def pct_rejected(self) -> float:
        return self._pct(self.rejected)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricSummary:
    total: float
    avg: float
    std: float


@dataclass(frozen=True)
class CampaignSummary:
    generator: str
    run_count: int
    metrics: dict[str, MetricSummary]
    std_defined: bool = True

    @property
    def pct_sampled(self) -> float:
        """Pooled percentage ``100 * sum(sampled) / sum(iterations)``."""
        return self.metrics["pct_sampled"].total

    @property
    def pct_duplicated(self) -> float:
        return self.metrics["pct_duplicated"].total

    def rows(self):
        """``(generator, metric, total, avg, std)`` rows in table order.

        For the percentage metrics ``total`` is the pooled percentage and
        ``avg``/``std`` describe the per-run percentages.
        """
        for name in SUMMARY_METRICS + PCT_METRICS:
            m = self.metrics[name]
            yield self.generator, name, m.total, m.avg, m.std


def _metric_values(reports, name):
    if name == "memory_mb":
        return [r.memory_mb_estimate for r in reports]
    return [getattr(r, name) for r in reports]


def summarize(reports: Sequence[RunReport]) -> CampaignSummary:
    """Totals, means and sample standard deviations across runs of one generator.

    With a single run the standard deviation is undefined; it is reported
    as 0 and ``std_defined`` is False.
    """
    if not reports:
        raise InvalidInputError("no run reports to summarize")
    generators = {r.generator for r in reports}
    if len(generators) != 1:
        raise InvalidInputError(f"reports mix generators {sorted(generators)}")
    n = len(reports)
    metrics = {}
    for name in SUMMARY_METRICS:
        values = _metric_values(reports, name)
        total = math.fsum(values) if name == "memory_mb" else sum(values)
        std = statistics.stdev(values) if n > 1 else 0.0
        metrics[name] = MetricSummary(total, total / n, float(std))
    iterations = sum(r.iterations for r in reports)
    for name, count in (("pct_sampled", "sampled"), ("pct_duplicated", "duplicated")):
        pooled = 100.0 * sum(getattr(r, count) for r in reports) / iterations if iterations else 0.0
        per_run = [getattr(r, name) for r in reports]
        std = statistics.stdev(per_run) if n > 1 else 0.0
        metrics[name] = MetricSummary(pooled, math.fsum(per_run) / n, float(std))
    return CampaignSummary(generators.pop(), n, metrics, std_defined=n > 1)


# -- Geweke ------------------------------------------------------------------


@dataclass(frozen=True)
class GewekeResult:
    z_scores: list[tuple[int, float]]
    converged: bool
    band: float = GEWEKE_BAND

    @property
    def z(self) -> float:
        return self.z_scores[-1][1]

    @property
    def fraction_in_band(self) -> float:
        inside = sum(1 for _, z in self.z_scores if abs(z) <= self.band)
        return inside / len(self.z_scores)


def _mean_variance(window, variance):
    """Mean of ``window`` and the estimated variance of that mean."""
    n = len(window)
    if np.all(window == window[0]):
        # exact, so rounding noise in mean/var cannot fake a difference
        return float(window[0]), 0.0
    mean = float(np.mean(window))
    if variance == "iid":
        return mean, float(np.var(window, ddof=1)) / n
    if variance == "batch":
        size = n // BATCH_COUNT
        if size < 1:
            raise InvalidInputError(
                f"batch-means variance needs at least {BATCH_COUNT} draws per window")
        batches = np.asarray(window[:size * BATCH_COUNT]).reshape(BATCH_COUNT, size).mean(axis=1)
        return mean, float(np.var(batches, ddof=1)) / BATCH_COUNT
    raise InvalidInputError(f"unknown variance estimator {variance!r}")


def difference_of_means_z(first, last, variance: str = "iid") -> float:
    """Z-score of ``mean(first) - mean(last)`` under independent windows."""
    first, last = check_chain(first), check_chain(last)
    if len(first) < 2 or len(last) < 2:
        raise InvalidInputError("each window needs at least two draws")
    mean_a, var_a = _mean_variance(first, variance)
    mean_b, var_b = _mean_variance(last, variance)
    denom = math.sqrt(var_a + var_b)
    if denom == 0.0:
        if mean_a == mean_b:
            return 0.0
        raise InvalidInputError("both windows are constant with different means")
    return (mean_a - mean_b) / denom


def _windows(n, first_frac, last_frac):
    if not (0 < first_frac < 1 and 0 < last_frac < 1):
        raise InvalidInputError("window fractions must lie in (0, 1)")
    # the epsilon keeps e.g. 0.1 * 1000 from flooring to 99
    n_a = math.floor(first_frac * n + 1e-9)
    n_b = math.floor(last_frac * n + 1e-9)
    if n_a + n_b > n:
        raise InvalidInputError("first and last windows overlap")
    return n_a, n_b


def geweke_z(chain, burn_in: int = GEWEKE_BURN_IN, first_frac: float = GEWEKE_FIRST,
             last_frac: float = GEWEKE_LAST, variance: str = "iid",
             band: float = GEWEKE_BAND) -> GewekeResult:
    """Geweke diagnostic comparing the early and late parts of ``chain``.

    After discarding ``burn_in`` draws, the mean of the first ``first_frac``
    of the remainder is tested against the mean of the last ``last_frac``.
    ``variance`` is ``"iid"`` (window sample variance) or ``"batch"``
    (batch means, 10 batches) for autocorrelated chains. The chain is
    declared converged when ``|Z| <= band``.
    """
    chain = check_chain(chain)
    burn_in = check_non_negative_int(burn_in, "burn_in")
    kept = chain[burn_in:]
    n = len(kept)
    if n < GEWEKE_MIN_LENGTH:
        raise InvalidInputError(
            f"need at least {GEWEKE_MIN_LENGTH} draws after burn-in, got {n}")
    n_a, n_b = _windows(n, first_frac, last_frac)
    z = difference_of_means_z(kept[:n_a], kept[n - n_b:], variance)
    return GewekeResult([(len(chain), z)], abs(z) <= band, band)


def geweke_trace(chain, burn_in: int = GEWEKE_BURN_IN, points: int = GEWEKE_POINTS,
                 first_frac: float = GEWEKE_FIRST, last_frac: float = GEWEKE_LAST,
                 variance: str = "iid") -> list[tuple[int, float]]:
    """Z-scores on ``points`` evenly spaced, growing prefixes of ``chain``.

    Each entry is ``(prefix_length, z)``; the last prefix is the whole chain.
    """
    chain = check_chain(chain)
    points = check_positive_int(points, "points")
    burn_in = check_non_negative_int(burn_in, "burn_in")
    smallest = burn_in + GEWEKE_MIN_LENGTH
    if len(chain) < smallest:
        raise InvalidInputError(
            f"need at least {GEWEKE_MIN_LENGTH} draws after burn-in, got {len(chain) - burn_in}")
    if points == 1:
        lengths = [len(chain)]
    else:
        lengths = sorted({int(round(x)) for x in np.linspace(smallest, len(chain), points)})
    return [(m, geweke_z(chain[:m], burn_in, first_frac, last_frac, variance).z)
            for m in lengths]


def degree_chain(trace: SampleTrace, graph: TrendGraph) -> list[float]:
    """Node degree of every accepted pick, in order."""
    return [float(graph.node_degree(p.node)) for p in trace.picks
            if p.outcome is not Outcome.REJECTED]


# -- memory model ------------------------------------------------------------

# Fixed per-item costs keep the estimate reproducible across interpreters.
NODE_BYTES = 96
EDGE_BYTES = 64
PICK_BYTES = 72


def estimate_memory_mb(graph: TrendGraph, trace: Optional[SampleTrace] = None) -> float:
    """Modelled footprint of the graph and trace structures in MiB."""
    label_bytes = sum(len(graph.label(i).encode("utf-8")) for i in range(graph.n_nodes))
    total = graph.n_nodes * NODE_BYTES + label_bytes + graph.n_edges * EDGE_BYTES
    if trace is not None:
        total += len(trace) * PICK_BYTES
    return total / 2**20


class GewekeDiagnostic(BaseEstimator):
    """Estimator form of :func:`geweke_z` and :func:`geweke_trace`.

    ``fit(chain)`` sets ``z_``, ``converged_``, ``trace_`` (list of
    ``(iteration, z)``) and ``fraction_in_band_``.
    """

    def __init__(self, burn_in=GEWEKE_BURN_IN, first_frac=GEWEKE_FIRST,
                 last_frac=GEWEKE_LAST, points=GEWEKE_POINTS, variance="iid",
                 band=GEWEKE_BAND):
        self.burn_in = burn_in
        self.first_frac = first_frac
        self.last_frac = last_frac
        self.points = points
        self.variance = variance
        self.band = band

    def fit(self, chain, y=None):
        result = geweke_z(chain, self.burn_in, self.first_frac, self.last_frac,
                          self.variance, self.band)
        self.z_ = result.z
        self.converged_ = result.converged
        self.trace_ = geweke_trace(chain, self.burn_in, self.points, self.first_frac,
                                   self.last_frac, self.variance)
        self.fraction_in_band_ = GewekeResult(self.trace_, True, self.band).fraction_in_band
        return self

    def transform(self, chain):
        """Z-score trace of ``chain`` with the fitted settings."""
        check_is_fitted(self, "z_")
        return np.array(geweke_trace(chain, self.burn_in, self.points, self.first_frac,
                                     self.last_frac, self.variance))
