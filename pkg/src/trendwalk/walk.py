"""Membership-accept Metropolis-Hastings random walk over a trend list."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    InvalidInputError,
    check_positive_int,
    check_seed,
)
from .generators import GENERATORS, make_generator
from .graph import TrendGraph
from .source import TRENDS_PER_COUNTRY


class Outcome(str, enum.Enum):
    FRESH = "fresh"
    DUPLICATE = "duplicate"
    REJECTED = "rejected"


class Pick(NamedTuple):
    iteration: int
    node: int  # the candidate drawn at this iteration
    outcome: Outcome
    state: int  # walker position after the iteration


@dataclass(frozen=True)
class WalkConfig:
    generator: str = "brownian"
    countries: int = 15
    min_followers: int = 10
    seed: int = 0
    iterations: Optional[int] = None  # overrides countries * 10

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise InvalidInputError(
                f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        check_positive_int(self.countries, "countries")
        check_positive_int(self.min_followers, "min_followers")
        check_seed(self.seed)
        if self.iterations is not None:
            check_positive_int(self.iterations, "iterations")

    @property
    def n_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return self.countries * TRENDS_PER_COUNTRY


@dataclass(frozen=True)
class SampleTrace:
    picks: tuple[Pick, ...]
    initial: int  # v0

    def __len__(self):
        return len(self.picks)

    def count(self, outcome: Outcome) -> int:
        return sum(1 for p in self.picks if p.outcome is outcome)

    @property
    def accepted(self) -> list[Pick]:
        """Accepted picks in the order they were chosen."""
        return [p for p in self.picks if p.outcome is not Outcome.REJECTED]

    @property
    def n_fresh(self) -> int:
        return self.count(Outcome.FRESH)

    @property
    def n_duplicate(self) -> int:
        return self.count(Outcome.DUPLICATE)

    @property
    def n_rejected(self) -> int:
        return self.count(Outcome.REJECTED)


def run_walk(graph: TrendGraph, list_a: Sequence[int], config: WalkConfig) -> SampleTrace:
    """Walk ``list_a`` with the configured generator for ``config.n_iterations`` steps.

    Each step draws a candidate index, resolves it to a node and moves there
    iff the node is a trend in ``graph``; otherwise the walker stays put and
    the step is recorded as rejected. The walker starts at ``list_a[0]``.
    """
    if len(list_a) == 0:
        raise InvalidInputError("trend list is empty")
    generator = make_generator(config.generator, config.seed)
    list_len = len(list_a)
    v = list_a[0]
    seen = set()
    picks = []
    for t in range(config.n_iterations):
        candidate = list_a[generator.next(list_len)]
        if graph.is_trend(candidate):
            v = candidate
            outcome = Outcome.DUPLICATE if candidate in seen else Outcome.FRESH
            seen.add(candidate)
        else:
            outcome = Outcome.REJECTED
        picks.append(Pick(t, candidate, outcome, v))
    return SampleTrace(tuple(picks), list_a[0])


def unique_trends(trace: SampleTrace) -> set[int]:
    return {p.node for p in trace.picks if p.outcome is Outcome.FRESH}


def duplicate_count(trace: SampleTrace) -> int:
    return trace.n_duplicate


class MHRWSampler(BaseEstimator):
    """Estimator wrapper around :func:`run_walk`.

    Parameters
    ----------
    generator : {"brownian", "illusion", "reservoir"}
        Candidate generator.
    countries : int
        Number of countries; the walk runs ``countries * 10`` iterations
        unless ``n_iterations`` is given.
    seed : int
        64-bit seed of the generator stream.
    n_iterations : int or None
        Explicit iteration budget.

    Attributes
    ----------
    trace_ : SampleTrace
    sample_ : list of int
        Distinct trends in the order they were first accepted.
    n_duplicates_ : int
    """

    def __init__(self, generator="brownian", countries=15, seed=0, n_iterations=None):
        self.generator = generator
        self.countries = countries
        self.seed = seed
        self.n_iterations = n_iterations

    def _config(self):
        return WalkConfig(generator=self.generator, countries=self.countries,
                          seed=self.seed, iterations=self.n_iterations)

    def fit(self, graph: TrendGraph, trend_list: Optional[Sequence[int]] = None):
        if not isinstance(graph, TrendGraph):
            raise InvalidInputError(
                f"graph must be a TrendGraph, not {type(graph).__name__}")
        if trend_list is None:
            trend_list = graph.trends()
        self.trace_ = run_walk(graph, list(trend_list), self._config())
        self.sample_ = [p.node for p in self.trace_.picks if p.outcome is Outcome.FRESH]
        self.n_duplicates_ = self.trace_.n_duplicate
        return self

    def fit_transform(self, graph, trend_list=None):
        return self.fit(graph, trend_list).transform(graph)

    def transform(self, graph: TrendGraph) -> list[str]:
        """Labels of the sampled trends, looked up in ``graph``."""
        check_is_fitted(self, "trace_")
        return [graph.label(n) for n in self.sample_]
