"""Trend acquisition: country directory, synthetic world, replay and live sources.

All sources expose the same two calls, ``countries()`` and
``fetch_trends(country)``. :func:`collect_records` and :func:`build_graph`
turn their output into a :class:`~trendwalk.graph.TrendGraph` plus the
ordered trend list walked by the sampler.
"""
from __future__ import annotations

import functools
import json
import logging
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Protocol, Sequence

import numpy as np

from ._validation import (
    InvalidInputError,
    NotFoundError,
    SourceError,
    check_positive_int,
    check_probability,
    check_seed,
)
from .graph import TrendGraph

logger = logging.getLogger(__name__)

WOEID_RANGE = (23424000, 23425000)
TRENDS_PER_COUNTRY = 10


@dataclass(frozen=True, order=True)
class CountryRef:
    woeid: int
    name: str = field(compare=False)


@dataclass(frozen=True)
class TrendRecord:
    label: str
    country: CountryRef
    followers: tuple[str, ...]

    def to_json(self) -> dict:
        return {"woeid": self.country.woeid, "name": self.country.name,
                "label": self.label, "followers": list(self.followers)}

    @classmethod
    def from_json(cls, obj) -> "TrendRecord":
        try:
            woeid, name, label, followers = (obj["woeid"], obj["name"],
                                             obj["label"], obj["followers"])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed trend record {obj!r}") from exc
        if (isinstance(woeid, bool) or not isinstance(woeid, int)
                or not isinstance(name, str) or not isinstance(label, str)
                or not isinstance(followers, list)
                or not all(isinstance(h, str) for h in followers)):
            raise InvalidInputError(f"malformed trend record {obj!r}")
        return cls(label, CountryRef(woeid, name), tuple(followers))


# Countries with public trends in the WOEID scan range, with their WOEIDs.
COUNTRY_DIRECTORY: tuple[CountryRef, ...] = tuple(sorted([
    CountryRef(23424747, "Argentina"),
    CountryRef(23424748, "Australia"),
    CountryRef(23424757, "Belgium"),
    CountryRef(23424768, "Brazil"),
    CountryRef(23424775, "Canada"),
    CountryRef(23424782, "Chile"),
    CountryRef(23424787, "Colombia"),
    CountryRef(23424800, "Dom. Republic"),
    CountryRef(23424801, "Ecuador"),
    CountryRef(23424819, "France"),
    CountryRef(23424829, "Germany"),
    CountryRef(23424833, "Greece"),
    CountryRef(23424834, "Guatemala"),
    CountryRef(23424848, "India"),
    CountryRef(23424846, "Indonesia"),
    CountryRef(23424803, "Ireland"),
    CountryRef(23424853, "Italy"),
    CountryRef(23424856, "Japan"),
    CountryRef(23424863, "Kenya"),
    CountryRef(23424868, "Korea"),
    CountryRef(23424901, "Malaysia"),
    CountryRef(23424900, "Mexico"),
    CountryRef(23424909, "Netherlands"),
    CountryRef(23424916, "New Zealand"),
    CountryRef(23424908, "Nigeria"),
    CountryRef(23424910, "Norway"),
    CountryRef(23424922, "Pakistan"),
    CountryRef(23424919, "Peru"),
    CountryRef(23424934, "Philippines"),
    CountryRef(23424923, "Poland"),
    CountryRef(23424925, "Portugal"),
    CountryRef(23424936, "Russia"),
    CountryRef(23424948, "Singapore"),
    CountryRef(23424942, "South Africa"),
    CountryRef(23424950, "Spain"),
    CountryRef(23424954, "Sweden"),
    CountryRef(23424738, "U. Arab Emirates"),
    CountryRef(23424969, "Turkey"),
    CountryRef(23424976, "Ukraine"),
    CountryRef(23424975, "United Kingdom"),
    CountryRef(23424977, "United States"),
    CountryRef(23424982, "Venezuela"),
]))


def scan_woeids(directory: Iterable[CountryRef],
                woeid_range: tuple[int, int] = WOEID_RANGE) -> list[CountryRef]:
    """Countries whose WOEID lies in the inclusive ``woeid_range``, ascending."""
    lo, hi = woeid_range
    if lo > hi:
        raise InvalidInputError(f"empty WOEID range {woeid_range!r}")
    return sorted(c for c in directory if lo <= c.woeid <= hi)


def select_countries(countries: Sequence[CountryRef], w: int, seed: int) -> list[CountryRef]:
    """Pick ``w`` distinct countries uniformly; the result keeps input order."""
    w = check_positive_int(w, "w")
    if len(countries) < w:
        raise InvalidInputError(f"cannot select {w} countries out of {len(countries)}")
    rng = np.random.Generator(np.random.PCG64(check_seed(seed)))
    picked = rng.choice(len(countries), size=w, replace=False)
    return [countries[i] for i in sorted(int(i) for i in picked)]


class TrendSource(Protocol):
    def countries(self) -> list[CountryRef]: ...

    def fetch_trends(self, country: CountryRef) -> list[TrendRecord]: ...


# -- synthetic world ---------------------------------------------------------


@dataclass(frozen=True)
class WorldSpec:
    """Parameters of the simulated trend service."""

    country_count: int = len(COUNTRY_DIRECTORY)
    trends_per_country: int = TRENDS_PER_COUNTRY
    zipf_exponent: float = 0.8
    max_followers: int = 500
    overlap_prob: float = 0.3
    user_pool: int = 100_000
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.country_count, "country_count")
        check_positive_int(self.trends_per_country, "trends_per_country")
        check_positive_int(self.max_followers, "max_followers")
        check_positive_int(self.user_pool, "user_pool")
        check_probability(self.overlap_prob, "overlap_prob")
        check_seed(self.seed)
        if not self.zipf_exponent > 0:
            raise InvalidInputError("zipf_exponent must be positive")
        if self.max_followers > self.user_pool:
            raise InvalidInputError("max_followers cannot exceed user_pool")


@functools.lru_cache(maxsize=16)
def _zipf_pmf(exponent: float, max_value: int) -> np.ndarray:
    weights = np.arange(1, max_value + 1, dtype=float) ** -exponent
    return weights / weights.sum()


def _world_countries(count: int) -> list[CountryRef]:
    if count <= len(COUNTRY_DIRECTORY):
        return list(COUNTRY_DIRECTORY[:count])
    used = {c.woeid for c in COUNTRY_DIRECTORY}
    extra = (w for w in range(WOEID_RANGE[0], WOEID_RANGE[1] + 1) if w not in used)
    out = list(COUNTRY_DIRECTORY)
    for woeid in extra:
        if len(out) == count:
            break
        out.append(CountryRef(woeid, f"Country {woeid}"))
    if len(out) < count:
        raise InvalidInputError(f"the WOEID range holds fewer than {count} countries")
    return sorted(out)


class SyntheticSource:
    """Deterministic stand-in for the trend service.

    Records are a pure function of ``(world.seed, woeid)``: each trend slot is
    either country-specific or, with probability ``overlap_prob``, a global
    trend shared by every country that draws the same slot. Follower counts
    follow a Zipf law truncated to ``[1, max_followers]``.
    """

    def __init__(self, world: WorldSpec = WorldSpec()):
        self.world = world
        self._countries = _world_countries(world.country_count)
        self._by_woeid = {c.woeid: c for c in self._countries}

    def countries(self) -> list[CountryRef]:
        return list(self._countries)

    def _followers(self, key) -> tuple[str, ...]:
        world = self.world
        rng = np.random.default_rng([world.seed, *key])
        count = int(rng.choice(world.max_followers, p=_zipf_pmf(
            world.zipf_exponent, world.max_followers))) + 1
        users = rng.choice(world.user_pool, size=count, replace=False)
        return tuple(f"@user{int(u)}" for u in users)

    def fetch_trends(self, country: CountryRef) -> list[TrendRecord]:
        if country.woeid not in self._by_woeid:
            raise NotFoundError(f"unknown country woeid {country.woeid}")
        country = self._by_woeid[country.woeid]
        world = self.world
        records = []
        for slot in range(world.trends_per_country):
            rng = np.random.default_rng([world.seed, country.woeid, slot])
            if rng.random() < world.overlap_prob:
                label = f"#global{slot}"
                followers = self._followers((0, slot))
            else:
                label = f"#t{country.woeid}x{slot}"
                followers = self._followers((country.woeid, slot, 1))
            records.append(TrendRecord(label, country, followers))
        return records


# -- replay ------------------------------------------------------------------


def write_records(records: Iterable[TrendRecord], path) -> None:
    """Append-friendly JSON Lines recording, one record per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")


def read_records(path) -> list[TrendRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(TrendRecord.from_json(json.loads(line)))
            except (json.JSONDecodeError, InvalidInputError) as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
    return records


class ReplaySource:
    """Serves trend records previously captured with :func:`write_records`."""

    def __init__(self, path):
        self.path = Path(path)
        try:
            records = read_records(self.path)
        except OSError as exc:
            raise SourceError(f"cannot read replay file {self.path}: {exc}") from exc
        self._records: dict[int, list[TrendRecord]] = {}
        self._countries: dict[int, CountryRef] = {}
        for record in records:
            self._countries.setdefault(record.country.woeid, record.country)
            self._records.setdefault(record.country.woeid, []).append(record)

    def countries(self) -> list[CountryRef]:
        return sorted(self._countries.values())

    def fetch_trends(self, country: CountryRef) -> list[TrendRecord]:
        if country.woeid not in self._records:
            raise NotFoundError(f"unknown country woeid {country.woeid}")
        return list(self._records[country.woeid][:TRENDS_PER_COUNTRY])


# -- live --------------------------------------------------------------------


def http_transport(endpoint: str, timeout: float = 10.0) -> Callable[[dict], object]:
    """POST each request as JSON to ``endpoint`` and decode the JSON reply."""

    def send(request: dict):
        body = json.dumps(request).encode("utf-8")
        req = urllib.request.Request(endpoint, data=body,
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise SourceError(f"request {request!r} to {endpoint} failed: {exc}") from exc

    return send


class LiveSource:
    """Adapter for any backend speaking the two-call JSON contract.

    Requests are ``{"op": "countries"}`` and ``{"op": "trends", "woeid": n}``;
    replies are a list of ``{woeid, name}`` and a list of trend records
    (``{woeid, name, label, followers}``) respectively. ``transport`` sends one
    request and returns the decoded reply, raising :class:`SourceError` on
    transport failure.
    """

    def __init__(self, transport: Callable[[dict], object], retries: int = 2):
        self.transport = transport
        self.retries = retries

    @classmethod
    def from_endpoint(cls, endpoint: str, **kwargs) -> "LiveSource":
        return cls(http_transport(endpoint), **kwargs)

    def _call(self, request):
        for attempt in range(self.retries + 1):
            try:
                return self.transport(request)
            except SourceError as exc:
                if attempt == self.retries:
                    raise
                logger.warning("retrying after transport error: %s", exc)

    def countries(self) -> list[CountryRef]:
        reply = self._call({"op": "countries"})
        try:
            return sorted(CountryRef(int(c["woeid"]), str(c["name"])) for c in reply)
        except (KeyError, TypeError, ValueError) as exc:
            raise SourceError(f"malformed countries reply: {exc}") from exc

    def fetch_trends(self, country: CountryRef) -> list[TrendRecord]:
        reply = self._call({"op": "trends", "woeid": country.woeid})
        if not isinstance(reply, list):
            raise SourceError(f"malformed trends reply for woeid {country.woeid}")
        try:
            records = [TrendRecord.from_json(obj) for obj in reply]
        except InvalidInputError as exc:
            raise SourceError(str(exc)) from exc
        return records[:TRENDS_PER_COUNTRY]


# -- pipeline ----------------------------------------------------------------


@dataclass(frozen=True)
class RawCounts:
    collected: int  # records retrieved
    ineligible: int  # dropped for having too few followers
    duplicates_removed: int  # eligible records whose label was already present
    filtered: int  # unique trends in the graph
    duplicate_users: int
    duplicate_edges: int


def collect_records(source: TrendSource, countries: int, seed: int,
                    woeid_range: tuple[int, int] = WOEID_RANGE) -> list[TrendRecord]:
    """Scan, select ``countries`` at random and fetch their top trends."""
    available = scan_woeids(source.countries(), woeid_range)
    records = []
    for country in select_countries(available, countries, seed):
        records.extend(source.fetch_trends(country)[:TRENDS_PER_COUNTRY])
    return records


def build_graph(records: Iterable[TrendRecord], min_followers: int = 10):
    """Build the trend graph and the ordered trend list from raw records.

    Records with fewer than ``min_followers`` distinct followers are dropped;
    a record whose label is already in the graph is removed as a duplicate
    trend. Returns ``(graph, trend_list, RawCounts)`` where ``trend_list``
    holds trend node ids in first-insertion order.
    """
    min_followers = check_positive_int(min_followers, "min_followers")
    graph = TrendGraph()
    trend_list = []
    collected = ineligible = duplicates = 0
    for record in records:
        collected += 1
        if len(set(record.followers)) < min_followers:
            ineligible += 1
            continue
        if graph.trend_id(record.label) is not None:
            graph.add_trend(record.label, record.country)  # logs the duplicate
            duplicates += 1
            continue
        trend = graph.add_trend(record.label, record.country)
        trend_list.append(trend)
        for handle in record.followers:
            graph.add_follower_edge(trend, handle)
    counts = RawCounts(collected, ineligible, duplicates, len(trend_list),
                       graph.duplicate_users, graph.duplicate_edges)
    return graph, trend_list, counts
