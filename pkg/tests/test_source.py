import json
import math

import numpy as np
import pytest

from trendwalk import InvalidInputError, NotFoundError, SourceError
from trendwalk.source import (
    COUNTRY_DIRECTORY,
    WOEID_RANGE,
    CountryRef,
    LiveSource,
    ReplaySource,
    SyntheticSource,
    TrendRecord,
    WorldSpec,
    build_graph,
    collect_records,
    read_records,
    scan_woeids,
    select_countries,
    write_records,
)


def test_directory_in_range_and_unique():
    woeids = [c.woeid for c in COUNTRY_DIRECTORY]
    assert len(woeids) == len(set(woeids)) == 42
    assert all(WOEID_RANGE[0] <= w <= WOEID_RANGE[1] for w in woeids)


def test_scan_full_range():
    found = scan_woeids(COUNTRY_DIRECTORY)
    assert len(found) == 42
    assert [c.woeid for c in found] == sorted(c.woeid for c in COUNTRY_DIRECTORY)


@pytest.mark.parametrize("lo, hi", [(23424800, 23424900), (23424000, 23424000),
                                    (23424977, 23424977)])
def test_scan_subrange_matches_brute_force(lo, hi):
    expected = []
    for w in range(lo, hi + 1):
        expected += [c for c in COUNTRY_DIRECTORY if c.woeid == w]
    assert scan_woeids(COUNTRY_DIRECTORY, (lo, hi)) == expected


def test_scan_empty_range():
    with pytest.raises(InvalidInputError):
        scan_woeids(COUNTRY_DIRECTORY, (5, 4))


def test_select_countries_distinct_and_ordered():
    pool = scan_woeids(COUNTRY_DIRECTORY)
    picked = select_countries(pool, 15, seed=1)
    assert len(set(picked)) == 15
    assert picked == sorted(picked, key=pool.index)
    assert picked == select_countries(pool, 15, seed=1)
    with pytest.raises(InvalidInputError):
        select_countries(pool, 43, seed=1)


def test_select_countries_uniform():
    pool = [CountryRef(23424000 + i, str(i)) for i in range(10)]
    trials, w = 20000, 3
    counts = np.zeros(10)
    for seed in range(trials):
        for c in select_countries(pool, w, seed):
            counts[c.woeid - 23424000] += 1
    p = w / 10
    assert np.all(np.abs(counts - trials * p) <= 4 * math.sqrt(trials * p * (1 - p)))


def test_synthetic_is_deterministic(world):
    a, b = SyntheticSource(world), SyntheticSource(world)
    for c in a.countries()[:5]:
        assert a.fetch_trends(c) == b.fetch_trends(c)


def test_synthetic_shape(world):
    src = SyntheticSource(world)
    for c in src.countries():
        records = src.fetch_trends(c)
        assert len(records) == 10
        for r in records:
            assert r.country == c
            assert 1 <= len(r.followers) <= world.max_followers
            assert len(set(r.followers)) == len(r.followers)


def test_full_overlap_gives_identical_labels():
    src = SyntheticSource(WorldSpec(overlap_prob=1.0, seed=3))
    label_sets = {tuple(r.label for r in src.fetch_trends(c)) for c in src.countries()}
    assert len(label_sets) == 1


def test_no_overlap_keeps_every_trend():
    src = SyntheticSource(WorldSpec(overlap_prob=0.0, seed=3, max_followers=20,
                                    zipf_exponent=1e-9))
    records = collect_records(src, countries=15, seed=0)
    assert len(records) == 150
    graph, trend_list, counts = build_graph(records, min_followers=1)
    assert counts.filtered == counts.collected == 150 == len(trend_list)
    assert counts.duplicates_removed == 0


def test_synthetic_extends_directory():
    src = SyntheticSource(WorldSpec(country_count=50))
    assert len(src.countries()) == 50
    assert len({c.woeid for c in src.countries()}) == 50


def test_synthetic_unknown_country(world):
    with pytest.raises(NotFoundError):
        SyntheticSource(world).fetch_trends(CountryRef(1, "nowhere"))


@pytest.mark.parametrize("kwargs", [{"overlap_prob": 1.5}, {"max_followers": 0},
                                    {"zipf_exponent": 0}, {"seed": -3},
                                    {"max_followers": 10, "user_pool": 5}])
def test_world_validation(kwargs):
    with pytest.raises(InvalidInputError):
        WorldSpec(**kwargs)


# -- build_graph ---------------------------------------------------------------

C1, C2 = CountryRef(23424775, "Canada"), CountryRef(23424977, "United States")


def _record(label, n, country=C1, prefix="@u"):
    return TrendRecord(label, country, tuple(f"{prefix}{i}" for i in range(n)))


def test_min_followers_threshold():
    graph, trend_list, counts = build_graph([_record("#a", 9), _record("#b", 10)])
    assert [graph.label(t) for t in trend_list] == ["#b"]
    assert (counts.collected, counts.ineligible, counts.filtered) == (2, 1, 1)


def test_duplicate_label_dropped():
    records = [_record("#a", 10), _record("#a", 12, C2, "@v"), _record("#b", 10)]
    graph, trend_list, counts = build_graph(records)
    assert counts.duplicates_removed == 1
    assert counts.filtered == 2
    assert graph.node_degree(trend_list[0]) == 10
    assert graph.n_users == 10  # second #a followers are not added
    assert counts.duplicate_users == 10  # #b reuses @u0..@u9


def test_trend_list_in_insertion_order(records):
    graph, trend_list, counts = build_graph(records)
    labels = [graph.label(t) for t in trend_list]
    expected, seen = [], set()
    for r in records:
        if len(set(r.followers)) >= 10 and r.label not in seen:
            seen.add(r.label)
            expected.append(r.label)
    assert labels == expected
    assert counts.filtered == counts.collected - counts.ineligible - counts.duplicates_removed


def test_graph_is_bipartite(built):
    graph, trend_list, _ = built
    for t in trend_list:
        assert all(not graph.is_trend(u) for u in graph.neighbors(t))


# -- replay ------------------------------------------------------------------


def test_replay_round_trip(tmp_path, records):
    path = tmp_path / "world.jsonl"
    write_records(records, path)
    assert read_records(path) == records
    src = ReplaySource(path)
    # all 15 recorded countries are selected, in ascending WOEID order
    assert collect_records(src, countries=15, seed=0) == records
    for country in src.countries():
        assert src.fetch_trends(country) == [r for r in records if r.country == country]


def test_replay_unicode(tmp_path):
    rec = TrendRecord("#café ☕", C1, ("@ü1",))
    path = tmp_path / "u.jsonl"
    write_records([rec], path)
    assert read_records(path) == [rec]


def test_replay_missing_file(tmp_path):
    with pytest.raises(SourceError):
        ReplaySource(tmp_path / "absent.jsonl")


def test_replay_unknown_country(tmp_path):
    path = tmp_path / "w.jsonl"
    write_records([_record("#a", 3)], path)
    with pytest.raises(NotFoundError):
        ReplaySource(path).fetch_trends(C2)


@pytest.mark.parametrize("line", ['{"woeid": 1}', "not json",
                                  '{"woeid": true, "name": "x", "label": "#a", "followers": []}'])
def test_replay_malformed(tmp_path, line):
    path = tmp_path / "bad.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(InvalidInputError, match="bad.jsonl:1"):
        read_records(path)


# -- live ----------------------------------------------------------------------


class FakeService:
    def __init__(self, source, failures=0):
        self.source = source
        self.failures = failures
        self.requests = []

    def __call__(self, request):
        self.requests.append(request)
        if self.failures:
            self.failures -= 1
            raise SourceError("connection reset")
        if request["op"] == "countries":
            return [{"woeid": c.woeid, "name": c.name} for c in self.source.countries()]
        country = next(c for c in self.source.countries() if c.woeid == request["woeid"])
        return json.loads(json.dumps([r.to_json() for r in self.source.fetch_trends(country)]))


def test_live_matches_underlying_source(world):
    synthetic = SyntheticSource(world)
    live = LiveSource(FakeService(synthetic))
    assert collect_records(live, 15, seed=11) == collect_records(synthetic, 15, seed=11)


def test_live_retries_then_succeeds(world):
    service = FakeService(SyntheticSource(world), failures=2)
    assert len(LiveSource(service, retries=2).countries()) == 42
    assert len(service.requests) == 3


def test_live_gives_up(world):
    with pytest.raises(SourceError):
        LiveSource(FakeService(SyntheticSource(world), failures=3), retries=2).countries()


@pytest.mark.parametrize("reply", [{"oops": 1}, [{"woeid": 1}], "text"])
def test_live_malformed_replies(reply):
    live = LiveSource(lambda request: reply)
    with pytest.raises(SourceError):
        live.fetch_trends(C1) if isinstance(reply, (str, dict)) else live.countries()


def test_live_unreachable_endpoint():
    live = LiveSource.from_endpoint("http://127.0.0.1:9/", retries=0)
    with pytest.raises(SourceError):
        live.countries()
