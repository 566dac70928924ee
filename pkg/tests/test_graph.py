import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trendwalk import InvalidInputError, NotFoundError
from trendwalk.graph import (
    EdgeOutcome,
    GMLParseError,
    TrendGraph,
    TrendNode,
    UserNode,
    gml_text,
    node_degree,
    read_gml,
    write_gml,
)


def gml_bytes(graph):
    buf = io.BytesIO()
    write_gml(graph, buf)
    return buf.getvalue()


def test_add_trend_is_idempotent():
    g = TrendGraph()
    first = g.add_trend("#Yolo")
    assert g.add_trend("#Yolo") == first
    assert g.duplicate_trends == 1
    assert g.n_trends == 1


def test_distinct_trends_get_distinct_ids():
    g = TrendGraph()
    assert g.add_trend("#A") != g.add_trend("#B")
    assert g.n_trends == 2


def test_trend_identity_is_case_sensitive():
    g = TrendGraph()
    assert g.add_trend("#yolo") != g.add_trend("#Yolo")


def test_empty_label_rejected():
    with pytest.raises(InvalidInputError):
        TrendGraph().add_trend("")


def test_follower_edge_outcomes():
    g = TrendGraph()
    a, b = g.add_trend("#A"), g.add_trend("#B")
    assert g.add_follower_edge(a, "@x") is EdgeOutcome.NEW
    assert g.add_follower_edge(a, "@x") is EdgeOutcome.DUPLICATE_EDGE
    assert g.n_edges == 1 and g.duplicate_edges == 1
    assert g.add_follower_edge(b, "@x") is EdgeOutcome.DUPLICATE_USER
    assert g.n_users == 1
    assert g.n_edges == 2


def test_follower_edge_unknown_trend():
    g = TrendGraph()
    t = g.add_trend("#A")
    g.add_follower_edge(t, "@x")
    with pytest.raises(NotFoundError):
        g.add_follower_edge(99, "@y")
    with pytest.raises(NotFoundError):
        g.add_follower_edge(g.trend_id("#A") + 1, "@y")  # a user, not a trend


def test_node_degree():
    g = TrendGraph()
    lonely = g.add_trend("#lonely")
    busy = g.add_trend("#busy")
    for i in range(10):
        g.add_follower_edge(busy, f"@u{i}")
    assert node_degree(g, lonely) == 0
    assert node_degree(g, busy) == 10
    with pytest.raises(NotFoundError):
        node_degree(g, 1000)


def test_node_views():
    g = TrendGraph()
    t = g.add_trend("#A")
    g.add_follower_edge(t, "@x")
    assert g.node(t) == TrendNode(t, "#A", None, 1)
    assert g.node(1) == UserNode(1, "@x")
    assert t in g and 5 not in g


def test_synthetic_run_counts_match_brute_force(built, records):
    graph, trend_list, _ = built
    eligible = [r for r in records if len(set(r.followers)) >= 10]
    kept, seen = [], set()
    for r in eligible:
        if r.label not in seen:
            seen.add(r.label)
            kept.append(r)
    assert graph.n_users == len({h for r in kept for h in r.followers})
    edges = list(graph.edges())
    for trend in trend_list:
        assert graph.node_degree(trend) == sum(1 for e in edges if e.source == trend)


def test_bipartite_and_follower_consistency(built):
    graph = built[0]
    for edge in graph.edges():
        assert graph.kind(edge.source) == "trend"
        assert graph.kind(edge.target) == "user"
    for trend in graph.trends():
        assert graph.node(trend).follower_count == graph.node_degree(trend)


def test_ids_dense(built):
    graph = built[0]
    assert sorted(graph.trends() + graph.users()) == list(range(graph.n_nodes))


# -- GML ---------------------------------------------------------------------


def test_empty_graph_gml():
    assert gml_bytes(TrendGraph()) == b"graph [\n]\n"
    assert read_gml(b"graph [\n]\n").n_nodes == 0


def test_single_edge_gml():
    g = TrendGraph()
    t = g.add_trend("#A")
    g.add_follower_edge(t, "@x")
    text = gml_text(g)
    assert text == (
        "graph [\n"
        "  node [\n    id 0\n    label \"#A\"\n    kind \"trend\"\n  ]\n"
        "  node [\n    id 1\n    label \"@x\"\n    kind \"user\"\n  ]\n"
        "  edge [\n    source 0\n    target 1\n  ]\n"
        "]\n"
    )
    assert text.count("node [") == 2 and text.count("edge [") == 1


def test_gml_round_trip_bytes(built):
    raw = gml_bytes(built[0])
    again = read_gml(raw)
    assert gml_bytes(again) == raw
    assert gml_bytes(built[0]) == raw  # determinism


def test_gml_escaping_round_trip():
    g = TrendGraph()
    t = g.add_trend('#say "hi" & bye\n')
    g.add_follower_edge(t, "@ünï")
    raw = gml_bytes(g)
    back = read_gml(raw)
    assert back.label(0) == '#say "hi" & bye\n'
    assert back.label(1) == "@ünï"
    assert gml_bytes(back) == raw


def test_generic_parser_accepts_reformatted_input():
    text = 'graph [ node [ id 0 label "#A" kind "trend" ] node [ id 1 label "@x" kind "user" ]\n' \
           'edge [ target 1 source 0 ] ]'
    g = read_gml(text)
    assert (g.n_trends, g.n_users, g.n_edges) == (1, 1, 1)


def test_truncated_gml_raises(built):
    raw = gml_bytes(built[0])
    with pytest.raises(GMLParseError):
        read_gml(raw[: len(raw) // 2])


@pytest.mark.parametrize("text, line", [
    ('graph [\n  node [\n    id 0\n    label "#A"\n  ]\n]\n', 2),  # missing kind
    ('graph [\n  node [\n    id 0\n    label "#A"\n    kind "trend"\n  ]\n  edge [\n'
     '    source 0\n    target 0\n  ]\n]\n', 7),  # trend-trend edge
    ('graph [\n  node [\n    id 3\n    label "#A"\n    kind "trend"\n  ]\n]\n', 2),  # sparse id
    ('graph [\n  node [\n    id 0\n    label "#A"\n    kind "trend"\n  ]\n', 7),  # unclosed
    ('graph [\n  node [\n    id 0\n    label "#A"\n    kind "trend"\n  ]\n]\n]\n', 8),
    ('graph [\n  node [\n    id 0\n    label "#A&B"\n    kind "trend"\n  ]\n]\n', 4),
    ('graph [\n  node [\n    id x0\n', 3),
])
def test_malformed_gml_reports_line(text, line):
    with pytest.raises(GMLParseError) as info:
        read_gml(text)
    assert info.value.line == line


def test_corrupted_byte_detected(built):
    raw = bytearray(gml_bytes(built[0]))
    raw[raw.index(b"source")] = ord("S")
    with pytest.raises(GMLParseError):
        read_gml(bytes(raw))


labels = st.text(min_size=1, max_size=12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(labels, st.lists(labels, max_size=5)), max_size=8))
def test_round_trip_property(layout):
    g = TrendGraph()
    for label, handles in layout:
        t = g.add_trend(label)
        for h in handles:
            g.add_follower_edge(t, h)
    raw = gml_bytes(g)
    back = read_gml(raw)
    assert gml_bytes(back) == raw
    assert [back.label(i) for i in range(back.n_nodes)] == [g.label(i) for i in range(g.n_nodes)]
    assert list(back.edges()) == list(g.edges())
