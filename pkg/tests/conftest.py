import pytest

from trendwalk.source import SyntheticSource, WorldSpec, build_graph, collect_records


@pytest.fixture(scope="session")
def world():
    return WorldSpec(seed=7)


@pytest.fixture(scope="session")
def records(world):
    return collect_records(SyntheticSource(world), countries=15, seed=11)


@pytest.fixture
def built(records):
    return build_graph(records, min_followers=10)


def tiny_graph(n_trends=10, followers=10):
    """Graph with ``n_trends`` trends, each followed by ``followers`` distinct users."""
    from trendwalk.graph import TrendGraph

    g = TrendGraph()
    ids = []
    for t in range(n_trends):
        trend = g.add_trend(f"#t{t}")
        ids.append(trend)
        for u in range(followers):
            g.add_follower_edge(trend, f"@u{t}_{u}")
    return g, ids


def tree_digest(root):
    """Map of relative path -> sha256 for every file under ``root``."""
    import hashlib
    from pathlib import Path

    root = Path(root)
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="session")
def default_campaign(tmp_path_factory):
    """Default campaign (3 generators x 10 runs, seed 0), written once per session."""
    from trendwalk.cli import main

    out = tmp_path_factory.mktemp("campaign")
    assert main(["run", "--out", str(out)]) == 0
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
