"""Bipartite trend/follower graph and its GML representation.

Trend nodes and user nodes share one dense id space assigned in insertion
order. Trend identity is the exact label string; user identity is the exact
handle string.
"""
from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass
from typing import IO, TYPE_CHECKING, Iterator, Optional, Union

from ._validation import InvalidInputError, NotFoundError

if TYPE_CHECKING:
    from .source import CountryRef

TREND = "trend"
USER = "user"


@dataclass(frozen=True)
class TrendNode:
    id: int
    label: str
    country: Optional["CountryRef"]
    follower_count: int


@dataclass(frozen=True)
class UserNode:
    id: int
    handle: str


@dataclass(frozen=True, order=True)
class Edge:
    source: int  # trend endpoint
    target: int  # user endpoint


class EdgeOutcome(enum.Enum):
    NEW = "new"  # unseen user, new edge
    DUPLICATE_USER = "duplicate_user"  # known user, new edge
    DUPLICATE_EDGE = "duplicate_edge"  # edge already present


class TrendGraph:
    """Undirected bipartite graph of trends and the users following them."""

    def __init__(self):
        self._labels: list[str] = []
        self._kinds: list[str] = []
        self._countries: dict[int, Optional["CountryRef"]] = {}
        self._trend_ids: dict[str, int] = {}
        self._user_ids: dict[str, int] = {}
        self._adj: list[set[int]] = []
        self._edges: set[tuple[int, int]] = set()
        self.duplicate_trends = 0
        self.duplicate_users = 0
        self.duplicate_edges = 0

    # -- construction --------------------------------------------------------

    def _new_node(self, label, kind):
        node_id = len(self._labels)
        self._labels.append(label)
        self._kinds.append(kind)
        self._adj.append(set())
        return node_id

    def add_trend(self, label: str, country: Optional["CountryRef"] = None) -> int:
        """Insert a trend, or return the existing id if ``label`` is known.

        A repeated label counts as a duplicate-trend event; the country of
        the first insertion is kept.
        """
        if not isinstance(label, str) or not label:
            raise InvalidInputError("trend label must be a non-empty string")
        existing = self._trend_ids.get(label)
        if existing is not None:
            self.duplicate_trends += 1
            return existing
        node_id = self._new_node(label, TREND)
        self._trend_ids[label] = node_id
        self._countries[node_id] = country
        return node_id

    def add_follower_edge(self, trend: int, handle: str) -> EdgeOutcome:
        if not self.is_trend(trend):
            raise NotFoundError(f"no trend node with id {trend!r}")
        if not isinstance(handle, str) or not handle:
            raise InvalidInputError("user handle must be a non-empty string")
        user = self._user_ids.get(handle)
        if user is None:
            user = self._new_node(handle, USER)
            self._user_ids[handle] = user
            outcome = EdgeOutcome.NEW
        elif (trend, user) in self._edges:
            self.duplicate_edges += 1
            return EdgeOutcome.DUPLICATE_EDGE
        else:
            self.duplicate_users += 1
            outcome = EdgeOutcome.DUPLICATE_USER
        self._edges.add((trend, user))
        self._adj[trend].add(user)
        self._adj[user].add(trend)
        return outcome

    # -- queries -------------------------------------------------------------

    def __contains__(self, node_id) -> bool:
        return isinstance(node_id, int) and 0 <= node_id < len(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    def is_trend(self, node_id) -> bool:
        return node_id in self and self._kinds[node_id] == TREND

    def trend_id(self, label: str) -> Optional[int]:
        return self._trend_ids.get(label)

    def node(self, node_id: int) -> Union[TrendNode, UserNode]:
        if node_id not in self:
            raise NotFoundError(f"no node with id {node_id!r}")
        if self._kinds[node_id] == TREND:
            return TrendNode(node_id, self._labels[node_id],
                             self._countries[node_id], len(self._adj[node_id]))
        return UserNode(node_id, self._labels[node_id])

    def label(self, node_id: int) -> str:
        if node_id not in self:
            raise NotFoundError(f"no node with id {node_id!r}")
        return self._labels[node_id]

    def kind(self, node_id: int) -> str:
        if node_id not in self:
            raise NotFoundError(f"no node with id {node_id!r}")
        return self._kinds[node_id]

    def node_degree(self, trend: int) -> int:
        if not self.is_trend(trend):
            raise NotFoundError(f"no trend node with id {trend!r}")
        return len(self._adj[trend])

    def neighbors(self, node_id: int) -> frozenset:
        if node_id not in self:
            raise NotFoundError(f"no node with id {node_id!r}")
        return frozenset(self._adj[node_id])

    def trends(self) -> list[int]:
        return [i for i, k in enumerate(self._kinds) if k == TREND]

    def users(self) -> list[int]:
        return [i for i, k in enumerate(self._kinds) if k == USER]

    def edges(self) -> Iterator[Edge]:
        for source, target in sorted(self._edges):
            yield Edge(source, target)

    @property
    def n_nodes(self) -> int:
        return len(self._labels)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def n_trends(self) -> int:
        return len(self._trend_ids)

    @property
    def n_users(self) -> int:
        return len(self._user_ids)

    def __repr__(self):
        return (f"TrendGraph(trends={self.n_trends}, users={self.n_users}, "
                f"edges={self.n_edges})")


def node_degree(graph: TrendGraph, trend: int) -> int:
    """Number of users following ``trend``."""
    return graph.node_degree(trend)


# -- GML ---------------------------------------------------------------------


class GMLParseError(ValueError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


_NEEDS_ESCAPE = re.compile(r'[&"\x00-\x1f\x7f]')


def _escape(text):
    if not _NEEDS_ESCAPE.search(text):
        return text
    out = []
    for ch in text:
        if ch == "&":
            out.append("&amp;")
        elif ch == '"':
            out.append("&quot;")
        elif ord(ch) < 0x20 or ch == "\x7f":
            out.append(f"&#{ord(ch)};")
        else:
            out.append(ch)
    return "".join(out)


_ENTITY = re.compile(r"&(amp|quot|#\d+);")


def _unescape(text, line):
    def repl(m):
        name = m.group(1)
        if name == "amp":
            return "&"
        if name == "quot":
            return '"'
        return chr(int(name[1:]))

    if "&" in _ENTITY.sub("", text):
        raise GMLParseError("unescaped '&' in string", line)
    return _ENTITY.sub(repl, text)


def gml_text(graph: TrendGraph) -> str:
    lines = ["graph ["]
    for node_id, (label, kind) in enumerate(zip(graph._labels, graph._kinds)):
        lines.append(f'  node [\n    id {node_id}\n    label "{_escape(label)}"\n'
                     f'    kind "{kind}"\n  ]')
    for source, target in sorted(graph._edges):
        lines.append(f"  edge [\n    source {source}\n    target {target}\n  ]")
    lines.append("]")
    return "\n".join(lines) + "\n"


def write_gml(graph: TrendGraph, destination: IO[bytes]) -> None:
    """Write ``graph`` as UTF-8 GML; output is byte-identical for equal graphs."""
    destination.write(gml_text(graph).encode("utf-8"))


_TOKEN = re.compile(r'(\[)|(\])|"([^"]*)"|(-?\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\S)')


def _parse_items(text, line_of):
    """Parse GML into nested ``(key, value, offset)`` lists."""
    stack = [[]]
    pending = None  # (key, offset) awaiting its value
    for m in _TOKEN.finditer(text):
        open_, close, string, integer, key, bad = m.groups()
        pos = m.start()
        if bad is not None:
            raise GMLParseError(f"unexpected character {bad!r}", line_of(pos))
        if pending is None:
            if key is not None:
                pending = (key, pos)
            elif close is not None:
                if len(stack) == 1:
                    raise GMLParseError("unbalanced ']'", line_of(pos))
                stack.pop()
            else:
                raise GMLParseError("expected a key", line_of(pos))
            continue
        name, key_pos = pending
        pending = None
        if open_ is not None:
            child = []
            stack[-1].append((name, child, key_pos))
            stack.append(child)
        elif string is not None:
            if "&" in string:
                string = _unescape(string, line_of(pos))
            stack[-1].append((name, string, key_pos))
        elif integer is not None:
            stack[-1].append((name, int(integer), key_pos))
        else:
            raise GMLParseError(f"missing value for {name!r}", line_of(key_pos))
    if pending is not None:
        raise GMLParseError(f"missing value for {pending[0]!r}", line_of(pending[1]))
    if len(stack) != 1:
        raise GMLParseError("unexpected end of input (unclosed '[')", line_of(len(text)))
    return stack[0]


_CANONICAL_BLOCK = re.compile(
    r'  node \[\n    id (\d+)\n    label "([^"]*)"\n    kind "(trend|user)"\n  \]\n'
    r'|  edge \[\n    source (\d+)\n    target (\d+)\n  \]\n')


def _parse_canonical(text):
    """Fast path for byte-exact writer output; None if ``text`` deviates."""
    if not text.startswith("graph [\n") or not text.endswith("]\n"):
        return None
    pos, end = len("graph [\n"), len(text) - len("]\n")
    nodes, edges = [], []
    for m in _CANONICAL_BLOCK.finditer(text, pos, end):
        if m.start() != pos:
            return None
        pos = m.end()
        node_id, label, kind, source, target = m.groups()
        if node_id is not None:
            if "&" in label:
                if "&" in _ENTITY.sub("", label):
                    return None
                label = _unescape(label, 0)
            nodes.append((int(node_id), label, kind, m.start()))
        else:
            edges.append((int(source), int(target), m.start()))
    if pos != end:
        return None
    return nodes, edges


def _fields(items, required, block, offset, line_of):
    out = {}
    for key, value, key_pos in items:
        if key in out:
            raise GMLParseError(f"duplicate {key!r} in {block}", line_of(key_pos))
        out[key] = (value, key_pos)
    for key, typ in required.items():
        if key not in out:
            raise GMLParseError(f"{block} is missing {key!r}", line_of(offset))
        if not isinstance(out[key][0], typ):
            raise GMLParseError(f"{block} field {key!r} has the wrong type",
                                line_of(out[key][1]))
    return {k: v for k, (v, _) in out.items()}


def _parse_generic(text, line_of):
    top = _parse_items(text, line_of)
    if len(top) != 1 or top[0][0] != "graph" or not isinstance(top[0][1], list):
        raise GMLParseError("expected a single 'graph [ ... ]' block", line_of(len(text)))
    nodes, edges = [], []
    for key, value, pos in top[0][1]:
        if key == "node" and isinstance(value, list):
            f = _fields(value, {"id": int, "label": str, "kind": str}, "node", pos, line_of)
            nodes.append((f["id"], f["label"], f["kind"], pos))
        elif key == "edge" and isinstance(value, list):
            f = _fields(value, {"source": int, "target": int}, "edge", pos, line_of)
            edges.append((f["source"], f["target"], pos))
        else:
            raise GMLParseError(f"unexpected entry {key!r} in graph", line_of(pos))
    return nodes, edges


def read_gml(source: Union[IO[bytes], bytes, str, os.PathLike]) -> TrendGraph:
    """Parse GML produced by :func:`write_gml` back into a :class:`TrendGraph`.

    ``source`` is a binary file, a path object, or the GML itself as bytes or
    str.

    Raises :class:`GMLParseError` (carrying the 1-based line number) on
    malformed or truncated input.
    """
    if isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            source = fh.read()
    elif hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GMLParseError(f"invalid UTF-8: {exc}", 1) from None
    text = source

    def line_of(pos):
        return text.count("\n", 0, pos) + 1

    parsed = _parse_canonical(text)
    nodes, edges = parsed if parsed is not None else _parse_generic(text, line_of)

    graph = TrendGraph()
    for expected, (node_id, label, kind, pos) in enumerate(nodes):
        if node_id != expected:
            raise GMLParseError(
                f"node ids must be dense and ascending; expected {expected}", line_of(pos))
        if not label:
            raise GMLParseError("empty node label", line_of(pos))
        if kind == TREND:
            if label in graph._trend_ids:
                raise GMLParseError(f"duplicate trend label {label!r}", line_of(pos))
            graph._trend_ids[label] = graph._new_node(label, TREND)
            graph._countries[node_id] = None
        elif kind == USER:
            if label in graph._user_ids:
                raise GMLParseError(f"duplicate user handle {label!r}", line_of(pos))
            graph._user_ids[label] = graph._new_node(label, USER)
        else:
            raise GMLParseError(f"unknown node kind {kind!r}", line_of(pos))
    kinds, adj, edge_set = graph._kinds, graph._adj, graph._edges
    n = len(kinds)
    for source, target, pos in edges:
        if not (0 <= source < n and 0 <= target < n
                and kinds[source] == TREND and kinds[target] == USER):
            raise GMLParseError("edge must join a trend (source) to a user (target)",
                                line_of(pos))
        if (source, target) in edge_set:
            raise GMLParseError(f"parallel edge {source} -> {target}", line_of(pos))
        edge_set.add((source, target))
        adj[source].add(target)
        adj[target].add(source)
    return graph
