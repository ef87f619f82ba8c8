"""Causal DAGs for the two-observer experiment and d-separation queries.

Node names follow the conventional roles: ``a``/``b`` are outcomes, ``x``/``y``
measurement settings, and ``l``, ``l1``, ``l2`` hidden variables (``l`` is the
source hidden variable; ``l1``/``l2`` are per-wing hidden variables in the
three-variable structures).  Six structures are built in, identified by the
tags ``1a``/``1b`` (one hidden variable), ``2a``/``2b`` and ``3a``/``3b``
(three hidden variables); the ``b`` variant of each adds the edges that make
the settings-side variables depend on ``l``, i.e. a violation of measurement
independence.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class NodeKind(Enum):
    OBSERVED = "observed"
    HIDDEN = "hidden"


@dataclass(frozen=True)
class NodeId:
    name: str
    kind: NodeKind


@dataclass(frozen=True)
class IndependenceQuery:
    """A conditional-independence statement ``left _||_ right | given``."""

    left: frozenset[str]
    right: frozenset[str]
    given: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", frozenset(self.left))
        object.__setattr__(self, "right", frozenset(self.right))
        object.__setattr__(self, "given", frozenset(self.given))
        if not self.left or not self.right:
            raise ValueError("left and right node sets must be nonempty")
        if self.left & self.right or self.left & self.given or self.right & self.given:
            raise ValueError("query node sets must be pairwise disjoint")


@dataclass(frozen=True)
class Dag:
    """An immutable directed acyclic graph over named observed/hidden nodes."""

    nodes: frozenset[NodeId]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self) -> None:
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ValueError("node names must be unique within a DAG")
        known = set(names)
        for parent, child in self.edges:
            if parent not in known or child not in known:
                raise ValueError(f"edge ({parent} -> {child}) references an unknown node")
        if _has_cycle(known, self.edges):
            raise ValueError("graph contains a directed cycle")

    @property
    def node_names(self) -> frozenset[str]:
        return frozenset(n.name for n in self.nodes)

    def parents(self, name: str) -> frozenset[str]:
        return frozenset(p for p, c in self.edges if c == name)

    def children(self, name: str) -> frozenset[str]:
        return frozenset(c for p, c in self.edges if p == name)

    def to_edge_list(self) -> str:
        """Serialize as one ``parent -> child`` line per edge, sorted."""
        return "\n".join(f"{p} -> {c}" for p, c in sorted(self.edges)) + "\n"

    @classmethod
    def from_edge_list(cls, text: str, hidden: Iterable[str] = ("l", "l1", "l2")) -> "Dag":
        """Parse the ``parent -> child`` line format produced by :meth:`to_edge_list`.

        Nodes named in ``hidden`` are marked as hidden; isolated nodes cannot
        be expressed in this format.
        """
        hidden_set = set(hidden)
        edges: set[tuple[str, str]] = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split("->")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ValueError(f"line {lineno}: expected 'parent -> child', got {raw!r}")
            edges.add((parts[0].strip(), parts[1].strip()))
        names = {n for edge in edges for n in edge}
        nodes = frozenset(
            NodeId(n, NodeKind.HIDDEN if n in hidden_set else NodeKind.OBSERVED) for n in names
        )
        return cls(nodes=nodes, edges=frozenset(edges))


def _has_cycle(names: set[str], edges: frozenset[tuple[str, str]]) -> bool:
    children: dict[str, list[str]] = {n: [] for n in names}
    indegree = {n: 0 for n in names}
    for p, c in edges:
        children[p].append(c)
        indegree[c] += 1
    queue = deque(n for n, d in indegree.items() if d == 0)
    seen = 0
    while queue:
        n = queue.popleft()
        seen += 1
        for c in children[n]:
            indegree[c] -= 1
            if indegree[c] == 0:
                queue.append(c)
    return seen != len(names)


def _ancestors_of(dag: Dag, targets: frozenset[str]) -> set[str]:
    """Targets together with every ancestor of a target."""
    result = set(targets)
    frontier = deque(targets)
    while frontier:
        node = frontier.popleft()
        for p in dag.parents(node):
            if p not in result:
                result.add(p)
                frontier.append(p)
    return result


def d_separated(dag: Dag, query: IndependenceQuery) -> bool:
    """Decide whether every path between the query's sides is blocked.

    Standard reachability over (node, travel direction) states: a trail may
    pass through a non-collider only while it is unconditioned, and through a
    collider only when the collider or one of its descendants is conditioned.
    Symmetric in left/right by construction.
    """
    missing = (query.left | query.right | query.given) - dag.node_names
    if missing:
        raise ValueError(f"query references nodes not in the DAG: {sorted(missing)}")

    given = query.given
    collider_openers = _ancestors_of(dag, frozenset(given))

    # State (node, arrived_from_child): arrived_from_child=True also covers the
    # start nodes, from which the trail may initially move in any direction.
    frontier: deque[tuple[str, bool]] = deque((n, True) for n in query.left)
    visited: set[tuple[str, bool]] = set(frontier)
    while frontier:
        node, from_child = frontier.popleft()
        if node in query.right:
            return False
        moves: list[tuple[str, bool]] = []
        if from_child:
            if node not in given:
                moves += [(p, True) for p in dag.parents(node)]
                moves += [(c, False) for c in dag.children(node)]
        else:
            if node not in given:
                moves += [(c, False) for c in dag.children(node)]
            if node in collider_openers:
                moves += [(p, True) for p in dag.parents(node)]
        for state in moves:
            if state not in visited:
                visited.add(state)
                frontier.append(state)
    return True


_OBSERVED = ("a", "b", "x", "y")
_FIGURE_EDGES: dict[str, frozenset[tuple[str, str]]] = {
    "1a": frozenset({("x", "a"), ("y", "b"), ("l", "a"), ("l", "b")}),
    "2a": frozenset({("l1", "x"), ("l2", "y"), ("x", "a"), ("y", "b"), ("l", "a"), ("l", "b")}),
    "3a": frozenset({("l1", "x"), ("l2", "y"), ("l1", "a"), ("l2", "b"), ("l", "a"), ("l", "b")}),
}
_FIGURE_EDGES["1b"] = _FIGURE_EDGES["1a"] | {("l", "x"), ("l", "y")}
_FIGURE_EDGES["2b"] = _FIGURE_EDGES["2a"] | {("l", "l1"), ("l", "l2")}
_FIGURE_EDGES["3b"] = _FIGURE_EDGES["3a"] | {("l", "l1"), ("l", "l2")}

FIGURE_TAGS = tuple(sorted(_FIGURE_EDGES))


def builtin_dag(figure: str) -> Dag:
    """One of the six built-in causal structures (tags ``1a`` .. ``3b``).

    ``1a``: settings and one hidden common cause, all exogenous (measurement
    independence holds).  ``1b``: adds ``l -> x`` and ``l -> y``.  ``2a``/``2b``:
    three hidden variables with ``l1 -> x``, ``l2 -> y``; the ``b`` variant
    couples them through ``l``.  ``3a``/``3b``: as 2 but the outcomes are driven
    by ``l1``/``l2`` directly instead of by the settings.
    """
    if figure not in _FIGURE_EDGES:
        raise ValueError(f"unknown figure tag {figure!r}; expected one of {sorted(_FIGURE_EDGES)}")
    edges = _FIGURE_EDGES[figure]
    names = {n for e in edges for n in e}
    nodes = frozenset(
        NodeId(n, NodeKind.OBSERVED if n in _OBSERVED else NodeKind.HIDDEN) for n in names
    )
    return Dag(nodes=nodes, edges=edges)


def figure_of(dag: Dag) -> str | None:
    """Tag of the built-in structurally equal to ``dag``, or None."""
    for tag in FIGURE_TAGS:
        built = builtin_dag(tag)
        if built.nodes == dag.nodes and built.edges == dag.edges:
            return tag
    return None


def mic_holds(dag: Dag) -> bool:
    """Whether the measurement independence condition holds in the DAG.

    In the one-hidden-variable family this is ``l _||_ {x, y}``; in the
    three-hidden-variable families the settings-side variables are ``l1``/``l2``
    and the condition becomes ``l _||_ {l1, l2}``.
    """
    names = dag.node_names
    if "l" not in names:
        raise ValueError("DAG has no hidden source node 'l'")
    if {"l1", "l2"} <= names:
        other = frozenset({"l1", "l2"})
    elif {"x", "y"} <= names:
        other = frozenset({"x", "y"})
    else:
        raise ValueError("DAG has neither {l1, l2} nor {x, y}")
    return d_separated(dag, IndependenceQuery(frozenset({"l"}), other))


_Q = IndependenceQuery
_IDENTITIES: dict[str, tuple[IndependenceQuery, ...]] = {
    # One-variable family: outcome locality plus (for 1a) measurement independence.
    "1a": (
        _Q(frozenset({"a"}), frozenset({"b"}), frozenset({"x", "y", "l"})),
        _Q(frozenset({"a"}), frozenset({"y"}), frozenset({"x", "l"})),
        _Q(frozenset({"b"}), frozenset({"x"}), frozenset({"y", "l"})),
        _Q(frozenset({"l"}), frozenset({"x", "y"})),
    ),
    "1b": (
        _Q(frozenset({"a"}), frozenset({"b"}), frozenset({"x", "y", "l"})),
        _Q(frozenset({"a"}), frozenset({"y"}), frozenset({"x", "l"})),
        _Q(frozenset({"b"}), frozenset({"x"}), frozenset({"y", "l"})),
    ),
    # Three-variable family, settings mediate the outcomes.
    "2a": (
        _Q(frozenset({"a", "b"}), frozenset({"l1", "l2"}), frozenset({"x", "y", "l"})),
        _Q(frozenset({"x", "y"}), frozenset({"l"}), frozenset({"l1", "l2"})),
    ),
    # Three-variable family, per-wing hidden variables drive the outcomes.
    "3a": (
        _Q(frozenset({"a", "b"}), frozenset({"x", "y"}), frozenset({"l", "l1", "l2"})),
        _Q(frozenset({"x", "y"}), frozenset({"l"}), frozenset({"l1", "l2"})),
    ),
}
_IDENTITIES["2b"] = _IDENTITIES["2a"]
_IDENTITIES["3b"] = _IDENTITIES["3a"]


def markov_identities(dag: Dag) -> list[IndependenceQuery]:
    """The factorization identities the built-in DAG licenses, as queries.

    Every returned query is guaranteed true under :func:`d_separated` on the
    given DAG; non-built-in DAGs are rejected.
    """
    tag = figure_of(dag)
    if tag is None:
        raise ValueError("markov_identities is defined only for the built-in DAGs")
    queries = list(_IDENTITIES[tag])
    for q in queries:
        if not d_separated(dag, q):  # pragma: no cover - structural guarantee
            raise AssertionError(f"built-in identity {q} failed on figure {tag}")
    return queries
