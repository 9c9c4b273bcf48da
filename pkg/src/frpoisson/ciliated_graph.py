"""Ciliated graphs: skeletons of marked surfaces.

A ciliated graph is a set of half-edges with a fixed-point-free involution
(the edges), an incidence map to vertices and, at every vertex, a linear
order of the incident half-edges (the cilium). Edges are identified by the
sorted pair of their half-edge ids joined by ``":"``.
"""

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from types import MappingProxyType
from typing import NamedTuple

import numpy as np

from .lie_core import InvariantError

_logger = logging.getLogger(__name__)


def edge_id(alpha: str, beta: str) -> str:
    """The id of the edge ``[α, α̌]``."""
    return ":".join(sorted((alpha, beta)))


class CiliatedGraph:
    """An immutable ciliated graph.

    Parameters
    ----------
    vertices : iterable of str
        Vertex ids, in a fixed order.
    half_edges : iterable of str
        Half-edge ids.
    involution : mapping
        ``α ↦ α̌``; must be a fixed-point-free involution.
    incidence : mapping
        ``α ↦`` its vertex.
    orders : mapping
        ``v ↦`` the ordered list of half-edges at ``v``.
    """

    def __init__(
        self,
        vertices: Iterable[str],
        half_edges: Iterable[str],
        involution: Mapping[str, str],
        incidence: Mapping[str, str],
        orders: Mapping[str, Iterable[str]],
    ):
        self._vertices = tuple(vertices)
        self._half_edges = tuple(half_edges)
        self._involution = dict(involution)
        self._incidence = dict(incidence)
        self._orders = {v: tuple(hs) for v, hs in orders.items()}
        self.validate()
        self._edges = tuple(
            sorted({edge_id(a, self._involution[a]) for a in self._half_edges})
        )

    def validate(self):
        """Check every invariant; raise :class:`InvariantError` naming the culprit."""
        if len(set(self._vertices)) != len(self._vertices):
            raise InvariantError("vertex ids must be unique")
        if len(set(self._half_edges)) != len(self._half_edges):
            raise InvariantError("half-edge ids must be unique")
        half_edges = set(self._half_edges)
        for alpha in self._half_edges:
            if ":" in alpha:
                raise InvariantError(f"half-edge id {alpha!r} must not contain ':'")
            if alpha not in self._involution:
                raise InvariantError(f"involution: half-edge {alpha!r} has no partner")
            partner = self._involution[alpha]
            if partner == alpha:
                raise InvariantError(
                    f"involution: half-edge {alpha!r} is a fixed point"
                )
            if partner not in half_edges:
                raise InvariantError(
                    f"involution: partner {partner!r} of {alpha!r} is not a half-edge"
                )
            if self._involution.get(partner) != alpha:
                raise InvariantError(
                    f"involution: {alpha!r} -> {partner!r} is not an involution"
                )
            if alpha not in self._incidence:
                raise InvariantError(f"incidence: half-edge {alpha!r} has no vertex")
            if self._incidence[alpha] not in self._vertices:
                raise InvariantError(
                    f"incidence: vertex {self._incidence[alpha]!r} of {alpha!r} "
                    "is not a vertex"
                )
        extra = set(self._involution) - half_edges
        if extra:
            raise InvariantError(f"involution: unknown half-edges {sorted(extra)}")
        extra = set(self._incidence) - half_edges
        if extra:
            raise InvariantError(f"incidence: unknown half-edges {sorted(extra)}")
        if set(self._orders) != set(self._vertices):
            raise InvariantError("orders: one order per vertex is required")
        seen: set[str] = set()
        for v in self._vertices:
            order = self._orders[v]
            if len(set(order)) != len(order):
                raise InvariantError(f"orders: vertex {v!r} lists a half-edge twice")
            expected = {a for a in self._half_edges if self._incidence[a] == v}
            if set(order) != expected:
                raise InvariantError(
                    f"orders: vertex {v!r} lists {sorted(order)} but is incident to "
                    f"{sorted(expected)}"
                )
            seen.update(order)
        if seen != half_edges:
            raise InvariantError("orders do not partition the half-edges")

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def half_edges(self) -> tuple[str, ...]:
        return self._half_edges

    @property
    def involution(self) -> Mapping[str, str]:
        return MappingProxyType(self._involution)

    @property
    def incidence(self) -> Mapping[str, str]:
        return MappingProxyType(self._incidence)

    @property
    def orders(self) -> Mapping[str, tuple[str, ...]]:
        return MappingProxyType(self._orders)

    @property
    def edges(self) -> tuple[str, ...]:
        """Edge ids, sorted."""
        return self._edges

    def opposite(self, alpha: str) -> str:
        self._require_half_edge(alpha)
        return self._involution[alpha]

    def vertex_of(self, alpha: str) -> str:
        self._require_half_edge(alpha)
        return self._incidence[alpha]

    def edge_of(self, alpha: str) -> str:
        return edge_id(alpha, self.opposite(alpha))

    def half_edges_of(self, edge: str) -> tuple[str, str]:
        parts = edge.split(":")
        if (
            len(parts) != 2
            or parts[0] not in self._involution
            or self._involution[parts[0]] != parts[1]
        ):
            raise ValueError(f"No edge {edge!r} in the graph")
        return parts[0], parts[1]

    def order_at(self, v: str) -> tuple[str, ...]:
        if v not in self._orders:
            raise ValueError(f"No vertex {v!r} in the graph")
        return self._orders[v]

    def is_loop(self, edge: str) -> bool:
        a, b = self.half_edges_of(edge)
        return self._incidence[a] == self._incidence[b]

    def _require_half_edge(self, alpha: str):
        if alpha not in self._involution:
            raise ValueError(f"No half-edge {alpha!r} in the graph")

    def __repr__(self):
        return (
            f"CiliatedGraph(vertices={len(self._vertices)}, "
            f"edges={len(self._half_edges) // 2})"
        )

    def __eq__(self, other):
        if not isinstance(other, CiliatedGraph):
            return NotImplemented
        return graph_equal(self, other) and self._vertices == other._vertices

    __hash__ = None


class Orientation:
    """A choice of source half-edge ``α_γ`` for every edge ``γ`` of a graph."""

    def __init__(self, graph: CiliatedGraph, sources: Mapping[str, str]):
        self.graph = graph
        sources = dict(sources)
        missing = set(graph.edges) - set(sources)
        if missing:
            raise InvariantError(f"orientation: edges without a source {sorted(missing)}")
        for edge, alpha in sources.items():
            if alpha not in graph.half_edges_of(edge):
                raise InvariantError(
                    f"orientation: source {alpha!r} is not a half-edge of {edge!r}"
                )
        self._sources = sources

    @classmethod
    def default(cls, graph: CiliatedGraph) -> "Orientation":
        """Orient every edge from its lexicographically smaller half-edge."""
        return cls(graph, {e: e.split(":")[0] for e in graph.edges})

    @property
    def sources(self) -> Mapping[str, str]:
        return MappingProxyType(self._sources)

    def source(self, edge: str) -> str:
        try:
            return self._sources[edge]
        except KeyError:
            raise ValueError(f"No edge {edge!r} in the graph") from None

    def target(self, edge: str) -> str:
        return self.graph.opposite(self.source(edge))

    def source_vertex(self, edge: str) -> str:
        return self.graph.vertex_of(self.source(edge))

    def target_vertex(self, edge: str) -> str:
        return self.graph.vertex_of(self.target(edge))

    def is_source(self, alpha: str) -> bool:
        return self._sources[self.graph.edge_of(alpha)] == alpha

    def sign(self, alpha: str) -> int:
        """``ε_v(α)``: +1 on source half-edges, −1 on target half-edges."""
        return 1 if self.is_source(alpha) else -1

    def transfer(self, graph: CiliatedGraph) -> "Orientation":
        """The same source half-edges on a graph with the same edges."""
        return Orientation(graph, self._sources)

    def __eq__(self, other):
        if not isinstance(other, Orientation):
            return NotImplemented
        return self._sources == other._sources

    __hash__ = None

    def __repr__(self):
        return f"Orientation({dict(sorted(self._sources.items()))})"


class Skeleton(NamedTuple):
    """A ciliated graph together with an orientation of its edges."""

    graph: CiliatedGraph
    orientation: Orientation


def reverse_edge(o: Orientation, edge: str) -> Orientation:
    """Swap the source of ``edge`` to the opposite half-edge."""
    sources = dict(o.sources)
    sources[edge] = o.target(edge)
    return Orientation(o.graph, sources)


def fused_name(v1: str, v2: str) -> str:
    return f"{v1}={v2}"


def fuse(g: CiliatedGraph, v1: str, v2: str) -> CiliatedGraph:
    """Identify ``v1`` and ``v2``; the new order is ``v1``'s list then ``v2``'s.

    The merged vertex is named ``"v1=v2"`` and takes ``v1``'s position.
    """
    if v1 == v2:
        raise ValueError(f"Cannot fuse vertex {v1!r} with itself")
    for v in (v1, v2):
        if v not in g.orders:
            raise ValueError(f"No vertex {v!r} in the graph")
    merged = fused_name(v1, v2)
    if merged in g.vertices:
        raise ValueError(f"Fused vertex name {merged!r} already exists")
    vertices = [merged if v == v1 else v for v in g.vertices if v != v2]
    incidence = {
        a: merged if v in (v1, v2) else v for a, v in g.incidence.items()
    }
    orders = {v: hs for v, hs in g.orders.items() if v not in (v1, v2)}
    orders[merged] = g.orders[v1] + g.orders[v2]
    _logger.debug("fuse: %s + %s -> %s", v1, v2, merged)
    return CiliatedGraph(vertices, g.half_edges, g.involution, incidence, orders)


def fuse_skeleton(s: Skeleton, v1: str, v2: str) -> Skeleton:
    graph = fuse(s.graph, v1, v2)
    return Skeleton(graph, s.orientation.transfer(graph))


def disjoint_union(*skeletons: Skeleton) -> Skeleton:
    """Union of skeletons with disjoint vertex and half-edge ids."""
    vertices, half_edges = [], []
    involution, incidence, orders, sources = {}, {}, {}, {}
    for g, o in skeletons:
        clash = set(g.vertices) & set(vertices) or set(g.half_edges) & set(half_edges)
        if clash:
            raise InvariantError(f"disjoint_union: ids {sorted(clash)} are not disjoint")
        vertices.extend(g.vertices)
        half_edges.extend(g.half_edges)
        involution.update(g.involution)
        incidence.update(g.incidence)
        orders.update(g.orders)
        sources.update(o.sources)
    graph = CiliatedGraph(vertices, half_edges, involution, incidence, orders)
    return Skeleton(graph, Orientation(graph, sources))


def relabel(s: Skeleton, vertex_map: Mapping[str, str]) -> Skeleton:
    """Rename vertices; unmapped vertices keep their ids."""
    g, o = s
    rename = {v: vertex_map.get(v, v) for v in g.vertices}
    if len(set(rename.values())) != len(rename):
        raise ValueError("Vertex relabeling is not injective")
    graph = CiliatedGraph(
        [rename[v] for v in g.vertices],
        g.half_edges,
        g.involution,
        {a: rename[v] for a, v in g.incidence.items()},
        {rename[v]: hs for v, hs in g.orders.items()},
    )
    return Skeleton(graph, o.transfer(graph))


def graph_equal(
    g1: CiliatedGraph,
    g2: CiliatedGraph,
    vertex_map: Mapping[str, str] | None = None,
    half_edge_map: Mapping[str, str] | None = None,
) -> bool:
    """Structural equality under a vertex and half-edge relabeling (identity by default).

    Vertex order is not compared; the half-edge orders at vertices are.
    """
    vmap = {v: (vertex_map or {}).get(v, v) for v in g1.vertices}
    hmap = {a: (half_edge_map or {}).get(a, a) for a in g1.half_edges}
    if set(vmap.values()) != set(g2.vertices) or len(g1.vertices) != len(g2.vertices):
        return False
    if set(hmap.values()) != set(g2.half_edges) or len(g1.half_edges) != len(g2.half_edges):
        return False
    for a in g1.half_edges:
        if hmap[g1.involution[a]] != g2.involution[hmap[a]]:
            return False
        if vmap[g1.incidence[a]] != g2.incidence[hmap[a]]:
            return False
    for v in g1.vertices:
        if tuple(hmap[a] for a in g1.orders[v]) != g2.orders[vmap[v]]:
            return False
    return True


# --------------------------------------------------------------------------
# Local moves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalMovePivot:
    """The edges of a local move.

    ``moved`` is ``γ1``, whose target half-edge is re-based; ``along`` is
    ``γ2``. Forward: ``(v1→v2), (v2→v3)`` become ``(v1→v3), (v2→v3)``.
    ``inverse`` undoes a forward move.
    """

    moved: str
    along: str
    inverse: bool = False


@dataclass(frozen=True)
class LocalMoveResult:
    graph: CiliatedGraph
    orientation: Orientation
    pivot: LocalMovePivot
    vertex_map: Mapping[str, str]
    edge_map: Mapping[str, str]


def _move_mismatch(pivot: LocalMovePivot, reason: str) -> ValueError:
    return ValueError(f"Pivot {pivot} does not match the local move pattern: {reason}")


def _check_pivot(g: CiliatedGraph, o: Orientation, pivot: LocalMovePivot):
    """Return ``(moved half-edge, new vertex, insertion anchor)`` or raise."""
    if pivot.moved == pivot.along:
        raise _move_mismatch(pivot, "the two edges coincide")
    for e in (pivot.moved, pivot.along):
        if e not in g.edges:
            raise _move_mismatch(pivot, f"no edge {e!r}")
    s1, t1 = o.source(pivot.moved), o.target(pivot.moved)
    s2, t2 = o.source(pivot.along), o.target(pivot.along)
    v1, v2, v3 = g.vertex_of(s1), g.vertex_of(s2), g.vertex_of(t2)
    if v2 == v3:
        raise _move_mismatch(pivot, "the second edge is a loop")
    if not pivot.inverse:
        if g.vertex_of(t1) != v2:
            raise _move_mismatch(pivot, "the first edge does not end where the second starts")
        if v1 == v2:
            raise _move_mismatch(pivot, "the first edge is a loop")
        order = g.order_at(v2)
        if order.index(t1) != order.index(s2) + 1:
            raise _move_mismatch(
                pivot, "the end of the first edge does not directly follow the second edge"
            )
        return t1, v3, t2
    if g.vertex_of(t1) != v3:
        raise _move_mismatch(pivot, "the two edges do not end at the same vertex")
    if v1 == v2:
        raise _move_mismatch(pivot, "the inverse move would create a loop")
    order = g.order_at(v3)
    if order.index(t2) != order.index(t1) + 1:
        raise _move_mismatch(
            pivot, "the end of the first edge does not directly precede the second"
        )
    return t1, v2, s2


def local_move(g: CiliatedGraph, o: Orientation, pivot: LocalMovePivot) -> LocalMoveResult:
    """Re-base one half-edge as in the local change of skeletons.

    Forward, the target half-edge of ``γ1`` moves from ``v2`` to ``v3``, just
    before the target half-edge of ``γ2``; coordinates change by
    ``(g1, g2) ↦ (g1·g2, g2)``. The inverse puts it back just after the source
    half-edge of ``γ2``; coordinates change by ``(g1, g2) ↦ (g1·g2⁻¹, g2)``.
    Vertex and edge ids are unchanged.
    """
    if o.graph is not g and o.graph != g:
        raise ValueError("Orientation does not belong to the graph")
    alpha, new_vertex, anchor = _check_pivot(g, o, pivot)
    orders = {v: list(hs) for v, hs in g.orders.items()}
    old_vertex = g.vertex_of(alpha)
    orders[old_vertex].remove(alpha)
    position = orders[new_vertex].index(anchor)
    if pivot.inverse:
        position += 1
    orders[new_vertex].insert(position, alpha)
    incidence = dict(g.incidence)
    incidence[alpha] = new_vertex
    graph = CiliatedGraph(g.vertices, g.half_edges, g.involution, incidence, orders)
    _logger.debug("local_move %s: %s moved %s -> %s", pivot, alpha, old_vertex, new_vertex)
    return LocalMoveResult(
        graph,
        o.transfer(graph),
        pivot,
        MappingProxyType({v: v for v in g.vertices}),
        MappingProxyType({e: e for e in g.edges}),
    )


def applicable_local_moves(g: CiliatedGraph, o: Orientation) -> list[LocalMovePivot]:
    """Every pivot, forward or inverse, that matches the move pattern."""
    pivots = []
    for moved in g.edges:
        for along in g.edges:
            if moved == along:
                continue
            for inverse in (False, True):
                pivot = LocalMovePivot(moved, along, inverse)
                try:
                    _check_pivot(g, o, pivot)
                except ValueError:
                    continue
                pivots.append(pivot)
    return pivots


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def _single_edge(name: str, tail: str, head: str) -> Skeleton:
    source, target = f"{name}.0", f"{name}.1"
    graph = CiliatedGraph(
        [tail, head],
        [source, target],
        {source: target, target: source},
        {source: tail, target: head},
        {tail: [source], head: [target]},
    )
    return Skeleton(graph, Orientation(graph, {edge_id(source, target): source}))


def disk2(edge: str = "a", vertices: tuple[str, str] = ("v1", "v2")) -> Skeleton:
    """Disk with two marked points: one edge oriented ``v1 → v2``.

    The half-edges are ``<edge>.0`` at ``v1`` and ``<edge>.1`` at ``v2``.
    """
    return _single_edge(edge, *vertices)


def annulus_marked(m: int) -> Skeleton:
    """Annulus with ``m`` marked points on one boundary circle.

    Built from ``m`` disks ``u_i → w_i`` by fusing ``w_i`` with ``u_{i+1}``
    and finally the vertex holding ``u_1`` with the one holding ``w_m``.
    ``annulus_marked(1)`` is ``disk2`` fused at its own endpoints.
    """
    if m < 1:
        raise ValueError(f"annulus_marked needs m >= 1, got {m}")
    skeleton = disjoint_union(
        *(_single_edge(f"a{i}", f"u{i}", f"w{i}") for i in range(1, m + 1))
    )
    for i in range(1, m):
        skeleton = fuse_skeleton(skeleton, f"w{i}", f"u{i + 1}")
    first = skeleton.graph.vertex_of("a1.0")
    last = skeleton.graph.vertex_of(f"a{m}.1")
    return fuse_skeleton(skeleton, first, last)


def sigma_n(n: int) -> Skeleton:
    """Two vertices joined by ``n`` parallel edges ``e1 … en``, all ``v1 → v2``.

    The order is ``(e1, …, en)`` at ``v1`` and ``(en, …, e1)`` at ``v2``.
    """
    if n < 1:
        raise ValueError(f"sigma_n needs n >= 1, got {n}")
    sources = [f"e{i}.0" for i in range(1, n + 1)]
    targets = [f"e{i}.1" for i in range(1, n + 1)]
    involution = {}
    for s, t in zip(sources, targets, strict=True):
        involution[s], involution[t] = t, s
    graph = CiliatedGraph(
        ["v1", "v2"],
        sources + targets,
        involution,
        {**{s: "v1" for s in sources}, **{t: "v2" for t in targets}},
        {"v1": sources, "v2": list(reversed(targets))},
    )
    return Skeleton(
        graph,
        Orientation(graph, {edge_id(s, t): s for s, t in zip(sources, targets, strict=True)}),
    )


def polygon_path(k: int) -> Skeleton:
    """A path ``v0 → v1 → … → vk``; inner orders are (incoming, outgoing)."""
    if k < 2:
        raise ValueError(f"polygon_path needs k >= 2, got {k}")
    skeleton = disjoint_union(
        *(_single_edge(f"e{i}", f"p{i}", f"q{i}") for i in range(1, k + 1))
    )
    for i in range(1, k):
        skeleton = fuse_skeleton(skeleton, f"q{i}", f"p{i + 1}")
    names = {"p1": "v0", f"q{k}": f"v{k}"}
    for i in range(1, k):
        names[fused_name(f"q{i}", f"p{i + 1}")] = f"v{i}"
    return relabel(skeleton, names)


def three_marked_disk() -> Skeleton:
    """Disk with three marked points: ``g1 = (v1→v2)``, ``g2 = (v2→v3)``.

    At ``v2`` the order is (source of ``g2``, target of ``g1``), so the
    forward local move applies to ``LocalMovePivot("g1.0:g1.1", "g2.0:g2.1")``.
    """
    graph = CiliatedGraph(
        ["v1", "v2", "v3"],
        ["g1.0", "g1.1", "g2.0", "g2.1"],
        {"g1.0": "g1.1", "g1.1": "g1.0", "g2.0": "g2.1", "g2.1": "g2.0"},
        {"g1.0": "v1", "g1.1": "v2", "g2.0": "v2", "g2.1": "v3"},
        {"v1": ["g1.0"], "v2": ["g2.0", "g1.1"], "v3": ["g2.1"]},
    )
    return Skeleton(
        graph, Orientation(graph, {"g1.0:g1.1": "g1.0", "g2.0:g2.1": "g2.0"})
    )


def random_ciliated_graph(
    rng: np.random.Generator, max_vertices: int = 4, max_edges: int = 6
) -> Skeleton:
    """A random skeleton: random fusions of disks, then random edge reversals."""
    if max_vertices < 1 or max_edges < 1:
        raise ValueError("random_ciliated_graph needs positive bounds")
    n_edges = int(rng.integers(1, max_edges + 1))
    n_vertices = int(rng.integers(1, min(max_vertices, 2 * n_edges) + 1))
    skeleton = disjoint_union(
        *(_single_edge(f"r{i}", f"x{i}", f"y{i}") for i in range(n_edges))
    )
    while len(skeleton.graph.vertices) > n_vertices:
        vertices = skeleton.graph.vertices
        a, b = rng.choice(len(vertices), size=2, replace=False)
        skeleton = fuse_skeleton(skeleton, vertices[int(a)], vertices[int(b)])
    orientation = skeleton.orientation
    for edge in skeleton.graph.edges:
        if rng.random() < 0.5:
            orientation = reverse_edge(orientation, edge)
    # fused names grow long; rename to compact ids
    names = {v: f"v{i + 1}" for i, v in enumerate(skeleton.graph.vertices)}
    return relabel(Skeleton(skeleton.graph, orientation), names)


# --------------------------------------------------------------------------
# JSON records
# --------------------------------------------------------------------------


def to_json(s: Skeleton) -> dict:
    g, o = s
    return {
        "vertices": list(g.vertices),
        "half_edges": list(g.half_edges),
        "involution": dict(g.involution),
        "incidence": dict(g.incidence),
        "orders": {v: list(hs) for v, hs in g.orders.items()},
        "orientation": dict(sorted(o.sources.items())),
    }


def from_json(record: Mapping) -> Skeleton:
    for field in ("vertices", "half_edges", "involution", "incidence", "orders"):
        if field not in record:
            raise ValueError(f"Graph record is missing {field!r}")
    graph = CiliatedGraph(
        record["vertices"],
        record["half_edges"],
        record["involution"],
        record["incidence"],
        record["orders"],
    )
    if "orientation" in record:
        orientation = Orientation(graph, record["orientation"])
    else:
        orientation = Orientation.default(graph)
    return Skeleton(graph, orientation)


_BUILDERS = {
    "disk2": lambda: disk2(),
    "three_marked_disk": three_marked_disk,
}


def builtin_skeleton(name: str) -> Skeleton:
    """Resolve ``disk2``, ``three_marked_disk``, ``annulus_marked(m)``,
    ``sigma_n(n)`` and ``polygon_path(k)``."""
    name = name.strip().replace(" ", "")
    if name in _BUILDERS:
        return _BUILDERS[name]()
    for prefix, builder in (
        ("annulus_marked", annulus_marked),
        ("sigma_n", sigma_n),
        ("polygon_path", polygon_path),
    ):
        if name.startswith(prefix + "(") and name.endswith(")"):
            try:
                size = int(name[len(prefix) + 1 : -1])
            except ValueError:
                break
            return builder(size)
    raise ValueError(f"Unknown built-in graph: {name!r}")
