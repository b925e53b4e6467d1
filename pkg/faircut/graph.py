# Graph representation, cut application and rooted-tree utilities
from dataclasses import dataclass
from fractions import Fraction
from logging import getLogger
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from faircut.errors import InputError
from faircut.rational import Rational, as_fraction

log = getLogger(__name__)


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    cost: Fraction
    cuttable: bool = True

    def other(self, x: int) -> int:
        return self.v if x == self.u else self.u

    def crosses(self, side: FrozenSet[int]) -> bool:
        return (self.u in side) != (self.v in side)


class WeightedGraph:
    """Undirected multigraph with exact non-negative edge costs and a source vertex.

    Instances are immutable: the edge table, adjacency and the networkx view are
    built once here and never modified afterwards.
    """

    def __init__(self, vertices: Iterable[int], edges: Iterable[Edge], source: int) -> None:
        self._vertices = frozenset(vertices)
        self._edges: Dict[int, Edge] = dict()
        for e in edges:
            if e.id in self._edges:
                raise InputError(f"duplicate edge id {e.id}")
            if e.u not in self._vertices or e.v not in self._vertices:
                raise InputError(f"edge {e.id} ({e.u}, {e.v}) has an undeclared endpoint")
            if e.u == e.v:
                raise InputError(f"edge {e.id} is a self-loop on {e.u}")
            if e.cost < 0:
                raise InputError(f"edge {e.id} has negative cost {e.cost}")
            self._edges[e.id] = e
        if source not in self._vertices:
            raise InputError(f"source {source} is not a declared vertex")
        self._source = source

        incident: Dict[int, List[int]] = {v: [] for v in self._vertices}
        graph = nx.MultiGraph()
        graph.add_nodes_from(sorted(self._vertices))
        for eid in sorted(self._edges):
            e = self._edges[eid]
            incident[e.u].append(eid)
            incident[e.v].append(eid)
            graph.add_edge(e.u, e.v, key=eid, cost=e.cost)
        self._incident = {v: tuple(ids) for v, ids in incident.items()}
        self._nx = nx.freeze(graph)

    @classmethod
    def from_triples(
        cls, triples: Iterable[Tuple[int, int, Rational]], source: int, vertices: Optional[Iterable[int]] = None
    ) -> "WeightedGraph":
        edges = [Edge(i, int(u), int(v), as_fraction(c, f"edge {i} cost")) for i, (u, v, c) in enumerate(triples)]
        if vertices is None:
            vertices = {source} | {e.u for e in edges} | {e.v for e in edges}
        return cls(vertices, edges, source)

    @property
    def vertices(self) -> FrozenSet[int]:
        return self._vertices

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return tuple(self._edges[eid] for eid in sorted(self._edges))

    @property
    def edge_ids(self) -> FrozenSet[int]:
        return frozenset(self._edges)

    @property
    def source(self) -> int:
        return self._source

    @property
    def n(self) -> int:
        return len(self._vertices)

    @property
    def m(self) -> int:
        return len(self._edges)

    @property
    def nx(self) -> nx.MultiGraph:
        return self._nx

    @property
    def total_cost(self) -> Fraction:
        return sum((e.cost for e in self._edges.values()), Fraction(0))

    def edge(self, eid: int) -> Edge:
        try:
            return self._edges[eid]
        except KeyError:
            raise InputError(f"unknown edge id {eid}")

    def incident(self, v: int) -> Tuple[int, ...]:
        return self._incident[v]

    def cost_of(self, edge_ids: Iterable[int]) -> Fraction:
        return sum((self.edge(eid).cost for eid in edge_ids), Fraction(0))

    def is_connected(self) -> bool:
        return nx.is_connected(self._nx)

    def is_tree(self) -> bool:
        return self.m == self.n - 1 and self.is_connected()

    def with_costs(self, costs: Mapping[int, Fraction]) -> "WeightedGraph":
        edges = [Edge(e.id, e.u, e.v, Fraction(costs.get(e.id, e.cost)), e.cuttable) for e in self.edges]
        return WeightedGraph(self._vertices, edges, self._source)

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m}, source={self._source})"


@dataclass(frozen=True)
class CutSolution:
    cut_edges: FrozenSet[int]
    cost: Fraction
    protected: FrozenSet[int]

    @classmethod
    def from_cut(cls, g: WeightedGraph, cut: Iterable[int]) -> "CutSolution":
        cut = frozenset(cut)
        return cls(cut, g.cost_of(cut), protected_set(g, cut))

    def verify(self, g: WeightedGraph) -> bool:
        return (
            self.cost == g.cost_of(self.cut_edges)
            and self.protected == protected_set(g, self.cut_edges)
            and g.source not in self.protected
        )


def protected_set(g: WeightedGraph, cut: Iterable[int]) -> FrozenSet[int]:
    """Vertices with no path to the source once ``cut`` is removed."""
    cut = frozenset(cut)
    unknown = cut - g.edge_ids
    if unknown:
        raise InputError(f"unknown edge ids in cut: {sorted(unknown)}")
    removed = [g.edge(eid) for eid in sorted(cut)]
    if any(not e.cuttable for e in removed):
        raise InputError("cut contains a non-cuttable edge")
    view = nx.restricted_view(g.nx, [], [(e.u, e.v, e.id) for e in removed])
    return g.vertices - nx.node_connected_component(view, g.source)


def boundary(g: WeightedGraph, S: Iterable[int]) -> FrozenSet[int]:
    S = frozenset(S)
    if not S <= g.vertices:
        raise InputError(f"unknown vertices {sorted(S - g.vertices)}")
    if g.source in S:
        raise InputError("boundary set must not contain the source")
    return frozenset(e.id for e in g.edges if e.crosses(S))


def merge_sources(g: WeightedGraph, sources: Iterable[int]) -> WeightedGraph:
    sources = frozenset(sources)
    if not sources:
        raise InputError("at least one source is required")
    if not sources <= g.vertices:
        raise InputError(f"unknown source vertices {sorted(sources - g.vertices)}")
    if len(sources) == 1:
        (single,) = sources
        return g if single == g.source else WeightedGraph(g.vertices, g.edges, single)

    merged = max(g.vertices) + 1
    edges = []
    for e in g.edges:
        u_in, v_in = e.u in sources, e.v in sources
        if u_in and v_in:
            continue
        if u_in:
            edges.append(Edge(e.id, merged, e.v, e.cost, e.cuttable))
        elif v_in:
            edges.append(Edge(e.id, e.u, merged, e.cost, e.cuttable))
        else:
            edges.append(e)
    log.debug(f"Merged sources {sorted(sources)} into vertex {merged}; kept {len(edges)} of {g.m} edges")
    return WeightedGraph((g.vertices - sources) | {merged}, edges, merged)


class RootedTree:
    """A tree rooted at its graph's source.

    ``real`` marks the vertices of the input instance. Any other vertex is an
    auxiliary node (binarization or embedding) that counts for nothing downstream.
    """

    def __init__(self, graph: WeightedGraph, real: Optional[Iterable[int]] = None) -> None:
        if graph.m != graph.n - 1 or not graph.is_connected():
            raise InputError(f"{graph!r} is not a tree")
        self.graph = graph
        self.real = graph.vertices if real is None else frozenset(real)
        if not self.real <= graph.vertices:
            raise InputError("real vertices must belong to the tree")
        if graph.source not in self.real:
            raise InputError("the root must be a real vertex")

        self._parent_edge: Dict[int, Optional[Edge]] = {graph.source: None}
        self._children: Dict[int, List[int]] = {v: [] for v in graph.vertices}
        self._depth: Dict[int, int] = {graph.source: 0}
        self._order: List[int] = [graph.source]
        for v in self._order:
            for eid in graph.incident(v):
                e = graph.edge(eid)
                c = e.other(v)
                if c in self._depth:
                    continue
                self._parent_edge[c] = e
                self._children[v].append(c)
                self._depth[c] = self._depth[v] + 1
                self._order.append(c)

    @classmethod
    def from_parents(
        cls,
        root: int,
        parents: Mapping[int, int],
        costs: Mapping[int, Rational],
        real: Optional[Iterable[int]] = None,
        cuttable: Optional[Mapping[int, bool]] = None,
    ) -> "RootedTree":
        """Build a tree from child -> parent links; ``costs`` is keyed by child vertex.

        Edge ids follow the sorted order of the child vertices.
        """
        cuttable = cuttable or {}
        edges = [
            Edge(i, parents[c], c, as_fraction(costs[c], f"cost of edge to {c}"), cuttable.get(c, True))
            for i, c in enumerate(sorted(parents))
        ]
        vertices = {root} | set(parents) | set(parents.values())
        return cls(WeightedGraph(vertices, edges, root), real)

    @property
    def root(self) -> int:
        return self.graph.source

    @property
    def vertices(self) -> FrozenSet[int]:
        return self.graph.vertices

    @property
    def order(self) -> List[int]:
        return list(self._order)

    def postorder(self) -> List[int]:
        return self._order[::-1]

    def is_real(self, v: int) -> bool:
        return v in self.real

    def children(self, v: int) -> List[int]:
        return list(self._children[v])

    def parent_edge(self, v: int) -> Optional[Edge]:
        return self._parent_edge[v]

    def parent(self, v: int) -> Optional[int]:
        e = self._parent_edge[v]
        return None if e is None else e.other(v)

    def depth(self, v: int) -> int:
        return self._depth[v]

    def lower(self, e: Edge) -> int:
        """The endpoint of ``e`` farther from the root."""
        return e.v if self._depth[e.v] > self._depth[e.u] else e.u

    def subtree(self, v: int) -> FrozenSet[int]:
        found, stack = [], [v]
        while stack:
            x = stack.pop()
            found.append(x)
            stack.extend(self._children[x])
        return frozenset(found)

    def parents(self) -> Dict[int, int]:
        return {v: self.parent(v) for v in self._order[1:]}

    def with_costs(self, costs: Mapping[int, Fraction]) -> "RootedTree":
        return RootedTree(self.graph.with_costs(costs), self.real)

    def is_binary(self) -> bool:
        return all(len(kids) <= 2 for kids in self._children.values())

    def __repr__(self) -> str:
        return f"RootedTree(n={self.graph.n}, real={len(self.real)}, root={self.root})"


def binarize(t: RootedTree) -> RootedTree:
    """Give every node at most two children by cascading auxiliary nodes.

    Original edges keep their ids and costs; the cascade edges are non-cuttable.
    """
    if t.is_binary():
        return t
    next_vertex = max(t.vertices) + 1
    next_edge = max(t.graph.edge_ids) + 1
    edges: List[Edge] = []
    for v in t.order:
        kids = t.children(v)
        host = v
        for i, c in enumerate(kids):
            e = t.parent_edge(c)
            edges.append(Edge(e.id, host, c, e.cost, e.cuttable))
            if len(kids) - i > 2:
                edges.append(Edge(next_edge, host, next_vertex, Fraction(0), cuttable=False))
                host = next_vertex
                next_vertex += 1
                next_edge += 1
    vertices = t.vertices | set(range(max(t.vertices) + 1, next_vertex))
    log.debug(f"Binarized tree with {len(vertices) - t.graph.n} auxiliary nodes")
    return RootedTree(WeightedGraph(vertices, edges, t.root), t.real)


def root_path(t: RootedTree, v: int) -> List[int]:
    if v not in t.vertices:
        raise InputError(f"unknown vertex {v}")
    path = []
    while True:
        e = t.parent_edge(v)
        if e is None:
            return path[::-1]
        path.append(e.id)
        v = e.other(v)


def tree_cut_cost(t: RootedTree, S: Iterable[int]) -> Optional[Fraction]:
    """Cheapest set of cuttable tree edges separating ``S`` from the other real vertices.

    Auxiliary nodes may fall on either side. Returns None when no cuttable
    separation exists.
    """
    S = frozenset(S)
    if t.real == t.vertices:
        crossing = [e for e in t.graph.edges if e.crosses(S)]
        if any(not e.cuttable for e in crossing):
            return None
        return sum((e.cost for e in crossing), Fraction(0))

    # best[v] = (cost with v outside S, cost with v inside S), None for impossible
    best: Dict[int, Tuple[Optional[Fraction], Optional[Fraction]]] = dict()
    for v in t.postorder():
        sides = []
        for inside in (False, True):
            if t.is_real(v) and (v in S) != inside:
                sides.append(None)
                continue
            total = Fraction(0)
            for c in t.children(v):
                e = t.parent_edge(c)
                same, flipped = best[c][inside], best[c][not inside]
                options = [same] if same is not None else []
                if flipped is not None and e.cuttable:
                    options.append(flipped + e.cost)
                if not options:
                    total = None
                    break
                total += min(options)
            sides.append(total)
        best[v] = (sides[0], sides[1])
    return best[t.root][0]


class SubsetIndex:
    """Bitmask encoding of the non-source vertices of a graph for subset enumeration."""

    def __init__(self, g: WeightedGraph) -> None:
        self.vertices = sorted(g.vertices - {g.source})
        self.bit = {v: 1 << i for i, v in enumerate(self.vertices)}
        self.edges = self.encode(g.edges)

    def __len__(self) -> int:
        return len(self.vertices)

    def masks(self) -> range:
        return range(1 << len(self.vertices))

    def encode(self, edges: Iterable[Edge]) -> List[Tuple[int, int, Fraction]]:
        return [(self.bit.get(e.u, 0), self.bit.get(e.v, 0), e.cost) for e in edges]

    def mask_of(self, S: Iterable[int]) -> int:
        mask = 0
        for v in S:
            mask |= self.bit[v]
        return mask

    def members(self, mask: int) -> FrozenSet[int]:
        return frozenset(v for v in self.vertices if mask & self.bit[v])

    @staticmethod
    def size(mask: int) -> int:
        return bin(mask).count("1")

    def cut_cost(self, mask: int, edges: Optional[List[Tuple[int, int, Fraction]]] = None) -> Fraction:
        total = Fraction(0)
        for a, b, cost in self.edges if edges is None else edges:
            if bool(mask & a) != bool(mask & b):
                total += cost
        return total
