"""Weighted-graph data model: graphs, measures, potentials, exhaustions, file I/O.

Vertices are opaque non-negative integers.  Graphs are immutable after
construction; degree data and the adjacency structure are built eagerly so
that concurrent reads are safe and derived quantities are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import GraphFormatError, GraphSizeError, GraphStructureError

DEFAULT_VERTEX_CAP = 10**7


class WeightedGraph:
    """Finite symmetric weighted graph with positive edge weights and no loops.

    Construction validates symmetry, a zero diagonal, strictly positive
    weights, and connectedness.  Weighted degrees and the maximum degree are
    computed once.  All attributes are read-only by convention.
    """

    __slots__ = ("_ids", "_index", "_adj", "_deg", "_eu", "_ev", "_ew",
                 "max_degree", "num_edges")

    def __init__(self, vertices: Iterable[int], edges: Mapping[tuple[int, int], float]):
        ids = sorted(set(int(v) for v in vertices))
        if not ids:
            raise GraphStructureError("graph needs at least one vertex")
        if ids[0] < 0:
            raise GraphStructureError("vertex identifiers must be non-negative")
        index = {v: i for i, v in enumerate(ids)}
        n = len(ids)

        canon: dict[tuple[int, int], float] = {}
        for (u, v), w in edges.items():
            u, v, w = int(u), int(v), float(w)
            if u == v:
                raise GraphStructureError(f"self-loop at vertex {u}")
            if u not in index or v not in index:
                raise GraphStructureError(f"edge ({u},{v}) references unknown vertex")
            if not (w > 0.0) or not math.isfinite(w):
                raise GraphStructureError(f"edge ({u},{v}) has non-positive weight {w}")
            key = (u, v) if u < v else (v, u)
            old = canon.get(key)
            if old is not None and old != w:
                raise GraphStructureError(
                    f"conflicting weights for edge {key}: {old} vs {w}")
            canon[key] = w

        keys = sorted(canon)
        eu = np.fromiter((index[k[0]] for k in keys), dtype=np.int64, count=len(keys))
        ev = np.fromiter((index[k[1]] for k in keys), dtype=np.int64, count=len(keys))
        ew = np.fromiter((canon[k] for k in keys), dtype=np.float64, count=len(keys))

        rows = np.concatenate([eu, ev])
        cols = np.concatenate([ev, eu])
        data = np.concatenate([ew, ew])
        adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        adj.sum_duplicates()

        if n > 1:
            ncomp, _ = csgraph.connected_components(adj, directed=False)
            if ncomp != 1:
                raise GraphStructureError(
                    f"graph is disconnected ({ncomp} components)")

        deg = np.asarray(adj.sum(axis=1)).ravel()
        if not np.all(np.isfinite(deg)):
            raise GraphStructureError("weighted degree overflow")

        self._ids = tuple(ids)
        self._index = index
        self._adj = adj
        self._deg = deg
        self._eu, self._ev, self._ew = eu, ev, ew
        self.max_degree = float(deg.max()) if n else 0.0
        self.num_edges = len(keys)

    # -- basic queries -------------------------------------------------

    @property
    def vertices(self) -> tuple[int, ...]:
        return self._ids

    @property
    def num_vertices(self) -> int:
        return len(self._ids)

    def __contains__(self, v: int) -> bool:
        return v in self._index

    def index_of(self, v: int) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise GraphStructureError(f"vertex {v} not in graph") from None

    def degree(self, v: int) -> float:
        return float(self._deg[self.index_of(v)])

    @property
    def degrees(self) -> np.ndarray:
        """Weighted degree per vertex, aligned with ``vertices``. Do not mutate."""
        return self._deg

    @property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric CSR weight matrix aligned with ``vertices``. Do not mutate."""
        return self._adj

    def laplacian(self) -> sp.csr_matrix:
        return (sp.diags(self._deg) - self._adj).tocsr()

    def weight(self, u: int, v: int) -> float:
        if u == v:
            return 0.0
        return float(self._adj[self.index_of(u), self.index_of(v)])

    def has_edge(self, u: int, v: int) -> bool:
        return self.weight(u, v) > 0.0

    def neighbors(self, v: int) -> list[int]:
        i = self.index_of(v)
        row = self._adj.indices[self._adj.indptr[i]:self._adj.indptr[i + 1]]
        return [self._ids[j] for j in row]

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Unordered edges (u, v, weight) with u < v, in sorted order."""
        for i in range(self.num_edges):
            yield (self._ids[self._eu[i]], self._ids[self._ev[i]],
                   float(self._ew[i]))

    def edge_index_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Internal endpoint indices and weights of the unordered edge list."""
        return self._eu, self._ev, self._ew

    def hop_distances(self, seed: int, limit: float | None = None) -> dict[int, int]:
        """Combinatorial (unweighted) distances from ``seed``; unreachable omitted."""
        i = self.index_of(seed)
        dist = csgraph.dijkstra(self._adj, indices=i, unweighted=True,
                                limit=np.inf if limit is None else limit)
        out = {}
        for j, d in enumerate(dist):
            if np.isfinite(d):
                out[self._ids[j]] = int(d)
        return out

    def ball(self, seed: int, radius: int) -> frozenset[int]:
        """Combinatorial ball of the given radius around ``seed``."""
        d = self.hop_distances(seed, limit=radius)
        return frozenset(v for v, r in d.items() if r <= radius)

    def ring(self, F: Iterable[int]) -> frozenset[int]:
        """Vertices outside F adjacent to F."""
        Fs = set(F)
        out = set()
        for v in Fs:
            for u in self.neighbors(v):
                if u not in Fs:
                    out.add(u)
        return frozenset(out)

    def eccentricity(self, seed: int) -> int:
        return max(self.hop_distances(seed).values())

    def __repr__(self) -> str:
        return (f"WeightedGraph(|V|={self.num_vertices}, |E|={self.num_edges}, "
                f"max_degree={self.max_degree:g})")


class Potential:
    """Real-valued vertex function with default value 0 on unlisted vertices."""

    __slots__ = ("values", "support")

    def __init__(self, values: Mapping[int, float] | None = None,
                 support: frozenset[int] | None = None):
        self.values = {int(v): float(x) for v, x in (values or {}).items()}
        if support is not None:
            support = frozenset(support)
            bad = [v for v, x in self.values.items() if x != 0.0 and v not in support]
            if bad:
                raise GraphFormatError(
                    f"nonzero value outside declared support at vertex {bad[0]}")
        self.support = support

    def __getitem__(self, v: int) -> float:
        return self.values.get(v, 0.0)

    def get(self, v: int, default: float = 0.0) -> float:
        return self.values.get(v, default)

    def to_array(self, graph: WeightedGraph) -> np.ndarray:
        return np.array([self.values.get(v, 0.0) for v in graph.vertices])

    @classmethod
    def from_array(cls, graph: WeightedGraph, arr: np.ndarray) -> "Potential":
        return cls(dict(zip(graph.vertices, (float(x) for x in arr))))

    @classmethod
    def constant(cls, graph: WeightedGraph, c: float) -> "Potential":
        return cls({v: float(c) for v in graph.vertices})

    @classmethod
    def indicator(cls, vertices: Iterable[int]) -> "Potential":
        return cls({v: 1.0 for v in vertices})

    def restrict(self, vertices: Iterable[int]) -> "Potential":
        keep = set(vertices)
        return Potential({v: x for v, x in self.values.items() if v in keep})

    def nonzero_support(self) -> frozenset[int]:
        return frozenset(v for v, x in self.values.items() if x != 0.0)

    def __add__(self, other: "Potential") -> "Potential":
        keys = set(self.values) | set(other.values)
        return Potential({v: self[v] + other[v] for v in keys})

    def __sub__(self, other: "Potential") -> "Potential":
        keys = set(self.values) | set(other.values)
        return Potential({v: self[v] - other[v] for v in keys})

    def __mul__(self, c: float) -> "Potential":
        return Potential({v: c * x for v, x in self.values.items()})

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"Potential(on {len(self.values)} vertices)"


class Measure:
    """Strictly positive vertex weights, summable to a total mass."""

    __slots__ = ("values", "total")

    def __init__(self, values: Mapping[int, float]):
        vals = {}
        for v, x in values.items():
            x = float(x)
            if not (x > 0.0):
                raise GraphFormatError(f"measure must be strictly positive, got {x} at {v}")
            vals[int(v)] = x
        if not vals:
            raise GraphFormatError("measure needs at least one vertex")
        self.values = vals
        self.total = math.fsum(vals.values())

    def __getitem__(self, v: int) -> float:
        return self.values[v]

    def __contains__(self, v: int) -> bool:
        return v in self.values

    def mass(self, vertices: Iterable[int]) -> float:
        return math.fsum(self.values[v] for v in vertices if v in self.values)

    def restrict(self, vertices: Iterable[int]) -> "Measure":
        keep = set(vertices)
        return Measure({v: x for v, x in self.values.items() if v in keep})

    @classmethod
    def uniform(cls, graph: WeightedGraph, c: float = 1.0) -> "Measure":
        return cls({v: c for v in graph.vertices})

    def to_array(self, graph: WeightedGraph) -> np.ndarray:
        try:
            return np.array([self.values[v] for v in graph.vertices])
        except KeyError as e:
            raise GraphFormatError(f"measure missing vertex {e.args[0]}") from None

    def __repr__(self) -> str:
        return f"Measure(total={self.total:g} on {len(self.values)} vertices)"


class EdgeFunction:
    """Symmetric nonnegative function on vertex pairs, stored on unordered pairs."""

    __slots__ = ("values",)

    def __init__(self, values: Mapping[tuple[int, int], float]):
        canon: dict[tuple[int, int], float] = {}
        for (u, v), w in values.items():
            u, v, w = int(u), int(v), float(w)
            if u == v:
                continue
            if w < 0.0 or not math.isfinite(w):
                raise GraphFormatError(f"edge function must be nonnegative, got {w}")
            key = (u, v) if u < v else (v, u)
            old = canon.get(key)
            if old is not None and old != w:
                raise GraphFormatError(f"asymmetric edge function at {key}")
            canon[key] = w
        self.values = canon

    def value(self, u: int, v: int) -> float:
        if u == v:
            return 0.0
        key = (u, v) if u < v else (v, u)
        return self.values.get(key, 0.0)

    def pairs(self) -> Iterator[tuple[int, int, float]]:
        for (u, v) in sorted(self.values):
            yield u, v, self.values[(u, v)]

    def on_edges(self, graph: WeightedGraph) -> np.ndarray:
        """Values aligned with the graph's unordered edge list."""
        eu, ev, _ = graph.edge_index_arrays()
        ids = graph.vertices
        return np.array([self.value(ids[a], ids[b]) for a, b in zip(eu, ev)])

    def is_edge_weight(self, graph: WeightedGraph) -> bool:
        """True when strictly positive on every edge of the graph."""
        return bool(np.all(self.on_edges(graph) > 0.0))

    @classmethod
    def from_potential_gradient(cls, graph: WeightedGraph, f: Potential) -> "EdgeFunction":
        return cls({(u, v): abs(f[u] - f[v]) for u, v, _ in graph.edges()})

    @classmethod
    def constant(cls, graph: WeightedGraph, c: float) -> "EdgeFunction":
        return cls({(u, v): c for u, v, _ in graph.edges()})

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Exhaustion:
    """Nested finite vertex sets with their outer rings."""

    graph: WeightedGraph
    sets: tuple[frozenset[int], ...]
    rings: tuple[frozenset[int], ...]
    radii: tuple[int, ...] = ()
    seed: int | None = None

    def __post_init__(self):
        prev: frozenset[int] = frozenset()
        for n, (F, R) in enumerate(zip(self.sets, self.rings)):
            if not prev <= F:
                raise GraphStructureError(f"exhaustion not nested at level {n}")
            if F & R:
                raise GraphStructureError(f"ring intersects F_{n}")
            prev = F

    def __len__(self) -> int:
        return len(self.sets)

    @classmethod
    def from_balls(cls, graph: WeightedGraph, seed: int,
                   radii: Sequence[int], clamp_to_proper: bool = False) -> "Exhaustion":
        """Combinatorial-ball exhaustion around ``seed``.

        With ``clamp_to_proper`` radii are capped at the largest radius whose
        ball still has a nonempty ring; on finite graphs the schedule then
        saturates at the maximal proper truncation instead of swallowing it.
        """
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise GraphStructureError("radii must be strictly increasing")
        if seed not in graph:
            raise GraphStructureError(f"seed vertex {seed} not in graph")
        dist = graph.hop_distances(seed)
        ecc = max(dist.values()) if dist else 0
        sets, rings, used = [], [], []
        for r in radii:
            r_eff = min(r, ecc - 1) if clamp_to_proper and ecc > 0 else r
            F = frozenset(v for v, d in dist.items() if d <= r_eff)
            sets.append(F)
            rings.append(graph.ring(F))
            used.append(r_eff)
        return cls(graph, tuple(sets), tuple(rings), tuple(used), seed)


def induced_truncation(graph: WeightedGraph,
                       F: Iterable[int]) -> tuple[WeightedGraph, frozenset[int]]:
    """Subgraph on F plus its ring, keeping edges with an endpoint in F.

    The ring is returned separately so callers can impose boundary conditions
    on it.  Edges joining two ring vertices are dropped.
    """
    Fs = set(F)
    if not Fs:
        raise GraphStructureError("truncation set F must be nonempty")
    missing = [v for v in Fs if v not in graph]
    if missing:
        raise GraphStructureError(f"truncation vertex {missing[0]} not in graph")
    ring = graph.ring(Fs)
    keep_edges = {}
    for u, v, w in graph.edges():
        if u in Fs or v in Fs:
            keep_edges[(u, v)] = w
    sub = WeightedGraph(Fs | ring, keep_edges)
    return sub, ring


# -- generators --------------------------------------------------------

def _check_cap(count: int, vertex_cap: int):
    if count > vertex_cap:
        raise GraphSizeError(
            f"generator would create {count} vertices, above the cap {vertex_cap}")


def _lattice_ball_size(dim: int, radius: int) -> int:
    # number of integer points with |x|_1 <= radius
    total = 0
    for k in range(0, min(dim, radius) + 1):
        total += (2**k) * math.comb(dim, k) * math.comb(radius, k)
    return total


def lattice(dim: int, radius: int, weight: float = 1.0,
            vertex_cap: int = DEFAULT_VERTEX_CAP) -> WeightedGraph:
    """Nearest-neighbour graph on the combinatorial ball of Z^dim.

    Vertices are the integer points with |x|_1 <= radius.  Identifiers are
    assigned in lexicographic order of the coordinate tuples, so labelling is
    reproducible bit-for-bit.
    """
    if dim < 1 or radius < 0:
        raise GraphSizeError("lattice needs dim >= 1 and radius >= 0")
    _check_cap(_lattice_ball_size(dim, radius), vertex_cap)
    pts = [p for p in product(range(-radius, radius + 1), repeat=dim)
           if sum(abs(c) for c in p) <= radius]
    pts.sort()
    index = {p: i for i, p in enumerate(pts)}
    edges = {}
    for p, i in index.items():
        for k in range(dim):
            q = list(p)
            q[k] += 1
            j = index.get(tuple(q))
            if j is not None:
                edges[(i, j)] = weight
    return WeightedGraph(range(len(pts)), edges)


def lattice_coordinates(dim: int, radius: int) -> dict[int, tuple[int, ...]]:
    """Vertex id -> lattice point, matching the labelling used by ``lattice``."""
    pts = [p for p in product(range(-radius, radius + 1), repeat=dim)
           if sum(abs(c) for c in p) <= radius]
    pts.sort()
    return dict(enumerate(pts))


def lattice_origin(dim: int, radius: int) -> int:
    """Vertex id of the origin in ``lattice(dim, radius)``."""
    for i, p in lattice_coordinates(dim, radius).items():
        if all(c == 0 for c in p):
            return i
    raise GraphStructureError("origin not found")


def kary_tree(branching: int, depth: int, weight: float = 1.0,
              vertex_cap: int = DEFAULT_VERTEX_CAP) -> WeightedGraph:
    """Rooted k-ary tree of the given depth; root is 0, children of v are
    ``branching * v + 1 .. branching * v + branching`` (heap labelling)."""
    if branching < 1 or depth < 0:
        raise GraphSizeError("tree needs branching >= 1 and depth >= 0")
    if branching == 1:
        count = depth + 1
    else:
        count = (branching ** (depth + 1) - 1) // (branching - 1)
    _check_cap(count, vertex_cap)
    edges = {}
    level_start, level_size = 0, 1
    nxt = 1
    for _ in range(depth):
        for v in range(level_start, level_start + level_size):
            for c in range(branching):
                edges[(v, nxt)] = weight
                nxt += 1
        level_start += level_size
        level_size *= branching
    return WeightedGraph(range(count), edges)


def path_graph(n: int, weight: float = 1.0,
               vertex_cap: int = DEFAULT_VERTEX_CAP) -> WeightedGraph:
    if n < 1:
        raise GraphSizeError("path needs n >= 1")
    _check_cap(n, vertex_cap)
    return WeightedGraph(range(n), {(i, i + 1): weight for i in range(n - 1)})


def cycle_graph(n: int, weight: float = 1.0,
                vertex_cap: int = DEFAULT_VERTEX_CAP) -> WeightedGraph:
    if n < 3:
        raise GraphSizeError("cycle needs n >= 3")
    _check_cap(n, vertex_cap)
    edges = {(i, (i + 1) % n): weight for i in range(n)}
    return WeightedGraph(range(n), edges)


def generate(family: str, size: int, weight: float = 1.0,
             vertex_cap: int = DEFAULT_VERTEX_CAP) -> tuple[WeightedGraph, int]:
    """Build a named family and return (graph, root/origin vertex).

    ``family`` is ``lattice:d``, ``tree:k``, ``path`` or ``cycle``; ``size``
    is the radius, depth, or vertex count respectively.
    """
    name, _, param = family.partition(":")
    if name == "lattice":
        d = int(param)
        g = lattice(d, size, weight, vertex_cap)
        return g, lattice_origin(d, size)
    if name == "tree":
        return kary_tree(int(param), size, weight, vertex_cap), 0
    if name == "path":
        return path_graph(size, weight, vertex_cap), 0
    if name == "cycle":
        return cycle_graph(size, weight, vertex_cap), 0
    raise GraphFormatError(f"unknown generator family {family!r}")


# -- validation report -------------------------------------------------

@dataclass(frozen=True)
class GraphDiagnostics:
    num_vertices: int
    num_edges: int
    symmetric: bool
    zero_diagonal: bool
    connected: bool
    max_degree: float
    all_degrees_finite: bool
    min_weight: float
    max_weight: float

    def as_dict(self) -> dict:
        return {
            "num_vertices": self.num_vertices,
            "num_edges": self.num_edges,
            "symmetric": self.symmetric,
            "zero_diagonal": self.zero_diagonal,
            "connected": self.connected,
            "max_degree": self.max_degree,
            "all_degrees_finite": self.all_degrees_finite,
            "min_weight": self.min_weight,
            "max_weight": self.max_weight,
        }


def validate_graph(graph: WeightedGraph) -> GraphDiagnostics:
    """Report-only structural diagnostics.

    Constructed graphs already satisfy the hard invariants; the report
    re-derives them from the adjacency structure for audit purposes.
    """
    adj = graph.adjacency
    sym = (adj - adj.T).nnz == 0
    zero_diag = not np.any(adj.diagonal())
    if graph.num_vertices > 1:
        ncomp, _ = csgraph.connected_components(adj, directed=False)
        connected = ncomp == 1
    else:
        connected = True
    _, _, ew = graph.edge_index_arrays()
    return GraphDiagnostics(
        num_vertices=graph.num_vertices,
        num_edges=graph.num_edges,
        symmetric=bool(sym),
        zero_diagonal=bool(zero_diag),
        connected=bool(connected),
        max_degree=graph.max_degree,
        all_degrees_finite=bool(np.all(np.isfinite(graph.degrees))),
        min_weight=float(ew.min()) if len(ew) else 0.0,
        max_weight=float(ew.max()) if len(ew) else 0.0,
    )


# -- file I/O ----------------------------------------------------------

def _data_lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def parse_edge_list(text: str) -> WeightedGraph:
    """Parse ``u<TAB>v<TAB>weight`` lines ('#' comments and blanks ignored)."""
    edges: dict[tuple[int, int], float] = {}
    vertices: set[int] = set()
    for lineno, parts in _data_lines(text):
        if len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'u v weight'")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as e:
            raise GraphFormatError(f"line {lineno}: {e}") from None
        if u == v:
            raise GraphStructureError(f"line {lineno}: self-loop at {u}")
        if not (w > 0):
            raise GraphStructureError(f"line {lineno}: non-positive weight {w}")
        key = (u, v) if u < v else (v, u)
        old = edges.get(key)
        if old is not None and old != w:
            raise GraphStructureError(
                f"line {lineno}: conflicting duplicate for edge {key}")
        edges[key] = w
        vertices.update(key)
    if not vertices:
        raise GraphFormatError("edge list contains no edges")
    return WeightedGraph(vertices, edges)


def load_graph(path) -> WeightedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def save_graph(graph: WeightedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, w in graph.edges():
            fh.write(f"{u}\t{v}\t{w!r}\n")


def parse_measure(text: str) -> Measure:
    vals = {}
    for lineno, parts in _data_lines(text):
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'v m'")
        vals[int(parts[0])] = float(parts[1])
    return Measure(vals)


def load_measure(path) -> Measure:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_measure(fh.read())


def parse_potential(text: str) -> Potential:
    vals = {}
    for lineno, parts in _data_lines(text):
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'v value'")
        vals[int(parts[0])] = float(parts[1])
    return Potential(vals)


def load_potential(path) -> Potential:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_potential(fh.read())


def save_potential(f: Potential, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in sorted(f.values):
            fh.write(f"{v}\t{f.values[v]!r}\n")


def parse_edge_function(text: str) -> EdgeFunction:
    vals = {}
    for lineno, parts in _data_lines(text):
        if len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'u v value'")
        vals[(int(parts[0]), int(parts[1]))] = float(parts[2])
    return EdgeFunction(vals)


def load_edge_function(path) -> EdgeFunction:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_function(fh.read())
