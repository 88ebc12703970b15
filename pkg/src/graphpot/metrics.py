"""Pseudometrics on finite truncations.

Two representations are supported: explicit symmetric distance matrices
(dense, capped at EXPLICIT_CAP vertices) and path metrics induced by a
symmetric edge function, with distances computed on demand by Dijkstra runs.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph, csr_matrix

from .energy import energy_value, vertex_load
from .errors import GraphStructureError, MetricError
from .graph import EdgeFunction, Measure, Potential, WeightedGraph

EXPLICIT_CAP = 4096            # dense-matrix storage limit
TRIANGLE_EXHAUSTIVE_CAP = 512  # exhaustive triple check limit
TRIANGLE_SAMPLES = 100_000     # randomized triples above the cap
TRIANGLE_RTOL = 1e-12          # floating-point slack for triangle checks


class ExplicitMetric:
    """Pseudometric given as a dense symmetric matrix on a finite vertex set."""

    def __init__(self, vertices, matrix: np.ndarray, check: bool = True,
                 require_metric: bool = False):
        ids = tuple(int(v) for v in vertices)
        M = np.asarray(matrix, dtype=float)
        n = len(ids)
        if M.shape != (n, n):
            raise MetricError(f"matrix shape {M.shape} does not match {n} vertices")
        if n > EXPLICIT_CAP:
            raise MetricError(
                f"explicit metrics are capped at {EXPLICIT_CAP} vertices, got {n}")
        self.vertices = ids
        self.index = {v: i for i, v in enumerate(ids)}
        self.matrix = M
        if check:
            ok, triple = check_pseudometric(M)
            if not ok:
                raise MetricError(f"not a pseudometric, witness triple {triple}")
        self.metric_flag = bool(n < 2 or np.min(M[~np.eye(n, dtype=bool)]) > 0.0)
        if require_metric and not self.metric_flag:
            raise MetricError("distinct vertices at distance zero")

    def d(self, u: int, v: int) -> float:
        return float(self.matrix[self.index[u], self.index[v]])

    def row(self, u: int) -> np.ndarray:
        return self.matrix[self.index[u]]

    def as_matrix(self) -> np.ndarray:
        return self.matrix

    def __repr__(self) -> str:
        kind = "metric" if self.metric_flag else "pseudometric"
        return f"ExplicitMetric({kind} on {len(self.vertices)} vertices)"


class PathMetric:
    """Path pseudometric of a symmetric nonnegative edge function.

    Zero-weight edges are handled exactly by contracting their components
    before the shortest-path runs (scipy treats explicit zeros as non-edges).
    Single-source distances are cached per source; the cache is protected by
    a lock so concurrent queries stay consistent.
    """

    def __init__(self, graph: WeightedGraph, w: EdgeFunction):
        self.graph = graph
        self.w = w
        eu, ev, _ = graph.edge_index_arrays()
        vals = w.on_edges(graph)
        n = graph.num_vertices

        if np.any(vals == 0.0):
            zmask = vals == 0.0
            zrows = np.concatenate([eu[zmask], ev[zmask]])
            zcols = np.concatenate([ev[zmask], eu[zmask]])
            zmat = csr_matrix((np.ones(len(zrows)), (zrows, zcols)),
                              shape=(n, n))
            _, labels = csgraph.connected_components(zmat, directed=False)
        else:
            labels = np.arange(n)
        self._labels = labels
        ncomp = int(labels.max()) + 1 if n else 0
        quotient: dict[tuple[int, int], float] = {}
        for a, b, wv in zip(labels[eu], labels[ev], vals):
            if a == b:
                continue
            key = (int(a), int(b)) if a < b else (int(b), int(a))
            old = quotient.get(key)
            if old is None or wv < old:
                quotient[key] = float(wv)
        if quotient:
            qi = np.array([k[0] for k in quotient] + [k[1] for k in quotient])
            qj = np.array([k[1] for k in quotient] + [k[0] for k in quotient])
            qw = np.array(list(quotient.values()) * 2)
            self._mat = csr_matrix((qw, (qi, qj)), shape=(ncomp, ncomp))
        else:
            self._mat = csr_matrix((ncomp, ncomp))
        self._rows: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def vertices(self):
        return self.graph.vertices

    def _comp_row(self, comp: int) -> np.ndarray:
        with self._lock:
            row = self._rows.get(comp)
        if row is None:
            row = csgraph.dijkstra(self._mat, indices=comp, directed=False)
            with self._lock:
                self._rows[comp] = row
        return row

    def _row_by_index(self, i: int) -> np.ndarray:
        return self._comp_row(int(self._labels[i]))[self._labels]

    def d(self, u: int, v: int) -> float:
        return float(self._row_by_index(self.graph.index_of(u))[self.graph.index_of(v)])

    def row(self, u: int) -> np.ndarray:
        return self._row_by_index(self.graph.index_of(u))

    def multi_source(self, sources) -> np.ndarray:
        comps = np.unique(self._labels[[self.graph.index_of(u) for u in sources]])
        dist = csgraph.dijkstra(self._mat, indices=comps, directed=False,
                                min_only=True)
        return dist[self._labels]

    def as_matrix(self) -> np.ndarray:
        n = self.graph.num_vertices
        if n > EXPLICIT_CAP:
            raise MetricError(
                f"all-pairs matrix above the {EXPLICIT_CAP}-vertex cap")
        return np.vstack([self._row_by_index(i) for i in range(n)])

    def to_explicit(self, check: bool = False) -> ExplicitMetric:
        return ExplicitMetric(self.vertices, self.as_matrix(), check=check)

    def __repr__(self) -> str:
        return f"PathMetric(on {self.graph.num_vertices} vertices)"


MetricObject = ExplicitMetric | PathMetric


def check_pseudometric(matrix: np.ndarray,
                       rtol: float = TRIANGLE_RTOL,
                       rng_seed: int = 0) -> tuple[bool, tuple[int, int, int] | None]:
    """Zero diagonal, symmetry, nonnegativity and the triangle inequality.

    Exhaustive over all triples up to TRIANGLE_EXHAUSTIVE_CAP vertices,
    randomized sampling above.  A relative slack absorbs the one-ulp triangle
    failures that rounded distances (Euclidean matrices, |f(x)-f(y)|) exhibit
    on collinear triples.  Returns (verdict, first violating triple).
    """
    M = np.asarray(matrix, dtype=float)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise MetricError("distance matrix must be square")
    diag = np.abs(M.diagonal())
    if np.any(diag != 0.0):
        i = int(np.argmax(diag != 0.0))
        return False, (i, i, i)
    if np.any(M != M.T):
        bad = np.argwhere(M != M.T)
        i, j = (int(x) for x in bad[0])
        return False, (i, j, i)
    if np.any(M < 0.0):
        bad = np.argwhere(M < 0.0)
        i, j = (int(x) for x in bad[0])
        return False, (i, j, i)

    if n <= TRIANGLE_EXHAUSTIVE_CAP:
        for k in range(n):
            via = M[:, k][:, None] + M[k, :][None, :]
            slack = rtol * np.maximum(1.0, via)
            viol = M > via + slack
            if viol.any():
                i, j = (int(x) for x in np.argwhere(viol)[0])
                return False, (i, k, j)
        return True, None

    rng = np.random.default_rng(rng_seed)
    ii = rng.integers(0, n, size=TRIANGLE_SAMPLES)
    jj = rng.integers(0, n, size=TRIANGLE_SAMPLES)
    kk = rng.integers(0, n, size=TRIANGLE_SAMPLES)
    via = M[ii, kk] + M[kk, jj]
    viol = M[ii, jj] > via + rtol * np.maximum(1.0, via)
    if viol.any():
        t = int(np.argmax(viol))
        return False, (int(ii[t]), int(kk[t]), int(jj[t]))
    return True, None


@dataclass(frozen=True)
class IntrinsicReport:
    """Per-vertex load versus measure for the intrinsic-metric inequality."""

    load: dict[int, float]
    slack: dict[int, float]
    intrinsic: bool
    edge_energy_total: float

    @property
    def smallest_intrinsic_measure(self) -> dict[int, float]:
        """The load itself: the smallest measure the metric is intrinsic for."""
        return self.load


def _sigma_on_edges(graph: WeightedGraph, sigma: MetricObject) -> np.ndarray:
    eu, ev, _ = graph.edge_index_arrays()
    ids = graph.vertices
    if isinstance(sigma, ExplicitMetric):
        su = [sigma.index[ids[a]] for a in eu]
        sv = [sigma.index[ids[b]] for b in ev]
        return sigma.matrix[su, sv]
    return np.array([sigma.d(ids[a], ids[b]) for a, b in zip(eu, ev)])


def intrinsic_report(graph: WeightedGraph, sigma: MetricObject,
                     m: Measure) -> IntrinsicReport:
    """Check (1/2) sum_y b(x,y) sigma(x,y)^2 <= m(x) at every vertex."""
    per_edge = _sigma_on_edges(graph, sigma)
    load = vertex_load(graph, per_edge)
    slack = {v: m[v] - load[v] for v in graph.vertices}
    total = math.fsum(load.values())
    return IntrinsicReport(load=load, slack=slack,
                           intrinsic=all(s >= 0.0 for s in slack.values()),
                           edge_energy_total=total)


def metric_from_potential(graph: WeightedGraph,
                          f: Potential) -> tuple[ExplicitMetric, dict[int, float]]:
    """The pseudometric |f(x)-f(y)| and its gradient load measure.

    The load is exactly the energy report's local values, so the intrinsic
    check against it has zero slack at every vertex.
    """
    arr = f.to_array(graph)
    M = np.abs(arr[:, None] - arr[None, :])
    sigma = ExplicitMetric(graph.vertices, M, check=False)
    eu, ev, _ = graph.edge_index_arrays()
    load = vertex_load(graph, np.abs(arr[eu] - arr[ev]))
    return sigma, load


def path_metric(graph: WeightedGraph, w: EdgeFunction) -> PathMetric:
    return PathMetric(graph, w)


def path_metric_idempotent(graph: WeightedGraph, w: EdgeFunction,
                           rtol: float = 1e-13) -> bool:
    """Whether re-deriving the path metric from its own edge restriction
    reproduces it on all pairs (a fixed-point property of path metrics).

    Equality holds exactly in real arithmetic; re-accumulated shortest paths
    can differ by a few ulps per hop, so the comparison allows a relative
    slack at that scale.
    """
    d1 = PathMetric(graph, w).as_matrix()
    restricted = EdgeFunction({(u, v): float(d1[graph.index_of(u), graph.index_of(v)])
                               for u, v, _ in graph.edges()})
    d2 = PathMetric(graph, restricted).as_matrix()
    return bool(np.allclose(d1, d2, rtol=rtol, atol=0.0))


@dataclass(frozen=True)
class DiscreteTopologyCertificate:
    total_load: float            # sum over x of 2 deg(x) f(x)^2, at most 2
    min_off_diagonal: float      # strictly positive for a genuine metric
    scale: dict[int, float]      # the per-vertex scale function


def discrete_topology_metric(graph: WeightedGraph, order=None
                             ) -> tuple[ExplicitMetric, DiscreteTopologyCertificate]:
    """Ultrametric max-scale construction separating all vertices.

    With scales 1/sqrt(2^n deg(x_n)) over an enumeration (x_n), the induced
    max-metric is intrinsic with total load at most 2 and every off-diagonal
    distance positive, so it induces the discrete topology on the truncation.
    Scales are rounded downward where needed so the per-vertex load bound
    2 deg(x_n) scale^2 <= 2^(1-n) holds exactly; the certified total is then
    genuinely below 2, not just up to rounding.
    """
    from fractions import Fraction

    ids = graph.vertices
    if order is None:
        order = list(ids)
    else:
        order = [int(v) for v in order]
        if sorted(order) != sorted(ids):
            raise MetricError("enumeration must cover every vertex exactly once")
    scale = {}
    total = Fraction(0)
    for n, v in enumerate(order, start=1):
        d = graph.degree(v)
        if d <= 0.0:   # isolated single-vertex truncation
            d = 1.0
        # 2^(-n/2)/sqrt(d) via exponent splitting: stays nonzero far past the
        # point where 2.0**-n underflows
        s = math.ldexp(1.0 / math.sqrt(d), -(n // 2))
        if n % 2:
            s /= math.sqrt(2.0)
        if s == 0.0:
            raise MetricError(
                f"scale underflow at position {n}; truncation too large")
        budget = Fraction(2) ** (1 - n)
        while 2 * Fraction(d) * Fraction(s) ** 2 > budget:
            s = math.nextafter(s, 0.0)
        scale[v] = s
        total += 2 * Fraction(d) * Fraction(s) ** 2
    fvals = np.array([scale[v] for v in ids])
    M = np.maximum(fvals[:, None], fvals[None, :])
    np.fill_diagonal(M, 0.0)
    sigma = ExplicitMetric(ids, M, check=False)
    n = len(ids)
    min_off = float(np.min(M[~np.eye(n, dtype=bool)])) if n > 1 else math.inf
    return sigma, DiscreteTopologyCertificate(total_load=float(total),
                                              min_off_diagonal=min_off,
                                              scale=scale)


def perturb_to_injective(graph: WeightedGraph, f: Potential, eps: float,
                         rng_seed: int = 0, max_attempts: int = 100,
                         max_offset: float | None = None) -> Potential:
    """Perturb f to pairwise-distinct values with sup-error and energy below eps.

    Per-vertex budgets s_x follow the geometric allocation with
    sum_x s_x sqrt(deg x) < sqrt(eps)/2, which caps the perturbation energy
    at eps/4 regardless of the draw.  Budgets are floored at a few ulps of
    f(x) so draws survive rounding (an affine shift by irrational offsets is
    not constructive in floating point), and optionally capped by
    ``max_offset`` for callers that want uniformly tiny offsets.  Offsets
    are redrawn on collision; deterministic given the seed.
    """
    if not (eps > 0.0):
        raise MetricError("perturbation size must be positive")
    ids = graph.vertices
    root = math.sqrt(eps)
    budgets = {}
    for i, v in enumerate(ids):
        d = max(graph.degree(v), 1.0)
        s = root / (2.0 ** min(i + 2, 1060) * math.sqrt(d))
        s = min(s, eps / 2.0)
        if max_offset is not None:
            s = min(s, max_offset)
        floor = 8.0 * math.ulp(1.0 + abs(f[v]))
        s = max(s, floor)
        if s > eps / 2.0 and floor > eps / 2.0:
            raise MetricError(
                f"perturbation size {eps} is below the float resolution of "
                f"the potential near {f[v]!r}")
        budgets[v] = s

    for attempt in range(max_attempts):
        rng = np.random.default_rng((rng_seed, attempt))
        out = {}
        for v in ids:
            t = float(rng.uniform(-budgets[v], budgets[v]))
            out[v] = f[v] + t
        if len(set(out.values())) == len(ids):
            g = Potential(out)
            delta = g - Potential({v: f[v] for v in ids})
            if max(abs(x) for x in delta.values.values()) < eps and \
                    energy_value(graph, delta) < eps:
                return g
    raise MetricError(f"no injective perturbation found in {max_attempts} draws")


def distance_to_set(sigma: MetricObject, U) -> Potential:
    """sigma(x, U) as a vertex potential; zero on U, 1-Lipschitz w.r.t. sigma."""
    U = [int(u) for u in U]
    if not U:
        raise MetricError("distance to the empty set is undefined")
    if isinstance(sigma, PathMetric):
        dist = sigma.multi_source(U)
        return Potential(dict(zip(sigma.vertices, (float(x) for x in dist))))
    rows = np.vstack([sigma.row(u) for u in U])
    return Potential(dict(zip(sigma.vertices,
                              (float(x) for x in rows.min(axis=0)))))


@dataclass(frozen=True)
class SetDistanceBound:
    energy: float
    bound: float          # min(m(X), 2 m(X \ U))
    holds: bool


def distance_bound_check(graph: WeightedGraph, sigma: MetricObject, m: Measure,
                         U) -> tuple[Potential, SetDistanceBound]:
    """Distance-to-set potential plus the energy bound it satisfies when
    sigma is intrinsic with respect to m."""
    sU = distance_to_set(sigma, U)
    q = energy_value(graph, sU)
    outside = [v for v in graph.vertices if v not in set(U)]
    bound = min(m.total, 2.0 * m.mass(outside))
    return sU, SetDistanceBound(energy=q, bound=bound, holds=q <= bound)


# -- ball / diameter / total-boundedness queries ------------------------

def metric_ball(sigma: MetricObject, x: int, r: float) -> frozenset[int]:
    row = sigma.row(x)
    return frozenset(v for v, d in zip(sigma.vertices, row) if d <= r)


def metric_diameter(sigma: MetricObject) -> float:
    return float(sigma.as_matrix().max())


def greedy_net_size(sigma: MetricObject, eps: float) -> int:
    """Size of a greedy eps-net in enumeration order.

    A finite-truncation probe for total boundedness: small nets at small eps
    are evidence that the metric completion is totally bounded.
    """
    if not (eps > 0):
        raise MetricError("net resolution must be positive")
    net: list[int] = []
    for v in sigma.vertices:
        if all(sigma.d(v, u) > eps for u in net):
            net.append(v)
    return len(net)
