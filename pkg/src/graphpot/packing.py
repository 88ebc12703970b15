"""Circle packings, contact graphs, and boundary-capacity diagnostics.

The Euclidean center metric of a bounded packing is intrinsic for its own
load measure and separates vertices, so boundary points of the packed region
admit capacity upper bounds from averaged bump functions.  All verdicts here
are evidence on sampled anchors and scales, labelled as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .energy import energy_value, l2_norm_sq, vertex_load
from .errors import GraphFormatError, PackingError
from .graph import Measure, Potential, WeightedGraph
from .metrics import ExplicitMetric, intrinsic_report

TANGENCY_TOL_FACTOR = 1e-9
GREY_BAND_FACTOR = 8.0          # gaps in (tol, 8 tol] are ambiguous, not edges


class CirclePacking:
    """Closed discs with pairwise disjoint interiors in the plane."""

    __slots__ = ("ids", "centers", "radii", "index")

    def __init__(self, ids: Sequence[int], centers: np.ndarray, radii: np.ndarray,
                 overlap_tol: float | None = None, check: bool = True):
        ids = tuple(int(i) for i in ids)
        if len(set(ids)) != len(ids):
            raise PackingError("duplicate disc ids")
        centers = np.asarray(centers, dtype=float).reshape(len(ids), 2)
        radii = np.asarray(radii, dtype=float).ravel()
        if len(radii) != len(ids):
            raise PackingError("radius count does not match disc count")
        if np.any(radii <= 0):
            raise PackingError("disc radii must be positive")
        self.ids = ids
        self.centers = centers
        self.radii = radii
        self.index = {v: i for i, v in enumerate(ids)}
        if check and len(ids) > 1:
            tol = overlap_tol if overlap_tol is not None \
                else TANGENCY_TOL_FACTOR * float(radii.min())
            D = self.center_distances()
            sums = radii[:, None] + radii[None, :]
            overlap = D < sums - tol
            np.fill_diagonal(overlap, False)
            if overlap.any():
                i, j = (int(x) for x in np.argwhere(overlap)[0])
                raise PackingError(
                    f"discs {ids[i]} and {ids[j]} overlap: centers "
                    f"{D[i, j]:.6g} apart, radii sum {sums[i, j]:.6g}")

    def __len__(self) -> int:
        return len(self.ids)

    def center_distances(self) -> np.ndarray:
        d = self.centers[:, None, :] - self.centers[None, :, :]
        return np.sqrt((d * d).sum(axis=-1))

    @property
    def bounding_box(self) -> tuple[float, float, float, float]:
        lo = (self.centers - self.radii[:, None]).min(axis=0)
        hi = (self.centers + self.radii[:, None]).max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @property
    def bounding_radius(self) -> float:
        """Radius of the smallest origin-centered disc containing the packing."""
        return float((np.hypot(self.centers[:, 0], self.centers[:, 1])
                      + self.radii).max())

    @property
    def bounded(self) -> bool:
        # every materialized packing has finite extent
        return True

    def __repr__(self) -> str:
        return f"CirclePacking({len(self.ids)} discs)"


def parse_packing(text: str, overlap_tol: float | None = None) -> CirclePacking:
    """Lines ``id x y r`` with positive radius; '#' comments ignored."""
    ids, cs, rs = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise GraphFormatError(f"line {lineno}: expected 'id x y r'")
        ids.append(int(parts[0]))
        cs.append((float(parts[1]), float(parts[2])))
        rs.append(float(parts[3]))
    if not ids:
        raise GraphFormatError("packing file contains no discs")
    return CirclePacking(ids, np.array(cs), np.array(rs), overlap_tol=overlap_tol)


def load_packing(path, overlap_tol: float | None = None) -> CirclePacking:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_packing(fh.read(), overlap_tol=overlap_tol)


def save_packing(packing: CirclePacking, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, v in enumerate(packing.ids):
            x, y = packing.centers[i]
            fh.write(f"{v}\t{x!r}\t{y!r}\t{packing.radii[i]!r}\n")


def contact_graph(packing: CirclePacking, tangency_tol: float | None = None,
                  weight: float = 1.0) -> WeightedGraph:
    """Graph with an edge wherever two discs are tangent within tolerance.

    Pairs whose gap falls in the grey band just above the tolerance are an
    error rather than a guessed edge; contact graphs must be reproducible
    bit-for-bit.  The result must be connected.
    """
    n = len(packing)
    tol = tangency_tol if tangency_tol is not None \
        else TANGENCY_TOL_FACTOR * float(packing.radii.min())
    D = packing.center_distances()
    gaps = D - (packing.radii[:, None] + packing.radii[None, :])
    np.fill_diagonal(gaps, np.inf)
    grey = (np.abs(gaps) > tol) & (np.abs(gaps) <= GREY_BAND_FACTOR * tol)
    if grey.any():
        i, j = (int(x) for x in np.argwhere(grey)[0])
        raise PackingError(
            f"discs {packing.ids[i]},{packing.ids[j]} are nearly tangent "
            f"(gap {gaps[i, j]:.3e}, tolerance {tol:.3e}); refusing to guess")
    edges = {}
    for i, j in np.argwhere(np.triu(np.abs(gaps) <= tol, k=1)):
        edges[(packing.ids[int(i)], packing.ids[int(j)])] = weight
    if n > 1 and not edges:
        raise PackingError("no tangencies found; contact graph is disconnected")
    graph = WeightedGraph(packing.ids, edges)   # raises if disconnected
    return graph


def hex_packing(disc_radius: float) -> CirclePacking:
    """Hexagonal penny packing of the unit disk.

    Rows at integer multiples of sqrt(3) * rho, horizontal spacing 2 rho with
    odd rows offset by rho; centers kept while |c| <= 1 - rho.  Ids follow
    the (row, column) lexicographic order, so the construction is
    deterministic.
    """
    rho = float(disc_radius)
    if not (0.0 < rho < 0.25):
        raise PackingError(f"disc radius must lie in (0, 0.25), got {rho}")
    step = 2.0 * rho
    jmax = int(math.ceil(1.0 / (math.sqrt(3.0) * rho))) + 1
    imax = int(math.ceil(1.0 / step)) + 2
    centers = []
    for j in range(-jmax, jmax + 1):
        y = j * math.sqrt(3.0) * rho
        off = rho if j % 2 != 0 else 0.0
        for i in range(-imax, imax + 1):
            x = i * step + off
            if math.hypot(x, y) <= 1.0 - rho:
                centers.append((x, y))
    if not centers:
        raise PackingError("no discs fit the unit disk at this radius")
    # (j, i) loop order above is already (row, column) lexicographic
    cs = np.array(centers)
    return CirclePacking(range(len(centers)), cs, np.full(len(centers), rho))


def invert_packing(packing: CirclePacking, center: Sequence[float],
                   radius: float) -> CirclePacking:
    """Image packing under inversion in the circle of the given center/radius.

    Discs map to discs by the standard image formulas; the map requires the
    inversion center to lie strictly outside every disc.  Tangencies, and
    hence the contact graph, are preserved.
    """
    c = np.asarray(center, dtype=float).reshape(2)
    R2 = float(radius) ** 2
    if R2 <= 0:
        raise PackingError("inversion radius must be positive")
    d = packing.centers - c[None, :]
    dist2 = (d * d).sum(axis=1)
    denom = dist2 - packing.radii ** 2
    if np.any(denom <= 0):
        i = int(np.argmax(denom <= 0))
        raise PackingError(
            f"disc {packing.ids[i]} contains or touches the inversion center")
    new_centers = c[None, :] + (R2 / denom)[:, None] * d
    new_radii = R2 * packing.radii / np.abs(denom)
    return CirclePacking(packing.ids, new_centers, new_radii)


def contact_preserved(a: CirclePacking, b: CirclePacking,
                      rel_tol: float = 1e-9) -> bool:
    """Whether two packings on the same ids have identical tangency pairs.

    Uses a per-pair relative tolerance since inversion rescales radii.
    """
    def tangencies(p: CirclePacking) -> set[tuple[int, int]]:
        D = p.center_distances()
        sums = p.radii[:, None] + p.radii[None, :]
        close = np.abs(D - sums) <= rel_tol * sums
        np.fill_diagonal(close, False)
        return {(p.ids[i], p.ids[j])
                for i, j in np.argwhere(np.triu(close, k=1))}
    return tangencies(a) == tangencies(b)


@dataclass(frozen=True)
class PackingMetricData:
    metric: ExplicitMetric
    measure: Measure
    max_degree: float
    mass_bound: float       # (2 max_degree / pi) * area of the bounding disc

    def as_dict(self) -> dict:
        return {"total_mass": self.measure.total, "max_degree": self.max_degree,
                "mass_bound": self.mass_bound}


def packing_metric(packing: CirclePacking, graph: WeightedGraph,
                   tangency_tol: float | None = None) -> PackingMetricData:
    """Center-distance metric with its smallest intrinsic measure.

    The graph must be subordinate to the packing: every edge joins discs that
    intersect (within tolerance).  Tangent pairs sit at distance exactly the
    radius sum, which keeps the per-vertex load finite and bounded via the
    packed area.
    """
    tol = tangency_tol if tangency_tol is not None \
        else TANGENCY_TOL_FACTOR * float(packing.radii.min())
    for u, v, _ in graph.edges():
        i, j = packing.index[u], packing.index[v]
        gap = float(np.hypot(*(packing.centers[i] - packing.centers[j]))) \
            - float(packing.radii[i] + packing.radii[j])
        if gap > tol:
            raise PackingError(
                f"edge ({u},{v}) joins non-intersecting discs (gap {gap:.3e}); "
                "graph is not subordinate to the packing")
    order = [packing.index[v] for v in graph.vertices]
    M = packing.center_distances()[np.ix_(order, order)]
    sigma = ExplicitMetric(graph.vertices, M, check=False, require_metric=True)
    eu, ev, _ = graph.edge_index_arrays()
    load = vertex_load(graph, M[eu, ev])
    measure = Measure(load) if all(x > 0 for x in load.values()) else \
        Measure({v: max(x, 5e-324) for v, x in load.items()})
    area = math.pi * packing.bounding_radius ** 2
    return PackingMetricData(metric=sigma, measure=measure,
                             max_degree=graph.max_degree,
                             mass_bound=2.0 * graph.max_degree / math.pi * area)


@dataclass(frozen=True)
class BoundaryAnchor:
    """Euclidean target point for boundary-capacity diagnostics."""

    point: tuple[float, float]
    name: str = ""

    def validate(self, packing: CirclePacking) -> None:
        w = np.asarray(self.point)
        d = np.hypot(packing.centers[:, 0] - w[0], packing.centers[:, 1] - w[1])
        inside = d < packing.radii * (1.0 - 1e-12)
        if inside.any():
            i = int(np.argmax(inside))
            raise PackingError(
                f"anchor {self.point} lies inside disc {packing.ids[i]}")

    def distances(self, packing: CirclePacking, graph: WeightedGraph) -> Potential:
        w = np.asarray(self.point)
        vals = {}
        for v in graph.vertices:
            c = packing.centers[packing.index[v]]
            vals[v] = float(np.hypot(c[0] - w[0], c[1] - w[1]))
        return Potential(vals)

    def label(self) -> str:
        return self.name or f"({self.point[0]:g},{self.point[1]:g})"


def circle_anchors(count: int, radius: float = 1.0) -> list[BoundaryAnchor]:
    """Equally spaced anchors on the circle of the given radius."""
    out = []
    for k in range(count):
        a = 2.0 * math.pi * k / count
        out.append(BoundaryAnchor((radius * math.cos(a), radius * math.sin(a)),
                                  name=f"circle{count}:{k}"))
    return out


def bump_potential(packing: CirclePacking, graph: WeightedGraph,
                   anchor: BoundaryAnchor, scale: float) -> Potential:
    """Tent profile (2 - |x - w| / r)_+ ∧ 1 evaluated at disc centers.

    Equals 1 within distance r of the anchor and 0 beyond 2r; Lipschitz with
    constant 1/r for the center metric.
    """
    if not (scale > 0):
        raise PackingError("bump scale must be positive")
    dist = anchor.distances(packing, graph)
    return Potential({v: min(max(2.0 - dist[v] / scale, 0.0), 1.0)
                      for v in graph.vertices})


def geometric_scales(first: float, ratio: float, count: int) -> list[float]:
    if not (first > 0 and 0 < ratio < 1 and count >= 1):
        raise PackingError("need first > 0, 0 < ratio < 1, count >= 1")
    return [first * ratio ** k for k in range(count)]


@dataclass(frozen=True)
class CesaroEntry:
    depth: int
    value: float                # rescaled ||g_n||^2_{Q,m}, a capacity bound
    raw_value: float
    rescale_min: float          # min of g_n on the innermost populated ball
    low_confidence: bool

    def as_dict(self) -> dict:
        return {"depth": self.depth, "value": self.value,
                "raw_value": self.raw_value, "rescale_min": self.rescale_min,
                "low_confidence": self.low_confidence}


@dataclass(frozen=True)
class CesaroReport:
    anchor: str
    scales: tuple[float, ...]
    bump_energies: tuple[float, ...]
    bump_masses: tuple[float, ...]
    cross_energy: list[list[float]]
    entries: tuple[CesaroEntry, ...]
    truncated_at: int | None     # first scale whose inner ball was empty

    def as_dict(self) -> dict:
        return {"anchor": self.anchor, "scales": list(self.scales),
                "per_scale": [{"Qf": q, "mf": m} for q, m in
                              zip(self.bump_energies, self.bump_masses)],
                "cross_energy": self.cross_energy,
                "cesaro": [e.as_dict() for e in self.entries],
                "truncated_at": self.truncated_at}


def cesaro_capacity_bounds(packing: CirclePacking, graph: WeightedGraph,
                           anchor: BoundaryAnchor, scales: Sequence[float],
                           data: PackingMetricData | None = None) -> CesaroReport:
    """Capacity upper bounds at a boundary anchor from averaged bumps.

    Averages of bumps at geometrically separated scales keep a uniformly
    bounded energy while their mass decays, so the averaged norms shrink; an
    entry is the Sobolev norm of the running average, rescaled by its minimum
    over the innermost populated ball so it stays admissible for the
    anchor's neighbourhood at that depth.
    """
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise PackingError("scales must be strictly decreasing")
    anchor.validate(packing)
    if data is None:
        data = packing_metric(packing, graph)
    m = data.measure
    dist = anchor.distances(packing, graph)
    bumps = [bump_potential(packing, graph, anchor, r) for r in scales]
    energies = [energy_value(graph, f) for f in bumps]
    masses = [l2_norm_sq(graph, f, m) for f in bumps]
    from .energy import energy_inner
    cross = [[energy_inner(graph, bumps[i], bumps[j]) if j > i else 0.0
              for j in range(len(bumps))] for i in range(len(bumps))]

    entries: list[CesaroEntry] = []
    truncated_at = None
    running: Potential | None = None
    for n, r in enumerate(scales, start=1):
        inner = [v for v in graph.vertices if dist[v] <= r]
        if not inner:
            truncated_at = n
            break
        running = bumps[n - 1] if running is None else running + bumps[n - 1]
        g = (1.0 / n) * running
        mu = min(g[v] for v in inner)
        raw = energy_value(graph, g) + l2_norm_sq(graph, g, m)
        if mu <= 0.0:
            truncated_at = n
            break
        entries.append(CesaroEntry(depth=n, value=raw / (mu * mu), raw_value=raw,
                                   rescale_min=mu, low_confidence=mu < 0.5))
    return CesaroReport(anchor=anchor.label(), scales=tuple(scales),
                        bump_energies=tuple(energies), bump_masses=tuple(masses),
                        cross_energy=cross, entries=tuple(entries),
                        truncated_at=truncated_at)


@dataclass(frozen=True)
class ResolvabilityConfig:
    scale_count: int = 8
    scale_ratio: float = 0.75
    first_scale_factor: float = 0.8   # of the packing's bounding radius
    decay_factor: float = 0.75        # final entry must drop below this times first

    def as_dict(self) -> dict:
        return {"scale_count": self.scale_count, "scale_ratio": self.scale_ratio,
                "first_scale_factor": self.first_scale_factor,
                "decay_factor": self.decay_factor}


@dataclass(frozen=True)
class ResolvabilityReport:
    anchors: tuple[CesaroReport, ...]
    decaying: tuple[bool, ...]
    consistent: bool
    config: ResolvabilityConfig
    metric_summary: dict
    caveat: str = ("verdicts are evidence on sampled anchors and scales, "
                   "not a proof of strong resolvability")

    def as_dict(self) -> dict:
        return {"anchors": [a.as_dict() for a in self.anchors],
                "decaying": list(self.decaying),
                "consistent_with_strong_resolvability": self.consistent,
                "config": self.config.as_dict(),
                "metric": dict(self.metric_summary),
                "caveat": self.caveat}


def resolvability_report(packing: CirclePacking, graph: WeightedGraph,
                         anchors: Iterable[BoundaryAnchor],
                         config: ResolvabilityConfig = ResolvabilityConfig()
                         ) -> ResolvabilityReport:
    """Per-anchor capacity-decay diagnostics plus a combined verdict."""
    data = packing_metric(packing, graph)
    rep = intrinsic_report(graph, data.metric, data.measure)
    if not rep.intrinsic:
        raise PackingError("packing metric failed its own intrinsic check")
    scales = geometric_scales(config.first_scale_factor * packing.bounding_radius,
                              config.scale_ratio, config.scale_count)
    reports, decays = [], []
    for anchor in anchors:
        r = cesaro_capacity_bounds(packing, graph, anchor, scales, data=data)
        reports.append(r)
        vals = [e.value for e in r.entries]
        monotone_trend = len(vals) >= 2 and vals[-1] <= config.decay_factor * vals[0]
        decays.append(bool(monotone_trend))
    return ResolvabilityReport(anchors=tuple(reports), decaying=tuple(decays),
                               consistent=bool(decays) and all(decays),
                               config=config,
                               metric_summary=data.as_dict())
