"""Laplacians, harmonicity, Dirichlet solves, and Royden decompositions.

Sign convention used everywhere: lap(f)(x) = f(x) - (1/deg x) sum_y b(x,y) f(y),
so superharmonic means lap(f) >= 0.

The infinite-graph Royden decomposition is approximated by ring-grounded
harmonic extensions per truncation level; each level satisfies exact energy
orthogonality on its own, and stabilization across levels is the convergence
criterion.  On finite graphs the level schedule saturates at the largest
truncation whose ring is nonempty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .energy import energy_inner, energy_value, l2_norm_sq
from .errors import GraphStructureError, LipschitzError, SolverError, StabilizationError
from .graph import (Exhaustion, Measure, Potential, WeightedGraph,
                    induced_truncation)
from .solver import solve_dirichlet


def laplacian_apply(graph: WeightedGraph, f: Potential,
                    m: Measure | None = None) -> Potential:
    """Normalized Laplacian action on f.

    Degree normalization by default; passing a measure rescales by m(x)
    instead: (1/m(x)) sum_y b(x,y)(f(x) - f(y)).
    """
    arr = f.to_array(graph)
    lap = graph.laplacian() @ arr
    if m is None:
        denom = np.where(graph.degrees > 0, graph.degrees, 1.0)
    else:
        denom = m.to_array(graph)
    return Potential.from_array(graph, lap / denom)


@dataclass(frozen=True)
class HarmonicityReport:
    kind: str            # "harmonic" | "superharmonic" | "neither"
    max_residual: float  # max |lap f| over the interior
    min_value: float     # min of lap f over the interior


def harmonicity_check(graph: WeightedGraph, f: Potential, interior,
                      tol: float = 1e-10) -> HarmonicityReport:
    """Classify f on an interior set by the sign of the normalized Laplacian."""
    interior = [int(v) for v in interior]
    for v in interior:
        graph.index_of(v)
    lap = laplacian_apply(graph, f)
    vals = [lap[v] for v in interior]
    if not vals:
        return HarmonicityReport("harmonic", 0.0, 0.0)
    max_abs = max(abs(x) for x in vals)
    min_val = min(vals)
    if max_abs <= tol:
        kind = "harmonic"
    elif min_val >= -tol:
        kind = "superharmonic"
    else:
        kind = "neither"
    return HarmonicityReport(kind, max_abs, min_val)


def harmonic_extension(graph: WeightedGraph, boundary, data: Potential,
                       rtol: float = 1e-10) -> Potential:
    """Unique solution of the Dirichlet problem with the given boundary data.

    The maximum principle (interior values between the boundary extremes) is
    asserted on every solve.
    """
    boundary = sorted(set(int(v) for v in boundary))
    if not boundary:
        raise GraphStructureError("boundary set must be nonempty")
    fixed = {v: data[v] for v in boundary}
    h, info = solve_dirichlet(graph, fixed, m=None, rtol=rtol)
    lo, hi = min(fixed.values()), max(fixed.values())
    slack = 1e-8 * (1.0 + hi - lo)
    vals = list(h.values.values())
    if min(vals) < lo - slack or max(vals) > hi + slack:
        raise SolverError("harmonic extension violated the maximum principle")
    return h


@dataclass(frozen=True)
class RoydenSplit:
    """f = f0 + fh on a truncation: f0 vanishing on the ring, fh harmonic
    off it, with exact energy orthogonality."""

    f0: Potential
    fh: Potential
    level: int
    degenerate: bool = False     # empty ring: whole-graph (recurrent) case
    energy_f: float = 0.0
    energy_f0: float = 0.0
    energy_fh: float = 0.0

    def orthogonality_defect(self) -> float:
        return abs(self.energy_f - self.energy_f0 - self.energy_fh)


def royden_split(graph: WeightedGraph, ring, f: Potential,
                 level: int = 0, rtol: float = 1e-10) -> RoydenSplit:
    """Split f into a ring-vanishing part and the harmonic extension of its
    ring values.

    An empty ring is the degenerate case (nothing to ground against): the
    split returns f0 = f, fh = 0 with a flag.
    """
    ring = sorted(set(int(v) for v in ring))
    if not ring:
        return RoydenSplit(f0=f, fh=Potential({}), level=level, degenerate=True,
                           energy_f=energy_value(graph, f),
                           energy_f0=energy_value(graph, f), energy_fh=0.0)
    fh = harmonic_extension(graph, ring, f, rtol=rtol)
    f0 = Potential({v: f[v] - fh[v] for v in graph.vertices})
    qf = energy_value(graph, f)
    q0 = energy_value(graph, f0)
    qh = energy_value(graph, fh)
    split = RoydenSplit(f0=f0, fh=fh, level=level, energy_f=qf,
                        energy_f0=q0, energy_fh=qh)
    if split.orthogonality_defect() > max(1e-10 * max(qf, 1e-300), 1e-13):
        raise SolverError(
            f"energy orthogonality defect {split.orthogonality_defect():.3e} "
            f"too large for Q(f) = {qf!r}")
    return split


@dataclass(frozen=True)
class StabilizationReport:
    levels: tuple[dict, ...]     # {"n", "sup_diff", "energy_diff"}
    stabilized: bool
    window: tuple[int, ...]
    final_values: dict[int, float]
    saturated: bool = False

    def as_dict(self) -> dict:
        return {"levels": [dict(l) for l in self.levels],
                "stabilized": self.stabilized,
                "window": list(self.window),
                "f_h_window": {str(v): x for v, x in sorted(self.final_values.items())},
                "saturated": self.saturated}


def royden_limit(graph: WeightedGraph, exhaustion: Exhaustion,
                 f: Potential | Callable[[WeightedGraph], Potential],
                 tol: float = 1e-6,
                 window: Sequence[int] | None = None
                 ) -> tuple[StabilizationReport, RoydenSplit | None]:
    """Track the harmonic parts across truncation levels.

    Declares stabilization when both the sup-norm difference on a fixed
    observation window and the energy increment of successive harmonic parts
    drop below ``tol``.  Returns the report and the final split.
    """
    if window is None:
        window = sorted(exhaustion.sets[0])
    window = [int(v) for v in window]
    rows: list[dict] = []
    prev_fh: Potential | None = None
    prev_q: float | None = None
    last_split: RoydenSplit | None = None
    seen_sets: list[frozenset] = []
    saturated = False
    for n, F in enumerate(exhaustion.sets):
        sub, ring = induced_truncation(graph, F)
        fn = f(sub) if callable(f) else f
        split = royden_split(sub, ring, fn, level=n)
        if split.degenerate:
            continue
        if seen_sets and F == seen_sets[-1]:
            saturated = True
        seen_sets.append(F)
        fh = split.fh
        qh = split.energy_fh
        if prev_fh is not None:
            sup_diff = max(abs(fh[v] - prev_fh[v]) for v in window)
            energy_diff = abs(qh - prev_q)
            rows.append({"n": n, "sup_diff": sup_diff, "energy_diff": energy_diff})
        prev_fh, prev_q = fh, qh
        last_split = split
    stabilized = bool(rows) and rows[-1]["sup_diff"] < tol and \
        rows[-1]["energy_diff"] < tol
    final_vals = {v: last_split.fh[v] for v in window} if last_split else {}
    return StabilizationReport(tuple(rows), stabilized, tuple(window),
                               final_vals, saturated), last_split


# -- harmonic functions from boundary Lipschitz data ----------------------

@dataclass(frozen=True)
class BoundaryData:
    """Anchor distances and target values for the Lipschitz extension."""

    distances: tuple[Potential, ...]   # per anchor: x -> distance to the anchor
    values: tuple[float, ...]
    separations: np.ndarray            # pairwise distances between anchors


def lipschitz_extension(graph: WeightedGraph, data: BoundaryData,
                        lipschitz: float | None = None) -> tuple[Potential, float]:
    """Smallest-slope inf-convolution extension of the anchor values.

    Errors when the anchor values are mutually inconsistent with the given
    constant instead of silently steepening it.
    """
    k = len(data.values)
    if k == 0:
        raise LipschitzError("need at least one anchor")
    needed = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            sep = float(data.separations[i, j])
            gap = abs(data.values[i] - data.values[j])
            if gap > 0 and sep <= 0:
                raise LipschitzError(f"anchors {i},{j} coincide with distinct values")
            if sep > 0:
                needed = max(needed, gap / sep)
    L = needed if lipschitz is None else float(lipschitz)
    if L + 1e-12 < needed:
        raise LipschitzError(
            f"anchor values need a Lipschitz constant of at least {needed!r}, "
            f"got {L!r}")
    if L == 0.0:
        return Potential.constant(graph, data.values[0]), 0.0
    vals = {}
    for v in graph.vertices:
        vals[v] = min(data.values[j] + L * data.distances[j][v] for j in range(k))
    return Potential(vals), L


@dataclass(frozen=True)
class BoundaryHarmonicResult:
    extension: Potential
    harmonic_part: Potential
    lipschitz: float
    energy_extension: float
    energy_bound: float          # L^2 m(X)
    energy_harmonic: float
    report: StabilizationReport


def boundary_to_harmonic(graph: WeightedGraph, m: Measure, data: BoundaryData,
                         exhaustion: Exhaustion,
                         lipschitz: float | None = None,
                         tol: float = 1e-6) -> BoundaryHarmonicResult:
    """Harmonic function matching Lipschitz boundary data, via truncations.

    Pipeline: extend the anchor values to a Lipschitz potential, then follow
    its harmonic parts along the exhaustion until they stabilize.  The
    extension carries the certificate Q(f) <= L^2 m(X) whenever the ambient
    metric is intrinsic for m.  A non-stabilizing run raises, with the
    evidence attached.
    """
    f, L = lipschitz_extension(graph, data, lipschitz)
    qf = energy_value(graph, f)
    bound = L * L * m.total
    report, split = royden_limit(graph, exhaustion, f, tol=tol)
    if not report.stabilized or split is None:
        raise StabilizationError("harmonic parts did not stabilize across levels",
                                 report=report)
    return BoundaryHarmonicResult(
        extension=f, harmonic_part=split.fh, lipschitz=L,
        energy_extension=qf, energy_bound=bound,
        energy_harmonic=split.energy_fh, report=report)


# -- rank certificates ----------------------------------------------------

@dataclass(frozen=True)
class HarmonicFamily:
    members: tuple[Potential, ...]
    gram: np.ndarray
    base_vertex: int

    @classmethod
    def build(cls, graph: WeightedGraph, members: Sequence[Potential],
              base_vertex: int) -> "HarmonicFamily":
        if not members:
            raise GraphStructureError("family must be nonempty")
        k = len(members)
        G = np.zeros((k, k))
        for i in range(k):
            for j in range(i, k):
                G[i, j] = G[j, i] = energy_inner(graph, members[i], members[j]) \
                    + members[i][base_vertex] * members[j][base_vertex]
        return cls(tuple(members), G, base_vertex)


def harmonic_rank(family: HarmonicFamily, tol: float = 1e-8) -> int:
    """Numerical rank of the family's Gram matrix.

    Rank at least 2 certifies a non-constant function in the span: a finite
    stand-in for genuine richness of the harmonic space.
    """
    eig = np.linalg.eigvalsh(family.gram)
    top = float(eig[-1])
    if top <= 0.0:
        return 0
    return int(np.sum(eig > tol * top))
