"""Dirichlet energy, its bilinear form, contractions, and the associated norms.

Energies are accumulated with compensated summation (``math.fsum``): capacity
differences near zero drive the recurrence verdicts downstream, so sums must
not drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractionError, GraphStructureError
from .graph import EdgeFunction, Measure, Potential, WeightedGraph


@dataclass(frozen=True)
class EnergyReport:
    """Total Dirichlet energy together with each vertex's local share."""

    value: float
    local: dict[int, float]


def _edge_terms(graph: WeightedGraph, per_edge: np.ndarray) -> np.ndarray:
    """b(x,y) * value(x,y)^2 per unordered edge."""
    _, _, ew = graph.edge_index_arrays()
    return ew * per_edge * per_edge


def vertex_load(graph: WeightedGraph, per_edge: np.ndarray) -> dict[int, float]:
    """Per-vertex load (1/2) sum_y b(x,y) value(x,y)^2.

    Shared by the energy report, the gradient measure of a potential and the
    intrinsic-metric check, so that identical inputs yield bitwise-identical
    loads.
    """
    eu, ev, _ = graph.edge_index_arrays()
    terms = _edge_terms(graph, per_edge)
    half = 0.5 * terms
    acc = np.zeros(graph.num_vertices)
    np.add.at(acc, eu, half)
    np.add.at(acc, ev, half)
    return dict(zip(graph.vertices, (float(x) for x in acc)))


def dirichlet_energy(graph: WeightedGraph, f: Potential,
                     with_local: bool = True) -> EnergyReport:
    """Energy (1/2) sum_{x,y} b(x,y) (f(x)-f(y))^2 as an exact finite sum."""
    arr = f.to_array(graph)
    eu, ev, _ = graph.edge_index_arrays()
    diff = arr[eu] - arr[ev]
    terms = _edge_terms(graph, diff)
    value = math.fsum(terms.tolist())
    local = vertex_load(graph, diff) if with_local else {}
    return EnergyReport(value=value, local=local)


def energy_value(graph: WeightedGraph, f: Potential) -> float:
    return dirichlet_energy(graph, f, with_local=False).value


def energy_inner(graph: WeightedGraph, f: Potential, g: Potential) -> float:
    """Bilinear form (1/2) sum b(x,y)(f(x)-f(y))(g(x)-g(y)) by polarization."""
    fa, ga = f.to_array(graph), g.to_array(graph)
    eu, ev, ew = graph.edge_index_arrays()
    # group the difference product first so the form is exactly symmetric
    terms = ew * ((fa[eu] - fa[ev]) * (ga[eu] - ga[ev]))
    return math.fsum(terms.tolist())


@dataclass(frozen=True)
class EdgeEnergyReport:
    """Energy of a symmetric edge function and the measure it induces."""

    value: float
    load: dict[int, float]

    @property
    def load_total(self) -> float:
        return math.fsum(self.load.values())


def edge_energy(graph: WeightedGraph, w: EdgeFunction) -> EdgeEnergyReport:
    """(1/2) sum b(x,y) w(x,y)^2 plus the induced per-vertex load.

    For w = |grad f| this equals the Dirichlet energy of f, and the load is
    the smallest measure making |f(x)-f(y)| intrinsic.
    """
    per_edge = w.on_edges(graph)
    terms = _edge_terms(graph, per_edge)
    return EdgeEnergyReport(value=math.fsum(terms.tolist()),
                            load=vertex_load(graph, per_edge))


# -- contractions -------------------------------------------------------

class Clamp:
    """x -> (x ∧ hi) ∨ lo."""

    def __init__(self, lo: float, hi: float):
        if not (lo <= hi):
            raise ContractionError(f"clamp needs lo <= hi, got [{lo}, {hi}]")
        self.lo, self.hi = float(lo), float(hi)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def describe(self) -> str:
        return f"clamp[{self.lo:g},{self.hi:g}]"


class Slice:
    """x -> (x - level)_+ ∧ 1."""

    def __init__(self, level: float):
        self.level = float(level)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x - self.level, 0.0, 1.0)

    def describe(self) -> str:
        return f"slice({self.level:g})"


class AbsValue:
    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.abs(x)

    def describe(self) -> str:
        return "abs"


class LipschitzTable:
    """Piecewise-linear contraction given by breakpoints.

    The 1-Lipschitz bound is validated on all consecutive breakpoints; user
    tables may silently violate the contraction property otherwise.  Outside
    the table range the function continues with the boundary values.
    """

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ContractionError("table needs matching 1-d breakpoints, length >= 2")
        if np.any(np.diff(xs) <= 0):
            raise ContractionError("table breakpoints must be strictly increasing")
        if np.any(np.abs(np.diff(ys)) > np.diff(xs)):
            raise ContractionError("table violates the 1-Lipschitz bound")
        self.xs, self.ys = xs, ys

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self.xs, self.ys)

    def describe(self) -> str:
        return f"table({len(self.xs)} breakpoints)"


def apply_contraction(f: Potential, contraction) -> Potential:
    """Pointwise application; the result's energy never exceeds the input's."""
    keys = list(f.values)
    vals = contraction(np.array([f.values[v] for v in keys], dtype=float))
    return Potential(dict(zip(keys, (float(x) for x in vals))))


def slice_decomposition(f: Potential, count: int) -> list[Potential]:
    """Slices (f - n)_+ ∧ 1 for n = 0..count-1; sums back to f ∧ count for f >= 0."""
    return [apply_contraction(f, Slice(n)) for n in range(count)]


# -- norms --------------------------------------------------------------

@dataclass(frozen=True)
class NormReport:
    anchored: float           # sqrt(Q(f) + f(o)^2)
    l2: float | None          # sqrt(sum m f^2)
    sobolev: float | None     # sqrt(Q(f) + sum m f^2)


def l2_norm_sq(graph: WeightedGraph, f: Potential, m: Measure) -> float:
    arr = f.to_array(graph)
    marr = m.to_array(graph)
    return math.fsum((marr * arr * arr).tolist())


def norms(graph: WeightedGraph, f: Potential, base: int,
          m: Measure | None = None) -> NormReport:
    """Anchored, L2 and Sobolev-type norms of f.

    The anchored norm vanishes exactly for f = 0 on a connected graph, which
    makes it a true norm there.
    """
    if base not in graph:
        raise GraphStructureError(f"base vertex {base} not in graph")
    q = energy_value(graph, f)
    anchored = math.sqrt(q + f[base] * f[base])
    if m is None:
        return NormReport(anchored=anchored, l2=None, sobolev=None)
    msq = l2_norm_sq(graph, f, m)
    return NormReport(anchored=anchored, l2=math.sqrt(msq),
                      sobolev=math.sqrt(q + msq))


def sobolev_norm_sq(graph: WeightedGraph, f: Potential, m: Measure) -> float:
    """Q(f) + ||f||_m^2, the quantity minimized by capacities."""
    return energy_value(graph, f) + l2_norm_sq(graph, f, m)
