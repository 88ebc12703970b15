"""Constrained quadratic minimization over graphs.

Minimizes Q(f) + sum m f^2 subject to prescribed values on a constraint set.
The stationarity system (L + M) f = 0 on the free vertices is symmetric
positive definite whenever the constraint set is nonempty (or m > 0), solved
directly below a size threshold and by diagonally preconditioned conjugate
gradients above it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .graph import Measure, Potential, WeightedGraph

DIRECT_THRESHOLD = 2000


@dataclass(frozen=True)
class SolveInfo:
    method: str
    rel_residual: float
    unknowns: int


def solve_dirichlet(graph: WeightedGraph, fixed: Mapping[int, float],
                    m: Measure | None = None, rtol: float = 1e-10,
                    direct_threshold: int = DIRECT_THRESHOLD) -> tuple[Potential, SolveInfo]:
    """Solve (L + M) f = 0 off the constraint set, f = fixed on it.

    Returns the full potential and solve diagnostics.  Raises SolverError if
    neither the iterative solve nor the direct fallback reaches ``rtol``.
    """
    n = graph.num_vertices
    fixed_idx = np.array(sorted(graph.index_of(v) for v in fixed), dtype=np.int64)
    if len(fixed_idx) != len(fixed):
        raise SolverError("duplicate constraint vertices")
    is_fixed = np.zeros(n, dtype=bool)
    is_fixed[fixed_idx] = True
    vals = np.zeros(n)
    for v, x in fixed.items():
        vals[graph.index_of(v)] = float(x)

    free = ~is_fixed
    nfree = int(free.sum())
    if nfree == 0:
        return Potential.from_array(graph, vals), SolveInfo("trivial", 0.0, 0)
    if len(fixed_idx) == 0 and m is None:
        raise SolverError("unconstrained pure-energy problem is singular")

    A = graph.laplacian()
    if m is not None:
        A = A + sp.diags(m.to_array(graph))
    A = A.tocsr()

    Aff = A[np.ix_(free, free)].tocsr()
    rhs = -A[np.ix_(free, is_fixed)] @ vals[is_fixed] if is_fixed.any() \
        else np.zeros(nfree)

    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        x = np.zeros(nfree)
        method, rel = "trivial", 0.0
    elif nfree < direct_threshold:
        x = spla.spsolve(Aff.tocsc(), rhs)
        method = "direct"
        rel = float(np.linalg.norm(Aff @ x - rhs)) / bnorm
    else:
        diag = Aff.diagonal()
        M = sp.diags(1.0 / np.where(diag > 0, diag, 1.0))
        x, info = spla.cg(Aff, rhs, rtol=rtol, atol=0.0, M=M,
                          maxiter=40 * nfree)
        rel = float(np.linalg.norm(Aff @ x - rhs)) / bnorm
        method = "pcg"
        if info != 0 or rel > rtol:
            x = spla.spsolve(Aff.tocsc(), rhs)
            rel = float(np.linalg.norm(Aff @ x - rhs)) / bnorm
            method = "direct-fallback"

    if rel > rtol:
        raise SolverError(
            f"linear solve stalled at relative residual {rel:.3e} (> {rtol:.1e})")

    out = vals.copy()
    out[free] = x
    return Potential.from_array(graph, out), SolveInfo(method, rel, nfree)
