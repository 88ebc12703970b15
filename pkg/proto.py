"""Scratch feasibility probe (deleted before finishing)."""
import time
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from itertools import product


def lattice_ball(d, R):
    pts = []
    rng = range(-R, R + 1)
    for p in product(rng, repeat=d):
        if sum(abs(c) for c in p) <= R:
            pts.append(p)
    pts.sort()
    idx = {p: i for i, p in enumerate(pts)}
    rows, cols = [], []
    for p, i in idx.items():
        for k in range(d):
            q = list(p)
            q[k] += 1
            j = idx.get(tuple(q))
            if j is not None:
                rows += [i, j]
                cols += [j, i]
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(pts), len(pts)))
    return pts, idx, A


def eff_cap(A, pts, idx, r_ball, R_ground):
    # U = {origin}, ground = vertices with |p|_1 == R_ground, domain |p|_1 <= R_ground
    n = A.shape[0]
    l1 = np.array([sum(abs(c) for c in p) for p in pts])
    keep = l1 <= R_ground
    ground = l1 == R_ground
    src = l1 == 0
    free = keep & ~ground & ~src
    deg = np.asarray(A.sum(axis=1)).ravel()
    L = sp.diags(deg) - A
    f = np.zeros(n)
    f[src] = 1.0
    Lff = L[np.ix_(free, free)].tocsr()
    rhs = -L[np.ix_(free, ~free)] @ f[~free]
    t0 = time.time()
    x = spla.spsolve(Lff.tocsc(), rhs)
    t1 = time.time()
    f[free] = x
    # energy restricted to kept domain: edges with both endpoints kept
    Akeep = A[np.ix_(keep, keep)]
    fk = f[keep]
    coo = Akeep.tocoo()
    终 = 0.5 * np.sum(coo.data * (fk[coo.row] - fk[coo.col]) ** 2)
    return 终, t1 - t0, f, keep, ground, src


for d, Rs in [(3, [8, 12, 16, 24])]:
    pts, idx, A = lattice_ball(d, max(Rs))
    print(d, "ball size", len(pts))
    caps = []
    for r in Rs:
        c, dt, f, keep, ground, src = eff_cap(A, pts, idx, 0, r)
        caps.append(c)
        print(f"  r={r} cap={c:.6f} solve={dt:.2f}s")
    caps = np.array(caps)
    rel = (caps[:-1] - caps[1:]) / caps[:-1]
    print("  rel changes:", rel)
    # flow bound from harmonic flow at final level
    coo = A.tocoo()
    mask = keep[coo.row] & keep[coo.col]
    theta = coo.data[mask] * (f[coo.row[mask]] - f[coo.col[mask]])
    # flux out of origin
    orig = np.where(src)[0][0]
    sel = coo.row[mask] == orig
    flux = np.sum(theta[sel])
    energy = 0.5 * np.sum(theta ** 2 / coo.data[mask])
    print("  flux", flux, "bound", flux**2 / energy, "ratio", (flux**2 / energy) / caps[-1])
