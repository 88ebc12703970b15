"""Scratch probe 2: Z2 classifier data + hex cesaro schedule."""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from itertools import product
from proto import lattice_ball, eff_cap

pts, idx, A = lattice_ball(2, 129)
print("Z2 ball 129:", len(pts))
caps = []
for r in [8, 16, 32, 64, 128]:
    c, dt, *_ = eff_cap(A, pts, idx, 0, r)
    caps.append(c)
    print(f"  r={r} cap={c:.6f} ({dt:.2f}s)")
caps = np.array(caps)
rel = (caps[:-1] - caps[1:]) / caps[:-1]
print("rel changes:", rel)
r = np.array([8, 16, 32, 64, 128], float)
# fit c/log n
import numpy.linalg as nla
X = 1.0 / np.log(r)
c = (X @ caps) / (X @ X)
rss = np.sum((caps - c * X) ** 2)
print("c/log fit: c=", c, "rss=", rss, "rel_resid=", np.sqrt(rss) / nla.norm(caps))
# fit power law on logs
Am = np.vstack([np.ones_like(r), np.log(r)]).T
sol, res, *_ = nla.lstsq(Am, np.log(caps), rcond=None)
print("power fit alpha=", -sol[1], "rss_log=", res)

# Z1 caps
pts1, idx1, A1 = lattice_ball(1, 129)
caps1 = []
for rr in [8, 16, 32, 64, 128]:
    c1, *_ = eff_cap(A1, pts1, idx1, 0, rr)
    caps1.append(c1)
print("Z1 caps:", caps1)

# --- hex packing cesaro ---
rho = 0.05
s = 2 * rho
centers = []
jmax = int(np.ceil(1.0 / (np.sqrt(3) * rho)))
for j in range(-jmax, jmax + 1):
    y = j * np.sqrt(3) * rho
    off = rho if (j % 2 != 0) else 0.0
    imax = int(np.ceil(1.0 / s)) + 2
    for i in range(-imax, imax + 1):
        x = i * s + off
        if np.hypot(x, y) <= 1 - rho:
            centers.append((j, i, x, y))
centers.sort()
C = np.array([(x, y) for (_, _, x, y) in centers])
n = len(C)
print("hex count:", n)
D = np.sqrt(((C[:, None, :] - C[None, :, :]) ** 2).sum(-1))
tol = 1e-9 * rho
adj = (np.abs(D - 2 * rho) <= tol) & ~np.eye(n, dtype=bool)
print("max degree:", adj.sum(1).max())
# m_sigma
sigma2 = D ** 2
m = 0.5 * (adj * sigma2).sum(1)
mX = m.sum()
print("m(X):", mX)
w = np.array([1.0, 0.0])
dw = np.sqrt(((C - w) ** 2).sum(1))
print("nearest center to (1,0):", dw.min())

def bump(r):
    return np.clip(2 - dw / r, 0, 1)

def Q(f):
    diff = f[:, None] - f[None, :]
    return 0.5 * (adj * diff ** 2).sum()

def try_schedule(r1, q, N=8):
    scales = r1 * q ** np.arange(N)
    fs = [bump(r) for r in scales]
    Qs = [Q(f) for f in fs]
    ms = [float((m * f * f).sum()) for f in fs]
    ces = []
    ok = True
    for nn in range(1, N + 1):
        g = np.mean(fs[:nn], axis=0)
        ball = dw <= scales[nn - 1]
        if not ball.any():
            ok = False
            break
        mu = g[ball].min()
        val = (Q(g) + (m * g * g).sum()) / mu ** 2
        ces.append(val)
    print(f"r1={r1} q={q}: scales[{scales[0]:.3f}..{scales[-1]:.4f}]")
    print("  Q(f_k):", np.round(Qs, 4), "ratio", max(Qs) / max(min(Qs), 1e-300) if min(Qs) > 0 else np.inf)
    print("  |f|_m^2:", np.round(ms, 4))
    if ok:
        print("  cesaro:", np.round(ces, 4), " final/first =", ces[-1] / ces[0])
    else:
        print("  truncated (empty innermost ball)")

for (r1, q) in [(0.9, 0.73), (0.8, 0.75), (1.0, 0.7), (0.8, 0.7), (1.2, 0.7), (0.64, 0.8)]:
    try_schedule(r1, q)
