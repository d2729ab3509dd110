"""Slow, independent reference computations used to cross-check the fast
paths: grid/refinement prox search, finite-difference gradients, simplex
scanning, a long-run solver for the convex constrained-lasso case, and
random search for the dispersion problems.

These deliberately avoid the package's closed forms and iterations; where a
projector or threshold is needed it is recomputed here from first
principles (SVD null spaces, plain soft-thresholds) so that agreement is
evidence, not circularity.  They ship in the library (not the test tree)
because the command line exposes them through ``verify``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DomainError

__all__ = [
    "GridSpec",
    "brute_force_prox",
    "fd_gradient",
    "simplex_scan_max",
    "reference_constrained_lasso",
    "random_search_dispersion",
    "affine_scan_prox",
]


@dataclass(frozen=True)
class GridSpec:
    """Search box [lower, upper]^d, initial step, and refinement passes.

    Each refinement pass halves the local-mesh spacing, so the default 12
    passes end at step/4096 <= step * 1e-3.
    """

    lower: float
    upper: float
    step: float
    refine_passes: int = 12

    def __post_init__(self):
        if not (self.upper > self.lower):
            raise DomainError("upper must exceed lower")
        if not (0 < self.step <= self.upper - self.lower):
            raise DomainError("step must be positive and fit the box")


def _evaluate(value_fn, batch_value, points):
    if batch_value is not None:
        return np.asarray(batch_value(points), dtype=float)
    return np.array([value_fn(p) for p in points], dtype=float)


def brute_force_prox(value_fn, mu, x, grid, batch_value=None):
    """Grid-plus-refinement argmin of g(y) + |y - x|^2 / (2 mu).

    Dimensions above 3 are refused.  ``batch_value`` may evaluate g on an
    (M, d) stack of points at once; otherwise ``value_fn`` is called
    pointwise.  The coarse grid localizes the minimizer, then each
    refinement pass re-grids a small box around the incumbent at half the
    spacing (a full local mesh, so kinks and ridges of max-type objectives
    cannot stall it the way single-coordinate moves can), ending at a
    resolution of ``grid.step / 2**grid.refine_passes``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    if d > 3:
        raise CapabilityError("brute-force prox supports at most 3 dimensions")

    def total(points):
        diff = points - x
        return _evaluate(value_fn, batch_value, points) + (
            (diff * diff).sum(axis=1) / (2.0 * mu)
        )

    axis = np.arange(grid.lower, grid.upper + 0.5 * grid.step, grid.step)
    y = None
    y_val = np.inf
    # evaluate the coarse grid in slabs along the first axis so large
    # 3-d grids stay within a few MB of working memory
    slab = max(1, int(2e6 // max(1, axis.size ** (d - 1))))
    tail = np.stack(
        np.meshgrid(*([axis] * (d - 1)), indexing="ij"), axis=-1
    ).reshape(-1, d - 1) if d > 1 else np.zeros((1, 0))
    for start in range(0, axis.size, slab):
        head = axis[start:start + slab]
        mesh = np.concatenate(
            [
                np.repeat(head, tail.shape[0])[:, None],
                np.tile(tail, (head.size, 1)),
            ],
            axis=1,
        )
        vals = total(mesh)
        best = int(np.argmin(vals))
        if vals[best] < y_val:
            y = mesh[best].copy()
            y_val = float(vals[best])

    local = np.arange(-3, 4, dtype=float)  # +-1.5 steps at half-spacing
    step = grid.step
    for _ in range(int(grid.refine_passes)):
        step /= 2.0
        offs = np.stack(
            np.meshgrid(*([local * step] * d), indexing="ij"), axis=-1
        ).reshape(-1, d)
        cands = np.clip(y[None, :] + offs, grid.lower, grid.upper)
        cvals = total(cands)
        q = int(np.argmin(cvals))
        if cvals[q] < y_val:
            y = cands[q].copy()
            y_val = float(cvals[q])
    return y


def fd_gradient(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return out


def _barycentric_grid(n, subdivisions):
    m = int(subdivisions)
    if n == 1:
        return np.ones((1, 1))
    rng = np.arange(m + 1)
    if n == 2:
        i = rng
        pts = np.stack([i, m - i], axis=1)
    elif n == 3:
        i, j = np.meshgrid(rng, rng, indexing="ij")
        keep = i + j <= m
        i, j = i[keep], j[keep]
        pts = np.stack([i, j, m - i - j], axis=1)
    else:
        i, j, k = np.meshgrid(rng, rng, rng, indexing="ij")
        keep = i + j + k <= m
        i, j, k = i[keep], j[keep], k[keep]
        pts = np.stack([i, j, k, m - i - j - k], axis=1)
    return pts / float(m)


def simplex_scan_max(objective, n, resolution):
    """Argmax of a batch-evaluable objective over the probability simplex.

    Scans the barycentric grid with spacing ``resolution`` (n <= 4), then
    polishes by pattern search along the edge directions e_i - e_j with a
    step shrinking from the grid spacing down to 1e-9.  Returns (p, value).
    """
    if n > 4:
        raise CapabilityError("simplex scan supports at most 4 weights")
    if not (0 < resolution <= 1):
        raise DomainError("resolution must lie in (0, 1]")
    grid = _barycentric_grid(n, max(1, round(1.0 / resolution)))
    vals = np.asarray(objective(grid), dtype=float)
    best = int(np.argmax(vals))
    p = grid[best].copy()
    p_val = float(vals[best])

    dirs = []
    for i in range(n):
        for j in range(n):
            if i != j:
                d = np.zeros(n)
                d[i], d[j] = 1.0, -1.0
                dirs.append(d)
    dirs = np.array(dirs) if dirs else np.zeros((0, n))
    step = float(resolution)
    while step > 1e-9 and dirs.size:
        cands = p[None, :] + step * dirs
        feasible = np.all(cands >= 0.0, axis=1)
        if np.any(feasible):
            cands = cands[feasible]
            cvals = np.asarray(objective(cands), dtype=float)
            q = int(np.argmax(cvals))
            if cvals[q] > p_val:
                p = cands[q].copy()
                p_val = float(cvals[q])
                continue
        step /= 2.0
    return p, p_val


def affine_scan_prox(a_rows, offsets, sigma, mu, x, t_step=1e-4):
    """Two-scenario prox reference by scanning weights c = (t, 1-t).

    Evaluates the smoothed value of each weighted scenario objective,
    f_c(y) = <c, A y + b> - sigma |y|^2, at its own prox point
    y_c = (x - mu A^T c) / (1 - 2 sigma mu), and returns the y_c of the
    maximizing t together with (t, value).  The scalar map t -> value is
    concave, so the coarse scan is polished by bisection on shrinking
    brackets down to width 1e-12.  Only N = 2 is supported.
    """
    a_rows = np.atleast_2d(np.asarray(a_rows, dtype=float))
    offsets = np.asarray(offsets, dtype=float)
    if a_rows.shape[0] != 2:
        raise CapabilityError("weight scan needs exactly two scenarios")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = 1.0 - 2.0 * sigma * mu

    def batch(ts):
        cs = np.stack([ts, 1.0 - ts], axis=1)  # (M, 2)
        ys = (x[None, :] - mu * (cs @ a_rows)) / s  # (M, d)
        lin = (cs * (ys @ a_rows.T + offsets[None, :])).sum(axis=1)
        f_c = lin - sigma * (ys * ys).sum(axis=1)
        return ys, f_c + ((ys - x[None, :]) ** 2).sum(axis=1) / (2.0 * mu)

    ts = np.arange(0.0, 1.0 + 0.5 * t_step, t_step)
    _, envel = batch(ts)
    best = int(np.argmax(envel))
    lo = ts[max(best - 1, 0)]
    hi = ts[min(best + 1, ts.size - 1)]
    while hi - lo > 1e-12:
        probes = np.linspace(lo, hi, 7)
        _, vals = batch(probes)
        j = int(np.argmax(vals))
        lo = probes[max(j - 1, 0)]
        hi = probes[min(j + 1, probes.size - 1)]
    t = 0.5 * (lo + hi)
    ys, vals = batch(np.array([t]))
    return ys[0], float(t), float(vals[0])


def _null_space_basis(matrix, dim):
    if matrix is None:
        return np.eye(dim)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    _, sv, vt = np.linalg.svd(matrix)
    rank = int(np.sum(sv > 1e-12 * (sv[0] if sv.size else 1.0)))
    return vt[rank:].T  # columns span ker(matrix)


def reference_constrained_lasso(design, target, lam_reg, constraint_matrix=None,
                                total_iters=1_000_000):
    """High-accuracy reference for  min_{x in ker R} |Bx - b|^2 + lam |x|_1.

    Forward-backward iteration with the *exact* prox of the nonsmooth sum
    lam |.|_1 + indicator(ker R), evaluated by an inner alternating scheme
    with correction terms (soft-threshold vs. null-space projection).  The
    problem is convex, the smooth part has Lipschitz gradient 2 |B|^2
    (computed here by exact SVD), and the composite step converges; inner
    iterations count toward the ``total_iters`` budget.

    Returns (x, objective_value).
    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    target = np.asarray(target, dtype=float)
    n = design.shape[1]
    basis = _null_space_basis(constraint_matrix, n)
    proj = basis @ basis.T  # orthogonal projector onto ker R

    lip = 2.0 * float(np.linalg.norm(design, 2)) ** 2
    gamma = 0.9 / lip
    thresh = gamma * lam_reg

    def prox_sum(v):
        # Dykstra-style alternation between the soft-threshold prox and the
        # subspace projection; exact for this convex pair.
        z = v.copy()
        p = np.zeros_like(v)
        q = np.zeros_like(v)
        used = 0
        for _ in range(2000):
            w = z + p
            y = np.sign(w) * np.maximum(np.abs(w) - thresh, 0.0)
            p = w - y
            z_next = proj @ (y + q)
            q = y + q - z_next
            used += 1
            if np.linalg.norm(z_next - z) <= 1e-15:
                z = z_next
                break
            z = z_next
        return z, used

    x = np.zeros(n)
    spent = 0
    while spent < total_iters:
        grad = 2.0 * (design.T @ (design @ x - target))
        x, inner = prox_sum(x - gamma * grad)
        spent += 1 + inner
    val = float(np.sum((design @ x - target) ** 2) + lam_reg * np.abs(x).sum())
    return x, val


def random_search_dispersion(anchors, radius, lam, constraint_matrix, samples, seed):
    """Random-search reference for the penalized dispersion problem.

    Draws ``samples`` points uniformly from the ball of the constraint
    subspace (radius ``radius``) and returns the best point and value of

        (lam/2) max(|x| - r, 0)^2 + max_i -|x - u_i|^2,

    which reduces to -min_i |x - u_i|^2 on the feasible ball.
    """
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    dim = anchors.shape[1]
    basis = _null_space_basis(constraint_matrix, dim)
    sub_dim = basis.shape[1]
    if sub_dim == 0:
        x = np.zeros(dim)
        d = anchors - x
        return x, float(-(d * d).sum(axis=1).min())
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((int(samples), sub_dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    radii = radius * rng.random(int(samples)) ** (1.0 / sub_dim)
    pts = (z * radii[:, None]) @ basis.T  # inside the ball, inside ker R
    d2 = ((pts[:, None, :] - anchors[None, :, :]) ** 2).sum(axis=2)
    vals = -d2.min(axis=1)
    best = int(np.argmin(vals))
    return pts[best], float(vals[best])
