"""Projections onto the sets used by the solver and the model problems:
Euclidean balls, the probability simplex, kernels of constraint matrices,
the replicated-block diagonal, products of blocks, and intersections via
Dykstra's alternating scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SubspaceProjector
from .errors import ConvergenceError, DomainError

__all__ = [
    "BallSpec",
    "project_ball",
    "project_simplex",
    "KernelProjector",
    "build_kernel_projector",
    "project_diagonal",
    "project_product",
    "dykstra_project",
    "DiagonalProjector",
    "ProductKernelProjector",
    "ReplicatedKernelProjector",
]

_SVD_CUTOFF = 1e-12


@dataclass(frozen=True)
class BallSpec:
    """Closed Euclidean ball |x - center| <= radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not (self.radius > 0):
            raise DomainError("ball radius must be positive")


def project_ball(spec, x):
    """Project x onto the ball; interior points are returned unchanged."""
    x = np.asarray(x, dtype=float)
    d = x - spec.center
    nd = np.linalg.norm(d)
    if nd <= spec.radius:
        return x.copy()
    return spec.center + d * (spec.radius / nd)


def project_simplex(x):
    """Project onto the probability simplex {p >= 0, sum p = 1}.

    Sort-and-threshold: with u the coordinates sorted in decreasing order,
    find the largest j with u_j - (cumsum(u)_j - 1)/j > 0 and shift by that
    threshold.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("expected a nonempty 1-d array")
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, x.size + 1)
    rho = np.nonzero(u * j > css)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(x - tau, 0.0)


class KernelProjector(SubspaceProjector):
    """Orthogonal projector onto ker(R), built as P = I - pinv(R) R.

    The pseudoinverse uses an SVD with singular values below
    1e-12 * sigma_max treated as zero, so rank-deficient R is handled.
    """

    def __init__(self, R):
        R = np.atleast_2d(np.asarray(R, dtype=float))
        if not np.any(R):
            raise DomainError("constraint matrix R must be nonzero")
        self.R = R
        n = R.shape[1]
        self.matrix = np.eye(n) - np.linalg.pinv(R, rcond=_SVD_CUTOFF) @ R
        self.dim = n

    def apply(self, x):
        return self.matrix @ np.asarray(x, dtype=float)


def build_kernel_projector(R):
    """Projector onto the kernel of the constraint matrix R."""
    return KernelProjector(R)


def project_diagonal(x, n_blocks):
    """Project a stacked vector onto the diagonal {(v, v, ..., v)}.

    ``x`` is flat of length n_blocks * d; each block is replaced by the
    blockwise mean.
    """
    x = np.asarray(x, dtype=float)
    if x.size % n_blocks:
        raise DomainError("length %d not divisible by %d blocks" % (x.size, n_blocks))
    blocks = x.reshape(n_blocks, -1)
    return np.tile(blocks.mean(axis=0), n_blocks)


class DiagonalProjector(SubspaceProjector):
    """Projector form of :func:`project_diagonal` for a fixed block count."""

    def __init__(self, n_blocks):
        self.n_blocks = int(n_blocks)

    def apply(self, x):
        return project_diagonal(x, self.n_blocks)


def project_product(projectors, blocks):
    """Apply a projector per block row of ``blocks`` (shape (N, d))."""
    blocks = np.asarray(blocks, dtype=float)
    if blocks.ndim != 2 or blocks.shape[0] != len(projectors):
        raise DomainError(
            "blocks must be (N, d) with one row per projector; got %r" % (blocks.shape,)
        )
    return np.stack([proj(row) for proj, row in zip(projectors, blocks)])


class ProductKernelProjector(SubspaceProjector):
    """Projector onto V^N (same kernel projector applied blockwise) for flat
    vectors of length N * d."""

    def __init__(self, kernel_projector, n_blocks):
        self.kernel = kernel_projector
        self.n_blocks = int(n_blocks)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        blocks = x.reshape(self.n_blocks, -1)
        return (blocks @ self.kernel.matrix.T).ravel()


class ReplicatedKernelProjector(SubspaceProjector):
    """Closed-form projector onto V^N intersected with the diagonal.

    The intersection is {(v, ..., v) : v in V}, so the projection replicates
    P_V applied to the blockwise mean.  Dykstra applied to (V^N, diagonal)
    converges to the same point and is kept around as a cross-check only.
    """

    def __init__(self, kernel_projector, n_blocks):
        self.kernel = kernel_projector
        self.n_blocks = int(n_blocks)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        mean = x.reshape(self.n_blocks, -1).mean(axis=0)
        return np.tile(self.kernel.apply(mean), self.n_blocks)


def dykstra_project(proj_a, proj_b, x, tol=1e-12, max_iter=10000):
    """Project onto the intersection of two closed convex sets.

    Dykstra's scheme with correction terms; plain alternating projections
    would converge to a point of the intersection but not to the projection
    of ``x``.  Stops when, within one sweep, the two half-projections agree
    to within ``tol`` -- equivalently, when the increments of both correction
    terms are below ``tol``.  (Testing only successive iterates can stall at
    a vertex of a polyhedral set while the corrections are still moving.)
    The gap also bounds the distance of the result to each set.  Raises
    :class:`ConvergenceError` carrying the last gap otherwise.
    """
    x = np.asarray(x, dtype=float)
    z = x.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for it in range(int(max_iter)):
        y = proj_a(z + p)
        gap_a = float(np.linalg.norm(z - y))
        p = z + p - y
        z_next = proj_b(y + q)
        q = y + q - z_next
        delta = max(gap_a, float(np.linalg.norm(y - z_next)))
        z = z_next
        if delta <= tol:
            return z
    raise ConvergenceError(
        "Dykstra did not reach tol=%g in %d iterations" % (tol, max_iter),
        residual=delta,
        iterations=int(max_iter),
        best=z,
    )
