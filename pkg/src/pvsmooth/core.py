"""Core abstractions: prox-capable functions, smooth terms, linear maps,
subspace projectors, and the composite problem bundle.

The problem solved throughout the package is

    minimize_{x in V}  h(x) + g(A x)

with h smooth (Lipschitz gradient), g rho-weakly convex and prox-friendly,
A a bounded linear map and V a closed subspace.  Smoothing replaces g by its
Moreau envelope g_mu, which is differentiable for mu < 1/rho with

    g_mu(x)      = min_y g(y) + |x - y|^2 / (2 mu)
    grad g_mu(x) = (x - prox_{mu g}(x)) / mu.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, DomainError, NumericalError

__all__ = [
    "ProxFunction",
    "SmoothFunction",
    "LinearMap",
    "SubspaceProjector",
    "CompositeProblem",
    "ZeroFunction",
    "ScaledSquaredNorm",
    "CallableProx",
    "ZeroSmooth",
    "CallableSmooth",
    "IdentityMap",
    "MatrixMap",
    "IdentityProjector",
    "matrix_norm_bound",
    "moreau_envelope",
    "moreau_gradient",
    "smoothed_objective_grad",
]

_POWER_ITERS = 100
_POWER_TOL = 1e-10
_POWER_INFLATE = 1.01
_POWER_SEED = 0x5EED


def matrix_norm_bound(mat):
    """Upper bound on the spectral norm of ``mat``.

    Runs power iteration on ``mat.T @ mat`` (100 iterations, tolerance 1e-10
    on the Rayleigh quotient) and inflates the estimate by 1%.  The solver
    only needs an upper bound on |A|, so the slight overestimate is safe; it
    just makes step sizes marginally conservative.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise ContractError("expected a 2-d array, got shape %r" % (mat.shape,))
    gram = mat.T @ mat
    n = gram.shape[0]
    rng = np.random.default_rng(_POWER_SEED)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(_POWER_ITERS):
        w = gram @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v_next = w / nw
        lam_next = float(v_next @ (gram @ v_next))
        if abs(lam_next - lam) <= _POWER_TOL * max(1.0, abs(lam_next)):
            lam = lam_next
            break
        v, lam = v_next, lam_next
    return float(np.sqrt(max(lam, 0.0)) * _POWER_INFLATE)


class ProxFunction:
    """A function g with an implementable proximity operator.

    Attributes
    ----------
    rho : float
        Weak-convexity modulus (g + rho/2 |.|^2 is convex); 0 means convex.
    lipschitz : float or None
        Global Lipschitz constant L_g of g when available, else None.
    mu_max : float
        Supremum of admissible smoothing parameters (1/rho, inf if rho == 0).
    """

    rho = 0.0
    lipschitz = None

    @property
    def mu_max(self):
        return np.inf if self.rho == 0.0 else 1.0 / self.rho

    def value(self, y):
        raise NotImplementedError

    def prox(self, mu, y):
        raise NotImplementedError

    def check_mu(self, mu):
        """Raise DomainError unless 0 < mu < mu_max."""
        if not (0.0 < mu < self.mu_max):
            raise DomainError(
                "smoothing parameter mu=%r outside (0, %r)" % (mu, self.mu_max)
            )


class ZeroFunction(ProxFunction):
    """g == 0; prox is the identity."""

    rho = 0.0
    lipschitz = 0.0

    def value(self, y):
        return 0.0

    def prox(self, mu, y):
        self.check_mu(mu)
        return np.asarray(y, dtype=float)


class ScaledSquaredNorm(ProxFunction):
    """g(y) = w |y|^2 for w > 0; prox(mu, y) = y / (1 + 2 w mu)."""

    rho = 0.0

    def __init__(self, weight=1.0):
        if weight <= 0:
            raise DomainError("weight must be positive")
        self.weight = float(weight)

    def value(self, y):
        y = np.asarray(y, dtype=float)
        return self.weight * float(y @ y)

    def prox(self, mu, y):
        self.check_mu(mu)
        return np.asarray(y, dtype=float) / (1.0 + 2.0 * self.weight * mu)


class CallableProx(ProxFunction):
    """Wrap plain callables (value, prox) as a ProxFunction."""

    def __init__(self, value_fn, prox_fn, rho=0.0, lipschitz=None, mu_max=None):
        self._value = value_fn
        self._prox = prox_fn
        self.rho = float(rho)
        self.lipschitz = lipschitz
        self._mu_max = mu_max

    @property
    def mu_max(self):
        if self._mu_max is not None:
            return self._mu_max
        return np.inf if self.rho == 0.0 else 1.0 / self.rho

    def value(self, y):
        return float(self._value(y))

    def prox(self, mu, y):
        self.check_mu(mu)
        return np.asarray(self._prox(mu, y), dtype=float)


class SmoothFunction:
    """A differentiable term h with Lipschitz-continuous gradient."""

    lip_grad = 0.0

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError


class ZeroSmooth(SmoothFunction):
    lip_grad = 0.0

    def value(self, x):
        return 0.0

    def grad(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


class CallableSmooth(SmoothFunction):
    def __init__(self, value_fn, grad_fn, lip_grad):
        self._value = value_fn
        self._grad = grad_fn
        self.lip_grad = float(lip_grad)

    def value(self, x):
        return float(self._value(x))

    def grad(self, x):
        return np.asarray(self._grad(x), dtype=float)


class LinearMap:
    """Bounded linear map with adjoint and a known norm upper bound."""

    norm_bound = 1.0

    def apply(self, x):
        raise NotImplementedError

    def adjoint(self, y):
        raise NotImplementedError


class IdentityMap(LinearMap):
    norm_bound = 1.0

    def apply(self, x):
        return np.asarray(x, dtype=float)

    def adjoint(self, y):
        return np.asarray(y, dtype=float)


class MatrixMap(LinearMap):
    """Linear map given by a dense matrix; norm bound via power iteration."""

    def __init__(self, mat):
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2:
            raise ContractError("matrix map needs a 2-d array")
        if not np.any(mat):
            raise DomainError("matrix map must be nonzero")
        self.mat = mat
        self.norm_bound = matrix_norm_bound(mat)

    def apply(self, x):
        return self.mat @ np.asarray(x, dtype=float)

    def adjoint(self, y):
        return self.mat.T @ np.asarray(y, dtype=float)


class SubspaceProjector:
    """Orthogonal projector onto a closed subspace."""

    def apply(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.apply(x)


class IdentityProjector(SubspaceProjector):
    """Projector for V = whole space."""

    def apply(self, x):
        return np.asarray(x, dtype=float)


def moreau_envelope(g, mu, x):
    """Moreau envelope g_mu(x) = g(p) + |x - p|^2 / (2 mu), p = prox_{mu g}(x).

    Requires 0 < mu < g.mu_max so the inner problem is strongly convex and
    the prox point is unique.
    """
    g.check_mu(mu)
    x = np.asarray(x, dtype=float)
    p = g.prox(mu, x)
    d = x - p
    return float(g.value(p) + (d @ d) / (2.0 * mu))


def moreau_gradient(g, mu, x):
    """Gradient of the Moreau envelope: (x - prox_{mu g}(x)) / mu."""
    g.check_mu(mu)
    x = np.asarray(x, dtype=float)
    return (x - g.prox(mu, x)) / mu


class CompositeProblem:
    """Bundle (h, g, A, V) for  min_{x in V} h(x) + g(A x).

    Parameters
    ----------
    h : SmoothFunction
    g : ProxFunction
    a_map : LinearMap
    subspace : SubspaceProjector
    f_star : float, optional
        Known lower bound on the smoothed objective values, used by the
        stationarity bound diagnostics.  When absent those diagnostics fall
        back to the observed minimum and are flagged as heuristic.
    dim : int, optional
        Ambient dimension, when known; enables an early shape check.
    """

    def __init__(self, h, g, a_map, subspace, f_star=None, dim=None):
        self.h = h
        self.g = g
        self.a_map = a_map
        self.subspace = subspace
        self.f_star = f_star
        self.dim = dim
        if dim is not None:
            probe = np.zeros(int(dim))
            try:
                out = self.a_map.apply(probe)
                self.subspace.apply(probe)
                self.g.prox(min(1.0, 0.5 * g.mu_max), np.asarray(out, dtype=float))
            except (ValueError, IndexError) as exc:  # re-raise with context
                raise ContractError(
                    "problem components disagree on dimension %d: %s" % (dim, exc)
                ) from exc

    def objective(self, x):
        """The original (unsmoothed) objective h(x) + g(A x)."""
        x = np.asarray(x, dtype=float)
        return float(self.h.value(x) + self.g.value(self.a_map.apply(x)))

    def smoothed_parts(self, mu, x):
        """Return (F_mu(x), grad F_mu(x), |Ax - prox_{mu g}(Ax)|).

        One prox evaluation serves the value, the gradient and the prox
        residual.
        """
        self.g.check_mu(mu)
        x = np.asarray(x, dtype=float)
        ax = self.a_map.apply(x)
        p = self.g.prox(mu, ax)
        d = ax - p
        env = self.g.value(p) + (d @ d) / (2.0 * mu)
        val = float(self.h.value(x) + env)
        grad = self.h.grad(x) + self.a_map.adjoint(d / mu)
        res = float(np.linalg.norm(d))
        return val, grad, res


def smoothed_objective_grad(problem, mu, x):
    """Value and gradient of F_mu(x) = h(x) + g_mu(A x).

    Returns
    -------
    (float, ndarray)
        F_mu(x) and grad F_mu(x) = grad h(x) + A* grad g_mu(A x).
    """
    val, grad, _ = problem.smoothed_parts(mu, x)
    if not np.isfinite(val) or not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite smoothed objective at mu=%r" % (mu,))
    return val, grad
