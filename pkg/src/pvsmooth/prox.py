"""Proximity operators for the nonsmooth families used in the model problems.

Three groups live here:

* pointwise suprema of concave quadratics  f(x) = max_i -|x_i - c_i|^2 on a
  product space, whose prox reduces to a weight vector on the simplex with a
  closed-form solution;
* suprema of affine forms minus a quadratic,
  f(x) = sup_{c in C} <c, A x + b> - sigma |x|^2, whose prox is computed by a
  relaxed fixed-point (Krasnoselskii-Mann) iteration on the weights;
* separable scalar regularizers (MCP, SCAD, Tukey biweight, l1).

All of these are rho-weakly convex; their prox is single-valued whenever the
smoothing parameter satisfies mu < 1/rho.
"""

from __future__ import annotations

import numpy as np

from .core import ProxFunction, matrix_norm_bound, moreau_envelope
from .errors import ContractError, ConvergenceError, DomainError, NumericalError

__all__ = [
    "envelope_by_weights",
    "solve_simplex_weights",
    "simplex_weights_kkt",
    "SupQuadraticFamily",
    "prox_sup_quadratic",
    "SupAffineFamily",
    "prox_sup_affine",
    "simplex_support_max",
    "ScalarRegularizer",
    "prox_l1",
    "prox_mcp",
    "prox_scad",
    "prox_tukey",
    "l1_value",
    "mcp_value",
    "scad_value",
    "tukey_value",
    "envelope_sup_identity_check",
]

_DENOM_GUARD = 1e-12


# ---------------------------------------------------------------------------
# supremum of concave quadratics: weights on the simplex
# ---------------------------------------------------------------------------

def envelope_by_weights(alpha, mu, p):
    """Auxiliary objective  sum_i p_i alpha_i / (2 mu p_i - 1).

    For the sup-of-concave-quadratics family with squared block distances
    ``alpha``, the Moreau envelope equals the maximum of this expression over
    the simplex.  ``p`` may be a single weight vector or a batch of rows.
    """
    alpha = np.asarray(alpha, dtype=float)
    p = np.asarray(p, dtype=float)
    val = (p * alpha / (2.0 * mu * p - 1.0)).sum(axis=-1)
    return float(val) if val.ndim == 0 else val


def solve_simplex_weights(alpha, mu):
    """Maximizing simplex weights for the sup-quadratic prox, in closed form.

    Parameters
    ----------
    alpha : array of positive reals
        Squared distances |x_i - c_i|^2 per block.
    mu : float in (0, 1/2)

    Sort ``alpha`` in decreasing order (ties keep their original order) and
    let T_i be the sum of sqrt(alpha) over the indices *not* among the i
    largest.  The split index is

        k = min { i in {0..N-1} : (N - i - 2 mu) sqrt(alpha_(i+1)) < T_i },

    which always exists because the condition holds at i = N-1.  Weights on
    the k largest blocks vanish; the rest get

        p_i = (1 - (N - k - 2 mu) sqrt(alpha_i) / T_k) / (2 mu).
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise DomainError("alpha must be a nonempty 1-d array")
    if not np.all(alpha > 0):
        raise DomainError("alpha entries must be strictly positive")
    if not (0.0 < mu < 0.5):
        raise DomainError("mu must lie in (0, 1/2)")
    n = alpha.size
    order = np.argsort(-alpha, kind="stable")
    s = np.sqrt(alpha[order])
    # T[i] = sum of s[i:], i.e. sqrt(alpha) over blocks outside the i largest
    tails = np.concatenate([np.cumsum(s[::-1])[::-1], [0.0]])
    idx = np.arange(n)
    cond = (n - idx - 2.0 * mu) * s < tails[idx]
    k = int(np.nonzero(cond)[0][0])
    p = np.zeros(n)
    live = order[k:]
    p[live] = (1.0 - (n - k - 2.0 * mu) * np.sqrt(alpha[live]) / tails[k]) / (2.0 * mu)
    return p


def simplex_weights_kkt(alpha, mu, p):
    """KKT diagnostics for a candidate weight vector.

    Returns a dict with the largest stationarity residual over the support
    (|alpha_i (2 mu p_i - 1)^-2 + tau|), the smallest complementarity
    multiplier eta_i = tau + alpha_i over the zero weights, and the deviation
    of sum(p) from 1.  The multiplier is tau = -T^2 / (m - 2 mu)^2 with T the
    sqrt-alpha mass and m the count of the support.
    """
    alpha = np.asarray(alpha, dtype=float)
    p = np.asarray(p, dtype=float)
    live = p > 0
    m = int(np.count_nonzero(live))
    tail = float(np.sqrt(alpha[live]).sum())
    tau = -(tail * tail) / (m - 2.0 * mu) ** 2
    stat = np.abs(alpha[live] / (2.0 * mu * p[live] - 1.0) ** 2 + tau)
    eta = tau + alpha[~live]
    return {
        "stationarity": float(stat.max(initial=0.0)),
        "min_eta": float(eta.min(initial=0.0)),
        "sum_dev": float(abs(p.sum() - 1.0)),
        "tau": tau,
    }


class SupQuadraticFamily(ProxFunction):
    """f(x) = max_i -|x_i - c_i|^2 on the product of N blocks.

    ``centers`` has shape (N, d); arguments are flat vectors of length N*d.
    The function is 2-weakly convex, so the prox is single valued for
    mu < 1/2.  With alpha_i = |x_i - c_i|^2 and maximizing weights p, the
    prox has blocks (x_i - 2 mu p_i c_i) / (1 - 2 mu p_i).
    """

    rho = 2.0
    lipschitz = None

    def __init__(self, centers):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.centers = centers
        self.n_blocks, self.block_dim = centers.shape

    def _blocks(self, x):
        x = np.asarray(x, dtype=float)
        if x.size != self.centers.size:
            raise ContractError(
                "expected a flat vector of length %d, got %d"
                % (self.centers.size, x.size)
            )
        return x.reshape(self.n_blocks, self.block_dim)

    def alphas(self, x):
        d = self._blocks(x) - self.centers
        return (d * d).sum(axis=1)

    def value(self, x):
        return float(-self.alphas(x).min())

    def weights(self, mu, x):
        """Maximizing simplex weights at x (closed form; no iteration)."""
        self.check_mu(mu)
        alpha = self.alphas(x)
        zero = np.nonzero(alpha == 0.0)[0]
        if zero.size:
            p = np.zeros(self.n_blocks)
            p[zero[0]] = 1.0  # a vanishing distance pins the weight there
            return p
        return solve_simplex_weights(alpha, mu)

    def prox(self, mu, x):
        self.check_mu(mu)
        blocks = self._blocks(x)
        p = self.weights(mu, x)
        denom = 1.0 - 2.0 * mu * p
        if np.any(denom < _DENOM_GUARD):
            raise NumericalError(
                "prox denominators collapsed (min %g)" % float(denom.min())
            )
        out = (blocks - (2.0 * mu) * p[:, None] * self.centers) / denom[:, None]
        return out.ravel()


def prox_sup_quadratic(family, mu, x):
    """Prox of a :class:`SupQuadraticFamily` (closed form)."""
    return family.prox(mu, x)


def envelope_sup_identity_check(family, mu, x):
    """Return (lhs, rhs): the Moreau envelope computed through the prox and
    the same quantity computed as the weight-space maximum.

    The two agree because the envelope of a supremum of concave quadratics
    is the supremum of the weighted envelopes; the caller compares them.
    """
    lhs = moreau_envelope(family, mu, x)
    weights = family.weights(mu, x)
    rhs = envelope_by_weights(family.alphas(x), mu, weights)
    return lhs, float(rhs)


# ---------------------------------------------------------------------------
# supremum of affine forms minus a quadratic: fixed-point iteration
# ---------------------------------------------------------------------------

def simplex_support_max(v):
    """max_{c in simplex} <c, v> = max(v)."""
    return float(np.max(v))


def _ascent_support_max(project, v):
    # generic fallback: maximize the linear form <c, v> over C by projected
    # ascent; fine for the small ambiguity sets used here
    c = project(np.zeros_like(v))
    step = 1.0 / (1.0 + float(np.linalg.norm(v)))
    for _ in range(10000):
        c_next = project(c + step * v)
        if np.linalg.norm(c_next - c) <= 1e-12:
            c = c_next
            break
        c = c_next
    return float(c @ v)


class SupAffineFamily(ProxFunction):
    """f(x) = sup_{c in C} <c, A x + b> - sigma |x|^2.

    Parameters
    ----------
    a_rows : (N, d) array
        Row i is the slope a_i of scenario i.
    offsets : (N,) array
    sigma : float > 0
        Concavity weight; the family is 2*sigma-weakly convex.
    project_ambiguity : callable
        Projector onto the compact convex set C (subset of R^N).
    support_max : callable, optional
        v -> max_{c in C} <c, v>.  Exact evaluation when available (e.g. the
        simplex); otherwise a projected-ascent fallback is used.
    """

    lipschitz = None

    def __init__(self, a_rows, offsets, sigma, project_ambiguity, support_max=None,
                 km_tol=1e-10, km_max_iter=200000):
        a_rows = np.atleast_2d(np.asarray(a_rows, dtype=float))
        offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        if a_rows.shape[0] != offsets.size:
            raise DomainError("a_rows and offsets disagree on the scenario count")
        if not (sigma > 0):
            raise DomainError("sigma must be positive")
        self.a_rows = a_rows
        self.offsets = offsets
        self.sigma = float(sigma)
        self.project_ambiguity = project_ambiguity
        self.support_max = support_max
        self.km_tol = float(km_tol)
        self.km_max_iter = int(km_max_iter)
        self.rho = 2.0 * self.sigma
        self.gram_norm = matrix_norm_bound(a_rows) ** 2  # |A A^T|

    def value(self, x):
        x = np.asarray(x, dtype=float)
        v = self.a_rows @ x + self.offsets
        if self.support_max is not None:
            s = self.support_max(v)
        else:
            s = _ascent_support_max(self.project_ambiguity, v)
        return float(s - self.sigma * (x @ x))

    def prox(self, mu, x):
        y, _, _ = self.prox_detailed(mu, x)
        return y

    def prox_detailed(self, mu, x, gamma=None, relax=None, tol=None, max_iter=None):
        return prox_sup_affine(self, mu, x, gamma=gamma, relax=relax,
                               tol=tol, max_iter=max_iter)


def prox_sup_affine(family, mu, x, gamma=None, relax=None, tol=None, max_iter=None):
    """Prox of a :class:`SupAffineFamily` by the relaxed fixed-point scheme.

    Iterates, with s = 1 - 2 sigma mu and steps gamma, relaxations a_k,

        y_k = (x - mu A^T c_k) / s
        z_k = c_k + gamma (A y_k + b)
        c_{k+1} = a_k P_C(z_k) + (1 - a_k) c_k,

    stopping when |c_{k+1} - c_k| <= tol.  The step must satisfy
    gamma mu |A A^T| / s < 1 so the inner map is nonexpansive; the default is
    0.9 of that limit.  Constant relaxations must lie strictly in (0, 1); a
    callable ``relax`` (iteration -> a_k) is accepted unchecked.

    Returns ``(y, c, iterations)`` where y is the prox point and c the
    worst-case weights.  Raises :class:`ConvergenceError` (carrying the last
    increment and iterate) if the budget runs out.
    """
    family.check_mu(mu)
    x = np.asarray(x, dtype=float)
    tol = family.km_tol if tol is None else float(tol)
    max_iter = family.km_max_iter if max_iter is None else int(max_iter)
    s = 1.0 - 2.0 * family.sigma * mu
    if gamma is None:
        if family.gram_norm > 0.0:
            gamma = 0.9 * s / (mu * family.gram_norm)
        else:
            gamma = 1.0  # A == 0: any step works, the weight map is constant
    else:
        gamma = float(gamma)
        if not (gamma > 0) or gamma * mu * family.gram_norm / s >= 1.0:
            raise DomainError(
                "step gamma=%r violates gamma*mu*|AA^T|/(1-2*sigma*mu) < 1" % gamma
            )
    if relax is None:
        relax_at = lambda k: 0.5
    elif callable(relax):
        relax_at = relax
    else:
        relax = float(relax)
        if not (0.0 < relax < 1.0):
            raise DomainError("constant relaxation must lie in (0, 1)")
        relax_at = lambda k: relax

    a_rows, offsets = family.a_rows, family.offsets
    n = a_rows.shape[0]
    c = family.project_ambiguity(np.full(n, 1.0 / n))
    delta = np.inf
    for it in range(1, max_iter + 1):
        y = (x - mu * (a_rows.T @ c)) / s
        z = c + gamma * (a_rows @ y + offsets)
        a_k = relax_at(it)
        c_next = a_k * family.project_ambiguity(z) + (1.0 - a_k) * c
        delta = float(np.linalg.norm(c_next - c))
        c = c_next
        if delta <= tol:
            y = (x - mu * (a_rows.T @ c)) / s
            return y, c, it
    y = (x - mu * (a_rows.T @ c)) / s
    raise ConvergenceError(
        "weight iteration did not reach tol=%g in %d iterations" % (tol, max_iter),
        residual=delta,
        iterations=max_iter,
        best=(y, c),
    )


# ---------------------------------------------------------------------------
# scalar separable regularizers
# ---------------------------------------------------------------------------

def l1_value(lam, x):
    return float(lam * np.abs(np.asarray(x, dtype=float)).sum())


def prox_l1(lam, gamma, x):
    """Soft threshold at level gamma*lam (componentwise)."""
    if not (lam > 0 and gamma > 0):
        raise DomainError("lam and gamma must be positive")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - gamma * lam, 0.0)


def mcp_value(lam, theta, x):
    x = np.abs(np.asarray(x, dtype=float))
    inner = lam * x - x * x / (2.0 * theta)
    return float(np.where(x <= theta * lam, inner, 0.5 * theta * lam * lam).sum())


def prox_mcp(lam, theta, gamma, x):
    """Firm-threshold prox of the minimax concave penalty.

    Valid for gamma < theta (= 1/rho); zero inside |x| < gamma*lam, identity
    beyond theta*lam, linear interpolation in between.
    """
    if not (lam > 0 and theta > 0):
        raise DomainError("lam and theta must be positive")
    if not (0.0 < gamma < theta):
        raise DomainError("prox step gamma must lie in (0, theta)")
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    mid = np.sign(x) * (ax - gamma * lam) / (1.0 - gamma / theta)
    out = np.where(ax <= gamma * lam, 0.0, np.where(ax <= theta * lam, mid, x))
    return out if out.ndim else float(out)


def scad_value(lam, theta, x):
    x = np.abs(np.asarray(x, dtype=float))
    mid = (2.0 * theta * lam * x - x * x - lam * lam) / (2.0 * (theta - 1.0))
    out = np.where(
        x <= lam, lam * x, np.where(x <= theta * lam, mid, 0.5 * lam * lam * (theta + 1.0))
    )
    return float(out.sum())


def _scad_piece_values(lam, theta, t):
    mid = (2.0 * theta * lam * t - t * t - lam * lam) / (2.0 * (theta - 1.0))
    return np.where(
        t <= lam, lam * t, np.where(t <= theta * lam, mid, 0.5 * lam * lam * (theta + 1.0))
    )


def prox_scad(lam, theta, gamma, x):
    """Prox of the smoothly clipped absolute deviation penalty.

    The penalty has three analytic pieces; each contributes one candidate
    minimizer (clamped into its piece), and the best full objective wins.
    Requires theta > 2 and gamma < theta - 1 (= 1/rho) for a strongly convex
    prox subproblem.
    """
    if not (lam > 0):
        raise DomainError("lam must be positive")
    if not (theta > 2.0):
        raise DomainError("SCAD requires theta > 2")
    if not (0.0 < gamma < theta - 1.0):
        raise DomainError("prox step gamma must lie in (0, theta - 1)")
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    c1 = np.clip(ax - gamma * lam, 0.0, lam)
    c2 = np.clip(((theta - 1.0) * ax - gamma * theta * lam) / (theta - 1.0 - gamma),
                 lam, theta * lam)
    c3 = np.maximum(ax, theta * lam)
    cands = np.stack([c1, c2, c3])
    objs = _scad_piece_values(lam, theta, cands) + (cands - ax) ** 2 / (2.0 * gamma)
    best = cands[objs.argmin(axis=0), np.arange(cands.shape[1])] if x.ndim else \
        cands[objs.argmin(axis=0)]
    out = np.sign(x) * best
    return out if out.ndim else float(out)


def tukey_value(shift, x):
    s = np.asarray(x, dtype=float) - shift
    q = s * s
    return float((q / (1.0 + q)).sum())


def prox_tukey(shift, mu, x, residual_tol=1e-12):
    """Prox of the Tukey biweight penalty t -> (t-b)^2 / (1 + (t-b)^2).

    The penalty is treated as 6-weakly convex, so mu must lie in (0, 1/6);
    the prox subproblem is then strongly convex and its stationarity equation

        (t - x)/mu + 2 (t-b) / (1 + (t-b)^2)^2 = 0

    has a single root, bracketed in [min(x,b)-1, max(x,b)+1] because the
    penalty slope never exceeds 1 in absolute value while the quadratic term
    exceeds 6 at the bracket ends.  Solved by Newton steps safeguarded with
    bisection.  Convergence is measured on the mu-scaled form
    t - x + 2 mu (t-b)/(1+(t-b)^2)^2, which stays O(1); the raw equation
    scales like 1/mu and cannot be driven to a fixed tolerance in double
    precision when mu is tiny.
    """
    if not (0.0 < mu < 1.0 / 6.0):
        raise DomainError("mu must lie in (0, 1/6)")
    x = np.asarray(x, dtype=float)
    b = np.broadcast_to(np.asarray(shift, dtype=float), x.shape).astype(float)

    def psi(t):
        s = t - b
        return (t - x) / mu + 2.0 * s / (1.0 + s * s) ** 2

    lo = np.minimum(x, b) - 1.0
    hi = np.maximum(x, b) + 1.0
    t = x.astype(float).copy()
    for _ in range(200):
        f = psi(t)
        if np.max(mu * np.abs(f)) <= residual_tol:
            break
        lo = np.where(f < 0.0, t, lo)
        hi = np.where(f > 0.0, t, hi)
        s = t - b
        q = s * s
        fp = 1.0 / mu + (2.0 - 6.0 * q) / (1.0 + q) ** 3
        step = t - f / fp
        bad = (step <= lo) | (step >= hi) | ~np.isfinite(step)
        t = np.where(bad, 0.5 * (lo + hi), step)
    else:
        raise ConvergenceError(
            "Tukey prox root-finding stalled",
            residual=float(np.max(mu * np.abs(psi(t)))),
        )
    return t if t.ndim else float(t)


class ScalarRegularizer(ProxFunction):
    """Separable scalar regularizer: one of 'l1', 'mcp', 'scad', 'tukey'.

    * l1: lam * |t|, convex (rho = 0).
    * mcp: minimax concave penalty with shape theta > 0, rho = 1/theta.
    * scad: smoothly clipped absolute deviation, theta > 2, rho = 1/(theta-1).
    * tukey: biweight (t-b)^2/(1+(t-b)^2) with optional per-coordinate shifts
      b; carries no weight, and is treated as 6-weakly convex.

    ``lipschitz`` may be supplied when a global Lipschitz constant of the sum
    is known for the dimension at hand (e.g. lam * sqrt(n) for l1 on R^n).
    """

    def __init__(self, kind, lam=1.0, theta=None, shifts=0.0, lipschitz=None):
        if kind not in ("l1", "mcp", "scad", "tukey"):
            raise DomainError("unknown regularizer kind %r" % (kind,))
        if kind != "tukey" and not (lam > 0):
            raise DomainError("lam must be positive")
        if kind == "mcp":
            if theta is None or not (theta > 0):
                raise DomainError("MCP requires theta > 0")
            self.rho = 1.0 / theta
        elif kind == "scad":
            if theta is None or not (theta > 2.0):
                raise DomainError("SCAD requires theta > 2")
            self.rho = 1.0 / (theta - 1.0)
        elif kind == "tukey":
            self.rho = 6.0
        else:
            self.rho = 0.0
        self.kind = kind
        self.lam = float(lam)
        self.theta = None if theta is None else float(theta)
        self.shifts = np.asarray(shifts, dtype=float)
        self.lipschitz = lipschitz

    def value(self, y):
        if self.kind == "l1":
            return l1_value(self.lam, y)
        if self.kind == "mcp":
            return mcp_value(self.lam, self.theta, y)
        if self.kind == "scad":
            return scad_value(self.lam, self.theta, y)
        return tukey_value(self.shifts, y)

    def prox(self, mu, y):
        self.check_mu(mu)
        y = np.asarray(y, dtype=float)
        if self.kind == "l1":
            return prox_l1(self.lam, mu, y)
        if self.kind == "mcp":
            return prox_mcp(self.lam, self.theta, mu, y)
        if self.kind == "scad":
            return prox_scad(self.lam, self.theta, mu, y)
        return prox_tukey(self.shifts, mu, y)
