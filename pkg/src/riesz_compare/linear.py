"""Sample Riesz-loss and Rayleigh-quotient problems over linear sieves.

All solvers work on the empirical Gram ``G = Phi^T Phi / n`` and moment
vector ``L`` (see ``basis.gram`` and ``functional.basis_moments``):

* Riesz loss: minimize ``theta' G theta - 2 theta' L`` (+ ridge or lasso).
* Rayleigh quotient: maximize ``(theta' L)^2 / theta' G theta``.  Only a
  direction is identified; the returned solution is always rescaled to
  ``theta = (u' L) u`` with ``u' G u = 1``, the scale at which
  ``theta' G theta`` equals the maximized quotient.

Without a penalty, or with a ridge penalty added to ``G`` on both sides, the
two problems give the same ``theta``.  With an l1 penalty they do not.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import DegenerateColumnError, DegenerateFunctionalError, NumericError, ShapeError

RIESZ_LOSS = "riesz-loss"
RAYLEIGH = "rayleigh"

LASSO_TOL = 1e-10
LASSO_MAX_SWEEPS = 10_000
RAYLEIGH_L1_STEP = 1e-2
RAYLEIGH_L1_MAX_ITER = 5_000
RAYLEIGH_L1_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LinearRieszFit:
    theta: NDArray
    l2_penalty: float
    l1_penalty: float
    objective_kind: str
    objective_value: float
    gnorm_sq: float
    used_min_norm: bool
    iterations: int
    direction: Optional[NDArray] = None

    def predict(self, features) -> NDArray:
        phi = getattr(features, "values", features)
        return np.asarray(phi) @ self.theta

    def to_dict(self) -> dict:
        out = asdict(self)
        out["theta"] = self.theta.tolist()
        out["direction"] = None if self.direction is None else self.direction.tolist()
        return out


@dataclass(frozen=True)
class EquivalenceReport:
    max_abs_diff: float
    max_rel_diff: float
    settings: str = ""


def _arrays(gram, moments):
    G = np.asarray(getattr(gram, "values", gram), dtype=float)
    L = np.asarray(getattr(moments, "values", moments), dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or L.shape != (G.shape[0],):
        raise ShapeError(f"Gram {G.shape} and moments {L.shape} are incompatible")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(L))):
        raise NumericError("non-finite Gram or moment entries")
    return G, L


def _pinv(G: NDArray) -> NDArray:
    d = G.shape[0]
    return np.linalg.pinv(G, rcond=d * np.finfo(float).eps, hermitian=True)


def is_singular(G: NDArray) -> bool:
    """Numerical rank test with cutoff ``d * eps * sigma_max``."""
    s = np.linalg.svd(G, compute_uv=False)
    return s.size == 0 or s[-1] <= G.shape[0] * np.finfo(float).eps * s[0]


def _spd_solve(A: NDArray, b: NDArray) -> Optional[NDArray]:
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return None
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def riesz_objective(G: NDArray, L: NDArray, theta: NDArray, l2: float = 0.0, l1: float = 0.0) -> float:
    return float(theta @ G @ theta - 2.0 * theta @ L + l2 * theta @ theta + l1 * np.abs(theta).sum())


def _riesz_fit(G, L, theta, l2, l1, min_norm, iterations) -> LinearRieszFit:
    return LinearRieszFit(
        theta=theta,
        l2_penalty=float(l2),
        l1_penalty=float(l1),
        objective_kind=RIESZ_LOSS,
        objective_value=riesz_objective(G, L, theta, l2, l1),
        gnorm_sq=float(theta @ G @ theta),
        used_min_norm=bool(min_norm),
        iterations=iterations,
    )


def solve_riesz_loss(gram, moments, l2: float = 0.0) -> LinearRieszFit:
    """Closed-form (ridge) Riesz-loss minimizer ``(G + l2 I)^{-1} L``.

    Uses a Cholesky solve; an unpenalized singular ``G`` falls back to the
    minimum-norm pseudoinverse solution.
    """
    G, L = _arrays(gram, moments)
    if l2 < 0:
        raise NumericError("l2 must be nonnegative")
    A = G + l2 * np.eye(G.shape[0])
    theta = None
    if not (l2 == 0 and is_singular(G)):
        theta = _spd_solve(A, L)
    if theta is None:
        if l2 > 0:
            raise NumericError("penalized Gram is not positive definite")
        return _riesz_fit(G, L, _pinv(G) @ L, 0.0, 0.0, True, 0)
    return _riesz_fit(G, L, theta, l2, 0.0, False, 0)


def minnorm_pinv_solve(gram, moments) -> LinearRieszFit:
    G, L = _arrays(gram, moments)
    return _riesz_fit(G, L, _pinv(G) @ L, 0.0, 0.0, True, 0)


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def solve_lasso(gram, moments, l1: float, theta0: Optional[NDArray] = None) -> LinearRieszFit:
    """Cyclic coordinate descent on ``theta' G theta - 2 theta' L + l1 |theta|_1``."""
    G, L = _arrays(gram, moments)
    if not l1 > 0:
        raise NumericError("l1 must be positive; use solve_riesz_loss for the unpenalized problem")
    diag = np.diag(G)
    zero = np.flatnonzero(diag <= 0)
    if zero.size:
        raise DegenerateColumnError(int(zero[0]))
    d = G.shape[0]
    theta = np.zeros(d) if theta0 is None else np.array(theta0, dtype=float)
    sweeps = 0
    for sweeps in range(1, LASSO_MAX_SWEEPS + 1):
        max_change = 0.0
        for j in range(d):
            old = theta[j]
            partial = L[j] - (G[j] @ theta - G[j, j] * old)
            new = soft_threshold(partial, 0.5 * l1) / G[j, j]
            theta[j] = new
            max_change = max(max_change, abs(new - old))
        if max_change < LASSO_TOL:
            break
    return _riesz_fit(G, L, theta, 0.0, l1, False, sweeps)


def _rayleigh_fit(G, L, u, theta, value, l2, l1, min_norm, iterations) -> LinearRieszFit:
    return LinearRieszFit(
        theta=theta,
        l2_penalty=float(l2),
        l1_penalty=float(l1),
        objective_kind=RAYLEIGH,
        objective_value=float(value),
        gnorm_sq=float(theta @ G @ theta),
        used_min_norm=bool(min_norm),
        iterations=iterations,
        direction=u,
    )


def _top_generalized_direction(A: NDArray, L: NDArray) -> NDArray:
    """Leading eigenvector of ``L L' u = lambda A u`` normalized so ``u' A u = 1``.

    The sign is chosen so that ``u' L >= 0``.
    """
    d = A.shape[0]
    _, vecs = scipy.linalg.eigh(np.outer(L, L), A, subset_by_index=[d - 1, d - 1])
    u = vecs[:, 0]
    u = u / np.sqrt(u @ A @ u)
    return u if u @ L >= 0 else -u


def solve_rayleigh(gram, moments, l1: float = 0.0, l2: float = 0.0) -> LinearRieszFit:
    """Maximize the generalized Rayleigh quotient ``(theta' L)^2 / theta' (G + l2 I) theta``.

    With ``l1 = 0`` the maximizer is found as the top generalized eigenvector
    (a rank-one problem); singular ``G`` with no ridge falls back to the
    pseudoinverse direction.  With ``l1 > 0`` the objective
    ``(u' L)^2 - l1 |u|_1`` is maximized over the ellipsoid
    ``u' (G + l2 I) u = 1`` by proximal gradient ascent with ray projection, starting
    from the unpenalized direction.  In every case the returned
    ``theta = (u' L) u``.
    """
    G, L = _arrays(gram, moments)
    if l1 < 0 or l2 < 0:
        raise NumericError("penalties must be nonnegative")
    if not np.any(L != 0):
        raise DegenerateFunctionalError("moment vector is zero; every direction attains quotient 0")
    A = G + l2 * np.eye(G.shape[0])
    min_norm = l2 == 0 and is_singular(G)
    if min_norm:
        v = _pinv(G) @ L
        norm_sq = v @ G @ v
        if not norm_sq > 0:
            raise DegenerateFunctionalError("moment vector is orthogonal to the range of the Gram matrix")
        u = v / np.sqrt(norm_sq)
    else:
        u = _top_generalized_direction(A, L)
    if l1 == 0:
        c = u @ L
        return _rayleigh_fit(G, L, u, c * u, c * c, l2, 0.0, min_norm, 0)
    return _rayleigh_l1_ascent(G, L, A, u, l1, l2, min_norm)


def penalized_rayleigh_value(L, u, l1) -> float:
    return float((u @ L) ** 2 - l1 * np.abs(u).sum())


def _rayleigh_l1_ascent(G, L, A, u, l1, l2, min_norm) -> LinearRieszFit:
    """Proximal ascent on the ellipsoid ``u' A u = 1``, followed by ray projection.

    The smooth part is differentiated in its scale-free form
    ``(v' L)^2 / v' A v - l1 |v|_1 / sqrt(v' A v)`` evaluated at ``v = u``, so the
    step is tangent to the ellipsoid (apart from the l1 soft-threshold) and the
    ray projection does not undo it.  A plain Euclidean step would drift toward
    ``L`` itself, which is not the maximizer unless ``A`` is a multiple of I.
    """
    value = penalized_rayleigh_value(L, u, l1)
    it = 0
    for it in range(1, RAYLEIGH_L1_MAX_ITER + 1):
        c = u @ L
        Au = A @ u
        smooth_grad = 2.0 * c * L - 2.0 * c * c * Au + l1 * np.abs(u).sum() * Au
        step = soft_threshold(u + RAYLEIGH_L1_STEP * smooth_grad, RAYLEIGH_L1_STEP * l1)
        norm_sq = step @ A @ step
        if not norm_sq > 0:
            raise NumericError(f"l1 penalty shrank every coordinate to zero at iteration {it}")
        u = step / np.sqrt(norm_sq)
        new_value = penalized_rayleigh_value(L, u, l1)
        if not np.isfinite(new_value):
            raise NumericError(f"non-finite objective at iteration {it}")
        done = abs(new_value - value) < RAYLEIGH_L1_TOL
        value = new_value
        if done:
            break
    c = u @ L
    return _rayleigh_fit(G, L, u, c * u, value, l2, l1, min_norm, it)


def equivalence_report(fit_a: LinearRieszFit, fit_b: LinearRieszFit, settings: str = "") -> EquivalenceReport:
    a, b = np.asarray(fit_a.theta), np.asarray(fit_b.theta)
    if a.shape != b.shape:
        raise ShapeError(f"cannot compare fits of dimension {a.shape} and {b.shape}")
    max_abs = float(np.max(np.abs(a - b))) if a.size else 0.0
    scale = max(float(np.max(np.abs(a))) if a.size else 0.0, float(np.max(np.abs(b))) if b.size else 0.0, 1e-300)
    return EquivalenceReport(max_abs, max_abs / scale, settings)


# --- equivalence harness ----------------------------------------------------


def random_instance(rng: np.random.Generator, n: int = 200, d: int = 10, max_cond: float = 1e6):
    """A random design ``Phi`` (n x d) with ``cond(G) <= max_cond`` and a random ``L``.

    Columns get log-uniform scales so the Gram is genuinely ill-conditioned
    within the bound; draws exceeding the bound are rejected.
    """
    from .basis import GramMatrix
    from .functional import MomentVector

    log_span = 0.5 * np.log10(max_cond) / 2.0
    while True:
        phi = rng.standard_normal((n, d)) * 10.0 ** rng.uniform(-log_span, log_span, size=d)
        G = phi.T @ phi / n
        G = 0.5 * (G + G.T)
        if np.linalg.cond(G) <= max_cond:
            break
    L = rng.standard_normal(d)
    return GramMatrix(G, n), MomentVector(L, n)


def run_equivalence(
    instances: int = 100,
    n: int = 200,
    d: int = 10,
    max_cond: float = 1e6,
    l2_values=(0.0,),
    seed: int = 0,
) -> list:
    """Compare Riesz-loss and Rayleigh fits on random instances.

    Returns one dict per (instance, l2) with the equivalence diffs plus the
    minimum-value and norm identities' relative residuals.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(instances):
        gram, moments = random_instance(rng, n, d, max_cond)
        G, L = gram.values, moments.values
        for l2 in l2_values:
            a = solve_riesz_loss(gram, moments, l2=l2)
            b = solve_rayleigh(gram, moments, l2=l2)
            rep = equivalence_report(a, b, f"instance={i} l2={l2}")
            A = G + l2 * np.eye(d)
            direct = np.linalg.solve(A, L)
            scale = np.max(np.abs(direct))
            # With a ridge, the identities hold in the penalized norm theta' (G + l2 I) theta.
            penalized_norm = float(a.theta @ A @ a.theta)
            target_norm = float(L @ direct)
            out.append(
                {
                    "instance": i,
                    "l2": l2,
                    "cond": float(np.linalg.cond(G)),
                    "max_abs_diff": rep.max_abs_diff,
                    "max_rel_diff": rep.max_rel_diff,
                    "riesz_vs_direct": float(np.max(np.abs(a.theta - direct)) / scale),
                    "rayleigh_vs_direct": float(np.max(np.abs(b.theta - direct)) / scale),
                    "min_value_rel": abs(a.objective_value + penalized_norm) / abs(penalized_norm),
                    "norm_identity_rel": abs(float(b.theta @ A @ b.theta) - target_norm) / abs(target_norm),
                }
            )
    return out
