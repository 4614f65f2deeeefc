"""Proximal alternating optimization for R-CoNMF.

Each outer iteration updates the endmember matrix in closed form inside the
data's affine set, then updates the abundances with a two-split ADMM
(group shrinkage for the l2,1 term, simplex projection for the constraint).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import (
    AdmmConfig,
    ContractError,
    SolverConfig,
    UnmixResult,
    as_matrix,
    objective,
)
from .purepixel import PurePixelInit, spa_select
from .subspace import AffineSubspace, fit_affine_subspace, from_coords, to_coords

log = logging.getLogger(__name__)


@dataclass
class SolverState:
    """PAO iterate: ``A_t`` (d x q), ``X_t`` (q x n) and their affine coordinates.

    `warm` carries ADMM splits and scaled duals between abundance updates.
    """

    A_t: np.ndarray
    X_t: np.ndarray
    E_t: np.ndarray
    F: np.ndarray
    t: int = 0
    warm: Optional[dict] = field(default=None, repr=False)


@dataclass
class AdmmResult:
    X: np.ndarray
    converged: bool
    iterations: int
    primal_residual: float
    dual_residual: float
    rho: float
    warm: dict = field(repr=False)


def group_soft_threshold(X, tau: float) -> np.ndarray:
    """Proximal operator of ``tau * ||.||_{2,1}``: shrink each row's norm by `tau`."""
    X = np.asarray(X, dtype=np.float64)
    if tau < 0:
        raise ContractError("tau must be nonnegative")
    if tau == 0:
        return X.copy()
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > tau, 1.0 - tau / norms, 0.0)
    return X * scale


def project_simplex_columns(X) -> np.ndarray:
    """Euclidean projection of every column onto the probability simplex.

    Sort-and-threshold: with the column sorted in decreasing order ``u``, the
    pivot is the largest ``j`` with ``u_j - (sum_{i<=j} u_i - 1)/j > 0``; the
    threshold subtracted from all entries is ``(sum_{i<=j} u_i - 1)/j``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        return project_simplex_columns(X[:, None])[:, 0]
    k, n = X.shape
    if k == 0 or n == 0:
        return X.copy()
    U = -np.sort(-X, axis=0)
    css = np.cumsum(U, axis=0) - 1.0
    ind = np.arange(1, k + 1, dtype=np.float64)[:, None]
    cond = U - css / ind > 0
    # last index where cond holds (cond[0] is always true)
    piv = k - 1 - np.argmax(cond[::-1], axis=0)
    theta = css[piv, np.arange(n)] / (piv + 1.0)
    return np.maximum(X - theta, 0.0)


def default_prox_weight(Y) -> float:
    """Default endmember proximal weight, ``1e-3 * trace(Y^T Y) / (n d)``."""
    Y = np.asarray(Y, dtype=np.float64)
    return 1e-3 * float(np.sum(Y * Y)) / Y.size


def default_abundance_prox_weight(Y) -> float:
    """Default abundance proximal weight, ``trace(Y^T Y) / n``."""
    Y = np.asarray(Y, dtype=np.float64)
    return float(np.sum(Y * Y)) / max(Y.shape[1], 1)


def _auto_rho(G: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(G)
    lo = max(ev[0], 1e-12 * ev[-1], 1e-12)
    # the quadratic step carries 2*rho (two splits)
    return 0.5 * float(np.sqrt(lo * ev[-1]))


def _check_sum_to_one(X, tol=1e-8):
    if not np.all(np.abs(X.sum(axis=0) - 1.0) <= tol):
        raise ContractError("abundance columns must sum to one")


def a_step_coords(state: SolverState, Yc: np.ndarray, beta: float, lambda_prox: float) -> np.ndarray:
    """Solve the endmember update in affine coordinates.

    `Yc` is ``basis^T (Y - mean)``. Returns ``E`` solving
    ``E (X X^T + (beta + lambda) I) = Yc X^T + beta F + lambda E_t``.
    """
    X = state.X_t
    c = beta + lambda_prox
    if not c > 0:
        raise ContractError("beta + lambda_prox must be positive")
    q = X.shape[0]
    G = X @ X.T + c * np.eye(q)
    rhs = Yc @ X.T + beta * state.F + lambda_prox * state.E_t
    if rhs.shape[0] == 0:
        return rhs
    return cho_solve(cho_factor(G), rhs.T).T


def a_step(state: SolverState, Y, sub: AffineSubspace, beta: float, lambda_prox: float) -> np.ndarray:
    """Minimize ``L(A, X_t) + lambda/2 ||A - A_t||^2`` over the affine set.

    Because the columns of ``X_t`` sum to one, ``A X_t = mean 1^T + U E X_t`` for
    every ``A = mean 1^T + U E``, and the lift is an isometry, so the problem
    reduces to a small symmetric positive definite solve in ``E``.
    """
    Y = as_matrix(Y, "Y")
    X = as_matrix(state.X_t, "X_t")
    if Y.shape[1] != X.shape[1] or state.E_t.shape != state.F.shape or state.F.shape != (sub.dim, X.shape[0]):
        raise ContractError("a_step: dimension mismatch")
    _check_sum_to_one(X)
    Yc = to_coords(sub, Y)
    return from_coords(sub, a_step_coords(state, Yc, beta, lambda_prox))


def x_step(
    state: SolverState,
    A_next,
    Y,
    alpha: float,
    mu_prox: float,
    admm: AdmmConfig = AdmmConfig(),
    *,
    full_output: bool = False,
):
    """Abundance update: ``min 0.5||Y - A X||^2 + alpha||X||_{2,1} + mu/2||X - X_t||^2``
    over column-stochastic ``X``.

    ADMM with two copies of ``X``: ``V1`` absorbs the l2,1 term through group
    soft thresholding and ``V2`` the simplex constraint through projection.
    The quadratic step solves ``(H + (2 rho + mu) I) X = b + rho(V1 - D1)
    + rho(V2 - D2) + mu X_t`` with one Cholesky factorization per call.

    ``H, b`` describe the data term in a form that agrees with
    ``0.5||Y - A X||^2`` on the simplex: with ``A = a 1^T + B`` (``a`` the
    column mean), ``A X = a 1^T + B X`` whenever ``1^T X = 1^T``, and the
    penalty ``c/2 ||1^T X - 1^T||^2`` (zero on the simplex) replaces the
    large mean-direction curvature of ``A^T A``, which would otherwise slow
    ADMM down without changing the minimizer.

    The returned matrix is the simplex-feasible copy with the lowest subproblem
    value seen (the feasible ``X_t`` included), so the update never increases
    the objective. Pass ``full_output=True`` to get an :class:`AdmmResult` with
    convergence information and the warm-start data.
    """
    A = as_matrix(A_next, "A_next")
    Y = as_matrix(Y, "Y")
    Xt = as_matrix(state.X_t, "X_t")
    q = A.shape[1]
    if Xt.shape[0] != q:
        raise ContractError("x_step: X_t rows must equal the columns of A_next")
    if Y.shape != (A.shape[0], Xt.shape[1]):
        raise ContractError("x_step: Y shape does not conform with A_next and X_t")
    if alpha < 0 or mu_prox < 0:
        raise ContractError("alpha and mu_prox must be nonnegative")

    a = A.mean(axis=1)
    B = A - a[:, None]
    BtB = B.T @ B
    c = max(np.trace(BtB), 1e-300) / max(q - 1, 1) / q
    H = BtB + c * np.ones((q, q))
    b = B.T @ Y - (B.T @ a)[:, None] + c
    Hmu = H + mu_prox * np.eye(q)
    rho = admm.rho if admm.rho is not None else _auto_rho(Hmu)
    chol = cho_factor(Hmu + 2.0 * rho * np.eye(q))
    base = b + mu_prox * Xt

    def subobj(X):
        # exact up to a constant on the simplex
        val = 0.5 * np.sum(X * (H @ X)) - np.sum(X * b)
        if alpha:
            val += alpha * np.sum(np.linalg.norm(X, axis=1))
        if mu_prox:
            val += 0.5 * mu_prox * np.sum((X - Xt) ** 2)
        return float(val)

    warm = state.warm
    if warm is not None and warm["V1"].shape == Xt.shape:
        V1, V2 = warm["V1"].copy(), warm["V2"].copy()
        s = warm["rho"] / rho
        D1, D2 = warm["D1"] * s, warm["D2"] * s
    else:
        V1 = Xt.copy()
        V2 = project_simplex_columns(Xt)
        D1 = np.zeros_like(Xt)
        D2 = np.zeros_like(Xt)

    feasible_t = bool(Xt.min() >= 0 and np.all(np.abs(Xt.sum(axis=0) - 1.0) <= 1e-9))
    best, best_val = (Xt, subobj(Xt)) if feasible_t else (None, np.inf)

    tau = alpha / rho
    converged = False
    r_p = r_d = np.inf
    it = 0
    for it in range(1, admm.max_iters + 1):
        X = cho_solve(chol, base + rho * (V1 - D1 + V2 - D2))
        V1_old, V2_old = V1, V2
        V1 = group_soft_threshold(X + D1, tau)
        V2 = project_simplex_columns(X + D2)
        R1 = X - V1
        R2 = X - V2
        D1 += R1
        D2 += R2

        r_p = np.sqrt(np.sum(R1 * R1) + np.sum(R2 * R2)) / max(
            np.sqrt(2.0) * np.linalg.norm(X), np.sqrt(np.sum(V1 * V1) + np.sum(V2 * V2)), 1e-300
        )
        # scaled duals vanish when no constraint is active; fall back to the splits' scale
        r_d = np.sqrt(np.sum((V1 - V1_old) ** 2) + np.sum((V2 - V2_old) ** 2)) / max(
            np.sqrt(np.sum(D1 * D1) + np.sum(D2 * D2)), np.sqrt(np.sum(V1 * V1) + np.sum(V2 * V2)), 1e-300
        )
        if r_p < admm.primal_tol and r_d < admm.dual_tol:
            converged = True
            break

    val = subobj(V2)
    if val <= best_val:
        best, best_val = V2, val
    if not converged:
        log.debug("x_step: ADMM stopped at max_iters (r_p=%.2e, r_d=%.2e)", r_p, r_d)
    res = AdmmResult(
        X=best.copy(),
        converged=converged,
        iterations=it,
        primal_residual=float(r_p),
        dual_residual=float(r_d),
        rho=rho,
        warm={"V1": V1, "V2": V2, "D1": D1, "D2": D2, "rho": rho},
    )
    return res if full_output else res.X


def run_pao(Y, P: Optional[PurePixelInit], cfg: SolverConfig, A_init=None, callback=None) -> UnmixResult:
    """Run R-CoNMF on the scene `Y` (d x n).

    `P` are the anchor pixels of the volume term; ``None`` selects them with
    :func:`spa_select`. The anchors are projected onto the fitted affine set
    before use, and the first iterate is that projection with fully
    constrained least-squares abundances. `A_init` (d x q) overrides that
    starting point; it is projected onto the affine set as well.
    `callback(t, A, X)` is called after every outer iteration.
    """
    Y = as_matrix(Y, "Y")
    d, n = Y.shape
    q = cfg.q
    if q > min(d, n):
        raise ContractError(f"q={q} exceeds min(d, n)={min(d, n)}")
    if P is None:
        P = spa_select(Y, q)
    Praw = as_matrix(P.P, "P")
    if Praw.shape != (d, q):
        raise ContractError(f"anchor matrix must be {d}x{q}, got {Praw.shape}")

    lam = cfg.lambda_prox if cfg.lambda_prox is not None else default_prox_weight(Y)
    mu = cfg.mu_prox if cfg.mu_prox is not None else default_abundance_prox_weight(Y)

    sub = fit_affine_subspace(Y, q, seed=cfg.seed)
    Yc = to_coords(sub, Y)
    F = to_coords(sub, Praw)
    E0 = F.copy() if A_init is None else to_coords(sub, A_init)
    A = from_coords(sub, E0)
    state = SolverState(A_t=A, X_t=np.full((q, n), 1.0 / q), E_t=E0, F=F)

    init = x_step(state, A, Y, 0.0, 0.0, cfg.admm, full_output=True)
    state.X_t = init.X
    state.warm = init.warm
    admm_ok = init.converged

    trace = [objective(A, state.X_t, Y, Praw, cfg.alpha, cfg.beta)]
    converged = False
    t = 0
    for t in range(1, cfg.max_outer_iters + 1):
        E = a_step_coords(state, Yc, cfg.beta, lam)
        A = from_coords(sub, E)
        state.E_t, state.A_t = E, A
        res = x_step(state, A, Y, cfg.alpha, mu, cfg.admm, full_output=True)
        admm_ok &= res.converged
        state.X_t, state.warm, state.t = res.X, res.warm, t
        trace.append(objective(A, state.X_t, Y, Praw, cfg.alpha, cfg.beta))
        if callback is not None:
            callback(t, A, state.X_t)
        if abs(trace[-1] - trace[-2]) / max(trace[-2], 1e-300) < cfg.outer_tol:
            converged = True
            break

    return UnmixResult(
        A_hat=state.A_t,
        X_hat=state.X_t,
        objective_trace=np.asarray(trace),
        iterations=t,
        converged=converged,
        admm_converged=bool(admm_ok),
        anchor_indices=np.asarray(P.indices),
    )
