"""Unmixing quality indicators with permutation-aware endmember matching."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import ContractError, as_matrix


@dataclass
class MetricsReport:
    """Scores of an estimate against ground truth, after matching.

    ``permutation[k]`` is the estimated endmember assigned to true endmember ``k``.
    ``rre_squared`` keeps the squared-numerator variant of the relative
    reconstruction error for comparison.
    """

    rre: float
    mean_sad_deg: float
    per_endmember_sad_deg: np.ndarray
    m_err: float
    s_err: float
    permutation: np.ndarray
    rre_squared: float

    def to_dict(self) -> dict:
        out = asdict(self)
        out["per_endmember_sad_deg"] = [float(v) for v in self.per_endmember_sad_deg]
        out["permutation"] = [int(v) for v in self.permutation]
        return out


def sad_degrees(u, v) -> float:
    """Spectral angle between `u` and `v`, in degrees."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ContractError("vectors must have the same length")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ContractError("spectral angle undefined for a zero vector")
    c = np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))


def sad_matrix(A, B) -> np.ndarray:
    """Pairwise spectral angles (degrees) between columns of `A` and columns of `B`."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    na = np.linalg.norm(A, axis=0)
    nb = np.linalg.norm(B, axis=0)
    if np.any(na == 0) or np.any(nb == 0):
        raise ContractError("spectral angle undefined for a zero column")
    C = np.clip((A.T @ B) / np.outer(na, nb), -1.0, 1.0)
    return np.degrees(np.arccos(C))


def _assignment_cost(cost):
    r, c = linear_sum_assignment(cost)
    return cost[r, c].sum()


def match_endmembers(M_hat, M, cost: str = "sad") -> np.ndarray:
    """Optimal one-to-one matching of estimated to true endmembers.

    Minimizes the summed per-pair cost (spectral angle by default, or Euclidean
    distance with ``cost="euclidean"``). Among optimal matchings the
    lexicographically smallest one is returned.
    """
    M_hat = as_matrix(M_hat, "M_hat")
    M = as_matrix(M, "M")
    if M_hat.shape != M.shape:
        raise ContractError(f"M_hat {M_hat.shape} and M {M.shape} must have the same shape")
    if cost == "sad":
        C = sad_matrix(M, M_hat)
    elif cost == "euclidean":
        C = np.linalg.norm(M[:, :, None] - M_hat[:, None, :], axis=0)
    else:
        raise ContractError(f"unknown matching cost {cost!r}")
    p = C.shape[0]
    best = _assignment_cost(C)
    tol = 1e-9 * max(1.0, abs(best))
    perm = np.empty(p, dtype=np.int64)
    rows = list(range(p))
    cols = list(range(p))
    fixed = 0.0
    # fix rows one at a time to the smallest column that keeps the optimum
    for i in range(p):
        rest_rows = rows[i + 1:]
        for j in sorted(cols):
            rest_cols = [c for c in cols if c != j]
            sub = C[np.ix_(rest_rows, rest_cols)] if rest_rows else np.zeros((0, 0))
            total = fixed + C[i, j] + (_assignment_cost(sub) if rest_rows else 0.0)
            if total <= best + tol:
                perm[i] = j
                fixed += C[i, j]
                cols.remove(j)
                break
    return perm


def evaluate(M_hat, S_hat, M, S, Y, cost: str = "sad") -> MetricsReport:
    """Score ``(M_hat, S_hat)`` against the truth ``(M, S)`` on scene `Y`."""
    M_hat = as_matrix(M_hat, "M_hat")
    S_hat = as_matrix(S_hat, "S_hat")
    M = as_matrix(M, "M")
    S = as_matrix(S, "S")
    Y = as_matrix(Y, "Y")
    d, p = M.shape
    n = S.shape[1]
    if M_hat.shape != (d, p) or S_hat.shape != (p, n) or S.shape != (p, n) or Y.shape != (d, n):
        raise ContractError(
            f"shape mismatch: M_hat{M_hat.shape} S_hat{S_hat.shape} M{M.shape} S{S.shape} Y{Y.shape}"
        )
    perm = match_endmembers(M_hat, M, cost=cost)
    Mm = M_hat[:, perm]
    Sm = S_hat[perm]
    resid = np.linalg.norm(Y - M_hat @ S_hat)
    ny = np.linalg.norm(Y)
    sads = np.array([sad_degrees(Mm[:, k], M[:, k]) for k in range(p)])
    return MetricsReport(
        rre=float(resid / ny),
        mean_sad_deg=float(sads.mean()),
        per_endmember_sad_deg=sads,
        m_err=float(np.linalg.norm(Mm - M)),
        s_err=float(np.linalg.norm(Sm - S) / np.sqrt(n * p)),
        permutation=perm,
        rre_squared=float(resid**2 / ny),
    )
