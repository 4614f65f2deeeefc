"""Model-order selection from an overestimated solve.

An endmember is declared active when the Euclidean norm of its abundance row
exceeds a threshold `xi`. The reconstruction-error curve over a range of
orders is the second indicator; combining the two is left to the user.
"""

from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass, replace

import numpy as np

from .core import ContractError, RconmfError, SolverConfig, as_matrix
from .solver import run_pao

log = logging.getLogger(__name__)

DEFAULT_XI = 1.0


@dataclass(frozen=True)
class OrderEstimate:
    zeta: np.ndarray
    xi: float
    p_hat: int
    active_rows: np.ndarray

    def extract(self, A_hat, X_hat):
        """Columns of `A_hat` and rows of `X_hat` belonging to active endmembers."""
        return np.asarray(A_hat)[:, self.active_rows], np.asarray(X_hat)[self.active_rows]


def row_energies(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.linalg.norm(X, axis=1) if X.size else np.zeros(X.shape[0])


def estimate_order(X_hat, xi: float = DEFAULT_XI) -> OrderEstimate:
    if not xi > 0:
        raise ContractError("xi must be positive")
    zeta = row_energies(X_hat)
    active = np.flatnonzero(zeta > xi)
    return OrderEstimate(zeta=zeta, xi=float(xi), p_hat=int(active.size), active_rows=active)


@dataclass(frozen=True)
class CurvePoint:
    q: int
    rre: float
    ok: bool = True
    error: str = ""


def point_seed(seed: int, q: int) -> int:
    """Per-order seed, independent of evaluation order."""
    return (seed ^ (zlib.crc32(f"order-q{q}".encode()) * 0x9E3779B1)) % 2**64


def reconstruction_curve(Y, q_values, cfg: SolverConfig) -> list:
    """Relative reconstruction error ``||Y - A X||_F / ||Y||_F`` for each order in `q_values`.

    Every point is a full solve with ``cfg`` and ``q`` replaced. A failed
    point is kept with ``ok=False`` and the error message, and a warning is
    logged.
    """
    Y = as_matrix(Y, "Y")
    qs = sorted(set(int(q) for q in q_values))
    if not qs or qs[0] < 1:
        raise ContractError("q_values must be a nonempty list of positive integers")
    ny = np.linalg.norm(Y)
    out = []
    for q in qs:
        try:
            res = run_pao(Y, None, replace(cfg, q=q, seed=point_seed(cfg.seed, q)))
            rre = float(np.linalg.norm(Y - res.A_hat @ res.X_hat) / ny)
            out.append(CurvePoint(q=q, rre=rre))
        except RconmfError as exc:
            log.warning("reconstruction curve: q=%d failed: %s", q, exc)
            out.append(CurvePoint(q=q, rre=float("nan"), ok=False, error=str(exc)))
    return out
