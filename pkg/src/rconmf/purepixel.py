"""Anchor pixels for the volume regularizer via the successive projection algorithm."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DegenerateDataError, InvalidOrderError, as_matrix


@dataclass(frozen=True)
class PurePixelInit:
    indices: np.ndarray
    P: np.ndarray


def spa_select(Y, q: int) -> PurePixelInit:
    """Greedy successive projection algorithm.

    The first pick is the column of largest norm; each following pick maximizes
    the norm of what remains after projecting out the span of earlier picks.
    Ties go to the lowest pixel index, so the selection is deterministic.
    """
    Y = as_matrix(Y, "Y")
    n = Y.shape[1]
    if int(q) != q or q < 1 or q > n:
        raise InvalidOrderError(f"cannot select q={q} pixels out of n={n}")
    if not np.any(Y):
        raise DegenerateDataError("all-zero data has no extreme pixels")
    R = Y.copy()
    basis = []
    chosen: list[int] = []
    for _ in range(q):
        norms = np.einsum("ij,ij->j", R, R)
        norms[chosen] = -np.inf
        j = int(np.argmax(norms))
        chosen.append(j)
        r = R[:, j].copy()
        # re-orthogonalize against earlier directions for stability
        for u in basis:
            r -= u * (u @ r)
        nr = np.linalg.norm(r)
        if nr > 0:
            u = r / nr
            basis.append(u)
            R -= np.outer(u, u @ R)
    idx = np.asarray(chosen, dtype=np.int64)
    return PurePixelInit(indices=idx, P=Y[:, idx].copy())
