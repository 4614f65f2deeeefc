"""The affine set of dimension q-1 that best fits the data, and its coordinate chart."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import ContractError, InvalidOrderError, as_matrix


class DegenerateRankWarning(UserWarning):
    """Centered data has fewer than q-1 nonzero singular values."""


@dataclass(frozen=True)
class AffineSubspace:
    """Affine set ``{mean + basis @ c}`` with orthonormal `basis` (d x (q-1))."""

    mean: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray | None = None
    degenerate: bool = False

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def project(self, B) -> np.ndarray:
        """Closest point of the affine set to every column of `B`."""
        return from_coords(self, to_coords(self, B))


def _fix_signs(U: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made nonnegative
    if U.shape[1] == 0:
        return U
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def fit_affine_subspace(Y, q: int, seed: int = 0) -> AffineSubspace:
    """Fit the (q-1)-dimensional affine set minimizing the squared projection error.

    The basis holds the q-1 leading left singular vectors of the column-centered
    data. If fewer than q-1 singular values are nonzero, the basis is completed
    with an arbitrary orthonormal complement and a :class:`DegenerateRankWarning`
    is emitted.
    """
    Y = as_matrix(Y, "Y")
    d, n = Y.shape
    if int(q) != q or q < 1 or q > min(d, n) + 1:
        raise InvalidOrderError(f"order q={q} invalid for data of shape {Y.shape}")
    k = q - 1
    mean = Y.mean(axis=1)
    Yc = Y - mean[:, None]
    U, s, _ = np.linalg.svd(Yc, full_matrices=False)
    tol = max(Yc.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    degenerate = False
    if k <= rank:
        basis = U[:, :k]
    else:
        degenerate = True
        warnings.warn(
            f"centered data has rank {rank} < q-1 = {k}; basis padded with an orthonormal completion",
            DegenerateRankWarning,
            stacklevel=2,
        )
        if k > d:
            raise InvalidOrderError(f"cannot build a {k}-dimensional basis in {d} bands")
        rng = np.random.default_rng(seed)
        extra = rng.standard_normal((d, k - rank))
        extra -= U[:, :rank] @ (U[:, :rank].T @ extra)
        Q, _ = np.linalg.qr(extra)
        basis = np.hstack([U[:, :rank], Q[:, : k - rank]])
    return AffineSubspace(mean=mean, basis=_fix_signs(basis), singular_values=s, degenerate=degenerate)


def to_coords(sub: AffineSubspace, B) -> np.ndarray:
    """Affine coordinates ``basis^T (B - mean)`` of each column of `B`."""
    B = as_matrix(B, "B")
    if B.shape[0] != sub.mean.shape[0]:
        raise ContractError(f"expected {sub.mean.shape[0]} rows, got {B.shape[0]}")
    return sub.basis.T @ (B - sub.mean[:, None])


def from_coords(sub: AffineSubspace, C) -> np.ndarray:
    """Lift coordinates back to the ambient space: ``mean + basis @ C``."""
    C = as_matrix(C, "C")
    if C.shape[0] != sub.dim:
        raise ContractError(f"expected {sub.dim} coordinate rows, got {C.shape[0]}")
    return sub.mean[:, None] + sub.basis @ C
