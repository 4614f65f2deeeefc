"""Shared domain types, errors and the R-CoNMF objective."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FEAS_TOL = 1e-9


class RconmfError(Exception):
    """Base class for all package errors."""


class ContractError(RconmfError, ValueError):
    """Raised when inputs violate an operation's preconditions (shapes, finiteness)."""


class InvalidOrderError(ContractError):
    """Requested model order is incompatible with the data size."""


class DegenerateDataError(RconmfError, ValueError):
    """Data carries no usable signal (e.g. all zeros)."""


class ConfigError(RconmfError, ValueError):
    """Invalid configuration values."""


class LibraryError(RconmfError, ValueError):
    """Spectral library could not be parsed or failed validation."""


class InfeasibleLibraryError(LibraryError):
    """No endmember subset satisfies the angle constraint."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return `a` as a finite 2-D float64 array or raise :class:`ContractError`."""
    if isinstance(a, SceneMatrix):
        a = a.data
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SceneMatrix:
    """Observed spectra, one pixel per column (d bands x n pixels)."""

    data: np.ndarray
    wavelengths: Optional[np.ndarray] = None

    def __post_init__(self):
        data = as_matrix(self.data, "scene")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ContractError("scene must have at least one band and one pixel")
        object.__setattr__(self, "data", data)
        if self.wavelengths is not None:
            wl = np.asarray(self.wavelengths, dtype=np.float64).ravel()
            if wl.shape[0] != data.shape[0]:
                raise ContractError("wavelengths length must equal the number of bands")
            if np.any(np.diff(wl) <= 0):
                raise ContractError("wavelengths must be strictly increasing")
            object.__setattr__(self, "wavelengths", wl)

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


def is_feasible_abundance(X, tol: float = FEAS_TOL) -> bool:
    """True when every column of `X` lies on the probability simplex within `tol`."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        return False
    return bool(X.min(initial=0.0) >= -tol and np.all(np.abs(X.sum(axis=0) - 1.0) <= tol))


@dataclass(frozen=True)
class AdmmConfig:
    """Settings for the ADMM abundance solver.

    ``rho=None`` selects the penalty automatically from the spectrum of the
    quadratic term at every call.
    """

    rho: Optional[float] = None
    max_iters: int = 500
    primal_tol: float = 1e-6
    dual_tol: float = 1e-6

    def __post_init__(self):
        if self.rho is not None and not self.rho > 0:
            raise ConfigError("rho must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be positive")
        if not (self.primal_tol > 0 and self.dual_tol > 0):
            raise ConfigError("ADMM tolerances must be positive")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one R-CoNMF solve.

    Proximal weights left as ``None`` are set from the data energy:
    ``lambda_prox = 1e-3 * trace(Y^T Y) / (n d)`` and ``mu_prox = trace(Y^T Y) / n``
    (the mean squared pixel norm). The heavy abundance weight makes the
    abundances follow the endmembers slowly, which lets the simplex open up
    towards the data extremes instead of locking onto the anchor pixels.
    """

    q: int
    alpha: float = 1e-5
    beta: float = 1e-1
    lambda_prox: Optional[float] = None
    mu_prox: Optional[float] = None
    max_outer_iters: int = 2000
    outer_tol: float = 1e-6
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    seed: int = 0

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ConfigError("q must be a positive integer")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be nonnegative")
        for name in ("lambda_prox", "mu_prox"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_outer_iters < 1:
            raise ConfigError("max_outer_iters must be positive")
        if not self.outer_tol > 0:
            raise ConfigError("outer_tol must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")


@dataclass
class UnmixResult:
    A_hat: np.ndarray
    X_hat: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    admm_converged: bool = True
    anchor_indices: Optional[np.ndarray] = None


def l21_norm(X) -> float:
    """Sum of the Euclidean norms of the rows of `X`."""
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        return 0.0
    return float(np.sum(np.linalg.norm(X, axis=1)))


def objective(A, X, Y, P, alpha: float, beta: float) -> float:
    """Evaluate ``0.5||Y - AX||_F^2 + alpha ||X||_{2,1} + 0.5 beta ||A - P||_F^2``."""
    A = as_matrix(A, "A")
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    P = as_matrix(P, "P")
    d, q = A.shape
    if X.shape[0] != q or Y.shape != (d, X.shape[1]) or P.shape != A.shape:
        raise ContractError(
            f"shape mismatch: A{A.shape} X{X.shape} Y{Y.shape} P{P.shape}"
        )
    R = Y - A @ X
    return float(
        0.5 * np.sum(R * R) + alpha * l21_norm(X) + 0.5 * beta * np.sum((A - P) ** 2)
    )
