"""Synthetic scenes under the linear mixing model.

Endmembers are drawn from a spectral library subject to a minimum pairwise
spectral angle; abundances are sparse Dirichlet draws with no pure pixels;
noise is white Gaussian at a prescribed SNR.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ConfigError, InfeasibleLibraryError, LibraryError
from .metrics import sad_matrix

MAX_SUBSET_DRAWS = 10_000
BUNDLED_LIBRARY = "usgs_style_library.csv"


@dataclass(frozen=True)
class SpectralLibrary:
    names: list
    wavelengths: np.ndarray
    signatures: np.ndarray

    def __post_init__(self):
        if self.signatures.ndim != 2 or self.signatures.shape[1] < 1:
            raise LibraryError("library must contain at least one signature")
        if len(self.names) != self.signatures.shape[1]:
            raise LibraryError("one name per signature required")
        if self.wavelengths.shape[0] != self.signatures.shape[0]:
            raise LibraryError("one wavelength per band required")
        if np.any(np.diff(self.wavelengths) <= 0):
            raise LibraryError("wavelengths must be strictly increasing")

    @property
    def size(self) -> int:
        return self.signatures.shape[1]


def load_library(path) -> SpectralLibrary:
    """Read a library CSV with header ``wavelength,name1,name2,...`` and one row per band.

    Signatures containing non-finite or negative values are rejected, and the
    error message lists every offender.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LibraryError(f"{path}: empty library file") from None
        if len(header) < 2 or header[0].strip().lower() != "wavelength":
            raise LibraryError(f"{path}:1: header must start with 'wavelength' and name at least one signature")
        names = [h.strip() for h in header[1:]]
        rows = []
        for line in reader:
            if not line or all(not c.strip() for c in line):
                continue
            if len(line) != len(header):
                raise LibraryError(f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(line)}")
            try:
                rows.append([float(c) for c in line])
            except ValueError as exc:
                raise LibraryError(f"{path}:{reader.line_num}: {exc}") from None
    if not rows:
        raise LibraryError(f"{path}: library has no bands")
    data = np.asarray(rows, dtype=np.float64)
    sig = data[:, 1:]
    bad = [names[j] for j in range(sig.shape[1]) if not np.all(np.isfinite(sig[:, j])) or np.any(sig[:, j] < 0)]
    if bad:
        raise LibraryError(f"{path}: signatures with non-finite or negative reflectance: {', '.join(bad)}")
    return SpectralLibrary(names=names, wavelengths=data[:, 0], signatures=sig)


def save_library(lib: SpectralLibrary, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["wavelength", *lib.names])
        for b in range(lib.signatures.shape[0]):
            w.writerow([repr(float(lib.wavelengths[b]))] + [repr(float(v)) for v in lib.signatures[b]])


def bundled_library() -> SpectralLibrary:
    """The 224-band USGS-style library shipped with the package."""
    with resources.as_file(resources.files("rconmf") / "data" / BUNDLED_LIBRARY) as p:
        return load_library(p)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def select_endmember_indices(lib: SpectralLibrary, p: int, min_sad_deg: float = 10.0, seed=0) -> np.ndarray:
    """Draw uniformly random `p`-subsets until every pairwise angle exceeds `min_sad_deg`."""
    if p < 1 or p > lib.size:
        raise ConfigError(f"cannot draw p={p} endmembers from a library of {lib.size}")
    rng = _rng(seed)
    G = sad_matrix(lib.signatures, lib.signatures)
    iu = np.triu_indices(p, 1)
    best = -np.inf
    for _ in range(MAX_SUBSET_DRAWS):
        idx = rng.choice(lib.size, size=p, replace=False)
        worst = G[np.ix_(idx, idx)][iu].min() if p > 1 else np.inf
        if worst > min_sad_deg:
            return idx
        best = max(best, worst)
    raise InfeasibleLibraryError(
        f"no {p}-subset with pairwise SAD > {min_sad_deg} deg in {MAX_SUBSET_DRAWS} draws; "
        f"best minimum pairwise SAD found {best:.3f} deg"
    )


def select_endmembers(lib: SpectralLibrary, p: int, min_sad_deg: float = 10.0, seed=0) -> np.ndarray:
    return lib.signatures[:, select_endmember_indices(lib, p, min_sad_deg, seed)]


def _check_abundance_config(p, p_mix, max_fraction):
    if not 1 <= p_mix <= p:
        raise ConfigError(f"need 1 <= p_mix <= p, got p_mix={p_mix}, p={p}")
    if not 0 < max_fraction <= 1:
        raise ConfigError("max_fraction must lie in (0, 1]")
    # a p_mix-sparse simplex point has max entry >= 1/p_mix, with equality only at one point
    if max_fraction < 1.0 / p_mix or (p_mix > 1 and max_fraction <= 1.0 / p_mix):
        raise ConfigError(f"max_fraction={max_fraction} is unreachable with p_mix={p_mix}")


def sample_abundances(n: int, p: int, p_mix: int, max_fraction: float = 0.8, seed=0) -> np.ndarray:
    """Sparse flat-Dirichlet abundances (p x n) with at most `p_mix` nonzeros per pixel.

    Pixels whose largest fraction exceeds `max_fraction` are redrawn whole.
    """
    _check_abundance_config(p, p_mix, max_fraction)
    rng = _rng(seed)
    S = np.zeros((p, n))
    filled = 0
    while filled < n:
        batch = max(64, 2 * (n - filled))
        supp = np.argsort(rng.random((batch, p)), axis=1)[:, :p_mix]
        w = rng.dirichlet(np.ones(p_mix), size=batch)
        w /= w.sum(axis=1, keepdims=True)
        keep = w.max(axis=1) <= max_fraction
        supp, w = supp[keep], w[keep]
        take = min(len(w), n - filled)
        cols = np.arange(filled, filled + take)
        S[supp[:take].T, cols[None, :]] = w[:take].T
        filled += take
    return S


def add_noise(clean, snr_db: float, seed=0, return_noise: bool = False):
    """Add iid zero-mean Gaussian noise at ``SNR = 10 log10(||clean||^2 / E||N||^2)``.

    Returns ``(Y, noise_energy)`` (and the noise matrix if `return_noise`).
    ``snr_db = inf`` leaves the data untouched.
    """
    clean = np.asarray(clean, dtype=np.float64)
    if math.isinf(snr_db) and snr_db > 0:
        N = np.zeros_like(clean)
    else:
        if math.isnan(snr_db) or math.isinf(snr_db):
            raise ConfigError("snr_db must be finite or +inf")
        sigma2 = np.sum(clean**2) / (clean.size * 10.0 ** (snr_db / 10.0))
        N = _rng(seed).normal(0.0, np.sqrt(sigma2), size=clean.shape)
    Y = clean + N
    energy = float(np.sum(N * N))
    return (Y, energy, N) if return_noise else (Y, energy)


@dataclass(frozen=True)
class GeneratorConfig:
    p: int
    n: int = 4000
    snr_db: float = 30.0
    min_sad_deg: float = 10.0
    max_fraction: float = 0.8
    p_mix: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ConfigError("p and n must be positive")
        if self.p_mix is None:
            object.__setattr__(self, "p_mix", min(self.p, 5))
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError("snr_db must be finite or +inf")
        _check_abundance_config(self.p, self.p_mix, self.max_fraction)


@dataclass
class SyntheticScene:
    Y: np.ndarray
    M: np.ndarray
    S: np.ndarray
    N_energy: float
    config: GeneratorConfig
    endmember_indices: np.ndarray
    endmember_names: list
    wavelengths: Optional[np.ndarray] = None
    N: Optional[np.ndarray] = field(default=None, repr=False)

    def manifest(self) -> dict:
        return {
            "config": asdict(self.config),
            "endmember_indices": [int(i) for i in self.endmember_indices],
            "endmember_names": list(self.endmember_names),
            "noise_energy": self.N_energy,
            "shape": {"d": int(self.Y.shape[0]), "n": int(self.Y.shape[1]), "p": int(self.M.shape[1])},
        }


def generate_scene(lib: SpectralLibrary, cfg: GeneratorConfig, keep_noise: bool = False) -> SyntheticScene:
    """Draw endmembers, abundances and noise from three independent seed substreams.

    The substreams are derived from ``cfg.seed`` alone, so changing the SNR
    leaves ``M`` and ``S`` unchanged.
    """
    if cfg.p > lib.size:
        raise ConfigError(f"p={cfg.p} exceeds library size {lib.size}")
    ss_m, ss_s, ss_n = np.random.SeedSequence(cfg.seed).spawn(3)
    idx = select_endmember_indices(lib, cfg.p, cfg.min_sad_deg, np.random.default_rng(ss_m))
    M = lib.signatures[:, idx].copy()
    S = sample_abundances(cfg.n, cfg.p, cfg.p_mix, cfg.max_fraction, np.random.default_rng(ss_s))
    Y, energy, N = add_noise(M @ S, cfg.snr_db, np.random.default_rng(ss_n), return_noise=True)
    return SyntheticScene(
        Y=Y,
        M=M,
        S=S,
        N_energy=energy,
        config=cfg,
        endmember_indices=idx,
        endmember_names=[lib.names[i] for i in idx],
        wavelengths=lib.wavelengths.copy(),
        N=N if keep_noise else None,
    )
