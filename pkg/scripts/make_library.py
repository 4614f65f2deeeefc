"""Build the bundled USGS-style spectral library.

The signatures are synthetic: a smooth continuum shaped by Gaussian absorption
bands at the positions where common mineral, vegetation and soil features sit
(Fe, OH, H2O, Al-OH, Mg-OH, carbonate). Some families carry a second variant
a few degrees away, so the minimum-angle screen in scene generation has real
work to do.

    python scripts/make_library.py src/rconmf/data/usgs_style_library.csv
"""

import sys

import numpy as np

N_BANDS = 224
WL = np.linspace(400.0, 2500.0, N_BANDS)

MINERAL_BANDS = [480, 650, 900, 1000, 1400, 1750, 1900, 2160, 2200, 2250, 2300, 2330, 2350, 2390]
VEG_WATER = [970, 1200, 1450, 1940]


def _absorb(centers, depths, widths):
    out = np.ones_like(WL)
    for c, dpt, w in zip(centers, depths, widths):
        out *= 1.0 - dpt * np.exp(-0.5 * ((WL - c) / w) ** 2)
    return out


def _mineral(rng):
    base = rng.uniform(0.05, 0.5)
    rise = rng.uniform(-0.3, 0.6)
    mid = rng.uniform(450, 2000)
    cont = base + rise / (1.0 + np.exp(-(WL - mid) / rng.uniform(60, 500)))
    cont += rng.uniform(-0.25, 0.25) * ((WL - 1450) / 1050) ** 2
    cont = np.maximum(cont, 0.03)
    k = rng.integers(2, 7)
    centers = rng.choice(MINERAL_BANDS, size=k, replace=False) + rng.normal(0, 15, size=k)
    depths = rng.uniform(0.15, 0.8, size=k)
    widths = rng.uniform(20, 160, size=k)
    return cont * _absorb(centers, depths, widths)


def _vegetation(rng):
    nir = rng.uniform(0.3, 0.6)
    vis = rng.uniform(0.03, 0.08)
    edge = rng.uniform(705, 730)
    cont = vis + (nir - vis) / (1.0 + np.exp(-(WL - edge) / 12.0))
    cont += 0.04 * np.exp(-0.5 * ((WL - 550) / 30) ** 2)
    cont *= 1.0 - rng.uniform(0.2, 0.5) * np.clip((WL - 1300) / 1200, 0, 1)
    depths = rng.uniform(0.05, 0.15), rng.uniform(0.1, 0.25), rng.uniform(0.3, 0.6), rng.uniform(0.5, 0.8)
    return cont * _absorb(VEG_WATER, depths, [30, 40, 60, 70])


def _soil(rng):
    lo, hi = rng.uniform(0.05, 0.2), rng.uniform(0.3, 0.6)
    cont = lo + (hi - lo) * (1 - np.exp(-(WL - 400) / rng.uniform(300, 900)))
    k = rng.integers(1, 4)
    centers = rng.choice([900, 1400, 1900, 2200], size=k, replace=False) + rng.normal(0, 10, size=k)
    return cont * _absorb(centers, rng.uniform(0.05, 0.3, size=k), rng.uniform(30, 100, size=k))


def _variant(sig, rng):
    warp = 1.0 + rng.uniform(0.05, 0.15) * np.sin(np.pi * (WL - 400) / 2100 + rng.uniform(0, np.pi))
    return sig * warp * _absorb([rng.choice(MINERAL_BANDS)], [rng.uniform(0.05, 0.15)], [40])


def build(seed=20160901):
    rng = np.random.default_rng(seed)
    names, sigs = [], []
    makers = [("mineral", _mineral, 60), ("vegetation", _vegetation, 6), ("soil", _soil, 10)]
    for kind, make, count in makers:
        for i in range(count):
            s = make(rng)
            names.append(f"{kind}_{i:02d}")
            sigs.append(s)
            if rng.random() < 0.2:
                names.append(f"{kind}_{i:02d}_b")
                sigs.append(_variant(s, rng))
    S = np.clip(np.column_stack(sigs), 0.005, 0.99)
    return names, S


def main(path):
    names, S = build()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["wavelength"] + names) + "\n")
        for b in range(N_BANDS):
            fh.write(",".join([f"{WL[b]:.4f}"] + [f"{v:.6f}" for v in S[b]]) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
