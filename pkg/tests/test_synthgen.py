import math
from pathlib import Path

import numpy as np
import pytest

from rconmf.core import ConfigError, InfeasibleLibraryError, LibraryError
from rconmf.metrics import sad_degrees, sad_matrix
from rconmf.synthgen import (
    GeneratorConfig,
    SpectralLibrary,
    add_noise,
    bundled_library,
    generate_scene,
    load_library,
    sample_abundances,
    save_library,
    select_endmember_indices,
)

TOY = Path(__file__).parent / "data" / "toy_library.csv"


class TestLibrary:
    def test_toy_golden_file(self):
        lib = load_library(TOY)
        assert lib.size == 2
        assert lib.names == ["bright_flat", "red_edge"]
        assert lib.signatures[1, 1] == 0.45

    def test_negative_reflectance_named(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("wavelength,a,b,c\n400,0.1,0.2,0.3\n500,0.1,-0.2,0.3\n")
        with pytest.raises(LibraryError, match=r"\bb\b"):
            load_library(p)

    def test_malformed_rows_report_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("wavelength,a\n400,0.1\n500,zz\n")
        with pytest.raises(LibraryError, match=":3:"):
            load_library(p)
        p.write_text("wavelength,a\n400,0.1,0.3\n")
        with pytest.raises(LibraryError, match=":2:"):
            load_library(p)

    def test_header_and_empty(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("")
        with pytest.raises(LibraryError):
            load_library(p)
        p.write_text("band,a\n400,0.1\n")
        with pytest.raises(LibraryError):
            load_library(p)
        p.write_text("wavelength,a\n")
        with pytest.raises(LibraryError):
            load_library(p)

    def test_decreasing_wavelengths(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("wavelength,a\n500,0.1\n400,0.2\n")
        with pytest.raises(LibraryError):
            load_library(p)

    def test_round_trip(self, tmp_path):
        lib = load_library(TOY)
        save_library(lib, tmp_path / "copy.csv")
        again = load_library(tmp_path / "copy.csv")
        assert again.names == lib.names
        assert np.array_equal(again.signatures, lib.signatures)
        assert np.array_equal(again.wavelengths, lib.wavelengths)

    def test_bundled_library(self):
        lib = bundled_library()
        assert lib.signatures.shape[0] >= 200
        assert lib.size >= 60
        assert np.all(lib.signatures > 0)


class TestSelection:
    def test_single_endmember(self):
        lib = load_library(TOY)
        assert select_endmember_indices(lib, 1, seed=3).size == 1

    def test_orthogonal_library_first_draw(self):
        lib = SpectralLibrary(names=["a", "b", "c"], wavelengths=np.arange(3.0), signatures=np.eye(3))
        assert sorted(select_endmember_indices(lib, 3).tolist()) == [0, 1, 2]

    def test_toy_pair_angle(self):
        lib = load_library(TOY)
        idx = select_endmember_indices(lib, 2, 10.0, seed=11)
        assert sad_degrees(lib.signatures[:, idx[0]], lib.signatures[:, idx[1]]) > 10.0

    def test_infeasible(self):
        sig = np.array([[1.0, 1.0, 1.0], [1.0, 1.01, 1.02]])
        lib = SpectralLibrary(names=["a", "b", "c"], wavelengths=np.arange(2.0), signatures=sig)
        with pytest.raises(InfeasibleLibraryError, match="best minimum"):
            select_endmember_indices(lib, 2, 10.0)

    def test_too_many(self):
        with pytest.raises(ConfigError):
            select_endmember_indices(load_library(TOY), 3)


class TestAbundances:
    def test_contract(self):
        S = sample_abundances(3000, 6, 4, 0.8, seed=1)
        assert np.allclose(S.sum(axis=0), 1.0, atol=1e-12, rtol=0)
        assert S.min() >= 0 and S.max() <= 0.8
        assert np.count_nonzero(S, axis=0).max() <= 4

    def test_unreachable_cap(self):
        with pytest.raises(ConfigError):
            sample_abundances(10, 4, 2, 0.5)
        with pytest.raises(ConfigError):
            sample_abundances(10, 4, 1, 0.8)
        with pytest.raises(ConfigError):
            sample_abundances(10, 4, 5, 0.8)


class TestNoise:
    def test_infinite_snr_is_exact(self, rng):
        X = rng.random((5, 8))
        Y, energy = add_noise(X, math.inf)
        assert np.array_equal(Y, X) and energy == 0.0

    def test_zero_db(self, rng):
        X = rng.random((100, 1000))
        Y, energy = add_noise(X, 0.0, seed=2)
        assert energy / np.sum(X**2) == pytest.approx(1.0, rel=0.05)

    def test_thirty_db(self, rng):
        X = rng.random((224, 4000))
        Y, energy = add_noise(X, 30.0, seed=2)
        assert 10 * np.log10(np.sum(X**2) / energy) == pytest.approx(30.0, abs=0.2)

    def test_nan_rejected(self):
        with pytest.raises(ConfigError):
            add_noise(np.ones((2, 2)), float("nan"))


class TestScene:
    def test_deterministic(self):
        lib = bundled_library()
        cfg = GeneratorConfig(p=4, n=500, seed=42)
        a, b = generate_scene(lib, cfg), generate_scene(lib, cfg)
        assert np.array_equal(a.Y, b.Y) and np.array_equal(a.S, b.S)

    def test_snr_changes_only_noise(self):
        lib = bundled_library()
        a = generate_scene(lib, GeneratorConfig(p=4, n=500, seed=42, snr_db=30))
        b = generate_scene(lib, GeneratorConfig(p=4, n=500, seed=42, snr_db=20))
        assert np.array_equal(a.M, b.M) and np.array_equal(a.S, b.S)
        assert not np.array_equal(a.Y, b.Y)

    def test_manifest_and_noise(self):
        lib = bundled_library()
        sc = generate_scene(lib, GeneratorConfig(p=3, n=200, seed=1), keep_noise=True)
        assert np.allclose(sc.Y - sc.M @ sc.S, sc.N)
        man = sc.manifest()
        assert man["shape"] == {"d": sc.Y.shape[0], "n": 200, "p": 3}
        assert man["endmember_names"] == [lib.names[i] for i in man["endmember_indices"]]
        assert sad_matrix(sc.M, sc.M)[np.triu_indices(3, 1)].min() > 10.0

    @pytest.mark.parametrize("kwargs", [{"p": 0}, {"p": 3, "n": 0}, {"p": 3, "seed": -1}, {"p": 3, "snr_db": float("nan")}, {"p": 3, "max_fraction": 0.2}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ConfigError):
            GeneratorConfig(**kwargs)

    def test_p_mix_default(self):
        assert GeneratorConfig(p=8).p_mix == 5
        assert GeneratorConfig(p=3).p_mix == 3
