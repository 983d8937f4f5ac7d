import json

import numpy as np
import pytest

from lossygbs import UnitaryMatrix, check_unitary, haar_random, load_unitary, save_unitary


class TestHaarRandom:
    def test_single_mode_is_a_phase(self):
        for seed in (0, 1, 99):
            u = haar_random(1, seed)
            assert abs(abs(u.entries[0, 0]) - 1.0) <= 1e-12

    def test_unitarity(self):
        assert check_unitary(haar_random(8, 42)) <= 1e-10

    def test_determinism(self):
        a = haar_random(6, 7)
        b = haar_random(6, 7)
        assert np.array_equal(a.entries, b.entries)

    def test_different_seeds_differ(self):
        assert not np.allclose(haar_random(4, 1).entries, haar_random(4, 2).entries)

    def test_zero_modes_rejected(self):
        with pytest.raises(ValueError):
            haar_random(0, 1)

    def test_singular_values(self):
        for seed in range(5):
            sv = np.linalg.svd(haar_random(7, seed).entries, compute_uv=False)
            assert np.max(np.abs(sv - 1.0)) <= 1e-10


class TestCheckUnitary:
    def test_identity(self):
        assert check_unitary(UnitaryMatrix(np.eye(4, dtype=complex))) == 0.0

    def test_zeroed_row(self):
        m = haar_random(4, 3).entries.copy()
        m[2] = 0.0
        assert check_unitary(UnitaryMatrix(m)) >= 1.0


class TestSaveLoad:
    def test_round_trip_bit_exact(self, tmp_path):
        u = haar_random(5, 11)
        path = tmp_path / "u.json"
        save_unitary(u, path)
        loaded = load_unitary(path)
        assert loaded.n == 5
        assert np.array_equal(loaded.entries, u.entries)

    def test_column_permutation_commutes(self, tmp_path):
        u = haar_random(4, 5)
        perm = [2, 0, 3, 1]
        permuted = UnitaryMatrix(u.entries[:, perm])
        path = tmp_path / "u.json"
        save_unitary(permuted, path)
        assert np.array_equal(load_unitary(path).entries, u.entries[:, perm])

    def test_non_square_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"n": 2, "entries": [[[1.0, 0.0]], [[0.0, 1.0]]]}))
        with pytest.raises(ValueError, match="row 0"):
            load_unitary(path)

    def test_bad_cell_named(self, tmp_path):
        path = tmp_path / "bad.json"
        entries = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], "oops"]]
        path.write_text(json.dumps({"n": 2, "entries": entries}))
        with pytest.raises(ValueError, match=r"row 1, column 1"):
            load_unitary(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("not json at all")
        with pytest.raises(ValueError, match="JSON"):
            load_unitary(path)

    def test_square_non_unitary_loads(self, tmp_path):
        doubled = UnitaryMatrix(2.0 * haar_random(3, 1).entries)
        path = tmp_path / "u.json"
        save_unitary(doubled, path)
        loaded = load_unitary(path)
        assert check_unitary(loaded) > 1e-10
