import math
import time

import numpy as np
import pytest

from fockref import fock_insertion_trace, fock_integrand
from lossygbs import (
    OutputPattern,
    UnitaryMatrix,
    base_trace,
    build_tables,
    derive_params,
    haar_random,
    integrand,
    linear_forms,
)
from lossygbs.estimator import _field_block
from lossygbs.traces import _RowKernel, insertion_trace


class TestLinearForms:
    def test_identity(self):
        u = UnitaryMatrix(np.eye(3, dtype=complex))
        forms = linear_forms(u, [1.0, 0.0, 0.0])
        assert np.allclose(forms.s_vals, [1.0, 0.0, 0.0])

    def test_zero_field(self):
        forms = linear_forms(haar_random(4, 1), np.zeros(4))
        assert np.all(forms.s_vals == 0.0)

    def test_loop_nest_oracle(self):
        rng = np.random.default_rng(5)
        u = haar_random(5, 2)
        x = rng.standard_normal(5)
        forms = linear_forms(u, x)
        for j in range(5):
            direct = sum(x[i] * u.entries[i, j] for i in range(5))
            assert abs(forms.s_vals[j] - direct) <= 1e-13

    def test_linearity(self):
        u = haar_random(4, 8)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(4)
        assert np.allclose(linear_forms(u, 2.5 * x).s_vals, 2.5 * linear_forms(u, x).s_vals)

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            linear_forms(haar_random(3, 0), [1.0, 2.0])


class TestBaseTrace:
    def test_vacuum_pattern(self):
        u = haar_random(3, 4)
        forms = linear_forms(u, [0.3, -0.2, 1.1])
        assert base_trace(forms, OutputPattern((0, 0, 0))) == 1.0

    def test_single_mode(self):
        forms = linear_forms(UnitaryMatrix(np.eye(1, dtype=complex)), [1.0])
        assert base_trace(forms, OutputPattern((2,))) == pytest.approx(0.5, abs=1e-15)

    def test_two_mode_value(self):
        from lossygbs.traces import LinearForms

        forms = LinearForms(s_vals=np.array([0.6, 0.8j]))
        value = base_trace(forms, OutputPattern((1, 1)))
        assert value == pytest.approx(0.2304, abs=1e-15)

    def test_zero_form_on_occupied_mode(self):
        from lossygbs.traces import LinearForms

        forms = LinearForms(s_vals=np.array([0.0 + 0.0j, 0.5]))
        assert base_trace(forms, OutputPattern((1, 0))) == 0.0


class TestInsertionTrace:
    def test_no_insertions_equals_base(self):
        u = haar_random(3, 6)
        forms = linear_forms(u, [0.4, 0.9, -0.3])
        pattern = OutputPattern((2, 0, 1))
        value = insertion_trace(forms, pattern, (0, 0, 0), (0, 0, 0))
        assert value == pytest.approx(base_trace(forms, pattern), abs=1e-15)

    def test_annihilation_past_occupancy(self):
        u = haar_random(2, 6)
        forms = linear_forms(u, [0.4, 0.9])
        assert insertion_trace(forms, OutputPattern((1, 1)), (2, 0), (0, 0)) == 0.0
        assert insertion_trace(forms, OutputPattern((1, 1)), (0, 0), (0, 2)) == 0.0

    def test_single_mode_value(self):
        from lossygbs.traces import LinearForms

        forms = LinearForms(s_vals=np.array([0.5 + 0.0j]))
        value = insertion_trace(forms, OutputPattern((2,)), (1,), (1,))
        assert value == pytest.approx(0.5, abs=1e-15)

    def test_dense_fock_cross_check(self):
        rng = np.random.default_rng(12)
        for _ in range(15):
            n = int(rng.integers(1, 4))
            u = haar_random(n, int(rng.integers(999)))
            counts = tuple(int(c) for c in rng.integers(0, 4, n))
            forms = linear_forms(u, rng.standard_normal(n))
            p = tuple(int(v) for v in rng.integers(0, 3, n))
            q = tuple(int(v) for v in rng.integers(0, 3, n))
            mine = insertion_trace(forms, OutputPattern(counts), p, q)
            ref = fock_insertion_trace(forms.s_vals, counts, p, q)
            assert abs(mine - ref) <= 1e-10 * (1 + abs(ref))


def _setup(n, counts, alpha, s2, seed):
    u = haar_random(n, seed)
    params = derive_params(alpha, s2)
    pattern = OutputPattern(counts)
    return u, params, pattern, build_tables(u, pattern)


class TestIntegrand:
    def test_full_loss(self):
        # with zero transmission the field never reaches the outputs
        u, params, vacuum, tables = _setup(3, (0, 0, 0), 0.7, 1.0, 3)
        xi0 = np.array([0.4, -1.2, 0.3])
        for order in (0, 2, 4):
            assert integrand(tables, params, u, vacuum, xi0, order) == 1.0
        pattern = OutputPattern((1, 0, 2))
        tables2 = build_tables(u, pattern)
        for order in (0, 2, 4):
            assert integrand(tables2, params, u, pattern, xi0, order) == 0.0

    def test_order_zero_is_base_trace(self):
        u, params, pattern, tables = _setup(4, (1, 0, 2, 0), 0.6, 0.3, 9)
        rng = np.random.default_rng(1)
        for _ in range(5):
            xi0 = rng.standard_normal(4)
            forms = linear_forms(u, params.c * xi0)
            assert integrand(tables, params, u, pattern, xi0, 0) == pytest.approx(
                base_trace(forms, pattern), rel=1e-13
            )

    def test_bruteforce_expansion_oracle(self):
        # frozen reference point, plus the live dense-Fock evaluation
        u, params, pattern, tables = _setup(2, (1, 1), 0.6, 0.5, 123)
        xi0 = np.array([0.3, -0.7])
        value = integrand(tables, params, u, pattern, xi0, 4)
        assert value == pytest.approx(-0.006656837301257884, rel=1e-12)
        ref = fock_integrand(u.entries, params, (1, 1), xi0, 4)
        assert value == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("order", [0, 2, 4])
    def test_bruteforce_random_cases(self, order):
        rng = np.random.default_rng(7)
        for _ in range(6):
            n = int(rng.integers(1, 4))
            counts = tuple(int(c) for c in rng.integers(0, 3, n))
            u, params, pattern, tables = _setup(
                n, counts, float(rng.uniform(0.2, 0.9)), float(rng.uniform(0, 1)),
                int(rng.integers(999)),
            )
            xi0 = rng.standard_normal(n)
            mine = integrand(tables, params, u, pattern, xi0, order)
            ref = fock_integrand(u.entries, params, counts, xi0, order)
            assert mine == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_unsupported_order(self):
        u, params, pattern, tables = _setup(2, (1, 0), 0.5, 0.5, 1)
        for order in (1, 3, 5, -2):
            with pytest.raises(ValueError, match="order"):
                integrand(tables, params, u, pattern, [0.1, 0.2], order)

    def test_finite_at_zero_field(self):
        u, params, pattern, tables = _setup(3, (1, 2, 0), 0.6, 0.4, 5)
        for order in (0, 2, 4):
            value = integrand(tables, params, u, pattern, np.zeros(3), order)
            assert math.isfinite(value)

    def test_zero_field_single_photon(self):
        # the only surviving term at xi0 = 0 is the mixed insertion on the
        # occupied mode, with weight h c^2 m2[j, j]
        u, params, pattern, tables = _setup(3, (1, 0, 0), 0.6, 0.4, 5)
        value = integrand(tables, params, u, pattern, np.zeros(3), 2)
        expect = params.h * params.c**2 * tables.m2[0, 0].real
        assert value == pytest.approx(expect, rel=1e-12)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(21)
        u, params, pattern, tables = _setup(4, (2, 1, 0, 1), 0.7, 0.5, 14)
        xi0 = rng.standard_normal(4)
        perm = [3, 0, 2, 1]
        u_perm = UnitaryMatrix(u.entries[:, perm])
        pattern_perm = OutputPattern(tuple(pattern.counts[j] for j in perm))
        tables_perm = build_tables(u_perm, pattern_perm)
        for order in (0, 2, 4):
            a = integrand(tables, params, u, pattern, xi0, order)
            b = integrand(tables_perm, params, u_perm, pattern_perm, xi0, order)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-14)

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(22)
        u, params, pattern, tables = _setup(3, (1, 1, 1), 0.8, 0.4, 15)
        xi0 = rng.standard_normal(3)
        rotated = UnitaryMatrix(np.exp(0.731j) * u.entries)
        tables_rot = build_tables(rotated, pattern)
        for order in (0, 2, 4):
            a = integrand(tables, params, u, pattern, xi0, order)
            b = integrand(tables_rot, params, rotated, pattern, xi0, order)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-14)


class TestRowKernel:
    def test_batch_matches_scalar_calls(self):
        u, params, pattern, tables = _setup(3, (1, 2, 0), 0.7, 0.3, 30)
        kernel = _RowKernel(tables, params, u, pattern)
        rng = np.random.default_rng(2)
        rows = rng.standard_normal((16, 3))
        for order in (0, 2, 4):
            batch = kernel.evaluate(rows, order)
            for b in range(16):
                single = integrand(tables, params, u, pattern, rows[b], order)
                assert batch[b] == pytest.approx(single, rel=1e-12, abs=1e-14)

    def test_zero_rows_use_exact_route(self):
        u, params, pattern, tables = _setup(3, (1, 0, 0), 0.6, 0.4, 5)
        kernel = _RowKernel(tables, params, u, pattern)
        rows = np.vstack([np.zeros(3), np.full(3, 0.5)])
        values = kernel.evaluate(rows, 4)
        assert np.all(np.isfinite(values))
        lone = integrand(tables, params, u, pattern, np.full(3, 0.5), 4)
        assert values[1] == pytest.approx(lone, rel=1e-12)

    def test_cost_increases_with_order(self):
        # fixed inputs, generous batch so the ordering is not timing noise
        u = haar_random(24, 1)
        params = derive_params(0.8, 0.5)
        pattern = OutputPattern((1,) * 4 + (0,) * 20)
        tables = build_tables(u, pattern)
        kernel = _RowKernel(tables, params, u, pattern)
        block = _field_block(0, 0, 2048, 24, math.sqrt(params.var_xi0))

        def median_time(order):
            times = []
            for _ in range(7):
                t0 = time.perf_counter()
                kernel.evaluate(block, order)
                times.append(time.perf_counter() - t0)
            times.sort()
            return times[3]

        t0, t2, t4 = median_time(0), median_time(2), median_time(4)
        assert t4 >= t2 >= t0
