import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fracmorrey.corpus import CorpusSpec, generate
from fracmorrey.grid import GridFunction, GridSpec, delta, sample
from fracmorrey.semigroup import (
    GaussianBoundFit,
    KernelMatrix,
    OperatorError,
    SemigroupOperator,
    divform_apply,
    gaussian_bound_fit,
    gaussian_bound_value,
    heat_apply,
    heat_kernel_exact,
    kernel_matrix,
    schrodinger_apply,
)


def bump_potential(spec, seed=3):
    return generate(CorpusSpec(seed, ("potential",), 1, spec))[0].function.values


def smooth(spec):
    return sample(spec, lambda x: np.exp(-2 * x**2) + 0.3 * np.sin(2 * np.pi * x / spec.L))


def coefficient(spec, seed=5):
    return generate(CorpusSpec(seed, ("coefficient",), 1, spec))[0].function.values


BACKENDS = ["heat", "schrodinger", "divform"]


def make(kind, spec, **kw):
    if kind == "heat":
        return SemigroupOperator("heat", spec)
    if kind == "schrodinger":
        return SemigroupOperator("schrodinger", spec, potential=bump_potential(spec), **kw)
    return SemigroupOperator("divform", spec, coefficient=coefficient(spec))


class TestValidation:
    def test_negative_potential_names_node(self):
        spec = GridSpec(1, 16, 4.0)
        V = np.ones(16)
        V[5] = -0.1
        with pytest.raises(OperatorError, match=r"node \(5,\)"):
            SemigroupOperator("schrodinger", spec, potential=V)

    def test_coefficient_bounds_name_node(self):
        spec = GridSpec(1, 16, 4.0)
        a = np.ones(16)
        a[9] = 3.0
        with pytest.raises(OperatorError, match="node 9"):
            SemigroupOperator("divform", spec, coefficient=a)

    def test_divform_needs_1d(self):
        with pytest.raises(OperatorError):
            SemigroupOperator("divform", GridSpec(2, 8, 1.0), coefficient=1.0)

    @pytest.mark.parametrize("kind", BACKENDS)
    def test_negative_time(self, kind):
        spec = GridSpec(1, 16, 4.0)
        with pytest.raises(OperatorError):
            make(kind, spec).apply(-1.0, smooth(spec))

    def test_unknown_kind(self):
        with pytest.raises(OperatorError):
            SemigroupOperator("wave", GridSpec(1, 8, 1.0))

    def test_budget(self):
        with pytest.raises(OperatorError, match="smaller N"):
            kernel_matrix(SemigroupOperator("heat", GridSpec(2, 128, 1.0)), 0.1)


class TestHeat:
    @pytest.mark.parametrize("kind", BACKENDS)
    def test_time_zero_identity(self, kind):
        spec = GridSpec(1, 64, 8.0)
        f = smooth(spec)
        np.testing.assert_array_equal(make(kind, spec).apply(0.0, f).values, f.values)

    @pytest.mark.parametrize("kind", ["heat", "divform"])
    @pytest.mark.parametrize("t", [0.01, 1.0, 50.0])
    def test_conservation(self, kind, t):
        spec = GridSpec(1, 64, 8.0)
        out = make(kind, spec).apply(t, sample(spec, 1.0)).values
        np.testing.assert_allclose(out, 1.0, atol=1e-12)

    def test_delta_peak(self):
        spec = GridSpec(1, 1024, 16.0)
        out = heat_apply(0.01, delta(spec)).values
        assert out[512] == pytest.approx((4 * math.pi * 0.01) ** -0.5, rel=1e-6)

    def test_matches_dense_oracle(self):
        spec = GridSpec(1, 32, 4.0)
        f = smooth(spec)
        want = oracles.heat_matrix(32, 4.0, 0.3) @ f.values
        np.testing.assert_allclose(heat_apply(0.3, f).values, want, atol=1e-12)

    def test_2d_gaussian_evolution(self):
        spec = GridSpec(2, 64, 16.0)
        s0 = 0.2
        f = sample(spec, lambda x, y: np.exp(-(x**2 + y**2) / (4 * s0)), "compact")
        t = 0.2
        out = heat_apply(t, f).values
        x, y = spec.coordinates()
        want = s0 / (s0 + t) * np.exp(-(x**2 + y**2) / (4 * (s0 + t)))
        np.testing.assert_allclose(out, want, atol=1e-10)


class TestSchrodinger:
    def test_zero_potential_is_heat(self):
        spec = GridSpec(1, 64, 8.0)
        f = smooth(spec)
        op = SemigroupOperator("schrodinger", spec, potential=np.zeros(64))
        np.testing.assert_allclose(schrodinger_apply(0.5, f, op).values, heat_apply(0.5, f).values, atol=1e-12)

    @pytest.mark.parametrize("c", [0.3, 2.0])
    def test_constant_potential_commutes(self, c):
        spec = GridSpec(1, 64, 8.0)
        f = smooth(spec)
        op = SemigroupOperator("schrodinger", spec, potential=np.full(64, c))
        want = math.exp(-0.7 * c) * heat_apply(0.7, f).values
        np.testing.assert_allclose(schrodinger_apply(0.7, f, op).values, want, atol=1e-12)

    def test_defect_nonnegative(self):
        spec = GridSpec(1, 64, 8.0)
        op = make("schrodinger", spec)
        defect = 1 - op.apply(0.5, sample(spec, 1.0)).values
        assert np.all(defect >= -1e-14) and np.max(defect) > 0

    def test_matches_expm_small(self):
        spec = GridSpec(1, 32, 4.0)
        V = bump_potential(spec)
        op = SemigroupOperator("schrodinger", spec, potential=V, substeps=64)
        f = smooth(spec)
        want = oracles.schrodinger_matrix(32, 4.0, V, 0.1) @ f.values
        got = op.apply(0.1, f).values
        assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-4

    def test_splitting_converges_second_order(self):
        spec = GridSpec(1, 32, 4.0)
        V = bump_potential(spec)
        f = smooth(spec)
        want = oracles.schrodinger_matrix(32, 4.0, V, 0.1) @ f.values
        errs = []
        for m in (16, 32, 64):
            op = SemigroupOperator("schrodinger", spec, potential=V, substeps=m)
            errs.append(np.linalg.norm(op.apply(0.1, f).values - want))
        assert errs[0] / errs[1] == pytest.approx(4, rel=0.15)
        assert errs[1] / errs[2] == pytest.approx(4, rel=0.15)


class TestDivform:
    def test_unit_coefficient_matches_heat(self):
        # lowest periodic mode: the finite-difference symbol error is k^4 h^2 / 12
        spec = GridSpec(1, 256, 16.0)
        f = sample(spec, lambda x: np.cos(2 * np.pi * x / 16.0))
        op = SemigroupOperator("divform", spec, coefficient=1.0)
        got = divform_apply(0.1, f, op).values
        assert np.max(np.abs(got - heat_apply(0.1, f).values)) < 1e-6

    def test_symmetric_matrix(self):
        from fracmorrey.semigroup import divform_matrix

        M = divform_matrix(coefficient(GridSpec(1, 32, 4.0)), 0.125)
        np.testing.assert_allclose(M, M.T, atol=0)
        np.testing.assert_allclose(M.sum(axis=1), 0, atol=1e-10)


@pytest.mark.parametrize("kind", BACKENDS)
class TestSemigroupProperties:
    def test_semigroup_law(self, kind):
        spec = GridSpec(1, 64, 8.0)
        op = make(kind, spec)
        f = smooth(spec)
        a = op.apply(0.3, f).values
        b = op.apply(0.1, op.apply(0.2, f)).values
        tol = 1e-10 if kind != "schrodinger" else 1e-3
        assert np.max(np.abs(a - b)) <= tol * np.max(np.abs(a))

    @settings(max_examples=15, deadline=None)
    @given(st.floats(1e-3, 5.0), st.integers(0, 2**31))
    def test_positivity_and_contraction(self, kind, t, seed):
        spec = GridSpec(1, 32, 4.0)
        f = np.random.default_rng(seed).random(32)
        out = make(kind, spec).apply(t, GridFunction(spec, f)).values
        assert np.all(out >= -1e-10 * f.max())
        if kind != "schrodinger":
            assert out.max() <= f.max() + 1e-12

    def test_kernel_reconstruction(self, kind):
        spec = GridSpec(1, 32, 4.0)
        op = make(kind, spec)
        f = smooth(spec)
        K = kernel_matrix(op, 0.2)
        np.testing.assert_allclose(K.entries @ f.values * spec.h, op.apply(0.2, f).values, atol=1e-10)

    def test_kernel_positive(self, kind):
        spec = GridSpec(1, 32, 4.0)
        K = kernel_matrix(make(kind, spec), 0.2).entries
        assert np.all(np.isfinite(K)) and K.min() >= -1e-10 * K.max()


class TestKernels:
    @pytest.mark.parametrize("t", [0.01, 0.3])
    def test_heat_kernel_circulant_symmetric(self, t):
        spec = GridSpec(1, 64, 8.0)
        K = kernel_matrix(SemigroupOperator("heat", spec), t).entries
        np.testing.assert_allclose(K, K.T, atol=1e-10 * K.max())
        for s in (1, 7):
            np.testing.assert_allclose(np.roll(np.roll(K, s, 0), s, 1), K, atol=1e-10 * K.max())

    def test_compact_heat_kernel_exact(self):
        spec = GridSpec(1, 128, 8.0)
        t = 0.1
        K = kernel_matrix(SemigroupOperator("heat", spec), t, "compact").entries
        E = heat_kernel_exact(spec, t)
        assert np.max(np.abs(K - E)) <= 1e-10 * E.max()

    def test_feynman_kac_domination(self):
        # h^2 < t for every scanned t so the discrete kernels are resolved
        spec = GridSpec(1, 128, 4.0)
        for t in (0.01, 0.1, 1.0):
            S = kernel_matrix(make("schrodinger", spec), t).entries
            H = kernel_matrix(make("heat", spec), t).entries
            assert np.all(S <= H + 1e-8)


class TestGaussianFit:
    def test_heat_constant(self):
        spec = GridSpec(1, 256, 16.0)
        op = SemigroupOperator("heat", spec)
        fit = gaussian_bound_fit([kernel_matrix(op, t, "compact") for t in (0.01, 0.1, 1.0)], 0.25)
        assert fit.C_fit == pytest.approx((4 * math.pi) ** -0.5, rel=0.01)

    def test_zero_kernel(self):
        spec = GridSpec(1, 16, 4.0)
        K = KernelMatrix(0.1, np.zeros((16, 16)), {}, spec)
        assert gaussian_bound_fit([K], 0.25).C_fit == 0.0

    def test_errors(self):
        spec = GridSpec(1, 16, 4.0)
        K = KernelMatrix(0.1, np.zeros((16, 16)), {}, spec)
        with pytest.raises(OperatorError):
            gaussian_bound_fit([], 0.25)
        with pytest.raises(OperatorError):
            gaussian_bound_fit([K], 0.0)

    def test_bound_holds_and_witness_reproduces(self):
        spec = GridSpec(1, 64, 8.0)
        kernels = [kernel_matrix(make("schrodinger", spec), t) for t in (0.05, 0.5)]
        fit = gaussian_bound_fit(kernels, 0.125)
        assert isinstance(fit, GaussianBoundFit) and fit.C_fit >= 0
        loc = fit.max_violation_location
        K = next(k for k in kernels if k.t == loc["t"])
        assert gaussian_bound_value(K, 0.125, loc["i"], loc["j"]) == pytest.approx(fit.C_fit, rel=1e-10)
        from fracmorrey.semigroup import pair_distances

        for K in kernels:
            d, _ = pair_distances(spec, "periodic")
            bound = fit.C_fit * K.t**-0.5 * np.exp(-0.125 * d**2 / K.t)
            scaled = np.abs(K.entries) * K.t**0.5
            mask = scaled >= fit.noise_floor
            assert np.all(np.abs(K.entries)[mask] <= bound[mask] * (1 + 1e-12))

    def test_schrodinger_below_heat(self):
        spec = GridSpec(1, 128, 8.0)
        ts = (0.01, 0.1, 1.0)
        S = gaussian_bound_fit([kernel_matrix(make("schrodinger", spec), t, "compact") for t in ts], 0.25)
        H = gaussian_bound_fit([kernel_matrix(make("heat", spec), t, "compact") for t in ts], 0.25)
        assert S.C_fit <= H.C_fit + 1e-8
