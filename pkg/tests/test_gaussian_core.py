import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmqkd.gaussian_core import (
    bosonic_entropy,
    condition_on_homodyne,
    homodyne_pseudoinverse,
    is_physical,
    partial_trace,
    symplectic_eigenvalues,
    symplectic_form,
    tensor,
    thermal,
    tmsv,
    vacuum,
    validate_covariance,
    von_neumann_entropy,
)

from .conftest import random_pure_state, variances


def naive_symplectic_eigenvalues(gamma):
    """Oracle: moduli of the raw non-Hermitian spectrum of i*Omega*gamma."""
    m = gamma.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(m) @ gamma))
    return np.sort(ev)[::-1][::2]


def precision_conditional(gamma, measured, quadrature="x"):
    """Oracle: conditional covariance via the precision matrix.

    Drop the unmeasured quadrature of each measured mode, invert, and
    invert back the block of the remaining modes.
    """
    m = gamma.shape[0] // 2
    rest = [k for k in range(m) if k not in measured]
    q = 0 if quadrature == "x" else 1
    rest_idx = [2 * k + r for k in rest for r in (0, 1)]
    meas_idx = [2 * k + q for k in measured]
    idx = rest_idx + meas_idx
    prec = np.linalg.inv(gamma[np.ix_(idx, idx)])
    n = len(rest_idx)
    return np.linalg.inv(prec[:n, :n])


class TestConstruction:
    def test_tmsv_vacuum_is_identity(self):
        assert np.array_equal(tmsv(1.0), np.eye(4))

    def test_tmsv_blocks(self):
        g = tmsv(3.0)
        np.testing.assert_array_equal(g[:2, :2], 3 * np.eye(2))
        np.testing.assert_allclose(g[:2, 2:], np.sqrt(8) * np.diag([1, -1]), rtol=0, atol=1e-15)

    def test_unphysical_variance(self):
        with pytest.raises(ValueError, match="unphysical variance"):
            tmsv(0.5)

    @given(variances)
    def test_tmsv_is_pure(self, v):
        np.testing.assert_allclose(symplectic_eigenvalues(tmsv(v)), [1, 1], atol=1e-9)

    def test_tensor_of_vacua(self):
        assert np.array_equal(tensor(vacuum(), vacuum()), np.eye(4))

    def test_tensor_spectrum_and_reduction(self):
        a, b = tmsv(3), tmsv(2)
        g = tensor(a, b)
        np.testing.assert_allclose(symplectic_eigenvalues(g), np.ones(4), atol=1e-9)
        np.testing.assert_array_equal(partial_trace(g, [0, 1]), a)
        np.testing.assert_array_equal(partial_trace(g, [2, 3]), b)

    def test_partial_trace_identity_and_marginal(self):
        g = tmsv(4.0)
        np.testing.assert_array_equal(partial_trace(g, [0, 1]), g)
        np.testing.assert_array_equal(partial_trace(g, [0]), 4 * np.eye(2))
        assert symplectic_eigenvalues(partial_trace(g, [0]))[0] == pytest.approx(4.0)

    def test_partial_trace_bad_index(self):
        with pytest.raises(IndexError):
            partial_trace(tmsv(2), [2])
        with pytest.raises(ValueError):
            partial_trace(tmsv(2), [])

    def test_validation(self):
        with pytest.raises(ValueError, match="symmetric"):
            validate_covariance(np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(ValueError, match="even"):
            validate_covariance(np.eye(3))
        with pytest.raises(ValueError, match="uncertainty"):
            validate_covariance(0.5 * np.eye(2), physical=True)


class TestConditioning:
    @pytest.mark.parametrize("v", [1.5, 3.0, 10.0])
    def test_tmsv_conditioned_on_x(self, v):
        # V - (V^2 - 1)/V = 1/V on x; p untouched
        out = condition_on_homodyne(tmsv(v), [1], "x")
        np.testing.assert_allclose(out, np.diag([1 / v, v]), atol=1e-12)

    def test_product_state_unchanged(self):
        a = tmsv(2.0)
        g = tensor(a, thermal(3.0))
        np.testing.assert_allclose(condition_on_homodyne(g, [2]), a, atol=1e-15)

    def test_vacuum_on_vacuum(self):
        np.testing.assert_array_equal(condition_on_homodyne(vacuum(2), [1]), np.eye(2))

    def test_all_modes_measured(self):
        with pytest.raises(ValueError, match="no remaining modes"):
            condition_on_homodyne(tmsv(2), [0, 1])

    def test_pseudoinverse_single_mode_exact(self):
        for v in (0.3, 1.0, 7.25):
            out = homodyne_pseudoinverse(np.diag([v, 5.0]), "x")
            assert np.array_equal(out, np.diag([1 / v, 0.0]))
        assert np.array_equal(homodyne_pseudoinverse(np.diag([5.0, 2.0]), "p"), np.diag([0.0, 0.5]))

    def test_pseudoinverse_matches_numpy(self):
        block = tmsv(3.0)
        x = np.diag([1.0, 0, 1, 0])
        np.testing.assert_allclose(homodyne_pseudoinverse(block), np.linalg.pinv(x @ block @ x), atol=1e-12)

    def test_zero_measured_variance_rejected(self):
        g = np.diag([2.0, 2.0, 0.0, 1.0])
        with pytest.raises(ValueError, match="not positive"):
            condition_on_homodyne(g, [1])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
    def test_matches_precision_oracle(self, seed, pairs, n_measured):
        rng = np.random.default_rng(seed)
        g = random_pure_state(rng, pairs, 3 * pairs)
        m = 2 * pairs
        measured = sorted(rng.choice(m, min(n_measured, m - 1), replace=False).tolist())
        for q in ("x", "p"):
            np.testing.assert_allclose(
                condition_on_homodyne(g, measured, q), precision_conditional(g, measured, q), rtol=1e-8, atol=1e-8
            )

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3))
    def test_preserves_physicality_and_purity(self, seed, pairs):
        rng = np.random.default_rng(seed)
        g = random_pure_state(rng, pairs, 4)
        out = condition_on_homodyne(g, [0])
        assert is_physical(out)
        # homodyning part of a pure state leaves a pure state
        assert von_neumann_entropy(out) == pytest.approx(0, abs=1e-7)


class TestSpectrumAndEntropy:
    def test_identity(self):
        np.testing.assert_allclose(symplectic_eigenvalues(np.eye(6)), np.ones(3))

    def test_thermal(self):
        assert symplectic_eigenvalues(thermal(2.5))[0] == pytest.approx(2.5)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            symplectic_eigenvalues(np.array([[1.0, 0.1], [0.0, 1.0]]))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_matches_naive_spectrum(self, seed, pairs):
        rng = np.random.default_rng(seed)
        g = random_pure_state(rng, pairs, 5)
        # mixedness from a partial trace
        keep = list(range(2 * pairs - 1)) if pairs > 1 else [0]
        g = partial_trace(g, keep)
        np.testing.assert_allclose(symplectic_eigenvalues(g), naive_symplectic_eigenvalues(g), rtol=1e-7)

    def test_two_mode_invariant_formula(self):
        # Delta = det A + det B + 2 det C; nu^2 = (Delta +- sqrt(Delta^2 - 4 det g)) / 2
        g = partial_trace(random_pure_state(np.random.default_rng(4), 2, 6), [0, 2])
        a, b, c = g[:2, :2], g[2:, 2:], g[:2, 2:]
        delta = np.linalg.det(a) + np.linalg.det(b) + 2 * np.linalg.det(c)
        disc = np.sqrt(delta**2 - 4 * np.linalg.det(g))
        expected = np.sqrt([(delta + disc) / 2, (delta - disc) / 2])
        np.testing.assert_allclose(symplectic_eigenvalues(g), expected, rtol=1e-10)

    def test_entropy_function(self):
        assert bosonic_entropy(0.0) == 0.0
        assert bosonic_entropy(1e-14) == 0.0
        assert bosonic_entropy(1.0) == pytest.approx(2.0)

    def test_thermal_entropy(self):
        assert von_neumann_entropy(thermal(3.0)) == pytest.approx(2.0, abs=1e-12)

    @given(variances)
    def test_tmsv_entropy_zero(self, v):
        assert von_neumann_entropy(tmsv(v)) == pytest.approx(0, abs=1e-8)

    @given(variances, variances)
    def test_entropy_additive(self, v1, v2):
        a, b = thermal(v1), partial_trace(tmsv(v2), [1])
        assert von_neumann_entropy(tensor(a, b)) == pytest.approx(
            von_neumann_entropy(a) + von_neumann_entropy(b), abs=1e-10
        )

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_purity_iff_unit_spectrum(self, seed, pairs):
        rng = np.random.default_rng(seed)
        g = random_pure_state(rng, pairs, 6)
        assert np.all(np.abs(symplectic_eigenvalues(g) - 1) < 1e-9)
        assert von_neumann_entropy(g) < 1e-9
        mixed = partial_trace(g, [0])
        nu = symplectic_eigenvalues(mixed)
        assert (von_neumann_entropy(mixed) < 1e-9) == bool(np.all(np.abs(nu - 1) < 1e-9))
