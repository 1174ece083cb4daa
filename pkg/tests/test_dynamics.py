import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlvar.core import Role, ValidationError, VarCoefficients
from nlvar.dynamics import (
    InnovationSpec,
    companion_matrix,
    companion_spectral_radius,
    predict_latent,
    simulate_var,
    stabilize,
)


def eig_radius(entries):
    """Dense eigensolver oracle on an independently assembled companion matrix."""
    p, n, _ = entries.shape
    c = np.zeros((n * p, n * p))
    for lag in range(p):
        c[:n, lag * n:(lag + 1) * n] = entries[lag]
    c[n:, :-n] = np.eye(n * (p - 1))
    return np.abs(np.linalg.eigvals(c)).max()


var_tensors = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1)).map(
    lambda t: np.random.Generator(np.random.PCG64(t[2])).standard_normal((t[1], t[0], t[0])))


def test_predict_latent_examples(rng):
    assert np.all(predict_latent(VarCoefficients.zeros(2, 3), rng.standard_normal((2, 3))) == 0)
    v = rng.standard_normal(4)
    np.testing.assert_array_equal(predict_latent(VarCoefficients(np.eye(4)[None]), v[None]), v)


def test_predict_latent_matches_nested_loops(rng):
    a = rng.standard_normal((2, 2, 2))
    hist = rng.standard_normal((2, 2))
    expected = [sum(a[p, i, j] * hist[p, j] for p in range(2) for j in range(2)) for i in range(2)]
    np.testing.assert_allclose(predict_latent(VarCoefficients(a), hist), expected, rtol=1e-14)


def test_predict_latent_shape_check():
    with pytest.raises(ValidationError):
        predict_latent(VarCoefficients.zeros(2, 3), np.zeros((3, 3)))


def test_companion_matrix_layout(rng):
    a = rng.standard_normal((3, 2, 2))
    c = companion_matrix(VarCoefficients(a))
    assert c.shape == (6, 6)
    np.testing.assert_array_equal(c[:2, 2:4], a[1])
    np.testing.assert_array_equal(c[2:4, 0:2], np.eye(2))


def test_radius_examples(rng):
    assert companion_spectral_radius(VarCoefficients.zeros(2, 3)) == 0.0
    assert companion_spectral_radius(VarCoefficients(0.5 * np.eye(3)[None])) == pytest.approx(0.5, abs=1e-12)
    a = rng.standard_normal((2, 3, 3))
    assert companion_spectral_radius(VarCoefficients(a)) == pytest.approx(eig_radius(a), rel=1e-9)


def test_radius_with_complex_dominant_pair():
    # rotation by 90 degrees scaled by 0.8: eigenvalues 0.8 * (+-i)
    a = 0.8 * np.array([[[0.0, -1.0], [1.0, 0.0]]])
    assert companion_spectral_radius(VarCoefficients(a)) == pytest.approx(0.8, abs=1e-10)


def test_radius_nilpotent():
    a = np.array([[[0.0, 1.0], [0.0, 0.0]]])
    assert companion_spectral_radius(VarCoefficients(a)) == pytest.approx(0.0, abs=1e-6)


@given(var_tensors)
def test_radius_matches_eigensolver(a):
    assert companion_spectral_radius(VarCoefficients(a)) == pytest.approx(eig_radius(a), rel=1e-8, abs=1e-10)


def test_stabilize_examples(rng):
    out = stabilize(VarCoefficients(2 * np.eye(3)[None]), 0.5)
    np.testing.assert_allclose(out.entries, 0.5 * np.eye(3)[None], atol=1e-12)
    a = rng.standard_normal((3, 4, 4))
    assert eig_radius(stabilize(VarCoefficients(a), 0.95).entries) == pytest.approx(0.95, abs=1e-6)
    zero = VarCoefficients.zeros(2, 2)
    assert stabilize(zero, 0.9) is zero


@given(var_tensors, st.floats(0.05, 0.99))
def test_stabilize_hits_target_and_is_idempotent(a, target):
    once = stabilize(VarCoefficients(a), target)
    assert eig_radius(once.entries) == pytest.approx(target, abs=1e-6)
    twice = stabilize(once, target)
    np.testing.assert_allclose(twice.entries, once.entries, rtol=1e-9, atol=1e-12)


def test_stabilize_rejects_bad_target():
    with pytest.raises(ValidationError):
        stabilize(VarCoefficients(np.eye(2)[None]), 1.0)


def test_simulate_zero():
    out = simulate_var(VarCoefficients.zeros(2, 3), InnovationSpec(0.0, 1), 50)
    assert out.role is Role.LATENT
    assert out.data.shape == (50, 3) and np.all(out.data == 0)


def test_simulate_geometric_decay():
    var = VarCoefficients(np.array([[[0.5]]]))
    out = simulate_var(var, InnovationSpec(0.0, 0), 10, burn_in=0, initial=np.array([[1.0]]))
    np.testing.assert_allclose(out.data[:, 0], 0.5 ** np.arange(10), rtol=1e-15)


def test_simulate_ar1_stationary_variance():
    var = VarCoefficients(np.array([[[0.5]]]))
    out = simulate_var(var, InnovationSpec(1.0, 7), 200_000)
    assert out.data.var() == pytest.approx(1 / (1 - 0.25), rel=0.02)


def test_simulate_is_reproducible_and_seed_sensitive(rng):
    var = stabilize(VarCoefficients(rng.standard_normal((2, 3, 3))), 0.9)
    a = simulate_var(var, InnovationSpec(1.0, 3), 100)
    b = simulate_var(var, InnovationSpec(1.0, 3), 100)
    c = simulate_var(var, InnovationSpec(1.0, 4), 100)
    np.testing.assert_array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_simulate_rejects_unstable_and_bad_args():
    with pytest.raises(ValidationError, match="stable"):
        simulate_var(VarCoefficients(np.array([[[1.2]]])), InnovationSpec(1.0, 0), 10)
    with pytest.raises(ValidationError):
        simulate_var(VarCoefficients.zeros(1, 1), InnovationSpec(1.0, 0), 0)
    with pytest.raises(ValidationError):
        InnovationSpec(-1.0, 0)
