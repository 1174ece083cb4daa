import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlvar.core import ModelShape, RangeBounds, ValidationError
from nlvar.dynamics import companion_spectral_radius
from nlvar.forward import evaluate_mse
from nlvar.monotone import eval_f, eval_f_prime, eval_g
from nlvar.synthetic import default_ranges, generate_dataset, random_node_maps, random_var_coeffs
from nlvar.training import project_params

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=30)
@given(seeds)
def test_var_draws_hit_the_radius(seed):
    var = random_var_coeffs(ModelShape(4, 2, 1), 0.95, seed)
    c = np.zeros((8, 8))
    c[:4] = np.hstack(list(var.entries))
    c[4:, :4] = np.eye(4)
    assert np.abs(np.linalg.eigvals(c)).max() == pytest.approx(0.95, abs=1e-6)


def test_var_draws_are_seeded():
    shape = ModelShape(3, 2, 1)
    np.testing.assert_array_equal(random_var_coeffs(shape, 0.9, 5).entries, random_var_coeffs(shape, 0.9, 5).entries)
    with pytest.raises(ValidationError):
        random_var_coeffs(shape, 1.0)


def test_raw_draws_are_standard_normal():
    # recover the unscaled draw from the same generator
    raw = np.random.Generator(np.random.PCG64(11)).standard_normal((2, 10, 10))
    var = random_var_coeffs(ModelShape(10, 2, 1), 0.95, 11)
    # lag-p scaling is a power of one common factor
    c = var.entries[0, 0, 0] / raw[0, 0, 0]
    np.testing.assert_allclose(var.entries[0], c * raw[0], rtol=1e-12)
    np.testing.assert_allclose(var.entries[1], c * c * raw[1], rtol=1e-12)
    assert abs(raw.mean()) < 0.1
    assert raw.var() == pytest.approx(1.0, rel=0.15)


@settings(max_examples=30)
@given(seeds, st.floats(-3, 3), st.floats(0.2, 5))
def test_maps_are_feasible_and_increasing(seed, lower, span):
    r = RangeBounds(lower, lower + span)
    maps = random_node_maps(ModelShape(3, 1, 5), [r] * 3, seed)
    grid = np.linspace(-5, 5, 100)
    for m in maps:
        assert m.violations() == []
        assert np.all(np.diff(eval_f(m, grid)) > 0)
        assert np.all((0.5 <= m.w) & (m.w <= 2)) and np.all((-2 <= m.k) & (m.k <= 2))


def test_maps_unit_span_sum_exactly_one_and_survive_projection():
    maps = random_node_maps(ModelShape(4, 1, 5), default_ranges(4, 0.0, 1.0), 3)
    assert all(m.alpha.sum() == pytest.approx(1.0, abs=1e-15) for m in maps)
    data = generate_dataset(ModelShape(4, 1, 5), seed=3)
    model = data.ground_truth
    projected = project_params(model)
    for a, b in zip(model.stack, projected.stack):
        np.testing.assert_array_equal(a, b)
    with pytest.raises(ValidationError):
        random_node_maps(ModelShape(4, 1, 5), default_ranges(3), 0)


def test_dataset_image_and_roundtrip():
    data = generate_dataset(ModelShape(3, 2, 4), 0.9, 1.0, t_total=300, seed=2)
    z = data.observed.data
    assert z.shape == (300, 3)
    assert np.all((z > -1) & (z < 1))
    for i, m in enumerate(data.ground_truth.maps):
        y = eval_g(m, z[:, i])
        np.testing.assert_allclose(eval_f(m, y), z[:, i], rtol=0, atol=1e-10 * m.bounds.span)
        ok = (z[:, i] > -1 + 1e-6) & (z[:, i] < 1 - 1e-6)
        np.testing.assert_allclose(y[ok], data.latent.data[ok, i], rtol=1e-6, atol=1e-6)


def test_noise_free_dataset_is_constant_at_f0():
    data = generate_dataset(ModelShape(2, 2, 3), 0.9, 0.0, t_total=20, seed=1)
    f0 = [eval_f(m, 0.0) for m in data.ground_truth.maps]
    np.testing.assert_array_equal(data.observed.data, np.tile(f0, (20, 1)))


def test_dataset_is_deterministic_and_stage_seeds_are_separate():
    a = generate_dataset(ModelShape(3, 2, 3), 0.9, 1.0, t_total=50, seed=9)
    b = generate_dataset(ModelShape(3, 2, 3), 0.9, 1.0, t_total=50, seed=9)
    c = generate_dataset(ModelShape(3, 2, 3), 0.9, 0.5, t_total=50, seed=9)
    np.testing.assert_array_equal(a.observed.data, b.observed.data)
    np.testing.assert_array_equal(a.ground_truth.var.entries, c.ground_truth.var.entries)
    np.testing.assert_array_equal(a.latent.data, 2 * c.latent.data)
    assert companion_spectral_radius(a.ground_truth.var) == pytest.approx(0.9, abs=1e-9)


def test_ground_truth_error_sits_at_the_mapped_noise_floor():
    sigma = 0.05
    data = generate_dataset(ModelShape(3, 2, 5), 0.95, sigma, t_total=5000, seed=4)
    truth = data.ground_truth
    # first-order image of the innovation through each map, averaged over the path
    slopes = np.column_stack([eval_f_prime(m, data.latent.data[:, i]) for i, m in enumerate(truth.maps)])
    floor = np.mean(slopes[2:] ** 2) * sigma ** 2
    mse = evaluate_mse(truth, data.observed)
    assert 0.5 * floor <= mse <= 2 * floor
