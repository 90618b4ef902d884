import numpy as np
import pytest

from mixedadc.array_model import (
    ArrayConfig,
    DiscreteRandomThreshold,
    ExplicitThreshold,
    OptimalThreshold,
    SourceScene,
    acquire,
    draw_threshold,
    mix,
    noiseless_output,
    observe,
    orthogonal_scene,
    quantize,
    resolve_threshold,
    steering_derivative,
    steering_matrix,
    steering_vector,
    synthesize_scene,
)


def test_array_needs_two_elements():
    with pytest.raises(ValueError):
        ArrayConfig(1)


class TestSteering:
    def test_broadside(self):
        np.testing.assert_array_equal(steering_vector(ArrayConfig(4), 0.0), np.ones(4))

    def test_thirty_degrees(self):
        a = steering_vector(ArrayConfig(2), np.pi / 6)
        np.testing.assert_allclose(a, [1, 1j], atol=1e-15)

    def test_termwise(self):
        a = steering_vector(ArrayConfig(3), 0.3)
        expected = [complex(np.cos(np.pi * i * np.sin(0.3)), np.sin(np.pi * i * np.sin(0.3)))
                    for i in range(3)]
        np.testing.assert_allclose(a, expected, rtol=1e-15)
        assert a[0] == 1

    def test_derivative_broadside(self):
        np.testing.assert_allclose(steering_derivative(ArrayConfig(2), 0.0), [0, 1j * np.pi])

    @pytest.mark.parametrize("theta", [np.pi / 2, -np.pi / 2, 2.0, np.nan])
    def test_endfire_rejected(self, theta):
        with pytest.raises(ValueError):
            steering_vector(ArrayConfig(3), theta)
        with pytest.raises(ValueError):
            steering_derivative(ArrayConfig(3), theta)

    @pytest.mark.parametrize("theta", [-1.0, -0.3, 0.0, 0.3, 0.4, 1.2])
    def test_derivative_matches_finite_difference(self, theta):
        cfg = ArrayConfig(3)
        h = 1e-6
        fd = (steering_vector(cfg, theta + h) - steering_vector(cfg, theta - h)) / (2 * h)
        exact = steering_derivative(cfg, theta)
        assert exact[0] == 0
        np.testing.assert_allclose(exact, fd, rtol=1e-6, atol=1e-6 * np.max(np.abs(exact)))

    def test_unit_modulus(self):
        a = steering_matrix(ArrayConfig(16), [-1.2, 0.1, 0.9])
        np.testing.assert_allclose(np.abs(a), 1.0, rtol=1e-14)


class TestScene:
    def test_constant_modulus(self):
        scene = synthesize_scene(ArrayConfig(4), 1, 50, [0.2], [1.0], seed=5)
        np.testing.assert_allclose(np.abs(scene.source_matrix), 1.0, rtol=1e-14)

    def test_deterministic(self):
        cfg = ArrayConfig(5)
        a = synthesize_scene(cfg, 2, 7, [0.1, 0.4], [1, 2], seed=11)
        b = synthesize_scene(cfg, 2, 7, [0.1, 0.4], [1, 2], seed=11)
        np.testing.assert_array_equal(a.source_matrix, b.source_matrix)

    def test_sample_covariance_diagonal(self):
        scene = synthesize_scene(ArrayConfig(5), 2, 10, [0.1, 0.4], [1, 1], seed=1)
        np.testing.assert_allclose(np.diag(scene.sample_covariance()).real, [1, 1], rtol=1e-14)
        np.testing.assert_allclose(scene.powers, [1, 1], rtol=1e-14)

    def test_too_many_sources(self):
        with pytest.raises(ValueError):
            synthesize_scene(ArrayConfig(3), 3, 4, [0.1, 0.2, 0.3], 1.0, seed=0)

    def test_nonpositive_power(self):
        with pytest.raises(ValueError):
            synthesize_scene(ArrayConfig(3), 1, 4, [0.1], [0.0], seed=0)

    def test_bad_noise_variance(self):
        with pytest.raises(ValueError):
            SourceScene([0.1], np.ones((1, 2)), 0.0)

    def test_angle_outside_range(self):
        with pytest.raises(ValueError):
            SourceScene([1.6], np.ones((1, 2)), 1.0)

    def test_orthogonal_scene_covariance(self):
        scene = orthogonal_scene(ArrayConfig(6), 10, [0.1, 0.3, 0.5], [1, 2, 3])
        np.testing.assert_allclose(scene.sample_covariance(), np.diag([1, 2, 3]), atol=1e-14)


class TestObserve:
    def test_noise_free_limit(self):
        cfg = ArrayConfig(4)
        scene = synthesize_scene(cfg, 1, 3, [0.3], [1], seed=2, noise_variance=1e-300)
        np.testing.assert_allclose(observe(scene, cfg, seed=0), noiseless_output(scene, cfg), atol=1e-140)

    def test_noise_variance(self):
        cfg = ArrayConfig(4)
        scene = synthesize_scene(cfg, 1, 25_000, [0.3], [1], seed=2, noise_variance=0.7)
        E = observe(scene, cfg, seed=3) - noiseless_output(scene, cfg)
        assert E.size == 100_000
        assert abs(np.mean(np.abs(E) ** 2) / 0.7 - 1) < 0.02
        assert abs(np.var(E.real) / 0.35 - 1) < 0.02
        assert abs(np.var(E.imag) / 0.35 - 1) < 0.02

    def test_deterministic(self):
        cfg = ArrayConfig(4)
        scene = synthesize_scene(cfg, 1, 5, [0.3], [1], seed=2)
        np.testing.assert_array_equal(observe(scene, cfg, 9), observe(scene, cfg, 9))


class TestQuantize:
    def test_signs(self):
        np.testing.assert_array_equal(quantize([[1 - 2j]], [[0]]), [[1 - 1j]])

    def test_sign_zero_is_plus_one(self):
        X = np.array([[0.3 + 0.1j, -2j]])
        np.testing.assert_array_equal(quantize(X, X), np.full((1, 2), 1 + 1j))

    def test_codomain(self, rng):
        X = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        H = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
        Z = quantize(X, H)
        assert set(np.unique(Z.real)) <= {-1.0, 1.0}
        assert set(np.unique(Z.imag)) <= {-1.0, 1.0}

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            quantize(np.zeros((2, 2)), np.zeros((2, 3)))


class TestMix:
    def setup_method(self):
        r = np.random.default_rng(0)
        self.X = r.standard_normal((2, 3)) + 1j * r.standard_normal((2, 3))
        self.Z = quantize(self.X, np.zeros((2, 3)))

    def test_all_high(self):
        np.testing.assert_array_equal(mix(self.X, self.Z, [1, 1]), self.X)

    def test_all_one_bit(self):
        np.testing.assert_array_equal(mix(self.X, self.Z, [0, 0]), self.Z)

    def test_rows(self):
        Y = mix(self.X, self.Z, [1, 0])
        np.testing.assert_array_equal(Y[0], self.X[0])
        np.testing.assert_array_equal(Y[1], self.Z[1])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mix(self.X, self.Z, [1, 0, 1])


class TestThresholds:
    def test_levels(self):
        scheme = DiscreteRandomThreshold(h_max=2.0, levels=8)
        np.testing.assert_allclose(np.diff(scheme.values()), 4 / 7)
        H = draw_threshold(scheme, (30, 200))
        allowed = scheme.values()
        assert np.all(np.isin(H.real, allowed)) and np.all(np.isin(H.imag, allowed))
        assert set(np.unique(H.real)) == set(allowed)

    def test_levels_validated(self):
        with pytest.raises(ValueError):
            DiscreteRandomThreshold(levels=1)

    def test_resolve(self):
        cfg = ArrayConfig(3)
        scene = synthesize_scene(cfg, 1, 4, [0.2], [1], seed=0)
        np.testing.assert_array_equal(resolve_threshold(OptimalThreshold(), scene, cfg),
                                      noiseless_output(scene, cfg))
        H = np.ones((3, 4))
        np.testing.assert_array_equal(resolve_threshold(ExplicitThreshold(H), scene, cfg), H)
        with pytest.raises(ValueError):
            resolve_threshold(ExplicitThreshold(np.ones((2, 4))), scene, cfg)
        H1 = resolve_threshold(DiscreteRandomThreshold(seed=4), scene, cfg)
        H2 = resolve_threshold(DiscreteRandomThreshold(seed=4), scene, cfg)
        np.testing.assert_array_equal(H1, H2)

    def test_acquire(self):
        cfg = ArrayConfig(4)
        scene = synthesize_scene(cfg, 1, 6, [0.2], [1], seed=0)
        snaps = acquire(scene, cfg, [1, 0, 0, 1], OptimalThreshold(), seed=1)
        np.testing.assert_array_equal(snaps.mixed[[0, 3]], snaps.unquantized[[0, 3]])
        np.testing.assert_array_equal(snaps.mixed[[1, 2]], snaps.quantized[[1, 2]])
