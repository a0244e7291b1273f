import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tqsrecon import WeightingConfig, fourier_basis, frequency_weight, spatial_weight, synthesize
from tqsrecon.basis import basis_matrix, frequency_weights, spatial_weights
from tqsrecon.exceptions import ParameterError
from tqsrecon.grid import local_matrix, generate_pattern

import oracles


@pytest.mark.parametrize("sigma,rho", [(0, 0), (3, 5), (31, 17)])
def test_basis_origin_is_one(sigma, rho):
    assert fourier_basis(0, 0, sigma, rho, 32) == pytest.approx(1 + 0j)


def test_basis_nyquist_sign():
    assert fourier_basis(1, 0, 16, 0, 32) == pytest.approx(-1 + 0j, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 15), st.integers(0, 15), st.integers(0, 15), st.integers(0, 15))
def test_basis_unit_modulus_and_oracle(eta, gamma, sigma, rho):
    v = fourier_basis(eta, gamma, sigma, rho, 16)
    assert abs(v) == pytest.approx(1.0, abs=1e-14)
    assert v == pytest.approx(oracles.basis(eta, gamma, sigma, rho, 16), abs=1e-13)


def test_basis_orthogonality_direct_sum():
    W = 8
    eta, gamma = np.meshgrid(np.arange(W), np.arange(W), indexing="ij")
    gram = np.zeros((W * W, W * W), dtype=complex)
    for f in range(W * W):
        a = fourier_basis(eta, gamma, f // W, f % W, W)
        for g in range(W * W):
            b = fourier_basis(eta, gamma, g // W, g % W, W)
            gram[f, g] = np.sum(a * np.conj(b))
    np.testing.assert_allclose(gram, W * W * np.eye(W * W), atol=1e-9 * W * W)


def test_basis_matrix_orthogonality_w32():
    Phi = basis_matrix(32)
    gram = Phi.conj().T @ Phi
    np.testing.assert_allclose(gram, 1024 * np.eye(1024), atol=1e-9 * 1024)


def test_synthesize_zero_and_dc():
    assert np.all(synthesize(np.zeros((8, 8))) == 0)
    c = np.zeros((8, 8), dtype=complex)
    c[0, 0] = 0.37 - 0.1j
    np.testing.assert_allclose(synthesize(c), np.full((8, 8), 0.37 - 0.1j), atol=1e-15)


def test_synthesize_matches_brute_force(rng):
    c = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    np.testing.assert_allclose(synthesize(c), oracles.synthesize(c), atol=1e-10)


def test_synthesize_matches_scaled_inverse_dft(rng):
    c = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    ref = (basis_matrix(32) @ c.ravel()).reshape(32, 32)
    out = synthesize(c.ravel())
    assert np.max(np.abs(out - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_synthesize_rejects_non_square():
    with pytest.raises(ParameterError):
        synthesize(np.zeros(10))


def test_spatial_weight_values():
    cfg = WeightingConfig(spatial_decay=0.8)
    local = local_matrix(generate_pattern(0, 8, 2), (0, 0), 6)
    origins = [tuple(o) for o in local.cell_origins]
    # window center is (2.5, 2.5): cell (2, 2) sits on it, cell (0, 2) is 2 px away
    assert spatial_weight(origins.index((2, 2)), local, cfg) == pytest.approx(1.0)
    assert spatial_weight(origins.index((0, 2)), local, cfg) == pytest.approx(0.64)
    assert spatial_weight(origins.index((0, 0)), local, cfg) == pytest.approx(0.8 ** np.sqrt(8))


def test_spatial_weight_isotropic_and_decreasing():
    cfg = WeightingConfig()
    local = local_matrix(generate_pattern(0, 32), (0, 0), 32)
    w = spatial_weights(local.cell_origins, 32, cfg).reshape(16, 16)
    assert np.all(w > 0)
    np.testing.assert_allclose(w, w.T)
    np.testing.assert_allclose(w, w[::-1, :])
    np.testing.assert_allclose(w, w[:, ::-1])
    assert np.all(np.diff(w[8, 8:]) < 0)


def test_frequency_weight_shape():
    cfg = WeightingConfig(frequency_exponent=2)
    q = frequency_weights(32, cfg).reshape(32, 32)
    assert q[0, 0] == q.max() == 1.0
    assert np.unravel_index(np.argmin(q), q.shape) == (16, 16)
    # (1 - r / (r (1 + 1e-6)))**2 at the corner radius r = 16 sqrt(2)
    assert q[16, 16] == pytest.approx((1e-6 / (1 + 1e-6)) ** 2, rel=1e-6)
    assert q.min() > 0
    np.testing.assert_array_equal(q[1:, :], q[:0:-1, :])
    np.testing.assert_array_equal(q[:, 1:], q[:, :0:-1])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 31), st.integers(0, 31))
def test_frequency_weight_symmetry(s, r):
    cfg = WeightingConfig()
    v = frequency_weight(s, r, 32, cfg)
    assert v == frequency_weight((32 - s) % 32, r, 32, cfg)
    assert v == frequency_weight(s, (32 - r) % 32, 32, cfg)
    assert v > 0


def test_frequency_weight_radially_non_increasing():
    q = frequency_weights(32, WeightingConfig()).reshape(32, 32)
    s = np.minimum(np.arange(32), 32 - np.arange(32))
    radius = np.hypot(s[:, None], s[None, :]).ravel()
    order = np.argsort(radius, kind="stable")
    assert np.all(np.diff(q.ravel()[order]) <= 1e-15)


@pytest.mark.parametrize("kwargs", [{"spatial_decay": 1.0}, {"spatial_decay": 0.0},
                                    {"frequency_exponent": -1}])
def test_weighting_config_validation(kwargs):
    with pytest.raises(ParameterError):
        WeightingConfig(**kwargs)
