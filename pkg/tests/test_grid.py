import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tqsrecon import ParameterError, QuadrantPattern, extract_local_system, generate_pattern
from tqsrecon.grid import (local_matrix, read_frame, read_pattern, simulate_measurement,
                           write_frame, write_pattern)

import oracles


def test_generate_pattern_shape_and_determinism():
    a = generate_pattern(7, 32)
    b = generate_pattern(7, 32)
    assert a.opaque.shape == (16, 16)
    assert a == b
    assert a.opaque.tobytes() == b.opaque.tobytes()
    assert set(np.unique(a.opaque)) <= {0, 1, 2, 3}
    assert generate_pattern(8, 32) != a


@pytest.mark.parametrize("period", [30, 2, 0, 6, 33])
def test_generate_pattern_rejects_bad_period(period):
    with pytest.raises(ParameterError):
        generate_pattern(7, period)


def test_pattern_quadrants_roughly_uniform():
    tile = generate_pattern(1, 256).opaque
    counts = np.bincount(tile.ravel(), minlength=4) / tile.size
    assert np.all(np.abs(counts - 0.25) < 0.02)


def test_pattern_lookup_is_periodic(pattern32):
    r = np.arange(40)
    assert np.array_equal(pattern32.quadrant(r, r), pattern32.quadrant(r + 16, r + 32))


def test_simulate_zero_and_constant(pattern32):
    assert np.all(simulate_measurement(np.zeros((64, 32)), pattern32) == 0)
    y = simulate_measurement(np.full((64, 64), 0.6), pattern32)
    assert y.shape == (32, 32)
    np.testing.assert_allclose(y, 0.6, rtol=0, atol=1e-15)


def test_simulate_single_cell():
    # opaque top-left: y = (0.3 + 0.6 + 0.9) / 3
    pattern = QuadrantPattern(period=4, seed=0, opaque=np.zeros((2, 2)))
    img = np.zeros((4, 4))
    img[:2, :2] = [[0.0, 0.3], [0.6, 0.9]]
    assert simulate_measurement(img, pattern)[0, 0] == pytest.approx(0.6, abs=1e-15)


def test_simulate_matches_loop_oracle(pattern32, rng):
    img = rng.random((36, 68))
    np.testing.assert_allclose(simulate_measurement(img, pattern32),
                               oracles.simulate(img, pattern32.opaque), atol=1e-15)


def test_simulate_rejects_odd(pattern32):
    with pytest.raises(ParameterError):
        simulate_measurement(np.zeros((5, 4)), pattern32)


def test_frame_count(pattern32):
    y = simulate_measurement(np.zeros((1200, 1200)), pattern32)
    assert y.size == 1200 * 1200 // 4 == 360000


@settings(max_examples=25, deadline=None)
@given(f=arrays(np.float64, (16, 16), elements=st.floats(0, 1)),
       g=arrays(np.float64, (16, 16), elements=st.floats(0, 1)),
       a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_simulate_linearity(f, g, a, b):
    p = generate_pattern(5, 8)
    lhs = simulate_measurement(a * f + b * g, p)
    rhs = a * simulate_measurement(f, p) + b * simulate_measurement(g, p)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0, 1))
def test_simulate_conserves_constants(c):
    y = simulate_measurement(np.full((8, 8), c), generate_pattern(2, 8))
    np.testing.assert_allclose(y, c, atol=1e-15)


def test_interior_window_local_system(pattern32, rng):
    frame = rng.random((48, 48))
    local, y = extract_local_system(pattern32, frame, (18, 30), 32)
    assert local.n_measurements == 256 == y.size
    assert local.pixels.shape == (256, 3)
    np.testing.assert_array_equal(local.coef, 1 / 3)
    # each measurement's pixels are distinct and inside the window
    assert np.all(local.pixels < 32 * 32)
    assert all(len(set(row)) == 3 for row in local.pixels.tolist())


def test_unaligned_window_excludes_straddling_cells(pattern32):
    local = local_matrix(pattern32, (1, 3), 32)
    # 15 full cells per axis instead of 16
    assert local.n_measurements == 15 * 15
    assert local.cell_origins.min() >= 0 and local.cell_origins.max() <= 30


def test_local_system_matches_impulse_responses(pattern32):
    # A_local[m, eta, gamma] must equal the response of measurement m to a unit
    # impulse at window pixel (eta, gamma) for any window placement
    W, origin = 8, (6, 3)
    local, _ = extract_local_system(pattern32, np.zeros((16, 16)), origin, W)
    A = oracles.dense_local(local)
    r0, c0 = -(-origin[0] // 2), -(-origin[1] // 2)
    n_r = (origin[0] + W - 2) // 2 - r0 + 1
    n_c = (origin[1] + W - 2) // 2 - c0 + 1
    assert n_r * n_c == local.n_measurements
    for eta in range(W):
        for gamma in range(W):
            img = np.zeros((32, 32))
            img[origin[0] + eta, origin[1] + gamma] = 1.0
            y = simulate_measurement(img, pattern32)
            resp = y[r0:r0 + n_r, c0:c0 + n_c].ravel()
            np.testing.assert_allclose(A[:, eta, gamma], resp, atol=1e-15)


def test_local_system_periodicity(pattern32, rng):
    frame = rng.random((64, 96))
    a, _ = extract_local_system(pattern32, frame, (2, 6), 32)
    b, _ = extract_local_system(pattern32, frame, (34, 38), 32)
    c, _ = extract_local_system(pattern32, frame, (34, 70), 32)
    assert a == b == c
    d, _ = extract_local_system(pattern32, frame, (4, 6), 32)
    assert a != d


@settings(max_examples=30, deadline=None)
@given(r=st.integers(0, 40), c=st.integers(0, 40))
def test_local_matrix_periodic_property(r, c):
    p = generate_pattern(11, 16)
    assert local_matrix(p, (r, c), 8) == local_matrix(p, (r + 16, c + 32), 8)


@pytest.mark.parametrize("origin", [(-1, 0), (0, 40), (33, 0)])
def test_window_out_of_bounds(pattern32, origin):
    with pytest.raises(ParameterError):
        extract_local_system(pattern32, np.zeros((32, 32)), origin, 32)


def test_pattern_file_roundtrip(tmp_path, pattern32):
    path = tmp_path / "p.tqsp"
    write_pattern(pattern32, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "TQSP v1 period=32 seed=7 rng=pcg64"
    assert len(lines) == 17 and all(len(ln.split()) == 16 for ln in lines[1:])
    assert read_pattern(path) == pattern32


def test_pattern_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.tqsp"
    path.write_text("NOPE\n")
    with pytest.raises(ParameterError):
        read_pattern(path)
    path.write_text("TQSP v1 period=4 seed=0 rng=pcg64\n0 1\n2 7\n")
    with pytest.raises(ParameterError):
        read_pattern(path)


def test_frame_file_roundtrip(tmp_path, rng):
    frame = rng.random((6, 10))
    path = tmp_path / "m.tqsm"
    write_frame(frame, path)
    raw = path.read_bytes()
    assert raw[:4] == b"TQSM"
    assert int.from_bytes(raw[4:8], "little") == 6
    assert int.from_bytes(raw[8:12], "little") == 10
    assert len(raw) == 12 + 60 * 8
    np.testing.assert_array_equal(read_frame(path), frame)


def test_frame_file_rejects_truncated(tmp_path, rng):
    path = tmp_path / "m.tqsm"
    write_frame(rng.random((4, 4)), path)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ParameterError):
        read_frame(path)
