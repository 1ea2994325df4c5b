import numpy as np
import pytest

from otfsim.grid import (
    OtfsGrid,
    dd_dft_matrix,
    dd_fft2,
    dd_ifft2,
    dd_index,
    dd_unindex,
    doppler_index_for_speed,
    to_grid,
    to_vector,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        OtfsGrid(1, 8)
    with pytest.raises(ValueError):
        OtfsGrid(8, 1)
    g = OtfsGrid(256, 32, 2e3, 3e9)
    assert g.frame_len == 8192
    assert g.symbol_duration_s == pytest.approx(5e-4)
    assert g.delay_resolution_s == pytest.approx(1 / (256 * 2e3))
    assert g.doppler_resolution_hz == pytest.approx(62.5)


def test_doppler_index_matches_system_parameters():
    # 3 GHz carrier, 2 kHz spacing, 32 slots, 135 km/h mobile
    g = OtfsGrid(256, 32, 2e3, 3e9)
    assert doppler_index_for_speed(g, 135.0) == 6


def test_index_mapping_is_bijective():
    M, N = 8, 5
    seen = set()
    for k in range(N):
        for l in range(M):
            j = dd_index(k, l, M)
            assert dd_unindex(j, M) == (k, l)
            seen.add(j)
    assert seen == set(range(M * N))


def test_grid_vector_round_trip():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(24) + 1j * rng.standard_normal(24)
    X = to_grid(x, 6, 4)
    assert X.shape == (6, 4)
    # delay-fastest layout: entry (l, k) holds x[k*M + l]
    assert X[3, 2] == x[2 * 6 + 3]
    assert np.array_equal(to_vector(X), x)


def test_dd_fft2_matches_dense_operator_and_is_unitary():
    rng = np.random.default_rng(1)
    M, N = 8, 6
    F = dd_dft_matrix(M, N)
    assert np.allclose(F @ F.conj().T, np.eye(M * N), atol=1e-12)
    for _ in range(5):
        x = rng.standard_normal(M * N) + 1j * rng.standard_normal(M * N)
        assert np.allclose(dd_fft2(x, M, N), F @ x, atol=1e-12)
        assert np.allclose(dd_ifft2(dd_fft2(x, M, N), M, N), x, atol=1e-12)
        assert np.linalg.norm(dd_fft2(x, M, N)) == pytest.approx(np.linalg.norm(x))
