import numpy as np
import pytest

from isacsim.constellation import make_standard, moments, sample_block
from isacsim.waveform import (
    KINDS,
    basis_descriptor,
    basis_from_descriptor,
    build_basis,
    idft_matrix,
    modulate,
    unitarity_defect,
)


def test_sc_basis_is_identity():
    b = build_basis("SC", 8)
    assert np.array_equal(b.matrix, np.eye(8))


def test_ofdm_impulse_response():
    b = build_basis("OFDM", 8)
    e0 = np.zeros(8, dtype=complex)
    e0[0] = 1.0
    out = b.matrix @ e0
    assert np.allclose(np.abs(out), 1.0 / np.sqrt(8))
    # Positive-exponent convention: second column rotates counterclockwise.
    col1 = b.matrix[:, 1]
    assert col1[1].imag > 0
    assert np.allclose(col1, np.exp(2j * np.pi * np.arange(8) / 8) / np.sqrt(8))


def test_afdm_zero_chirps_degenerates_to_ofdm():
    a = build_basis("AFDM", 8, params={"c1": 0.0, "c2": 0.0})
    o = build_basis("OFDM", 8)
    assert np.allclose(a.matrix, o.matrix, atol=1e-12)


def test_afdm_default_chirp_rates():
    b = build_basis("AFDM", 16)
    assert b.params["c1"] == pytest.approx(1.0 / 32.0)
    assert b.params["c2"] == 0.0


def test_otfs_matches_direct_zak_construction():
    # x[l + m*L] = (1/sqrt(M)) * sum_k X[l, k] * exp(2j*pi*k*m/M)
    ell, em = 4, 8
    b = build_basis("OTFS", ell * em, params={"delay_bins": ell, "doppler_bins": em})
    direct = np.zeros((ell * em, ell * em), dtype=complex)
    for l in range(ell):
        for k in range(em):
            col = l + k * ell
            for m in range(em):
                direct[l + m * ell, col] = np.exp(2j * np.pi * k * m / em) / np.sqrt(em)
    assert np.allclose(b.matrix, direct, atol=1e-12)


def test_otfs_square_default_split():
    b = build_basis("OTFS", 64)
    assert b.params["delay_bins"] == 8
    assert b.params["doppler_bins"] == 8


def test_unitarity_defects():
    assert unitarity_defect(build_basis("SC", 16)) == 0.0
    assert unitarity_defect(build_basis("OFDM", 64)) <= 1e-12
    assert unitarity_defect(build_basis("OTFS", 64)) <= 1e-12
    assert unitarity_defect(build_basis("AFDM", 64)) <= 1e-12


def test_modulate_identity_and_linearity():
    b = build_basis("SC", 16)
    s = sample_block(make_standard("QPSK"), 16, seed=0)
    out = modulate(b, s)
    assert np.array_equal(out.time_samples, s)
    assert out.basis_kind == "SC"
    zero = modulate(build_basis("OFDM", 16), np.zeros(16))
    assert np.allclose(zero.time_samples, 0.0)


def test_ofdm_constant_input_gives_impulse():
    b = build_basis("OFDM", 4)
    out = modulate(b, np.ones(4, dtype=complex))
    expected = np.zeros(4, dtype=complex)
    expected[0] = 2.0
    assert np.allclose(out.time_samples, expected, atol=1e-12)


def test_energy_preservation_and_inversion():
    rng = np.random.default_rng(3)
    for kind in KINDS:
        b = build_basis(kind, 36)
        for _ in range(250):
            s = rng.standard_normal(36) + 1j * rng.standard_normal(36)
            out = modulate(b, s)
            assert abs(np.linalg.norm(out.time_samples) ** 2 - np.linalg.norm(s) ** 2) < 1e-9
            assert np.allclose(b.matrix.conj().T @ out.time_samples, s, atol=1e-9)


def test_time_domain_samples_gaussianize_under_ofdm():
    # Mixing 256 i.i.d. sub-Gaussian symbols drives per-sample kurtosis toward
    # the complex-Gaussian value 2; the identity basis leaves it untouched.
    c = make_standard("64QAM")
    n = 256
    blocks = 10_000
    rng_seed = 11
    symbols = sample_block(c, n * blocks, seed=rng_seed).reshape(n, blocks)
    ofdm = build_basis("OFDM", n).matrix @ symbols
    kurt_ofdm = np.mean(np.abs(ofdm) ** 4) / np.mean(np.abs(ofdm) ** 2) ** 2
    kurt_sc = np.mean(np.abs(symbols) ** 4) / np.mean(np.abs(symbols) ** 2) ** 2
    assert kurt_ofdm >= 1.9
    assert abs(kurt_sc - moments(c).kurtosis) < 0.02


def test_invalid_arguments_rejected():
    with pytest.raises(ValueError):
        build_basis("XYZ", 8)
    with pytest.raises(ValueError):
        build_basis("OFDM", 1)
    with pytest.raises(ValueError):
        build_basis("OTFS", 13)
    with pytest.raises(ValueError):
        build_basis("OTFS", 64, params={"delay_bins": 3, "doppler_bins": 5})
    with pytest.raises(ValueError):
        modulate(build_basis("SC", 8), np.ones(7))


def test_descriptor_round_trip():
    for kind in KINDS:
        b = build_basis(kind, 16)
        back = basis_from_descriptor(basis_descriptor(b))
        assert back.kind == b.kind
        assert back.n == b.n
        assert np.allclose(back.matrix, b.matrix)


def test_idft_matrix_is_inverse_dft():
    n = 12
    u = idft_matrix(n)
    x = np.arange(n, dtype=complex)
    assert np.allclose(u @ np.fft.fft(x) / np.sqrt(n), x, atol=1e-9)
