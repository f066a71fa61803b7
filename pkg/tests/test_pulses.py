import itertools

import numpy as np
import pytest

from isacsim.constellation import make_standard
from isacsim.metrics import C_LIGHT, RangeScene
from isacsim.pulses import (
    _fold_system,
    design_pulse,
    dykstra_project,
    nyquist_defect,
    pulse_acf,
    region_islr,
    rrc_pulse,
    weak_target_detection_prob,
    weak_target_improvement,
)
from isacsim.utils import InfeasibleError
from isacsim.waveform import build_basis

T = 1e-6


def test_rrc_spectrum_properties():
    for beta in (0.0, 0.35, 1.0):
        p = rrc_pulse(T, beta)
        assert np.all(p.spectrum_sq >= 0.0)
        # even symmetry: the lowest (unpaired) bin aside, G reverses onto itself
        assert np.allclose(p.spectrum_sq[1:], p.spectrum_sq[1:][::-1], atol=1e-12)
        # band limit: nothing outside |f| <= (1+beta)/(2T)
        outside = np.abs(p.freqs) > (1.0 + beta) / (2.0 * T) * (1.0 + 1e-9)
        assert np.max(np.abs(p.spectrum_sq[outside]), initial=0.0) == 0.0


def test_rrc_nyquist_zeros():
    for beta in (0.0, 0.25, 0.35, 0.5, 1.0):
        p = rrc_pulse(T, beta)
        assert nyquist_defect(p, max_symbol_lag=8) < 1e-9


def test_rrc_folded_spectrum_is_flat():
    p = rrc_pulse(T, 0.35, K=8, span_symbols=16)
    _, a_fold, b = _fold_system(T, 0.35, 8, 16)
    g = np.fft.ifftshift(p.spectrum_sq)
    # accumulate every grid sample into its fold class i mod span
    folds = np.zeros(16)
    for i, val in enumerate(g):
        folds[i % 16] += val
    assert np.allclose(folds, T, rtol=1e-9)


def test_brickwall_acf_is_sinc():
    p = rrc_pulse(T, 0.0, K=16, span_symbols=64)
    g = pulse_acf(p)
    ref = np.sinc(p.time_grid / T)
    mid = np.abs(p.time_grid) <= 8 * T
    assert np.max(np.abs(g[mid] - ref[mid])) < 5e-3


def test_brickwall_first_sidelobe_level():
    p = rrc_pulse(T, 0.0, K=16, span_symbols=128)
    g = np.abs(pulse_acf(p)) / np.max(np.abs(pulse_acf(p)))
    tau = p.time_grid / T
    window = (tau >= 1.0) & (tau <= 2.0)
    first_sl_db = 20.0 * np.log10(np.max(g[window]))
    assert first_sl_db == pytest.approx(-13.26, abs=0.15)


def test_pulse_acf_symmetry_and_dc_identity():
    p = rrc_pulse(T, 0.35)
    g = pulse_acf(p)
    center = np.argmax(np.abs(g))
    assert p.time_grid[center] == pytest.approx(0.0, abs=1e-18)
    k = min(center, g.size - 1 - center)
    assert np.allclose(g[center - k : center], g[center + 1 : center + k + 1][::-1], atol=1e-9)
    # integral of g equals the spectrum at DC
    dt = T / p.oversampling
    dc = p.spectrum_sq[np.argmin(np.abs(p.freqs))]
    assert dt * np.sum(g) == pytest.approx(dc, rel=1e-6)


def test_rrc_rejects_bad_arguments():
    with pytest.raises(ValueError):
        rrc_pulse(T, -0.1)
    with pytest.raises(ValueError):
        rrc_pulse(T, 1.5)
    with pytest.raises(ValueError):
        rrc_pulse(-T, 0.35)
    with pytest.raises(ValueError):
        rrc_pulse(T, 0.35, K=2)
    with pytest.raises(ValueError):
        rrc_pulse(T, 0.35, span_symbols=4)


def test_full_rolloff_beats_brickwall_in_region():
    region = (1.5 * T, 4.0 * T)
    islr0 = region_islr(rrc_pulse(T, 0.0), region).value_db
    islr1 = region_islr(rrc_pulse(T, 1.0), region).value_db
    assert islr1 < islr0


def test_region_islr_validation():
    p = rrc_pulse(T, 0.35)
    with pytest.raises(ValueError):
        region_islr(p, (4.0 * T, 1.5 * T))
    with pytest.raises(ValueError):
        region_islr(p, (-T, 4.0 * T))


def _brute_force_project(z, a_mat, b):
    # Enumerate active sets of the nonnegativity constraints: for each subset
    # of coordinates pinned to zero, solve the equality-constrained least
    # squares on the rest via pseudoinverse, keep feasible candidates.
    n = z.size
    best, best_d = None, np.inf
    for r in range(n + 1):
        for zero_set in itertools.combinations(range(n), r):
            free = [i for i in range(n) if i not in zero_set]
            if not free:
                continue
            a_free = a_mat[:, free]
            x_free = np.linalg.pinv(a_free) @ b
            x_free = x_free + (np.eye(len(free)) - np.linalg.pinv(a_free) @ a_free) @ np.asarray(z)[free]
            x = np.zeros(n)
            x[free] = x_free
            if np.min(x) < -1e-10 or np.max(np.abs(a_mat @ x - b)) > 1e-8:
                continue
            d = np.linalg.norm(x - z)
            if d < best_d:
                best, best_d = x, d
    return best


def test_dykstra_matches_brute_force_projection():
    rng = np.random.default_rng(8)
    orbit_idx, a_fold, b = _fold_system(T, 0.4, 4, 8)
    worst = 0.0
    for _ in range(12):
        z = rng.normal(loc=T / 2, scale=T, size=a_fold.shape[1])
        via_dykstra = dykstra_project(z, a_fold, b)
        via_brute = _brute_force_project(z, a_fold, b)
        assert via_brute is not None
        worst = max(worst, np.max(np.abs(via_dykstra - via_brute)))
    assert worst < 1e-7 * T


def test_dykstra_output_satisfies_both_sets():
    rng = np.random.default_rng(9)
    orbit_idx, a_fold, b = _fold_system(T, 0.35, 8, 16)
    for _ in range(5):
        z = rng.normal(loc=T / 2, scale=2 * T, size=a_fold.shape[1])
        x = dykstra_project(z, a_fold, b)
        assert np.min(x) >= -1e-12
        assert np.max(np.abs(a_fold @ x - b)) < 1e-8 * T


def test_designed_pulse_beats_rrc_by_margin():
    res = design_pulse(T, 0.35, region=(1.5 * T, 4.0 * T))
    assert res.converged
    assert nyquist_defect(res.pulse, max_symbol_lag=8) < 1e-6
    assert res.islr_db_before - res.islr_db_after >= 3.0
    assert np.all(res.pulse.spectrum_sq >= -1e-15)


def test_design_objective_never_increases():
    res = design_pulse(T, 0.35, region=(1.5 * T, 4.0 * T), iters=200)
    trace = np.array(res.objective_trace)
    assert np.all(np.diff(trace) <= 1e-15)


def test_design_at_zero_rolloff_is_brickwall():
    # No excess bandwidth leaves a single feasible spectrum, so the design
    # returns the sinc pulse no matter the region.
    res = design_pulse(T, 0.0, region=(1.5 * T, 4.0 * T))
    rrc0 = rrc_pulse(T, 0.0)
    assert np.max(np.abs(res.pulse.spectrum_sq - rrc0.spectrum_sq)) < 1e-9 * T
    assert res.islr_db_after == pytest.approx(res.islr_db_before, abs=1e-6)


def test_design_region_validation():
    with pytest.raises(ValueError):
        design_pulse(T, 0.35, region=None)
    with pytest.raises(ValueError):
        design_pulse(T, 0.35, region=(0.5 * T, 4.0 * T))
    with pytest.raises(ValueError):
        design_pulse(T, 0.35, region=(4.0 * T, 1.5 * T))
    with pytest.raises(ValueError):
        design_pulse(T, 0.35, region=(1.5 * T, 9.0 * T))


def _calibrated_scene():
    # Strong reflector at 20 m, 20 dB weaker one at 30 m; symbol rate chosen
    # so the inspection window spans lags 1.9T..5.6T of the pulse ACF.
    sym_t = 1.0 / 7.5e7
    fs = 8 * 7.5e7
    scene = RangeScene(targets=((20.0, 1.0), (30.0, 0.1)), fs=fs, noise_power=0.25)
    return sym_t, scene


def test_identical_pulses_give_zero_improvement():
    sym_t, scene = _calibrated_scene()
    pulse = rrc_pulse(sym_t, 0.35, K=8, span_symbols=16)
    basis = build_basis("OFDM", 64)
    c = make_standard("16QAM")
    out = weak_target_improvement(
        scene, pulse, pulse, basis, c, trials=6, region_m=(23.74, 31.24), n_integrations=4
    )
    assert out == 0.0


def test_designed_pulse_improves_weak_target_detection():
    sym_t, scene = _calibrated_scene()
    rel_lo = 2.0 * 3.74 / C_LIGHT / sym_t
    rel_hi = 2.0 * 11.24 / C_LIGHT / sym_t
    design_region = (
        max(rel_lo * sym_t * 0.98, 1.05 * sym_t),
        min(rel_hi * sym_t * 1.02, 7.5 * sym_t),
    )
    designed = design_pulse(sym_t, 0.35, K=8, region=design_region, span_symbols=16)
    rrc = rrc_pulse(sym_t, 0.35, K=8, span_symbols=16)
    basis = build_basis("OFDM", 64)
    c = make_standard("16QAM")
    gain = weak_target_improvement(
        scene, designed.pulse, rrc, basis, c, trials=40, region_m=(23.74, 31.24), seed=5
    )
    assert gain > 0.0


def test_ofdm_beats_sc_for_weak_target_under_rrc():
    sym_t, scene = _calibrated_scene()
    rrc = rrc_pulse(sym_t, 0.35, K=8, span_symbols=16)
    c = make_standard("16QAM")
    p_ofdm = weak_target_detection_prob(
        scene, rrc, build_basis("OFDM", 64), c, (23.74, 31.24), trials=40, seed=6
    )
    p_sc = weak_target_detection_prob(
        scene, rrc, build_basis("SC", 64), c, (23.74, 31.24), trials=40, seed=6
    )
    assert p_ofdm > p_sc


def test_weak_target_scene_validation():
    sym_t, _ = _calibrated_scene()
    pulse = rrc_pulse(sym_t, 0.35, K=8, span_symbols=16)
    basis = build_basis("OFDM", 64)
    c = make_standard("16QAM")
    single = RangeScene(targets=((20.0, 1.0),), fs=6e8, noise_power=0.1)
    with pytest.raises(ValueError):
        weak_target_detection_prob(single, pulse, basis, c, (23.74, 31.24), trials=4)
    equal = RangeScene(targets=((20.0, 1.0), (30.0, 1.0)), fs=6e8, noise_power=0.1)
    with pytest.raises(ValueError):
        weak_target_detection_prob(equal, pulse, basis, c, (23.74, 31.24), trials=4)
    outside = RangeScene(targets=((20.0, 1.0), (50.0, 0.1)), fs=6e8, noise_power=0.1)
    with pytest.raises(ValueError):
        weak_target_detection_prob(outside, pulse, basis, c, (23.74, 31.24), trials=4)


def test_fold_system_infeasible_band():
    # A band so narrow that some fold class has no support cannot satisfy
    # the folded-spectrum equality.
    with pytest.raises(InfeasibleError):
        _fold_system(T, -0.5, 8, 16)
