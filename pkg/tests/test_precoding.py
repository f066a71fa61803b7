import numpy as np
import pytest

from isacsim.constellation import make_standard
from isacsim.precoding import (
    CommLink,
    PrecodedFrame,
    TirModel,
    comm_rate,
    ddp_precoder,
    dip_precoder,
    ergodic_error,
    lmmse_error,
    lse_error,
)
from isacsim.utils import InfeasibleError, complex_gaussian

MODEL4 = TirModel(n_tx=4, n_rx=2, noise_var=0.5, frame_len=16)
PRIOR4 = TirModel(n_tx=4, n_rx=2, noise_var=0.5, frame_len=16, prior_var=0.7)


def scaled_orthogonal_frame(n_tx, length, power, seed=0):
    """Frame whose block satisfies X Xᴴ = (P L / n_tx) I exactly."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(complex_gaussian(rng, (length, n_tx)))
    x = np.sqrt(power * length / n_tx) * q.conj().T
    return PrecodedFrame(precoder=x, symbols=np.eye(length), power_budget=power)


def test_model_validation():
    with pytest.raises(ValueError):
        TirModel(n_tx=0, n_rx=2, noise_var=0.5, frame_len=16)
    with pytest.raises(ValueError):
        TirModel(n_tx=4, n_rx=2, noise_var=0.5, frame_len=0)
    with pytest.raises(ValueError):
        TirModel(n_tx=4, n_rx=2, noise_var=-0.1, frame_len=16)
    with pytest.raises(ValueError):
        TirModel(n_tx=4, n_rx=2, noise_var=0.5, frame_len=16, prior_var=0.0)


def test_frame_validation():
    with pytest.raises(ValueError, match="inner dimension"):
        PrecodedFrame(precoder=np.eye(3), symbols=np.zeros((2, 8)), power_budget=1.0)
    with pytest.raises(ValueError, match="power"):
        PrecodedFrame(precoder=np.eye(2), symbols=np.eye(2), power_budget=0.0)
    frame = PrecodedFrame(precoder=2.0 * np.eye(2), symbols=np.eye(2), power_budget=8.0)
    assert np.array_equal(frame.transmit_block, 2.0 * np.eye(2))


def test_lse_scaled_orthogonal_block():
    n, length, power = 4, 16, 2.0
    frame = scaled_orthogonal_frame(n, length, power)
    expected = MODEL4.noise_var * MODEL4.n_rx * n**2 / (power * length)
    assert lse_error(frame, MODEL4) == pytest.approx(expected, rel=1e-12)


def test_lse_zero_noise():
    frame = scaled_orthogonal_frame(4, 16, 2.0)
    quiet = TirModel(n_tx=4, n_rx=2, noise_var=0.0, frame_len=16)
    assert lse_error(frame, quiet) == 0.0


def test_lse_singular_frame_raises():
    model = TirModel(n_tx=2, n_rx=1, noise_var=1.0, frame_len=2)
    frame = PrecodedFrame(
        precoder=np.eye(2), symbols=np.array([[1.0, 1.0], [1.0, 1.0]]), power_budget=1.0
    )
    with pytest.raises(np.linalg.LinAlgError):
        lse_error(frame, model)


def test_lse_matches_explicit_ls_estimator():
    # Monte Carlo over noise: the LS estimate deviates by N Xᴴ (X Xᴴ)⁻¹,
    # whose mean squared norm is the closed form.
    x = np.array([[1.0 + 0.5j, -0.3], [0.2j, 2.0 - 1.0j]])
    model = TirModel(n_tx=2, n_rx=3, noise_var=0.4, frame_len=2)
    frame = PrecodedFrame(precoder=x, symbols=np.eye(2), power_budget=10.0)
    closed = lse_error(frame, model)

    rng = np.random.default_rng(42)
    back = x.conj().T @ np.linalg.inv(x @ x.conj().T)
    noise = complex_gaussian(rng, (10**5, model.n_rx, 2), var=model.noise_var)
    mc = float(np.mean(np.sum(np.abs(noise @ back) ** 2, axis=(1, 2))))
    assert mc == pytest.approx(closed, rel=0.01)


def test_lmmse_zero_block_is_prior_error():
    frame = PrecodedFrame(
        precoder=np.zeros((4, 4)), symbols=np.zeros((4, 16)), power_budget=1.0
    )
    assert lmmse_error(frame, PRIOR4) == pytest.approx(PRIOR4.n_rx * 4 * 0.7)


def test_lmmse_noiseless_limits():
    quiet = TirModel(n_tx=4, n_rx=2, noise_var=0.0, frame_len=16, prior_var=0.7)
    assert lmmse_error(scaled_orthogonal_frame(4, 16, 2.0), quiet) == 0.0
    # rank-deficient noiseless block leaves prior error on the null space only
    rank1 = PrecodedFrame(
        precoder=np.diag([1.0, 0.0]), symbols=np.eye(2), power_budget=1.0
    )
    quiet2 = TirModel(n_tx=2, n_rx=3, noise_var=0.0, frame_len=2, prior_var=0.7)
    assert lmmse_error(rank1, quiet2) == pytest.approx(3 * 0.7)


def test_lmmse_missing_prior_raises():
    with pytest.raises(ValueError, match="prior"):
        lmmse_error(scaled_orthogonal_frame(4, 16, 2.0), MODEL4)


def test_lmmse_wide_prior_recovers_lse():
    frame = scaled_orthogonal_frame(4, 16, 2.0)
    wide = TirModel(n_tx=4, n_rx=2, noise_var=0.5, frame_len=16, prior_var=1e8)
    assert lmmse_error(frame, wide) == pytest.approx(lse_error(frame, MODEL4), rel=1e-3)


def test_lmmse_never_exceeds_lse():
    rng = np.random.default_rng(7)
    for _ in range(20):
        frame = PrecodedFrame(
            precoder=complex_gaussian(rng, (4, 4)),
            symbols=complex_gaussian(rng, (4, 16)),
            power_budget=4.0,
        )
        assert lmmse_error(frame, PRIOR4) <= lse_error(frame, MODEL4) + 1e-12


def test_ergodic_matches_wishart_closed_form():
    n, length, power = 4, 16, 2.5
    model = TirModel(n_tx=n, n_rx=3, noise_var=0.8, frame_len=length)
    stats = ergodic_error(
        np.sqrt(power / n) * np.eye(n), model, "gaussian", "LSE", trials=20_000, seed=3
    )
    oracle = model.noise_var * model.n_rx * (n / power) * n / (length - n)
    assert stats.mean == pytest.approx(oracle, rel=0.01)
    assert stats.singular_trials == 0


def test_ergodic_deterministic_pilot_has_zero_variance():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(complex_gaussian(rng, (8, 4)))
    pilot = np.sqrt(8 / 4) * q.conj().T
    model = TirModel(n_tx=4, n_rx=2, noise_var=0.5, frame_len=8)
    stats = ergodic_error(np.eye(4), model, pilot, "LSE", trials=200, seed=0)
    assert stats.variance == 0.0
    assert stats.trials == 200


def test_ergodic_counts_singular_frames():
    # QPSK symbol blocks at n_tx = L = 2 are rank deficient whenever the
    # column products coincide, which happens for a quarter of the draws.
    model = TirModel(n_tx=2, n_rx=1, noise_var=1.0, frame_len=2)
    stats = ergodic_error(np.eye(2), model, make_standard("QPSK"), "LSE", trials=2000, seed=9)
    assert stats.singular_trials + stats.trials == 2000
    assert 0.2 < stats.singular_trials / 2000 < 0.3
    assert np.isfinite(stats.mean)


def test_ergodic_all_singular_raises():
    model = TirModel(n_tx=2, n_rx=1, noise_var=1.0, frame_len=4)
    rank_deficient = np.diag([1.0, 0.0])
    with pytest.raises(np.linalg.LinAlgError, match="every sampled frame"):
        ergodic_error(rank_deficient, model, "gaussian", "LSE", trials=100, seed=0)


def test_ergodic_validation():
    with pytest.raises(ValueError, match="trials"):
        ergodic_error(np.eye(2), MODEL4, "gaussian", "LSE", trials=50)
    with pytest.raises(ValueError, match="metric"):
        ergodic_error(np.eye(4), MODEL4, "gaussian", "MAP", trials=100)
    with pytest.raises(ValueError, match="distribution"):
        ergodic_error(np.eye(4), MODEL4, "laplace", "LSE", trials=100)
    with pytest.raises(ValueError, match="pilot"):
        ergodic_error(np.eye(4), MODEL4, np.eye(3), "LSE", trials=100)


def test_else_to_lse_ratio_shrinks_with_frame_length():
    n, power = 16, 4.0
    w = np.sqrt(power / n) * np.eye(n)
    ratios = {}
    for length, trials in ((32, 6000), (64, 3000), (256, 2000)):
        model = TirModel(n_tx=n, n_rx=2, noise_var=0.5, frame_len=length)
        stats = ergodic_error(w, model, "gaussian", "LSE", trials=trials, seed=11)
        deterministic = model.noise_var * model.n_rx * n**2 / (power * length)
        ratios[length] = stats.mean / deterministic
    assert ratios[32] == pytest.approx(2.0, abs=0.05)
    assert ratios[32] > ratios[64] > ratios[256]
    assert ratios[256] < 1.1


def test_ddp_whitens_every_block():
    n, length, power = 4, 16, 2.0
    rng = np.random.default_rng(5)
    values = []
    for _ in range(300):
        s = complex_gaussian(rng, (n, length))
        w = ddp_precoder(s, power)
        x = w @ s
        assert np.max(np.abs(x @ x.conj().T - (power * length / n) * np.eye(n))) < 1e-10
        frame = PrecodedFrame(precoder=w, symbols=s, power_budget=power)
        values.append(lse_error(frame, MODEL4))
    values = np.array(values)
    optimum = MODEL4.noise_var * MODEL4.n_rx * n**2 / (power * length)
    assert np.max(np.abs(values - optimum)) < 1e-12 * optimum


def test_ddp_orthogonal_block_gives_identity():
    rng = np.random.default_rng(6)
    q, _ = np.linalg.qr(complex_gaussian(rng, (16, 4)))
    s = q.conj().T
    w = ddp_precoder(s, 2.0)
    scale = np.sqrt(2.0 * 16 / 4)
    assert np.max(np.abs(w - scale * np.eye(4))) < 1e-12


def test_ddp_validation():
    with pytest.raises(np.linalg.LinAlgError):
        ddp_precoder(np.array([[1.0, 1.0], [1.0, 1.0]]), 1.0)
    with pytest.raises(ValueError, match="n_tx"):
        ddp_precoder(np.eye(4), 1.0, n_tx=3)
    with pytest.raises(ValueError, match="power"):
        ddp_precoder(np.eye(4), 0.0)


def test_ddp_beats_dip_at_equal_power():
    n, length, power = 16, 32, 4.0
    model = TirModel(n_tx=n, n_rx=2, noise_var=0.5, frame_len=length)
    w = dip_precoder(model, "gaussian", power, "LSE", sa_trials=200, iters=200, seed=0)
    dip_stats = ergodic_error(w, model, "gaussian", "LSE", trials=3000, seed=77)
    ddp_value = model.noise_var * model.n_rx * n**2 / (power * length)
    assert ddp_value < dip_stats.mean


def test_dip_finds_isotropic_optimum():
    power = 2.0
    w = dip_precoder(MODEL4, "gaussian", power, "LSE", sa_trials=200, iters=300, seed=0)
    gram = w @ w.conj().T
    target = (power / 4) * np.eye(4)
    assert np.linalg.norm(gram - target) / np.linalg.norm(target) <= 0.05
    assert np.real(np.trace(gram)) <= power + 1e-9


def test_dip_lmmse_metric_runs():
    w = dip_precoder(PRIOR4, "gaussian", 2.0, "LMMSE", sa_trials=150, iters=200, seed=0)
    gram = w @ w.conj().T
    assert np.linalg.norm(gram - 0.5 * np.eye(4)) / np.linalg.norm(0.5 * np.eye(4)) <= 0.05


def test_dip_deterministic_given_seed():
    a = dip_precoder(MODEL4, "gaussian", 2.0, "LSE", sa_trials=120, iters=100, seed=4)
    b = dip_precoder(MODEL4, "gaussian", 2.0, "LSE", sa_trials=120, iters=100, seed=4)
    assert np.array_equal(a, b)


def test_dip_descent_is_monotone():
    history = []
    dip_precoder(MODEL4, "gaussian", 2.0, "LSE", sa_trials=150, iters=200, seed=0, history=history)
    assert len(history) >= 2
    assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))


def test_dip_zero_rate_floor_matches_unconstrained():
    rng = np.random.default_rng(21)
    h = complex_gaussian(rng, (2, 4))
    link = CommLink(channel=h, noise_var=0.1, rate_floor=0.0)
    with_link = dip_precoder(MODEL4, "gaussian", 2.0, "LSE", comm=link, sa_trials=150, iters=200, seed=0)
    without = dip_precoder(MODEL4, "gaussian", 2.0, "LSE", sa_trials=150, iters=200, seed=0)
    assert np.array_equal(with_link, without)


def test_dip_rate_floor_met_at_a_sensing_cost():
    rng = np.random.default_rng(21)
    h = complex_gaussian(rng, (2, 4))
    power = 2.0
    free = dip_precoder(MODEL4, "gaussian", power, "LSE", sa_trials=150, iters=300, seed=0)
    free_stats = ergodic_error(free, MODEL4, "gaussian", "LSE", trials=3000, seed=77)
    free_rate = comm_rate(free, CommLink(channel=h, noise_var=0.1))

    floor = free_rate + 0.6
    link = CommLink(channel=h, noise_var=0.1, rate_floor=floor)
    w = dip_precoder(MODEL4, "gaussian", power, "LSE", comm=link, sa_trials=150, iters=300, seed=0)
    assert comm_rate(w, link) >= floor - 1e-3
    assert np.real(np.trace(w @ w.conj().T)) <= power + 1e-9
    constrained_stats = ergodic_error(w, MODEL4, "gaussian", "LSE", trials=3000, seed=77)
    assert constrained_stats.mean > free_stats.mean


def test_dip_infeasible_rate_floor_raises():
    rng = np.random.default_rng(21)
    h = complex_gaussian(rng, (2, 4))
    link = CommLink(channel=h, noise_var=0.1, rate_floor=1e4)
    with pytest.raises(InfeasibleError, match="capacity"):
        dip_precoder(MODEL4, "gaussian", 2.0, "LSE", comm=link, sa_trials=120, iters=100, seed=0)


def test_dip_validation():
    with pytest.raises(ValueError, match="trials"):
        dip_precoder(MODEL4, "gaussian", 2.0, "LSE", sa_trials=50)
    with pytest.raises(ValueError, match="metric"):
        dip_precoder(MODEL4, "gaussian", 2.0, "MAP")
    with pytest.raises(ValueError, match="prior"):
        dip_precoder(MODEL4, "gaussian", 2.0, "LMMSE")
    with pytest.raises(ValueError, match="power"):
        dip_precoder(MODEL4, "gaussian", 0.0, "LSE")


def test_comm_link_validation():
    with pytest.raises(ValueError, match="noise"):
        CommLink(channel=np.eye(2), noise_var=0.0)
    with pytest.raises(ValueError, match="floor"):
        CommLink(channel=np.eye(2), noise_var=0.1, rate_floor=-1.0)


def test_comm_rate_closed_forms():
    link = CommLink(channel=np.eye(3), noise_var=0.25)
    assert comm_rate(np.zeros((3, 3)), link) == 0.0
    power = 6.0
    expected = 3 * np.log2(1 + power / (3 * 0.25))
    assert comm_rate(np.sqrt(power / 3) * np.eye(3), link) == pytest.approx(expected)


def test_comm_rate_monotone_in_power():
    link = CommLink(channel=np.eye(3), noise_var=0.25)
    rates = [comm_rate(np.sqrt(p / 3) * np.eye(3), link) for p in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(b > a for a, b in zip(rates, rates[1:]))


def test_random_precoders_never_beat_orthogonal_pilots():
    # Jensen: E tr((W S Sᴴ Wᴴ)⁻¹) over random S exceeds the deterministic
    # orthogonal-block optimum at the same power for every W.
    n, length, power = 4, 8, 3.0
    model = TirModel(n_tx=n, n_rx=2, noise_var=1.0, frame_len=length)
    optimum = model.noise_var * model.n_rx * n**2 / (power * length)
    rng = np.random.default_rng(3)
    for _ in range(5):
        w = complex_gaussian(rng, (n, n))
        w = w * np.sqrt(power / np.real(np.trace(w @ w.conj().T)))
        stats = ergodic_error(w, model, "gaussian", "LSE", trials=1000, seed=13)
        assert stats.mean > optimum
