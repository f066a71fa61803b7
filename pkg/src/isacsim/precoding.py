"""MIMO precoding for TIR sensing: LSE/LMMSE errors, DDP and DIP designs."""

import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation, sample_block
from .metrics import SensingStats, _collect_trials, _stats_from_values
from .utils import InfeasibleError, complex_gaussian, derive_seed

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class TirModel:
    """Linear Gaussian model Y = G X + N for sensing a target impulse response.

    ``G`` is n_rx-by-n_tx with (optionally) i.i.d. CN(0, prior_var) entries,
    ``X`` the n_tx-by-frame_len transmit block, and N has i.i.d. CN(0,
    noise_var) entries.
    """

    n_tx: int
    n_rx: int
    noise_var: float
    frame_len: int
    prior_var: float | None = None

    def __post_init__(self):
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be positive")
        if self.frame_len < 1:
            raise ValueError("frame length must be positive")
        if self.noise_var < 0.0:
            raise ValueError("noise variance must be nonnegative")
        if self.prior_var is not None and self.prior_var <= 0.0:
            raise ValueError("prior variance must be positive when given")


@dataclass(frozen=True)
class PrecodedFrame:
    """One transmit frame X = precoder @ symbols.

    ``power_budget`` is the per-symbol transmit power P; with unit-power
    i.i.d. symbols and tr(W Wᴴ) = P the budget holds in expectation,
    E tr(X Xᴴ) = P L, while individual realizations fluctuate around it.
    """

    precoder: np.ndarray
    symbols: np.ndarray
    power_budget: float

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.precoder, dtype=complex))
        s = np.atleast_2d(np.asarray(self.symbols, dtype=complex))
        if w.shape[1] != s.shape[0]:
            raise ValueError(
                f"precoder inner dimension {w.shape[1]} does not match "
                f"symbol streams {s.shape[0]}"
            )
        if self.power_budget <= 0.0:
            raise ValueError("power budget must be positive")
        object.__setattr__(self, "precoder", w)
        object.__setattr__(self, "symbols", s)

    @property
    def transmit_block(self) -> np.ndarray:
        return self.precoder @ self.symbols


@dataclass(frozen=True)
class CommLink:
    """Downlink channel to the communication user with a rate floor."""

    channel: np.ndarray
    noise_var: float
    rate_floor: float = 0.0

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.channel, dtype=complex))
        if self.noise_var <= 0.0:
            raise ValueError("link noise variance must be positive")
        if self.rate_floor < 0.0:
            raise ValueError("rate floor must be nonnegative")
        object.__setattr__(self, "channel", h)


def _gram_eigs(x: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(x @ x.conj().T)


def lse_error(frame: PrecodedFrame, model: TirModel) -> float:
    """MSE of the least-squares TIR estimate, noise_var * n_rx * tr((XXᴴ)⁻¹)."""
    eigs = _gram_eigs(frame.transmit_block)
    if eigs[0] <= _RANK_TOL * max(eigs[-1], 0.0):
        raise np.linalg.LinAlgError("frame is rank-deficient, X Xᴴ is singular")
    return float(model.noise_var * model.n_rx * np.sum(1.0 / eigs))


def lmmse_error(frame: PrecodedFrame, model: TirModel) -> float:
    """Bayesian linear-MMSE error n_rx * tr((prior⁻¹ I + XXᴴ/noise)⁻¹)."""
    if model.prior_var is None:
        raise ValueError("LMMSE needs a prior variance on the TIR entries")
    eigs = _gram_eigs(frame.transmit_block)
    if model.noise_var == 0.0:
        null = eigs <= _RANK_TOL * max(eigs[-1], 0.0)
        return float(model.n_rx * model.prior_var * np.count_nonzero(null))
    return float(
        model.n_rx * np.sum(1.0 / (1.0 / model.prior_var + eigs / model.noise_var))
    )


def _draw_symbols(symbol_dist, n_s: int, length: int, seed: int) -> np.ndarray:
    if isinstance(symbol_dist, Constellation):
        return sample_block(symbol_dist, n_s * length, seed).reshape(n_s, length)
    if isinstance(symbol_dist, np.ndarray):
        s = np.atleast_2d(np.asarray(symbol_dist, dtype=complex))
        if s.shape != (n_s, length):
            raise ValueError(f"pilot block must be {n_s} x {length}, got {s.shape}")
        return s
    if symbol_dist == "gaussian":
        rng = np.random.default_rng(seed)
        return complex_gaussian(rng, (n_s, length))
    raise ValueError(f"unknown symbol distribution {symbol_dist!r}")


def ergodic_error(
    w: np.ndarray,
    model: TirModel,
    symbol_dist="gaussian",
    metric: str = "LSE",
    trials: int = 1000,
    seed: int = 0,
    threshold: float = np.inf,
) -> SensingStats:
    """Monte-Carlo mean/variance/tail of the instantaneous error over symbols.

    Rank-deficient frames cannot be inverted by the LSE and are counted in
    ``singular_trials`` instead of contributing a value; if every frame is
    singular the estimate is undefined and an error is raised.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    if metric not in ("LSE", "LMMSE"):
        raise ValueError(f"unknown metric {metric!r}")
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    budget = float(np.real(np.trace(w @ w.conj().T)))
    err = lse_error if metric == "LSE" else lmmse_error

    def one(i: int) -> float:
        s = _draw_symbols(symbol_dist, w.shape[1], model.frame_len, derive_seed(seed, "trial", i))
        frame = PrecodedFrame(precoder=w, symbols=s, power_budget=budget)
        try:
            return err(frame, model)
        except np.linalg.LinAlgError:
            return np.nan

    values = np.array(_collect_trials(one, trials))
    singular = int(np.count_nonzero(np.isnan(values)))
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise np.linalg.LinAlgError("every sampled frame was rank-deficient")
    return _stats_from_values(values, threshold, singular)


def ddp_precoder(symbols: np.ndarray, power: float, n_tx: int | None = None) -> np.ndarray:
    """Data-dependent precoder W = sqrt(P L / n_tx) (S Sᴴ)^(-1/2).

    Whitens the instantaneous symbol block so X Xᴴ = (P L / n_tx) I exactly,
    which makes the LSE hit its deterministic optimum for every realization.
    """
    s = np.atleast_2d(np.asarray(symbols, dtype=complex))
    n_s, length = s.shape
    if n_tx is None:
        n_tx = n_s
    if n_tx != n_s:
        raise ValueError("whitening precoder is square, n_tx must equal symbol streams")
    if power <= 0.0:
        raise ValueError("power must be positive")
    lam, vec = np.linalg.eigh(s @ s.conj().T)
    if lam[0] <= _RANK_TOL * max(lam[-1], 0.0):
        raise np.linalg.LinAlgError("symbol block is rank-deficient, S Sᴴ is singular")
    scale = math.sqrt(power * length / n_tx)
    return scale * (vec * (1.0 / np.sqrt(lam))) @ vec.conj().T


def comm_rate(w: np.ndarray, comm: CommLink) -> float:
    """Achievable rate log2 det(I + H W Wᴴ Hᴴ / noise) in bits per use."""
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    h = comm.channel
    m = np.eye(h.shape[0]) + (h @ w) @ (h @ w).conj().T / comm.noise_var
    sign, logdet = np.linalg.slogdet(m)
    return float(logdet / math.log(2.0))


def _waterfill_capacity(gains: np.ndarray, power: float) -> tuple:
    """Waterfilling over parallel channels with given gains; returns (bits, powers)."""
    gains = np.sort(np.asarray(gains, dtype=float))[::-1]
    gains = gains[gains > 0.0]
    if gains.size == 0:
        return 0.0, np.zeros(0)
    # highest water level using the k best channels such that all powers >= 0
    for k in range(gains.size, 0, -1):
        level = (power + np.sum(1.0 / gains[:k])) / k
        p = level - 1.0 / gains[:k]
        if p[-1] >= 0.0:
            powers = np.zeros(gains.size)
            powers[:k] = p
            bits = float(np.sum(np.log2(1.0 + powers[:k] * gains[:k])))
            return bits, powers
    return 0.0, np.zeros(gains.size)


def _capacity_precoder(comm: CommLink, n_tx: int, power: float) -> tuple:
    u, sv, vh = np.linalg.svd(comm.channel, full_matrices=False)
    gains = sv**2 / comm.noise_var
    bits, powers = _waterfill_capacity(gains, power)
    w = np.zeros((n_tx, n_tx), dtype=complex)
    cols = vh.conj().T
    for i in range(min(powers.size, cols.shape[1])):
        w[:, i] = cols[:, i] * math.sqrt(max(powers[i], 0.0))
    return bits, w


def _project_power(w: np.ndarray, power: float) -> np.ndarray:
    tr = float(np.real(np.trace(w @ w.conj().T)))
    if tr <= power or tr == 0.0:
        return w
    return w * math.sqrt(power / tr)


def dip_precoder(
    model: TirModel,
    symbol_dist="gaussian",
    power: float = 1.0,
    metric: str = "LSE",
    comm: CommLink | None = None,
    sa_trials: int = 200,
    iters: int = 300,
    seed: int = 0,
    history: list | None = None,
) -> np.ndarray:
    """Data-independent precoder by sample-average projected gradient.

    The expected error is approximated on ``sa_trials`` frozen symbol blocks
    (common random numbers, so the descent is deterministic for a given
    seed), the iterate is projected onto the power ball tr(W Wᴴ) <= power
    after every step, and an optional communication rate floor is enforced
    by an exterior quadratic penalty with an increasing weight.  If the rate
    floor exceeds the waterfilling capacity at this power the problem has no
    feasible precoder and an error reports the achievable maximum.

    ``history``, when given a list, collects the penalized sample-average
    objective after every accepted step.
    """
    if sa_trials < 100:
        raise ValueError(f"need at least 100 sample-average trials, got {sa_trials}")
    if metric not in ("LSE", "LMMSE"):
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "LMMSE" and model.prior_var is None:
        raise ValueError("LMMSE needs a prior variance on the TIR entries")
    if power <= 0.0:
        raise ValueError("power must be positive")
    n = model.n_tx
    w_cap = None
    rate_floor = 0.0
    if comm is not None and comm.rate_floor > 0.0:
        capacity, w_cap = _capacity_precoder(comm, n, power)
        rate_floor = comm.rate_floor
        if rate_floor > capacity - 1e-9:
            raise InfeasibleError(
                f"rate floor {rate_floor:.6f} bits exceeds the capacity "
                f"{capacity:.6f} bits at power {power}"
            )

    blocks = np.stack(
        [
            _draw_symbols(symbol_dist, n, model.frame_len, derive_seed(seed, "sample", k))
            for k in range(sa_trials)
        ]
    )
    grams = blocks @ blocks.conj().transpose(0, 2, 1)

    sigma2 = model.noise_var
    n_rx = model.n_rx

    def sample_objective_grad(w):
        a = np.einsum("ab,kbc,dc->kad", w, grams, w.conj())
        if metric == "LSE":
            inv_a = np.linalg.inv(a)
            value = sigma2 * n_rx * float(np.real(np.trace(inv_a, axis1=1, axis2=2).mean()))
            core = inv_a @ inv_a
            grad = -sigma2 * n_rx * np.mean(core @ w[None] @ grams, axis=0)
            return value, grad
        b = np.eye(n)[None] / model.prior_var + a / sigma2
        inv_b = np.linalg.inv(b)
        value = n_rx * float(np.real(np.trace(inv_b, axis1=1, axis2=2).mean()))
        grad = -(n_rx / sigma2) * np.mean(inv_b @ inv_b @ w[None] @ grams, axis=0)
        return value, grad

    def rate_and_grad(w):
        h = comm.channel
        hw = h @ w
        m = np.eye(h.shape[0]) + hw @ hw.conj().T / comm.noise_var
        rate = float(np.linalg.slogdet(m)[1] / math.log(2.0))
        grad = h.conj().T @ np.linalg.solve(m, hw) / comm.noise_var / math.log(2.0)
        return rate, grad

    def penalized(w, mu):
        value, grad = sample_objective_grad(w)
        if mu > 0.0:
            rate, grad_r = rate_and_grad(w)
            gap = max(0.0, rate_floor - rate)
            value += mu * gap * gap
            if gap > 0.0:
                grad = grad - 2.0 * mu * gap * grad_r
        return value, grad

    w = math.sqrt(power / n) * np.eye(n, dtype=complex)
    mu_schedule = [0.0] if rate_floor == 0.0 else [10.0 * 10.0**j for j in range(6)]
    steps_per_phase = max(1, iters // len(mu_schedule))
    for mu in mu_schedule:
        value, grad = penalized(w, mu)
        step = 0.1 * max(np.linalg.norm(w), 1e-12) / max(np.linalg.norm(grad), 1e-12)
        for _ in range(steps_per_phase):
            improved = False
            for _ in range(40):
                cand = _project_power(w - step * grad, power)
                cand_value, cand_grad = penalized(cand, mu)
                if cand_value <= value + 1e-15:
                    improved = True
                    break
                step *= 0.5
            if not improved:
                break
            rel_drop = (value - cand_value) / max(abs(value), 1e-300)
            w, value, grad = cand, cand_value, cand_grad
            if history is not None:
                history.append(value)
            step *= 1.2
            if rel_drop < 1e-10:
                break
        if rate_floor > 0.0 and rate_and_grad(w)[0] >= rate_floor - 1e-3:
            break

    if rate_floor > 0.0:
        # Feasibility polish: blend toward the capacity-achieving precoder
        # until the floor is met; the blend exists because capacity > floor.
        rate = rate_and_grad(w)[0]
        if rate < rate_floor - 1e-3:
            lo, hi = 0.0, 1.0
            for _ in range(60):
                alpha = 0.5 * (lo + hi)
                cand = _project_power((1.0 - alpha) * w + alpha * w_cap, power)
                if rate_and_grad(cand)[0] >= rate_floor - 1e-3:
                    hi = alpha
                else:
                    lo = alpha
            w = _project_power((1.0 - hi) * w + hi * w_cap, power)
    return w
