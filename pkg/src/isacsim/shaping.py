"""Probabilistic constellation shaping under a kurtosis cap, via Blahut-Arimoto."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .constellation import Constellation
from .utils import InfeasibleError, complex_gaussian


@dataclass(frozen=True)
class AwgnChannel:
    """Memoryless complex AWGN channel y = x + n, n ~ CN(0, noise_variance)."""

    noise_variance: float

    def __post_init__(self):
        if self.noise_variance <= 0.0:
            raise ValueError("noise variance must be positive")

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "AwgnChannel":
        """Channel whose noise variance gives the requested SNR at unit signal power."""
        return cls(noise_variance=10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class ShapingProblem:
    """Optimize point probabilities of a fixed alphabet for mutual information,
    subject to unit mean power and a fourth-moment (kurtosis) cap."""

    base: Constellation
    kurtosis_cap: float
    channel: AwgnChannel
    max_iters: int = 300
    tolerance: float = 1e-7
    quadrature_order: int = 16

    def __post_init__(self):
        if self.kurtosis_cap < 1.0:
            raise InfeasibleError(
                f"kurtosis cap {self.kurtosis_cap} is below 1, "
                "the minimum of E|x|^4 / (E|x|^2)^2"
            )
        if self.quadrature_order < 8:
            raise ValueError("quadrature order must be at least 8")


@dataclass(frozen=True)
class ShapingResult:
    probs: np.ndarray
    mi_bits: float
    achieved_kurtosis: float
    multipliers: tuple
    iterations: int
    converged: bool
    kurtosis_cap: float = field(default=math.nan)
    mi_trace: tuple = field(default=(), repr=False)


def _hermite_nodes(order: int):
    t, w = np.polynomial.hermite.hermgauss(order)
    return t, w


def _noise_grid(sigma2: float, order: int):
    """2D Gauss-Hermite nodes for a CN(0, sigma2) integral: offsets and weights."""
    t, w = _hermite_nodes(order)
    sigma_axis = np.sqrt(sigma2 / 2.0)
    offs = sigma_axis * (t[:, None] + 1j * t[None, :]) * np.sqrt(2.0)
    weights = (w[:, None] * w[None, :]) / np.pi
    return offs.ravel(), weights.ravel()


def _pairwise_sq_dist(points: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """|x_i + offset_k - x_j|^2 with shape (n_points, n_nodes, n_points)."""
    y = points[:, None] + offsets[None, :]
    diff = y[:, :, None] - points[None, None, :]
    return np.abs(diff) ** 2


def _divergences(sq_dist, weights, log_probs, sigma2):
    """Per-point divergence D_i = E_n[ln p(y|x_i) - ln p_Y(y)] in nats.

    sq_dist[i, k, j] is |x_i + n_k - x_j|^2; the conditional density factors
    pi*sigma2 cancel inside the log ratio.
    """
    log_taps = log_probs[None, None, :] - sq_dist / sigma2
    log_mix = logsumexp(log_taps, axis=2)
    n_pts = sq_dist.shape[0]
    log_cond = -sq_dist[np.arange(n_pts), :, np.arange(n_pts)] / sigma2
    return np.sum(weights[None, :] * (log_cond - log_mix), axis=1)


def mutual_information(
    c: Constellation,
    ch: AwgnChannel,
    method: str = "quadrature",
    order: int = 16,
    trials: int = 100_000,
    seed: int = 0,
) -> float:
    """Mutual information of the AWGN channel with input ``c``, in bits.

    ``method="quadrature"`` integrates with a 2D Gauss-Hermite rule of the
    given order; ``method="monte_carlo"`` averages the information density
    over ``trials`` sampled channel uses.
    """
    sigma2 = ch.noise_variance
    active = c.probs > 0.0
    points = c.points[active]
    probs = c.probs[active]
    log_probs = np.log(probs)
    if method == "quadrature":
        if order < 8:
            raise ValueError("quadrature order must be at least 8")
        offs, weights = _noise_grid(sigma2, order)
        sq = _pairwise_sq_dist(points, offs)
        div = _divergences(sq, weights, log_probs, sigma2)
        return float(np.dot(probs, div) / math.log(2.0))
    if method != "monte_carlo":
        raise ValueError(f"unknown MI method {method!r}")
    if trials < 10_000:
        raise ValueError("Monte Carlo MI needs at least 10000 trials")
    rng = np.random.default_rng(seed)
    total = 0.0
    done = 0
    chunk = 50_000
    while done < trials:
        m = min(chunk, trials - done)
        idx = rng.choice(points.size, size=m, p=probs)
        noise = complex_gaussian(rng, m, sigma2)
        y = points[idx] + noise
        log_taps = log_probs[None, :] - np.abs(y[:, None] - points[None, :]) ** 2 / sigma2
        log_mix = logsumexp(log_taps, axis=1)
        log_cond = -np.abs(noise) ** 2 / sigma2
        total += float(np.sum(log_cond - log_mix))
        done += m
    return total / trials / math.log(2.0)


def _tilt(log_p, div, lam_power, lam_kurt, a2, a4):
    logits = log_p + div - lam_power * a2 - lam_kurt * a4
    # Inlined logsumexp: scipy's dispatch overhead dominates on vectors this
    # small, and the bisection calls this tens of thousands of times.
    w = np.exp(logits - np.max(logits))
    return w / w.sum()


def _bisect_decreasing(fn, lo, hi, target, iters=200, widen_limit=1e9):
    """Find x with fn(x) = target for fn decreasing in x; widens brackets on demand."""
    f_lo = fn(lo)
    f_hi = fn(hi)
    while f_lo < target and lo > -widen_limit:
        hi, f_hi = lo, f_lo
        lo = 2.0 * lo if lo < 0 else -max(1.0, lo)
        f_lo = fn(lo)
    while f_hi > target and hi < widen_limit:
        lo, f_lo = hi, f_hi
        hi = 2.0 * hi if hi > 0 else max(1.0, hi)
        f_hi = fn(hi)
    if f_lo < target or f_hi > target:
        return hi if f_hi > target else lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def shape(problem: ShapingProblem) -> ShapingResult:
    """Maximize mutual information over point probabilities.

    Blahut-Arimoto ascent with exponential tilts enforcing the unit-power
    equality and the fourth-moment cap: each iteration updates
    ``p_i <- p_i * exp(D_i - lam1*|x_i|^2 - lam2*|x_i|^4) / Z`` where the
    multipliers are found by nested bisection (lam2 = 0 whenever the cap
    is slack, by complementary slackness).  When the cap lies below the
    smallest fourth moment reachable at unit power, the iteration drives
    the distribution to that boundary and the achieved kurtosis reports
    the gap.
    """
    base = problem.base
    sigma2 = problem.channel.noise_variance
    a2 = np.abs(base.points) ** 2
    a4 = a2**2
    cap = problem.kurtosis_cap

    offs, weights = _noise_grid(sigma2, problem.quadrature_order)
    sq = _pairwise_sq_dist(base.points, offs)

    p = np.full(len(base), 1.0 / len(base))
    mi_prev = -np.inf
    mi_now = mi_prev
    lam_power, lam_kurt = 0.0, 0.0
    converged = False
    trace = []
    it = 0
    for it in range(1, problem.max_iters + 1):
        with np.errstate(divide="ignore"):
            log_p = np.where(p > 0.0, np.log(np.maximum(p, 1e-300)), -np.inf)
        div = _divergences(sq, weights, log_p, sigma2)
        div = np.where(p > 0.0, div, -np.inf)
        mi_now = float(np.dot(p, np.where(p > 0.0, div, 0.0)) / math.log(2.0))
        trace.append(mi_now)

        def power_at(l1, l2):
            return float(np.dot(_tilt(log_p, div, l1, l2, a2, a4), a2))

        def solve_power(l2, guess=lam_power):
            # Warm-start the bracket around the previous iteration's multiplier.
            r = max(1.0, 4.0 * abs(guess))
            return _bisect_decreasing(
                lambda l1: power_at(l1, l2), guess - r, guess + r, 1.0
            )

        lam_1 = solve_power(0.0)
        lam_2 = 0.0
        q = _tilt(log_p, div, lam_1, 0.0, a2, a4)
        if np.dot(q, a4) > cap * (1.0 + 1e-12):

            def kurt_at(l2):
                return float(np.dot(_tilt(log_p, div, solve_power(l2), l2, a2, a4), a4))

            # The tilt saturates long before the ceiling; clamping keeps the
            # multipliers in a range where the logits stay well conditioned
            # when the cap is unreachable.
            lam_ceiling = 1e6
            r = max(1.0, 4.0 * abs(lam_kurt))
            lam_2 = _bisect_decreasing(
                kurt_at,
                min(max(0.0, lam_kurt - r), lam_ceiling / 2.0),
                min(lam_kurt + r, lam_ceiling),
                cap,
                widen_limit=lam_ceiling,
            )
            lam_1 = solve_power(lam_2)
            q = _tilt(log_p, div, lam_1, lam_2, a2, a4)
        lam_power, lam_kurt = lam_1, lam_2
        p = q

        if abs(mi_now - mi_prev) < problem.tolerance and it > 1:
            converged = True
            break
        mi_prev = mi_now

    achieved = float(np.dot(p, a4) / np.dot(p, a2) ** 2)
    return ShapingResult(
        probs=p,
        mi_bits=mi_now,
        achieved_kurtosis=achieved,
        multipliers=(float(lam_power), float(lam_kurt)),
        iterations=it,
        converged=converged,
        kurtosis_cap=cap,
        mi_trace=tuple(trace),
    )


def tradeoff_frontier(
    base: Constellation,
    ch: AwgnChannel,
    kappa_values,
    max_iters: int = 300,
    tolerance: float = 1e-7,
    quadrature_order: int = 16,
) -> list[ShapingResult]:
    """Shape the base constellation for each kurtosis cap in ``kappa_values``."""
    results = []
    for kappa in kappa_values:
        problem = ShapingProblem(
            base=base,
            kurtosis_cap=float(kappa),
            channel=ch,
            max_iters=max_iters,
            tolerance=tolerance,
            quadrature_order=quadrature_order,
        )
        results.append(shape(problem))
    return results
