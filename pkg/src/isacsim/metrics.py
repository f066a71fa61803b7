"""Sidelobe metrics for random signals: ACF, PSD, ISL, range profiles, MC statistics."""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation, sample_block
from .utils import atomic_write_text, complex_gaussian, derive_seed, fmt, max_workers
from .waveform import ModulationBasis

C_LIGHT = 2.998e8

MODES = ("periodic", "aperiodic")


@dataclass(frozen=True)
class Acf:
    """Autocorrelation samples at lag k, ``r[k] = sum_n s[n + k] * conj(s[n])``.

    Periodic mode indexes cyclically (lags 0..N-1), aperiodic mode zero-pads
    (lags -(N-1)..N-1).  The delayed index is taken modulo N in periodic
    mode, which makes the DFT of the periodic ACF equal the PSD bin by bin.
    """

    values: np.ndarray
    mode: str
    normalized: bool

    @property
    def lags(self) -> np.ndarray:
        n_val = self.values.size
        if self.mode == "periodic":
            return np.arange(n_val)
        half = (n_val + 1) // 2
        return np.arange(-(half - 1), half)

    @property
    def zero_lag(self) -> complex:
        if self.mode == "periodic":
            return self.values[0]
        return self.values[self.values.size // 2]


def acf(signal: np.ndarray, mode: str = "periodic", normalize: bool = False) -> Acf:
    """Autocorrelation of one signal block.

    Parameters
    ----------
    signal : np.ndarray
        Complex samples, shape (N,).
    mode : str
        ``"periodic"`` (cyclic shifts) or ``"aperiodic"`` (zero padding).
    normalize : bool
        Divide by the zero-lag value when True.
    """
    s = np.asarray(signal, dtype=complex).ravel()
    n = s.size
    if n < 2:
        raise ValueError("signal must have at least 2 samples")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "periodic":
        values = np.fft.ifft(np.abs(np.fft.fft(s)) ** 2)
    else:
        nfft = 2 * n
        spec = np.fft.fft(s, nfft)
        circ = np.fft.ifft(spec * np.conj(spec))
        values = np.concatenate([circ[nfft - (n - 1):], circ[:n]])
    if normalize:
        r0 = values[0] if mode == "periodic" else values[n - 1]
        values = values / r0
    return Acf(values=values, mode=mode, normalized=normalize)


def psd(signal: np.ndarray) -> np.ndarray:
    """Power spectral density, ``|DFT(signal)|^2`` on the DFT bin grid."""
    return np.abs(np.fft.fft(np.asarray(signal, dtype=complex).ravel())) ** 2


def _sidelobe_mask(n_val: int, mode: str, exclude: int) -> np.ndarray:
    if mode == "periodic":
        k = np.arange(n_val)
        dist = np.minimum(k, n_val - k)
    else:
        half = (n_val + 1) // 2
        dist = np.abs(np.arange(-(half - 1), half))
    return dist >= exclude


def isl(correlation: Acf, exclude_mainlobe_lags: int = 1) -> float:
    """Integrated sidelobe level, ``sum |r[k]|^2 / |r[0]|^2`` over sidelobe lags.

    ``exclude_mainlobe_lags`` is the number of lags removed around zero on
    each side, counting lag zero itself; the default drops lag zero only.
    """
    if exclude_mainlobe_lags < 1:
        raise ValueError("exclude_mainlobe_lags must be at least 1")
    mask = _sidelobe_mask(correlation.values.size, correlation.mode, exclude_mainlobe_lags)
    if not np.any(mask):
        raise ValueError("mainlobe exclusion covers every lag")
    peak = np.abs(correlation.zero_lag) ** 2
    if peak == 0.0:
        raise ValueError("zero-lag power is zero")
    return float(np.sum(np.abs(correlation.values[mask]) ** 2) / peak)


def isl_db(correlation: Acf, exclude_mainlobe_lags: int = 1) -> float:
    return float(10.0 * np.log10(isl(correlation, exclude_mainlobe_lags)))


@dataclass(frozen=True)
class SensingStats:
    """Summary of a Monte-Carlo sensing-loss study."""

    mean: float
    variance: float
    tail_prob: float
    threshold: float
    trials: int
    singular_trials: int = 0

    @property
    def ci_halfwidth(self) -> float:
        """95% normal-approximation halfwidth for the mean."""
        return float(1.96 * np.sqrt(self.variance / self.trials))


def _collect_trials(fn, trials: int) -> list:
    workers = max_workers()
    if workers == 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials), chunksize=max(1, trials // (8 * workers))))


def _stats_from_values(values: np.ndarray, threshold: float, singular: int = 0) -> SensingStats:
    values = np.asarray(values, dtype=float)
    variance = float(np.var(values, ddof=1)) if values.size > 1 else 0.0
    return SensingStats(
        mean=float(np.mean(values)),
        variance=variance,
        tail_prob=float(np.mean(values >= threshold)),
        threshold=float(threshold),
        trials=int(values.size),
        singular_trials=int(singular),
    )


def sensing_stats(loss_sampler, threshold: float, trials: int, seed: int) -> SensingStats:
    """Estimate mean, variance and tail probability of a scalar loss.

    ``loss_sampler`` maps a derived integer seed to one real loss value.
    Trials are seeded independently from (seed, trial index), so results do
    not depend on execution order.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")

    def one(i: int) -> float:
        value = float(loss_sampler(derive_seed(seed, "trial", i)))
        if not np.isfinite(value):
            raise ValueError(f"loss sampler returned non-finite value at trial {i}")
        return value

    return _stats_from_values(np.array(_collect_trials(one, trials)), threshold)


def _random_block_acf(basis: ModulationBasis, c: Constellation, mode: str, seed: int) -> Acf:
    symbols = sample_block(c, basis.n, seed)
    return acf(basis.matrix @ symbols, mode=mode)


def expected_isl(
    basis: ModulationBasis,
    c: Constellation,
    trials: int,
    mode: str = "periodic",
    seed: int = 0,
    exclude_mainlobe_lags: int = 1,
    gaussian: bool = False,
) -> SensingStats:
    """Average ISL over random symbol blocks, each normalized by its own peak.

    With ``gaussian=True`` the constellation is replaced by an i.i.d.
    circular Gaussian codebook of the same mean power, which serves as the
    basis-independent control.
    """

    def one(i: int) -> float:
        child = derive_seed(seed, "trial", i)
        if gaussian:
            rng = np.random.default_rng(child)
            symbols = complex_gaussian(rng, basis.n)
            block = acf(basis.matrix @ symbols, mode=mode)
        else:
            block = _random_block_acf(basis, c, mode, child)
        return isl(block, exclude_mainlobe_lags)

    values = np.array(_collect_trials(one, trials))
    return _stats_from_values(values, threshold=np.inf)


def expected_acf_profile(
    basis: ModulationBasis,
    c: Constellation,
    trials: int,
    mode: str = "periodic",
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-lag mean and variance of |ACF|^2 over random symbol blocks."""

    def one(i: int) -> np.ndarray:
        block = _random_block_acf(basis, c, mode, derive_seed(seed, "trial", i))
        return np.abs(block.values) ** 2

    stacked = np.stack(_collect_trials(one, trials))
    return stacked.mean(axis=0), stacked.var(axis=0, ddof=1)


@dataclass(frozen=True)
class RangeScene:
    """Point targets at given ranges plus receiver noise.

    ``targets`` is a list of (range_m, complex amplitude) pairs; ``fs`` is
    the sample rate of the transmitted signal, which sets the range bin
    width ``C_LIGHT / (2 * fs)``.
    """

    targets: tuple
    fs: float
    noise_power: float

    def __post_init__(self):
        if len(self.targets) == 0:
            raise ValueError("scene needs at least one target")
        if self.fs <= 0.0:
            raise ValueError("sample rate must be positive")
        if self.noise_power < 0.0:
            raise ValueError("noise power must be nonnegative")
        object.__setattr__(
            self,
            "targets",
            tuple((float(r), complex(a)) for r, a in self.targets),
        )

    def delay_bins(self, n_samples: int) -> list[int]:
        bins = []
        for range_m, _ in self.targets:
            delay = 2.0 * range_m / C_LIGHT
            b = int(round(delay * self.fs))
            if not 0 <= b < n_samples:
                raise ValueError(
                    f"target at {range_m} m falls outside the unambiguous window "
                    f"of {n_samples} samples at fs={self.fs}"
                )
            bins.append(b)
        return bins


@dataclass(frozen=True)
class RangeProfile:
    ranges_m: np.ndarray
    values: np.ndarray


def _pulse_shape_block(samples: np.ndarray, pulse) -> np.ndarray:
    """Upsample one block by the pulse oversampling factor and apply the pulse cyclically.

    The discrete taps are the sampled pulse scaled by sqrt(dt), so one
    symbol carries energy g(0); with Nyquist normalization this keeps the
    transmitted block at unit energy per symbol and makes the scene's
    noise power directly comparable.
    """
    k_os = pulse.oversampling
    n_up = samples.size * k_os
    dt = pulse.symbol_period / k_os
    taps = pulse.time_pulse * np.sqrt(dt)
    if taps.size > n_up:
        raise ValueError("pulse span exceeds the block duration")
    upsampled = np.zeros(n_up, dtype=complex)
    upsampled[::k_os] = samples
    kernel = np.zeros(n_up)
    half = taps.size // 2
    idx = (np.arange(taps.size) - half) % n_up
    kernel[idx] = taps
    return np.fft.ifft(np.fft.fft(upsampled) * np.fft.fft(kernel))


def transmit_samples(signal, scene: RangeScene, pulse=None) -> np.ndarray:
    """Time samples at the scene sample rate, pulse-shaped when a pulse is given."""
    samples = getattr(signal, "time_samples", signal)
    samples = np.asarray(samples, dtype=complex).ravel()
    if pulse is None:
        return samples
    pulse_rate = pulse.oversampling / pulse.symbol_period
    if abs(pulse_rate - scene.fs) > 1e-6 * scene.fs:
        raise ValueError(
            f"pulse sample rate {pulse_rate} does not match scene fs {scene.fs}"
        )
    return _pulse_shape_block(samples, pulse)


def range_profile(signal, scene: RangeScene, pulse=None, seed: int = 0) -> RangeProfile:
    """Matched-filter range profile of one noisy echo.

    The echo superimposes every target as a cyclically delayed, scaled copy
    of the transmitted block (delays quantized to sample bins) plus circular
    complex Gaussian noise.  The profile is the squared magnitude of the
    correlation of the echo against the full transmitted block, indexed in
    meters via the two-way delay.
    """
    tx = transmit_samples(signal, scene, pulse)
    n = tx.size
    bins = scene.delay_bins(n)
    rng = np.random.default_rng(seed)
    echo = complex_gaussian(rng, n, scene.noise_power) if scene.noise_power > 0 else np.zeros(n, dtype=complex)
    for b, (_, amp) in zip(bins, scene.targets):
        echo = echo + amp * np.roll(tx, b)
    matched = np.fft.ifft(np.fft.fft(echo) * np.conj(np.fft.fft(tx)))
    ranges = np.arange(n) * C_LIGHT / (2.0 * scene.fs)
    return RangeProfile(ranges_m=ranges, values=np.abs(matched) ** 2)


def write_profile_csv(path: str, lag_or_range, mean, variance, meta: dict) -> list[str]:
    """Write a per-lag (or per-bin) CSV plus a JSON sidecar describing the run.

    Returns the paths written.  Floats are formatted with shortest
    round-trip text so identical runs produce identical bytes.
    """
    lines = ["lag_or_range,mean,variance"]
    for x, m, v in zip(lag_or_range, mean, variance):
        lines.append(f"{fmt(x)},{fmt(m)},{fmt(v)}")
    atomic_write_text(path, "\n".join(lines) + "\n")
    sidecar = str(path)[: -len(".csv")] + ".json" if str(path).endswith(".csv") else str(path) + ".json"
    atomic_write_text(sidecar, json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return [str(path), sidecar]
