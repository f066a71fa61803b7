"""Strict JSON experiment configuration: schema checks with field-path diagnostics."""

import json
import math
from dataclasses import dataclass

from .constellation import make_standard
from .metrics import C_LIGHT, MODES
from .utils import ConfigError
from .waveform import KINDS

EXPERIMENTS = ("acf-compare", "pulse-design", "range-scene", "pcs", "precoding")
SCHEMES = ("DDP", "DIP", "orthogonal-baseline")

_COMMON_FIELDS = {"experiment", "seed", "trials", "output_dir"}
_EXPERIMENT_FIELDS = {
    "acf-compare": {"bases", "constellation", "block_len", "mode"},
    "pulse-design": {
        "beta",
        "region",
        "symbol_period",
        "oversampling",
        "span_symbols",
        "design_iters",
    },
    "range-scene": {
        "basis",
        "constellation",
        "pulse",
        "beta",
        "targets",
        "region_m",
        "noise_power",
        "symbol_period",
        "block_len",
        "oversampling",
        "span_symbols",
        "n_integrations",
        "bin_tolerance",
    },
    "pcs": {"base", "kappas", "snr_db", "max_iters", "tolerance"},
    "precoding": {
        "n_tx",
        "n_rx",
        "noise_var",
        "power",
        "frame_lens",
        "symbols",
        "schemes",
        "comm",
        "sa_trials",
        "dip_iters",
    },
}
_COMM_FIELDS = {"n_cu", "noise_var", "rate_floor"}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description.

    ``params`` holds the experiment-specific fields; ``trials`` is the
    Monte-Carlo budget (the deterministic pulse-design and pcs pipelines
    validate it but do not consume it).
    """

    experiment: str
    seed: int
    trials: int
    output_dir: str | None
    params: dict


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_num(value) -> bool:
    return (isinstance(value, (int, float)) and not isinstance(value, bool)
            and math.isfinite(value))


def _get_int(obj, key, diags, minimum=None, maximum=None, required=True, default=None):
    if key not in obj:
        if required:
            diags.append(f"{key}: required field is missing")
        return default
    value = obj[key]
    if not _is_int(value):
        diags.append(f"{key}: must be an integer, got {value!r}")
        return default
    if minimum is not None and value < minimum:
        diags.append(f"{key}: must be at least {minimum}, got {value}")
        return default
    if maximum is not None and value > maximum:
        diags.append(f"{key}: must be at most {maximum}, got {value}")
        return default
    return value


def _get_num(obj, key, diags, minimum=None, maximum=None, required=True,
             default=None, exclusive_min=None):
    if key not in obj:
        if required:
            diags.append(f"{key}: required field is missing")
        return default
    value = obj[key]
    if not _is_num(value):
        diags.append(f"{key}: must be a finite number, got {value!r}")
        return default
    if exclusive_min is not None and value <= exclusive_min:
        diags.append(f"{key}: must be greater than {exclusive_min}, got {value}")
        return default
    if minimum is not None and value < minimum:
        diags.append(f"{key}: must be at least {minimum}, got {value}")
        return default
    if maximum is not None and value > maximum:
        diags.append(f"{key}: must be at most {maximum}, got {value}")
        return default
    return float(value)


def _get_str(obj, key, diags, choices=None, required=True, default=None):
    if key not in obj:
        if required:
            diags.append(f"{key}: required field is missing")
        return default
    value = obj[key]
    if not isinstance(value, str):
        diags.append(f"{key}: must be a string, got {value!r}")
        return default
    if choices is not None and value not in choices:
        diags.append(f"{key}: must be one of {sorted(choices)}, got {value!r}")
        return default
    return value


def _check_constellation(obj, key, diags):
    label = _get_str(obj, key, diags)
    if label is None:
        return
    try:
        make_standard(label)
    except ValueError as exc:
        diags.append(f"{key}: {exc}")


def _check_block_len(obj, diags, bases, key="block_len", default=None, required=True):
    n = _get_int(obj, key, diags, minimum=2, maximum=4096, required=required, default=default)
    if n is not None and "OTFS" in bases:
        root = int(round(math.sqrt(n)))
        if root * root != n:
            diags.append(f"{key}: OTFS needs a perfect-square block length, got {n}")
    return n


def _check_acf_compare(params, diags):
    bases = []
    raw = params.get("bases")
    if raw is None:
        diags.append("bases: required field is missing")
    elif not isinstance(raw, list) or not raw:
        diags.append(f"bases: must be a nonempty list of basis kinds, got {raw!r}")
    else:
        for i, kind in enumerate(raw):
            if not isinstance(kind, str) or kind.upper() not in KINDS:
                diags.append(f"bases[{i}]: must be one of {list(KINDS)}, got {kind!r}")
            else:
                bases.append(kind.upper())
    _check_constellation(params, "constellation", diags)
    _check_block_len(params, diags, bases)
    _get_str(params, "mode", diags, choices=MODES, required=False, default="periodic")


def _pulse_grid_has_points(lo, hi, oversampling) -> bool:
    """A delay interval in symbol units contains a grid point at spacing 1/K."""
    return math.floor(hi * oversampling + 1e-9) >= math.ceil(lo * oversampling - 1e-9)


def _check_pulse_design(params, diags):
    _get_num(params, "beta", diags, minimum=0.0, maximum=1.0)
    _get_num(params, "symbol_period", diags, exclusive_min=0.0, required=False, default=1e-6)
    k_os = _get_int(params, "oversampling", diags, minimum=4, required=False, default=16)
    span = _get_int(params, "span_symbols", diags, minimum=8, required=False, default=16)
    _get_int(params, "design_iters", diags, minimum=1, required=False, default=1500)
    region = params.get("region")
    if region is None:
        diags.append("region: required field is missing")
        return
    if (not isinstance(region, list) or len(region) != 2
            or not all(_is_num(x) for x in region)):
        diags.append(f"region: must be [lo, hi] in symbol periods, got {region!r}")
        return
    lo, hi = float(region[0]), float(region[1])
    if not lo < hi:
        diags.append(f"region: needs lo < hi, got {region}")
        return
    if lo < 1.0:
        diags.append(f"region: must start at or after one symbol period, got {lo}")
    if span is not None and hi >= span / 2.0:
        diags.append(f"region: must end below span_symbols/2 = {span / 2.0} symbol periods, got {hi}")
    if k_os is not None and not _pulse_grid_has_points(lo, hi, k_os):
        diags.append("region: contains no delay grid points at this oversampling")


def scene_geometry(params: dict) -> dict:
    """Derived quantities shared by range-scene validation and execution.

    Assumes the individual fields already passed their own checks.  The
    designed-pulse delay region covers the two-way delay offsets of the
    detection window relative to the strongest target (whose sidelobes mask
    the weak one), padded slightly and clipped to the pulse span.
    """
    T = float(params.get("symbol_period"))
    k_os = int(params.get("oversampling", 8))
    span = int(params.get("span_symbols", 16))
    block_len = int(params.get("block_len", 256))
    fs = k_os / T
    n_up = block_len * k_os
    targets = [(float(r), float(a)) for r, a in params["targets"]]
    strong_range = max(targets, key=lambda t: abs(t[1]))[0]
    lo_m, hi_m = (float(x) for x in params["region_m"])
    bins = [int(round(2.0 * r / C_LIGHT * fs)) for r, _ in targets]
    design_lo = max(0.98 * 2.0 * (lo_m - strong_range) / C_LIGHT, 1.05 * T)
    design_hi = min(1.02 * 2.0 * (hi_m - strong_range) / C_LIGHT, 0.98 * span * T / 2.0)
    return {
        "fs": fs,
        "n_up": n_up,
        "bins": bins,
        "strong_range": strong_range,
        "design_region": (design_lo, design_hi),
    }


def _check_range_scene(params, diags):
    basis = _get_str(params, "basis", diags)
    bases = [basis.upper()] if isinstance(basis, str) and basis.upper() in KINDS else []
    if basis is not None and not bases:
        diags.append(f"basis: must be one of {list(KINDS)}, got {basis!r}")
    _check_constellation(params, "constellation", diags)
    pulse = _get_str(params, "pulse", diags, choices=("rrc", "designed"))
    _get_num(params, "beta", diags, minimum=0.0, maximum=1.0)
    _get_num(params, "noise_power", diags, minimum=0.0)
    T = _get_num(params, "symbol_period", diags, exclusive_min=0.0)
    block_len = _check_block_len(params, diags, bases, default=256, required=False)
    k_os = _get_int(params, "oversampling", diags, minimum=4, required=False, default=8)
    span = _get_int(params, "span_symbols", diags, minimum=8, required=False, default=16)
    _get_int(params, "n_integrations", diags, minimum=1, required=False, default=4)
    _get_int(params, "bin_tolerance", diags, minimum=0, required=False, default=1)

    targets = params.get("targets")
    targets_ok = False
    if targets is None:
        diags.append("targets: required field is missing")
    elif not isinstance(targets, list) or len(targets) < 2:
        diags.append("targets: need at least two [range_m, amplitude] pairs")
    else:
        targets_ok = True
        for i, pair in enumerate(targets):
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(_is_num(x) for x in pair)):
                diags.append(f"targets[{i}]: must be [range_m, amplitude], got {pair!r}")
                targets_ok = False
            elif pair[0] <= 0.0:
                diags.append(f"targets[{i}]: range must be positive, got {pair[0]}")
                targets_ok = False
        if targets_ok:
            amps = sorted(abs(float(a)) for _, a in targets)
            if abs(amps[0] - amps[1]) < 1e-12:
                diags.append("targets: the two weakest amplitudes must be distinct")
                targets_ok = False

    region = params.get("region_m")
    region_ok = False
    if region is None:
        diags.append("region_m: required field is missing")
    elif (not isinstance(region, list) or len(region) != 2
            or not all(_is_num(x) for x in region)
            or not 0.0 <= float(region[0]) < float(region[1])):
        diags.append(f"region_m: must be [lo, hi] meters with 0 <= lo < hi, got {region!r}")
    else:
        region_ok = True

    if span is not None and block_len is not None and span > block_len:
        diags.append(f"span_symbols: pulse span {span} exceeds the block length {block_len}")

    needed = (targets_ok and region_ok and None not in (T, block_len, k_os, span)
              and not diags)
    if not needed:
        return
    geo = scene_geometry(params)
    for i, b in enumerate(geo["bins"]):
        if not 0 <= b < geo["n_up"]:
            diags.append(
                f"targets[{i}]: falls outside the unambiguous window of "
                f"{geo['n_up']} samples at fs={geo['fs']}"
            )
    weak = min(range(len(targets)), key=lambda i: abs(float(targets[i][1])))
    bin_per_m = 2.0 * geo["fs"] / C_LIGHT
    k_lo = math.ceil(float(region[0]) * bin_per_m - 1e-9)
    k_hi = math.floor(float(region[1]) * bin_per_m + 1e-9)
    if not k_lo <= geo["bins"][weak] <= k_hi:
        diags.append("region_m: the weakest target must lie inside the detection window")
    if pulse == "designed":
        lo_s, hi_s = geo["design_region"]
        if not lo_s < hi_s:
            diags.append(
                "region_m: designed-pulse delay region is empty; the window must "
                "extend beyond the strongest target by more than one symbol period"
            )
        elif not _pulse_grid_has_points(lo_s / T, hi_s / T, k_os):
            diags.append("region_m: designed-pulse delay region contains no grid points")


def _check_pcs(params, diags):
    _check_constellation(params, "base", diags)
    _get_num(params, "snr_db", diags)
    _get_int(params, "max_iters", diags, minimum=1, required=False, default=300)
    _get_num(params, "tolerance", diags, exclusive_min=0.0, required=False, default=1e-7)
    kappas = params.get("kappas")
    if kappas is None:
        diags.append("kappas: required field is missing")
    elif not isinstance(kappas, list) or not kappas:
        diags.append(f"kappas: must be a nonempty list of kurtosis caps, got {kappas!r}")
    else:
        for i, kappa in enumerate(kappas):
            if not _is_num(kappa):
                diags.append(f"kappas[{i}]: must be a finite number, got {kappa!r}")
            elif kappa < 1.0:
                diags.append(
                    f"kappas[{i}]: kurtosis below 1 infeasible, "
                    f"E|x|^4 / (E|x|^2)^2 is at least 1, got {kappa}"
                )


def _check_precoding(params, diags):
    n_tx = _get_int(params, "n_tx", diags, minimum=1)
    _get_int(params, "n_rx", diags, minimum=1)
    _get_num(params, "noise_var", diags, exclusive_min=0.0)
    _get_num(params, "power", diags, exclusive_min=0.0)
    _get_int(params, "sa_trials", diags, minimum=100, required=False, default=200)
    _get_int(params, "dip_iters", diags, minimum=1, required=False, default=300)

    frame_lens = params.get("frame_lens")
    if frame_lens is None:
        diags.append("frame_lens: required field is missing")
    elif not isinstance(frame_lens, list) or not frame_lens:
        diags.append(f"frame_lens: must be a nonempty list of frame lengths, got {frame_lens!r}")
    else:
        for i, length in enumerate(frame_lens):
            if not _is_int(length) or length < 1:
                diags.append(f"frame_lens[{i}]: must be a positive integer, got {length!r}")
            elif n_tx is not None and length < n_tx:
                diags.append(f"frame_lens[{i}]: must be at least n_tx={n_tx} for invertible frames")

    symbols = params.get("symbols", "gaussian")
    if symbols != "gaussian":
        _check_constellation(params, "symbols", diags)

    schemes = params.get("schemes")
    if schemes is not None:
        if not isinstance(schemes, list) or not schemes:
            diags.append(f"schemes: must be a nonempty list, got {schemes!r}")
        else:
            for i, scheme in enumerate(schemes):
                if scheme not in SCHEMES:
                    diags.append(f"schemes[{i}]: must be one of {list(SCHEMES)}, got {scheme!r}")

    comm = params.get("comm")
    if comm is not None:
        if not isinstance(comm, dict):
            diags.append(f"comm: must be an object, got {comm!r}")
            return
        for key in sorted(set(comm) - _COMM_FIELDS):
            diags.append(f"comm.{key}: unknown field")
        sub: list[str] = []
        _get_int(comm, "n_cu", sub, minimum=1)
        _get_num(comm, "noise_var", sub, exclusive_min=0.0)
        _get_num(comm, "rate_floor", sub, minimum=0.0, required=False, default=0.0)
        diags.extend(f"comm.{d}" for d in sub)


_CHECKERS = {
    "acf-compare": _check_acf_compare,
    "pulse-design": _check_pulse_design,
    "range-scene": _check_range_scene,
    "pcs": _check_pcs,
    "precoding": _check_precoding,
}


def validate_text(text: str) -> list[str]:
    """Validate a JSON config; returns diagnostics, empty when runnable."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        return [f"config is not valid JSON: {exc}"]
    if not isinstance(obj, dict):
        return [f"config must be a JSON object, got {type(obj).__name__}"]

    diags: list[str] = []
    experiment = _get_str(obj, "experiment", diags, choices=EXPERIMENTS)
    allowed = _COMMON_FIELDS | _EXPERIMENT_FIELDS.get(experiment, set())
    for key in sorted(set(obj) - allowed):
        diags.append(f"{key}: unknown field for experiment {experiment!r}")
    _get_int(obj, "seed", diags)
    _get_int(obj, "trials", diags, minimum=1)
    _get_str(obj, "output_dir", diags, required=False)
    if experiment is not None:
        params = {k: v for k, v in obj.items() if k not in _COMMON_FIELDS and k in allowed}
        _CHECKERS[experiment](params, diags)
    return diags


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate, raising ConfigError carrying every diagnostic."""
    diags = validate_text(text)
    if diags:
        raise ConfigError("; ".join(diags))
    obj = json.loads(text)
    return ExperimentConfig(
        experiment=obj["experiment"],
        seed=int(obj["seed"]),
        trials=int(obj["trials"]),
        output_dir=obj.get("output_dir"),
        params={k: v for k, v in obj.items() if k not in _COMMON_FIELDS},
    )
