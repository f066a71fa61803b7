"""Experiment pipelines: each one runs a study end to end and writes CSV/JSON artifacts."""

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ExperimentConfig, scene_geometry
from .constellation import Constellation, make_standard, sample_block
from .metrics import RangeScene, expected_isl, range_profile, write_profile_csv
from .precoding import (
    CommLink,
    PrecodedFrame,
    TirModel,
    comm_rate,
    ddp_precoder,
    dip_precoder,
    ergodic_error,
    lse_error,
)
from .pulses import design_pulse, rrc_pulse, weak_target_detection_prob
from .shaping import AwgnChannel, ShapingProblem, shape
from .utils import (
    ConvergenceError,
    atomic_write_text,
    canonical_json,
    complex_gaussian,
    derive_seed,
    fmt,
    rng_from,
    sha256_hex,
)
from .waveform import build_basis, modulate

SCHEME_ORDER = ("DDP", "DIP", "orthogonal-baseline")


@dataclass(frozen=True)
class RunManifest:
    """Provenance record for one run: config hash, version, timing, output checksums."""

    experiment: str
    config_hash: str
    version: str
    started_at: str
    finished_at: str
    out_dir: str
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "version": self.version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "out_dir": self.out_dir,
            "outputs": dict(self.outputs),
        }


def _write_csv(path: str, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else fmt(cell) for cell in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _symbol_source(label):
    return "gaussian" if label == "gaussian" else make_standard(label)


def _run_acf_compare(params: dict, trials: int, seed: int, out: str) -> list:
    c = make_standard(params["constellation"])
    mode = params.get("mode", "periodic")
    rows = []
    for kind in params["bases"]:
        basis = build_basis(kind, int(params["block_len"]))
        stats = expected_isl(
            basis, c, trials, mode=mode, seed=derive_seed(seed, "acf-compare", basis.kind)
        )
        rows.append((basis.kind, stats.mean, stats.ci_halfwidth))
    path = os.path.join(out, "eisl.csv")
    _write_csv(path, ["basis", "eisl_mean", "eisl_ci"], rows)
    return [path]


def _run_pulse_design(params: dict, trials: int, seed: int, out: str) -> list:
    T = float(params.get("symbol_period", 1e-6))
    k_os = int(params.get("oversampling", 16))
    span = int(params.get("span_symbols", 16))
    lo, hi = (float(x) for x in params["region"])
    result = design_pulse(
        T,
        float(params["beta"]),
        K=k_os,
        region=(lo * T, hi * T),
        iters=int(params.get("design_iters", 1500)),
        span_symbols=span,
    )
    if not result.converged:
        raise ConvergenceError(
            f"pulse design stopped after {result.iterations} iterations without "
            f"meeting tolerance; raise design_iters"
        )
    spectrum_path = os.path.join(out, "pulse_spectrum.csv")
    _write_csv(
        spectrum_path,
        ["freq_hz", "spectrum_sq"],
        list(zip(result.pulse.freqs, result.pulse.spectrum_sq)),
    )
    report_path = os.path.join(out, "design_report.json")
    _write_json(
        report_path,
        {
            "beta": float(params["beta"]),
            "symbol_period": T,
            "oversampling": k_os,
            "span_symbols": span,
            "region_s": [lo * T, hi * T],
            "islr_db_before": result.islr_db_before,
            "islr_db_after": result.islr_db_after,
            "iterations": result.iterations,
        },
    )
    return [spectrum_path, report_path]


def _run_range_scene(params: dict, trials: int, seed: int, out: str) -> list:
    c = make_standard(params["constellation"])
    block_len = int(params.get("block_len", 256))
    basis = build_basis(params["basis"], block_len)
    geo = scene_geometry(params)
    scene = RangeScene(
        targets=tuple((r, a) for r, a in params["targets"]),
        fs=geo["fs"],
        noise_power=float(params["noise_power"]),
    )
    T = float(params["symbol_period"])
    k_os = int(params.get("oversampling", 8))
    span = int(params.get("span_symbols", 16))
    beta = float(params["beta"])
    if params["pulse"] == "rrc":
        pulse = rrc_pulse(T, beta, K=k_os, span_symbols=span)
    else:
        pulse = design_pulse(T, beta, K=k_os, region=geo["design_region"], span_symbols=span).pulse

    profiles = []
    for i in range(trials):
        child = derive_seed(seed, "range-scene", "profile", i)
        symbols = sample_block(c, basis.n, child)
        prof = range_profile(modulate(basis, symbols), scene, pulse, seed=derive_seed(child, "noise"))
        profiles.append(prof.values)
        ranges_m = prof.ranges_m
    stacked = np.stack(profiles)
    mean = stacked.mean(axis=0)
    variance = stacked.var(axis=0, ddof=1) if trials > 1 else np.zeros_like(mean)
    profile_path = os.path.join(out, "profile.csv")
    written = write_profile_csv(
        profile_path,
        ranges_m,
        mean,
        variance,
        {
            "trials": trials,
            "seed": seed,
            "basis": basis.kind,
            "constellation": c.label,
        },
    )

    detection = weak_target_detection_prob(
        scene,
        pulse,
        basis,
        c,
        region_m=tuple(float(x) for x in params["region_m"]),
        trials=trials,
        seed=derive_seed(seed, "range-scene", "detect"),
        n_integrations=int(params.get("n_integrations", 4)),
        bin_tolerance=int(params.get("bin_tolerance", 1)),
    )
    report_path = os.path.join(out, "scene_report.json")
    _write_json(
        report_path,
        {
            "pulse": params["pulse"],
            "basis": basis.kind,
            "constellation": c.label,
            "detection_prob": detection,
            "region_m": [float(x) for x in params["region_m"]],
            "noise_power": float(params["noise_power"]),
            "trials": trials,
        },
    )
    return written + [report_path]


def _run_pcs(params: dict, trials: int, seed: int, out: str) -> list:
    base = make_standard(params["base"])
    channel = AwgnChannel.from_snr_db(float(params["snr_db"]))
    rows = []
    for kappa in params["kappas"]:
        result = shape(
            ShapingProblem(
                base=base,
                kurtosis_cap=float(kappa),
                channel=channel,
                max_iters=int(params.get("max_iters", 300)),
                tolerance=float(params.get("tolerance", 1e-7)),
            )
        )
        if not result.converged:
            raise ConvergenceError(
                f"shaping at kurtosis cap {kappa} did not converge within "
                f"{params.get('max_iters', 300)} iterations"
            )
        rows.append(
            (float(kappa), result.achieved_kurtosis, result.mi_bits,
             result.iterations, result.converged)
        )
    path = os.path.join(out, "frontier.csv")
    _write_csv(
        path,
        ["kappa_target", "kappa_achieved", "mi_bits", "iterations", "converged"],
        rows,
    )
    return [path]


def _ddp_row(model, dist, power, link, trials, seed):
    values = []
    rates = []
    for i in range(trials):
        child = derive_seed(seed, "ddp", i)
        if isinstance(dist, Constellation):
            s = sample_block(dist, model.n_tx * model.frame_len, child).reshape(
                model.n_tx, model.frame_len
            )
        else:
            s = complex_gaussian(np.random.default_rng(child), (model.n_tx, model.frame_len))
        w = ddp_precoder(s, power)
        frame = PrecodedFrame(precoder=w, symbols=s, power_budget=power)
        values.append(lse_error(frame, model))
        if link is not None:
            rates.append(comm_rate(w, link))
    values = np.array(values)
    ci = 1.96 * float(np.sqrt(values.var(ddof=1) / trials)) if trials > 1 else 0.0
    rate = float(np.mean(rates)) if rates else None
    return float(values.mean()), ci, rate


def _run_precoding(params: dict, trials: int, seed: int, out: str) -> list:
    n_tx = int(params["n_tx"])
    power = float(params["power"])
    dist = _symbol_source(params.get("symbols", "gaussian"))
    schemes = params.get("schemes", list(SCHEME_ORDER))
    comm_cfg = params.get("comm")
    link = None
    if comm_cfg is not None:
        h = complex_gaussian(rng_from(seed, "precoding", "channel"), (int(comm_cfg["n_cu"]), n_tx))
        link = CommLink(
            channel=h,
            noise_var=float(comm_cfg["noise_var"]),
            rate_floor=float(comm_cfg.get("rate_floor", 0.0)),
        )

    rows = []
    for length in params["frame_lens"]:
        model = TirModel(
            n_tx=n_tx,
            n_rx=int(params["n_rx"]),
            noise_var=float(params["noise_var"]),
            frame_len=int(length),
        )
        for scheme in SCHEME_ORDER:
            if scheme not in schemes:
                continue
            run_seed = derive_seed(seed, "precoding", length, scheme)
            if scheme == "DDP":
                mean, ci, rate = _ddp_row(model, dist, power, link, trials, run_seed)
            else:
                if scheme == "DIP":
                    w = dip_precoder(
                        model,
                        dist,
                        power,
                        "LSE",
                        comm=link,
                        sa_trials=int(params.get("sa_trials", 200)),
                        iters=int(params.get("dip_iters", 300)),
                        seed=derive_seed(seed, "precoding", length, "dip-design"),
                    )
                else:
                    w = np.sqrt(power / n_tx) * np.eye(n_tx)
                stats = ergodic_error(w, model, dist, "LSE", trials=trials, seed=run_seed)
                mean, ci = stats.mean, stats.ci_halfwidth
                rate = comm_rate(w, link) if link is not None else None
            rows.append(
                (int(length), n_tx, scheme, mean, ci, "" if rate is None else fmt(rate))
            )

    csv_path = os.path.join(out, "precoding.csv")
    _write_csv(csv_path, ["L", "n_tx", "scheme", "else_mean", "else_ci", "rate_bits"], rows)
    problem_path = os.path.join(out, "problem.json")
    problem = {
        "n_tx": n_tx,
        "n_rx": int(params["n_rx"]),
        "noise_var": float(params["noise_var"]),
        "power": power,
        "frame_lens": [int(x) for x in params["frame_lens"]],
        "symbols": params.get("symbols", "gaussian"),
        "trials": trials,
    }
    if link is not None:
        problem["comm"] = {
            "n_cu": int(comm_cfg["n_cu"]),
            "noise_var": float(comm_cfg["noise_var"]),
            "rate_floor": float(comm_cfg.get("rate_floor", 0.0)),
            "channel_re": np.real(link.channel).tolist(),
            "channel_im": np.imag(link.channel).tolist(),
        }
    _write_json(problem_path, problem)
    return [csv_path, problem_path]


_PIPELINES = {
    "acf-compare": _run_acf_compare,
    "pulse-design": _run_pulse_design,
    "range-scene": _run_range_scene,
    "pcs": _run_pcs,
    "precoding": _run_precoding,
}


def run_experiment(
    config: ExperimentConfig, out_dir: str | None = None, seed: int | None = None
) -> RunManifest:
    """Execute one experiment and write its artifacts plus a manifest.

    ``out_dir`` and ``seed`` override the corresponding config fields; the
    manifest's config hash covers the effective values, so two runs hash
    equal exactly when they are configured equally.
    """
    out = out_dir or config.output_dir or "isac-out"
    root_seed = config.seed if seed is None else int(seed)
    effective = dict(config.params)
    effective.update(
        {
            "experiment": config.experiment,
            "seed": root_seed,
            "trials": config.trials,
            "output_dir": out,
        }
    )
    started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    os.makedirs(out, exist_ok=True)
    paths = _PIPELINES[config.experiment](config.params, config.trials, root_seed, out)
    outputs = {}
    for path in paths:
        with open(path, "rb") as fh:
            outputs[os.path.basename(path)] = sha256_hex(fh.read())
    manifest = RunManifest(
        experiment=config.experiment,
        config_hash=sha256_hex(canonical_json(effective)),
        version=__version__,
        started_at=started,
        finished_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        out_dir=out,
        outputs=outputs,
    )
    _write_json(os.path.join(out, "manifest.json"), manifest.to_dict())
    return manifest
