"""Finite constellations with point probabilities, moments, and sampling."""

import json
import re
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Constellation:
    """A finite complex alphabet with a probability on each point.

    Parameters
    ----------
    label : str
        Human-readable name, e.g. ``"16QAM"``.
    points : np.ndarray
        Complex points, shape (M,), pairwise distinct.
    probs : np.ndarray
        Probabilities, shape (M,), nonnegative, summing to one.
    """

    label: str
    points: np.ndarray
    probs: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        if pts.size < 2:
            raise ValueError("constellation needs at least 2 points")
        if self.probs is None:
            pr = np.full(pts.size, 1.0 / pts.size)
        else:
            pr = np.asarray(self.probs, dtype=float).ravel()
        if pr.size != pts.size:
            raise ValueError(f"got {pts.size} points but {pr.size} probabilities")
        if np.any(pr < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(pr.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {pr.sum()!r}, expected 1")
        if np.min(np.abs(pts[:, None] - pts[None, :]) + np.eye(pts.size)) < 1e-12:
            raise ValueError("constellation points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    def __len__(self) -> int:
        return self.points.size


@dataclass(frozen=True)
class MomentReport:
    power: float
    fourth_moment: float
    kurtosis: float
    entropy_bits: float


_LABEL = re.compile(r"^(\d+)(PSK|QAM)$")


def make_standard(label: str, probs=None) -> Constellation:
    """Build a standard constellation by label, normalized to unit mean power.

    Supported labels are ``QPSK``, ``<M>PSK`` and square ``<M>QAM``
    (``M`` in 4, 16, 64, 256, ...).  QAM points lie on the odd-integer
    grid before normalization and are enumerated row-major over the
    in-phase/quadrature axes.
    """
    name = label.upper().replace("-", "")
    if name == "QPSK":
        name = "4PSK"
    m = _LABEL.match(name)
    if not m:
        raise ValueError(f"unsupported constellation label {label!r}")
    order, kind = int(m.group(1)), m.group(2)
    if order < 2:
        raise ValueError(f"constellation order must be at least 2, got {order}")
    if kind == "PSK":
        k = np.arange(order)
        points = np.exp(2j * np.pi * k / order)
    else:
        side = int(round(np.sqrt(order)))
        if side * side != order:
            raise ValueError(f"{label!r}: QAM order must be a perfect square")
        levels = np.arange(-(side - 1), side, 2)
        re_ax, im_ax = np.meshgrid(levels, levels, indexing="ij")
        points = (re_ax + 1j * im_ax).ravel()
    c = Constellation(label=label, points=points, probs=probs)
    return normalize_power(c)


def normalize_power(c: Constellation) -> Constellation:
    """Rescale points so the mean power under ``c.probs`` is exactly one."""
    power = float(np.dot(c.probs, np.abs(c.points) ** 2))
    if power <= 0.0:
        raise ValueError("mean power is zero, cannot normalize")
    return Constellation(label=c.label, points=c.points / np.sqrt(power), probs=c.probs)


def moments(c: Constellation) -> MomentReport:
    """Power, fourth moment, kurtosis E|x|^4 / (E|x|^2)^2 and entropy in bits."""
    a2 = np.abs(c.points) ** 2
    power = float(np.dot(c.probs, a2))
    fourth = float(np.dot(c.probs, a2**2))
    p = c.probs[c.probs > 0.0]
    entropy = float(-np.dot(p, np.log2(p)))
    return MomentReport(
        power=power,
        fourth_moment=fourth,
        kurtosis=fourth / power**2,
        entropy_bits=entropy,
    )


def sample_block(c: Constellation, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. symbols by inverse-CDF sampling over ``c.probs``."""
    if n < 1:
        raise ValueError(f"block length must be positive, got {n}")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(c.probs)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return c.points[idx]


def to_json(c: Constellation) -> str:
    payload = {
        "label": c.label,
        "points": [[float(p.real), float(p.imag)] for p in c.points],
        "probs": [float(p) for p in c.probs],
    }
    return json.dumps(payload, indent=2)


def from_json(text: str) -> Constellation:
    payload = json.loads(text)
    missing = {"label", "points", "probs"} - set(payload)
    if missing:
        raise ValueError(f"constellation JSON missing fields: {sorted(missing)}")
    points = np.array([complex(re_, im_) for re_, im_ in payload["points"]])
    return Constellation(label=payload["label"], points=points, probs=payload["probs"])
