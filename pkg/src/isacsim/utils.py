"""Shared helpers: seed derivation, dB conversion, complex Gaussian draws, file output."""

import hashlib
import json
import os
import tempfile

import numpy as np


class ConfigError(ValueError):
    """Raised when an experiment configuration fails validation."""


class InfeasibleError(RuntimeError):
    """Raised when a constraint set is empty or a requirement exceeds what is achievable."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its budget without meeting tolerance."""


def derive_seed(root: int, *parts) -> int:
    """Derive a child seed from a root seed and a label path.

    The derivation hashes the root together with every part (pipeline name,
    trial index, ...), so distinct labels give statistically independent
    streams and the same labels always reproduce the same stream.
    """
    h = hashlib.sha256()
    h.update(str(int(root)).encode())
    for part in parts:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little")


def rng_from(root: int, *parts) -> np.random.Generator:
    """Generator seeded by ``derive_seed(root, *parts)``."""
    return np.random.default_rng(derive_seed(root, *parts))


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def complex_gaussian(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with total variance ``var``."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def max_workers() -> int:
    """Worker cap for Monte-Carlo loops, set by the ISAC_THREADS variable."""
    raw = os.environ.get("ISAC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ISAC_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def fmt(value) -> str:
    """Shortest round-trip text for a scalar, for byte-stable CSV output."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def atomic_write_text(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, no whitespace variation."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data) -> str:
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()
