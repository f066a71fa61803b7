"""Unitary modulation bases (SC, OFDM, OTFS, AFDM) acting on symbol blocks."""

from dataclasses import dataclass, field

import numpy as np

KINDS = ("SC", "OFDM", "OTFS", "AFDM")


@dataclass(frozen=True)
class ModulationBasis:
    """An n-by-n unitary matrix mapping a symbol block to time samples."""

    kind: str
    n: int
    matrix: np.ndarray
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SignalBlock:
    time_samples: np.ndarray
    source_symbols: np.ndarray
    basis_kind: str


def idft_matrix(n: int) -> np.ndarray:
    """Unitary inverse DFT, entry [k, m] = exp(+2j*pi*k*m/n) / sqrt(n)."""
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def build_basis(kind: str, n: int, params: dict | None = None) -> ModulationBasis:
    """Construct a modulation basis.

    Parameters
    ----------
    kind : str
        One of ``SC``, ``OFDM``, ``OTFS``, ``AFDM``.
    n : int
        Block length.  Dense matrices are built, so n is capped at 4096.
    params : dict, optional
        ``OTFS`` takes ``delay_bins`` and ``doppler_bins`` with
        ``delay_bins * doppler_bins == n`` (defaults to the square split
        when n is a perfect square).  ``AFDM`` takes chirp rates ``c1``
        (default ``1/(2n)``) and ``c2`` (default 0).

    Notes
    -----
    OTFS places symbols on a delay-Doppler grid and applies the inverse
    discrete Zak transform: with delay-major vectorization the time
    samples are ``x[l + m*L] = (1/sqrt(M)) * sum_k X[l, k] * exp(2j*pi*k*m/M)``,
    which is the Kronecker product of an M-point inverse DFT with an
    L-by-L identity.  AFDM sandwiches the inverse DFT between two
    quadratic chirps, ``diag(exp(2j*pi*c1*k^2)) @ IDFT @ diag(exp(2j*pi*c2*k^2))``.
    """
    kind = kind.upper()
    if kind not in KINDS:
        raise ValueError(f"unknown basis kind {kind!r}, expected one of {KINDS}")
    if n < 2 or n > 4096:
        raise ValueError(f"block length must be in [2, 4096], got {n}")
    params = dict(params or {})

    if kind == "SC":
        matrix = np.eye(n, dtype=complex)
    elif kind == "OFDM":
        matrix = idft_matrix(n)
    elif kind == "OTFS":
        if "delay_bins" in params or "doppler_bins" in params:
            l_bins = int(params["delay_bins"])
            m_bins = int(params["doppler_bins"])
        else:
            root = int(round(np.sqrt(n)))
            if root * root != n:
                raise ValueError(
                    "OTFS needs delay_bins/doppler_bins params when n is not a perfect square"
                )
            l_bins = m_bins = root
        if l_bins < 1 or m_bins < 1 or l_bins * m_bins != n:
            raise ValueError(
                f"OTFS grid {l_bins}x{m_bins} does not factor block length {n}"
            )
        params = {"delay_bins": l_bins, "doppler_bins": m_bins}
        matrix = np.kron(idft_matrix(m_bins), np.eye(l_bins, dtype=complex))
    else:
        c1 = float(params.get("c1", 1.0 / (2.0 * n)))
        c2 = float(params.get("c2", 0.0))
        params = {"c1": c1, "c2": c2}
        k = np.arange(n)
        chirp1 = np.exp(2j * np.pi * c1 * k**2)
        chirp2 = np.exp(2j * np.pi * c2 * k**2)
        matrix = (chirp1[:, None] * idft_matrix(n)) * chirp2[None, :]

    return ModulationBasis(kind=kind, n=n, matrix=matrix, params=params)


def modulate(basis: ModulationBasis, symbols: np.ndarray) -> SignalBlock:
    """Apply the basis matrix to one symbol block."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    if symbols.size != basis.n:
        raise ValueError(f"expected {basis.n} symbols, got {symbols.size}")
    return SignalBlock(
        time_samples=basis.matrix @ symbols,
        source_symbols=symbols,
        basis_kind=basis.kind,
    )


def unitarity_defect(basis: ModulationBasis) -> float:
    """Max absolute deviation of U @ U^H from the identity."""
    gram = basis.matrix @ basis.matrix.conj().T
    return float(np.max(np.abs(gram - np.eye(basis.n))))


def basis_descriptor(basis: ModulationBasis) -> dict:
    """JSON-ready descriptor {kind, n, params}."""
    return {"kind": basis.kind, "n": basis.n, "params": dict(basis.params)}


def basis_from_descriptor(desc: dict) -> ModulationBasis:
    missing = {"kind", "n"} - set(desc)
    if missing:
        raise ValueError(f"basis descriptor missing fields: {sorted(missing)}")
    return build_basis(desc["kind"], int(desc["n"]), desc.get("params"))
