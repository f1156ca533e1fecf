"""Random-matrix ensembles and semicircle diagnostics.

The linear backbone of the model is a GUE matrix ``H = Psi diag(lam) Psi*`` of
size ``d = 2N + 1``.  Eigenvalues are indexed by ``k in [-N, N]`` in ascending
order, and ``nu(k / N)`` is the deterministic location of ``lam_k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "SpectralData",
    "sample_gue",
    "sample_haar_unitary",
    "spectral_decompose",
    "semicircle_density",
    "semicircle_cdf",
    "nu",
    "nu_prime",
    "nu_inverse",
    "rigidity_residuals",
    "local_law_count",
    "resolvent_sum",
    "histogram_l1_distance",
]

NU_TOL = 1e-12


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues (ascending) and phase-fixed eigenvectors of a Hermitian matrix.

    ``psi[:, i]`` is the eigenvector for ``lam[i]``; position ``i`` corresponds
    to the frequency ``k = i - N``.
    """

    half_size: int
    lam: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        d = 2 * self.half_size + 1
        lam = np.asarray(self.lam, dtype=float)
        psi = np.asarray(self.psi, dtype=complex)
        if lam.shape != (d,) or psi.shape != (d, d):
            raise ValueError(f"expected lam of shape ({d},) and psi of shape ({d}, {d})")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be sorted in ascending order")
        lam.setflags(write=False)
        psi.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "psi", psi)

    @property
    def dim(self) -> int:
        return 2 * self.half_size + 1

    @property
    def k(self) -> np.ndarray:
        """Frequency labels ``-N..N``."""
        return np.arange(-self.half_size, self.half_size + 1)

    def matrix(self) -> np.ndarray:
        """Reconstruct ``Psi diag(lam) Psi*``."""
        return (self.psi * self.lam) @ self.psi.conj().T

    # --- serialization -------------------------------------------------
    # JSON layout: {"dim", "half_size", "lambda": [...], "psi": [re, im, re, im, ...]}
    # with psi flattened row-major, each complex entry as an interleaved float64 pair.

    def to_dict(self) -> dict:
        inter = np.empty(2 * self.dim * self.dim)
        flat = self.psi.reshape(-1)
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        return {
            "dim": self.dim,
            "half_size": self.half_size,
            "lambda": self.lam.tolist(),
            "psi": inter.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralData":
        d = int(data["dim"])
        inter = np.asarray(data["psi"], dtype=float)
        if inter.size != 2 * d * d:
            raise ValueError("psi payload has the wrong length")
        psi = (inter[0::2] + 1j * inter[1::2]).reshape(d, d)
        return cls((d - 1) // 2, np.asarray(data["lambda"], dtype=float), psi)

    def save(self, path) -> None:
        path = Path(path)
        if path.suffix == ".npz":
            np.savez(path, dim=self.dim, lam=self.lam, psi=self.psi)
        else:
            path.write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "SpectralData":
        path = Path(path)
        if path.suffix == ".npz":
            with np.load(path) as z:
                d = int(z["dim"])
                return cls((d - 1) // 2, z["lam"], z["psi"])
        return cls.from_dict(json.loads(path.read_text()))


def sample_gue(N: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a GUE matrix of size ``2N + 1``.

    ``sqrt(2N+1) h_jk`` is a complex standard normal above the diagonal and a
    real standard normal on it.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    d = 2 * N + 1
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    h = np.triu(z, 1)
    h = h + h.conj().T
    h[np.diag_indices(d)] = rng.standard_normal(d)
    return h / np.sqrt(d)


def sample_haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The columns of Q are rescaled by the phases of ``diag(R)`` so that the
    decomposition is unique, which makes the law of Q exactly Haar.
    """
    if d < 1:
        raise ValueError("d must be positive")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def spectral_decompose(h: np.ndarray) -> SpectralData:
    """Diagonalize a Hermitian matrix with a deterministic eigenvector phase.

    Each eigenvector is rotated so that its largest-magnitude component is
    real and positive.
    """
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    if h.shape != (d, d) or d % 2 == 0:
        raise ValueError("expected a square matrix of odd size 2N+1")
    try:
        lam, psi = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
    idx = np.argmax(np.abs(psi), axis=0)
    pivots = psi[idx, np.arange(d)]
    psi = psi * (np.abs(pivots) / pivots)
    return SpectralData((d - 1) // 2, lam, psi)


# --- semicircle law ------------------------------------------------------


def semicircle_density(x):
    """Density of the semicircle law on [-2, 2]."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi)


def _half_cdf(x):
    # integral of the semicircle density from 0 to x, for |x| <= 2
    s = np.sqrt(np.clip(4.0 - x * x, 0.0, None))
    return (0.5 * x * s + 2.0 * np.arcsin(np.clip(0.5 * x, -1.0, 1.0))) / (2.0 * np.pi)


def semicircle_cdf(x):
    """Cumulative distribution of the semicircle law (0 at -2, 1 at 2)."""
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + _half_cdf(x)


def nu(kappa):
    """Deterministic eigenvalue location ``nu: [-1, 1] -> [-2, 2]``.

    Solves ``integral_0^nu dsigma_sc = kappa / 2`` by Newton's method on the
    closed-form CDF, falling back to bisection whenever a Newton step leaves
    the current bracket.
    """
    kappa = np.asarray(kappa, dtype=float)
    if np.any(np.abs(kappa) > 1.0):
        raise ValueError("nu is defined on [-1, 1]")
    flat = np.atleast_1d(kappa).ravel()
    target = 0.5 * np.abs(flat)
    lo = np.zeros_like(target)
    hi = np.full_like(target, 2.0)
    x = np.clip(np.pi * target, 0.0, 2.0)  # nu(k) ~ pi k / 2 near the origin
    for _ in range(200):
        g = _half_cdf(x) - target
        done = np.abs(g) <= 0.25 * NU_TOL
        if np.all(done):
            break
        lo = np.where(g < 0, x, lo)
        hi = np.where(g > 0, x, hi)
        dg = np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - g / dg
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), step))
    x = np.where(target >= 0.5, 2.0, x)
    out = np.sign(flat) * x
    return float(out[0]) if kappa.ndim == 0 else out.reshape(kappa.shape)


def nu_prime(kappa):
    """Derivative ``pi (4 - nu^2)^(-1/2)``, finite on (-1, 1)."""
    v = nu(kappa)
    with np.errstate(divide="ignore"):
        return np.pi / np.sqrt(np.clip(4.0 - np.square(v), 0.0, None))


def nu_inverse(x):
    """Inverse of ``nu``: twice the semicircle mass between 0 and ``x``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 2.0):
        raise ValueError("nu_inverse is defined on [-2, 2]")
    out = 2.0 * _half_cdf(x)
    return float(out) if out.ndim == 0 else out


# --- diagnostics -----------------------------------------------------------


def rigidity_residuals(spec: SpectralData) -> np.ndarray:
    """Rescaled rigidity residuals ``(lam_k - nu(k/N)) N^(2/3) (N + 1 - |k|)^(1/3)``."""
    N = spec.half_size
    if N < 1:
        raise ValueError("rigidity residuals need N >= 1")
    k = spec.k
    return (spec.lam - nu(k / N)) * N ** (2.0 / 3.0) * (N + 1.0 - np.abs(k)) ** (1.0 / 3.0)


def local_law_count(spec: SpectralData, interval) -> tuple[int, float]:
    """Eigenvalue count in ``[a, b]`` and its semicircle prediction."""
    a, b = interval
    if a > b:
        raise ValueError("interval must satisfy a <= b")
    count = int(np.count_nonzero((spec.lam >= a) & (spec.lam <= b)))
    prediction = spec.dim * float(semicircle_cdf(b) - semicircle_cdf(a))
    return count, prediction


def resolvent_sum(spec: SpectralData, alpha: float, T: float) -> float:
    """``sum_k 1 / (1/T + |lam_k - alpha|)``."""
    if T < 1:
        raise ValueError("T must be at least 1")
    return float(np.sum(1.0 / (1.0 / T + np.abs(spec.lam - alpha))))


def histogram_l1_distance(eigenvalues, bins: int = 40) -> float:
    """L1 distance between an eigenvalue histogram on [-2, 2] and the semicircle law.

    Computed from bin masses, so the value lies in [0, 2].
    """
    ev = np.ravel(eigenvalues)
    edges = np.linspace(-2.0, 2.0, bins + 1)
    counts, _ = np.histogram(ev, bins=edges)
    empirical = counts / ev.size
    expected = np.diff(semicircle_cdf(edges))
    outside = np.count_nonzero((ev < -2.0) | (ev > 2.0)) / ev.size
    return float(np.sum(np.abs(empirical - expected)) + outside)
