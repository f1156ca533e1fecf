"""Integration of the diagonalized cubic system and ensemble averages of ``|a_k(t)|^2``.

In the eigenbasis of ``H = Psi diag(lam) Psi*`` the amplitudes ``a = sqrt(N) Psi* u``
obey the Wick-ordered equation

    i a' - lam a = (mu^2 / N) [Psi* (|Psi a|^2 Psi a) - 2 |a|^2 / (2N + 1) a].

The linear part is removed exactly by integrating the profile
``f = exp(i t lam) a`` with classical RK4.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .rmt import SpectralData, sample_gue, spectral_decompose

__all__ = [
    "PROFILES",
    "make_profile",
    "ModelConfig",
    "Trajectory",
    "EnsembleMoment",
    "EnsembleError",
    "initial_data",
    "wick_nonlinearity",
    "cubic_nonlinearity",
    "evolve",
    "observables",
    "sample_seed",
    "run_ensemble",
    "ensemble_expectation",
    "write_moments_csv",
    "moments_to_json",
]


# --- data profiles -----------------------------------------------------------


def _constant(amplitude=1.0):
    return lambda x: np.full(np.shape(x), complex(amplitude))


def _bump(amplitude=1.0):
    return lambda x: amplitude * (1.0 - np.square(x)) + 0j


def _gaussian(amplitude=1.0, width=0.5):
    return lambda x: amplitude * np.exp(-0.5 * np.square(np.asarray(x) / width)) + 0j


def _phase_bump(amplitude=1.0, frequency=3.0):
    return lambda x: amplitude * (1.0 - np.square(x)) * np.exp(1j * frequency * np.asarray(x))


def _tilted(amplitude=1.0, slope=0.5):
    return lambda x: amplitude * (1.0 + slope * np.asarray(x)) + 0j


PROFILES = {
    "constant": _constant,
    "bump": _bump,
    "gaussian": _gaussian,
    "phase-bump": _phase_bump,
    "tilted": _tilted,
}


def make_profile(name: str, **params) -> Callable:
    """Named C^1 data profile ``A: [-1, 1] -> C``."""
    try:
        factory = PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None
    return factory(**params)


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class ModelConfig:
    """Model parameters.

    ``mu = mu_scale * N**beta``; the default ``mu_scale = 1`` is the physical
    coupling, other values are used for perturbative and linear checks.  When
    ``dt`` is omitted it defaults to ``min(0.01, 0.1 N / mu^2)`` clamped to
    ``[1e-4, 0.05]``.
    """

    N: int
    beta: float = 0.4
    profile: str = "bump"
    profile_params: dict = field(default_factory=dict)
    t_end: float = 1.0
    dt: Optional[float] = None
    mu_scale: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if not 0.25 < self.beta < 0.5:
            raise ValueError(f"beta={self.beta} outside the valid range (1/4, 1/2)")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.mu_scale < 0:
            raise ValueError("mu_scale must be non-negative")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.dt is not None and not 0 < self.dt <= 0.1:
            raise ValueError("dt must lie in (0, 0.1]")
        object.__setattr__(self, "profile_params", dict(self.profile_params))

    @property
    def d(self) -> int:
        return 2 * self.N + 1

    @property
    def mu(self) -> float:
        return self.mu_scale * self.N**self.beta

    @property
    def t_kin(self) -> float:
        """Kinetic time ``N^2 / mu^4`` (infinite for the linear problem)."""
        if self.mu == 0:
            return float("inf")
        return self.N**2 / self.mu**4

    @property
    def step(self) -> float:
        if self.dt is not None:
            return self.dt
        if self.mu == 0:
            return 0.01
        return float(np.clip(min(0.01, 0.1 * self.N / self.mu**2), 1e-4, 0.05))

    def amplitude(self) -> Callable:
        return make_profile(self.profile, **self.profile_params)

    def replace(self, **changes) -> "ModelConfig":
        data = asdict(self)
        data.update(changes)
        return ModelConfig(**data)


# --- vector field ------------------------------------------------------------


def initial_data(cfg: ModelConfig) -> np.ndarray:
    """``a_k(0) = A(k / N)`` for ``k = -N..N``."""
    k = np.arange(-cfg.N, cfg.N + 1)
    return np.asarray(cfg.amplitude()(k / cfg.N), dtype=complex)


def _check_dims(a, spec):
    if a.shape != (spec.dim,):
        raise ValueError(f"state of shape {a.shape} does not match dimension {spec.dim}")


def cubic_nonlinearity(a: np.ndarray, spec: SpectralData, mu: float) -> np.ndarray:
    """``(mu^2 / N) Psi* (|Psi a|^2 Psi a)`` (no Wick correction)."""
    a = np.asarray(a, dtype=complex)
    _check_dims(a, spec)
    if spec.half_size == 0:
        raise ValueError("the nonlinearity needs N >= 1")
    v = spec.psi @ a
    return (mu**2 / spec.half_size) * (spec.psi.conj().T @ (np.abs(v) ** 2 * v))


def wick_nonlinearity(a: np.ndarray, spec: SpectralData, mu: float) -> np.ndarray:
    """Wick-ordered nonlinearity.

    ``(mu^2/N) [Psi* (|Psi a|^2 Psi a) - (2 N M / (2N+1)) a]`` with
    ``M = |u|^2 = |a|^2 / N``, so the correction equals ``2 |a|^2 / (2N+1) a``.
    """
    a = np.asarray(a, dtype=complex)
    out = cubic_nonlinearity(a, spec, mu)
    mass = np.vdot(a, a).real
    return out - (mu**2 / spec.half_size) * (2.0 * mass / spec.dim) * a


# --- integration -------------------------------------------------------------


@dataclass
class Trajectory:
    """States sampled along one solution, with conservation logs.

    ``step_times``/``step_mass`` record ``|a|^2`` after every RK4 step.
    """

    times: np.ndarray
    states: np.ndarray
    step_times: np.ndarray
    step_mass: np.ndarray
    hamiltonian: np.ndarray

    def state_at(self, i: int) -> np.ndarray:
        return self.states[i]


def _profile_rhs(spec, mu, wick):
    lam = spec.lam
    nonlin = wick_nonlinearity if wick else cubic_nonlinearity

    def rhs(t, f):
        phase = np.exp(-1j * t * lam)
        a = phase * f
        return -1j * np.conj(phase) * nonlin(a, spec, mu)

    return rhs


def evolve(
    cfg: ModelConfig,
    spec: SpectralData,
    a0: Optional[np.ndarray] = None,
    sample_times: Optional[Sequence[float]] = None,
    wick: bool = True,
) -> Trajectory:
    """RK4 on the interaction-picture profile, starting from ``a0`` at ``t = 0``.

    ``sample_times`` must be strictly monotone and on one side of zero;
    negative times integrate backwards.  Defaults to ``[0, cfg.t_end]``.

    Raises
    ------
    FloatingPointError
        If the state becomes non-finite; the message carries the time.
    """
    if spec.half_size != cfg.N:
        raise ValueError("spectral data and config disagree on N")
    a0 = initial_data(cfg) if a0 is None else np.asarray(a0, dtype=complex)
    _check_dims(a0, spec)
    times = np.asarray([0.0, cfg.t_end] if sample_times is None else sample_times, dtype=float)
    if times.size == 0:
        raise ValueError("need at least one sample time")
    diffs = np.diff(times)
    forward = times[0] >= 0 and np.all(diffs > 0)
    backward = times[0] <= 0 and np.all(diffs < 0)
    if not (forward or backward):
        raise ValueError("sample times must be strictly monotone and move away from t = 0")

    mu = cfg.mu
    h_max = cfg.step
    rhs = _profile_rhs(spec, mu, wick)
    f = a0.copy()
    t = 0.0
    states = np.empty((times.size, spec.dim), dtype=complex)
    ham = np.empty(times.size)
    step_times = [0.0]
    step_mass = [float(np.vdot(f, f).real)]
    for i, target in enumerate(times):
        span = target - t
        n = int(np.ceil(abs(span) / h_max - 1e-9)) if span != 0 else 0
        h = span / n if n else 0.0
        for _ in range(n):
            k1 = rhs(t, f)
            k2 = rhs(t + 0.5 * h, f + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, f + 0.5 * h * k2)
            k4 = rhs(t + h, f + h * k3)
            f = f + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
            if not np.all(np.isfinite(f)):
                raise FloatingPointError(f"non-finite state at t={t:.6g}")
            step_times.append(t)
            step_mass.append(float(np.vdot(f, f).real))
        t = target
        a = np.exp(-1j * t * spec.lam) * f
        states[i] = a
        ham[i] = observables(a, spec, mu)[2]
    return Trajectory(times, states, np.asarray(step_times), np.asarray(step_mass), ham)


def observables(a: np.ndarray, spec: SpectralData, mu: float) -> tuple[float, float, float]:
    """``(|a|^2, |u|^2, hamiltonian)`` with ``u = Psi a / sqrt(N)``.

    The Hamiltonian is ``<u, H u> + (mu^2 / 2) sum |u_j|^4``.
    """
    a = np.asarray(a, dtype=complex)
    _check_dims(a, spec)
    N = spec.half_size
    mass_a = float(np.vdot(a, a).real)
    if N == 0:
        return mass_a, mass_a, float(spec.lam[0] * mass_a + 0.5 * mu**2 * mass_a**2)
    u = spec.psi @ a / np.sqrt(N)
    mass_u = mass_a / N
    ham = float(np.sum(spec.lam * np.abs(a) ** 2) / N + 0.5 * mu**2 * np.sum(np.abs(u) ** 4))
    return mass_a, mass_u, ham


# --- ensembles -----------------------------------------------------------------


class EnsembleError(RuntimeError):
    """A sample failed; the ensemble is aborted rather than biased."""


def sample_seed(master_seed: int, index: int) -> int:
    """64-bit seed from SHA-256 of ``(master_seed, index)``."""
    digest = hashlib.sha256(f"{int(master_seed)}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def run_ensemble(task: Callable, n_samples: int, master_seed: int, workers: int = 1) -> list:
    """Evaluate ``task(index, rng)`` for every sample, returning results in index order."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")

    def one(i):
        try:
            return task(i, np.random.default_rng(sample_seed(master_seed, i)))
        except Exception as exc:  # any failure aborts the whole ensemble
            raise EnsembleError(f"sample {i} failed: {exc}") from exc

    if workers <= 1:
        return [one(i) for i in range(n_samples)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(n_samples)))


@dataclass
class EnsembleMoment:
    """Per-k sample mean and standard error of ``|a_k(t)|^2``."""

    t: float
    mean: np.ndarray
    stderr: np.ndarray
    n_samples: int

    @property
    def N(self) -> int:
        return (self.mean.size - 1) // 2


def sample_spectrum(N: int, rng: np.random.Generator) -> SpectralData:
    """Fresh GUE draw, diagonalized."""
    return spectral_decompose(sample_gue(N, rng))


def ensemble_expectation(
    cfg: ModelConfig,
    n_samples: int,
    master_seed: int,
    sample_times: Sequence[float],
    workers: int = 1,
) -> list:
    """Monte Carlo estimate of ``E|a_k(t)|^2`` over independent GUE draws."""
    if n_samples < 2:
        raise ValueError("need at least two samples for a standard error")
    times = np.asarray(sample_times, dtype=float)
    a0 = initial_data(cfg)

    def task(i, rng):
        spec = sample_spectrum(cfg.N, rng)
        traj = evolve(cfg, spec, a0, times)
        return np.abs(traj.states) ** 2

    data = np.stack(run_ensemble(task, n_samples, master_seed, workers))
    return summarize(data, times)


def summarize(data: np.ndarray, times) -> list:
    """Mean and standard error over axis 0 of a ``(samples, times, d)`` array."""
    n = data.shape[0]
    mean = data.mean(axis=0)
    se = data.std(axis=0, ddof=1) / np.sqrt(n)
    return [EnsembleMoment(float(t), mean[i], se[i], n) for i, t in enumerate(times)]


def write_moments_csv(path, moments) -> None:
    """Columns ``t, k, mean, stderr`` with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "k", "mean", "stderr"])
        for m in moments:
            for k, mu, se in zip(range(-m.N, m.N + 1), m.mean, m.stderr):
                w.writerow([f"{m.t:.17g}", k, f"{mu:.17g}", f"{se:.17g}"])


def moments_to_json(moments) -> str:
    return json.dumps(
        [
            {"t": m.t, "n_samples": m.n_samples, "mean": m.mean.tolist(), "stderr": m.stderr.tolist()}
            for m in moments
        ]
    )
