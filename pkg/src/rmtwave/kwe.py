"""Homogeneous kinetic wave equation with semicircle dispersion.

The collision operator is evaluated with the resonance delta resolved
analytically.  Changing variables to ``y = nu(l)``, ``z = nu(m)`` turns

    C[rho](k) = 1/2 int int sqrt(4 - x^2)_+ F(k, l, m, n*) dl dm,
    x = nu(k) - nu(l) + nu(m),  n* = nu^{-1}(x),

into an integral over ``[-2, 2]^2`` whose weight
``sqrt(4 - x^2) sqrt(4 - y^2) sqrt(4 - z^2) / (2 pi^2)`` is absorbed into
Gauss-Jacobi (outer) and Gauss-Chebyshev-U (inner) rules.  Smooth densities
then converge spectrally in the quadrature order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_chebyu, roots_jacobi

from .rmt import nu, nu_inverse

__all__ = [
    "SpectralDensity",
    "CollisionConfig",
    "KineticTrajectory",
    "uniform_grid",
    "grid_weights",
    "collision_operator",
    "mass",
    "energy",
    "entropy",
    "functionals",
    "solve",
    "rayleigh_jeans",
    "kinetic_time",
    "leading_order_prediction",
    "write_density_csv",
]

INTERPOLATION_RULES = ("cubic", "cubic-nu", "linear")


def uniform_grid(G: int) -> np.ndarray:
    """``G`` uniform nodes on [-1, 1]."""
    if G < 3:
        raise ValueError("grid needs at least 3 nodes")
    return np.linspace(-1.0, 1.0, G)


def grid_weights(grid) -> np.ndarray:
    """Composite quadrature weights: Simpson for an odd node count, else trapezoid."""
    grid = np.asarray(grid, dtype=float)
    G = grid.size
    h = (grid[-1] - grid[0]) / (G - 1)
    if G % 2 == 1:
        w = np.ones(G)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * h / 3.0
    w = np.full(G, h)
    w[[0, -1]] = 0.5 * h
    return w


@dataclass(frozen=True)
class SpectralDensity:
    """Grid function on uniform nodes of [-1, 1].

    ``profile``, when given, is an exact evaluator used for off-grid points in
    place of interpolation (for example a closed-form stationary state).
    """

    grid: np.ndarray
    values: np.ndarray
    profile: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or values.shape != grid.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if not np.allclose(np.diff(grid), (grid[-1] - grid[0]) / (grid.size - 1), atol=1e-13):
            raise ValueError("grid must be uniform")
        if grid[0] != -1.0 or grid[-1] != 1.0:
            raise ValueError("grid must span [-1, 1]")
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, func: Callable, G: int, exact: bool = False) -> "SpectralDensity":
        grid = uniform_grid(G)
        return cls(grid, np.asarray(func(grid), dtype=float), func if exact else None)

    @property
    def size(self) -> int:
        return self.grid.size

    def with_values(self, values) -> "SpectralDensity":
        return SpectralDensity(self.grid, values)

    def interpolator(self, rule: str = "cubic") -> Callable:
        """Off-grid evaluator ``k -> rho(k)``, clamped to be non-negative."""
        if self.profile is not None:
            prof = self.profile
            return lambda k: np.clip(np.asarray(prof(k), dtype=float), 0.0, None)
        if rule == "cubic":
            spline = CubicSpline(self.grid, self.values)
            return lambda k: np.clip(spline(k), 0.0, None)
        if rule == "cubic-nu":
            spline = CubicSpline(nu(self.grid), self.values)
            return lambda k: np.clip(spline(nu(np.clip(k, -1.0, 1.0))), 0.0, None)
        if rule == "linear":
            g, v = self.grid, self.values
            return lambda k: np.interp(k, g, v)
        raise ValueError(f"unknown interpolation rule {rule!r}; choose from {INTERPOLATION_RULES}")


@dataclass(frozen=True)
class CollisionConfig:
    """Discretization settings for the collision operator.

    order : Gauss points per axis (per piece for the outer axis).
    interpolation : off-grid rule, one of ``cubic`` (in k), ``cubic-nu``
        (cubic in the dispersion variable) or ``linear``.
    support_cutoff : the integrand is dropped where ``4 - x^2 <= cutoff``.
    conservative : project the result so that the grid quadrature of
        ``C`` and ``nu C`` vanish exactly.
    """

    order: int = 32
    interpolation: str = "cubic"
    support_cutoff: float = 0.0
    conservative: bool = True

    def __post_init__(self):
        if self.order < 16:
            raise ValueError("quadrature order must be at least 16")
        if self.interpolation not in INTERPOLATION_RULES:
            raise ValueError(f"interpolation must be one of {INTERPOLATION_RULES}")
        if self.support_cutoff < 0:
            raise ValueError("support_cutoff must be non-negative")


def _rules(Q: int):
    u_in, w_in = roots_chebyu(Q)
    ua, wa = roots_jacobi(Q, 0.0, 0.5)
    return u_in, w_in, ua, wa


def _raw_collision(rho_k, v, evaluate, Q, cutoff):
    """Collision integral at dispersion values ``v`` with ``rho_k = rho(nu^{-1}(v))``."""
    u_in, w_in, ua, wa = _rules(Q)
    v = np.asarray(v, dtype=float)[:, None]
    rk = np.asarray(rho_k, dtype=float)[:, None, None]
    # outer variable y = nu(l), split at y = v where the inner range has a kink
    len0 = v + 2.0
    len1 = 2.0 - v
    y0 = -2.0 + len0 * (1.0 + ua) / 2.0
    y1 = 2.0 - len1 * (1.0 + ua) / 2.0
    y = np.concatenate([y0, y1], axis=1)
    wy = np.concatenate([wa * (len0 / 2.0) ** 1.5, wa * (len1 / 2.0) ** 1.5], axis=1)
    hy = np.concatenate([np.sqrt(np.clip(2.0 - y0, 0, None)), np.sqrt(np.clip(2.0 + y1, 0, None))], axis=1)
    # inner variable z = nu(m), x = z - c ranges over [-2, 2]
    c = (y - v)[:, :, None]
    lo = np.where(c >= 0, c - 2.0, -2.0)
    hi = np.where(c >= 0, 2.0, c + 2.0)
    half = 0.5 * (hi - lo)
    z = np.clip(0.5 * (hi + lo) + half * u_in, -2.0, 2.0)
    x = np.clip(z - c, -2.0, 2.0)
    g = np.where(
        c >= 0,
        np.sqrt(np.clip(2.0 - x, 0, None)) * np.sqrt(np.clip(2.0 + z, 0, None)),
        np.sqrt(np.clip(2.0 + x, 0, None)) * np.sqrt(np.clip(2.0 - z, 0, None)),
    )
    if cutoff > 0:
        g = np.where(4.0 - x * x > cutoff, g, 0.0)
    wz = w_in * half**2
    rl = evaluate(nu_inverse(y))[:, :, None]
    rm = evaluate(nu_inverse(z))
    rn = evaluate(nu_inverse(x))
    F = rl * rm * rn - rk * rm * rn + rk * rl * rn - rk * rl * rm
    inner = np.sum(wz * g * F, axis=2)
    return np.sum(wy * hy * inner, axis=1) / (2.0 * np.pi**2)


def _project(raw, values, nu_grid, w):
    # smallest rho-weighted correction rho*(a + b nu) restoring both moments
    A = np.array(
        [
            [np.sum(w * values), np.sum(w * values * nu_grid)],
            [np.sum(w * values * nu_grid), np.sum(w * values * nu_grid**2)],
        ]
    )
    rhs = -np.array([np.sum(w * raw), np.sum(w * nu_grid * raw)])
    if not np.any(rhs):
        return raw
    try:
        a, b = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return raw
    return raw + values * (a + b * nu_grid)


def collision_operator(rho: SpectralDensity, cc: CollisionConfig = CollisionConfig()) -> np.ndarray:
    """Collision operator ``C[rho]`` at the grid nodes.

    Uses the division-free form
    ``rho_l rho_m rho_n - rho_k rho_m rho_n + rho_k rho_l rho_n - rho_k rho_l rho_m``
    so densities with isolated zeros are admissible.

    Raises
    ------
    ValueError
        If any grid value is negative.
    """
    if np.any(rho.values < 0):
        raise ValueError("collision operator requires a non-negative density")
    evaluate = rho.interpolator(cc.interpolation)
    nu_grid = nu(rho.grid)
    raw = _raw_collision(rho.values, nu_grid, evaluate, cc.order, cc.support_cutoff)
    if cc.conservative:
        raw = _project(raw, rho.values, nu_grid, grid_weights(rho.grid))
    return raw


# --- functionals -----------------------------------------------------------


def mass(rho: SpectralDensity) -> float:
    """``int rho dk``."""
    return float(np.sum(grid_weights(rho.grid) * rho.values))


def energy(rho: SpectralDensity) -> float:
    """``int nu(k) rho(k) dk``."""
    return float(np.sum(grid_weights(rho.grid) * nu(rho.grid) * rho.values))


def entropy(rho: SpectralDensity) -> float:
    """``int log rho dk``; requires a strictly positive density."""
    if np.any(rho.values <= 0):
        raise ValueError("entropy requires a strictly positive density")
    return float(np.sum(grid_weights(rho.grid) * np.log(rho.values)))


def functionals(rho: SpectralDensity) -> tuple[float, float, float]:
    """Mass, energy and entropy of a strictly positive density."""
    return mass(rho), energy(rho), entropy(rho)


# --- time stepping -----------------------------------------------------------


@dataclass
class KineticTrajectory:
    """Sampled solution of the kinetic equation with a functional log."""

    times: list
    densities: list
    mass: list
    energy: list
    entropy: list
    rejected_steps: int = 0

    @property
    def final(self) -> SpectralDensity:
        return self.densities[-1]


def solve(
    rho0: SpectralDensity,
    t_end: float,
    dt: float,
    cc: CollisionConfig = CollisionConfig(),
    sample_every: int = 1,
    negativity_tol: float = 1e-12,
    dt_min: float = 1e-8,
) -> KineticTrajectory:
    """Integrate ``d rho / dt = C[rho]`` with classical RK4.

    A step producing a value below ``-negativity_tol`` is rejected and retried
    with half the step; failing at ``dt_min`` raises ``RuntimeError``.
    """
    if np.any(rho0.values < 0):
        raise ValueError("initial density must be non-negative")
    if t_end < 0 or dt <= 0:
        raise ValueError("need t_end >= 0 and dt > 0")

    grid = rho0.grid

    def rhs(values):
        # stage values may dip below zero by roundoff; clamp before the operator
        return collision_operator(SpectralDensity(grid, np.clip(values, 0.0, None)), cc)

    def log(traj, t, values):
        dens = SpectralDensity(grid, values)
        traj.times.append(t)
        traj.densities.append(dens)
        traj.mass.append(mass(dens))
        traj.energy.append(energy(dens))
        traj.entropy.append(entropy(dens) if np.all(values > 0) else float("nan"))

    traj = KineticTrajectory([], [], [], [], [])
    values = rho0.values.copy()
    log(traj, 0.0, values)
    t = 0.0
    step = 0
    h = dt
    while t < t_end - 1e-14 * max(1.0, t_end):
        h_try = min(h, t_end - t)
        while True:
            k1 = rhs(values)
            k2 = rhs(values + 0.5 * h_try * k1)
            k3 = rhs(values + 0.5 * h_try * k2)
            k4 = rhs(values + h_try * k3)
            new = values + (h_try / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(new)):
                raise RuntimeError(f"non-finite density at t={t + h_try:.6g}")
            if np.min(new) >= -negativity_tol:
                break
            traj.rejected_steps += 1
            h_try *= 0.5
            if h_try < dt_min:
                raise RuntimeError(f"persistent negativity at t={t:.6g} with dt below {dt_min}")
        values = np.clip(new, 0.0, None)
        t += h_try
        step += 1
        if step % sample_every == 0 or t >= t_end - 1e-14 * max(1.0, t_end):
            log(traj, t, values)
    return traj


# --- stationary states and predictions --------------------------------------


def rayleigh_jeans(alpha: float, beta: float, G: int) -> SpectralDensity:
    """Rayleigh-Jeans density ``alpha / (beta + nu(k))`` on ``G`` uniform nodes.

    The closed form is attached as the density's exact profile.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if beta <= 2:
        raise ValueError("beta must exceed 2 so the density stays positive")

    def profile(k):
        return alpha / (beta + nu(np.clip(k, -1.0, 1.0)))

    return SpectralDensity.from_function(profile, G, exact=True)


def kinetic_time(N: int, mu: float) -> float:
    """``T_kin = N^2 / mu^4`` (infinite for ``mu = 0``)."""
    if mu == 0:
        return float("inf")
    return N**2 / mu**4


def leading_order_prediction(
    profile: Callable,
    t: float,
    N: int,
    mu: float,
    G: int = 129,
    cc: CollisionConfig = CollisionConfig(),
) -> SpectralDensity:
    """``|A|^2 + (t / T_kin) C[|A|^2]`` on a uniform grid of ``G`` nodes."""
    if t < 0:
        raise ValueError("t must be non-negative")

    def intensity(k):
        return np.abs(np.asarray(profile(k))) ** 2

    rho = SpectralDensity.from_function(intensity, G, exact=True)
    if t == 0:
        return SpectralDensity(rho.grid, rho.values)
    coll = collision_operator(rho, cc)
    return SpectralDensity(rho.grid, rho.values + (t / kinetic_time(N, mu)) * coll)


def write_density_csv(path, times, densities) -> None:
    """Write ``t,k,rho`` rows with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "k", "rho"])
        for t, dens in zip(times, densities):
            for k, r in zip(dens.grid, dens.values):
                w.writerow([f"{t:.17g}", f"{k:.17g}", f"{r:.17g}"])
