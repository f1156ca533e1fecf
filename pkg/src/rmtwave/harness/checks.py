"""Validation runs for the kinetic solver, the Weingarten calculus and GUE spectra."""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np

from .. import kwe
from ..dynamics import run_ensemble, sample_spectrum
from ..rmt import histogram_l1_distance, local_law_count, rigidity_residuals
from ..weingarten import (
    haar_moment,
    modulus_squared,
    mobius,
    one_step_identity_check,
    partitions,
    wg_exact,
    wg_table,
)
from ..weingarten.graphs import build_graph
from .experiments import ExperimentReport, provenance

__all__ = ["kwe_experiment", "weingarten_validate", "rigidity_experiment"]


def _initial_density(config) -> kwe.SpectralDensity:
    k = config.kwe
    if k.initial == "rayleigh-jeans":
        return kwe.rayleigh_jeans(k.alpha, k.rj_beta, k.grid)
    amp = config.model.amplitude()
    return kwe.SpectralDensity.from_function(lambda x: np.abs(np.asarray(amp(x))) ** 2 + k.floor, k.grid)


def kwe_experiment(config) -> tuple:
    """Solve the kinetic equation and check its conservation laws and H-theorem.

    Returns ``(report, trajectory)``.
    """
    start = time.perf_counter()
    k = config.kwe
    rho0 = _initial_density(config)
    traj = kwe.solve(rho0, k.t_end, k.dt, k.collision)
    report = ExperimentReport(
        "kwe",
        {
            "grid": k.grid,
            "order": k.collision.order,
            "interpolation": k.collision.interpolation,
            "conservative": k.collision.conservative,
            "initial": k.initial,
            "floor": k.floor,
            "t_end": k.t_end,
            "dt": k.dt,
        },
    )
    m = np.asarray(traj.mass)
    e = np.asarray(traj.energy)
    s = np.asarray(traj.entropy)
    mass_drift = float(np.max(np.abs(m - m[0])) / abs(m[0]))
    energy_drift = float(np.max(np.abs(e - e[0])) / max(abs(e[0]), np.max(np.abs(m))))
    report.add("mass_drift", mass_drift, "<= 1e-6", mass_drift <= 1e-6, "int C = 0")
    report.add("energy_drift", energy_drift, "<= 1e-5", energy_drift <= 1e-5, "int nu C = 0")
    if np.all(np.isfinite(s)):
        worst = float(np.min(np.diff(s))) if s.size > 1 else 0.0
        report.add("entropy_min_increment", worst, ">= -1e-8", worst >= -1e-8, "H-theorem")
    else:
        report.add("entropy_min_increment", float("nan"), reference="density touched zero; entropy undefined")
    const = kwe.SpectralDensity.from_function(lambda x: np.ones_like(x), k.grid)
    c_norm = float(np.max(np.abs(kwe.collision_operator(const, k.collision))))
    report.add("constant_collision_norm", c_norm, "<= 1e-12", c_norm <= 1e-12, "C[const] = 0")
    rj = kwe.rayleigh_jeans(k.alpha, k.rj_beta, k.grid)
    rj_norm = float(np.max(np.abs(kwe.collision_operator(rj, k.collision))))
    report.add("rayleigh_jeans_collision_norm", rj_norm, "<= 1e-10", rj_norm <= 1e-10, "C[alpha/(beta+nu)] = 0")
    report.add("rejected_steps", float(traj.rejected_steps), reference="positivity step halvings")
    report.wall_clock = time.perf_counter() - start
    report.provenance = provenance(config.source)
    return report, traj


def weingarten_validate(config, q_max: int = 4, dims=(8, 16, 32, 64)) -> tuple:
    """Exact Weingarten tables with identity, asymptotic and moment checks.

    Returns ``(report, records)`` where ``records`` are
    ``{cycle_type, q, d, numerator, denominator}`` dictionaries; moment
    records carry a ``moment`` name instead of a cycle type.
    """
    start = time.perf_counter()
    report = ExperimentReport("weingarten-validate", {"q_max": q_max, "dims": list(dims)})
    records = []
    for q in range(1, q_max + 1):
        for d in dims:
            records.extend(wg_table(q, d))
    worst = Fraction(0)
    for q in range(1, q_max):
        for ct in partitions(q):
            for d in dims:
                worst = max(worst, abs(one_step_identity_check(ct, d=d)))
    report.add("one_step_identity_residual", float(worst), "== 0", worst == 0, "Weingarten recursion")
    ratios = []
    for q in range(1, 4):
        for ct in partitions(q):
            devs = [abs(float(wg_exact(ct, d=d) * Fraction(d) ** (2 * q - len(ct)) / mobius(ct)) - 1.0) for d in dims]
            for a, b in zip(devs, devs[1:]):
                if a > 0:
                    ratios.append(a / b)
    low = min(ratios) if ratios else float("inf")
    report.add("asymptotic_reduction_min", low, ">= 3 per doubling", low >= 3.0, "Wg ~ d^(C-2q) Moeb")
    for d in (4, 8, 16):
        m2 = haar_moment(modulus_squared(1, 1), d)
        m4 = haar_moment(build_graph((1, 1), (1, 1), (1, 1), (1, 1)), d)
        ok = m2 == Fraction(1, d) and m4 == Fraction(2, d * (d + 1))
        report.add(f"entry_moments_d{d}", float(m4), "exact 1/d and 2/(d(d+1))", ok, "Haar moments")
        for name, val in (("|psi_11|^2", m2), ("|psi_11|^4", m4)):
            records.append({"moment": name, "q": 1 if name.endswith("^2") else 2, "d": d, "numerator": val.numerator, "denominator": val.denominator})
    report.wall_clock = time.perf_counter() - start
    report.provenance = provenance(config.source)
    return report, records


def rigidity_experiment(config) -> tuple:
    """Semicircle histogram distance and rigidity residual quantiles over the N sweep.

    Returns ``(report, rows)`` with rows ``(N, l1, p50, p90, p99, count, predicted)``
    where the counts refer to the bulk window ``[-1, 1]``.
    """
    start = time.perf_counter()
    ens = config.ensemble
    report = ExperimentReport("rigidity", {"sweep": list(config.sweep), "ensemble": ens.size, "seed": ens.seed})
    rows = []
    for N in config.sweep:

        def task(i, rng, N=N):
            spec = sample_spectrum(N, rng)
            return spec.lam, np.abs(rigidity_residuals(spec)), local_law_count(spec, (-1.0, 1.0))

        out = run_ensemble(task, ens.size, ens.seed, ens.threads)
        lam = np.concatenate([o[0] for o in out])
        res = np.concatenate([o[1] for o in out])
        counts = np.array([o[2][0] for o in out], dtype=float)
        l1 = histogram_l1_distance(lam, bins=40)
        p50, p90, p99 = np.percentile(res, [50, 90, 99])
        rows.append((N, l1, p50, p90, p99, float(counts.mean()), out[0][2][1]))
        report.add(f"histogram_l1_N{N}", float(l1), "<= 0.05", bool(l1 <= 0.05), "semicircle law", samples=ens.size)
        report.add(f"rigidity_p99_N{N}", float(p99), reference="99th percentile of rescaled |lam_k - nu(k/N)|", samples=ens.size)
    if len(rows) >= 2:
        p99s = [r[4] for r in rows]
        # flat-to-decreasing: no step grows by more than 25%
        ok = all(b <= 1.25 * a for a, b in zip(p99s, p99s[1:]))
        report.add("rigidity_p99_trend", float(p99s[-1] / p99s[0]), "no increase beyond 25% per step", ok, "eigenvalue rigidity")
    report.wall_clock = time.perf_counter() - start
    report.provenance = provenance(config.source)
    return report, rows
