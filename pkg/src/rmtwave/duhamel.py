"""Duhamel iterates, their Feynman diagrams, and the resolvent representation of time simplices.

The iterates solve ``a = sum_m a^[m]`` order by order in ``mu^2``:
``a^[0](t) = exp(-i t lam) a(0)`` and

    a^[m+1](t) = -i sum_{m1+m2+m3=m} int_0^t exp(-i (t-s) lam) N[a^[m1], a^[m2], a^[m3]](s) ds,

with ``N`` the symmetrized, Wick-ordered trilinear form.  Here they are built in
the time domain on composite Gauss-Legendre panels.
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass
from math import factorial
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import legendre
from scipy import integrate

from .dynamics import ModelConfig, initial_data
from .rmt import SpectralData

__all__ = [
    "InteractionHistory",
    "FeynmanDiagram",
    "IterateSet",
    "enumerate_histories",
    "build_diagram",
    "trilinear",
    "iterate",
    "time_integral",
    "double_time_integral",
    "gamma_tensor",
    "closed_form_low_order",
    "simplex_integral",
    "resolvent_integral",
    "resolvent_identity_check",
    "write_iterates_csv",
]

MAX_HISTORY_ORDER = 4
MAX_ITERATE_ORDER = 3
MAX_CLOSED_FORM_N = 8
SERIES_THRESHOLD = 1e-4


# --- interaction histories and diagrams ------------------------------------


@dataclass(frozen=True)
class InteractionHistory:
    """Positions ``ell_1..ell_m`` of the nonlinear vertex at each level."""

    m: int
    ell: tuple

    def __post_init__(self):
        ell = tuple(int(x) for x in self.ell)
        if self.m < 1 or len(ell) != self.m:
            raise ValueError("history needs m >= 1 entries")
        for r, x in enumerate(ell, start=1):
            if not 1 <= x <= 2 * (self.m - r) + 1:
                raise ValueError(f"ell_{r}={x} outside [1, {2 * (self.m - r) + 1}]")
        object.__setattr__(self, "ell", ell)


def enumerate_histories(m: int, cap: int = MAX_HISTORY_ORDER) -> list:
    """All interaction histories of order ``m``; there are ``prod_r (2(m-r)+1)``."""
    if m < 1:
        raise ValueError("order must be at least 1")
    if m > cap:
        raise ValueError(f"order {m} exceeds the enumeration cap {cap}")
    ranges = [range(1, 2 * (m - r) + 2) for r in range(1, m + 1)]
    return [InteractionHistory(m, ell) for ell in itertools.product(*ranges)]


@dataclass(frozen=True)
class FeynmanDiagram:
    """Vertices ``(r, j)`` with roles and edges ``(r, j) -> target vertex``."""

    history: InteractionHistory
    vertices: dict
    edges: dict

    @property
    def m(self) -> int:
        return self.history.m

    def vertices_with_role(self, role: str) -> list:
        return sorted(v for v, kind in self.vertices.items() if kind == role)

    def to_dot(self) -> str:
        """Graphviz description with one node per vertex and one arrow per edge."""
        shapes = {"output": "doublecircle", "input": "circle", "linear": "point", "nonlinear": "box"}
        lines = [f'digraph "history_{"_".join(map(str, self.history.ell))}" {{', "  rankdir=BT;"]
        for (r, j), role in sorted(self.vertices.items()):
            lines.append(f'  "v{r}_{j}" [label="v{r},{j}" shape={shapes[role]}];')
        for (r, j), (r2, j2) in sorted(self.edges.items()):
            lines.append(f'  "v{r}_{j}" -> "v{r2}_{j2}" [label="e{r},{j}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_diagram(h: InteractionHistory) -> FeynmanDiagram:
    """Diagram with ``(m+1)^2 + 1`` vertices and ``(m+1)^2`` edges."""
    m, ell = h.m, h.ell
    vertices = {}
    for r in range(m + 1):
        for j in range(1, 2 * (m - r) + 2):
            if r == 0:
                role = "input"
            elif j == ell[r - 1]:
                role = "nonlinear"
            else:
                role = "linear"
            vertices[(r, j)] = role
    vertices[(m + 1, 1)] = "output"
    edges = {}
    for r in range(m):
        nxt = ell[r]
        for j in range(1, 2 * (m - r) + 2):
            if j < nxt:
                edges[(r, j)] = (r + 1, j)
            elif j <= nxt + 2:
                edges[(r, j)] = (r + 1, nxt)
            else:
                edges[(r, j)] = (r + 1, j - 2)
    edges[(m, 1)] = (m + 1, 1)
    return FeynmanDiagram(h, vertices, edges)


# --- trilinear form -------------------------------------------------------------


def _pair_term(spec, a, b, c):
    # batched over leading axes; vectors live on the last axis
    d = spec.dim
    psi = spec.psi
    core = ((a @ psi.T) * np.conj(b @ psi.T) * (c @ psi.T)) @ np.conj(psi)
    bc = np.sum(np.conj(b) * c, axis=-1, keepdims=True)
    ba = np.sum(np.conj(b) * a, axis=-1, keepdims=True)
    return core - (bc * a + ba * c) / d


def trilinear(spec: SpectralData, mu: float, a, b, c) -> np.ndarray:
    """Symmetrized Wick-ordered form ``N[a, b, c]`` (conjugate-linear in ``b``).

    ``N[a, a, a]`` equals the Wick-ordered nonlinearity.
    """
    scale = mu**2 / (3.0 * spec.half_size)
    return scale * (_pair_term(spec, a, b, c) + _pair_term(spec, b, c, a) + _pair_term(spec, c, a, b))


# --- time-domain iterates ---------------------------------------------------------


@dataclass
class IterateSet:
    """Values ``a^[m](t)`` for ``m = 0..M`` on a time grid: ``values[m, i, :]``."""

    order: int
    t_grid: np.ndarray
    values: np.ndarray
    panels: int

    def a(self, m: int) -> np.ndarray:
        return self.values[m]

    def partial_sum(self, upto: int) -> np.ndarray:
        return self.values[: upto + 1].sum(axis=0)


def _integration_matrix(p):
    x, w = legendre.leggauss(p)
    V = legendre.legvander(x, p - 1)
    Vint = np.empty_like(V)
    for n in range(p):
        c = np.zeros(p)
        c[n] = 1.0
        Vint[:, n] = legendre.legval(x, legendre.legint(c, lbnd=-1.0))
    return x, w, Vint @ np.linalg.inv(V)


def _iterate_on_edges(spec, mu, M, a0, edges, p):
    x, w, S = _integration_matrix(p)
    lam = spec.lam
    n_panels = len(edges) - 1
    d = spec.dim
    # profile values f^[m] at panel nodes and edges
    node_t = np.empty((n_panels, p))
    for i in range(n_panels):
        a, b = edges[i], edges[i + 1]
        node_t[i] = 0.5 * (a + b) + 0.5 * (b - a) * x
    f_nodes = np.zeros((M + 1, n_panels, p, d), dtype=complex)
    f_edges = np.zeros((M + 1, n_panels + 1, d), dtype=complex)
    f_nodes[0] = a0
    f_edges[0] = a0
    phase_nodes = np.exp(-1j * node_t[..., None] * lam)  # exp(-i t lam)
    a_nodes = np.zeros_like(f_nodes)
    a_nodes[0] = phase_nodes * a0
    for m in range(M):
        g = np.zeros((n_panels, p, d), dtype=complex)
        for m1, m2 in itertools.product(range(m + 1), repeat=2):
            m3 = m - m1 - m2
            if m3 < 0:
                continue
            g += trilinear(spec, mu, a_nodes[m1], a_nodes[m2], a_nodes[m3])
        g = -1j * np.conj(phase_nodes) * g
        acc = np.zeros(d, dtype=complex)
        for i in range(n_panels):
            h = 0.5 * (edges[i + 1] - edges[i])
            f_nodes[m + 1, i] = acc + h * (S @ g[i])
            acc = acc + h * (w @ g[i])
            f_edges[m + 1, i + 1] = acc
        a_nodes[m + 1] = phase_nodes * f_nodes[m + 1]
    return f_edges


def iterate(
    spec: SpectralData,
    cfg: ModelConfig,
    M: int,
    t_grid: Sequence[float],
    a0: Optional[np.ndarray] = None,
    panel_width: float = 1.0,
    nodes_per_panel: int = 12,
    rtol: float = 1e-8,
    max_refinements: int = 6,
) -> IterateSet:
    """Duhamel iterates ``a^[0..M]`` at the times ``t_grid`` (all ``>= 0``).

    Panels are halved until two successive refinements agree to ``rtol``
    relative to each iterate's size.

    Raises
    ------
    RuntimeError
        If the refinement does not converge within ``max_refinements``.
    """
    if not 0 <= M <= MAX_ITERATE_ORDER:
        raise ValueError(f"order M must lie in [0, {MAX_ITERATE_ORDER}]")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise ValueError("t_grid must be non-negative")
    a0 = initial_data(cfg) if a0 is None else np.asarray(a0, dtype=complex)
    mu = cfg.mu
    t_max = float(t_grid.max(initial=0.0))
    if t_max == 0.0:
        values = np.zeros((M + 1, t_grid.size, spec.dim), dtype=complex)
        values[0] = a0
        return IterateSet(M, t_grid, values, 0)

    def run(width):
        n = max(1, int(np.ceil(t_max / width)))
        edges = np.union1d(np.linspace(0.0, t_max, n + 1), t_grid)
        f_edges = _iterate_on_edges(spec, mu, M, a0, edges, nodes_per_panel)
        idx = np.searchsorted(edges, t_grid)
        phases = np.exp(-1j * t_grid[:, None] * spec.lam)
        return f_edges[:, idx, :] * phases, len(edges) - 1

    prev, _ = run(panel_width)
    width = panel_width
    for _ in range(max_refinements):
        width *= 0.5
        cur, panels = run(width)
        scale = np.max(np.abs(cur), axis=(1, 2))
        diff = np.max(np.abs(cur - prev), axis=(1, 2))
        if np.all(diff <= rtol * scale + 1e-300):
            return IterateSet(M, t_grid, cur, panels)
        prev = cur
    raise RuntimeError("Duhamel quadrature did not converge; increase max_refinements")


# --- closed forms -----------------------------------------------------------------


def _g_moments(z, nmax):
    """``g_n(z) = int_0^1 u^n exp(z u) du`` for ``n = 0..nmax``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty((nmax + 1,) + z.shape, dtype=complex)
    small = np.abs(z) < 1.0
    zs = z[small]
    zl = z[~small]
    ez = np.exp(zl)
    prev = None
    for n in range(nmax + 1):
        # power series: sum_k z^k / (k! (n + k + 1))
        term = np.ones_like(zs)
        ser = term / (n + 1)
        for k in range(1, 30):
            term = term * zs / k
            ser = ser + term / (n + k + 1)
        out[n][small] = ser
        rec = (ez - 1.0) / zl if n == 0 else (ez - n * prev) / zl
        out[n][~small] = rec
        prev = rec
    return out


def time_integral(omega, t: float, threshold: float = SERIES_THRESHOLD):
    """``int_0^t exp(i s omega) ds``, with a Taylor branch when ``|omega| t < threshold``."""
    z = 1j * np.asarray(omega, dtype=float) * t
    small = np.abs(z) < threshold
    zl = np.where(small, 1.0, z)
    out = t * np.expm1(zl) / zl
    if np.any(small):
        zs = z[small]
        out = np.asarray(out)
        out[small] = t * (1.0 + zs / 2.0 + zs * zs / 6.0 + zs**3 / 24.0)
    return complex(out) if np.ndim(out) == 0 else out


def double_time_integral(w1, w2, t: float, threshold: float = SERIES_THRESHOLD):
    """``int_0^t int_0^s exp(i s w1) exp(i sigma w2) dsigma ds``.

    Uses ``(E(w1 + w2) - E(w1)) / (i w2)`` unless ``|w2| t < threshold``, where the
    inner integral is expanded in powers of ``w2``.
    """
    w1, w2 = np.broadcast_arrays(np.asarray(w1, dtype=float), np.asarray(w2, dtype=float))
    small = np.abs(w2 * t) < threshold
    w2l = np.where(small, 1.0, w2)
    out = (time_integral(w1 + w2l, t, threshold) - time_integral(w1, t, threshold)) / (1j * w2l)
    out = np.asarray(out, dtype=complex)
    if np.any(small):
        v1, v2 = w1[small], w2[small]
        g = _g_moments(1j * v1 * t, 4)
        series = np.zeros(v1.shape, dtype=complex)
        for n in range(4):
            # int_0^s exp(i sigma w2) = sum_n (i w2)^n s^{n+1} / (n+1)!
            series = series + (1j * v2) ** n / factorial(n + 1) * t ** (n + 2) * g[n + 1]
        out[small] = series
    return complex(out) if out.ndim == 0 else out


def gamma_tensor(psi: np.ndarray) -> np.ndarray:
    """All ``gamma(k, l, m, n)`` as a ``d^4`` array."""
    psi = np.asarray(psi)
    d = psi.shape[0]
    pc = np.conj(psi)
    G = np.einsum("jk,jl,jm,jn->klmn", pc, psi, pc, psi, optimize=True)
    eye = np.eye(d)
    G -= (np.einsum("kl,mn->klmn", eye, eye) + np.einsum("kn,lm->klmn", eye, eye)) / d
    return G


def closed_form_low_order(
    spec: SpectralData,
    cfg: ModelConfig,
    t: float,
    a0: Optional[np.ndarray] = None,
    max_N: int = MAX_CLOSED_FORM_N,
) -> tuple:
    """``(a^[1](t), a^[2](t))`` from the explicit sums with analytic time integrals.

    The second-order sum couples two resonance moduli and costs ``O(d^7)``,
    hence the cap on ``N``.
    """
    N = spec.half_size
    if N > max_N:
        raise ValueError(f"closed forms are capped at N <= {max_N}")
    a0 = initial_data(cfg) if a0 is None else np.asarray(a0, dtype=complex)
    d = spec.dim
    if t == 0:
        z = np.zeros(d, dtype=complex)
        return z, z.copy()
    mu = cfg.mu
    lam = spec.lam
    G = gamma_tensor(spec.psi)
    ac = np.conj(a0)
    # Omega(k, l, m, n) = lam_k - lam_l + lam_m - lam_n
    Om = lam[:, None, None, None] - lam[None, :, None, None] + lam[None, None, :, None] - lam[None, None, None, :]
    E1 = time_integral(Om, t)
    f1 = -1j * (mu**2 / N) * np.einsum("klmn,klmn,l,m,n->k", E1, G, a0, ac, a0, optimize=True)

    # inner cubic vectors: V[l, o, p, q] = gamma(l,o,p,q) a_o conj(a_p) a_q
    V = G * a0[None, :, None, None] * ac[None, None, :, None] * a0[None, None, None, :]
    Vc = np.conj(G) * ac[None, :, None, None] * a0[None, None, :, None] * ac[None, None, None, :]
    inner = Om.reshape(d, -1)  # Omega(l, o, p, q) flattened over (o, p, q)
    f2 = np.zeros(d, dtype=complex)
    for k in range(d):
        acc = 0j
        for l in range(d):
            om1 = Om[k, l].reshape(-1)  # over (m, n)
            # term with f^[1] in the first slot
            U = (G[k, l] * ac[:, None] * a0[None, :]).reshape(-1)
            J = double_time_integral(om1[:, None], inner[l][None, :], t)
            acc += -2.0 * (mu**4 / N**2) * (U @ (J @ V[l].reshape(-1)))
        for m in range(d):
            # term with conj(f^[1]) in the middle slot: indices (l, n) free
            om1 = Om[k, :, m, :].reshape(-1)
            U = (G[k, :, m, :] * a0[:, None] * a0[None, :]).reshape(-1)
            J = double_time_integral(om1[:, None], -inner[m][None, :], t)
            acc += (mu**4 / N**2) * (U @ (J @ Vc[m].reshape(-1)))
        f2[k] = acc
    phase = np.exp(-1j * t * lam)
    return phase * f1, phase * f2


# --- resolvent identity -------------------------------------------------------------


def simplex_integral(omegas, t: float, nodes: int = 48) -> complex:
    """``int prod_r exp(i s_r omega_r) delta(sum s_r - t) ds`` over ``s in R_+^{m+1}``."""
    omegas = np.asarray(omegas, dtype=float)
    m = omegas.size - 1
    if t < 0:
        return 0j
    if m == 0:
        return complex(np.exp(1j * t * omegas[0]))
    x, w = legendre.leggauss(nodes)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    # collapsed coordinates: s_0 = t u_0, s_1 = t (1-u_0) u_1, ..., last takes the rest
    grids = np.meshgrid(*([u] * m), indexing="ij")
    weights = np.ones_like(grids[0])
    for g in np.meshgrid(*([wu] * m), indexing="ij"):
        weights = weights * g
    remaining = np.full_like(grids[0], t)
    phase = np.zeros_like(grids[0], dtype=complex)
    jac = np.ones_like(grids[0])
    for r in range(m):
        s_r = remaining * grids[r]
        jac = jac * remaining
        phase = phase + 1j * omegas[r] * s_r
        remaining = remaining - s_r
    phase = phase + 1j * omegas[m] * remaining
    return complex(np.sum(weights * jac * np.exp(phase)))


def resolvent_integral(omegas, t: float, T: float, epsabs: float = 1e-13, limit: int = 400) -> complex:
    """``(exp(t/T) / 2 pi) i^{m+1} int prod_r (alpha + omega_r + i/T)^{-1} exp(-i alpha t) d alpha``.

    The oscillatory integral over each half line is done with QUADPACK's
    Fourier-weight rule, which handles the slowly decaying tails.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    omegas = np.asarray(omegas, dtype=float)
    m1 = omegas.size

    def g(alpha):
        return np.prod(1.0 / (alpha + omegas + 1j / T))

    def half_line(sign):
        # int_0^inf g(sign * b) exp(-i sign b t) db
        parts = (lambda b: g(sign * b).real, lambda b: g(sign * b).imag)
        if t == 0:
            re, im = (integrate.quad(f, 0, np.inf, epsabs=epsabs, limit=limit)[0] for f in parts)
            return re + 1j * im
        opts = dict(wvar=abs(t), epsabs=epsabs, limlst=200, limit=limit)
        rc, ic = (integrate.quad(f, 0, np.inf, weight="cos", **opts)[0] for f in parts)
        rs, is_ = (integrate.quad(f, 0, np.inf, weight="sin", **opts)[0] for f in parts)
        # exp(-i s w b) = cos(w b) - i s sin(w b)
        s = np.sign(sign * t)
        return (rc + 1j * ic) - 1j * s * (rs + 1j * is_)

    if t == 0 and m1 < 2:
        raise ValueError("the integral diverges at t = 0 for a single factor")
    with warnings.catch_warnings():
        # QUADPACK flags slow cycle convergence of the 1/alpha tail; accuracy is
        # checked against the simplex side instead
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        total = half_line(1.0) + half_line(-1.0)
    return complex(np.exp(t / T) / (2.0 * np.pi) * (1j**m1) * total)


def resolvent_identity_check(omegas, t: float, T: float) -> float:
    """``|simplex integral - resolvent integral|``."""
    return abs(simplex_integral(omegas, t) - resolvent_integral(omegas, t, T))


def write_iterates_csv(path, iterates: IterateSet) -> None:
    """Columns ``t, k, m, re, im`` with 17 significant digits."""
    N = (iterates.values.shape[2] - 1) // 2
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "k", "m", "re", "im"])
        for i, t in enumerate(iterates.t_grid):
            for m in range(iterates.order + 1):
                for k, z in zip(range(-N, N + 1), iterates.values[m, i]):
                    w.writerow([f"{t:.17g}", k, m, f"{z.real:.17g}", f"{z.imag:.17g}"])
