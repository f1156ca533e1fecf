"""Interaction coefficients, their exact moments, and the centered-atom penalty."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .functions import DEFAULT_MAX_DEGREE, wg_exact
from .graphs import (
    WeingartenGraph,
    build_graph,
    enumerate_coverings,
    haar_moment,
)

__all__ = [
    "gamma",
    "gamma_uncentered",
    "gamma_moment_exact",
    "set_partitions",
    "rho_penalty",
    "PenaltyComparison",
    "centered_product_moment",
    "PENALTY_CASES",
]


def gamma(psi: np.ndarray, k: int, l: int, m: int, n: int) -> complex:
    """``sum_j conj(psi_jk) psi_jl conj(psi_jm) psi_jn`` minus its two pairing means.

    Indices are column positions ``0..d-1`` of ``psi``.
    """
    psi = np.asarray(psi)
    d = psi.shape[0]
    s = np.sum(np.conj(psi[:, k]) * psi[:, l] * np.conj(psi[:, m]) * psi[:, n])
    return complex(s - ((k == l) * (m == n) + (k == n) * (l == m)) / d)


def gamma_uncentered(psi: np.ndarray, k: int, l: int, m: int, n: int) -> complex:
    """Same quantity written with centered factors, using unitarity of the columns.

    ``sum_j (conj(psi_jk) psi_jl - delta_kl / d)(conj(psi_jm) psi_jn - delta_mn / d)``
    minus ``delta_kn delta_lm / d``; equal to :func:`gamma` whenever ``psi`` is unitary.
    """
    psi = np.asarray(psi)
    d = psi.shape[0]
    a = np.conj(psi[:, k]) * psi[:, l] - (k == l) / d
    b = np.conj(psi[:, m]) * psi[:, n] - (m == n) / d
    return complex(np.sum(a * b) - (k == n) * (l == m) / d)


def set_partitions(n: int):
    """Restricted growth strings of length ``n`` (one per set partition)."""
    if n == 0:
        yield ()
        return

    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(top + 2):
            yield from rec(prefix + [b], max(top, b))

    yield from rec([0], 0)


def _falling(d: int, b: int) -> int:
    out = 1
    for i in range(b):
        out *= d - i
    return out


def _parse_pattern(pattern) -> tuple:
    labels = tuple(pattern)
    if len(labels) != 4:
        raise ValueError("index pattern needs four labels (k, l, m, n)")
    return labels


def _sum_graph(labels, blocks, conj_flags) -> WeingartenGraph:
    # S_a = conj(psi_jk) psi_jl conj(psi_jm) psi_jn, S_b-bar swaps psi and conj(psi)
    k, l, m, n = labels
    rows, cols, rows_bar, cols_bar = [], [], [], []
    for j, conj in zip(blocks, conj_flags):
        row = ("j", j)
        if not conj:
            rows += [row, row]
            cols += [("c", l), ("c", n)]
            rows_bar += [row, row]
            cols_bar += [("c", k), ("c", m)]
        else:
            rows += [row, row]
            cols += [("c", k), ("c", m)]
            rows_bar += [row, row]
            cols_bar += [("c", l), ("c", n)]
    return build_graph(rows, cols, rows_bar, cols_bar)


def _sum_moment(labels, r: int, s: int, d: int, cap: int) -> Fraction:
    """``E[S^r conj(S)^s]`` summed over the row indices of every factor."""
    conj_flags = [False] * r + [True] * s
    total = Fraction(0)
    for blocks in set_partitions(r + s):
        nb = (max(blocks) + 1) if blocks else 0
        mult = _falling(d, nb)
        if mult == 0:
            continue
        total += mult * haar_moment(_sum_graph(labels, blocks, conj_flags), d, cap)
    return total


def gamma_moment_exact(pattern, p: int, q: int, d: int, cap: int = DEFAULT_MAX_DEGREE) -> Fraction:
    """Exact ``E[gamma^p conj(gamma)^q]`` for the index pattern ``(k, l, m, n)``.

    ``pattern`` is any length-4 sequence of labels, e.g. ``"klmn"`` for distinct
    indices or ``"kkmm"``.  The constant pairing terms are expanded binomially and
    each power of the four-fold sum is evaluated through set partitions of its row
    indices, weighted by ``d (d-1) ... (d-B+1)``.

    Raises
    ------
    ValueError
        If the Haar degree ``2 (p + q)`` exceeds ``cap``.
    """
    labels = _parse_pattern(pattern)
    if p < 0 or q < 0:
        raise ValueError("powers must be non-negative")
    if 2 * (p + q) > cap:
        raise ValueError(f"Haar degree {2 * (p + q)} exceeds the enumeration cap {cap}")
    k, l, m, n = labels
    shift = Fraction((k == l) * (m == n) + (k == n) * (l == m), d)
    total = Fraction(0)
    for r in range(p + 1):
        for s in range(q + 1):
            coeff = comb(p, r) * comb(q, s) * (-shift) ** (p - r + q - s)
            if coeff == 0:
                continue
            total += coeff * _sum_moment(labels, r, s, d, cap)
    return total


# --- penalty theorem ---------------------------------------------------------


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def rho_penalty(K: int, ct=()) -> Fraction:
    """Penalty constant for ``K`` atom fixed points next to a permutation of type ``ct``.

    Even ``K = 2k`` gives ``(2k-1)!!``; odd ``K = 2k+1`` gives
    ``(2k)!! sum_l (2k-2l-1)!!/(2k-2l)!! (4l + sum_i (4C_i^2 - 2C_i)/(C_i + 1))``.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    if K % 2 == 0:
        return Fraction(_double_factorial(K - 1))
    k = (K - 1) // 2
    base = sum((Fraction(4 * c * c - 2 * c, c + 1) for c in ct), Fraction(0))
    acc = Fraction(0)
    for ell in range(k + 1):
        acc += Fraction(_double_factorial(2 * k - 2 * ell - 1), _double_factorial(2 * k - 2 * ell)) * (4 * ell + base)
    return _double_factorial(2 * k) * acc


@dataclass(frozen=True)
class PenaltyComparison:
    """Exact centered moment and its predicted leading order."""

    exact: Fraction
    predicted: Fraction

    @property
    def ratio(self) -> float:
        return float(self.exact / self.predicted) if self.predicted != 0 else float("nan")


def _atoms_graph(atoms) -> WeingartenGraph:
    rows = tuple(a for a, _ in atoms)
    cols = tuple(b for _, b in atoms)
    return build_graph(rows, cols, rows, cols)


def centered_product_moment(atoms, g: WeingartenGraph | None, d: int, cap: int = DEFAULT_MAX_DEGREE) -> PenaltyComparison:
    """``E[prod_l (|psi_{a_l b_l}|^2 - 1/d) psi_G]`` with its penalty-weighted prediction.

    The exact value comes from inclusion-exclusion over subsets of atoms.  The
    prediction sums, over coverings of the full product, the factor
    ``d^{-2 floor((a+1)/2)} rho_a(omega) Wg(sigma tau^{-1}, d)``, where ``a``
    counts atoms whose own two edges close into a 2-circuit and ``omega`` is
    ``sigma tau^{-1}`` with those fixed points removed.
    """
    atoms = [tuple(a) for a in atoms]
    L = len(atoms)
    if g is None:
        g = build_graph((), (), (), ())
    full = _atoms_graph(atoms).combine(g)
    if max(full.q_psi, full.q_psi_bar) > cap:
        raise ValueError(f"degree {full.q} exceeds the enumeration cap {cap}")

    exact = Fraction(0)
    for mask in range(1 << L):
        chosen = [atoms[i] for i in range(L) if mask >> i & 1]
        sub = _atoms_graph(chosen).combine(g)
        exact += Fraction(-1, d) ** (L - len(chosen)) * haar_moment(sub, d, cap)

    predicted = Fraction(0)
    for cov in enumerate_coverings(full, cap):
        fixed = [l for l in range(L) if cov.sigma(l) == l and cov.tau(l) == l]
        omega = cov.omega()
        a = len(fixed)
        # cycle type of omega with the atom fixed points removed
        rest = list(omega.cycle_type())
        for _ in range(a):
            rest.remove(1)
        penalty = Fraction(1, d ** (2 * ((a + 1) // 2))) * rho_penalty(a, tuple(rest))
        predicted += penalty * wg_exact(omega.cycle_type(), d=d, max_degree=cap)
    return PenaltyComparison(exact, predicted)


# Small (atoms, graph) pairs with one or two atoms; the exact moment over the
# penalty prediction tends to 1 as d grows.
PENALTY_CASES = {
    "L1_self": ([(0, 0)], build_graph((0,), (0,), (0,), (0,))),
    "L1_row": ([(0, 0)], build_graph((0,), (1,), (0,), (1,))),
    "L1_disjoint": ([(0, 0)], build_graph((1,), (1,), (1,), (1,))),
    "L1_square": ([(0, 0)], build_graph((0, 1), (1, 0), (0, 1), (1, 0))),
    "L1_fourth": ([(0, 0)], build_graph((0, 0), (0, 0), (0, 0), (0, 0))),
    "L2_same": ([(0, 0), (0, 0)], None),
    "L2_row": ([(0, 0), (0, 1)], None),
    "L2_disjoint": ([(0, 0), (1, 1)], None),
    "L2_row_loop": ([(0, 0), (0, 1)], build_graph((0,), (0,), (0,), (0,))),
    "L2_self_loop": ([(0, 0), (1, 1)], build_graph((0,), (0,), (0,), (0,))),
    "L2_cross": ([(0, 0), (1, 1)], build_graph((0, 1), (1, 0), (0, 1), (1, 0))),
}
