"""Weingarten graphs, circuit coverings and exact Haar moments.

A monomial ``prod_l psi[r_l, c_l] * prod_l conj(psi[rb_l, cb_l])`` is encoded by
four label lists.  A pair ``(sigma, tau)`` of permutations is admissible when
``r_l == rb_{sigma(l)}`` and ``c_l == cb_{tau(l)}`` for every ``l``; the
expectation over Haar measure is then ``sum Wg(sigma tau^{-1}, d)`` over
admissible pairs.  Each such pair is a covering of the graph by alternating
circuits, one circuit per cycle of ``sigma tau^{-1}``.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .functions import DEFAULT_MAX_DEGREE, wg_exact
from .permutations import Permutation, cycle_type_rows, multiplicities_to_parts

__all__ = [
    "WeingartenGraph",
    "CircuitCovering",
    "build_graph",
    "modulus_squared",
    "enumerate_coverings",
    "brute_force_coverings",
    "covering_type_histogram",
    "haar_moment",
    "graph_order_bound",
    "FIXTURE_GRAPHS",
]


@dataclass(frozen=True)
class WeingartenGraph:
    """Bipartite multigraph of a monomial in Haar-unitary entries.

    Row labels are black vertices, column labels white vertices.  Factor ``l``
    of ``psi`` is an edge ``row -> col``; factor ``l`` of ``conj(psi)`` is an
    edge ``col -> row``.
    """

    rows: tuple
    cols: tuple
    rows_bar: tuple
    cols_bar: tuple

    def __post_init__(self):
        for name in ("rows", "cols", "rows_bar", "cols_bar"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(self.rows) != len(self.cols) or len(self.rows_bar) != len(self.cols_bar):
            raise ValueError("each factor needs one row and one column label")

    @property
    def q_psi(self) -> int:
        return len(self.rows)

    @property
    def q_psi_bar(self) -> int:
        return len(self.rows_bar)

    @property
    def balanced(self) -> bool:
        return self.q_psi == self.q_psi_bar

    @property
    def q(self) -> int:
        return self.q_psi

    @property
    def row_vertices(self) -> tuple:
        return tuple(sorted(set(self.rows) | set(self.rows_bar), key=repr))

    @property
    def col_vertices(self) -> tuple:
        return tuple(sorted(set(self.cols) | set(self.cols_bar), key=repr))

    @property
    def num_vertices(self) -> int:
        return len(self.row_vertices) + len(self.col_vertices)

    @property
    def edges(self) -> list:
        """Directed edges ``(kind, source, target)`` with tagged vertices."""
        out = [("psi", ("row", r), ("col", c)) for r, c in zip(self.rows, self.cols)]
        out += [("psi_bar", ("col", c), ("row", r)) for r, c in zip(self.rows_bar, self.cols_bar)]
        return out

    def num_components(self) -> int:
        parent = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for v in self.row_vertices:
            find(("row", v))
        for v in self.col_vertices:
            find(("col", v))
        for _, a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        return len({find(v) for v in parent})

    def combine(self, other: "WeingartenGraph") -> "WeingartenGraph":
        """Graph of the product of the two monomials (self's factors first)."""
        return WeingartenGraph(
            self.rows + other.rows,
            self.cols + other.cols,
            self.rows_bar + other.rows_bar,
            self.cols_bar + other.cols_bar,
        )

    def canonical_key(self) -> tuple:
        # relabel vertices by first appearance so isomorphic encodings share a cache entry
        rmap, cmap = {}, {}
        rows = tuple(rmap.setdefault(r, len(rmap)) for r in self.rows + self.rows_bar)
        cols = tuple(cmap.setdefault(c, len(cmap)) for c in self.cols + self.cols_bar)
        q = self.q_psi
        return (rows[:q], cols[:q], rows[q:], cols[q:])


def build_graph(rows, cols, rows_bar, cols_bar) -> WeingartenGraph:
    """Graph of ``prod psi[rows, cols] * prod conj(psi[rows_bar, cols_bar])``."""
    return WeingartenGraph(tuple(rows), tuple(cols), tuple(rows_bar), tuple(cols_bar))


def modulus_squared(a, b) -> WeingartenGraph:
    """Graph of ``|psi_ab|^2``."""
    return build_graph((a,), (b,), (a,), (b,))


@dataclass(frozen=True)
class CircuitCovering:
    """Admissible pair ``(sigma, tau)``."""

    sigma: Permutation
    tau: Permutation

    def omega(self) -> Permutation:
        """``sigma tau^{-1}``."""
        return self.sigma * self.tau.inverse()

    def num_circuits(self) -> int:
        return self.omega().num_cycles()


def _matchings(src, dst):
    """All bijections ``l -> l'`` with ``src[l] == dst[l']``, as image arrays."""
    q = len(src)
    if Counter(src) != Counter(dst):
        return np.zeros((0, q), dtype=np.int64)
    groups = {}
    for i, lab in enumerate(src):
        groups.setdefault(lab, []).append(i)
    targets = {}
    for j, lab in enumerate(dst):
        targets.setdefault(lab, []).append(j)
    labels = list(groups)
    choices = [list(itertools.permutations(targets[lab])) for lab in labels]
    n = 1
    for c in choices:
        n *= len(c)
    out = np.empty((n, q), dtype=np.int64)
    for row, combo in enumerate(itertools.product(*choices)):
        for lab, tgt in zip(labels, combo):
            out[row, groups[lab]] = tgt
    return out


def _check_cap(g: WeingartenGraph, cap: int):
    if max(g.q_psi, g.q_psi_bar) > cap:
        raise ValueError(f"degree {max(g.q_psi, g.q_psi_bar)} exceeds the enumeration cap {cap}")


def _sigma_tau_sets(g: WeingartenGraph):
    return _matchings(g.rows, g.rows_bar), _matchings(g.cols, g.cols_bar)


def enumerate_coverings(g: WeingartenGraph, cap: int = DEFAULT_MAX_DEGREE) -> list:
    """All admissible ``(sigma, tau)`` pairs, built from per-label bijections.

    An unbalanced graph has no covering and yields an empty list.
    """
    _check_cap(g, cap)
    if not g.balanced:
        return []
    sig, tau = _sigma_tau_sets(g)
    return [
        CircuitCovering(Permutation(tuple(s)), Permutation(tuple(t)))
        for s in sig
        for t in tau
    ]


def brute_force_coverings(g: WeingartenGraph) -> list:
    """Admissible pairs found by filtering all of ``S_q x S_q`` (small q only)."""
    if not g.balanced:
        return []
    q = g.q
    if q > 5:
        raise ValueError("brute force enumeration is limited to q <= 5")
    out = []
    perms = list(itertools.permutations(range(q)))
    for s in perms:
        if any(g.rows[l] != g.rows_bar[s[l]] for l in range(q)):
            continue
        for t in perms:
            if all(g.cols[l] == g.cols_bar[t[l]] for l in range(q)):
                out.append(CircuitCovering(Permutation(s), Permutation(t)))
    return out


@lru_cache(maxsize=4096)
def _histogram_cached(key) -> tuple:
    rows, cols, rows_bar, cols_bar = key
    sig = _matchings(rows, rows_bar)
    tau = _matchings(cols, cols_bar)
    q = len(rows)
    if sig.shape[0] == 0 or tau.shape[0] == 0:
        return ()
    tau_inv = np.argsort(tau, axis=1)
    hist = Counter()
    # omega = sigma o tau^-1, processed in chunks of sigma to bound memory
    chunk = max(1, 200000 // tau_inv.shape[0])
    for start in range(0, sig.shape[0], chunk):
        s = sig[start : start + chunk]
        omega = s[:, tau_inv].reshape(-1, q)
        mult = cycle_type_rows(omega)
        uniq, counts = np.unique(mult, axis=0, return_counts=True)
        for row, c in zip(uniq, counts):
            hist[multiplicities_to_parts(row)] += int(c)
    return tuple(sorted(hist.items()))


def covering_type_histogram(g: WeingartenGraph, cap: int = DEFAULT_MAX_DEGREE) -> dict:
    """Number of admissible pairs for each cycle type of ``sigma tau^{-1}``."""
    _check_cap(g, cap)
    if not g.balanced:
        return {}
    if g.q == 0:
        return {(): 1}
    return dict(_histogram_cached(g.canonical_key()))


def haar_moment(g: WeingartenGraph, d: int, cap: int = DEFAULT_MAX_DEGREE) -> Fraction:
    """Exact ``E[psi_G]`` under Haar measure on ``U(d)``."""
    hist = covering_type_histogram(g, cap)
    return sum((n * wg_exact(ct, d=d, max_degree=cap) for ct, n in hist.items()), Fraction(0))


def graph_order_bound(g: WeingartenGraph) -> int:
    """Exponent ``max(-q, c - V)`` bounding ``|E psi_G|`` by ``const * d^exponent``."""
    if not g.balanced:
        raise ValueError("order bound is defined for balanced graphs")
    return max(-g.q, g.num_components() - g.num_vertices)


# Reference graphs with q <= 4, used to cross-check covering enumeration.
FIXTURE_GRAPHS = {
    "loop": modulus_squared(0, 0),
    "double_loop": build_graph((0, 0), (0, 0), (0, 0), (0, 0)),
    "row_pair": build_graph((0, 0), (0, 1), (0, 0), (0, 1)),
    "square": build_graph((0, 1), (0, 1), (1, 0), (0, 1)),
    "disjoint_loops": build_graph((0, 1), (0, 1), (0, 1), (0, 1)),
    "unbalanced": build_graph((0, 0), (0, 0), (0,), (0,)),
    "triple_loop": build_graph((0, 0, 0), (0, 0, 0), (0, 0, 0), (0, 0, 0)),
    "hexagon": build_graph((0, 1, 2), (0, 1, 2), (1, 2, 0), (0, 1, 2)),
    "mixed_q3": build_graph((0, 0, 1), (0, 1, 1), (0, 1, 0), (0, 1, 1)),
    "quadruple_loop": build_graph((0,) * 4, (0,) * 4, (0,) * 4, (0,) * 4),
    "two_by_two": build_graph((0, 0, 1, 1), (0, 1, 0, 1), (0, 0, 1, 1), (0, 1, 0, 1)),
    "octagon": build_graph((0, 1, 2, 3), (0, 1, 2, 3), (1, 2, 3, 0), (0, 1, 2, 3)),
    "shared_row_q4": build_graph((0, 0, 0, 1), (0, 1, 2, 2), (0, 0, 1, 0), (0, 1, 2, 2)),
}
