"""Exact and asymptotic unitary Weingarten functions."""

from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .permutations import (
    all_permutations,
    class_representative,
    cycle_counts,
    cycle_type_rows,
    multiplicities_to_parts,
    normalize_cycle_type,
    partitions,
)

__all__ = [
    "StableRangeError",
    "mobius",
    "wg_exact",
    "wg_leading",
    "one_step_identity_check",
    "wg_table",
    "wg_table_json",
]

DEFAULT_MAX_DEGREE = 8


class StableRangeError(ValueError):
    """Raised when ``d < q``, where the Gram matrix is singular."""


def _check_ct(ct, q=None) -> tuple:
    ct = normalize_cycle_type(ct)
    if q is not None and sum(ct) != q:
        raise ValueError(f"cycle type {ct} does not sum to q={q}")
    return ct


def mobius(ct) -> int:
    """Moebius function: product of signed Catalan numbers over the cycles."""
    out = 1
    for c in _check_ct(ct):
        out *= (-1) ** (c - 1) * factorial(2 * c - 2) // (factorial(c) * factorial(c - 1))
    return out


@lru_cache(maxsize=None)
def _class_counts(q: int):
    """``counts[lam][nu][c]``: number of tau of type nu with ``C(pi_lam tau^-1) = c``."""
    parts = partitions(q)
    index = {p: i for i, p in enumerate(parts)}
    perms = all_permutations(q).astype(np.int64)
    types = cycle_type_rows(perms)
    # tau^{-1} is conjugate to tau, so type(tau^-1) = type(tau)
    type_idx = np.array([index[multiplicities_to_parts(row)] for row in types])
    inv = np.argsort(perms, axis=1)
    P = len(parts)
    counts = np.zeros((P, P, q + 1), dtype=np.int64)
    for li, lam in enumerate(parts):
        rep = np.array(class_representative(lam), dtype=np.int64)
        comp = rep[inv]
        ncyc = cycle_counts(comp)
        np.add.at(counts[li], (type_idx, ncyc), 1)
    return parts, counts


def _solve_fractions(A, b):
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ArithmeticError("singular Gram system")
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[i][n] for i in range(n)]


@lru_cache(maxsize=None)
def _wg_class_values(q: int, d: int) -> dict:
    parts, counts = _class_counts(q)
    P = len(parts)
    powers = [Fraction(d) ** c for c in range(q + 1)]
    A = [
        [sum((int(counts[li, ni, c]) * powers[c] for c in range(q + 1)), Fraction(0)) for ni in range(P)]
        for li in range(P)
    ]
    identity = tuple([1] * q)
    b = [Fraction(1) if parts[li] == identity else Fraction(0) for li in range(P)]
    sol = _solve_fractions(A, b)
    return dict(zip(parts, sol))


def wg_exact(ct, q: int | None = None, d: int = None, max_degree: int = DEFAULT_MAX_DEGREE) -> Fraction:
    """Exact Weingarten function ``Wg(omega, d)`` for ``omega`` of cycle type ``ct``.

    Obtained by inverting the Gram matrix ``d^{C(sigma tau^-1)}`` restricted to
    class functions, in rational arithmetic.

    Raises
    ------
    StableRangeError
        If ``d < q``.
    ValueError
        If ``q`` exceeds ``max_degree``.
    """
    ct = _check_ct(ct, q)
    q = sum(ct)
    if d is None:
        raise TypeError("d is required")
    if q == 0:
        return Fraction(1)
    if q > max_degree:
        raise ValueError(f"degree q={q} exceeds the configured cap {max_degree}")
    if d < q:
        raise StableRangeError(f"stable range requires d >= q (got d={d}, q={q})")
    return _wg_class_values(q, int(d))[ct]


def wg_leading(ct, q: int | None = None, d: int = None) -> float:
    """Leading asymptotics ``d^{-2q + C(omega)} Moeb(omega)``."""
    ct = _check_ct(ct, q)
    q = sum(ct)
    return float(mobius(ct)) * float(d) ** (-2 * q + len(ct))


def one_step_identity_check(ct, q: int | None = None, d: int = None) -> Fraction:
    """Residual of ``Wg(o sigma) - Wg(sigma)/d + (1/d) sum_i Wg((i, o) sigma)``.

    ``sigma`` has cycle type ``ct`` on ``q`` points and ``o`` is an added fixed
    point.  Transposing ``o`` into a cycle of length ``c`` lengthens it to
    ``c + 1``, and each of the ``c`` insertion points gives the same type.
    """
    ct = _check_ct(ct, q)
    q = sum(ct)
    if d < q + 1:
        raise StableRangeError("identity needs d >= q + 1")
    total = wg_exact(ct + (1,), d=d) - wg_exact(ct, d=d) / d
    acc = Fraction(0)
    for i, c in enumerate(ct):
        merged = ct[:i] + (c + 1,) + ct[i + 1 :]
        acc += c * wg_exact(merged, d=d)
    return total + acc / d


def wg_table(q: int, d: int) -> list:
    """Records ``{cycle_type, q, d, numerator, denominator}`` for every class of S_q."""
    out = []
    for ct in partitions(q):
        w = wg_exact(ct, d=d)
        out.append(
            {
                "cycle_type": list(ct),
                "q": q,
                "d": d,
                "numerator": w.numerator,
                "denominator": w.denominator,
            }
        )
    return out


def wg_table_json(q: int, d: int) -> str:
    return json.dumps(wg_table(q, d), indent=2)
