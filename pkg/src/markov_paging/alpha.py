"""Pairwise precedence probabilities alpha(p<q|s).

alpha(p<q|s) is the probability that page p is requested strictly before page q
in the future, conditioned on the most recent request being s. Write x for the
first-passage vector with boundary x[p]=1, x[q]=0 and x[r] = (M x)[r] for the
remaining pages; x solves a dense pinned linear system, and the conditional
probability for every s (including s in {p, q}) is one chain step applied to
it: alpha(p<q|s) = (M x)[s].

Systems are solved by LU factorization with partial pivoting; a pivot below
``PIVOT_TOL`` means the pair is unreachable from part of the chain (reducible
chain) and is reported as :class:`SingularSystem` tagged with the pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-12
CLAMP_TOL = 1e-7  # max tolerated out-of-[0,1] excursion before erroring

ALPHA_DUMP_VERSION = 1


class SingularSystem(ValueError):
    """The pinned system for a page pair has no unique solution."""

    def __init__(self, p: int, q: int, detail: str = ""):
        self.p = p
        self.q = q
        super().__init__(f"singular precedence system for pair ({p}, {q}){detail}")


class SolutionOutOfRange(RuntimeError):
    """A solved precedence vector leaves [0,1] by more than roundoff allows."""


@dataclass(frozen=True)
class AlphaTable:
    """Dense table of alpha(p<q|s), indexed ``values[p][q][s]``. Diagonal is 0."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def cache_block(self, cache, s: int) -> np.ndarray:
        """k x k sub-matrix alpha(p<q|s) over the cache pages, in given order."""
        idx = np.fromiter(cache, dtype=np.int64)
        return self.values[np.ix_(idx, idx, [s])][:, :, 0]


@dataclass(frozen=True)
class PairSystem:
    """The pinned system L x = b for one ordered pair (p, q).

    Row p is the unit row e_p with right-hand side 1, row q is e_q with 0, and
    every other row r is (row r of M) - e_r with 0.
    """

    p: int
    q: int
    matrix: np.ndarray
    rhs: np.ndarray


def pair_system(chain, p: int, q: int) -> PairSystem:
    if p == q:
        raise ValueError("pair pages must be distinct")
    n = chain.n
    L = chain.transition - np.eye(n)
    L[p] = 0.0
    L[p, p] = 1.0
    L[q] = 0.0
    L[q, q] = 1.0
    b = np.zeros(n)
    b[p] = 1.0
    return PairSystem(p=p, q=q, matrix=L, rhs=b)


def lu_factor(a: np.ndarray, p: int, q: int):
    """LU with partial pivoting; raises :class:`SingularSystem` on a tiny pivot.

    Returns (lu, perm) in the compact convention: U on and above the diagonal,
    unit-L multipliers below.
    """
    lu = np.array(a, dtype=float)
    n = lu.shape[0]
    perm = np.arange(n)
    for k in range(n):
        piv = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[piv, k]) < PIVOT_TOL:
            raise SingularSystem(p, q, f": pivot {lu[piv, k]!r} at column {k}")
        if piv != k:
            lu[[k, piv]] = lu[[piv, k]]
            perm[[k, piv]] = perm[[piv, k]]
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, perm


def lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lu.shape[0]
    x = b[perm].astype(float)
    for k in range(1, n):  # forward: unit lower triangle
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):  # backward
        x[k] = (x[k] - lu[k, k + 1 :] @ x[k + 1 :]) / lu[k, k]
    return x


def _solve_pair(chain, p: int, q: int) -> np.ndarray:
    sys = pair_system(chain, p, q)
    lu, perm = lu_factor(sys.matrix, p, q)
    x = lu_solve(lu, perm, sys.rhs)
    excess = max(float(-x.min(initial=0.0)), float(x.max(initial=1.0) - 1.0), 0.0)
    if excess > CLAMP_TOL:
        raise SolutionOutOfRange(
            f"pair ({p}, {q}): solution leaves [0,1] by {excess!r} (> {CLAMP_TOL})"
        )
    return np.clip(x, 0.0, 1.0)


def alpha_pair(chain, p: int, q: int) -> np.ndarray:
    """alpha(p<q|s) for every conditioning page s, as a length-n vector."""
    x = _solve_pair(chain, p, q)
    return chain.transition @ x


def alpha_table(chain) -> AlphaTable:
    """Full table over all ordered pairs; alpha(p<p|s) = 0 exactly."""
    n = chain.n
    values = np.zeros((n, n, n))
    for p in range(n):
        for q in range(n):
            if p != q:
                values[p, q] = alpha_pair(chain, p, q)
    return AlphaTable(n=n, values=values)


def gamma(chain) -> float:
    """Worst conditioning over pairs: sup_{p != q} of the inf-norm of L^{-1}.

    Controls how transition-matrix error propagates into the precedence
    probabilities. Computed by explicit inverse from each pair's LU factors.
    """
    n = chain.n
    worst = 0.0
    eye = np.eye(n)
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            sys = pair_system(chain, p, q)
            lu, perm = lu_factor(sys.matrix, p, q)
            inv = np.column_stack([lu_solve(lu, perm, eye[:, j]) for j in range(n)])
            worst = max(worst, float(np.abs(inv).sum(axis=1).max()))
    return worst


def save_table(table: AlphaTable, path) -> None:
    np.savez(path, version=ALPHA_DUMP_VERSION, n=table.n, values=table.values)


def load_table(path) -> AlphaTable:
    with np.load(path) as data:
        version = int(data["version"])
        if version != ALPHA_DUMP_VERSION:
            raise ValueError(f"unsupported alpha table dump version {version}")
        return AlphaTable(n=int(data["n"]), values=np.array(data["values"]))
