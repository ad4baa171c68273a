"""Exact finite-horizon optimal online paging by backward dynamic programming.

State is (cache contents, last requested page); caches are the C(n, k) sorted
k-subsets, indexed densely by their lexicographic rank. The recursion walks
time backward keeping two layers: a hit moves at zero cost, a miss costs 1
plus the best successor value over evictions. A miss is counted on every
request, including the first (drawn from the chain's initial distribution).

The state-step count n * C(n, k) * T is checked against a budget before any
allocation; this module is meant for desk-scale exact answers, not large k.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .chain import chain_hash

DEFAULT_BUDGET = 10**8

OPT_DUMP_VERSION = 1


class BudgetExceeded(RuntimeError):
    def __init__(self, state_steps: int, budget: int):
        self.state_steps = state_steps
        super().__init__(f"DP needs {state_steps} state-steps, budget is {budget}")


class SubsetIndex:
    """Dense indexing of sorted k-subsets of range(n) plus transition helpers."""

    def __init__(self, n: int, k: int):
        if not 0 < k < n:
            raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
        self.n = n
        self.k = k
        self.subsets = list(itertools.combinations(range(n), k))
        self.rank = {s: i for i, s in enumerate(self.subsets)}
        S = len(self.subsets)
        self.member = np.zeros((S, n), dtype=bool)
        self.pages = np.array(self.subsets, dtype=np.int64)  # (S, k)
        # succ[r, j, e]: rank after a miss on j evicts the e-th page of subset r
        self.succ = np.zeros((S, n, k), dtype=np.int64)
        for r, sub in enumerate(self.subsets):
            self.member[r, list(sub)] = True
            for j in range(n):
                if j in sub:
                    continue
                for e in range(k):
                    nxt = tuple(sorted((set(sub) - {sub[e]}) | {j}))
                    self.succ[r, j, e] = self.rank[nxt]

    def __len__(self) -> int:
        return len(self.subsets)


@dataclass
class OptTable:
    """DP output: expected cost, plus (optionally) action and value layers.

    ``action[t, r, j]`` is the page evicted at request index t (1-based) when
    the cache has rank r and page j misses; -1 marks hits. ``value[t, r, s]``
    is the expected number of misses among requests t+1..T from the
    after-request state (cache r, last page s).
    """

    n: int
    k: int
    T: int
    init_cache: tuple[int, ...]
    expected_cost: float
    index: SubsetIndex
    action: np.ndarray | None = None
    value: np.ndarray | None = None
    chain_digest: str = ""


def opt_expected_cost(
    chain,
    k: int,
    T: int,
    init_cache,
    *,
    budget: int = DEFAULT_BUDGET,
    record_actions: bool = True,
    record_values: bool = False,
):
    """Expected misses of the optimal online policy, with its decision table.

    Returns ``(value, OptTable)``. Eviction ties are broken toward the lowest
    page index, so replays are stable run to run.
    """
    n = chain.n
    init_cache = tuple(sorted(init_cache))
    if len(init_cache) != k or len(set(init_cache)) != k:
        raise ValueError(f"init_cache must be a k-subset, got {init_cache}")
    idx = SubsetIndex(n, k)
    S = len(idx)
    state_steps = n * S * max(T, 1)
    if state_steps > budget:
        raise BudgetExceeded(state_steps, budget)

    action = np.full((T + 1, S, n), -1, dtype=np.int16) if record_actions else None
    value = np.zeros((T + 1, S, n)) if record_values else None

    M = chain.transition
    cols = np.arange(n)[:, None]
    v_next = np.zeros((S, n))  # layer V_T
    total = 0.0
    for t in range(T, 0, -1):
        if record_values:
            value[t] = v_next
        v_cur = np.empty((S, n)) if t > 1 else None
        for r in range(S):
            cand = v_next[idx.succ[r], cols]  # (n, k): successor values per eviction
            best = cand.min(axis=1)
            if record_actions:
                picked = idx.pages[r][cand.argmin(axis=1)]
                action[t, r] = np.where(idx.member[r], -1, picked)
            cost_vec = np.where(idx.member[r], v_next[r], 1.0 + best)
            if t > 1:
                v_cur[r] = M @ cost_vec
            elif r == idx.rank[init_cache]:
                total = float(chain.init @ cost_vec)
        if t > 1:
            v_next = v_cur
    if T == 0:
        total = 0.0

    table = OptTable(
        n=n,
        k=k,
        T=T,
        init_cache=init_cache,
        expected_cost=total,
        index=idx,
        action=action,
        value=value,
        chain_digest=chain_hash(chain),
    )
    return total, table


def opt_action(table: OptTable, t: int, cache, last, requested: int) -> int:
    """Stored optimal eviction at request index ``t`` (1-based).

    ``last`` is accepted for interface symmetry; once the realized request is
    known the optimal eviction no longer depends on it.
    """
    if table.action is None:
        raise KeyError("table was built without recorded actions")
    if not 1 <= t <= table.T:
        raise KeyError(f"time {t} outside horizon 1..{table.T}")
    key = tuple(sorted(cache))
    r = table.index.rank.get(key)
    if r is None:
        raise KeyError(f"cache {key} is not a {table.k}-subset state")
    page = int(table.action[t, r, requested])
    if page < 0:
        raise KeyError(f"page {requested} is resident in {key}; no action stored")
    return page


def save_opt_table(table: OptTable, path) -> None:
    np.savez_compressed(
        path,
        version=OPT_DUMP_VERSION,
        n=table.n,
        k=table.k,
        T=table.T,
        init_cache=np.array(table.init_cache, dtype=np.int64),
        expected_cost=table.expected_cost,
        chain_digest=table.chain_digest,
        action=table.action if table.action is not None else np.zeros(0, dtype=np.int16),
        has_action=table.action is not None,
    )


def load_opt_table(path) -> OptTable:
    with np.load(path) as data:
        if int(data["version"]) != OPT_DUMP_VERSION:
            raise ValueError(f"unsupported opt table dump version {int(data['version'])}")
        n, k, T = int(data["n"]), int(data["k"]), int(data["T"])
        has_action = bool(data["has_action"])
        return OptTable(
            n=n,
            k=k,
            T=T,
            init_cache=tuple(int(x) for x in data["init_cache"]),
            expected_cost=float(data["expected_cost"]),
            index=SubsetIndex(n, k),
            action=np.array(data["action"]) if has_action else None,
            chain_digest=str(data["chain_digest"]),
        )
