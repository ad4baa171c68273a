"""Eviction policies behind one interface.

On a cache miss a policy picks a resident page to evict. The interesting ones:

* dominating distribution: draw the victim from a distribution mu over the
  cache under which, for every fixed resident page q, the mu-average of
  alpha(p<q) is at most 1/2, so the evicted page tends to return later than
  anything kept. Such a mu always exists and is found by a tiny LP.
* adversarial dominating: the same feasible set, but mu maximizes the
  probability of evicting one chosen target page. Useful for stress
  constructions where a worst-case member of the family is wanted.
* median: deterministically evict the resident page whose next request has the
  largest median arrival time (first-passage medians from the chain).
* farthest-in-future: the clairvoyant offline rule, needs the realized trace.
* lru / fifo / random / scripted / pinned: baselines and test harness aids.

Randomized policies draw from a caller-owned RNG; deterministic ones ignore
it. Policies carry per-run state (reset before each run) plus memo tables that
persist across runs on the same chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import alpha as alpha_mod
from .simplex import InfeasibleLP, solve_lp

DOM_SLACK_HARD = 1e-6  # beyond this the dominating LP contradicts existence
DOM_SLACK_SOFT = 1e-9
ITERATIVE_MEDIAN_CAP = 4096  # above this, first-passage medians use doubling


class Infeasible(ValueError):
    """The dominating LP has no admissible distribution; input is corrupt."""


class MissingContext(ValueError):
    """Policy needs context (e.g. the realized sequence) that was not given."""


@dataclass(frozen=True)
class CacheState:
    """k resident pages (sorted) plus the most recent request, if any."""

    pages: tuple[int, ...]
    last_request: int | None = None


@dataclass(frozen=True)
class EvictionDistribution:
    """Distribution over cache pages; probabilities >= 0 and sum to 1."""

    pages: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        p = np.where(self.probs < 0.0, 0.0, self.probs)
        if self.probs.min(initial=0.0) < -1e-12:
            raise ValueError(f"negative probability {self.probs.min()!r}")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        object.__setattr__(self, "probs", p)
        self.probs.setflags(write=False)

    def support(self) -> tuple[tuple[int, float], ...]:
        return tuple(zip(self.pages, (float(x) for x in self.probs)))

    def sample(self, rng) -> int:
        i = int(np.searchsorted(np.cumsum(self.probs), rng.random(), side="right"))
        return self.pages[min(i, len(self.pages) - 1)]


@dataclass
class RunContext:
    """Everything a policy may consult during one run."""

    chain: object
    k: int
    init_cache: tuple[int, ...]
    sequence: np.ndarray | None = None
    alpha: alpha_mod.AlphaTable | None = None
    t: int = 0  # 1-based index of the request being served


def _check_alpha_sub(alpha_sub: np.ndarray) -> np.ndarray:
    a = np.asarray(alpha_sub, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("alpha_sub must be square")
    if np.any(np.diag(a) != 0.0):
        raise ValueError("alpha_sub diagonal must be exactly zero")
    if a.min() < -1e-9 or a.max() > 1.0 + 1e-9:
        raise ValueError("alpha_sub entries must lie in [0, 1]")
    return a


def _replay_check(a: np.ndarray, mu: np.ndarray) -> None:
    worst = float((mu @ a).max())
    if worst > 0.5 + DOM_SLACK_HARD:
        raise Infeasible(f"column load {worst!r} exceeds 1/2; input inconsistent")


def dominating_distribution(alpha_sub, pages=None) -> EvictionDistribution:
    """A distribution mu with ``max_q sum_p mu(p) alpha_sub[p, q] <= 1/2``.

    Solves min-max: minimize t subject to every column load at most t,
    mu a distribution. The optimum provably sits at or below 1/2.
    """
    a = _check_alpha_sub(alpha_sub)
    k = a.shape[0]
    if pages is None:
        pages = tuple(range(k))
    c = np.zeros(k + 1)
    c[k] = 1.0
    a_ub = np.hstack([a.T, -np.ones((k, 1))])  # row q: sum_p mu_p a[p,q] - t <= 0
    a_eq = np.zeros((1, k + 1))
    a_eq[0, :k] = 1.0
    try:
        x, val = solve_lp(c, a_ub=a_ub, b_ub=np.zeros(k), a_eq=a_eq, b_eq=[1.0])
    except InfeasibleLP as exc:  # cannot happen for a genuine alpha block
        raise Infeasible(str(exc)) from exc
    if val > 0.5 + DOM_SLACK_HARD:
        raise Infeasible(f"min-max load {val!r} exceeds 1/2")
    mu = x[:k]
    _replay_check(a, mu)
    return EvictionDistribution(pages=tuple(pages), probs=mu)


def adversarial_dominating(alpha_sub, target, pages=None) -> EvictionDistribution:
    """Among admissible mu, maximize the mass on ``target``.

    ``target`` is a page label from ``pages`` (by default the row index).
    """
    a = _check_alpha_sub(alpha_sub)
    k = a.shape[0]
    if pages is None:
        pages = tuple(range(k))
    ti = tuple(pages).index(target)
    c = np.zeros(k)
    c[ti] = -1.0
    a_eq = np.ones((1, k))
    try:
        x, _ = solve_lp(c, a_ub=a.T, b_ub=np.full(k, 0.5), a_eq=a_eq, b_eq=[1.0])
    except InfeasibleLP as exc:
        raise Infeasible(str(exc)) from exc
    _replay_check(a, x)
    return EvictionDistribution(pages=tuple(pages), probs=x)


def median_index(chain, s: int, p: int, cap: int):
    """Smallest t >= 1 with Pr[p requested within t steps | last request s] >= 1/2.

    Returns ``math.inf`` when the probability has not reached 1/2 by ``cap``
    steps (e.g. p unreachable from s). Equivalently: first t at which the
    survival probability (no request for p in t steps) drops to <= 1/2, found
    by iterating the first-passage recursion with p absorbing, or by
    matrix-power doubling when ``cap`` is large.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if chain.is_iid():
        r = float(chain.transition[0, p])
        if r <= 0.0:
            return math.inf
        if r >= 0.5:
            return 1
        t = max(1, math.ceil(math.log(0.5) / math.log1p(-r)))
        while t > 1 and (1.0 - r) ** (t - 1) <= 0.5:
            t -= 1
        while (1.0 - r) ** t > 0.5:
            t += 1
        return t if t <= cap else math.inf
    q = np.array(chain.transition)
    q[:, p] = 0.0
    if cap <= ITERATIVE_MEDIAN_CAP:
        g = np.ones(chain.n)
        for t in range(1, cap + 1):
            g = q @ g
            if g[s] <= 0.5:
                return t
        return math.inf
    return _median_by_doubling(q, s, cap)


def _median_by_doubling(q: np.ndarray, s: int, cap: int):
    ones = np.ones(q.shape[0])
    powers = [q]  # powers[j] = q^(2^j)

    def survival(t: int) -> float:
        v = ones
        j = 0
        while t:
            if j == len(powers):
                powers.append(powers[-1] @ powers[-1])
            if t & 1:
                v = powers[j] @ v
            t >>= 1
            j += 1
        return float(v[s])

    if survival(cap) > 0.5:
        return math.inf
    lo, hi = 0, 1  # survival at lo known > 1/2 (t=0 survives surely)
    while survival(hi) > 0.5:
        lo, hi = hi, min(hi * 2, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if survival(mid) > 0.5:
            lo = mid
        else:
            hi = mid
    return hi


def default_median_cap(chain) -> int:
    # per-step hit probability is at least min_entry, so 16/delta overshoots
    # the crossing comfortably; reducible chains get a flat fallback
    if chain.min_entry > 0.0:
        return math.ceil(16.0 / chain.min_entry)
    return 4096


class Policy:
    """Base eviction rule. Subclasses override :meth:`evict`.

    ``uses_alpha`` advertises that the run context should carry a precedence
    table. ``kernel_probs`` returns, for memoryless rules, the eviction
    distribution over the sorted cache as a function of (cache, request) only;
    history-dependent rules return ``None`` and are simulated step by step.
    """

    name = "policy"
    uses_alpha = False

    def reset(self, ctx: RunContext) -> None:
        pass

    def evict(self, cache: CacheState, requested: int, ctx: RunContext, rng) -> int:
        raise NotImplementedError

    def kernel_probs(self, cache: tuple[int, ...], requested: int, chain, table):
        return None


def evict(policy: Policy, cache: CacheState, requested: int, ctx: RunContext, rng) -> int:
    """Dispatch one eviction and enforce that the victim is resident."""
    if requested in cache.pages:
        raise ValueError(f"page {requested} is already resident; eviction not needed")
    page = policy.evict(cache, requested, ctx, rng)
    if page not in cache.pages:
        raise RuntimeError(f"{policy.name} evicted non-resident page {page}")
    return page


class DominatingPolicy(Policy):
    name = "dominating"
    uses_alpha = True

    def __init__(self, table: alpha_mod.AlphaTable | None = None):
        self._table = table
        self._pinned_table = table is not None
        self._memo: dict[tuple, EvictionDistribution] = {}

    def _resolve_table(self, ctx_or_table):
        if self._table is not None:
            return self._table
        if ctx_or_table is None:
            raise MissingContext(f"{self.name} needs a precedence table")
        return ctx_or_table

    def _mu(self, cache: tuple[int, ...], requested: int, table) -> EvictionDistribution:
        key = (cache, requested)
        dist = self._memo.get(key)
        if dist is None:
            dist = self._build(table.cache_block(cache, requested), cache)
            self._memo[key] = dist
        return dist

    def _build(self, block, cache):
        return dominating_distribution(block, pages=cache)

    def reset(self, ctx: RunContext) -> None:
        # adopt the run's table (and drop stale memos) unless one was pinned
        if not self._pinned_table and ctx.alpha is not None and ctx.alpha is not self._table:
            self._table = ctx.alpha
            self._memo = {}

    def evict(self, cache, requested, ctx, rng):
        table = self._resolve_table(ctx.alpha)
        return self._mu(cache.pages, requested, table).sample(rng)

    def kernel_probs(self, cache, requested, chain, table):
        return self._mu(cache, requested, self._resolve_table(table)).probs


class AdversarialDominatingPolicy(DominatingPolicy):
    """Dominating policy that pushes mass onto a target page.

    When the target is not resident, the lowest-indexed resident page stands
    in, which on the 3-page adversarial family reproduces the stress choices
    for every reachable cache state.
    """

    def __init__(self, target: int, table: alpha_mod.AlphaTable | None = None):
        super().__init__(table)
        self.target = target
        self.name = f"dominating-adversarial:{target}"

    def _build(self, block, cache):
        target = self.target if self.target in cache else min(cache)
        return adversarial_dominating(block, target, pages=cache)


class MedianPolicy(Policy):
    name = "median"

    def __init__(self, cap: int | None = None):
        self.cap = cap
        self._memo: dict[tuple[int, int], object] = {}
        self._memo_chain = None

    def _median(self, chain, s: int, p: int):
        if chain is not self._memo_chain:  # medians are chain-specific
            self._memo = {}
            self._memo_chain = chain
        key = (s, p)
        m = self._memo.get(key)
        if m is None:
            cap = self.cap if self.cap is not None else default_median_cap(chain)
            m = median_index(chain, s, p, cap)
            self._memo[key] = m
        return m

    def _choose(self, cache, requested, chain):
        best_page, best_med = None, None
        for p in cache:  # ascending order makes ties go to the lowest index
            m = self._median(chain, requested, p)
            if best_med is None or m > best_med:
                best_page, best_med = p, m
        return best_page

    def evict(self, cache, requested, ctx, rng):
        return self._choose(cache.pages, requested, ctx.chain)

    def kernel_probs(self, cache, requested, chain, table):
        probs = np.zeros(len(cache))
        probs[cache.index(self._choose(cache, requested, chain))] = 1.0
        return probs


class FarthestInFuture(Policy):
    """Clairvoyant offline rule: evict the page requested latest from now."""

    name = "fif"

    def __init__(self):
        self._occurrences: dict[int, list[int]] | None = None

    def reset(self, ctx: RunContext) -> None:
        if ctx.sequence is None:
            raise MissingContext("farthest-in-future needs the realized sequence")
        occ: dict[int, list[int]] = {}
        for i, page in enumerate(ctx.sequence):
            occ.setdefault(int(page), []).append(i)
        self._occurrences = occ

    def evict(self, cache, requested, ctx, rng):
        import bisect

        if self._occurrences is None:
            raise MissingContext("farthest-in-future policy was not reset with a sequence")
        best_page, best_next = None, -1
        for p in cache.pages:
            occ = self._occurrences.get(p, ())
            i = bisect.bisect_left(occ, ctx.t)  # occurrences strictly after step t
            nxt = occ[i] if i < len(occ) else math.inf
            if nxt > best_next:
                best_page, best_next = p, nxt
        return best_page


class LruPolicy(Policy):
    name = "lru"

    def __init__(self):
        self._last_used: dict[int, int] = {}
        self._scanned = 0

    def reset(self, ctx: RunContext) -> None:
        self._last_used = {}
        self._scanned = 0

    def evict(self, cache, requested, ctx, rng):
        if ctx.sequence is None:
            raise MissingContext("lru needs the realized request prefix")
        while self._scanned < ctx.t - 1:  # fold requests before the current one
            self._last_used[int(ctx.sequence[self._scanned])] = self._scanned
            self._scanned += 1
        return min(cache.pages, key=lambda p: (self._last_used.get(p, -1), p))


class FifoPolicy(Policy):
    name = "fifo"

    def __init__(self):
        self._queue: list[int] = []

    def reset(self, ctx: RunContext) -> None:
        self._queue = sorted(ctx.init_cache)

    def evict(self, cache, requested, ctx, rng):
        victim = self._queue.pop(0)
        self._queue.append(requested)
        return victim


class RandomEvictionPolicy(Policy):
    name = "random"

    def evict(self, cache, requested, ctx, rng):
        return cache.pages[int(rng.integers(len(cache.pages)))]

    def kernel_probs(self, cache, requested, chain, table):
        return np.full(len(cache), 1.0 / len(cache))


class PinnedPolicy(Policy):
    """Never evicts the pinned pages; otherwise evicts the lowest index."""

    def __init__(self, pinned):
        self.pinned = frozenset(pinned)
        self.name = "pinned:" + ",".join(str(p) for p in sorted(self.pinned))

    def evict(self, cache, requested, ctx, rng):
        for p in cache.pages:
            if p not in self.pinned:
                return p
        raise RuntimeError("all resident pages are pinned")

    def kernel_probs(self, cache, requested, chain, table):
        probs = np.zeros(len(cache))
        for i, p in enumerate(cache):
            if p not in self.pinned:
                probs[i] = 1.0
                return probs
        raise RuntimeError("all resident pages are pinned")


class ScriptedPolicy(Policy):
    """Replays a fixed eviction list; test fixture helper."""

    name = "scripted"

    def __init__(self, evictions):
        self.evictions = list(evictions)
        self._next = 0

    def reset(self, ctx: RunContext) -> None:
        self._next = 0

    def evict(self, cache, requested, ctx, rng):
        if self._next >= len(self.evictions):
            raise MissingContext("scripted policy ran out of evictions")
        victim = self.evictions[self._next]
        self._next += 1
        return victim


class OptReplayPolicy(Policy):
    """Replays the stored finite-horizon optimal eviction table."""

    name = "opt-dp"

    def __init__(self, table):
        self.table = table

    def evict(self, cache, requested, ctx, rng):
        from .optdp import opt_action

        return opt_action(self.table, ctx.t, cache.pages, cache.last_request, requested)


def parse_policy(name: str) -> Policy:
    """Build a policy from its CLI name. ``opt-dp`` needs a horizon-specific
    table and is constructed by the caller that owns chain/k/T."""
    if name == "dominating":
        return DominatingPolicy()
    if name.startswith("dominating-adversarial:"):
        return AdversarialDominatingPolicy(int(name.split(":", 1)[1]))
    if name == "median":
        return MedianPolicy()
    if name == "fif":
        return FarthestInFuture()
    if name == "lru":
        return LruPolicy()
    if name == "fifo":
        return FifoPolicy()
    if name == "random":
        return RandomEvictionPolicy()
    raise ValueError(f"unknown policy {name!r}")
