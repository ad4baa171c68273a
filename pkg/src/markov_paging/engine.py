"""Cost measurement: Monte Carlo simulation and exact distribution evolution.

``simulate`` runs independent trials with per-trial derived seeds and reports
a mean miss count with a normal-approximation 95% CI. Memoryless policies
(eviction distribution a function of cache contents and the requested page
only) get a vectorized fast path over a precomputed kernel; history-dependent
policies (farthest-in-future, LRU, FIFO, scripted, OPT replay) run step by
step.

``exact_cost`` skips sampling entirely for memoryless policies: it evolves the
exact probability vector over (cache, last page) joint states and accumulates
per-step miss probability.
"""

from __future__ import annotations

import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import alpha as alpha_mod
from .chain import chain_hash, sample_sequence
from .optdp import BudgetExceeded, DEFAULT_BUDGET, SubsetIndex, opt_expected_cost
from .policies import CacheState, RunContext, evict


class NonMemoryless(TypeError):
    """Policy needs request history, so no exact state-space evolution exists."""


@dataclass(frozen=True)
class CostEstimate:
    """Expected miss count; ``half_width`` is 0 and ``trials`` 0 in exact mode."""

    mean: float
    half_width: float
    trials: int
    mode: str

    def covers(self, value: float) -> bool:
        return self.mean - self.half_width <= value <= self.mean + self.half_width


@dataclass
class SimKernel:
    """Dense tables driving memoryless simulation over ranked cache subsets."""

    index: SubsetIndex
    probs: np.ndarray  # (S, n, k) eviction distribution per (cache, request)

    @property
    def cum_probs(self) -> np.ndarray:
        if not hasattr(self, "_cum"):
            self._cum = np.cumsum(self.probs, axis=2)
        return self._cum


def _shared_alpha(policy, chain):
    return alpha_mod.alpha_table(chain) if policy.uses_alpha else None


def build_kernel(policy, chain, k: int, table=None) -> SimKernel | None:
    """Materialize the per-(cache, request) eviction distributions, or None
    when the policy is history-dependent."""
    if table is None:
        table = _shared_alpha(policy, chain)
    idx = SubsetIndex(chain.n, k)
    probs = np.zeros((len(idx), chain.n, k))
    for r, sub in enumerate(idx.subsets):
        for j in range(chain.n):
            if idx.member[r, j]:
                continue
            p = policy.kernel_probs(sub, j, chain, table)
            if p is None:
                return None
            probs[r, j] = p
    return SimKernel(index=idx, probs=probs)


def _seed_tuple(seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def simulate(
    policy,
    chain,
    k: int,
    T: int,
    init_cache,
    trials: int,
    seed,
    threads: int = 1,
) -> CostEstimate:
    """Average miss count over ``trials`` independent runs of length ``T``.

    Per-trial randomness is derived from ``(seed, trial)``, so results do not
    depend on scheduling and repeat bit-for-bit under the same seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    init_cache = tuple(sorted(init_cache))
    base = _seed_tuple(seed)
    table = _shared_alpha(policy, chain)
    kernel = build_kernel(policy, chain, k, table)
    if kernel is not None:
        misses = _simulate_kernel(kernel, chain, T, init_cache, trials, base)
    else:
        misses = _simulate_generic(policy, chain, k, T, init_cache, trials, base, table, threads)
    mean = float(misses.mean())
    sd = float(misses.std(ddof=1)) if trials > 1 else 0.0
    return CostEstimate(
        mean=mean,
        half_width=float(1.96 * sd / np.sqrt(trials)),
        trials=trials,
        mode="monte-carlo",
    )


def _simulate_kernel(kernel, chain, T, init_cache, trials, base) -> np.ndarray:
    idx = kernel.index
    n = chain.n
    rng = np.random.default_rng(base)
    cum_rows = np.cumsum(chain.transition, axis=1)
    cum_init = np.cumsum(chain.init)
    cum_kernel = kernel.cum_probs
    ranks = np.full(trials, idx.rank[init_cache], dtype=np.int64)
    last = np.zeros(trials, dtype=np.int64)
    misses = np.zeros(trials, dtype=np.int64)
    for t in range(1, T + 1):
        u = rng.random(trials)
        rows = cum_init[None, :] if t == 1 else cum_rows[last]
        req = np.minimum((rows <= u[:, None]).sum(axis=1), n - 1)
        hit = idx.member[ranks, req]
        miss = ~hit
        if miss.any():
            misses[miss] += 1
            mr, mj = ranks[miss], req[miss]
            u2 = rng.random(int(miss.sum()))
            ei = np.minimum((cum_kernel[mr, mj] <= u2[:, None]).sum(axis=1), idx.k - 1)
            ranks[miss] = idx.succ[mr, mj, ei]
        last = req
    return misses


def _run_one_trial(policy, chain, k, T, init_cache, base, trial, table) -> int:
    seq = sample_sequence(chain, T, base + (trial, 0))
    rng_pol = np.random.default_rng(base + (trial, 1))
    ctx = RunContext(chain=chain, k=k, init_cache=init_cache, sequence=seq.pages, alpha=table)
    policy.reset(ctx)
    cache = set(init_cache)
    last = None
    misses = 0
    for t, page in enumerate(seq.pages, 1):
        s = int(page)
        ctx.t = t
        if s not in cache:
            misses += 1
            state = CacheState(pages=tuple(sorted(cache)), last_request=last)
            victim = evict(policy, state, s, ctx, rng_pol)
            cache.remove(victim)
            cache.add(s)
        last = s
    return misses


def _simulate_generic(policy, chain, k, T, init_cache, trials, base, table, threads) -> np.ndarray:
    misses = np.zeros(trials, dtype=np.int64)
    if threads <= 1:
        for trial in range(trials):
            misses[trial] = _run_one_trial(policy, chain, k, T, init_cache, base, trial, table)
        return misses
    chunks = np.array_split(np.arange(trials), threads)

    def run_chunk(ids):
        local = copy.deepcopy(policy)
        return [(int(i), _run_one_trial(local, chain, k, T, init_cache, base, int(i), table)) for i in ids]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(run_chunk, chunks):
            for i, m in part:
                misses[i] = m
    return misses


def exact_cost(policy, chain, k: int, T: int, init_cache, budget: int = DEFAULT_BUDGET) -> CostEstimate:
    """Exact expected miss count by evolving the (cache, last page) distribution.

    Only defined for memoryless policies; others raise :class:`NonMemoryless`.
    """
    init_cache = tuple(sorted(init_cache))
    table = _shared_alpha(policy, chain)
    kernel = build_kernel(policy, chain, k, table)
    if kernel is None:
        raise NonMemoryless(f"{policy.name} depends on request history")
    idx = kernel.index
    n = chain.n
    S = len(idx)
    if S * n * max(T, 1) > budget:
        raise BudgetExceeded(S * n * max(T, 1), budget)

    M = chain.transition
    dist = np.zeros((S, n))  # mass over (cache rank, last requested page)
    cost = 0.0
    r0 = idx.rank[init_cache]
    for t in range(1, T + 1):
        new = np.zeros((S, n))
        for r in range(S):
            if t == 1:
                if r != r0:
                    continue
                req_mass = chain.init
            else:
                mass = dist[r]
                if not mass.any():
                    continue
                req_mass = mass @ M
            resident = idx.member[r]
            new[r, resident] += req_mass[resident]
            out = np.flatnonzero(~resident)
            miss_mass = req_mass[out]
            cost += float(miss_mass.sum())
            spread = miss_mass[:, None] * kernel.probs[r, out]  # (n-k, k)
            np.add.at(new, (idx.succ[r, out].ravel(), np.repeat(out, idx.k)), spread.ravel())
        dist = new
        total = dist.sum()
        if abs(total - 1.0) > 1e-9:
            raise AssertionError(f"state mass drifted to {total!r} at step {t}")
    return CostEstimate(mean=cost, half_width=0.0, trials=0, mode="exact")


@dataclass(frozen=True)
class ReportRow:
    policy: str
    mean: float
    ci: float
    baseline_mean: float
    baseline_ci: float
    ratio_low: float
    ratio_high: float
    chain_hash: str
    k: int
    T: int
    seed: int


def ratio_report(
    chain,
    k: int,
    T: int,
    policies,
    baseline,
    trials: int,
    seed: int,
    init_cache,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
) -> list[ReportRow]:
    """Costs and cost ratios against a baseline, with conservative interval
    arithmetic on the two CIs.

    ``baseline`` is ``"opt-dp"`` (exact DP value, zero-width CI) or a policy.
    Ratios certify nothing beyond the evaluated horizon T.
    """
    init_cache = tuple(sorted(init_cache))
    if isinstance(baseline, str) and baseline == "opt-dp":
        value, _ = opt_expected_cost(chain, k, T, init_cache, budget=budget, record_actions=False)
        base_est = CostEstimate(mean=value, half_width=0.0, trials=0, mode="exact")
    else:
        base_est = simulate(baseline, chain, k, T, init_cache, trials, (seed, 0), threads)
    digest = chain_hash(chain)
    rows = []
    for i, policy in enumerate(policies):
        est = simulate(policy, chain, k, T, init_cache, trials, (seed, i + 1), threads)
        lo_num = max(est.mean - est.half_width, 0.0)
        hi_den = base_est.mean - base_est.half_width
        ratio_low = float(lo_num / (base_est.mean + base_est.half_width)) if base_est.mean + base_est.half_width > 0 else float("inf")
        ratio_high = float((est.mean + est.half_width) / hi_den) if hi_den > 0 else float("inf")
        rows.append(
            ReportRow(
                policy=policy.name,
                mean=est.mean,
                ci=est.half_width,
                baseline_mean=base_est.mean,
                baseline_ci=base_est.half_width,
                ratio_low=ratio_low,
                ratio_high=ratio_high,
                chain_hash=digest,
                k=k,
                T=T,
                seed=seed,
            )
        )
    return rows


REPORT_COLUMNS = (
    "policy,mean,ci,baseline_mean,baseline_ci,ratio_low,ratio_high,chain_hash,k,T,seed"
)


def report_csv_lines(rows) -> list[str]:
    lines = [REPORT_COLUMNS]
    for r in rows:
        lines.append(
            f"{r.policy},{r.mean!r},{r.ci!r},{r.baseline_mean!r},{r.baseline_ci!r},"
            f"{r.ratio_low!r},{r.ratio_high!r},{r.chain_hash},{r.k},{r.T},{r.seed}"
        )
    return lines
