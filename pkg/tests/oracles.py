"""Independent brute-force oracles the library code never touches.

These deliberately avoid the implementation's code paths: precedence
probabilities come from raw chain rollouts, optimal paging cost from an
exhaustive expectation tree over request realizations (no state merging), and
matrix geometric series from term-by-term accumulation.
"""

import numpy as np


def rollout_alpha(chain, p, q, s, trials, seed, max_steps=100_000):
    """Monte Carlo estimate of Pr[p requested strictly before q | last = s].

    Returns (estimate, standard_error). Walks all trials in lockstep until
    each hits p or q.
    """
    rng = np.random.default_rng(seed)
    cum = np.cumsum(chain.transition, axis=1)
    n = chain.n
    state = np.full(trials, s, dtype=np.int64)
    alive = np.arange(trials)
    hit_p = np.zeros(trials, dtype=bool)
    for _ in range(max_steps):
        if alive.size == 0:
            break
        u = rng.random(alive.size)
        nxt = np.minimum((cum[state[alive]] <= u[:, None]).sum(axis=1), n - 1)
        state[alive] = nxt
        done_p = nxt == p
        done_q = nxt == q
        hit_p[alive[done_p]] = True
        alive = alive[~(done_p | done_q)]
    if alive.size:
        raise RuntimeError(f"{alive.size} rollouts unresolved after {max_steps} steps")
    est = hit_p.mean()
    se = np.sqrt(max(est * (1.0 - est), 1e-12) / trials)
    return float(est), float(se)


def tree_opt_cost(chain, k, T, init_cache):
    """Best achievable expected miss count over all online strategies.

    Exhaustive expectation tree over realized requests with a min over
    evictions at every miss node; no memoization, no subset ranking, so it
    shares nothing with the DP implementation.
    """
    M = chain.transition
    n = chain.n

    def go(cache, last, t):
        if t > T:
            return 0.0
        dist = chain.init if t == 1 else M[last]
        total = 0.0
        for j in range(n):
            pj = float(dist[j])
            if pj == 0.0:
                continue
            if j in cache:
                total += pj * go(cache, j, t + 1)
            else:
                best = min(
                    go((cache - {victim}) | {j}, j, t + 1) for victim in sorted(cache)
                )
                total += pj * (1.0 + best)
        return total

    return go(frozenset(init_cache), None, 1)


def fixed_strategy_cost(chain, k, T, init_cache, chooser):
    """Expected cost of one deterministic online strategy.

    ``chooser(history, cache, requested)`` picks the victim from the realized
    request history; used to confirm no enumerated strategy beats the DP.
    """
    M = chain.transition
    n = chain.n

    def go(cache, last, t, history):
        if t > T:
            return 0.0
        dist = chain.init if t == 1 else M[last]
        total = 0.0
        for j in range(n):
            pj = float(dist[j])
            if pj == 0.0:
                continue
            hist2 = history + (j,)
            if j in cache:
                total += pj * go(cache, j, t + 1, hist2)
            else:
                victim = chooser(history, cache, j)
                total += pj * (1.0 + go((cache - {victim}) | {j}, j, t + 1, hist2))
        return total

    return go(frozenset(init_cache), None, 1, ())


def naive_geometric_sum(B, T):
    B = np.asarray(B, dtype=float)
    S = np.zeros_like(B)
    P = np.eye(B.shape[0])
    for _ in range(T):
        S = S + P
        P = P @ B
    return S


def naive_warmup_costs(eps, T):
    """Term-by-term evaluation of the symmetric-split cost recurrences."""
    c = 1.0 - eps
    d = eps * (6.0 - 7.0 * eps) / (8.0 - 8.0 * eps)
    p = 1.0
    sum_p = 0.0
    for _ in range(T):
        sum_p += p
        p = c + p * d
    cost_dom = T * (1.0 - eps) + (1.5 * eps - 1.0) * sum_p
    return cost_dom, eps * T / 2.0
