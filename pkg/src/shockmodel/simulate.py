"""Vectorized batch simulation of shock histories.

Replicates are split into fixed-size blocks; block ``i`` draws from its own
stream ``SeedSequence(seed, spawn_key=(i,))``.  The block layout does not depend
on the worker count, so a seed always yields the same summary.

Two exact samplers are available:

``skip``
    Jumps over runs of inert shocks with geometric waiting times and draws only
    the shocks that change the state.  Cost is proportional to the number of
    state changes, so it handles histories of 10**4 to 10**7 shocks.
``step``
    Draws every shock magnitude and classifies it; cost is proportional to
    ``nu``.  It is a literal transcription of the model and serves as the
    reference for ``skip``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import DistributionSpec
from .errors import ConfigError
from .model import ModelParams, ShockEffect, classify_array

BLOCK_SIZE = 1 << 16
THREADS_ENV = "SHOCKMODEL_THREADS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(block),)))


@dataclass
class BatchSummary:
    """Per-replicate outcomes of a batch, in replicate order.

    ``nu`` and ``w`` are 0 where undefined (censored run, or no shock ``>= beta``);
    ``t_nu`` is NaN for censored runs or when times were not simulated.
    """

    nu: np.ndarray
    w: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    t_nu: np.ndarray
    censored: np.ndarray
    seed: int = 0
    max_shocks: int = 0
    method: str = "skip"
    meta: dict = field(default_factory=dict)

    @property
    def n_reps(self) -> int:
        return int(self.nu.size)

    @property
    def n_censored(self) -> int:
        return int(self.censored.sum())

    def histogram(self, name: str):
        """``(values, counts)`` of a count statistic over uncensored replicates."""
        data = getattr(self, name)[~self.censored]
        values, counts = np.unique(data, return_counts=True)
        return values, counts

    def joint_counts(self, *names):
        data = np.stack([getattr(self, n)[~self.censored] for n in names], axis=1)
        rows, counts = np.unique(data, axis=0, return_counts=True)
        return {tuple(int(v) for v in r): int(c) for r, c in zip(rows, counts)}

    @classmethod
    def merge(cls, parts):
        parts = list(parts)
        first = parts[0]
        cat = {n: np.concatenate([getattr(p, n) for p in parts])
               for n in ("nu", "w", "n_plus", "n_minus", "t_nu", "censored")}
        return cls(**cat, seed=first.seed, max_shocks=first.max_shocks, method=first.method, meta=dict(first.meta))


def _empty(n):
    return dict(
        nu=np.zeros(n, np.int64),
        w=np.zeros(n, np.int64),
        n_plus=np.zeros(n, np.int64),
        n_minus=np.zeros(n, np.int64),
        t_nu=np.full(n, np.nan),
        censored=np.zeros(n, bool),
    )


def _block_skip(params, f, g, rng, n, max_shocks, with_time):
    out = _empty(n)
    k, l, w, nu, cens = out["n_plus"], out["n_minus"], out["w"], out["nu"], out["censored"]
    steps = np.zeros(n, np.int64)
    s_gamma = float(f.tail(params.gamma))
    s_beta = float(f.tail(params.beta))

    pre = np.arange(n)
    post = np.empty(0, np.int64)
    if s_gamma <= 0.0 or s_beta <= 0.0:
        # no shock can ever reach beta: the history never ends
        cens[:] = True
        steps[:] = max_shocks
        pre = pre[:0]
    while pre.size:
        s_alpha = f.tail(params.thresholds(k[pre], 0))
        steps[pre] += rng.geometric(s_gamma, pre.size)
        over = steps[pre] > max_shocks
        cens[pre[over]] = True
        pre, s_alpha = pre[~over], s_alpha[~over]
        u = rng.random(pre.size) * s_gamma
        strengthen = u < s_gamma - s_beta
        fatal = ~strengthen & (u >= s_gamma - s_alpha)
        hit = pre[~strengthen]
        w[hit] = steps[hit]
        nu[pre[fatal]] = steps[pre[fatal]]
        weaken = pre[~strengthen & ~fatal]
        l[weaken] = 1
        k[pre[strengthen]] += 1
        post = np.concatenate([post, weaken])
        pre = pre[strengthen]
    while post.size:
        s_alpha = f.tail(params.thresholds(k[post], l[post]))
        steps[post] += rng.geometric(s_beta, post.size)
        over = steps[post] > max_shocks
        cens[post[over]] = True
        post, s_alpha = post[~over], s_alpha[~over]
        u = rng.random(post.size) * s_beta
        fatal = u >= s_beta - s_alpha
        nu[post[fatal]] = steps[post[fatal]]
        post = post[~fatal]
        l[post] += 1
    if with_time:
        done = ~cens
        out["t_nu"][done] = g.sample_sums(rng, nu[done])
    return out


def _block_step(params, f, g, rng, n, max_shocks, with_time):
    out = _empty(n)
    k, l, w, nu = out["n_plus"], out["n_minus"], out["w"], out["nu"]
    t = np.zeros(n)
    active = np.arange(n)
    i = 0
    while active.size and i < max_shocks:
        i += 1
        x = f.sample(rng, active.size)
        if with_time:
            t[active] += g.sample(rng, active.size)
        effect = classify_array(x, k[active], l[active], w[active] > 0, params)
        first_hit = (x >= params.beta) & (w[active] == 0)
        w[active[first_hit]] = i
        k[active[effect == ShockEffect.STRENGTHEN]] += 1
        l[active[effect == ShockEffect.WEAKEN]] += 1
        fatal = effect == ShockEffect.FATAL
        nu[active[fatal]] = i
        active = active[~fatal]
    out["censored"][active] = True
    if with_time:
        done = ~out["censored"]
        out["t_nu"][done] = t[done]
    return out


_KERNELS = {"skip": _block_skip, "step": _block_step}


def simulate_batch(
    params: ModelParams,
    f: DistributionSpec,
    g: DistributionSpec,
    seed: int,
    n_reps: int,
    max_shocks: int = 10_000_000,
    method: str = "skip",
    workers: int | None = None,
    with_time: bool = True,
) -> BatchSummary:
    """Simulate ``n_reps`` independent histories; deterministic in ``seed``."""
    if not isinstance(n_reps, (int, np.integer)) or n_reps < 1:
        raise ConfigError(f"must be a positive integer, got {n_reps!r}", "n_reps")
    if max_shocks < 1:
        raise ConfigError("must be >= 1", "max_shocks")
    if method not in _KERNELS:
        raise ConfigError(f"unknown method {method!r}; choose from {sorted(_KERNELS)}", "method")
    kernel = _KERNELS[method]
    n_blocks = -(-int(n_reps) // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_reps - b * BLOCK_SIZE) for b in range(n_blocks)]

    def run(b):
        return kernel(params, f, g, block_rng(seed, b), sizes[b], max_shocks, with_time)

    workers = workers or default_workers()
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, range(n_blocks)))
    else:
        blocks = [run(b) for b in range(n_blocks)]
    cat = {name: np.concatenate([blk[name] for blk in blocks]) for name in blocks[0]}
    return BatchSummary(**cat, seed=int(seed), max_shocks=int(max_shocks), method=method)
