"""Brute-force oracles for discrete shock laws.

These never touch the closed-form formulas: they push every atom of a
:class:`DiscreteFinite` law through :func:`classify_shock` and add up path
probabilities.

``enumerate_sequences``
    Every sequence of atoms of a given length, one row per sequence.  Cost is
    ``n_atoms ** length``.
``state_distribution``
    The same sum over all sequences, with paths that reach an identical
    ``(N+, N-, W, nu)`` state merged after each shock.  Exact, and polynomial
    in the length.
``absorption_distribution``
    Runs the merged enumeration until the surviving mass is negligible, giving
    the law of ``(N+(nu), N-(nu))``.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .distributions import DiscreteFinite
from .errors import StateBudgetExceeded
from .model import ModelParams, ShockEffect, classify_array, classify_shock, stats_from_trace

MAX_SEQUENCES = 4_000_000


@dataclass
class SequenceTable:
    """One row per atom sequence.  ``nu``/``w`` are 0 when undefined.

    ``plus_after[i]`` and ``minus_after[i]`` hold the strengthening and
    weakening counts after the first ``i`` shocks (``i = 0..length``).
    """

    length: int
    prob: np.ndarray
    nu: np.ndarray
    w: np.ndarray
    plus_after: np.ndarray
    minus_after: np.ndarray

    @property
    def n_plus(self) -> np.ndarray:
        return self.plus_after[-1]

    @property
    def n_minus(self) -> np.ndarray:
        return self.minus_after[-1]

    def total(self, mask) -> float:
        return float(self.prob[mask].sum())


def enumerate_sequences(f: DiscreteFinite, params: ModelParams, length: int) -> SequenceTable:
    n_atoms = len(f.values)
    n_seq = n_atoms ** length
    if n_seq > MAX_SEQUENCES:
        raise StateBudgetExceeded(f"{n_atoms}**{length} = {n_seq} sequences exceeds {MAX_SEQUENCES}", n_seq)
    idx = np.indices((n_atoms,) * length, dtype=np.int8).reshape(length, -1)
    atoms, masses = f.atoms, f.masses
    prob = np.ones(n_seq)
    k = np.zeros(n_seq, np.int64)
    l = np.zeros(n_seq, np.int64)
    w = np.zeros(n_seq, np.int64)
    nu = np.zeros(n_seq, np.int64)
    plus_after = np.zeros((length + 1, n_seq), np.int8)
    minus_after = np.zeros((length + 1, n_seq), np.int8)
    for i in range(length):
        prob *= masses[idx[i]]
        x = atoms[idx[i]]
        alive = nu == 0
        effect = classify_array(x, k, l, w > 0, params)
        w[alive & (w == 0) & (x >= params.beta)] = i + 1
        k[alive & (effect == ShockEffect.STRENGTHEN)] += 1
        l[alive & (effect == ShockEffect.WEAKEN)] += 1
        nu[alive & (effect == ShockEffect.FATAL)] = i + 1
        plus_after[i + 1] = k
        minus_after[i + 1] = l
    return SequenceTable(length, prob, nu, w, plus_after, minus_after)


def enumerate_sequences_literal(f: DiscreteFinite, params: ModelParams, length: int):
    """Slow reference: ``stats_from_trace`` on every sequence.  Yields ``(prob, stats, prefix_stats)``."""
    for combo in itertools.product(range(len(f.values)), repeat=length):
        xs = [f.values[i] for i in combo]
        p = float(np.prod([f.probs[i] for i in combo]))
        yield p, stats_from_trace(xs, params), stats_from_trace(xs[:-1], params)


def _transitions(f: DiscreteFinite, params: ModelParams):
    cache = {}

    def get(k, l, w_seen):
        key = (k, l, w_seen)
        if key not in cache:
            cache[key] = [(classify_shock(x, k, l, w_seen, params), x >= params.beta, p)
                          for x, p in zip(f.values, f.probs) if p > 0]
        return cache[key]

    return get


def state_distribution(f: DiscreteFinite, params: ModelParams, length: int, record_at: int | None = None,
                       max_states: int = 2_000_000) -> dict:
    """Law of ``(N+, N-, W, nu)`` after ``length`` shocks (frozen at the fatal shock).

    With ``record_at`` each key gains the ``(N+, N-)`` counts after the first
    ``record_at`` shocks, as two extra entries.
    """
    trans = _transitions(f, params)
    dist = {(0, 0, 0, 0, 0, 0): 1.0}
    for i in range(1, length + 1):
        nxt = defaultdict(float)
        for (k, l, w, nu, kr, lr), p in dist.items():
            if nu:
                nxt[(k, l, w, nu, kr, lr)] += p
                continue
            for effect, harmful, q in trans(k, l, w > 0):
                w2 = i if (harmful and not w) else w
                k2 = k + (effect is ShockEffect.STRENGTHEN)
                l2 = l + (effect is ShockEffect.WEAKEN)
                nu2 = i if effect is ShockEffect.FATAL else 0
                if record_at is not None and i <= record_at:
                    kr, lr = k2, l2
                nxt[(k2, l2, w2, nu2, kr, lr)] += p * q
        if len(nxt) > max_states:
            raise StateBudgetExceeded(f"{len(nxt)} states after {i} shocks", len(nxt))
        dist = dict(nxt)
    if record_at is None:
        merged = defaultdict(float)
        for key, p in dist.items():
            merged[key[:4]] += p
        return dict(merged)
    return dist


def absorption_distribution(f: DiscreteFinite, params: ModelParams, tol: float = 1e-16,
                            max_steps: int = 1_000_000):
    """Law of ``(N+(nu), N-(nu))``; returns ``(dict {(k, l): p}, alive_mass)``."""
    trans = _transitions(f, params)
    alive = {(0, 0, False): 1.0}
    absorbed = defaultdict(float)
    steps = 0
    while alive and sum(alive.values()) > tol and steps < max_steps:
        steps += 1
        nxt = defaultdict(float)
        for (k, l, w_seen), p in alive.items():
            for effect, harmful, q in trans(k, l, w_seen):
                if effect is ShockEffect.FATAL:
                    absorbed[(k, l)] += p * q
                elif effect is ShockEffect.STRENGTHEN:
                    nxt[(k + 1, l, w_seen)] += p * q
                elif effect is ShockEffect.WEAKEN:
                    nxt[(k, l + 1, True)] += p * q
                else:
                    nxt[(k, l, w_seen or harmful)] += p * q
        alive = {s: p for s, p in nxt.items() if p > 1e-300}
    return dict(absorbed), float(sum(alive.values()))
