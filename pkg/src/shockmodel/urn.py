"""Balanced Polya-type urns encoding safe, risky and default states.

Colors ``x`` (safe), ``y`` (risky) and ``w`` (default) form the triangular
3-color urn; the 4-color urn adds ``u`` balls that reinforce ``x``.  Matrices
are stored as NET additions: row ``i`` is the change of every color count when
a ball of color ``i`` is drawn, the drawn ball already accounted for.  A
displayed matrix that lists the replaced ball on the diagonal converts via
:meth:`ReinforcementMatrix.from_displayed`.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateModelError, DegenerateUrnError, StateBudgetExceeded
from .simulate import BLOCK_SIZE, block_rng
from .specfun import falling_factorial, pochhammer


@dataclass(frozen=True)
class ReinforcementMatrix:
    colors: tuple
    additions: np.ndarray = field(compare=False)

    def __post_init__(self):
        add = np.asarray(self.additions, dtype=np.int64)
        colors = tuple(self.colors)
        if add.ndim != 2 or add.shape[0] != add.shape[1] or add.shape[0] != len(colors):
            raise ConfigError(f"additions must be {len(colors)}x{len(colors)}, got shape {add.shape}", "urn.additions")
        if len(set(colors)) != len(colors):
            raise ConfigError("color labels must be distinct", "urn.colors")
        sums = add.sum(axis=1)
        if np.any(sums != sums[0]):
            raise ConfigError(f"matrix is not balanced: row sums {sums.tolist()}", "urn.additions")
        if sums[0] <= 0:
            raise ConfigError("balance theta must be positive", "urn.additions")
        off = add - np.diag(np.diag(add))
        if np.any(off < 0) or np.any(np.diag(add) < -1):
            raise ConfigError("only the drawn ball itself may be removed (diagonal >= -1, off-diagonal >= 0)",
                              "urn.additions")
        add.setflags(write=False)
        object.__setattr__(self, "colors", colors)
        object.__setattr__(self, "additions", add)

    @property
    def theta(self) -> int:
        return int(self.additions[0].sum())

    def index(self, color: str) -> int:
        try:
            return self.colors.index(color)
        except ValueError:
            raise ConfigError(f"unknown color {color!r}; have {self.colors}", "color") from None

    def __eq__(self, other):
        return (isinstance(other, ReinforcementMatrix) and self.colors == other.colors
                and np.array_equal(self.additions, other.additions))

    def __hash__(self):
        return hash((self.colors, self.additions.tobytes()))

    @classmethod
    def three_color(cls, theta: int, delta: int) -> "ReinforcementMatrix":
        _check_theta_delta(theta, delta)
        lam = theta - delta
        return cls(("x", "y", "w"), np.array([[theta, 0, 0], [0, delta, lam], [0, 0, theta]]))

    @classmethod
    def four_color(cls, theta: int, delta: int, depleting_u: bool = False) -> "ReinforcementMatrix":
        """``u`` draws add ``theta`` x-balls and keep the u-count fixed; with
        ``depleting_u`` the drawn u-ball is removed and ``theta + 1`` x-balls added."""
        _check_theta_delta(theta, delta)
        lam = theta - delta
        u_row = [theta + 1, -1, 0, 0] if depleting_u else [theta, 0, 0, 0]
        return cls(("x", "u", "y", "w"),
                   np.array([[theta, 0, 0, 0], u_row, [0, 0, delta, lam], [0, 0, 0, theta]]))

    @classmethod
    def from_displayed(cls, colors, displayed) -> "ReinforcementMatrix":
        """From a matrix whose diagonal counts the replaced ball (``1 + theta``)."""
        disp = np.asarray(displayed, dtype=np.int64)
        return cls(tuple(colors), disp - np.eye(disp.shape[0], dtype=np.int64))


def _check_theta_delta(theta, delta):
    if int(theta) != theta or int(delta) != delta:
        raise ConfigError("theta and delta must be integers", "urn.theta")
    if not theta > delta >= 0:
        raise ConfigError(f"need theta > delta >= 0, got theta={theta}, delta={delta}", "urn.delta")


@dataclass(frozen=True)
class UrnState:
    counts: tuple
    step: int = 0

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ConfigError(f"counts must be nonnegative, got {counts}", "urn.init")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


def step_urn(state: UrnState, rm: ReinforcementMatrix, rng: np.random.Generator):
    """Draw one ball and reinforce.  Returns ``(new_state, drawn_color)``."""
    total = state.total
    if total <= 0:
        raise DegenerateUrnError("cannot draw from an empty urn")
    ball = int(rng.integers(total))
    i = int(np.searchsorted(np.cumsum(state.counts), ball, side="right"))
    new = np.asarray(state.counts) + rm.additions[i]
    return UrnState(tuple(int(c) for c in new), state.step + 1), rm.colors[i]


def _check_init(init: UrnState, rm: ReinforcementMatrix):
    if len(init.counts) != len(rm.colors):
        raise ConfigError(f"initial composition has {len(init.counts)} colors, matrix has {len(rm.colors)}",
                          "urn.init")
    if init.total <= 0:
        raise DegenerateUrnError("initial urn is empty")


def exact_urn_distribution(init: UrnState, rm: ReinforcementMatrix, n: int, max_states: int = 1_000_000) -> dict:
    """Law of the count vector after ``n`` draws, by forward dynamic programming."""
    _check_init(init, rm)
    if n < 0:
        raise ConfigError("need n >= 0", "urn.n")
    rows = [tuple(int(v) for v in r) for r in rm.additions]
    dist = {init.counts: 1.0}
    for _ in range(n):
        nxt = defaultdict(float)
        for counts, p in dist.items():
            total = sum(counts)
            for i, c in enumerate(counts):
                if c:
                    key = tuple(a + b for a, b in zip(counts, rows[i]))
                    nxt[key] += p * c / total
        if len(nxt) > max_states:
            raise StateBudgetExceeded(f"{len(nxt)} urn states exceed the budget of {max_states}", len(nxt))
        dist = dict(nxt)
    return dist


def exact_factorial_moment(dist: dict, index: int, l: int) -> float:
    """``E[(C)_l]`` of color ``index`` under an exact distribution."""
    return float(sum(p * falling_factorial(c[index], l) for c, p in dist.items()))


def expected_counts(init: UrnState, rm: ReinforcementMatrix, n: int) -> np.ndarray:
    """Exact ``E[counts]`` after ``0..n`` draws, shape ``(n+1, colors)``.

    Balance makes the total deterministic, so the means obey the linear
    recursion ``m_{i+1} = m_i (I + A / T_i)``.
    """
    _check_init(init, rm)
    add = rm.additions.astype(float)
    out = np.empty((n + 1, len(rm.colors)))
    out[0] = init.counts
    t0, theta = init.total, rm.theta
    for i in range(n):
        out[i + 1] = out[i] + out[i] @ add / (t0 + i * theta)
    return out


def first_failure_curve(init: UrnState, rm: ReinforcementMatrix, n_max: int, fail_color: str = "w",
                        max_states: int = 1_000_000) -> np.ndarray:
    """``P[first draw of a fail_color ball happens at step n]`` for ``n = 1..n_max``."""
    _check_init(init, rm)
    fail = rm.index(fail_color)
    rows = [tuple(int(v) for v in r) for r in rm.additions]
    alive = {init.counts: 1.0}
    out = np.zeros(n_max)
    for n in range(n_max):
        nxt = defaultdict(float)
        for counts, p in alive.items():
            total = sum(counts)
            for i, c in enumerate(counts):
                if not c:
                    continue
                q = p * c / total
                if i == fail:
                    out[n] += q
                else:
                    nxt[tuple(a + b for a, b in zip(counts, rows[i]))] += q
        if len(nxt) > max_states:
            raise StateBudgetExceeded(f"{len(nxt)} urn states exceed the budget of {max_states}", len(nxt))
        alive = dict(nxt)
    return out


def first_failure_probability(init: UrnState, rm: ReinforcementMatrix, n: int, fail_color: str = "w",
                              max_states: int = 1_000_000, fallback_reps: int | None = None,
                              seed: int = 0) -> float:
    """Probability that the first ``fail_color`` draw occurs at step ``n``.

    Exact by dynamic programming; if the state budget is exceeded and
    ``fallback_reps`` is given, estimated from that many simulated trajectories.
    """
    if n < 1:
        raise ConfigError("need n >= 1", "urn.n")
    try:
        return float(first_failure_curve(init, rm, n, fail_color, max_states)[n - 1])
    except StateBudgetExceeded:
        if not fallback_reps:
            raise
    batch = simulate_urn_batch(init, rm, n, fallback_reps, seed, track_first=fail_color)
    return float(np.mean(batch.first_draw == n))


def u_survival_probability(init: UrnState, rm: ReinforcementMatrix, n: int, color: str = "u") -> float:
    """``P[count of color > 0 after n draws]`` when that color can only be depleted by
    its own draws (one ball at a time) and is never added by other rows."""
    j = rm.index(color)
    col = rm.additions[:, j]
    if col[j] not in (0, -1) or np.any(np.delete(col, j) != 0):
        raise ConfigError(f"color {color!r} is not a pure death color under this matrix", "color")
    d0 = init.counts[j]
    if col[j] == 0:
        return float(d0 > 0)
    probs = np.zeros(d0 + 1)
    probs[d0] = 1.0
    t0, theta = init.total, rm.theta
    levels = np.arange(d0 + 1)
    for i in range(n):
        leave = probs * levels / (t0 + i * theta)
        probs = probs - leave
        probs[:-1] += leave[1:]
    return float(probs[1:].sum())


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


@dataclass
class UrnBatch:
    """Counts of every trajectory at the final step and at each checkpoint."""

    colors: tuple
    n: int
    counts: np.ndarray
    checkpoints: dict
    balance_violations: int
    count_min: np.ndarray
    count_max: np.ndarray
    first_draw: np.ndarray | None
    seed: int

    @property
    def reps(self) -> int:
        return int(self.counts.shape[0])

    def _at(self, n):
        if n is None or n == self.n:
            return self.counts
        return self.checkpoints[n]

    def factorial_moment(self, color: str, l: int, n: int | None = None):
        """Sample mean of ``(C_n)_l`` and its standard error."""
        data = falling_factorial(self._at(n)[:, self.colors.index(color)], l)
        return float(data.mean()), float(data.std(ddof=1) / np.sqrt(data.size)) if data.size > 1 else 0.0

    def state_frequencies(self, n: int | None = None) -> dict:
        rows, freq = np.unique(self._at(n), axis=0, return_counts=True)
        return {tuple(int(v) for v in r): int(c) for r, c in zip(rows, freq)}


def _urn_block(init, add, n, rng, checkpoints, track):
    k = add.shape[0]
    cols = [np.full(rng.size, c, np.int64) for c in init.counts]
    cmin = [c.copy() for c in cols]
    cmax = [c.copy() for c in cols]
    first = np.zeros(rng.size, np.int64) if track is not None else None
    t0, theta = init.total, int(add[0].sum())
    bad = np.zeros(rng.size, bool)
    snaps = {}
    gen = rng.gen
    for i in range(n):
        total = t0 + i * theta
        ball = gen.integers(0, total, size=rng.size)
        drawn = np.zeros(rng.size, np.intp)
        edge = np.zeros(rng.size, np.int64)
        for j in range(k - 1):
            edge += cols[j]
            drawn += ball >= edge
        if track is not None:
            first[(drawn == track) & (first == 0)] = i + 1
        running = np.zeros(rng.size, np.int64)
        for j in range(k):
            cols[j] += add[:, j][drawn]
            np.minimum(cmin[j], cols[j], out=cmin[j])
            np.maximum(cmax[j], cols[j], out=cmax[j])
            running += cols[j]
        bad |= running != total + theta
        if i + 1 in checkpoints:
            snaps[i + 1] = np.stack(cols, axis=1)
    return np.stack(cols, axis=1), snaps, int(bad.sum()), np.stack(cmin, axis=1), np.stack(cmax, axis=1), first


@dataclass
class _Stream:
    gen: np.random.Generator
    size: int


def simulate_urn_batch(init: UrnState, rm: ReinforcementMatrix, n: int, reps: int, seed: int,
                       checkpoints=(), track_first: str | None = None) -> UrnBatch:
    """Simulate ``reps`` trajectories of ``n`` draws; deterministic in ``seed``.

    Balance ``total = t0 + i * theta`` is checked after every draw, and the
    per-trajectory minimum and maximum of each color is kept.
    """
    _check_init(init, rm)
    if reps < 1:
        raise ConfigError("must be >= 1", "urn.reps")
    if n < 0:
        raise ConfigError("need n >= 0", "urn.n")
    checkpoints = sorted({int(c) for c in checkpoints if 0 < int(c) < n})
    track = rm.index(track_first) if track_first is not None else None
    parts = []
    for b, start in enumerate(range(0, reps, BLOCK_SIZE)):
        size = min(BLOCK_SIZE, reps - start)
        parts.append(_urn_block(init, rm.additions, n, _Stream(block_rng(seed, b), size), set(checkpoints), track))
    counts = np.concatenate([p[0] for p in parts])
    snaps = {c: np.concatenate([p[1][c] for p in parts]) for c in checkpoints}
    return UrnBatch(
        colors=rm.colors, n=n, counts=counts, checkpoints=snaps,
        balance_violations=sum(p[2] for p in parts),
        count_min=np.concatenate([p[3] for p in parts]),
        count_max=np.concatenate([p[4] for p in parts]),
        first_draw=np.concatenate([p[5] for p in parts]) if track is not None else None,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# leading-order factorial moments
# ---------------------------------------------------------------------------


def _moment_common(color, l, n, a0, b0, t0, theta, delta):
    if l < 1:
        raise ConfigError("need l >= 1", "l")
    if not theta > delta >= 0:
        raise ConfigError(f"need theta > delta >= 0, got theta={theta}, delta={delta}", "delta")
    lam = theta - delta
    if color == "x":
        return theta ** l * pochhammer(a0 / theta, l) / pochhammer(t0 / theta, l) * float(n) ** l
    if color == "y":
        if delta == 0:
            raise DegenerateModelError("delta = 0: the y-count never changes")
        return (delta ** l * pochhammer(b0 / delta, l) / pochhammer(t0 / theta, l * delta / theta)
                * float(n) ** (l * delta / theta))
    if color == "w":
        # exponent as displayed (l * delta / theta); see the tests for how it
        # compares with the exact means
        return (lam ** l * pochhammer((t0 - a0) / theta, l) / pochhammer(t0 / theta, l * lam / theta)
                * float(n) ** (l * delta / theta))
    raise ConfigError(f"unknown color {color!r}", "color")


def factorial_moment_3(color: str, l: int, n, a0, b0, c0, theta, delta) -> float:
    """Leading term of ``E[(C_n)_l]`` for the 3-color urn, ``t0 = a0 + b0 + c0``."""
    t0 = a0 + b0 + c0
    return float(_moment_common(color, l, n, a0, b0, t0, theta, delta))


def factorial_moment_4(color: str, l: int, n, a0, d0, b0, c0, theta, delta, as_printed: bool = False) -> float:
    """Leading term of ``E[(C_n)_l]`` for the 4-color urn, ``t0 = a0 + d0 + b0 + c0``.

    The x-moment uses ``a0 + d0`` in place of ``a0``.  For ``u`` the count is
    constant, so the factorial moment is ``(d0)_l``; ``as_printed=True``
    returns ``d0`` for every ``l`` instead (the two agree at ``l = 1``).
    """
    t0 = a0 + d0 + b0 + c0
    if color == "u":
        if l < 1:
            raise ConfigError("need l >= 1", "l")
        return float(d0) if as_printed else float(falling_factorial(d0, l))
    if color == "x":
        return float(_moment_common("x", l, n, a0 + d0, b0, t0, theta, delta))
    return float(_moment_common(color, l, n, a0, b0, t0, theta, delta))
