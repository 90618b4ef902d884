"""ADC precision arrangements on a ULA and the dispersion score that ranks them.

Positions are 1-based in every public signature (``m``, ``n`` and returned
position tuples); weight vectors are ordinary 0-based numpy arrays.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

ONE_BIT_WEIGHT = 2 / np.pi
DEFAULT_BUDGET = 10**7


@dataclass(frozen=True, eq=False)
class Arrangement:
    """Per-element precision weights ``g``.

    Two-level arrangements use ``g_i = 1`` (high precision) or ``2/pi``
    (one-bit).  Any weight in (0, 1] is accepted for multi-precision use.
    """

    weights: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.weights, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(~np.isfinite(g)) or np.any(g <= 0) or np.any(g > 1):
            raise ValueError(f"weights must lie in (0, 1], got {g}")
        object.__setattr__(self, "weights", g)

    @classmethod
    def from_indicator(cls, delta) -> "Arrangement":
        delta = np.asarray(delta)
        if delta.ndim != 1 or not np.all((delta == 0) | (delta == 1)):
            raise ValueError(f"indicator must be a 0/1 vector, got {delta}")
        return cls(np.where(delta == 1, 1.0, ONE_BIT_WEIGHT))

    @classmethod
    def high_precision(cls, M: int) -> "Arrangement":
        return cls(np.ones(M))

    @classmethod
    def one_bit(cls, M: int) -> "Arrangement":
        return cls(np.full(M, ONE_BIT_WEIGHT))

    @property
    def M(self) -> int:
        return self.weights.size

    @property
    def delta(self) -> np.ndarray:
        return (self.weights == 1.0).astype(int)

    @property
    def delta_bar(self) -> np.ndarray:
        return 1 - self.delta

    @property
    def M0(self) -> int:
        return int(self.delta.sum())

    @property
    def M1(self) -> int:
        return self.M - self.M0

    @property
    def is_two_level(self) -> bool:
        return bool(np.all((self.weights == 1.0) | (self.weights == ONE_BIT_WEIGHT)))

    @property
    def total_weight(self) -> float:
        """M0 + (2/pi) M1 for two-level arrangements."""
        if self.is_two_level:
            return self.M0 + ONE_BIT_WEIGHT * self.M1
        return float(self.weights.sum())

    def high_positions(self) -> tuple[int, ...]:
        return tuple(int(i) + 1 for i in np.flatnonzero(self.delta))

    def bits(self) -> str:
        return "".join(str(d) for d in self.delta)

    def __repr__(self):
        if self.is_two_level:
            return f"Arrangement(bits={self.bits()!r})"
        return f"Arrangement(weights={self.weights.tolist()!r})"


def _as_weights(g) -> np.ndarray:
    if isinstance(g, Arrangement):
        return g.weights
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("weight vector must be non-empty")
    if np.any(g <= 0):
        raise ValueError("weights must be positive")
    return g


def dispersion_score(g) -> float:
    """Weighted positional spread sum(g i^2) sum(g) - (sum(g i))^2, i = 0..M-1."""
    g = _as_weights(g)
    # S is translation invariant, so centre the positions; with exactly
    # rounded sums the value is then bit-identical under reversal.
    pos = np.arange(g.size, dtype=float) - (g.size - 1) / 2
    return math.fsum(g * pos**2) * math.fsum(g) - math.fsum(g * pos) ** 2


def dispersion_score_pairwise(g) -> float:
    """Pairwise form sum_{i<j} g_i g_j (j - i)^2; independent check of
    :func:`dispersion_score`."""
    g = _as_weights(g)
    total = 0.0
    for i in range(g.size):
        for j in range(i + 1, g.size):
            total += g[i] * g[j] * (j - i) ** 2
    return total


def _indicator_from_positions(M, positions):
    delta = np.zeros(M, dtype=int)
    delta[np.asarray(positions, dtype=int) - 1] = 1
    return delta


def _check_counts(M, M0):
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    if not 0 <= M0 <= M:
        raise ValueError(f"need 0 <= M0 <= M, got M0={M0}, M={M}")


def optimal_two_level(M: int, M0: int) -> Arrangement:
    """High-precision ADCs split over both array edges, left edge first."""
    _check_counts(M, M0)
    left = (M0 + 1) // 2
    right = M0 // 2
    positions = list(range(1, left + 1)) + list(range(M - right + 1, M + 1))
    return Arrangement.from_indicator(_indicator_from_positions(M, positions))


def left_block(M: int, M0: int) -> Arrangement:
    _check_counts(M, M0)
    return Arrangement.from_indicator(_indicator_from_positions(M, range(1, M0 + 1)))


def center_block(M: int, M0: int) -> Arrangement:
    _check_counts(M, M0)
    start = (M - M0) // 2 + 1
    return Arrangement.from_indicator(_indicator_from_positions(M, range(start, start + M0)))


@dataclass(frozen=True)
class BruteForceResult:
    max_score: float
    argmax: tuple[tuple[int, ...], ...]  # 1-based high-precision positions, lexicographic
    evaluated: int

    def arrangements(self, M: int) -> list[Arrangement]:
        return [Arrangement.from_indicator(_indicator_from_positions(M, p)) for p in self.argmax]


class BudgetExceeded(ValueError):
    def __init__(self, count, budget):
        super().__init__(f"{count} placements exceed the enumeration budget of {budget}")
        self.count = count
        self.budget = budget


def brute_force_two_level(M: int, M0: int, budget: int = DEFAULT_BUDGET,
                          rtol: float = 1e-12, chunk: int = 1 << 16) -> BruteForceResult:
    """Exhaustively score every placement of M0 high-precision ADCs.

    The score only depends on the sums of chosen positions and squared
    positions, so each placement costs O(M0).
    """
    _check_counts(M, M0)
    count = math.comb(M, M0)
    if count > budget:
        raise BudgetExceeded(count, budget)
    c = ONE_BIT_WEIGHT
    pos = np.arange(M, dtype=float)
    W = M0 + c * (M - M0)
    base_L = c * pos.sum()
    base_Q = c * (pos**2).sum()

    best = -np.inf
    candidates: list[tuple[float, tuple[int, ...]]] = []
    combos = itertools.combinations(range(M), M0)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        idx = np.array(block, dtype=float).reshape(len(block), M0)
        L = base_L + (1 - c) * idx.sum(axis=1)
        Q = base_Q + (1 - c) * (idx**2).sum(axis=1)
        scores = Q * W - L**2
        best = max(best, float(scores.max()))
        cutoff = best - rtol * max(abs(best), 1.0)
        for k in np.flatnonzero(scores >= cutoff):
            candidates.append((float(scores[k]), tuple(int(i) + 1 for i in block[k])))
    cutoff = best - rtol * max(abs(best), 1.0)
    ties = tuple(p for s, p in candidates if s >= cutoff)
    return BruteForceResult(best, ties, count)


def half_count(M0: int) -> int:
    """floor((M0 + 1) / 2), the size of the left high-precision block."""
    return (M0 + 1) // 2


def swap_potential(g, m: int, n: int) -> float:
    """sum over j != m, n of g_j (2j - m - n), 1-based."""
    g = _as_weights(g)
    j = np.arange(1, g.size + 1)
    keep = (j != m) & (j != n)
    return float(np.sum(g[keep] * (2 * j[keep] - m - n)))


def swap_gain(g, m: int, n: int) -> float:
    """Change in dispersion score when the one-bit ADC at ``m`` and the
    high-precision ADC at ``n`` trade places (closed form)."""
    g = _as_weights(g)
    M = g.size
    if not (1 <= m <= M and 1 <= n <= M) or m == n:
        raise ValueError(f"positions must be distinct and in 1..{M}, got m={m}, n={n}")
    if not (np.isclose(g[m - 1], ONE_BIT_WEIGHT, rtol=0, atol=1e-15) and g[n - 1] == 1.0):
        raise ValueError("swap_gain needs a one-bit ADC at m and a high-precision ADC at n")
    return (1 - ONE_BIT_WEIGHT) * (n - m) * swap_potential(g, m, n)


def swapped(g, m: int, n: int) -> np.ndarray:
    g = np.array(_as_weights(g))
    g[[m - 1, n - 1]] = g[[n - 1, m - 1]]
    return g


def edge_first_order(M: int) -> list[int]:
    """Positions 1, M, 2, M-1, ... (decreasing distance from the center, left first)."""
    order = []
    lo, hi = 1, M
    while lo <= hi:
        order.append(lo)
        if hi != lo:
            order.append(hi)
        lo += 1
        hi -= 1
    return order


def greedy_multi_precision(weights, M: int | None = None) -> Arrangement:
    """Highest weights go to the outermost positions, alternating sides.

    Heuristic: optimality is only established for two-level weights.
    """
    w = np.sort(np.asarray(weights, dtype=float))[::-1]
    if M is not None and w.size != M:
        raise ValueError(f"got {w.size} weights for {M} positions")
    g = np.empty_like(w)
    g[np.array(edge_first_order(w.size)) - 1] = w
    return Arrangement(g)


def parse_arrangement(text: str, M: int) -> Arrangement:
    """``edges:K``, ``left:K``, ``center:K`` or ``bits:0101...``."""
    kind, sep, arg = text.partition(":")
    if not sep:
        raise ValueError(f"arrangement {text!r} is not of the form kind:value")
    kind = kind.strip().lower()
    if kind == "bits":
        bits = arg.strip()
        if len(bits) != M or set(bits) - {"0", "1"}:
            raise ValueError(f"bits:{bits} must be {M} characters of 0/1")
        return Arrangement.from_indicator(np.array([int(b) for b in bits]))
    builders = {"edges": optimal_two_level, "left": left_block, "center": center_block}
    if kind not in builders:
        raise ValueError(f"unknown arrangement kind {kind!r}")
    try:
        count = int(arg)
    except ValueError:
        raise ValueError(f"arrangement count {arg!r} is not an integer") from None
    return builders[kind](M, count)


def _multiset_permutations(values):
    """Distinct orderings of ``values``, each produced once."""
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    keys = sorted(counts, reverse=True)
    prefix: list[float] = []

    def rec():
        if len(prefix) == len(values):
            yield tuple(prefix)
            return
        for k in keys:
            if counts[k]:
                counts[k] -= 1
                prefix.append(k)
                yield from rec()
                prefix.pop()
                counts[k] += 1

    yield from rec()


def brute_force_multi(weights, budget: int = DEFAULT_BUDGET, rtol: float = 1e-12):
    """Best dispersion score over all distinct orderings of a weight multiset.

    Returns ``(max_score, argmax_weight_tuples)``.
    """
    w = [float(x) for x in weights]
    count = math.factorial(len(w))
    for v in set(w):
        count //= math.factorial(w.count(v))
    if count > budget:
        raise BudgetExceeded(count, budget)
    scored = [(dispersion_score(np.array(p)), p) for p in _multiset_permutations(w)]
    best = max(s for s, _ in scored)
    cutoff = best - rtol * max(abs(best), 1.0)
    return best, tuple(p for s, p in scored if s >= cutoff)
