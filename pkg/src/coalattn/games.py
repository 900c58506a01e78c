"""Coalition games over token subsets.

A coalition is a set of token indices stored as a bitmask (bit ``i`` set
means token ``i`` is a member).  Two characteristic-function families are
provided:

``TabularGame``
    an explicit table of ``2**n`` values indexed by bitmask, used for
    fixtures and as the ground-truth substrate for the exact oracles;

``EmbeddingGame``
    the energy form ``v(C) = f(||sum_{i in C} x_i @ W_v||_2)`` with ``f`` a
    mild nonlinearity, which is what the attention pipeline evaluates.

Both expose the same evaluation interface (``n``, ``value_by_mask``,
``values_by_mask``) so oracles and estimators are agnostic to the family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .linalg import as_matrix

__all__ = [
    "MAX_TOKENS",
    "TABULAR_MAX_TOKENS",
    "Coalition",
    "GibbsTarget",
    "TabularGame",
    "EmbeddingGame",
    "CountingGame",
    "characteristic_value",
    "coalition_energy",
    "log_gibbs_weight",
    "gibbs_unnormalized_weight",
    "marginal_contribution",
    "pairwise_delta",
    "tabulate",
    "monotonicity_violations",
]

MAX_TOKENS = 64           # coalition masks are 64-bit
TABULAR_MAX_TOKENS = 20   # 2**20 table entries

NONLINEARITIES = ("relu", "tanh", "identity")

# largest x with math.exp(x) still finite in float64
_MAX_EXP = 709.0


@dataclass(frozen=True)
class Coalition:
    """Subset of the token indices ``0..n-1``, stored as a bitmask."""

    mask: int
    n: int

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_TOKENS:
            raise ValueError(f"coalition: token count must be in 1..{MAX_TOKENS}, got {self.n}")
        if not 0 <= self.mask < (1 << self.n):
            raise ValueError(f"coalition: mask {self.mask:#x} has bits outside 0..{self.n - 1}")

    @classmethod
    def empty(cls, n: int) -> "Coalition":
        return cls(0, n)

    @classmethod
    def full(cls, n: int) -> "Coalition":
        return cls((1 << n) - 1, n)

    @classmethod
    def from_members(cls, members: Iterable[int], n: int) -> "Coalition":
        mask = 0
        for i in members:
            if not 0 <= i < n:
                raise ValueError(f"coalition: member {i} outside 0..{n - 1}")
            mask |= 1 << i
        return cls(mask, n)

    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if (self.mask >> i) & 1)

    def with_token(self, i: int) -> "Coalition":
        if not 0 <= i < self.n:
            raise ValueError(f"coalition: token {i} outside 0..{self.n - 1}")
        return Coalition(self.mask | (1 << i), self.n)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.n and bool((self.mask >> i) & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members())


@dataclass(frozen=True)
class GibbsTarget:
    """Temperature of the coalition target distribution ``∝ exp(v(C)/gamma)``."""

    gamma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gibbs target: gamma must be positive and finite, got {self.gamma}")


class TabularGame:
    """Characteristic function given explicitly as a table of ``2**n`` values.

    ``values[mask]`` is the value of the coalition with that bitmask; the
    empty coalition must have value exactly 0.  An optional ``bound`` asserts
    ``|v(C)| <= bound`` for every coalition at construction time.
    """

    def __init__(self, values, bound: float | None = None):
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("tabular game: values must be a flat array")
        size = arr.size
        if size < 2 or size & (size - 1):
            raise ValueError(f"tabular game: table length must be a power of two >= 2, got {size}")
        n = size.bit_length() - 1
        if n > TABULAR_MAX_TOKENS:
            raise ValueError(f"tabular game: at most {TABULAR_MAX_TOKENS} tokens (got {n})")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tabular game: all values must be finite")
        if arr[0] != 0.0:
            raise ValueError(f"tabular game: empty coalition must have value 0, got {arr[0]}")
        if bound is not None and np.max(np.abs(arr)) > bound:
            raise ValueError(f"tabular game: values exceed the declared bound {bound}")
        arr.flags.writeable = False
        self._values = arr
        self.n = n
        self.bound = bound

    def value_by_mask(self, mask: int) -> float:
        if not 0 <= mask < self._values.size:
            raise ValueError(f"tabular game: mask {mask:#x} out of range for n={self.n}")
        return float(self._values[mask])

    def values_by_mask(self, masks: np.ndarray) -> np.ndarray:
        return self._values[np.asarray(masks).astype(np.int64)]

    @property
    def table(self) -> np.ndarray:
        return self._values


class EmbeddingGame:
    """Energy-based characteristic function over projected embeddings.

    ``v(C) = f(||sum_{i in C} x_i @ W_v||_2)`` where ``embeddings`` is the
    ``n x d`` matrix with one token per row, ``value_projection`` is
    ``d x d_v`` (row-vector convention), and ``f`` is one of ``relu``,
    ``tanh`` or ``identity``.  Since norms are nonnegative, ``relu`` acts as
    the identity on them; it is kept as the default for symmetry with the
    other nonlinearities.
    """

    def __init__(self, embeddings, value_projection, nonlinearity: str = "relu"):
        x = as_matrix(embeddings, "embeddings")
        w = as_matrix(value_projection, "value_projection")
        n, d = x.shape
        if n > MAX_TOKENS:
            raise ValueError(f"embedding game: at most {MAX_TOKENS} tokens (got {n})")
        if w.shape[0] != d:
            raise ValueError(
                f"embedding game: value projection has {w.shape[0]} rows, embeddings have width {d}"
            )
        if nonlinearity not in NONLINEARITIES:
            raise ValueError(f"embedding game: unknown nonlinearity {nonlinearity!r}")
        self.embeddings = x.copy()
        self.embeddings.flags.writeable = False
        projected = x @ w
        projected.flags.writeable = False
        self.projected = projected   # n x d_v, row i is the value vector of token i
        self.nonlinearity = nonlinearity
        self.n = n

    def _apply_nonlinearity(self, norms: np.ndarray) -> np.ndarray:
        if self.nonlinearity == "relu":
            return np.maximum(norms, 0.0)
        if self.nonlinearity == "tanh":
            return np.tanh(norms)
        return norms

    def values_by_mask(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.uint64)
        bits = np.arange(self.n, dtype=np.uint64)
        membership = ((masks[:, None] >> bits[None, :]) & np.uint64(1)).astype(np.float64)
        sums = membership @ self.projected
        norms = np.linalg.norm(sums, axis=1)
        return self._apply_nonlinearity(norms)

    def value_by_mask(self, mask: int) -> float:
        if not 0 <= mask < (1 << self.n):
            raise ValueError(f"embedding game: mask {mask:#x} out of range for n={self.n}")
        return float(self.values_by_mask(np.array([mask], dtype=np.uint64))[0])


class CountingGame:
    """Wrapper that counts characteristic-function evaluations.

    Used by the benchmark harness; the wrapped game stays untouched so the
    core games remain pure.
    """

    def __init__(self, game):
        self._game = game
        self.evaluations = 0

    @property
    def n(self) -> int:
        return self._game.n

    def value_by_mask(self, mask: int) -> float:
        self.evaluations += 1
        return self._game.value_by_mask(mask)

    def values_by_mask(self, masks: np.ndarray) -> np.ndarray:
        self.evaluations += int(np.asarray(masks).size)
        return self._game.values_by_mask(masks)


def _check_coalition(game, c: Coalition) -> None:
    if c.n != game.n:
        raise ValueError(f"coalition is over {c.n} tokens but the game has {game.n}")


def characteristic_value(game, c: Coalition) -> float:
    """Value v(C) of a coalition under either game family."""
    _check_coalition(game, c)
    return game.value_by_mask(c.mask)


def coalition_energy(game, c: Coalition) -> float:
    """Coalition energy, the negated characteristic value."""
    return -characteristic_value(game, c)


def log_gibbs_weight(game, c: Coalition, target: GibbsTarget) -> float:
    """log of the unnormalized Gibbs weight, v(C)/gamma; never overflows."""
    return characteristic_value(game, c) / target.gamma


def gibbs_unnormalized_weight(game, c: Coalition, target: GibbsTarget) -> float:
    """Unnormalized Gibbs weight exp(v(C)/gamma), strictly positive.

    The exponent is formed in log space first; results beyond float64 range
    saturate to ``inf`` instead of raising.  Downstream weight normalization
    works entirely on the log scale and never calls this.
    """
    lw = log_gibbs_weight(game, c, target)
    if lw > _MAX_EXP:
        return math.inf
    return math.exp(lw)


def marginal_contribution(game, i: int, c: Coalition) -> float:
    """v(C + {i}) - v(C) for a token i outside C."""
    _check_coalition(game, c)
    if i in c:
        raise ValueError(f"marginal contribution: token {i} already in the coalition")
    with_i = c.with_token(i)
    return game.value_by_mask(with_i.mask) - game.value_by_mask(c.mask)


def pairwise_delta(game, i: int, j: int, c: Coalition) -> float:
    """Second difference v(C+{i,j}) - v(C+{i}) - v(C+{j}) + v(C).

    Symmetric in (i, j) by construction; the context C must contain neither
    token.
    """
    _check_coalition(game, c)
    if i == j:
        raise ValueError("pairwise delta: tokens must be distinct")
    if i in c or j in c:
        raise ValueError("pairwise delta: context must exclude both tokens")
    m = c.mask
    # canonical token order keeps the arithmetic bitwise-symmetric in (i, j)
    lo, hi = (i, j) if i < j else (j, i)
    bl, bh = 1 << lo, 1 << hi
    return (
        game.value_by_mask(m | bl | bh)
        - game.value_by_mask(m | bl)
        - game.value_by_mask(m | bh)
        + game.value_by_mask(m)
    )


def tabulate(game, chunk: int = 1 << 16) -> np.ndarray:
    """Evaluate every coalition of a game into a mask-indexed table."""
    if isinstance(game, TabularGame):
        return game.table
    size = 1 << game.n
    out = np.empty(size, dtype=np.float64)
    for start in range(0, size, chunk):
        stop = min(start + chunk, size)
        out[start:stop] = game.values_by_mask(np.arange(start, stop, dtype=np.uint64))
    return out


def monotonicity_violations(game: TabularGame) -> int:
    """Count of (C, C+{i}) pairs where adding a token decreases the value.

    Monotonicity is not guaranteed by every characteristic function, so the
    engine treats it as an optional check rather than an invariant; callers
    typically log a warning when the count is nonzero.
    """
    table = game.table
    count = 0
    masks = np.arange(table.size, dtype=np.int64)
    for i in range(game.n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        count += int(np.sum(table[without | bit] < table[without]))
    return count
