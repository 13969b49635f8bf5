"""Exact Shapley factorization of a nonlinearity applied to a sum of components.

Given sigma(z_1 + ... + z_N), each component receives its exact Shapley value
computed by full subset enumeration, elementwise over the vectors. The
baseline sigma(0) is returned separately; callers decide where it goes.
Efficiency holds by construction: sum of contributions + baseline equals
sigma(sum of all components).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import factorial

import numpy as np

from .numerics import activation

MAX_PLAYERS = 8


@dataclass
class SumGame:
    """Named components summed inside a scalar nonlinearity."""

    components: list[tuple[str, np.ndarray]]
    nonlinearity: str  # sigmoid | tanh | gelu

    def __post_init__(self):
        n = len(self.components)
        if not 1 <= n <= MAX_PLAYERS:
            raise ValueError(f"need 1..{MAX_PLAYERS} components, got {n}")
        names = [name for name, _ in self.components]
        if len(set(names)) != len(names):
            raise ValueError(f"component names must be unique, got {names}")
        lengths = {vec.shape for _, vec in self.components}
        if len(lengths) != 1:
            raise ValueError(f"component vectors differ in shape: {lengths}")


def _subset_values(game: SumGame) -> list[np.ndarray]:
    """sigma(sum of subset) for every bitmask over the components."""
    vectors = [vec for _, vec in game.components]
    dim = vectors[0].shape[0]
    sums = [np.zeros(dim)]
    for mask in range(1, 1 << len(vectors)):
        low = mask & (mask - 1)
        bit = (mask ^ low).bit_length() - 1
        sums.append(sums[low] + vectors[bit])
    return [activation(game.nonlinearity, s) for s in sums]


def exact_shapley(game: SumGame) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Exact Shapley contributions per component, plus the sigma(0) baseline."""
    n = len(game.components)
    values = _subset_values(game)
    full = (1 << n) - 1
    fact = [factorial(k) for k in range(n + 1)]
    contributions: dict[str, np.ndarray] = {}
    for i, (name, _) in enumerate(game.components):
        bit = 1 << i
        others = full ^ bit
        phi = np.zeros_like(values[0])
        sub = others
        while True:
            size = bin(sub).count("1")
            weight = fact[size] * fact[n - 1 - size] / fact[n]
            phi = phi + weight * (values[sub | bit] - values[sub])
            if sub == 0:
                break
            sub = (sub - 1) & others
        contributions[name] = phi
    return contributions, values[0]


def shapley_oracle_permutations(game: SumGame) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Independent oracle: average marginal contributions over all N! orderings."""
    n = len(game.components)
    values = _subset_values(game)
    totals = [np.zeros_like(values[0]) for _ in range(n)]
    count = 0
    for order in permutations(range(n)):
        mask = 0
        for i in order:
            bit = 1 << i
            totals[i] = totals[i] + (values[mask | bit] - values[mask])
            mask |= bit
        count += 1
    contributions = {
        name: totals[i] / count for i, (name, _) in enumerate(game.components)
    }
    return contributions, values[0]
