"""Cooley-Tukey factorisation trees.

A :class:`Split` of size n1*n2 runs ``n1`` copies of its second child (the
n2-point first stage) followed by ``n2`` copies of its first child.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

from .errors import InvalidSizeError, UnfactorableError


@dataclass(frozen=True)
class Leaf:
    size: int

    @property
    def depth(self) -> int:
        return 0

    def leaves(self) -> list[int]:
        return [self.size]

    def __str__(self):
        return str(self.size)


@dataclass(frozen=True)
class Split:
    n1: int
    n2: int
    child1: "FactorPlan"
    child2: "FactorPlan"

    def __post_init__(self):
        if self.child1.size != self.n1 or self.child2.size != self.n2:
            raise InvalidSizeError(
                f"children cover {self.child1.size}x{self.child2.size}, "
                f"expected {self.n1}x{self.n2}")

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    @property
    def depth(self) -> int:
        return 1 + max(self.child1.depth, self.child2.depth)

    def leaves(self) -> list[int]:
        return self.child1.leaves() + self.child2.leaves()

    def __str__(self):
        return f"({self.child1} x {self.child2})"


FactorPlan = Union[Leaf, Split]


def leaf_sizes(plan: FactorPlan) -> set[int]:
    return set(plan.leaves())


def _is_pow2(n: int) -> bool:
    return n & (n - 1) == 0


@lru_cache(maxsize=None)
def _best(n: int, k_max: int):
    """Return (key, plan) minimising (leaf count, depth, imbalance, non-pow2, -n2)."""
    if n <= k_max:
        return (1, 0), Leaf(n)
    best_key, best_plan = None, None
    for n2 in range(2, int(math.isqrt(n)) + 1):
        if n % n2:
            continue
        for a, b in ((n // n2, n2), (n2, n // n2)):
            try:
                (l1, d1), c1 = _best(a, k_max)
                (l2, d2), c2 = _best(b, k_max)
            except UnfactorableError:
                continue
            key = (l1 + l2, 1 + max(d1, d2), abs(math.log(a) - math.log(b)),
                   not (_is_pow2(a) and _is_pow2(b)), -b)
            if best_key is None or key < best_key:
                best_key, best_plan = key, Split(a, b, c1, c2)
    if best_plan is None:
        raise UnfactorableError(f"{n} has a prime factor larger than k_max={k_max}")
    return best_key[:2], best_plan


def _balanced(factors: Sequence[int]) -> FactorPlan:
    if len(factors) == 1:
        return Leaf(int(factors[0]))
    half = len(factors) // 2
    c1, c2 = _balanced(factors[:half]), _balanced(factors[half:])
    return Split(c1.size, c2.size, c1, c2)


def plan_factorization(n: int, k_max: int,
                       strategy: str | Sequence[int] = "min-depth") -> FactorPlan:
    """Build a factorisation tree for an n-point transform.

    ``strategy="min-depth"`` picks the tree with the fewest leaves (fewest
    ADC passes), then the shallowest, then the most balanced split, preferring
    powers of two and a larger first-stage radix on ties.

    A sequence of factors ``[n1, n2, ...]`` is taken as given and assembled
    into a balanced tree, e.g. ``[16, 16]`` -> Split(16, 16).
    """
    if int(n) != n or n < 1 or k_max < 1:
        raise InvalidSizeError(f"need n >= 1 and k_max >= 1, got n={n}, k_max={k_max}")
    if isinstance(strategy, str):
        if strategy != "min-depth":
            raise ValueError(f"unknown strategy {strategy!r}")
        return _best(int(n), int(k_max))[1]
    factors = [int(f) for f in strategy]
    if not factors or any(f < 1 for f in factors):
        raise InvalidSizeError(f"bad factor list {factors}")
    if math.prod(factors) != n:
        raise InvalidSizeError(f"factors {factors} do not multiply to {n}")
    too_big = [f for f in factors if f > k_max]
    if too_big:
        raise UnfactorableError(f"factors {too_big} exceed k_max={k_max}")
    return _balanced(factors)


def plan_from_spec(spec) -> FactorPlan:
    """Parse nested lists like ``[[16, 16], [16, 16]]`` or a flat factor list."""
    if isinstance(spec, (Leaf, Split)):
        return spec
    if isinstance(spec, int):
        return Leaf(spec)
    if len(spec) == 1:
        return plan_from_spec(spec[0])
    if all(isinstance(s, int) for s in spec):
        return _balanced(list(spec))
    if len(spec) != 2:
        raise InvalidSizeError(f"nested plan nodes must have two children: {spec}")
    c1, c2 = plan_from_spec(spec[0]), plan_from_spec(spec[1])
    return Split(c1.size, c2.size, c1, c2)


def plan_to_spec(plan: FactorPlan):
    if isinstance(plan, Leaf):
        return plan.size
    return [plan_to_spec(plan.child1), plan_to_spec(plan.child2)]
