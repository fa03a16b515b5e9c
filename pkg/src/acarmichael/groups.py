"""Unit groups mod L: the Davenport-type constant n(L), its bounds, and subset-product solvers.

n(L) is taken over sets of distinct units: the least size forcing every such
set to contain a nonempty subset whose product is 1 mod L.
"""

from __future__ import annotations

import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from acarmichael.arith import (
    BudgetExceeded,
    NotAUnitError,
    carmichael_lambda,
    euler_phi,
    factor,
    primes_up_to,
)

logger = logging.getLogger(__name__)

EXHAUSTIVE_MAX = 25
# Exhaustive search keeps one entry per reachable (size, product) pair.
EXHAUSTIVE_STATE_CAP = 1 << 18
MEET_IN_MIDDLE_MAX = 40
COUNT_MAX = 25
DEFAULT_EXACT_CAP = 20
DEFAULT_RANDOM_BUDGET = 200_000
STRATEGIES = ("auto", "exhaustive", "meet_in_middle", "randomized")


class SearchInfeasible(BudgetExceeded):
    """Raised when an exhaustive search would exceed its size cap."""


class SizeCapExceeded(BudgetExceeded):
    """Raised when an exact count is requested for too many elements."""


class NonUnitElement(NotAUnitError):
    """Raised when an element handed to a subset solver is not a unit."""

    def __init__(self, index: int, u: int, n: int):
        self.index = index
        super().__init__(u, n)
        self.args = (f"element #{index} ({u}) is not a unit mod {n} (gcd = {self.gcd})",)


@dataclass(frozen=True)
class GroupBoundReport:
    L: int
    lam: int
    eq1_bound: float
    n_exact: Optional[int] = None
    log_e3y_bound: Optional[float] = None

    @property
    def e3y_bound(self) -> Optional[float]:
        if self.log_e3y_bound is None:
            return None
        try:
            return math.exp(self.log_e3y_bound)
        except OverflowError:
            return math.inf

    def to_dict(self) -> dict:
        data = {"L": self.L, "lambda": self.lam, "eq1_bound": self.eq1_bound}
        if self.n_exact is not None:
            data["n_exact"] = self.n_exact
        if self.log_e3y_bound is not None:
            data["e3y_bound"] = self.e3y_bound
        return data


@dataclass(frozen=True)
class LambdaSmoothBound:
    """The chain ``lambda(L) <= prod r^a_r <= e^(2 y theta)`` at concrete ``y``, ``theta``."""

    y: int
    theta: float
    exact_product: int
    log_bound: float
    lam: Optional[int] = None

    @property
    def bound(self) -> float:
        try:
            return math.exp(self.log_bound)
        except OverflowError:
            return math.inf

    @property
    def chain_holds(self) -> bool:
        if self.lam is not None and self.lam > self.exact_product:
            return False
        return math.log(self.exact_product) <= self.log_bound

    def to_dict(self) -> dict:
        return {
            "y": self.y,
            "theta": self.theta,
            "exact_product": self.exact_product,
            "bound": self.bound,
            "lambda": self.lam,
            "chain_holds": self.chain_holds,
        }


@dataclass(frozen=True)
class SubsetSolution:
    modulus: int
    elements: tuple
    chosen: tuple
    product_check: bool

    @property
    def chosen_elements(self) -> list[int]:
        return [self.elements[i] for i in self.chosen]

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "chosen": list(self.chosen),
            "elements": self.chosen_elements,
            "product_check": self.product_check,
        }


@dataclass(frozen=True)
class SubsetCount:
    count: int
    r: int
    window: tuple
    t: Optional[int] = None
    n: Optional[int] = None
    binom_lower: Optional[Fraction] = None

    @property
    def holds(self) -> bool:
        return self.binom_lower is None or self.count >= self.binom_lower


def eq1_bound(
    L: int,
    *,
    exact_cap: Optional[int] = None,
    y: Optional[int] = None,
    theta: Optional[float] = None,
) -> GroupBoundReport:
    """lambda(L) and the bound ``lambda(L) (1 + log(L / lambda(L)))`` on n(L), natural log.

    With ``exact_cap`` the exact n(L) is added when phi(L) fits; with ``y``
    and ``theta`` the coarser ``e^(3 y theta)`` bound is attached.
    """
    if L < 2:
        raise ValueError(f"eq1_bound() requires L >= 2, got {L}")
    fac = factor(L)
    lam = carmichael_lambda(L, fac)
    bound = lam * (1 + math.log(L) - math.log(lam))
    exact = None
    if exact_cap is not None and euler_phi(L, fac) <= exact_cap:
        exact = n_exact(L, exact_cap)
    log_e3y = 3 * y * theta if y is not None and theta is not None else None
    return GroupBoundReport(L, lam, bound, exact, log_e3y)


def lambda_smooth_bound(y: int, theta: float, L: Optional[int] = None) -> LambdaSmoothBound:
    """``e^(2 y theta)`` together with ``prod_{r <= y} r^a_r`` (a_r maximal with ``r^a_r <= y^theta``)."""
    if y < 2:
        raise ValueError(f"y must be >= 2, got {y}")
    if not 1 < theta < 2:
        raise ValueError(f"theta must satisfy 1 < theta < 2, got {theta}")
    target = y**theta
    product = 1
    for r in primes_up_to(y).tolist():
        power = r
        while power * r <= target:
            power *= r
        product *= power
    lam = carmichael_lambda(L) if L is not None else None
    return LambdaSmoothBound(y, theta, product, 2 * y * theta, lam)


def _units(L: int) -> list[int]:
    return [u for u in range(1, L) if math.gcd(u, L) == 1]


def n_exact(L: int, size_cap: int = DEFAULT_EXACT_CAP) -> int:
    """Exact n(L) by depth-first search for the largest product-one-free set of distinct units."""
    if L < 2:
        raise ValueError(f"n_exact() requires L >= 2, got {L}")
    phi = euler_phi(L)
    if phi > size_cap:
        raise SearchInfeasible(f"phi({L}) = {phi} exceeds the exhaustive search cap {size_cap}")

    candidates = [u for u in _units(L) if u != 1]
    best = 0

    def extend(start: int, size: int, reach: frozenset) -> None:
        nonlocal best
        best = max(best, size)
        for i in range(start, len(candidates)):
            if size + len(candidates) - i <= best:
                return
            u = candidates[i]
            fresh = {u} | {x * u % L for x in reach}
            if 1 in fresh:
                continue
            extend(i + 1, size + 1, reach | fresh)

    extend(0, 0, frozenset())
    logger.debug("n(%d) = %d", L, best + 1)
    return best + 1


def _validate_units(elements: Sequence[int], M: int) -> list[int]:
    if M < 2:
        raise ValueError(f"Modulus must be >= 2, got {M}")
    for i, e in enumerate(elements):
        if math.gcd(e, M) != 1:
            raise NonUnitElement(i, e, M)
    return [e % M for e in elements]


def _resolve_window(size_window: Optional[tuple], r: int) -> tuple[int, int]:
    lo, hi = size_window if size_window is not None else (1, r)
    return max(lo, 1), min(hi, r)


def select_strategy(r: int, M: int) -> str:
    if r <= EXHAUSTIVE_MAX and min(1 << r, M * (r + 1)) <= EXHAUSTIVE_STATE_CAP:
        return "exhaustive"
    if r <= MEET_IN_MIDDLE_MAX:
        return "meet_in_middle"
    return "randomized"


def _exhaustive(xs: list[int], M: int, lo: int, hi: int) -> Optional[tuple]:
    # layers[s] maps each product reachable with s elements to the first index tuple reaching it.
    layers: list[dict] = [{1: ()}] + [{} for _ in range(hi)]
    for i, x in enumerate(xs):
        for s in range(min(i, hi - 1), -1, -1):
            target = layers[s + 1]
            for prod, idx in layers[s].items():
                q = prod * x % M
                if q not in target:
                    target[q] = idx + (i,)
    for s in range(lo, hi + 1):
        if 1 in layers[s]:
            return layers[s][1]
    return None


def _subset_products(values: list[int], M: int) -> list[int]:
    prods = [1] * (1 << len(values))
    for mask in range(1, len(prods)):
        low = mask & -mask
        prods[mask] = prods[mask ^ low] * values[low.bit_length() - 1] % M
    return prods


def _meet_in_middle(xs: list[int], M: int, lo: int, hi: int) -> Optional[tuple]:
    half = len(xs) // 2
    left, right = xs[:half], xs[half:]

    table: dict[int, dict[int, int]] = {}
    for mask, prod in enumerate(_subset_products(right, M)):
        sizes = table.setdefault(prod, {})
        sizes.setdefault(bin(mask).count("1"), mask)

    for mask, prod in enumerate(_subset_products(left, M)):
        size = bin(mask).count("1")
        sizes = table.get(pow(prod, -1, M))
        if not sizes:
            continue
        for other in sorted(sizes):
            if lo <= size + other <= hi:
                right_mask = sizes[other]
                chosen = [i for i in range(half) if mask >> i & 1]
                chosen += [half + j for j in range(len(right)) if right_mask >> j & 1]
                return tuple(chosen)
    return None


def _randomized(xs: list[int], M: int, lo: int, hi: int, seed: int, budget: int) -> Optional[tuple]:
    rng = random.Random(seed)
    indices = range(len(xs))
    for _ in range(budget):
        chosen = sorted(rng.sample(indices, rng.randint(lo, hi)))
        if math.prod(xs[i] for i in chosen) % M == 1:
            return tuple(chosen)
    return None


def find_subset_product_one(
    elements: Sequence[int],
    M: int,
    strategy: str = "auto",
    size_window: Optional[tuple] = None,
    seed: int = 0,
    budget: int = DEFAULT_RANDOM_BUDGET,
) -> Optional[SubsetSolution]:
    """A nonempty subset of ``elements`` whose product is 1 mod ``M``.

    ``exhaustive`` and ``meet_in_middle`` return None only after exhausting
    the search space; ``randomized`` after ``budget`` seeded samples. ``auto``
    picks by size (<= 25 exhaustive while the state table stays small,
    <= 40 meet-in-the-middle, else randomized). The size window bounds the
    subset size inclusively.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"Unknown strategy '{strategy}'. Must be one of: {', '.join(STRATEGIES)}")
    xs = _validate_units(elements, M)
    lo, hi = _resolve_window(size_window, len(xs))
    if not xs or lo > hi:
        return None
    if strategy == "auto":
        strategy = select_strategy(len(xs), M)

    if strategy == "exhaustive":
        chosen = _exhaustive(xs, M, lo, hi)
    elif strategy == "meet_in_middle":
        chosen = _meet_in_middle(xs, M, lo, hi)
    else:
        chosen = _randomized(xs, M, lo, hi, seed, budget)

    logger.debug("subset search (%s) over %d elements mod %d: %s", strategy, len(xs), M, chosen)
    if chosen is None:
        return None
    check = math.prod(xs[i] for i in chosen) % M == 1
    return SubsetSolution(M, tuple(elements), chosen, check)


def count_subset_solutions(
    elements: Sequence[int],
    M: int,
    size_window: Optional[tuple] = None,
    t: Optional[int] = None,
    n: Optional[int] = None,
) -> SubsetCount:
    """Exact number of subsets with product 1 mod ``M`` inside the size window.

    When ``t`` and ``n`` are given the window defaults to ``[t - n, t]`` and
    the lower bound ``C(r, t) / C(r, n)`` is attached for comparison.
    """
    r = len(elements)
    if r > COUNT_MAX:
        raise SizeCapExceeded(f"Exact counting is capped at {COUNT_MAX} elements, got {r}")
    xs = _validate_units(elements, M)
    if size_window is None and t is not None and n is not None:
        size_window = (t - n, t)
    lo, hi = _resolve_window(size_window, r)

    layers = [Counter({1: 1})] + [Counter() for _ in range(r)]
    for i, x in enumerate(xs):
        for s in range(i, -1, -1):
            for prod, ways in layers[s].items():
                layers[s + 1][prod * x % M] += ways
    count = sum(layers[s][1] for s in range(lo, hi + 1))

    lower = None
    if t is not None and n is not None:
        lower = Fraction(math.comb(r, t), math.comb(r, n))
    return SubsetCount(count, r, (lo, hi), t, n, lower)


def kkprime_lambda_check(L: int, k: int, kprime: int) -> bool:
    """``lambda(k k' L)`` divides ``lambda(k) lambda(k') lambda(L) gcd(k, k') gcd(k k', L)``.

    For pairwise coprime ``k, k', L`` the gcd factors are 1 and this is the
    plain ``lambda(k k' L) | lambda(k) lambda(k') lambda(L)``. Shared prime
    factors need them: ``lambda(9) = 6`` does not divide ``lambda(3)^2 = 4``.
    """
    if min(L, k, kprime) < 1:
        raise ValueError(f"L, k and k' must be positive, got {L}, {k}, {kprime}")
    combined = carmichael_lambda(k * kprime * L)
    product = carmichael_lambda(k) * carmichael_lambda(kprime) * carmichael_lambda(L)
    return (product * math.gcd(k, kprime) * math.gcd(k * kprime, L)) % combined == 0
