"""Exact integer arithmetic: primality, factorization, smoothness and unit-group orders.

Every other module builds on these functions. All of them are pure; the sieve
helpers cache read-only numpy arrays, so they are safe to share across threads.
"""

from __future__ import annotations

import logging
import math
import random
import time
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

logger = logging.getLogger(__name__)

# Miller-Rabin with the first twelve prime bases is exact below this bound (> 2^78).
DETERMINISTIC_LIMIT = 318_665_857_834_031_151_167_461
_DETERMINISTIC_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
DEFAULT_ROUNDS = 40

# Trial division covers every prime below this bound, so a cofactor left
# after trial division that is below its square is prime.
_TRIAL_LIMIT = 1 << 16
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


class BudgetExceeded(Exception):
    """Raised when a configured resource budget runs out before an answer is found."""


class FactorizationBudgetExceeded(BudgetExceeded):
    """Raised when factor() exceeds its digit or time budget."""


class NotAUnitError(ValueError):
    """Raised when a value is not invertible modulo the given modulus."""

    def __init__(self, u: int, n: int):
        self.u = u
        self.n = n
        self.gcd = math.gcd(u, n)
        super().__init__(f"{u} is not a unit mod {n} (gcd({u}, {n}) = {self.gcd})")


@dataclass(frozen=True)
class PrimalityResult:
    """Verdict of is_prime().

    Composite verdicts are always exact (a Miller-Rabin witness is a proof).
    Prime verdicts above DETERMINISTIC_LIMIT are probabilistic, with
    ``error_bound = 4 ** -rounds``.
    """

    n: int
    prime: bool
    deterministic: bool = True
    error_bound: float = 0.0

    @property
    def verdict(self) -> str:
        return "prime" if self.prime else "composite"

    @property
    def certainty(self) -> str:
        return "deterministic" if self.deterministic else "probabilistic"

    def __bool__(self) -> bool:
        return self.prime

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "verdict": self.verdict,
            "certainty": self.certainty,
            "error_bound": self.error_bound,
        }


def _strong_probable_prime(n: int, base: int, d: int, s: int) -> bool:
    x = pow(base, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int, rounds: int = DEFAULT_ROUNDS) -> PrimalityResult:
    """Decide primality of ``n``.

    ``n < 2`` gets a composite-by-convention verdict with deterministic
    certainty. Below DETERMINISTIC_LIMIT the answer is exact; above it a
    prime verdict carries an error bound of ``4 ** -rounds``.
    """
    if n < 2:
        return PrimalityResult(n, False)
    for p in _SMALL_PRIMES:
        if n == p:
            return PrimalityResult(n, True)
        if n % p == 0:
            return PrimalityResult(n, False)
    if n < _SMALL_PRIMES[-1] ** 2:
        return PrimalityResult(n, True)

    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1

    if n < DETERMINISTIC_LIMIT:
        prime = all(_strong_probable_prime(n, b, d, s) for b in _DETERMINISTIC_BASES)
        return PrimalityResult(n, prime)

    # Bases are drawn from a generator seeded by n, so repeated calls agree.
    rng = random.Random(n)
    for _ in range(rounds):
        if not _strong_probable_prime(n, rng.randrange(2, n - 1), d, s):
            return PrimalityResult(n, False)
    return PrimalityResult(n, True, deterministic=False, error_bound=4.0**-rounds)


@lru_cache(maxsize=8)
def primes_up_to(limit: int) -> np.ndarray:
    """All primes ``p <= limit`` as a read-only int64 array."""
    if limit < 2:
        primes = np.array([], dtype=np.int64)
    else:
        sieve = np.ones(limit + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        primes = np.flatnonzero(sieve).astype(np.int64)
    primes.flags.writeable = False
    return primes


def primes_between(lo: int, hi: int) -> np.ndarray:
    """Primes in the closed interval ``[lo, hi]`` via a segmented sieve."""
    lo = max(lo, 2)
    if hi < lo:
        return np.array([], dtype=np.int64)
    mask = np.ones(hi - lo + 1, dtype=bool)
    for p in primes_up_to(math.isqrt(hi)).tolist():
        start = max(p * p, -(-lo // p) * p)
        if start > hi:
            continue
        mask[start - lo :: p] = False
    return (np.flatnonzero(mask) + lo).astype(np.int64)


@lru_cache(maxsize=2)
def smallest_prime_factors(limit: int) -> np.ndarray:
    """Read-only table ``spf`` with ``spf[m]`` the least prime dividing m (``spf[0] = 0``, ``spf[1] = 1``)."""
    spf = np.zeros(max(limit, 1) + 1, dtype=np.int64)
    for p in primes_up_to(math.isqrt(limit)).tolist():
        view = spf[p * p :: p]
        view[view == 0] = p
    unset = np.flatnonzero(spf == 0)
    spf[unset] = unset
    spf.flags.writeable = False
    return spf


@lru_cache(maxsize=1)
def _trial_primes() -> tuple:
    return tuple(primes_up_to(_TRIAL_LIMIT).tolist())


@dataclass(frozen=True)
class Factorization:
    """Prime-power decomposition of a positive integer.

    ``factors`` holds ``(p, e)`` pairs with strictly increasing primes and
    ``e >= 1``; it is empty exactly when ``n == 1``.
    """

    n: int
    factors: tuple = ()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"Factorization requires n >= 1, got {self.n}")
        product = 1
        previous = 1
        for p, e in self.factors:
            if p <= previous or e < 1:
                raise ValueError(f"Malformed factor list for {self.n}: {self.factors}")
            previous = p
            product *= p**e
        if product != self.n:
            raise ValueError(f"Factors {self.factors} multiply to {product}, not {self.n}")

    @classmethod
    def from_primes(cls, primes: Iterable[int]) -> Factorization:
        """Build from a multiset of primes (their product is n)."""
        counts = Counter(primes)
        factors = tuple(sorted(counts.items()))
        return cls(math.prod(p**e for p, e in factors), factors)

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    @property
    def omega(self) -> int:
        return len(self.factors)

    @property
    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    @property
    def is_prime(self) -> bool:
        return len(self.factors) == 1 and self.factors[0][1] == 1

    @property
    def largest_prime(self) -> Optional[int]:
        return self.factors[-1][0] if self.factors else None

    def verify(self) -> bool:
        """Re-check that every listed prime passes is_prime (reassembly is checked on construction)."""
        return all(is_prime(p) for p in self.primes)

    def to_list(self) -> list[list[int]]:
        return [[p, e] for p, e in self.factors]


@dataclass(frozen=True)
class FactorBudget:
    max_digits: int = 80
    max_seconds: float = 30.0


DEFAULT_FACTOR_BUDGET = FactorBudget()


def _brent_rho(n: int, deadline: float) -> int:
    """A nontrivial factor of the odd composite ``n`` (Brent's variant of Pollard rho)."""
    rng = random.Random(n)
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), rng.randrange(1, n)
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
            if time.monotonic() > deadline:
                raise FactorizationBudgetExceeded(f"Time budget exhausted while splitting {n}")
        if g == n:
            while True:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
                if g > 1:
                    break
        if g != n:
            return g


def factor(n: int, budget: Optional[FactorBudget] = None) -> Factorization:
    """Complete prime factorization of ``n >= 1``.

    Trial division by primes below 2^16, then Brent-Pollard rho with
    recursion on the cofactors. Exceeding the digit or time budget raises
    FactorizationBudgetExceeded; a partial answer is never returned.
    """
    if n < 1:
        raise ValueError(f"factor() requires n >= 1, got {n}")
    budget = budget or DEFAULT_FACTOR_BUDGET
    digits = len(str(n))
    if digits > budget.max_digits:
        raise FactorizationBudgetExceeded(f"{n} has {digits} digits, budget is {budget.max_digits}")
    deadline = time.monotonic() + budget.max_seconds

    counts: Counter = Counter()
    m = n
    for p in _trial_primes():
        if p * p > m:
            break
        while m % p == 0:
            m //= p
            counts[p] += 1

    pending = [m] if m > 1 else []
    while pending:
        x = pending.pop()
        if x < _TRIAL_LIMIT * _TRIAL_LIMIT or is_prime(x):
            counts[x] += 1
            continue
        d = _brent_rho(x, deadline)
        logger.debug("rho split %d = %d * %d", x, d, x // d)
        pending.extend((d, x // d))

    return Factorization(n, tuple(sorted(counts.items())))


def largest_prime_factor(n: int) -> int:
    """P(n), the largest prime dividing ``n >= 2``."""
    if n < 2:
        raise ValueError(f"largest_prime_factor() requires n >= 2, got {n}")
    return factor(n).largest_prime


def is_y_smooth(n: int, y: int) -> bool:
    """True iff every prime factor of ``n`` is at most ``y`` (vacuously true for n = 1)."""
    if n < 1:
        raise ValueError(f"is_y_smooth() requires n >= 1, got {n}")
    if n == 1:
        return True
    if y < _TRIAL_LIMIT:
        m = n
        for p in _trial_primes():
            if p > y:
                break
            while m % p == 0:
                m //= p
        return m == 1
    return factor(n).largest_prime <= y


def _prime_power_lambda(p: int, e: int) -> int:
    if p == 2 and e >= 3:
        return 1 << (e - 2)
    return p ** (e - 1) * (p - 1)


def carmichael_lambda(n: int, factorization: Optional[Factorization] = None) -> int:
    """lambda(n), the exponent of the unit group mod ``n``."""
    if n < 1:
        raise ValueError(f"carmichael_lambda() requires n >= 1, got {n}")
    fac = factorization or factor(n)
    return math.lcm(1, *(_prime_power_lambda(p, e) for p, e in fac.factors))


def euler_phi(n: int, factorization: Optional[Factorization] = None) -> int:
    """phi(n), the order of the unit group mod ``n``."""
    if n < 1:
        raise ValueError(f"euler_phi() requires n >= 1, got {n}")
    fac = factorization or factor(n)
    return math.prod(p ** (e - 1) * (p - 1) for p, e in fac.factors)


def multiplicative_order(u: int, n: int) -> int:
    """Least ``t >= 1`` with ``u^t = 1 (mod n)``; always a divisor of lambda(n)."""
    if n < 2:
        raise ValueError(f"multiplicative_order() requires n >= 2, got {n}")
    if math.gcd(u, n) != 1:
        raise NotAUnitError(u, n)
    u %= n
    t = carmichael_lambda(n)
    for r in factor(t).primes:
        while t % r == 0 and pow(u, t // r, n) == 1:
            t //= r
    return t
