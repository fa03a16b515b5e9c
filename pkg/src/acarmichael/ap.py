"""First primes in arithmetic progressions and empirical Heath-Brown statistics.

Two parameterizations are supported: the classical progression
``p = c + k*m`` and the shifted form ``p = d*k + a`` with ``k >= 1`` used by
the construction. Caps are always explicit so that budget exhaustion is never
mistaken for a counterexample to a conjectured bound.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from acarmichael.arith import BudgetExceeded, is_prime, primes_up_to

logger = logging.getLogger(__name__)

CSV_HEADER = ("m", "worst_c", "worst_p", "ratio2", "ratioA")
DEFAULT_SEGMENT = 4096


class NoPrimeInProgression(ValueError):
    """Raised when gcd(c, m) > 1 leaves no prime (beyond a trivial one) in the progression."""

    def __init__(self, c: int, m: int):
        self.c = c
        self.m = m
        self.gcd = math.gcd(c, m)
        super().__init__(f"No prime is congruent to {c} mod {m}: gcd = {self.gcd}")


class NonCoprimeShift(ValueError):
    """Raised when gcd(d, a) > 1, so every d*k + a shares that factor."""

    def __init__(self, d: int, a: int):
        self.d = d
        self.a = a
        self.gcd = math.gcd(d, a)
        super().__init__(f"Every {d}*k + {a} is divisible by gcd({d}, {a}) = {self.gcd}")


class ApBudgetExceeded(BudgetExceeded):
    """Raised when a progression scan reaches its cap without finding a prime."""

    def __init__(self, message: str, modulus: int, residue: int):
        self.modulus = modulus
        self.residue = residue
        super().__init__(message)


@dataclass(frozen=True)
class ApHit:
    """The least prime ``p = c + k*m`` of a progression (shifted form: ``m = d``, ``c = a``)."""

    m: int
    c: int
    p: int
    k: int

    def to_dict(self) -> dict:
        return {"m": self.m, "c": self.c, "p": self.p, "k": self.k}


@dataclass(frozen=True)
class HbStatistic:
    """Worst-case least prime over the coprime residues of one modulus."""

    m: int
    worst_c: int
    worst_p: int
    A: float

    @property
    def ratio2(self) -> float:
        return self.worst_p / (self.m * math.log(self.m) ** 2)

    @property
    def ratioA(self) -> float:
        return self.worst_p / (self.m * math.log(self.m) ** self.A)

    @property
    def loglog_ratio(self) -> Optional[float]:
        """Ratio against the weaker budget ``m (log m)^(log log m)``; None where log log m <= 0."""
        loglog = math.log(math.log(self.m))
        if loglog <= 0:
            return None
        return self.worst_p / (self.m * math.log(self.m) ** loglog)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "worst_c": self.worst_c,
            "worst_p": self.worst_p,
            "ratio2": self.ratio2,
            "ratioA": self.ratioA,
            "A": self.A,
        }


def least_prime_in_ap(c: int, m: int, cap: int) -> ApHit:
    """Smallest prime ``p = c (mod m)`` with ``p <= cap``.

    The progression is scanned in segments of DEFAULT_SEGMENT members. When
    ``gcd(c, m) > 1`` the only possible prime is ``g = gcd(c, m)`` itself: the
    residue when it equals g, or m for the zero class of a prime m. It is
    reported if it is prime and within the cap; otherwise NoPrimeInProgression
    is raised.
    """
    if m < 1:
        raise ValueError(f"Modulus must be >= 1, got {m}")
    residue = c % m
    g = math.gcd(residue, m)
    if g != 1:
        if g % m == residue and is_prime(g):
            if g > cap:
                raise ApBudgetExceeded(f"No prime = {residue} mod {m} found up to cap {cap}", m, residue)
            return ApHit(m, residue, g, (g - residue) // m)
        raise NoPrimeInProgression(c, m)

    start = 0
    while residue + start * m <= cap:
        stop = start + DEFAULT_SEGMENT
        for k in range(start, stop):
            p = residue + k * m
            if p > cap:
                break
            if is_prime(p):
                return ApHit(m, residue, p, k)
        start = stop
    raise ApBudgetExceeded(f"No prime = {residue} mod {m} found up to cap {cap}", m, residue)


def least_k_shift(d: int, a: int, k_cap: int) -> ApHit:
    """Least ``k`` in ``[1, k_cap)`` with ``d*k + a`` prime.

    Raises:
        NonCoprimeShift: If ``gcd(d, a) > 1``.
        ApBudgetExceeded: If no ``k < k_cap`` works; carries ``(d, a)``.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if math.gcd(d, a) != 1:
        raise NonCoprimeShift(d, a)
    for k in range(1, k_cap):
        p = d * k + a
        if p > 1 and is_prime(p):
            return ApHit(d, a, p, k)
    raise ApBudgetExceeded(f"No prime {d}*k + {a} with 1 <= k < {k_cap}", d, a)


def _least_primes_by_residue(m: int, cap: int) -> dict[int, int]:
    """Least prime in every coprime residue class mod m, extending the sieve bound until all are hit."""
    coprime = [c for c in range(m) if math.gcd(c, m) == 1]
    bound = min(cap, max(1024, int(4 * m * math.log(m) ** 2)))
    while True:
        primes = primes_up_to(bound)
        residues, first = np.unique(primes % m, return_index=True)
        found = {int(r): int(primes[i]) for r, i in zip(residues.tolist(), first.tolist())}
        missing = [c for c in coprime if c not in found]
        if not missing:
            return {c: found[c] for c in coprime}
        if bound >= cap:
            raise ApBudgetExceeded(f"No prime = {missing[0]} mod {m} found up to cap {cap}", m, missing[0])
        bound = min(cap, bound * 2)


def hb_statistic(m: int, A: float, cap: int) -> HbStatistic:
    """Worst-case least prime over residues coprime to ``m >= 3``; ties go to the smallest residue."""
    if m < 3:
        raise ValueError(f"Statistic is degenerate for m = {m}; scans start at m = 3")
    least = _least_primes_by_residue(m, cap)
    worst_c = max(least, key=lambda c: (least[c], -c))
    return HbStatistic(m, worst_c, least[worst_c], A)


def hb_scan(m_lo: int, m_hi: int, A: float, cap: int, threads: int = 1) -> list[HbStatistic]:
    """hb_statistic for every ``m`` in ``[m_lo, m_hi]``, ordered by ``m``.

    Moduli below 3 are skipped. Output does not depend on ``threads``.
    """
    moduli = list(range(max(m_lo, 3), m_hi + 1))
    if not moduli:
        return []
    if threads <= 1:
        stats = [hb_statistic(m, A, cap) for m in moduli]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(lambda m: hb_statistic(m, A, cap), moduli))
    logger.info("hb_scan m=%d..%d A=%s: %d rows", moduli[0], moduli[-1], A, len(stats))
    return stats


def hb_scan_csv(stats: Iterable[HbStatistic]) -> str:
    """Render statistics as CSV with a header row and ratios to 6 decimal places."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for stat in stats:
        writer.writerow([stat.m, stat.worst_c, stat.worst_p, f"{stat.ratio2:.6f}", f"{stat.ratioA:.6f}"])
    return buffer.getvalue()
