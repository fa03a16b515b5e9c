"""Decide and enumerate a-Carmichael numbers.

An a-Carmichael number is a composite ``n`` such that ``p - a`` divides
``n - a`` for every prime ``p | n``; ``a = 1`` gives the classical Carmichael
numbers. check() is the verification oracle for everything construct emits.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from acarmichael.arith import Factorization, factor, is_prime, smallest_prime_factors

logger = logging.getLogger(__name__)

REASON_TOO_SMALL = "n < 2"
REASON_PRIME = "prime"
REASON_NOT_SQUAREFREE = "not squarefree"


class FactorizationMismatch(ValueError):
    """Raised when a supplied factorization does not describe n."""


@dataclass(frozen=True)
class CertificateEntry:
    p: int
    divisor: int
    quotient: int

    def to_dict(self) -> dict:
        return {"p": self.p, "divisor": self.divisor, "quotient": self.quotient}


@dataclass(frozen=True)
class Certificate:
    """Factored divisibility witness: ``divisor * quotient == n - a`` for every prime factor."""

    n: int
    a: int
    entries: tuple
    squarefree: bool
    composite: bool

    @property
    def primes(self) -> list[int]:
        return [entry.p for entry in self.entries]

    def verify(self) -> bool:
        """Re-check the certificate from scratch, independent of how it was produced."""
        if not (self.composite and self.squarefree and self.entries):
            return False
        product = 1
        for entry in self.entries:
            if entry.divisor != entry.p - self.a or entry.divisor == 0:
                return False
            if entry.divisor * entry.quotient != self.n - self.a:
                return False
            if not is_prime(entry.p):
                return False
            product *= entry.p
        return product == self.n and len(self.entries) >= 2

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "a": self.a,
            "factors": [entry.to_dict() for entry in self.entries],
            "squarefree": self.squarefree,
            "composite": self.composite,
        }


@dataclass(frozen=True)
class CheckResult:
    """Outcome of check(): a certificate on success, the first failing condition otherwise."""

    n: int
    a: int
    verdict: bool
    certificate: Optional[Certificate] = None
    reason: Optional[str] = None
    factorization: Optional[Factorization] = field(default=None, repr=False, compare=False)

    def __bool__(self) -> bool:
        return self.verdict

    def to_dict(self) -> dict:
        if self.verdict:
            return {"verdict": True, "certificate": self.certificate.to_dict()}
        return {"verdict": False, "n": self.n, "a": self.a, "reason": self.reason}


def _evaluate(n: int, a: int, fac: Factorization, require_squarefree: bool) -> CheckResult:
    if fac.is_prime:
        return CheckResult(n, a, False, reason=REASON_PRIME, factorization=fac)
    if require_squarefree and not fac.is_squarefree:
        return CheckResult(n, a, False, reason=REASON_NOT_SQUAREFREE, factorization=fac)

    entries = []
    for p in fac.primes:
        if p == a:
            return CheckResult(n, a, False, reason=f"prime factor {p} equals a", factorization=fac)
        divisor = p - a
        if (n - a) % abs(divisor):
            return CheckResult(n, a, False, reason=f"{abs(divisor)} ∤ {n - a}", factorization=fac)
        entries.append(CertificateEntry(p, divisor, (n - a) // divisor))

    certificate = Certificate(n, a, tuple(entries), squarefree=fac.is_squarefree, composite=True)
    return CheckResult(n, a, True, certificate=certificate, factorization=fac)


def check(
    n: int,
    a: int,
    require_squarefree: bool = True,
    factorization: Optional[Factorization] = None,
) -> CheckResult:
    """Decide whether ``n`` is an a-Carmichael number.

    Args:
        n: Any integer; ``n < 2`` and primes are refuted with a named reason.
        a: The shift. ``p - a`` is compared by absolute value, and a prime
            factor equal to ``a`` refutes outright.
        require_squarefree: Korselt's squarefree condition (default on).
        factorization: Optional known factorization of ``n``. It must
            describe ``n`` and every prime is re-tested before use.

    Returns:
        CheckResult whose ``certificate`` is set iff the verdict is true.

    Raises:
        FactorizationBudgetExceeded: If ``n`` cannot be factored within
            budget; distinct from a false verdict.
        FactorizationMismatch: If the supplied factorization is wrong.
    """
    if n < 2:
        return CheckResult(n, a, False, reason=REASON_TOO_SMALL)
    if factorization is not None:
        if factorization.n != n or not factorization.verify():
            raise FactorizationMismatch(f"Supplied factorization does not certify {n}: {factorization.factors}")
        fac = factorization
    elif is_prime(n):
        fac = Factorization(n, ((n, 1),))
    else:
        fac = factor(n)
    return _evaluate(n, a, fac, require_squarefree)


def _factor_from_table(m: int, spf) -> Factorization:
    primes = []
    while m > 1:
        p = int(spf[m])
        primes.append(p)
        m //= p
    return Factorization.from_primes(primes)


def _scan_chunk(lo: int, hi: int, a: int, require_squarefree: bool, spf) -> list[int]:
    found = []
    for m in range(lo, hi):
        if spf[m] == m:
            continue
        if _evaluate(m, a, _factor_from_table(m, spf), require_squarefree).verdict:
            found.append(m)
    return found


def enumerate_carmichael(a: int, limit: int, require_squarefree: bool = True, threads: int = 1) -> list[int]:
    """All ``n <= limit`` passing check(n, a), ascending.

    Factorizations come from a smallest-prime-factor sieve; the predicate is
    the same one check() applies, so the scan doubles as a brute-force oracle.
    """
    if limit < 2:
        raise ValueError(f"enumerate requires limit >= 2, got {limit}")
    spf = smallest_prime_factors(limit)
    threads = max(1, threads)
    step = -(-(limit - 1) // threads)
    bounds = [(lo, min(lo + step, limit + 1)) for lo in range(2, limit + 1, step)]

    if threads == 1:
        chunks = [_scan_chunk(lo, hi, a, require_squarefree, spf) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda b: _scan_chunk(b[0], b[1], a, require_squarefree, spf), bounds))

    found = [m for chunk in chunks for m in chunk]
    logger.info("enumerate a=%d limit=%d: %d hits", a, limit, len(found))
    return found


def fermat_cross_check(n: int) -> bool:
    """True iff ``b^n = b (mod n)`` for every base ``0 <= b < n``."""
    if n < 2:
        raise ValueError(f"fermat_cross_check() requires n >= 2, got {n}")
    return all(pow(b, n, n) == b for b in range(n))
