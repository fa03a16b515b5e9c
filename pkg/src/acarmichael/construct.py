"""Conditional construction of a-Carmichael numbers.

Pipeline:
1. build_Q: primes q in [y^theta / log y, y^theta] with q = -1 mod alpha,
   P(q - 1) <= y and gcd(q, a) = 1; L is their product.
2. build_blocks: group Q into blocks of A + 1 consecutive primes.
3. find_best_slice: for every product d of blocks find the least k with
   d*k + a prime; keep the k shared by the most divisors.
4. find_P: least prime P = a (mod L k), giving k' = (P - a) / (L k).
5. assemble: a subset of the slice primes with product 1 mod L k k', times P.

Every emitted n is certified by korselt.check before it is returned.

Usage:
    from acarmichael.construct import ConstructionParams, run_pipeline

    result = run_pipeline(ConstructionParams(a=-1, blocks=(3, 5, 7), k_cap=64, kprime_cap=200))
"""

from __future__ import annotations

import logging
import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator, Optional, Sequence

from acarmichael.ap import ApBudgetExceeded, NonCoprimeShift, least_k_shift
from acarmichael.arith import (
    BudgetExceeded,
    Factorization,
    FactorizationBudgetExceeded,
    is_prime,
    is_y_smooth,
    primes_between,
)
from acarmichael.groups import (
    STRATEGIES,
    SubsetSolution,
    eq1_bound,
    find_subset_product_one,
    kkprime_lambda_check,
)
from acarmichael.korselt import Certificate, check

logger = logging.getLogger(__name__)

MODES = ("strict", "relaxed")
MAX_BLOCKS = 20
# Large slices are first searched completely over this many of their smallest primes.
SUBSET_PREFIX = 32


class ConstructionError(Exception):
    """Raised when a pipeline stage cannot produce its output."""

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.stage = stage


class InsufficientPrimes(ConstructionError):
    """Raised when no subset of the slice primes has product 1 mod L k k'."""

    def __init__(self, slice_size: int, modulus: int, bound: float):
        self.slice_size = slice_size
        self.modulus = modulus
        self.bound = bound
        super().__init__(
            f"No subset of {slice_size} slice primes has product 1 mod {modulus} "
            f"(Davenport-type bound for this modulus: {bound:.1f})",
            stage="assemble",
        )


class VerificationFailed(ConstructionError):
    """Raised when an assembled n fails its certificate or the divisibility chain."""


class ConjectureBudgetExceeded(BudgetExceeded):
    """Raised when the first-prime searches the construction relies on run out of budget."""

    def __init__(self, message: str, failures: Sequence = ()):
        super().__init__(message)
        self.failures = list(failures)
        self.stage: Optional[str] = None


_INT_FIELDS = ("a", "y", "A", "alpha", "seed", "subset_budget", "max_slices", "max_p_attempts", "threads")
_OPTIONAL_INT_FIELDS = ("k_cap", "kprime_cap")


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class ConstructionParams:
    """Inputs of the pipeline.

    Strict mode derives both caps as ``ceil((log L)^A)`` once L is known and
    always uses the blocks built from Q. Relaxed mode uses the supplied caps
    and may replace Q by an explicit list of pairwise coprime ``blocks``.
    """

    a: int
    y: int = 20
    theta: float = 1.5
    A: int = 1
    alpha: int = 1
    k_cap: Optional[int] = None
    kprime_cap: Optional[int] = None
    mode: str = "relaxed"
    seed: int = 0
    blocks: Optional[tuple] = None
    subset_strategy: str = "auto"
    subset_budget: int = 200_000
    max_slices: int = 1
    max_p_attempts: int = 1
    threads: int = 1

    def __post_init__(self) -> None:
        for name in _INT_FIELDS + _OPTIONAL_INT_FIELDS:
            value = getattr(self, name)
            if not _is_int(value) and not (value is None and name in _OPTIONAL_INT_FIELDS):
                raise ValueError(f"{name} must be an integer, got {value!r}")
        if not (_is_int(self.theta) or isinstance(self.theta, float)):
            raise ValueError(f"theta must be a number, got {self.theta!r}")
        if not isinstance(self.mode, str) or not isinstance(self.subset_strategy, str):
            raise ValueError(f"mode and subset_strategy must be strings, got {self.mode!r}, {self.subset_strategy!r}")
        if self.blocks is not None and (
            not isinstance(self.blocks, (list, tuple)) or not all(_is_int(b) for b in self.blocks)
        ):
            raise ValueError(f"blocks must be a list of integers, got {self.blocks!r}")
        if self.a == 0:
            raise ValueError("a = 0 is degenerate: every squarefree composite qualifies")
        if self.y < 3:
            raise ValueError(f"y must be >= 3, got {self.y}")
        if not 1 < self.theta < 2:
            raise ValueError(f"theta must satisfy 1 < theta < 2, got {self.theta}")
        if self.A < 1:
            raise ValueError(f"A must be a positive integer, got {self.A}")
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.mode not in MODES:
            raise ValueError(f"Invalid mode '{self.mode}'. Must be one of: {', '.join(MODES)}")
        if self.subset_strategy not in STRATEGIES:
            raise ValueError(
                f"Invalid subset_strategy '{self.subset_strategy}'. Must be one of: {', '.join(STRATEGIES)}"
            )
        if self.mode == "relaxed" and (self.k_cap is None or self.kprime_cap is None):
            raise ValueError("relaxed mode needs explicit k_cap and kprime_cap")
        if self.max_slices < 1 or self.max_p_attempts < 1:
            raise ValueError("max_slices and max_p_attempts must be >= 1")
        for name in ("k_cap", "kprime_cap", "subset_budget", "threads"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        if self.blocks is not None:
            if self.mode == "strict":
                raise ValueError("explicit blocks are only accepted in relaxed mode")
            blocks = tuple(int(b) for b in self.blocks)
            if not blocks or any(b < 2 for b in blocks):
                raise ValueError(f"blocks must be integers >= 2, got {list(blocks)}")
            for i, b in enumerate(blocks):
                for c in blocks[i + 1 :]:
                    if math.gcd(b, c) != 1:
                        raise ValueError(f"blocks must be pairwise coprime: gcd({b}, {c}) > 1")
            object.__setattr__(self, "blocks", blocks)

    @property
    def strict(self) -> bool:
        return self.mode == "strict"

    def to_dict(self) -> dict:
        data = asdict(self)
        if self.blocks is not None:
            data["blocks"] = list(self.blocks)
        return data


@dataclass(frozen=True)
class SmoothPrimeSet:
    params: ConstructionParams
    Q: tuple
    lo: float
    hi: float

    @property
    def L(self) -> int:
        return math.prod(self.Q)

    @property
    def omega(self) -> int:
        return len(self.Q)


@dataclass(frozen=True)
class BlockSet:
    blocks: tuple
    members: tuple
    leftover: tuple = ()

    @classmethod
    def explicit(cls, blocks: Sequence[int]) -> BlockSet:
        return cls(tuple(blocks), tuple((b,) for b in blocks))

    def to_dict(self) -> dict:
        return {
            "blocks": list(self.blocks),
            "members": [list(m) for m in self.members],
            "leftover": list(self.leftover),
        }


@dataclass(frozen=True)
class PrimeSlice:
    """Primes ``p = d*k + a`` sharing one multiplier ``k``, as ``(d, p)`` pairs ordered by d."""

    k: int
    hits: tuple

    @property
    def primes(self) -> list[int]:
        return [p for _, p in self.hits]

    def __len__(self) -> int:
        return len(self.hits)

    def to_dict(self) -> dict:
        return {"k": self.k, "hits": [{"d": d, "p": p} for d, p in self.hits]}


@dataclass(frozen=True)
class ConstructionResult:
    params: ConstructionParams
    L: int
    slice: PrimeSlice
    P: int
    kprime: int
    solution: SubsetSolution
    certificate: Certificate
    Q: Optional[tuple] = None
    blockset: Optional[BlockSet] = None
    timings: dict = field(default_factory=dict, compare=False)

    @property
    def k(self) -> int:
        return self.slice.k

    @property
    def modulus(self) -> int:
        return self.L * self.k * self.kprime

    @property
    def chosen_primes(self) -> list[int]:
        return self.solution.chosen_elements

    @property
    def n_prime(self) -> int:
        return math.prod(self.chosen_primes)

    @property
    def n(self) -> int:
        return self.P * self.n_prime

    def to_dict(self, include_timings: bool = False) -> dict:
        data = {
            "params": self.params.to_dict(),
            "Q": list(self.Q) if self.Q is not None else None,
            "L": self.L,
            "blocks": self.blockset.to_dict() if self.blockset is not None else None,
            "k": self.k,
            "slice": self.slice.to_dict()["hits"],
            "P": self.P,
            "kprime": self.kprime,
            "chosen": self.chosen_primes,
            "n": self.n,
            "certificate": self.certificate.to_dict(),
        }
        if include_timings:
            data["timings"] = dict(self.timings)
        return data


def build_Q(params: ConstructionParams) -> SmoothPrimeSet:
    """Sieve ``[y^theta / log y, y^theta]`` and apply the congruence, smoothness and gcd filters."""
    hi = params.y**params.theta
    lo = hi / math.log(params.y)
    candidates = primes_between(math.ceil(lo), math.floor(hi)).tolist()
    if not candidates:
        raise ConstructionError(f"parameters too small: no primes in [{lo:.3f}, {hi:.3f}]", stage="build_Q")

    filters = (
        (f"q = -1 mod {params.alpha}", lambda q: (q + 1) % params.alpha == 0),
        (f"P(q - 1) <= {params.y}", lambda q: is_y_smooth(q - 1, params.y)),
        (f"gcd(q, {params.a}) = 1", lambda q: math.gcd(q, params.a) == 1),
    )
    survivors = candidates
    for name, keep in filters:
        remaining = [q for q in survivors if keep(q)]
        logger.debug("build_Q filter %s: %d -> %d", name, len(survivors), len(remaining))
        if not remaining:
            raise ConstructionError(
                f"parameters too small: filter '{name}' eliminated the last {len(survivors)} candidate(s)",
                stage="build_Q",
            )
        survivors = remaining

    logger.info("Q: %d primes in [%.3f, %.3f]", len(survivors), lo, hi)
    return SmoothPrimeSet(params, tuple(survivors), lo, hi)


def build_blocks(qset: SmoothPrimeSet, A: int) -> BlockSet:
    """Group Q into consecutive runs of ``A + 1`` primes; the remainder is left over."""
    size = A + 1
    if qset.omega < size:
        raise ConstructionError(
            f"|Q| = {qset.omega} is smaller than the block size A + 1 = {size}", stage="build_blocks"
        )
    count = qset.omega // size
    members = tuple(qset.Q[i * size : (i + 1) * size] for i in range(count))
    blocks = tuple(math.prod(m) for m in members)

    y, theta = qset.params.y, qset.params.theta
    log_threshold = size * (theta * math.log(y) - math.log(math.log(y)))
    for block in blocks:
        if math.log(block) <= log_threshold:
            raise ConstructionError(
                f"block {block} does not exceed y^((A+1) theta) / log^(A+1) y", stage="build_blocks"
            )
    return BlockSet(blocks, members, qset.Q[count * size :])


def explicit_blocks(params: ConstructionParams) -> BlockSet:
    """The relaxed-mode blocks coprime to ``a``; the others can never give a prime ``d*k + a``."""
    usable = tuple(b for b in params.blocks if math.gcd(b, params.a) == 1)
    dropped = [b for b in params.blocks if b not in usable]
    if dropped:
        logger.warning("dropped block(s) sharing a factor with a = %d: %s", params.a, dropped)
    if not usable:
        raise ConstructionError(f"every block shares a factor with a = {params.a}", stage="build_blocks")
    return BlockSet.explicit(usable)


@dataclass(frozen=True)
class _Probe:
    d: int
    hit: Optional[int] = None
    k: Optional[int] = None
    skipped: bool = False


def _probe(d: int, a: int, k_cap: int) -> _Probe:
    try:
        found = least_k_shift(d, a, k_cap)
    except NonCoprimeShift:
        return _Probe(d, skipped=True)
    except ApBudgetExceeded:
        return _Probe(d)
    return _Probe(d, found.p, found.k)


def rank_slices(blockset: BlockSet, params: ConstructionParams, k_cap: int) -> list[PrimeSlice]:
    """All nonempty slices, largest first, ties broken by the smaller k."""
    count = len(blockset.blocks)
    if count == 0:
        raise ConstructionError("no blocks to combine", stage="find_best_slice")
    if count > MAX_BLOCKS:
        raise ConjectureBudgetExceeded(f"{count} blocks give 2^{count} divisors; the search is capped at {MAX_BLOCKS}")

    divisors = sorted(
        math.prod(b for j, b in enumerate(blockset.blocks) if mask >> j & 1) for mask in range(1, 1 << count)
    )
    if params.threads > 1:
        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            probes = list(pool.map(lambda d: _probe(d, params.a, k_cap), divisors))
    else:
        probes = [_probe(d, params.a, k_cap) for d in divisors]

    skipped = [p.d for p in probes if p.skipped]
    failures = [p.d for p in probes if not p.skipped and p.hit is None]
    if skipped:
        logger.warning("skipped %d divisor(s) sharing a factor with a = %d: %s", len(skipped), params.a, skipped)
    if failures:
        logger.info("%d divisor(s) exhausted k_cap = %d", len(failures), k_cap)

    buckets: dict[int, list] = {}
    for probe in probes:
        if probe.hit is not None:
            buckets.setdefault(probe.k, []).append((probe.d, probe.hit))
    if not buckets:
        raise ConjectureBudgetExceeded(
            f"conjecture budget exceeded: no divisor found a prime d*k + {params.a} with k < {k_cap}", failures
        )

    collisions = [p for p, c in Counter(probe.hit for probe in probes if probe.hit is not None).items() if c > 1]
    if collisions:
        message = f"primes arising from two different divisors: {collisions}"
        if params.strict:
            raise ConstructionError(f"internal invariant violated, {message}", stage="find_best_slice")
        logger.warning("relaxed blocks produced %s", message)

    # P = a mod L k needs gcd(k, a) = 1.
    unusable = sorted(k for k in buckets if math.gcd(k, params.a) != 1)
    if unusable:
        logger.info("slices with k sharing a factor with a = %d skipped: %s", params.a, unusable)
    slices = [PrimeSlice(k, tuple(hits)) for k, hits in buckets.items() if k not in unusable]
    if not slices:
        raise ConstructionError(f"every slice has k sharing a factor with a = {params.a}", stage="find_best_slice")
    slices.sort(key=lambda s: (-len(s), s.k))
    for candidate in slices:
        if len(set(candidate.primes)) != len(candidate):
            raise ConstructionError(f"internal invariant violated: duplicate prime in slice k = {candidate.k}")
    logger.info("slices: %s", [(s.k, len(s)) for s in slices[:5]])
    return slices


def find_best_slice(blockset: BlockSet, params: ConstructionParams, k_cap: Optional[int] = None) -> PrimeSlice:
    """The slice with the most primes (ties: smallest k)."""
    cap = k_cap if k_cap is not None else params.k_cap
    if cap is None:
        raise ValueError("find_best_slice needs a k_cap")
    return rank_slices(blockset, params, cap)[0]


def find_P(
    L: int,
    k: int,
    a: int,
    kprime_cap: int,
    exclude: Sequence[int] = (),
    start: int = 1,
    strict_bound: Optional[float] = None,
) -> tuple[int, int]:
    """Least prime ``P = L*k*k' + a`` with ``start <= k' <= kprime_cap``, skipping ``exclude``.

    With ``strict_bound`` the found ``k'`` must also satisfy ``k' <= strict_bound``.
    """
    modulus = L * k
    if math.gcd(a, modulus) != 1:
        raise NonCoprimeShift(modulus, a)
    excluded = set(exclude)
    for kprime in range(start, kprime_cap + 1):
        P = modulus * kprime + a
        if P > 1 and P not in excluded and is_prime(P):
            if strict_bound is not None and kprime > strict_bound:
                break
            return P, kprime
    raise ConjectureBudgetExceeded(
        f"conjecture budget exceeded: no prime P = {a} mod {modulus} with {start} <= k' <= {kprime_cap}",
        [(modulus, a)],
    )


def _verify_chain(n: int, P: int, chosen: Sequence[int], a: int, modulus: int) -> Optional[str]:
    n_prime = math.prod(chosen)
    if n_prime % modulus != 1 % modulus:
        return f"n' = {n_prime} is not 1 mod {modulus}"
    if (P - a) % modulus:
        return f"P = {P} is not {a} mod {modulus}"
    for p in chosen:
        if modulus % (p - a) or (n - a) % (p - a):
            return f"p - a = {p - a} does not divide both {modulus} and n - a"
    return None


def assemble(slice_: PrimeSlice, P: int, kprime: int, L: int, params: ConstructionParams) -> ConstructionResult:
    """Pick slice primes with product 1 mod ``L k k'`` and certify ``n = P n'``."""
    if not len(slice_):
        raise ConstructionError("empty slice", stage="assemble")
    if P in slice_.primes:
        raise ConstructionError(f"P = {P} is one of the slice primes", stage="assemble")
    modulus = L * slice_.k * kprime

    primes = [p for p in slice_.primes if math.gcd(p, modulus) == 1]
    dropped = len(slice_) - len(primes)
    if dropped:
        logger.warning("%d slice prime(s) divide the modulus %d and were dropped", dropped, modulus)
    solution = None
    if params.subset_strategy == "auto" and len(primes) > SUBSET_PREFIX:
        solution = find_subset_product_one(primes[:SUBSET_PREFIX], modulus, strategy="meet_in_middle")
    if primes and solution is None:
        solution = find_subset_product_one(
            primes,
            modulus,
            strategy=params.subset_strategy,
            seed=params.seed,
            budget=params.subset_budget,
        )
    if solution is None:
        raise InsufficientPrimes(len(primes), modulus, eq1_bound(modulus).eq1_bound)
    chosen = solution.chosen_elements
    if not chosen:
        raise ConstructionError("empty subset proposed", stage="assemble")

    n = P * math.prod(chosen)
    verdict = check(n, params.a, True, factorization=Factorization.from_primes([P, *chosen]))
    if not verdict:
        raise VerificationFailed(f"n = {n} failed verification: {verdict.reason}", stage="assemble")
    problem = _verify_chain(n, P, chosen, params.a, modulus)
    if problem:
        raise VerificationFailed(f"divisibility chain broken for n = {n}: {problem}", stage="assemble")
    try:
        lambda_ok = kkprime_lambda_check(L, slice_.k, kprime)
    except FactorizationBudgetExceeded as exc:
        logger.warning("lambda product check skipped: %s", exc)
        lambda_ok = True
    if not lambda_ok:
        raise VerificationFailed(f"lambda({modulus}) fails the product bound", stage="assemble")

    logger.info("assembled n = %d from P = %d and %d slice primes", n, P, len(chosen))
    return ConstructionResult(params, L, slice_, P, kprime, solution, verdict.certificate)


def resolve_caps(params: ConstructionParams, L: int) -> tuple[int, int]:
    """(k_cap, kprime_cap): ``ceil((log L)^A)`` in strict mode, the supplied caps otherwise."""
    if params.strict:
        cap = math.ceil(math.log(L) ** params.A)
        return cap, cap
    return params.k_cap, params.kprime_cap


@contextmanager
def _stage(name: str, timings: dict) -> Iterator[None]:
    logger.info("stage %s", name)
    started = time.perf_counter()
    try:
        yield
    except (ConstructionError, BudgetExceeded, ValueError) as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        logger.error("stage %s failed: %s", name, exc)
        raise
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - started


def run_pipeline(params: ConstructionParams) -> ConstructionResult:
    """Run every stage and return a certified result; every failure is tagged with its stage."""
    logger.info("params: %s", params.to_dict())
    timings: dict = {}
    qset = None

    if params.blocks is not None:
        with _stage("build_blocks", timings):
            blockset = explicit_blocks(params)
        L = math.prod(blockset.blocks)
    else:
        with _stage("build_Q", timings):
            qset = build_Q(params)
        with _stage("build_blocks", timings):
            blockset = build_blocks(qset, params.A)
        L = qset.L
    logger.info("L = %d, %d block(s)", L, len(blockset.blocks))

    k_cap, kprime_cap = resolve_caps(params, L)
    strict_bound = math.log(L) ** params.A if params.strict else None
    max_slices = 1 if params.strict else params.max_slices
    max_p_attempts = 1 if params.strict else params.max_p_attempts

    with _stage("find_best_slice", timings):
        slices = rank_slices(blockset, params, k_cap)[:max_slices]

    last_error: Optional[InsufficientPrimes] = None
    for slice_ in slices:
        start = 1
        for _ in range(max_p_attempts):
            with _stage("find_P", timings):
                try:
                    P, kprime = find_P(L, slice_.k, params.a, kprime_cap, slice_.primes, start, strict_bound)
                except ConjectureBudgetExceeded:
                    if last_error is None:
                        raise
                    break
            logger.info("slice k = %d (%d primes): P = %d, k' = %d", slice_.k, len(slice_), P, kprime)
            try:
                with _stage("assemble", timings):
                    result = assemble(slice_, P, kprime, L, params)
            except InsufficientPrimes as exc:
                last_error = exc
                start = kprime + 1
                continue
            for name, seconds in timings.items():
                logger.info("timing %s: %.3fs", name, seconds)
            return replace(
                result,
                Q=qset.Q if qset is not None else None,
                blockset=blockset,
                timings=timings,
            )
    raise last_error
