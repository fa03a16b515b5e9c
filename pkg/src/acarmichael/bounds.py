"""The counting argument as a calculator.

Given ``y``, ``theta``, ``A``, ``gamma``, ``omega`` and ``kappa`` this module
evaluates every quantity of the lower-bound chain for the number of
a-Carmichael numbers up to X, and reports which inequalities actually hold at
those finite parameters. Everything is computed with natural logs; quantities
that are exponential in an exponential (``X``, the binomial quotient) are kept
as log-of-log.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

KAPPA_MAX = 1.02
BINOM_MAX = 1000

LOG_R_BASE = math.log(7 / 4)
LOG_T_BASE = math.log(3 / 2)
LOG_N_SIDE_BASE = math.log(5 / 4)
LOG_GROWTH = math.log(1.1)


def _exp(x: Optional[float]) -> Optional[float]:
    if x is None:
        return None
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


@dataclass(frozen=True)
class CountingInputs:
    y: float
    theta: float
    A: int
    gamma: float
    omega: int
    kappa: float = 1.0

    def __post_init__(self) -> None:
        if not 1 < self.theta < 2:
            raise ValueError(f"theta must satisfy 1 < theta < 2, got {self.theta}")
        if self.y < 2:
            raise ValueError(f"y must be >= 2, got {self.y}")
        if self.A < 1:
            raise ValueError(f"A must be a positive integer, got {self.A}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if not 0 < self.kappa < KAPPA_MAX:
            raise ValueError(f"kappa must satisfy 0 < kappa < {KAPPA_MAX}, got {self.kappa}")
        if self.kappa * self.y**self.theta <= 1:
            raise ValueError("kappa * y^theta must exceed 1 so that log log L is positive")

    @property
    def weight(self) -> float:
        """omega / (A + 1), the exponent shared by r, t and the side conditions."""
        return self.omega / (self.A + 1)

    def to_dict(self) -> dict:
        return {
            "y": self.y,
            "theta": self.theta,
            "A": self.A,
            "gamma": self.gamma,
            "omega": self.omega,
            "kappa": self.kappa,
        }


@dataclass(frozen=True)
class ChainStep:
    """One inequality ``lhs <op> rhs``; both sides are given in the log scale named by ``scale``."""

    name: str
    lhs: float
    rhs: float
    holds: bool
    scale: str = "log"

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "scale": self.scale, "holds": self.holds}


@dataclass(frozen=True)
class CountingReport:
    inputs: CountingInputs
    log_r: float
    log_t: float
    log_n_bound: float
    applicable: bool
    loglog_X_upper: float
    loglog_binom_lower: Optional[float] = None
    exponent: Optional[float] = None
    steps: tuple = field(default_factory=tuple)

    @property
    def r(self) -> float:
        return _exp(self.log_r)

    @property
    def t(self) -> float:
        return _exp(self.log_t)

    @property
    def n_bound(self) -> float:
        return _exp(self.log_n_bound)

    @property
    def binom_lower(self) -> Optional[float]:
        return _exp(_exp(self.loglog_binom_lower))

    @property
    def X_upper(self) -> float:
        return _exp(_exp(self.loglog_X_upper))

    @property
    def chain_holds(self) -> bool:
        return self.applicable and all(step.holds for step in self.steps)

    def step(self, name: str) -> ChainStep:
        for candidate in self.steps:
            if candidate.name == name:
                return candidate
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "inputs": self.inputs.to_dict(),
            "applicable": self.applicable,
            "log_r": self.log_r,
            "log_t": self.log_t,
            "log_n_bound": self.log_n_bound,
            "loglog_binom_lower": self.loglog_binom_lower,
            "loglog_X_upper": self.loglog_X_upper,
            "exponent": self.exponent,
            "chain_holds": self.chain_holds,
            "steps": [s.to_dict() for s in self.steps],
        }


STEP_N_SIDE = "n < (5/4)^(omega/(A+1))"
STEP_N_T20 = "n <= t/20"
STEP_ORDER = "n < t < r"
STEP_OMEGA = "omega >= gamma y^theta / log y"
STEP_BINOM = "C(r,t)/C(r,n) >= 1.1^(t omega/(A+1))"
STEP_X = "X <= (L log^(2A+1) L)(L log^(A+1) L)^t < e^(3 y^theta t)"
STEP_LOGLOGLOG = "(log log log X)^2 >= log y"


def _loglog_standard_bound(log_r: float, log_t: float, log_n: float, weight: float) -> Optional[float]:
    """log log of ``(r/t)^t / (r e / n)^n``, the standard-bound estimate of ``C(r,t) / C(r,n)``."""
    log_gain = log_t + math.log(weight * math.log(7 / 6))
    excess = log_r + 1 - log_n
    if excess <= 0:
        return log_gain
    log_loss = log_n + math.log(excess)
    if log_loss >= log_gain:
        return None
    return log_gain + math.log1p(-math.exp(log_loss - log_gain))


def counting_report(inputs: CountingInputs) -> CountingReport:
    """Evaluate the counting chain at ``inputs``.

    ``r = (7/4)^w``, ``t = (3/2)^w`` with ``w = omega / (A + 1)``, and
    ``n <= e^(3 y theta)``. The report is applicable only when
    ``r > t > n``; the binomial lower bound and the exponent are reported
    only in that case. Each step of the chain is evaluated regardless.
    """
    y, theta, A, gamma = inputs.y, inputs.theta, inputs.A, inputs.gamma
    weight = inputs.weight
    log_y = math.log(y)
    log_r = weight * LOG_R_BASE
    log_t = weight * LOG_T_BASE
    log_n = 3 * y * theta
    applicable = log_n < log_t < log_r

    steps = [
        ChainStep(STEP_N_SIDE, log_n, weight * LOG_N_SIDE_BASE, log_n < weight * LOG_N_SIDE_BASE),
        ChainStep(STEP_N_T20, log_n, log_t - math.log(20), log_n <= log_t - math.log(20)),
        ChainStep(STEP_ORDER, log_n, log_t, applicable),
    ]
    log_omega_needed = math.log(gamma) + theta * log_y - math.log(log_y)
    log_omega = _log(inputs.omega)
    steps.append(ChainStep(STEP_OMEGA, log_omega, log_omega_needed, log_omega >= log_omega_needed))

    loglog_binom = None
    if applicable:
        loglog_binom = _loglog_standard_bound(log_r, log_t, log_n, weight)
        target = log_t + math.log(weight * LOG_GROWTH)
        holds = loglog_binom is not None and loglog_binom >= target
        lhs = loglog_binom if loglog_binom is not None else -math.inf
        steps.append(ChainStep(STEP_BINOM, lhs, target, holds, scale="loglog"))

    # log L = kappa y^theta; log X_upper = B + t C.
    log_L = inputs.kappa * y**theta
    loglog_L = math.log(log_L)
    B = log_L + (2 * A + 1) * loglog_L
    C = log_L + (A + 1) * loglog_L
    loglog_X = float(np.logaddexp(math.log(B), log_t + math.log(C)))
    loglog_X_cap = math.log(3) + theta * log_y + log_t
    steps.append(ChainStep(STEP_X, loglog_X, loglog_X_cap, loglog_X < loglog_X_cap, scale="loglog"))

    logloglog_X = _log(loglog_X)
    lhs = logloglog_X**2 if logloglog_X > 0 else -math.inf
    steps.append(ChainStep(STEP_LOGLOGLOG, lhs, log_y, lhs >= log_y))

    exponent = None
    if applicable and logloglog_X > 0:
        exponent = LOG_GROWTH / (3 * (A + 1)) * gamma / logloglog_X**2

    report = CountingReport(
        inputs,
        log_r,
        log_t,
        log_n,
        applicable,
        loglog_X,
        loglog_binom,
        exponent,
        tuple(steps),
    )
    logger.debug("counting report: %s", report.to_dict())
    if not applicable:
        logger.info("chain not applicable: log n = %.3f, log t = %.3f, log r = %.3f", log_n, log_t, log_r)
    return report


@dataclass(frozen=True)
class BinomialSandwich:
    """``(u/v)^v <= C(u, v) <= (u e / v)^v``; the lower side exact, the upper compared in logs."""

    u: int
    v: int
    lower_exact: Fraction
    exact: int
    log_upper: float

    @property
    def lower(self) -> float:
        return float(self.lower_exact)

    @property
    def upper(self) -> float:
        return _exp(self.log_upper)

    @property
    def holds(self) -> bool:
        return self.lower_exact <= self.exact and math.log(self.exact) <= self.log_upper

    def as_tuple(self) -> tuple:
        return self.lower, self.exact, self.upper

    def to_dict(self) -> dict:
        return {
            "u": self.u,
            "v": self.v,
            "lower": self.lower,
            "exact": self.exact,
            "upper": self.upper,
            "holds": self.holds,
        }


def binom_bound_check(u: int, v: int) -> BinomialSandwich:
    """The standard binomial sandwich at ``0 < v <= u <= 1000``."""
    if not 0 < v <= u <= BINOM_MAX:
        raise ValueError(f"binom_bound_check requires 0 < v <= u <= {BINOM_MAX}, got u = {u}, v = {v}")
    return BinomialSandwich(
        u,
        v,
        Fraction(u, v) ** v,
        math.comb(u, v),
        v * (math.log(u) + 1 - math.log(v)),
    )
