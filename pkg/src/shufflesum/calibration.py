"""Privacy-budget handling and mechanism parameter calibration.

Everything here is a pure function of its arguments.  The blanket
probability gamma is the fraction of randomized-response submissions
replaced by uniform noise; it is derived from the target (epsilon, delta)
budget, with separate constants for the low regime (epsilon < 1) and the
high regime (1 <= epsilon < 6).  Budgets with epsilon >= 6 are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import InfeasibleParametersError

EPSILON_MAX = 6.0


@dataclass(frozen=True)
class PrivacyBudget:
    """Target (epsilon, delta) differential privacy budget."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not (0.0 < self.epsilon < EPSILON_MAX):
            raise ValueError(
                f"epsilon must be in (0, {EPSILON_MAX}), got {self.epsilon}"
            )
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")

    @property
    def high_regime(self) -> bool:
        """True when 1 <= epsilon < 6 (boundary assigned to the high case)."""
        return self.epsilon >= 1.0


@dataclass(frozen=True)
class ProtocolParams:
    """Fully calibrated mechanism configuration (d, k, n, t, gamma)."""

    d: int
    k: int
    n: int
    t: int
    gamma: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not (1 <= self.t <= self.d):
            raise ValueError(f"t must be in [1, d], got t={self.t}, d={self.d}")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class ComposedBudget:
    """Per-fold budget (epsilon', delta') for r-fold composition."""

    epsilon_prime: float
    delta_prime: float
    r: int


def compose_epsilon_prime(budget: PrivacyBudget, r: int) -> ComposedBudget:
    """Split a target budget into a per-fold budget for r-fold composition.

    Returns epsilon' = epsilon / (2 sqrt(2 r ln(1/delta))) in the low
    regime; in the high regime the 2 is scaled by a further factor of 6.
    delta' = delta / r.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    log_term = math.log(1.0 / budget.delta)
    scale = 12.0 if budget.high_regime else 2.0
    denom = scale * math.sqrt(2.0 * r * log_term)
    if denom == 0.0:
        raise InfeasibleParametersError(
            "delta = 1 gives ln(1/delta) = 0: per-fold budget undefined"
        )
    return ComposedBudget(
        epsilon_prime=budget.epsilon / denom,
        delta_prime=budget.delta / r,
        r=r,
    )


def advanced_composition(epsilon_prime: float, r: int, delta: float) -> float:
    """Cumulative epsilon after r-fold adaptive composition of
    (epsilon', delta')-DP mechanisms, with slack delta:

        epsilon = sqrt(2 r ln(1/delta)) eps' + r eps' (e^eps' - 1)
    """
    if epsilon_prime < 0:
        raise ValueError(f"epsilon_prime must be >= 0, got {epsilon_prime}")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return math.sqrt(2.0 * r * math.log(1.0 / delta)) * epsilon_prime + r * epsilon_prime * (
        math.expm1(epsilon_prime)
    )


def _check_dims(d: int, n: int, t: int):
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not (1 <= t <= d):
        raise ValueError(f"t must be in [1, d], got t={t}, d={d}")


def _feasible_gamma(gamma: float, context: str) -> float:
    # Never clamp: gamma = 1 would make the output pure noise.
    if gamma > 1.0:
        raise InfeasibleParametersError(
            f"{context}: required blanket probability {gamma:.6g} exceeds 1; "
            "increase n or relax the budget"
        )
    return gamma


def calibrate_gamma_general(
    budget: PrivacyBudget, d: int, k: int, n: int, t: int
) -> float:
    """Blanket probability for the general-t mechanism.

    gamma = C d k ln(1/delta) ln(2t/delta) / ((n-1) eps^2), with C = 56 in
    the low regime and C = 2016 in the high regime.  Raises
    InfeasibleParametersError when the formula exceeds 1.
    """
    _check_dims(d, n, t)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    const = 2016.0 if budget.high_regime else 56.0
    gamma = (
        const
        * d
        * k
        * math.log(1.0 / budget.delta)
        * math.log(2.0 * t / budget.delta)
        / ((n - 1) * budget.epsilon**2)
    )
    return _feasible_gamma(gamma, "general-t calibration")


def calibrate_gamma_t1(budget: PrivacyBudget, d: int, k: int, n: int) -> float:
    """Tightened blanket probability for t = 1 (no composition needed).

    Low regime:  gamma = max{ 14 d k ln(2/delta) / ((n-1) eps^2),
                              27 d k / ((n-1) eps) }
    High regime: gamma = max{ 80 d k ln(2/delta) / ((n-1) eps^2),
                              36 d k / (11 (n-1) eps) }
    """
    _check_dims(d, n, 1)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    eps, delta = budget.epsilon, budget.delta
    log2d = math.log(2.0 / delta)
    if budget.high_regime:
        gamma = max(
            80.0 * d * k * log2d / ((n - 1) * eps**2),
            36.0 * d * k / (11.0 * (n - 1) * eps),
        )
    else:
        gamma = max(
            14.0 * d * k * log2d / ((n - 1) * eps**2),
            27.0 * d * k / ((n - 1) * eps),
        )
    return _feasible_gamma(gamma, "t=1 calibration")


def _round_k(value: float) -> int:
    # round-half-up, clamped to the integer histogram domain floor
    return max(1, int(math.floor(value + 0.5)))


def choose_k_general(budget: PrivacyBudget, d: int, n: int, t: int) -> int:
    """Quantization level minimizing 1/(4k^2) + C k over the integers,
    where C is the per-unit-k blanket cost.  The continuous minimizer is
    (1/(2C))^(1/3); the integer minimizer is one of its two neighbors,
    clamped to >= 1 (nearest-integer rounding can land on the wrong side
    of the discrete switch point, so both neighbors are compared).
    """
    _check_dims(d, n, t)
    a_eps = 1008.0 if budget.high_regime else 28.0
    log1d = math.log(1.0 / budget.delta)
    if log1d == 0.0:
        raise InfeasibleParametersError(
            "delta = 1 gives a degenerate quantization objective"
        )
    cost = (
        a_eps * d * log1d * math.log(2.0 * t / budget.delta)
        / ((n - 1) * budget.epsilon**2)
    )
    k_star = (1.0 / (2.0 * cost)) ** (1.0 / 3.0)
    lo = max(1, math.floor(k_star))

    def objective(k):
        return 1.0 / (4.0 * k * k) + cost * k

    return lo if objective(lo) <= objective(lo + 1) else lo + 1


def choose_k_t1(budget: PrivacyBudget, d: int, n: int) -> int:
    """Quantization level for the tightened t = 1 analysis.

    Low regime:  k = round(min{ (n eps^2 / (28 d ln(2/delta)))^(1/3),
                                (n eps / (54 d))^(1/3) })
    High regime: k = round(min{ (n eps^2 / (160 d ln(2/delta)))^(1/3),
                                (11 n eps / (72 d))^(1/3) })
    """
    _check_dims(d, n, 1)
    eps, delta = budget.epsilon, budget.delta
    log2d = math.log(2.0 / delta)
    third = 1.0 / 3.0
    if budget.high_regime:
        value = min(
            (n * eps**2 / (160.0 * d * log2d)) ** third,
            (11.0 * n * eps / (72.0 * d)) ** third,
        )
    else:
        value = min(
            (n * eps**2 / (28.0 * d * log2d)) ** third,
            (n * eps / (54.0 * d)) ** third,
        )
    return _round_k(value)
