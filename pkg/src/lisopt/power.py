"""Power allocation for fixed phases: ratio maximization via exact concave inner solves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .config import SystemConfig
from .model import PhaseConfig, PowerAllocation, effective_channel, zf_precoder

LN2 = float(np.log(2.0))
_BISECT_ITERATIONS = 120
_BRACKET_DOUBLINGS = 200


class InfeasibleError(ValueError):
    """The QoS power floors cannot be radiated within the budget."""


class NonConvergenceError(RuntimeError):
    """Iteration cap reached before the ratio parameter settled."""


@dataclass(frozen=True)
class DinkelbachTrace:
    """Per-iteration ratio parameters and inner maximizers.

    lambdas is non-decreasing after the first iteration; when converged,
    the last two entries differ by less than the tolerance.
    """

    lambdas: tuple
    inner_solutions: tuple
    iterations: int
    converged: bool


def qos_min_powers(config: SystemConfig) -> np.ndarray:
    """Per-user power floors implied by the minimum-rate constraints."""
    return config.sigma2 * (np.exp2(config.r_min) - 1.0)


def zf_power_weights(channels: ChannelSet, phases: PhaseConfig) -> np.ndarray:
    """Squared beam norms: radiated watts per watt allocated to each user."""
    g = zf_precoder(effective_channel(channels, phases))
    return np.sum(np.abs(g) ** 2, axis=0)


def _kkt_powers(lam: float, nu: float, weights, p_min, mu, sigma2: float) -> np.ndarray:
    # stationarity: 1/(ln2 (sigma2 + p_k)) = lam*mu_k + nu*w_k, clipped at the QoS floor
    a = lam * mu + nu * weights
    p = np.full_like(a, np.inf)
    positive = a > 0.0
    p[positive] = 1.0 / (LN2 * a[positive]) - sigma2
    return np.maximum(p, p_min)


def solve_inner(lam: float, weights, p_min, mu, sigma2: float, p_budget: float) -> PowerAllocation:
    """Exact maximizer of rate minus lam-weighted amplifier power over the feasible box.

    Water-filling with a bisected budget multiplier nu >= 0: powers follow
    the stationarity closed form, the multiplier is grown geometrically
    until the radiated power fits the budget and then bisected to machine
    precision, so the output does not depend on the starting bracket.

    Raises InfeasibleError when the floors alone exceed the budget and
    ValueError for unbounded setups (lam == 0 with a non-binding budget).
    """
    weights = np.asarray(weights, dtype=float)
    p_min = np.asarray(p_min, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if lam < 0.0:
        raise ValueError(f"ratio parameter must be >= 0, got {lam}")
    if not np.isfinite(p_budget) or p_budget <= 0.0:
        raise ValueError(f"budget must be finite and positive, got {p_budget}")
    if np.any(weights < 0.0):
        raise ValueError("radiated-power weights must be non-negative")
    if lam == 0.0 and np.any(weights == 0.0):
        raise ValueError("unbounded: zero-weight user with no ratio penalty")

    committed = float(np.dot(weights, p_min))
    if committed > p_budget * (1.0 + 1e-9):
        raise InfeasibleError(
            f"QoS floors need {committed:.6g} W radiated, budget is {p_budget:.6g} W"
        )
    if committed >= p_budget * (1.0 - 1e-12):
        return PowerAllocation(p=p_min.copy())

    p0 = _kkt_powers(lam, 0.0, weights, p_min, mu, sigma2)
    if np.all(np.isfinite(p0)) and float(np.dot(weights, p0)) <= p_budget:
        return PowerAllocation(p=p0)

    hi = 1.0
    for _ in range(_BRACKET_DOUBLINGS):
        p_hi = _kkt_powers(lam, hi, weights, p_min, mu, sigma2)
        if float(np.dot(weights, p_hi)) <= p_budget:
            break
        hi *= 2.0
    else:
        raise NonConvergenceError("budget multiplier bracket did not close")
    lo = 0.0
    for _ in range(_BISECT_ITERATIONS):
        mid = 0.5 * (lo + hi)
        p_mid = _kkt_powers(lam, mid, weights, p_min, mu, sigma2)
        if float(np.dot(weights, p_mid)) <= p_budget:
            hi = mid
        else:
            lo = mid
    return PowerAllocation(p=_kkt_powers(lam, hi, weights, p_min, mu, sigma2))


def inner_concave_solve(lam: float, weights, p_min, config: SystemConfig) -> PowerAllocation:
    """Config-shaped wrapper around solve_inner."""
    return solve_inner(lam, weights, p_min, config.mu, config.sigma2, config.p_budget)


def dinkelbach_allocation(weights, p_min, mu, sigma2: float, p_budget: float,
                          power_offset: float, epsilon: float,
                          max_iterations: int = 100):
    """Ratio maximization: alternate the concave inner solve with ratio updates.

    Starts the ratio parameter at zero and stops once consecutive values
    differ by less than epsilon. Returns (PowerAllocation, DinkelbachTrace);
    the final ratio equals the efficiency of the returned allocation by
    construction.
    """
    mu = np.asarray(mu, dtype=float)
    lambdas = []
    inners = []
    lam_prev = 0.0
    for i in range(max_iterations):
        alloc = solve_inner(lam_prev, weights, p_min, mu, sigma2, p_budget)
        rate = float(np.sum(np.log2(1.0 + alloc.p / sigma2)))
        lam = rate / (float(np.dot(mu, alloc.p)) + power_offset)
        lambdas.append(lam)
        inners.append(alloc)
        if abs(lam - lam_prev) < epsilon:
            return alloc, DinkelbachTrace(tuple(lambdas), tuple(inners), i + 1, True)
        lam_prev = lam
    raise NonConvergenceError(
        f"ratio parameter did not settle within {max_iterations} iterations"
    )


def dinkelbach(channels: ChannelSet, phases: PhaseConfig, config: SystemConfig):
    """Best power allocation for the given phases, with the full iteration trace."""
    weights = zf_power_weights(channels, phases)
    offset = config.k * config.p_c + config.n * config.p_n_of_b[config.b]
    return dinkelbach_allocation(
        weights, qos_min_powers(config), config.mu, config.sigma2,
        config.p_budget, offset, config.epsilon,
    )
