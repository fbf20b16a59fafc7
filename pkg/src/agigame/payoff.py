"""Stage utility and truncated discounted utility."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import PlayerAbsent, UnknownPlayer
from .model import GameState, JointChoice, Parameters, Trajectory


@dataclass(frozen=True, slots=True)
class UtilityBreakdown:
    economic: float
    security: float
    costs: float
    total: float

    @classmethod
    def from_parts(cls, economic: float, security: float, costs: float) -> "UtilityBreakdown":
        return cls(economic, security, costs, economic + security - costs)


def has_pool_access(state: GameState, player: str) -> bool:
    """False for players whose sanction level cuts them off the shared pool."""
    st = state.sanctions.get(player)
    return st is None or not getattr(st, "blocks_pool", False)


def stage_utility(state: GameState, player: str, choice: JointChoice, params: Parameters) -> UtilityBreakdown:
    """Economic + security - costs at the state's time-t values.

    Sanctioned players without pool access get neither the mu*K nor the
    phi*s*K term.
    """
    if player not in state.T:
        raise UnknownPlayer(player)
    T_i = state.T[player]
    access = 1.0 if has_pool_access(state, player) else 0.0
    economic = params.lambda_econ * T_i + access * (params.mu * state.K + params.phi * choice.s * state.K)
    security = params.sigma * state.S - params.xi * state.rivals_capability(player)
    costs = params.eta * choice.r ** 2 + params.theta * (1 - state.V[player])
    return UtilityBreakdown.from_parts(economic, security, costs)


def discounted_utility(trajectory: Trajectory, player: str, params: Parameters) -> float:
    """sum_t delta**t * U_i(t) over the steps where ``player`` was active."""
    ts, us = [], []
    for rec in trajectory.steps:
        u = rec.utilities.get(player)
        if u is not None:
            ts.append(rec.state.t)
            us.append(u.total)
    if not ts:
        raise PlayerAbsent(player)
    return discount_series(np.asarray(us), params.delta, start=ts[0])


def discount_series(u: np.ndarray, delta: float, start: int = 0) -> float:
    """sum_k delta**(start + k) * u[k]."""
    return float(delta ** start * kernels.discounted_sum(np.ascontiguousarray(u, dtype=np.float64), delta))


def tail_bound(u_max: float, delta: float, horizon: int) -> float:
    """Bound on the omitted infinite tail: delta**H * u_max / (1 - delta)."""
    return delta ** horizon * abs(u_max) / (1.0 - delta)
