"""One-step state transition: capability, shared knowledge, verification, security."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .errors import KeyMismatch, MissingChoice
from .model import GameState, JointChoice, Parameters
from .rng import Stream

SECURITY_TIMINGS = ("eq4", "sec24")


class AuditSelection(frozenset):
    """Player ids audited this step."""

    def check(self, active: Iterable[str]) -> "AuditSelection":
        extra = self - set(active)
        if extra:
            raise KeyMismatch(f"audit selection contains inactive players {sorted(extra)}")
        return self


def _choice_arrays(state: GameState, choices: Mapping[str, JointChoice]):
    r = np.empty(len(state.active))
    s = np.empty(len(state.active))
    for k, pid in enumerate(state.active):
        try:
            ch = choices[pid]
        except KeyError:
            raise MissingChoice(pid) from None
        r[k] = ch.r
        s[k] = ch.s
    return r, s


def step_capability(state: GameState, choices, params: Parameters, players) -> dict[str, float]:
    """T_i + alpha * r_i * c_i * e_i * (1 + gamma * s_i) for every active player.

    ``players`` maps id -> Player (for compute and expertise).
    """
    r, s = _choice_arrays(state, choices)
    T = np.array([state.T[p] for p in state.active])
    c = np.array([players[p].compute for p in state.active])
    e = np.array([players[p].expertise for p in state.active])
    out = kernels.capability_next(T, r, c, e, s, params.alpha, params.gamma)
    return dict(zip(state.active, out.tolist()))


def step_knowledge(state: GameState, choices, params: Parameters) -> float:
    """K + beta * sum_i s_i * T_i, using the pre-update capabilities."""
    _, s = _choice_arrays(state, choices)
    T = np.array([state.T[p] for p in state.active])
    return float(kernels.knowledge_next(state.K, s, T, params.beta))


def step_verification(selection, rng: Stream, params: Parameters, players: Iterable[str]) -> dict[str, int]:
    """V_i = 1 iff i is audited and the audit succeeds (probability p_audit).

    One uniform is consumed per player, audited or not, so the stream stays
    aligned across counterfactual runs.
    """
    out = {}
    for pid in players:
        u = rng.random()
        out[pid] = 1 if (pid in selection and u < params.p_audit) else 0
    return out


def step_security(capabilities_next: Mapping[str, float], verification_next: Mapping[str, int], params=None) -> float:
    """S = sum_i V_i * T_i over matching player keys."""
    if set(capabilities_next) != set(verification_next):
        raise KeyMismatch("capability and verification maps cover different players")
    ids = list(capabilities_next)
    T = np.array([capabilities_next[p] for p in ids])
    V = np.array([float(verification_next[p]) for p in ids])
    return float(kernels.security(V, T))


def transition(
    state: GameState,
    choices: Mapping[str, JointChoice],
    selection,
    rng: Stream,
    params: Parameters,
    players,
    security_timing: str = "eq4",
) -> GameState:
    """Compose the four updates and advance ``t``; sanction states pass through.

    ``security_timing="sec24"`` uses the alternative S(t+1) = sum V_i(t) T_i(t).
    """
    if security_timing not in SECURITY_TIMINGS:
        raise ValueError(f"security_timing must be one of {SECURITY_TIMINGS}")
    T_next = step_capability(state, choices, params, players)
    K_next = step_knowledge(state, choices, params)
    V_next = step_verification(selection, rng, params, state.active)
    if security_timing == "eq4":
        S_next = step_security(T_next, V_next)
    else:
        S_next = step_security(state.T, state.V)
    return GameState(
        t=state.t + 1,
        T=T_next,
        K=K_next,
        V=V_next,
        S=S_next,
        sanctions=dict(state.sanctions),
        active=state.active,
    )
