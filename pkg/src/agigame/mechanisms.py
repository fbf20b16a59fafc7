"""Governance mechanisms: pre-registration commitments, audit boost, staged
deployment milestones, graduated sanctions and membership tiers."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Mapping

from .errors import EmptyPlan, IllegalSanctionTransition, InvalidTau, OutOfRange
from .model import JointChoice, Player

# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class MechanismConfig:
    preregistration_enabled: bool = False
    base_audit_frequency: float = 0.5
    prereg_audit_boost: float = 0.0
    staged_deployment_enabled: bool = False
    tau: int = 1
    sanction_delay: int = 1
    sanctions_enabled: bool = True
    redemption_steps: int = 5
    r_cap: float = 0.2
    compute_fraction_min: float = 0.20
    capability_fraction_min: float = 0.80

    def __post_init__(self):
        if not 0.0 <= self.base_audit_frequency <= 1.0:
            raise OutOfRange("base_audit_frequency", self.base_audit_frequency)
        if self.prereg_audit_boost < 0:
            raise OutOfRange("prereg_audit_boost", self.prereg_audit_boost)
        if isinstance(self.tau, bool) or not isinstance(self.tau, int) or self.tau < 1:
            raise OutOfRange("tau", self.tau, "must be an integer >= 1")
        if self.sanction_delay < 0:
            raise OutOfRange("sanction_delay", self.sanction_delay)
        if self.redemption_steps < 1:
            raise OutOfRange("redemption_steps", self.redemption_steps)
        if not 0.0 <= self.r_cap <= 1.0:
            raise OutOfRange("r_cap", self.r_cap)
        for name in ("compute_fraction_min", "capability_fraction_min"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise OutOfRange(name, getattr(self, name))

    @property
    def effective_tau(self) -> int:
        """Milestone spacing when staged deployment is on, otherwise 1."""
        return self.tau if self.staged_deployment_enabled else 1


def effective_audit_frequency(config: MechanismConfig) -> float:
    boost = config.prereg_audit_boost if config.preregistration_enabled else 0.0
    return min(1.0, max(0.0, config.base_audit_frequency + boost))


def milestone_schedule(tau: int, horizon: int) -> tuple[int, ...]:
    if isinstance(tau, bool) or not isinstance(tau, int) or tau < 1:
        raise InvalidTau(f"tau must be a positive integer, got {tau!r}")
    return tuple(range(tau, horizon + 1, tau))


# ---------------------------------------------------------------- commitments


def canonical_plan(plan: Mapping) -> bytes:
    """Canonical JSON bytes: sorted keys, no insignificant whitespace, UTF-8."""
    return json.dumps(plan, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


@dataclass(frozen=True)
class Commitment:
    player: str
    t_committed: int
    digest: bytes
    revealed: bytes | None = None

    def reveal(self, plan: bytes) -> "Commitment":
        return replace(self, revealed=bytes(plan))


def commit_preregistration(plan: bytes, player: str, t: int) -> Commitment:
    if isinstance(plan, Mapping):
        plan = canonical_plan(plan)
    if not plan:
        raise EmptyPlan("plan encoding is empty")
    return Commitment(player, t, hashlib.sha256(plan).digest())


def verify_commitment(commitment: Commitment, revealed: bytes) -> bool:
    if isinstance(revealed, Mapping):
        revealed = canonical_plan(revealed)
    return hashlib.sha256(revealed).digest() == commitment.digest


# ---------------------------------------------------------------- sanctions


class SanctionLevel(IntEnum):
    NONE = 0
    WARNING = 1
    REVOKED = 2
    EXCLUDED = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()


def check_transition(old: SanctionLevel, new: SanctionLevel) -> SanctionLevel:
    """Legal moves: stay, one rung up, or one rung down."""
    old, new = SanctionLevel(old), SanctionLevel(new)
    if abs(new - old) > 1:
        raise IllegalSanctionTransition(f"{old.label} -> {new.label} skips a rung")
    return new


@dataclass(frozen=True, slots=True)
class SanctionState:
    level: SanctionLevel = SanctionLevel.NONE
    since: int = 0
    redemption_counter: int = 0
    pending: tuple[int, ...] = ()  # activation times of queued escalations

    @property
    def blocks_pool(self) -> bool:
        return self.level >= SanctionLevel.REVOKED

    def moved_to(self, level: SanctionLevel, t: int) -> "SanctionState":
        check_transition(self.level, level)
        return replace(self, level=SanctionLevel(level), since=t, redemption_counter=0)


def advance_sanction(
    state: SanctionState,
    violated_this_step: bool,
    verified_compliant: bool,
    t: int,
    *,
    sanction_delay: int = 1,
    redemption_steps: int = 5,
) -> SanctionState:
    """Sanction state in force from step ``t + 1`` on.

    A violation at ``t`` queues one escalation that lands at ``t + sanction_delay``
    (immediately when the delay is 0) and wipes redemption progress. Verified
    compliance counts toward redemption; ``redemption_steps`` consecutive
    compliant steps de-escalate one rung.
    """
    if violated_this_step and verified_compliant:
        raise ValueError("violation and verified compliance are mutually exclusive")
    st = state
    if violated_this_step:
        st = replace(st, pending=st.pending + (t + sanction_delay,), redemption_counter=0)
    due = [d for d in st.pending if d <= t + 1]
    if due:
        st = replace(st, pending=tuple(d for d in st.pending if d > t + 1))
        for d in due:
            if st.level < SanctionLevel.EXCLUDED:
                st = st.moved_to(SanctionLevel(st.level + 1), d)
    if verified_compliant and st.level > SanctionLevel.NONE and not st.pending:
        count = st.redemption_counter + 1
        if count >= redemption_steps:
            st = st.moved_to(SanctionLevel(st.level - 1), t + 1)
        else:
            st = replace(st, redemption_counter=count)
    return st


def apply_sanctions(sanctions: Mapping[str, SanctionState], choices: Mapping[str, JointChoice], r_cap: float = 0.2):
    """Effective choices under current sanctions.

    Revoked and Excluded players are cut off the shared pool (sharing forced
    to 0); Excluded players also have their resource fraction capped.
    Warning has no effect. Pool access for the payoff is read from the
    sanction state itself.
    """
    out = {}
    for pid, ch in choices.items():
        st = sanctions.get(pid)
        level = st.level if st is not None else SanctionLevel.NONE
        if level >= SanctionLevel.REVOKED:
            r = min(ch.r, r_cap) if level == SanctionLevel.EXCLUDED else ch.r
            if ch.s != 0 or r != ch.r:
                ch = JointChoice(ch.action, r, 0)
        out[pid] = ch
    return out


# ---------------------------------------------------------------- membership


class MembershipTier(str, Enum):
    CORE = "Core"
    ASSOCIATE = "Associate"
    OBSERVER = "Observer"


def classify_membership(
    player: Player,
    capability: float,
    max_compute: float,
    max_capability: float,
    thresholds: tuple[float, float] = (0.20, 0.80),
) -> MembershipTier:
    compute_min, capability_min = thresholds
    compute_ok = player.compute >= compute_min * max_compute
    capability_ok = capability >= capability_min * max_capability
    if compute_ok and capability_ok:
        return MembershipTier.CORE
    if compute_ok or capability_ok:
        return MembershipTier.ASSOCIATE
    return MembershipTier.OBSERVER


def classify_population(players: Mapping[str, Player], capabilities: Mapping[str, float], thresholds=(0.20, 0.80)):
    """Tier for every player relative to the current maxima."""
    max_c = max(players[p].compute for p in capabilities)
    max_T = max(capabilities.values())
    return {p: classify_membership(players[p], capabilities[p], max_c, max_T, thresholds) for p in capabilities}
