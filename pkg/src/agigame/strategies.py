"""Strategies on public history, audit selection and defection detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import OutOfRange
from .model import Action, JointChoice, Parameters
from .rng import Stream


class StrategyKind(str, Enum):
    GRIM_TRIGGER = "GrimTrigger"
    ALWAYS_COOPERATE = "AlwaysCooperate"
    ALWAYS_DEFECT = "AlwaysDefect"
    TIT_FOR_TAT = "TitForTat"
    RATIONAL_DEFECTOR = "RationalDefector"
    DEFECT_ONCE = "DefectOnce"


# Recognised keys of StrategySpec.parameters.
STRATEGY_PARAMETERS = {
    "share_when_defecting": "s used with Defect (0 couples defection to secrecy)",
    "punishment_length": "GrimTrigger/DefectOnce: steps of punishment after the latest violation; null = forever",
    "at": "DefectOnce: the single step at which to defect",
}


@dataclass(frozen=True)
class StrategySpec:
    kind: StrategyKind = StrategyKind.GRIM_TRIGGER
    r_cooperate: float = 0.5
    r_defect: float = 1.0
    parameters: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        for name in ("r_cooperate", "r_defect"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise OutOfRange(name, v, "resource fraction must lie in [0, 1]")
        unknown = set(self.parameters) - set(STRATEGY_PARAMETERS)
        if unknown:
            raise OutOfRange("parameters", sorted(unknown), "unknown strategy parameter")
        if self.kind is StrategyKind.DEFECT_ONCE and "at" not in self.parameters:
            raise OutOfRange("parameters", dict(self.parameters), "DefectOnce needs 'at'")

    @property
    def share_when_defecting(self) -> int:
        return int(self.parameters.get("share_when_defecting", 0))

    @cached_property
    def _cooperate(self) -> JointChoice:
        return JointChoice(Action.COOPERATE, self.r_cooperate, 1)

    @cached_property
    def _defect(self) -> JointChoice:
        return JointChoice(Action.DEFECT, self.r_defect, self.share_when_defecting)

    def cooperate(self) -> JointChoice:
        return self._cooperate

    def defect(self) -> JointChoice:
        return self._defect

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "r_cooperate": self.r_cooperate,
            "r_defect": self.r_defect,
            "parameters": dict(self.parameters),
        }


# ---------------------------------------------------------------- history


@dataclass(frozen=True)
class HistoryEntry:
    t: int
    K: float
    S: float
    violations: frozenset  # (player, t_detected) announced at this entry


@dataclass(frozen=True)
class PublicHistory:
    """Append-only public record: K(t), S(t) and announced violations.

    ``last_violation`` is the latest step at which any violation was
    detected (-1 if none), cached so trigger strategies stay O(1).
    """

    entries: tuple[HistoryEntry, ...] = ()
    last_violation: int = -1

    @classmethod
    def start(cls, K: float = 0.0, S: float = 0.0) -> "PublicHistory":
        return cls((HistoryEntry(0, K, S, frozenset()),))

    @property
    def t(self) -> int:
        return len(self.entries) - 1

    @property
    def any_violation(self) -> bool:
        return self.last_violation >= 0

    def violations(self) -> frozenset:
        out = set()
        for e in self.entries:
            out |= e.violations
        return frozenset(out)

    def violated_at(self, t_detected: int) -> bool:
        for e in reversed(self.entries):
            for _, td in e.violations:
                if td == t_detected:
                    return True
            if e.t <= t_detected:
                break
        return False


def update_history(history: PublicHistory, K: float, S: float, detections: Iterable) -> PublicHistory:
    """Append the next entry; ``detections`` are DetectionOutcome or flagged ids from the step just played."""
    t_detected = history.t
    flagged = set()
    for d in detections:
        if isinstance(d, DetectionOutcome):
            if d.flagged:
                flagged.add(d.player)
        else:
            flagged.add(d)
    viol = frozenset((p, t_detected) for p in flagged)
    entry = HistoryEntry(t_detected + 1, K, S, viol)
    last = t_detected if viol else history.last_violation
    return PublicHistory(history.entries + (entry,), last)


# ---------------------------------------------------------------- decisions


@dataclass(frozen=True)
class DecisionContext:
    """Private view a RationalDefector needs on top of public history."""

    compute: float
    expertise: float
    risk_tolerance: float
    T_i: float
    K: float
    V_i: int
    others_shared_T: float  # sum of s_j * T_j over rivals, assuming they share
    params: Parameters
    audit_frequency: float
    tau: int
    pool_access: bool = True


def lookahead_gain(spec: StrategySpec, ctx: DecisionContext) -> float:
    """W(defect) - W(cooperate) with W = U(t) + delta * U(t+1).

    Rivals' capabilities and the player's verification flag are held fixed;
    the chosen (r, s) is assumed to persist into t+1.
    """
    p = ctx.params
    a = 1.0 if ctx.pool_access else 0.0

    def w(r: float, s: int) -> float:
        s = s if ctx.pool_access else 0
        u0 = p.lambda_econ * ctx.T_i + a * (p.mu + p.phi * s) * ctx.K - p.eta * r * r
        T1 = ctx.T_i + p.alpha * r * ctx.compute * ctx.expertise * (1.0 + p.gamma * s)
        K1 = ctx.K + p.beta * (s * ctx.T_i + ctx.others_shared_T)
        u1 = p.lambda_econ * T1 + a * (p.mu + p.phi * s) * K1 + p.sigma * ctx.V_i * T1 - p.eta * r * r
        return u0 + p.delta * u1

    d = spec.defect()
    c = spec.cooperate()
    return w(d.r, d.s) - w(c.r, c.s)


def rational_defects(spec: StrategySpec, ctx: DecisionContext) -> bool:
    """(1 - rho) * gain > p_audit_freq * p_detection * xi * tau."""
    threshold = ctx.audit_frequency * ctx.params.p_detection * ctx.params.xi * ctx.tau
    return (1.0 - ctx.risk_tolerance) * lookahead_gain(spec, ctx) > threshold


def _punishing(history: PublicHistory, length) -> bool:
    if not history.any_violation:
        return False
    if length is None:
        return True
    # violation detected at step v is public from step v+1
    return history.t - history.last_violation <= int(length)


def decide(spec: StrategySpec, history: PublicHistory, player: str, rng: Stream | None = None, ctx=None) -> JointChoice:
    """Choice of ``player`` at step ``history.t``."""
    kind = spec.kind
    if kind is StrategyKind.ALWAYS_COOPERATE:
        return spec.cooperate()
    if kind is StrategyKind.ALWAYS_DEFECT:
        return spec.defect()
    if kind is StrategyKind.GRIM_TRIGGER:
        if _punishing(history, spec.parameters.get("punishment_length")):
            return spec.defect()
        return spec.cooperate()
    if kind is StrategyKind.DEFECT_ONCE:
        if history.t == int(spec.parameters["at"]):
            return spec.defect()
        if _punishing(history, spec.parameters.get("punishment_length")):
            return spec.defect()
        return spec.cooperate()
    if kind is StrategyKind.TIT_FOR_TAT:
        if history.t > 0 and history.violated_at(history.t - 1):
            return spec.defect()
        return spec.cooperate()
    if kind is StrategyKind.RATIONAL_DEFECTOR:
        if ctx is None:
            raise ValueError("RationalDefector needs a DecisionContext")
        return spec.defect() if rational_defects(spec, ctx) else spec.cooperate()
    raise ValueError(f"unhandled strategy kind {kind}")  # pragma: no cover


# ---------------------------------------------------------------- audits


def audit_count(audit_frequency: float, n: int) -> int:
    if not 0.0 <= audit_frequency <= 1.0:
        raise OutOfRange("audit_frequency", audit_frequency)
    # guard against ceil(0.1 * 30) == 4
    return min(n, math.ceil(audit_frequency * n - 1e-9))


def select_audit_targets(rng: Stream, active: Sequence[str], audit_frequency: float) -> frozenset:
    """Uniform sample without replacement of ceil(frequency * N) players (partial Fisher-Yates)."""
    from .dynamics import AuditSelection

    pool = list(active)
    n = len(pool)
    k = audit_count(audit_frequency, n)
    for i in range(k):
        j = i + rng.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return AuditSelection(pool[:k])


@dataclass(frozen=True, slots=True)
class DetectionOutcome:
    player: str
    audited: bool
    truly_defecting: bool
    flagged: bool


def detect(choice: JointChoice, audited: bool, rng: Stream, params: Parameters, player: str = "") -> DetectionOutcome:
    """Flag an audited defector with probability p_detection; never flag cooperators.

    Always consumes one uniform.
    """
    u = rng.random()
    defecting = choice.action is Action.DEFECT
    flagged = bool(audited and defecting and u < params.p_detection)
    return DetectionOutcome(player, bool(audited), defecting, flagged)
