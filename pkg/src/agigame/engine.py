"""Episode driver and Monte Carlo ensembles."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as _st

from . import kernels
from .dynamics import SECURITY_TIMINGS
from .errors import OutOfRange
from .mechanisms import (
    MechanismConfig,
    SanctionLevel,
    SanctionState,
    advance_sanction,
    effective_audit_frequency,
    milestone_schedule,
)
from .model import (
    Action,
    GameState,
    JointChoice,
    Parameters,
    Player,
    StepRecord,
    Trajectory,
    sample_entrant,
    sample_player,
    validate_parameters,
)
from .payoff import UtilityBreakdown, tail_bound
from .rng import Stream, derive_rng, episode_seed
from .strategies import (
    DecisionContext,
    PublicHistory,
    StrategyKind,
    StrategySpec,
    decide,
    detect,
    select_audit_targets,
    update_history,
)

DEFECT = Action.DEFECT
_ONES: dict[int, np.ndarray] = {}


def ones_cache(n: int) -> np.ndarray:
    a = _ONES.get(n)
    if a is None:
        a = _ONES[n] = np.ones(n)
        a.flags.writeable = False
    return a


STREAMS = ("population", "audit", "detection", "verification", "entry", "strategy")


@dataclass(frozen=True)
class SimulationConfig:
    params: Parameters = field(default_factory=Parameters)
    mechanisms: MechanismConfig = field(default_factory=MechanismConfig)
    default_strategy: StrategySpec = field(default_factory=StrategySpec)
    strategies: Mapping[int, StrategySpec] = field(default_factory=dict)  # founder slot -> spec
    entrant_strategy: StrategySpec | None = None
    master_seed: int = 0
    episodes: int = 1
    security_timing: str = "eq4"
    initial_capability: float = 0.0
    founders: tuple = ()  # optional explicit traits: dicts with compute, expertise, risk_tolerance
    expertise_range: tuple[float, float] = (0.0, 1.0)
    risk_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        validate_parameters(self.params)
        if isinstance(self.episodes, bool) or not isinstance(self.episodes, int) or self.episodes < 1:
            raise OutOfRange("episodes", self.episodes, "must be >= 1")
        if self.security_timing not in SECURITY_TIMINGS:
            raise OutOfRange("security_timing", self.security_timing)
        if self.initial_capability < 0:
            raise OutOfRange("initial_capability", self.initial_capability)
        for slot in self.strategies:
            if not 0 <= slot < self.params.n_initial:
                raise OutOfRange("strategies", slot, "founder slot out of range")
        if self.founders and len(self.founders) != self.params.n_initial:
            raise OutOfRange("founders", len(self.founders), "must list n_initial players")
        for name in ("expertise_range", "risk_range"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi <= 1.0:
                raise OutOfRange(name, (lo, hi))

    def strategy_for(self, slot: int) -> StrategySpec:
        return self.strategies.get(slot, self.default_strategy)

    def with_strategy(self, slot: int, spec: StrategySpec) -> "SimulationConfig":
        s = dict(self.strategies)
        s[slot] = spec
        return replace(self, strategies=s)

    @property
    def audit_frequency(self) -> float:
        return effective_audit_frequency(self.mechanisms)


@dataclass
class EpisodeSummary:
    seed: int
    ids: list[str]
    discounted: dict[str, float]
    defect_steps: int
    player_steps: int
    detections: int
    entrants: int
    tail_bound: float

    @property
    def defection_rate(self) -> float:
        return self.defect_steps / self.player_steps if self.player_steps else 0.0


def _founders(config: SimulationConfig, rng: Stream) -> list[Player]:
    p = config.params
    if config.founders:
        return [
            Player(f"p{k}", float(f["compute"]), float(f["expertise"]), float(f["risk_tolerance"]), 0)
            for k, f in enumerate(config.founders)
        ]
    return [
        sample_player(rng, p, 0, player_id=f"p{k}", expertise_range=config.expertise_range, risk_range=config.risk_range)
        for k in range(p.n_initial)
    ]


def spawn_entrants(rng: Stream, params: Parameters, t: int, next_index: int = 0, **trait_kwargs):
    """Poisson(lambda_entry) arrivals at step ``t``; they act from ``t + 1``."""
    n = rng.poisson(params.lambda_entry)
    return [
        sample_entrant(rng, params, t + 1, player_id=f"p{next_index + k}", **trait_kwargs)
        for k in range(n)
    ]


def run_episode(config: SimulationConfig, seed: int, record: bool = True):
    """Simulate one episode; returns a Trajectory, or an EpisodeSummary when ``record`` is false."""
    traj, summary = _simulate(config, seed, record)
    return traj if record else summary


def _simulate(config: SimulationConfig, seed: int, record: bool):
    p = config.params
    mech = config.mechanisms
    rngs = {name: derive_rng(seed, name) for name in STREAMS}
    audit_freq = config.audit_frequency
    tau = mech.effective_tau
    delta = p.delta
    trait_kw = {"expertise_range": config.expertise_range, "risk_range": config.risk_range}

    founders = _founders(config, rngs["population"])
    ids = [pl.id for pl in founders]
    players = {pl.id: pl for pl in founders}
    specs = [config.strategy_for(k) for k in range(len(founders))]
    entrant_spec = config.entrant_strategy or config.default_strategy
    c = np.array([pl.compute for pl in founders])
    e = np.array([pl.expertise for pl in founders])
    T = np.full(len(founders), float(config.initial_capability))
    V = np.zeros(len(founders))
    K = 0.0
    S = 0.0
    sanctions = [SanctionState() for _ in founders]
    history = PublicHistory.start(K, S)
    disc = [0.0] * len(founders)

    traj = None
    if record:
        traj = Trajectory(players=dict(players), seed=seed)
        if mech.staged_deployment_enabled:
            traj.milestones = milestone_schedule(mech.tau, p.horizon)

    defect_steps = player_steps = detections = n_entrants = 0
    u_max = 0.0
    w = 1.0
    uses_ctx = any(s.kind is StrategyKind.RATIONAL_DEFECTOR for s in specs) or (
        entrant_spec.kind is StrategyKind.RATIONAL_DEFECTOR and p.lambda_entry > 0
    )

    for t in range(p.horizon):
        n = len(ids)
        # (1) strategy choices
        if uses_ctx:
            total_T = float(T.sum())
        choices = []
        for k in range(n):
            ctx = None
            if specs[k].kind is StrategyKind.RATIONAL_DEFECTOR:
                pl = players[ids[k]]
                ctx = DecisionContext(
                    pl.compute, pl.expertise, pl.risk_tolerance, float(T[k]), K, int(V[k]),
                    total_T - float(T[k]), p, audit_freq, tau, not sanctions[k].blocks_pool,
                )
            choices.append(decide(specs[k], history, ids[k], rngs["strategy"], ctx))
        # (2) sanctions shape effective choices
        access = None
        for k in range(n):
            level = sanctions[k].level
            if level >= SanctionLevel.REVOKED:
                if access is None:
                    access = [1.0] * n
                access[k] = 0.0
                ch = choices[k]
                rr = min(ch.r, mech.r_cap) if level == SanctionLevel.EXCLUDED else ch.r
                if ch.s or rr != ch.r:
                    choices[k] = JointChoice(ch.action, rr, 0)
        access = ones_cache(n) if access is None else np.array(access)
        r = np.array([ch.r for ch in choices])
        s = np.array([float(ch.s) for ch in choices])
        # (3) audits, (4) detection: one uniform per player, audited or not
        selection = select_audit_targets(rngs["audit"], ids, audit_freq)
        det_rng = rngs["detection"]
        flagged = []
        audited_flags = [pid in selection for pid in ids]
        p_det = p.p_detection
        for k in range(n):
            u = det_rng.random()
            if choices[k].action is DEFECT:
                defect_steps += 1
                if audited_flags[k] and u < p_det:
                    flagged.append(ids[k])
        player_steps += n
        detections += len(flagged)
        # (5) transition
        T_next = kernels.capability_next(T, r, c, e, s, p.alpha, p.gamma)
        K_next = kernels.knowledge_next(K, s, T, p.beta)
        ver = rngs["verification"]
        p_aud = p.p_audit
        V_next = np.array([1.0 if (ver.random() < p_aud and audited_flags[k]) else 0.0 for k in range(n)])
        if config.security_timing == "eq4":
            S_next = float(kernels.security(V_next, T_next))
        else:
            S_next = float(kernels.security(V, T))
        # (6) stage utilities from the pre-transition state
        econ, sec, cost = kernels.stage_utilities(
            T, K, S, s, r, V, access, p.lambda_econ, p.mu, p.phi, p.sigma, p.xi, p.eta, p.theta
        )
        total = econ + sec - cost
        for k in range(n):
            disc[k] += w * total[k]
        step_max = float(np.abs(total).max())
        if step_max > u_max:
            u_max = step_max
        if record:
            state = GameState(
                t=t,
                T=dict(zip(ids, T.tolist())),
                K=float(K),
                V=dict(zip(ids, [int(v) for v in V])),
                S=float(S),
                sanctions=dict(zip(ids, sanctions)),
                active=tuple(ids),
            )
            utils = {
                ids[k]: UtilityBreakdown(float(econ[k]), float(sec[k]), float(cost[k]), float(total[k]))
                for k in range(n)
            }
            traj.append(StepRecord(state, dict(zip(ids, choices)), frozenset(selection), frozenset(flagged), utils))
        # (7) sanctions advance
        if mech.sanctions_enabled:
            fset = set(flagged)
            for k in range(n):
                violated = ids[k] in fset
                compliant = audited_flags[k] and V_next[k] == 1.0 and not violated
                if violated or sanctions[k].pending or (compliant and sanctions[k].level):
                    sanctions[k] = advance_sanction(
                        sanctions[k], violated, compliant, t,
                        sanction_delay=mech.sanction_delay, redemption_steps=mech.redemption_steps,
                    )
        history = update_history(history, float(K_next), S_next, flagged)
        T, K, V, S = T_next, float(K_next), V_next, S_next
        w *= delta
        # (8) entrants
        new = spawn_entrants(rngs["entry"], p, t, len(ids), **trait_kw)
        if new:
            n_entrants += len(new)
            for pl, t0 in new:
                ids.append(pl.id)
                players[pl.id] = pl
                specs.append(entrant_spec)
                sanctions.append(SanctionState())
                disc.append(0.0)
                if entrant_spec.kind is StrategyKind.RATIONAL_DEFECTOR:
                    uses_ctx = True
                if record:
                    traj.players[pl.id] = pl
                    traj.entrants.append(pl.id)
            c = np.append(c, [pl.compute for pl, _ in new])
            e = np.append(e, [pl.expertise for pl, _ in new])
            T = np.append(T, [t0 for _, t0 in new])
            V = np.append(V, np.zeros(len(new)))

    bound = tail_bound(u_max, delta, p.horizon)
    if record:
        traj.final_state = GameState(
            t=p.horizon,
            T=dict(zip(ids, T.tolist())),
            K=float(K),
            V=dict(zip(ids, [int(v) for v in V])),
            S=float(S),
            sanctions=dict(zip(ids, sanctions)),
            active=tuple(ids),
        )
        traj.tail_bound = bound
    summary = EpisodeSummary(seed, list(ids), dict(zip(ids, disc)), defect_steps, player_steps, detections, n_entrants, bound)
    if record:
        traj.summary = summary
    return traj, summary


# ---------------------------------------------------------------- ensembles


def mean_ci(values: Sequence[float], level: float = 0.95) -> tuple[float, float, float, float]:
    """(mean, sample variance, lo, hi) with a Student-t interval; degenerate for n == 1."""
    a = np.asarray(values, dtype=np.float64)
    n = a.size
    m = float(a.mean())
    if n < 2:
        return m, 0.0, m, m
    var = float(a.var(ddof=1))
    half = float(_st.t.ppf(0.5 + level / 2, n - 1)) * math.sqrt(var / n)
    return m, var, m - half, m + half


@dataclass
class Stat:
    mean: float
    variance: float
    ci_low: float
    ci_high: float
    n: int

    @classmethod
    def of(cls, values) -> "Stat":
        m, v, lo, hi = mean_ci(values)
        return cls(m, v, lo, hi, len(values))

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "ci_low": self.ci_low, "ci_high": self.ci_high, "n": self.n}


@dataclass
class EnsembleStats:
    episodes: list[EpisodeSummary]
    discounted_utility: dict[str, Stat]  # founder id -> stat
    defection_frequency: Stat
    detections: Stat
    entrants: Stat

    def to_dict(self) -> dict:
        return {
            "discounted_utility": {k: v.to_dict() for k, v in self.discounted_utility.items()},
            "defection_frequency": self.defection_frequency.to_dict(),
            "detections": self.detections.to_dict(),
            "entrants": self.entrants.to_dict(),
            "episodes": [
                {
                    "episode": i,
                    "seed": ep.seed,
                    "discounted_utility": ep.discounted,
                    "defection_frequency": ep.defection_rate,
                    "detections": ep.detections,
                    "entrants": ep.entrants,
                    "tail_bound": ep.tail_bound,
                }
                for i, ep in enumerate(self.episodes)
            ],
        }


def aggregate(episodes: Sequence[EpisodeSummary], founder_ids: Sequence[str]) -> EnsembleStats:
    """Statistics over episodes listed in episode-index order."""
    return EnsembleStats(
        episodes=list(episodes),
        discounted_utility={pid: Stat.of([ep.discounted[pid] for ep in episodes]) for pid in founder_ids},
        defection_frequency=Stat.of([ep.defection_rate for ep in episodes]),
        detections=Stat.of([ep.detections for ep in episodes]),
        entrants=Stat.of([ep.entrants for ep in episodes]),
    )


def _summary_job(args):
    config, seed = args
    return _simulate(config, seed, False)[1]


def _trajectory_job(args):
    config, seed = args
    return _simulate(config, seed, True)[0]


def episode_seeds(config: SimulationConfig) -> list[int]:
    return [episode_seed(config.master_seed, i) for i in range(config.episodes)]


def run_episodes(config: SimulationConfig, record: bool, workers: int = 1, order: Sequence[int] | None = None) -> list:
    """Run every episode, in ``order`` if given, returning results in episode-index order."""
    seeds = episode_seeds(config)
    idx = list(range(len(seeds))) if order is None else list(order)
    if sorted(idx) != list(range(len(seeds))):
        raise ValueError("order must be a permutation of episode indices")
    job = _trajectory_job if record else _summary_job
    args = [(config, seeds[i]) for i in idx]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(job, args))
    else:
        out = [job(a) for a in args]
    results = [None] * len(seeds)
    for i, res in zip(idx, out):
        results[i] = res
    return results


def run_ensemble(config: SimulationConfig, workers: int = 1, order: Sequence[int] | None = None) -> EnsembleStats:
    summaries = run_episodes(config, False, workers, order)
    founder_ids = [f"p{k}" for k in range(config.params.n_initial)]
    return aggregate(summaries, founder_ids)
