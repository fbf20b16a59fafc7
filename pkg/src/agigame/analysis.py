"""Equilibrium diagnostics: theorem conditions, folk threshold, defection bound,
paired deviation tests, supermodularity of sharing, empirical defection rates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .dynamics import step_capability, step_knowledge, step_security
from .engine import EpisodeSummary, SimulationConfig, mean_ci, run_episodes
from .errors import DegenerateThreshold, InsufficientEpisodes, NegativeArgument, TruncationTooCoarse
from .model import Action, GameState, JointChoice, Parameters, Player
from .payoff import stage_utility
from .rng import Stream
from .strategies import StrategyKind, StrategySpec

# ---------------------------------------------------------------- cooperation conditions


@dataclass(frozen=True)
class Condition:
    holds: bool
    margin: float


@dataclass(frozen=True)
class ConditionReport:
    cond1: Condition  # beta > gamma + xi / mu
    cond2: Condition  # theta <= mu * beta / delta
    cond3: Condition  # xi >= lambda_econ * alpha / delta
    theta_max: float
    xi_min: float
    pi_cooperate: float
    pi_defect: float
    pi_punishment: float
    folk_delta_min: float | None
    folk_degenerate: bool
    folk_satisfied: bool
    delta: float

    @property
    def all_conditions(self) -> bool:
        return self.cond1.holds and self.cond2.holds and self.cond3.holds

    def require_threshold(self) -> float:
        if self.folk_degenerate:
            raise DegenerateThreshold(
                f"pi_defect={self.pi_defect} <= pi_punishment={self.pi_punishment}: delta_min undefined"
            )
        return self.folk_delta_min

    def to_dict(self) -> dict:
        d = asdict(self)
        d["all_conditions"] = self.all_conditions
        return d


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def check_theorem1(params: Parameters) -> ConditionReport:
    """Evaluate the three cooperation conditions and the folk-theorem threshold.

    The conditions are evaluated in floating point exactly in their printed
    form, so ``theta == mu * beta / delta`` counts as affordable. When
    ``pi_defect <= pi_punishment`` the threshold is reported as degenerate and
    patience is judged on the undivided comparison
    ``pi_cooperate >= (1 - delta) * pi_defect + delta * pi_punishment``.
    """
    p = params
    rhs1 = p.gamma + _ratio(p.xi, p.mu)
    theta_max = p.mu * p.beta / p.delta
    xi_min = p.lambda_econ * p.alpha / p.delta
    cond1 = Condition(p.beta > rhs1, p.beta - rhs1)
    cond2 = Condition(p.theta <= theta_max, theta_max - p.theta)
    cond3 = Condition(p.xi >= xi_min, p.xi - xi_min)

    pi_c = p.mu * p.beta
    pi_d = p.lambda_econ * p.alpha
    pi_p = p.xi
    if pi_d > pi_p:
        delta_min = (pi_d - pi_c) / (pi_d - pi_p)
        degenerate = False
        folk = p.delta >= delta_min
    else:
        delta_min = None
        degenerate = True
        folk = pi_c >= (1.0 - p.delta) * pi_d + p.delta * pi_p
    return ConditionReport(cond1, cond2, cond3, theta_max, xi_min, pi_c, pi_d, pi_p, delta_min, degenerate, folk, p.delta)


# ---------------------------------------------------------------- defection bound


def defection_bound(p_audit_freq: float, xi: float, tau: float) -> float:
    """1 / (1 + p * xi * tau)."""
    for name, v in (("p_audit_freq", p_audit_freq), ("xi", xi), ("tau", tau)):
        if v < 0:
            raise NegativeArgument(f"{name}={v} must be >= 0")
    return 1.0 / (1.0 + p_audit_freq * xi * tau)


# ---------------------------------------------------------------- deviations


class Verdict(str, Enum):
    NO_PROFITABLE_DEVIATION = "NoProfitableDeviation"
    PROFITABLE_DEVIATION = "ProfitableDeviation"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class DeviationReport:
    deviation: dict
    deviant: str
    baseline_mean: float
    baseline_ci: tuple[float, float]
    deviant_mean: float
    deviant_ci: tuple[float, float]
    difference_mean: float
    difference_ci: tuple[float, float]
    verdict: Verdict
    episodes: int
    tail_bound: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        return d


def deviation_library(baseline: StrategySpec, defect_at: int = 0) -> dict[str, StrategySpec]:
    """AlwaysDefect, a one-shot defection at ``defect_at``, and defection that keeps sharing."""
    return {
        "always_defect": StrategySpec(StrategyKind.ALWAYS_DEFECT, baseline.r_cooperate, baseline.r_defect),
        "defect_once": StrategySpec(
            StrategyKind.DEFECT_ONCE, baseline.r_cooperate, baseline.r_defect, {"at": defect_at}
        ),
        "defect_sharing": StrategySpec(
            StrategyKind.ALWAYS_DEFECT, baseline.r_cooperate, baseline.r_defect, {"share_when_defecting": 1}
        ),
    }


def _verdict(lo: float, hi: float) -> Verdict:
    if hi <= 0.0:
        return Verdict.NO_PROFITABLE_DEVIATION
    if lo > 0.0:
        return Verdict.PROFITABLE_DEVIATION
    return Verdict.INCONCLUSIVE


def compare_paired(
    baseline: Sequence[EpisodeSummary],
    deviant_runs: Sequence[EpisodeSummary],
    deviant: str,
    deviation: StrategySpec,
    precision: float | None = None,
    tail_tolerance: float | None = None,
) -> DeviationReport:
    """Verdict from the 95% interval of the paired (common-seed) utility difference."""
    if [b.seed for b in baseline] != [d.seed for d in deviant_runs]:
        raise ValueError("baseline and deviation runs must share episode seeds")
    base = np.array([b.discounted[deviant] for b in baseline])
    dev = np.array([d.discounted[deviant] for d in deviant_runs])
    bm, _, blo, bhi = mean_ci(base)
    dm, _, dlo, dhi = mean_ci(dev)
    diff = dev - base
    fm, _, flo, fhi = mean_ci(diff)
    if precision is not None and fhi - flo > precision:
        raise InsufficientEpisodes(f"CI width {fhi - flo:.3g} exceeds requested precision {precision:.3g}")
    bound = max(max(b.tail_bound for b in baseline), max(d.tail_bound for d in deviant_runs))
    if tail_tolerance is not None and bound > tail_tolerance:
        raise TruncationTooCoarse(f"tail bound {bound:.3g} exceeds tolerance {tail_tolerance:.3g}")
    return DeviationReport(
        deviation.to_dict(), deviant, bm, (blo, bhi), dm, (dlo, dhi), fm, (flo, fhi),
        _verdict(flo, fhi), len(base), bound,
    )


def deviation_test(
    config: SimulationConfig,
    deviant: int,
    deviation: StrategySpec,
    *,
    precision: float | None = None,
    tail_tolerance: float | None = None,
    baseline: Sequence[EpisodeSummary] | None = None,
) -> DeviationReport:
    """Paired ensembles: the configured profile vs. founder ``deviant`` switching to ``deviation``."""
    if baseline is None:
        baseline = run_episodes(config, record=False)
    dev_runs = run_episodes(config.with_strategy(deviant, deviation), record=False)
    return compare_paired(baseline, dev_runs, f"p{deviant}", deviation, precision, tail_tolerance)


def deviation_suite(config: SimulationConfig, deviant: int = 0, library: dict | None = None, **kwargs) -> dict[str, DeviationReport]:
    """Run every deviation in ``library`` against one shared baseline ensemble."""
    if library is None:
        library = deviation_library(config.strategy_for(deviant))
    baseline = run_episodes(config, record=False)
    return {
        name: deviation_test(config, deviant, spec, baseline=baseline, **kwargs)
        for name, spec in library.items()
    }


# ---------------------------------------------------------------- supermodularity


@dataclass
class SupermodularitySample:
    state: GameState
    players: dict[str, Player]
    choices: dict[str, JointChoice]
    i: str
    j: str


@dataclass
class SupermodularityReport:
    samples: int
    fraction_nonnegative: float
    min_increasing_difference: float
    max_relative_error: float  # vs. delta * phi * beta * T_j
    differences: np.ndarray = field(repr=False)
    closed_form: np.ndarray = field(repr=False)


def two_period_value(sample: SupermodularitySample, params: Parameters, s_i: int, s_j: int) -> float:
    """U_i(t) + delta * U_i(t+1) with (s_i, s_j) held for both periods and V frozen."""
    ch = dict(sample.choices)
    ch[sample.i] = replace(ch[sample.i], s=s_i)
    ch[sample.j] = replace(ch[sample.j], s=s_j)
    st = sample.state
    T1 = step_capability(st, ch, params, sample.players)
    K1 = step_knowledge(st, ch, params)
    S1 = step_security(T1, st.V)
    nxt = GameState(st.t + 1, T1, K1, dict(st.V), S1, dict(st.sanctions), st.active)
    return stage_utility(st, sample.i, ch[sample.i], params).total + params.delta * stage_utility(
        nxt, sample.i, ch[sample.i], params
    ).total


def increasing_difference(sample: SupermodularitySample, params: Parameters) -> float:
    """[W(1,1) - W(0,1)] - [W(1,0) - W(0,0)]."""
    d1 = two_period_value(sample, params, 1, 1) - two_period_value(sample, params, 0, 1)
    d0 = two_period_value(sample, params, 1, 0) - two_period_value(sample, params, 0, 0)
    return d1 - d0


def k_channel_difference(sample: SupermodularitySample, params: Parameters) -> float:
    return params.delta * params.phi * params.beta * sample.state.T[sample.j]


def random_state_sampler(n_players: int = 4, t_range=(0.1, 10.0), k_range=(0.0, 10.0)) -> Callable[[Stream, Parameters], SupermodularitySample]:
    """Sampler of unsanctioned N-player states with random capabilities, flags and choices."""
    from .mechanisms import SanctionState

    def sample(rng: Stream, params: Parameters) -> SupermodularitySample:
        ids = tuple(f"p{k}" for k in range(n_players))
        players = {
            pid: Player(pid, rng.lognormal(params.mu_c, params.sigma_c), rng.random(), rng.random())
            for pid in ids
        }
        T = {pid: rng.uniform(*t_range) for pid in ids}
        V = {pid: int(rng.random() < 0.5) for pid in ids}
        K = rng.uniform(*k_range)
        S = sum(V[p] * T[p] for p in ids)
        choices = {
            pid: JointChoice(Action.COOPERATE if rng.random() < 0.5 else Action.DEFECT, rng.random(), int(rng.random() < 0.5))
            for pid in ids
        }
        state = GameState(0, T, K, V, S, {pid: SanctionState() for pid in ids}, ids)
        return SupermodularitySample(state, players, choices, ids[0], ids[1])

    return sample


def supermodularity_check(
    params: Parameters,
    sampler: Callable[[Stream, Parameters], SupermodularitySample],
    sample_count: int,
    rng: Stream,
    rel_tol: float = 1e-12,
) -> SupermodularityReport:
    """Numerical two-period increasing differences in sharing over sampled states.

    A difference counts as nonnegative if it is >= -rel_tol * max|W|, which
    only matters when the true value is exactly zero.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    diffs = np.empty(sample_count)
    closed = np.empty(sample_count)
    nonneg = 0
    worst = 0.0
    for k in range(sample_count):
        smp = sampler(rng, params)
        w = [two_period_value(smp, params, a, b) for a in (0, 1) for b in (0, 1)]
        d = (w[3] - w[2]) - (w[1] - w[0])
        cf = k_channel_difference(smp, params)
        diffs[k] = d
        closed[k] = cf
        scale = max(abs(x) for x in w)
        if d >= -rel_tol * scale:
            nonneg += 1
        if cf != 0.0:
            worst = max(worst, abs(d - cf) / abs(cf))
        elif d != 0.0:
            worst = max(worst, abs(d) / max(scale, 1.0))
    return SupermodularityReport(sample_count, nonneg / sample_count, float(diffs.min()), worst, diffs, closed)


# ---------------------------------------------------------------- defection rates


@dataclass
class DefectionRateReport:
    rate: float
    ci: tuple[float, float]
    epsilon: float
    audit_frequency: float
    xi: float
    tau: int
    within_bound: bool
    episodes: int
    label: str = "model-conditional (RationalDefector)"

    def to_dict(self) -> dict:
        return asdict(self)


def pooled_rate_ci(episodes: Sequence[EpisodeSummary], level: float = 0.95) -> tuple[float, float, float]:
    """Ratio estimate sum(defect)/sum(steps) with a cluster (per-episode) delta-method interval."""
    from scipy import stats as st

    D = np.array([ep.defect_steps for ep in episodes], dtype=float)
    N = np.array([ep.player_steps for ep in episodes], dtype=float)
    rate = float(D.sum() / N.sum())
    n = len(episodes)
    if n < 2:
        return rate, rate, rate
    resid = D - rate * N
    se = math.sqrt(float((resid ** 2).sum()) / (n * (n - 1))) / float(N.mean())
    half = float(st.t.ppf(0.5 + level / 2, n - 1)) * se
    return rate, max(0.0, rate - half), min(1.0, rate + half)


def empirical_defection_rate(config: SimulationConfig, episodes: Sequence[EpisodeSummary] | None = None) -> DefectionRateReport:
    """Measured defection rate vs. 1/(1 + p*xi*tau); passes if the upper 95% bound is <= epsilon."""
    if episodes is None:
        episodes = run_episodes(config, record=False)
    rate, lo, hi = pooled_rate_ci(episodes)
    freq = config.audit_frequency
    tau = config.mechanisms.effective_tau
    eps = defection_bound(freq, config.params.xi, tau)
    return DefectionRateReport(rate, (lo, hi), eps, freq, config.params.xi, tau, hi <= eps, len(episodes))
