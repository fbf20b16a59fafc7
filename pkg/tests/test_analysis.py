import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agigame import MechanismConfig, Parameters, SimulationConfig
from agigame.analysis import (
    Verdict,
    check_theorem1,
    compare_paired,
    defection_bound,
    deviation_library,
    deviation_test,
    empirical_defection_rate,
    increasing_difference,
    k_channel_difference,
    pooled_rate_ci,
    random_state_sampler,
    supermodularity_check,
)
from agigame.engine import EpisodeSummary, run_episodes
from agigame.errors import DegenerateThreshold, InsufficientEpisodes, NegativeArgument, TruncationTooCoarse
from agigame.rng import derive_rng
from agigame.strategies import StrategySpec


def test_cond1_margin():
    rep = check_theorem1(Parameters(beta=1.0, gamma=0.3, xi=0.2, mu=1.0))
    assert rep.cond1.holds
    assert rep.cond1.margin == pytest.approx(0.5)


def test_cond1_fails_with_small_mu():
    rep = check_theorem1(Parameters(beta=0.5, gamma=0.1, xi=0.2, mu=0.1))
    assert not rep.cond1.holds and rep.cond1.margin < 0


def test_folk_threshold_example():
    p = Parameters(lambda_econ=1.0, alpha=1.0, mu=1.0, beta=0.6, xi=0.2, delta=0.7)
    rep = check_theorem1(p)
    assert rep.pi_defect == 1.0 and rep.pi_cooperate == 0.6 and rep.pi_punishment == 0.2
    assert rep.folk_delta_min == pytest.approx(0.5)
    assert rep.require_threshold() == pytest.approx(0.5)
    assert rep.folk_satisfied
    assert not check_theorem1(p.replace(delta=0.4)).folk_satisfied


def test_folk_degenerate():
    rep = check_theorem1(Parameters(lambda_econ=0.1, alpha=0.1, xi=0.5))
    assert rep.folk_degenerate and rep.folk_delta_min is None
    with pytest.raises(DegenerateThreshold):
        rep.require_threshold()


def test_theta_boundary_inclusive():
    p = Parameters(mu=1.0, beta=0.5, delta=0.5, theta=1.0)
    assert check_theorem1(p).cond2.holds
    assert not check_theorem1(p.replace(theta=1.0 + 1e-12)).cond2.holds


def test_xi_boundary_inclusive():
    p = Parameters(lambda_econ=0.5, alpha=0.5, delta=0.5, xi=0.5)
    assert check_theorem1(p).cond3.holds
    assert not check_theorem1(p.replace(xi=0.5 - 1e-12)).cond3.holds


def test_report_serialises():
    d = check_theorem1(Parameters()).to_dict()
    assert {"cond1", "cond2", "cond3", "all_conditions", "folk_satisfied"} <= set(d)


def test_epsilon_examples():
    assert defection_bound(0, 1, 1) == 1.0
    assert defection_bound(0.5, 2, 4) == pytest.approx(1 / 5)
    assert defection_bound(1, 1, 1) == 0.5
    with pytest.raises(NegativeArgument):
        defection_bound(-0.1, 1, 1)


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(0, 10), st.floats(0, 50), st.floats(0, 1), st.floats(0, 10), st.floats(0, 50))
def test_epsilon_monotone(p1, x1, t1, p2, x2, t2):
    a = defection_bound(min(p1, p2), min(x1, x2), min(t1, t2))
    b = defection_bound(max(p1, p2), max(x1, x2), max(t1, t2))
    assert 0 < b <= a <= 1


def _cfg(**kw):
    p = Parameters(lambda_entry=0.0, horizon=20, n_initial=3, delta=0.8)
    return SimulationConfig(params=p, mechanisms=MechanismConfig(base_audit_frequency=0.5),
                            default_strategy=StrategySpec("GrimTrigger", 0.5, 1.0), episodes=30, master_seed=3, **kw)


def test_null_deviation_is_exact_zero():
    cfg = _cfg()
    rep = deviation_test(cfg, 0, cfg.strategy_for(0))
    assert rep.difference_mean == 0.0
    assert rep.difference_ci == (0.0, 0.0)
    assert rep.verdict is Verdict.NO_PROFITABLE_DEVIATION


def test_always_defect_unprofitable_under_defaults():
    cfg = _cfg()
    rep = deviation_test(cfg, 0, deviation_library(cfg.strategy_for(0))["always_defect"])
    assert rep.verdict is Verdict.NO_PROFITABLE_DEVIATION
    assert rep.difference_ci[1] < 0


def test_precision_and_tail_guards():
    cfg = _cfg()
    dev = deviation_library(cfg.strategy_for(0))["always_defect"]
    with pytest.raises(InsufficientEpisodes):
        deviation_test(cfg, 0, dev, precision=1e-9)
    with pytest.raises(TruncationTooCoarse):
        deviation_test(cfg, 0, dev, tail_tolerance=1e-12)


def test_compare_requires_matching_seeds():
    cfg = _cfg()
    a = run_episodes(cfg, record=False)
    b = run_episodes(SimulationConfig(**{**cfg.__dict__, "master_seed": 4}), record=False)
    with pytest.raises(ValueError):
        compare_paired(a, b, "p0", cfg.strategy_for(0))


def test_supermodularity_matches_closed_form():
    p = Parameters()
    rep = supermodularity_check(p, random_state_sampler(), 200, derive_rng(0, "sm"))
    assert rep.fraction_nonnegative == 1.0
    assert rep.max_relative_error < 1e-9
    assert np.all(rep.differences > 0)


def test_supermodularity_edge_cases():
    sampler = random_state_sampler(t_range=(0.0, 0.0))
    rep = supermodularity_check(Parameters(), sampler, 20, derive_rng(1, "sm"))
    assert rep.fraction_nonnegative == 1.0
    assert np.allclose(rep.differences, 0.0, atol=1e-12)
    tiny = Parameters(phi=1e-300)
    rep = supermodularity_check(tiny, random_state_sampler(), 20, derive_rng(2, "sm"))
    assert rep.fraction_nonnegative == 1.0


def test_single_sample_difference():
    p = Parameters(phi=0.3, beta=0.7, delta=0.9)
    smp = random_state_sampler()(derive_rng(5, "sm"), p)
    assert increasing_difference(smp, p) == pytest.approx(k_channel_difference(smp, p), rel=1e-9)
    assert k_channel_difference(smp, p) == pytest.approx(0.9 * 0.3 * 0.7 * smp.state.T["p1"])


def _summary(d, n):
    return EpisodeSummary(0, [], {}, d, n, 0, 0, 0.0)


def test_pooled_rate_clipped():
    eps = [_summary(0, 10)] * 5 + [_summary(1, 10)]
    rate, lo, hi = pooled_rate_ci(eps)
    assert rate == pytest.approx(1 / 60)
    assert lo == 0.0 and hi > rate
    rate, lo, hi = pooled_rate_ci([_summary(10, 10)] * 3 + [_summary(9, 10)])
    assert hi == 1.0


def test_empirical_rate_within_bound():
    p = Parameters(lambda_entry=0.0, horizon=30, n_initial=4, delta=0.8, lambda_econ=2.0, alpha=0.5, mu=0.1,
                   beta=0.05, xi=1.0)
    cfg = SimulationConfig(
        params=p,
        mechanisms=MechanismConfig(base_audit_frequency=0.5, staged_deployment_enabled=True, tau=4),
        default_strategy=StrategySpec("RationalDefector", 0.3, 1.0),
        episodes=40,
    )
    rep = empirical_defection_rate(cfg)
    assert rep.epsilon == pytest.approx(1 / 3)
    assert rep.within_bound
    assert math.isclose(rep.ci[0] + rep.ci[1], 2 * rep.rate) or rep.ci[0] == 0.0


def test_rate_nonincreasing_in_tau():
    p = Parameters(lambda_entry=0.0, horizon=30, n_initial=4, delta=0.8, lambda_econ=2.0, alpha=0.5, mu=0.1,
                   beta=0.05, xi=0.5)
    rates = []
    for tau in (1, 2, 4, 8):
        cfg = SimulationConfig(
            params=p,
            mechanisms=MechanismConfig(base_audit_frequency=0.5, staged_deployment_enabled=True, tau=tau),
            default_strategy=StrategySpec("RationalDefector", 0.3, 1.0),
            episodes=30,
        )
        rates.append(empirical_defection_rate(cfg).rate)
    assert all(b <= a for a, b in zip(rates, rates[1:]))
    assert rates[0] > rates[-1]


def test_one_step_gain_alone_never_favours_defection():
    # the capability payoff of defecting arrives at t+1, so a myopic one-step comparison is never positive
    from agigame.strategies import DecisionContext, lookahead_gain

    spec = StrategySpec("RationalDefector", 0.3, 1.0)
    p = Parameters(lambda_econ=2.0, alpha=0.5, delta=1e-12)
    ctx = DecisionContext(1.0, 0.5, 0.0, 1.0, 2.0, 0, 2.0, p, 0.0, 1)
    assert lookahead_gain(spec, ctx) < 0
