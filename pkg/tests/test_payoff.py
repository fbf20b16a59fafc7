import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agigame.errors import PlayerAbsent, UnknownPlayer
from agigame.mechanisms import SanctionLevel, SanctionState
from agigame.model import Action, GameState, JointChoice, Parameters, StepRecord, Trajectory
from agigame.payoff import UtilityBreakdown, discounted_utility, stage_utility, tail_bound

C = Action.COOPERATE


def state(T, K=0.0, S=0.0, V=None, sanctions=None, t=0):
    ids = tuple(T)
    V = V or {p: 0 for p in ids}
    sanctions = sanctions or {p: SanctionState() for p in ids}
    return GameState(t, dict(T), K, dict(V), S, sanctions, ids)


def test_all_zero_state_costs_theta():
    p = Parameters(theta=0.7)
    u = stage_utility(state({"a": 0.0, "b": 0.0}), "a", JointChoice(C, 0.0, 0), p)
    assert u.total == pytest.approx(-0.7)


def test_hand_evaluated_utility():
    p = Parameters(lambda_econ=1, mu=1, phi=0.1, sigma=1, xi=0.5, eta=2, theta=1)
    st0 = state({"i": 2.0, "j": 4.0, "k": 2.0}, K=3.0, S=4.0, V={"i": 1, "j": 0, "k": 0})
    u = stage_utility(st0, "i", JointChoice(C, 0.5, 1), p)
    assert u.economic == pytest.approx(5.3)
    assert u.security == pytest.approx(1.0)
    assert u.costs == pytest.approx(0.5)
    assert u.total == pytest.approx(5.8, rel=1e-12)


def test_sharing_adds_phi_k():
    p = Parameters(phi=0.3)
    st0 = state({"a": 1.0, "b": 2.0}, K=4.0, S=1.0)
    u1 = stage_utility(st0, "a", JointChoice(C, 0.4, 1), p).total
    u0 = stage_utility(st0, "a", JointChoice(C, 0.4, 0), p).total
    assert u1 - u0 == pytest.approx(0.3 * 4.0, rel=1e-12)


def test_unknown_player():
    with pytest.raises(UnknownPlayer):
        stage_utility(state({"a": 0.0, "b": 0.0}), "z", JointChoice(C, 0.0, 0), Parameters())


def test_revoked_player_loses_pool_terms():
    p = Parameters(mu=1.0, phi=0.1)
    base = state({"a": 1.0, "b": 1.0}, K=2.0)
    revoked = state({"a": 1.0, "b": 1.0}, K=2.0, sanctions={"a": SanctionState(SanctionLevel.REVOKED), "b": SanctionState()})
    ch = JointChoice(C, 0.5, 1)
    assert stage_utility(base, "a", ch, p).total - stage_utility(revoked, "a", ch, p).total == pytest.approx(2.0 * 1.1)


coef = st.floats(0.0, 3.0)
val = st.floats(0.0, 20.0)


@settings(max_examples=200, deadline=None)
@given(coef, coef, coef, coef, coef, coef, val, val, val, val, st.floats(0.0, 1.0))
def test_breakdown_accounting_and_affinity(lam, mu, sigma, xi, eta, theta, Ti, Tj, K, S, r):
    p = Parameters(lambda_econ=lam, mu=mu, sigma=sigma, xi=xi, eta=eta, theta=theta)
    ch = JointChoice(C, r, 1)
    u = stage_utility(state({"i": Ti, "j": Tj}, K=K, S=S), "i", ch, p)
    assert u.total == pytest.approx(u.economic + u.security - u.costs, rel=1e-12, abs=1e-12)
    # affine in T_j with slope -xi
    u2 = stage_utility(state({"i": Ti, "j": Tj + 1.0}, K=K, S=S), "i", ch, p)
    assert u2.total - u.total == pytest.approx(-xi, abs=1e-9)
    if xi > 1e-6:
        assert u2.total < u.total


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.0, 0.98))
def test_concave_in_resources(eta, r):
    p = Parameters(eta=eta)
    st0 = state({"i": 1.0, "j": 1.0}, K=1.0)
    f = lambda x: stage_utility(st0, "i", JointChoice(C, x, 1), p).total
    h = 0.01
    assert f(r + 2 * h) - 2 * f(r + h) + f(r) <= 1e-12


def trajectory_with(utils, delta=0.5, start=0):
    traj = Trajectory(players={})
    for k, u in enumerate(utils):
        t = start + k
        st0 = state({"a": 0.0, "b": 0.0}, t=t)
        traj.append(StepRecord(st0, {}, frozenset(), frozenset(), {"a": UtilityBreakdown.from_parts(u, 0, 0), "b": UtilityBreakdown.from_parts(0, 0, 0)}))
    return traj


def test_discounted_geometric():
    traj = trajectory_with([1.0, 1.0, 1.0])
    assert discounted_utility(traj, "a", Parameters(delta=0.5)) == pytest.approx(1.75, rel=1e-12)
    assert discounted_utility(traj, "b", Parameters(delta=0.5)) == 0.0
    assert discounted_utility(trajectory_with([3.0]), "a", Parameters(delta=1e-9)) == pytest.approx(3.0)
    # late entrant is discounted from absolute t
    assert discounted_utility(trajectory_with([1.0], start=2), "a", Parameters(delta=0.5)) == pytest.approx(0.25)
    with pytest.raises(PlayerAbsent):
        discounted_utility(traj, "zz", Parameters())


def test_tail_bound():
    assert tail_bound(2.0, 0.5, 3) == pytest.approx(0.125 * 2 / 0.5)
