import pytest

from agigame import MechanismConfig, Parameters, SimulationConfig
from agigame.rng import derive_rng
from agigame.strategies import StrategySpec


@pytest.fixture
def params():
    return Parameters(
        alpha=0.1, beta=0.1, gamma=0.1, lambda_econ=0.1, mu=0.1, phi=0.1, sigma=0.1,
        xi=0.1, eta=0.1, theta=0.1, delta=0.9, p_audit=0.8, p_detection=0.8,
        horizon=100, n_initial=3,
    )


@pytest.fixture
def rng():
    return derive_rng(20261019, "tests")


@pytest.fixture
def small_config():
    p = Parameters(lambda_entry=0.0, horizon=20, n_initial=3, delta=0.8)
    return SimulationConfig(
        params=p,
        mechanisms=MechanismConfig(base_audit_frequency=0.5),
        default_strategy=StrategySpec("GrimTrigger", 0.5, 1.0),
        episodes=8,
        master_seed=11,
    )


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
