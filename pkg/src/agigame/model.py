"""Domain types, parameter validation and population sampling."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Mapping, Sequence

from .errors import OutOfRange, TooFewPlayers
from .rng import Stream


@dataclass(frozen=True)
class Parameters:
    """All model coefficients and distributional constants.

    ``lambda_econ`` is the economic weight on own capability in the stage
    utility; ``lambda_entry`` is the Poisson arrival rate of new developers.
    ``xi`` doubles as the punishment payoff in the folk-theorem diagnostic.
    """

    alpha: float = 0.1
    beta: float = 0.5
    gamma: float = 0.1
    lambda_econ: float = 0.1
    mu: float = 1.0
    phi: float = 0.1
    sigma: float = 0.1
    xi: float = 0.2
    eta: float = 0.1
    theta: float = 0.1
    delta: float = 0.9
    mu_c: float = 0.0
    sigma_c: float = 0.5
    p_audit: float = 0.9
    p_detection: float = 0.8
    lambda_entry: float = 0.05
    t_bar: float = 1.0
    horizon: int = 100
    n_initial: int = 3

    def replace(self, **changes) -> "Parameters":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_NONNEG = ("alpha", "beta", "gamma", "lambda_econ", "mu", "sigma", "xi", "eta", "theta", "lambda_entry")


def validate_parameters(raw: Parameters) -> Parameters:
    """Return ``raw`` unchanged if every invariant holds, else raise ``OutOfRange``.

    Fields are checked in declaration order so the error names the first
    violated field.
    """
    for f in fields(raw):
        name = f.name
        v = getattr(raw, name)
        if name in ("horizon", "n_initial"):
            if isinstance(v, bool) or not isinstance(v, int):
                raise OutOfRange(name, v, "must be an integer")
        elif isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise OutOfRange(name, v, "must be a finite real")
        if name in _NONNEG and v < 0:
            raise OutOfRange(name, v, "must be >= 0")
        if name == "phi" and not v > 0:
            raise OutOfRange(name, v, "must be > 0")
        if name == "delta" and not 0.0 < v < 1.0:
            raise OutOfRange(name, v, "must lie in (0, 1)")
        if name == "sigma_c" and not v > 0:
            raise OutOfRange(name, v, "must be > 0")
        if name in ("p_audit", "p_detection") and not 0.0 <= v <= 1.0:
            raise OutOfRange(name, v, "must lie in [0, 1]")
        if name == "t_bar" and v < 0:
            raise OutOfRange(name, v, "must be >= 0")
        if name == "horizon" and v < 1:
            raise OutOfRange(name, v, "must be >= 1")
        if name == "n_initial" and v < 2:
            raise OutOfRange(name, v, "must be >= 2")
    return raw


@dataclass(frozen=True, slots=True)
class Player:
    id: str
    compute: float
    expertise: float
    risk_tolerance: float
    entry_time: int = 0

    def __post_init__(self):
        if not self.compute > 0:
            raise OutOfRange("compute", self.compute, "must be > 0")
        if not 0.0 <= self.expertise <= 1.0:
            raise OutOfRange("expertise", self.expertise)
        if not 0.0 <= self.risk_tolerance <= 1.0:
            raise OutOfRange("risk_tolerance", self.risk_tolerance)


class Action(str, Enum):
    COOPERATE = "Cooperate"
    DEFECT = "Defect"


@dataclass(frozen=True, slots=True)
class JointChoice:
    action: Action
    r: float
    s: int

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise OutOfRange("r", self.r, "resource fraction must lie in [0, 1]")
        if self.s not in (0, 1):
            raise OutOfRange("s", self.s, "sharing must be 0 or 1")

    @property
    def defects(self) -> bool:
        return self.action is Action.DEFECT


@dataclass(frozen=True)
class GameState:
    """Public and private state at one timestep.

    Maps are keyed by player id and cover exactly ``active``. Treat them as
    read-only; transitions always build new states.
    """

    t: int
    T: Mapping[str, float]
    K: float
    V: Mapping[str, int]
    S: float
    sanctions: Mapping[str, object]
    active: tuple[str, ...]

    def __post_init__(self):
        if self.t < 0:
            raise OutOfRange("t", self.t)
        keys = set(self.active)
        if len(keys) != len(self.active):
            raise OutOfRange("active", self.active, "duplicate player ids")
        for name in ("T", "V", "sanctions"):
            if set(getattr(self, name)) != keys:
                raise OutOfRange(name, sorted(getattr(self, name)), "keys must equal active players")
        if self.K < 0:
            raise OutOfRange("K", self.K)
        if self.S < 0:
            raise OutOfRange("S", self.S)
        for p, v in self.T.items():
            if v < 0:
                raise OutOfRange(f"T[{p}]", v)
        for p, v in self.V.items():
            if v not in (0, 1):
                raise OutOfRange(f"V[{p}]", v)

    def rivals_capability(self, player: str) -> float:
        return sum(v for p, v in self.T.items() if p != player)


@dataclass
class StepRecord:
    state: GameState
    choices: dict[str, JointChoice]
    audited: frozenset
    flagged: frozenset
    utilities: dict  # player -> payoff.UtilityBreakdown


@dataclass
class Trajectory:
    """Full episode record; ``steps[k].state.t == k``."""

    players: dict[str, Player]
    steps: list[StepRecord] = field(default_factory=list)
    final_state: GameState | None = None
    entrants: list[str] = field(default_factory=list)
    milestones: tuple[int, ...] = ()
    tail_bound: float = 0.0
    seed: int | None = None
    summary: object = None  # engine.EpisodeSummary

    def append(self, rec: StepRecord) -> None:
        if self.steps and rec.state.t != self.steps[-1].state.t + 1:
            raise ValueError("timesteps must increase by exactly 1")
        missing = set(rec.state.active) - set(rec.utilities)
        if missing:
            raise ValueError(f"missing utilities for {sorted(missing)}")
        self.steps.append(rec)

    def __len__(self) -> int:
        return len(self.steps)


_anon_ids = itertools.count()


def sample_player(
    rng: Stream,
    params: Parameters,
    entry_time: int = 0,
    *,
    player_id: str | None = None,
    expertise_range: tuple[float, float] = (0.0, 1.0),
    risk_range: tuple[float, float] = (0.0, 1.0),
) -> Player:
    """Draw compute ~ LogNormal(mu_c, sigma_c^2), then expertise, then risk tolerance."""
    compute = rng.lognormal(params.mu_c, params.sigma_c)
    expertise = rng.uniform(*expertise_range)
    risk = rng.uniform(*risk_range)
    if player_id is None:
        player_id = f"anon{next(_anon_ids)}"
    return Player(player_id, compute, expertise, risk, entry_time)


def sample_entrant(rng: Stream, params: Parameters, t: int = 0, **kwargs) -> tuple[Player, float]:
    """An arriving developer and its initial capability ~ Uniform(0, t_bar)."""
    player = sample_player(rng, params, t, **kwargs)
    return player, rng.uniform(0.0, params.t_bar)


def init_state(players: Sequence[Player], params: Parameters, initial_capability=0.0) -> GameState:
    """Time-zero state. ``initial_capability`` is a scalar or a per-id mapping."""
    from .mechanisms import SanctionState

    if len(players) < 2:
        raise TooFewPlayers(f"need at least 2 players, got {len(players)}")
    ids = tuple(p.id for p in players)
    if isinstance(initial_capability, Mapping):
        T = {i: float(initial_capability.get(i, 0.0)) for i in ids}
    else:
        T = {i: float(initial_capability) for i in ids}
    return GameState(
        t=0,
        T=T,
        K=0.0,
        V={i: 0 for i in ids},
        S=0.0,
        sanctions={i: SanctionState() for i in ids},
        active=ids,
    )
