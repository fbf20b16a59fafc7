"""Exception hierarchy shared by every module."""


class AgiGameError(Exception):
    """Base class for all package errors."""


class OutOfRange(AgiGameError, ValueError):
    def __init__(self, field, value=None, reason=""):
        self.field = field
        self.value = value
        msg = f"{field}={value!r} out of range"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class TooFewPlayers(AgiGameError, ValueError):
    pass


class MissingChoice(AgiGameError, KeyError):
    def __init__(self, player):
        self.player = player
        super().__init__(f"no choice for player {player!r}")


class KeyMismatch(AgiGameError, KeyError):
    pass


class UnknownPlayer(AgiGameError, KeyError):
    def __init__(self, player):
        self.player = player
        super().__init__(f"unknown player {player!r}")


class PlayerAbsent(UnknownPlayer):
    pass


class EmptyPlan(AgiGameError, ValueError):
    pass


class InvalidTau(AgiGameError, ValueError):
    pass


class IllegalSanctionTransition(AgiGameError, ValueError):
    pass


class NegativeArgument(AgiGameError, ValueError):
    pass


class DegenerateThreshold(AgiGameError, ArithmeticError):
    """Raised only on request; check_theorem1 reports degeneracy as a flag."""


class InsufficientEpisodes(AgiGameError, RuntimeError):
    pass


class TruncationTooCoarse(AgiGameError, RuntimeError):
    """Discounted-utility tail bound exceeds the requested tolerance."""


class ConfigError(AgiGameError, ValueError):
    """Config file could not be parsed or failed strict validation."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        super().__init__(message)
