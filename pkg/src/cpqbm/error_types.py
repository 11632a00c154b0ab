import attr

# Configuration problems are not exceptions that are thrown, they are
# collected and reported together, so we don't inherit from an Exception
# subclass for them.


class ConfigError:
    def __init__(self, message, source=None):
        self.message = message
        self.source = source  # ConfigSource or None

    # This equality method exists to make exact tests for errors much
    # simpler to write.
    def __eq__(self, other):
        return (other.__class__ == self.__class__) and other.message == self.message

    def __repr__(self):
        return '<{0}: {1!r}>'.format(self.__class__.__name__, self.message)

    def __hash__(self):
        return hash(self.message)

    def display(self):
        if self.source is None:
            return self.message
        return "{0}: {1}".format(self.source.display_location(), self.message)


class NoScenario(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class MissingKey(ConfigError):
    pass


class BadValue(ConfigError):
    pass


class IncompatibleScenarios(ConfigError):
    pass


@attr.s
class BrownianLimitFailure:
    scenario_name = attr.ib()
    report = attr.ib()  # coefficients.BrownianLimitReport

    @property
    def message(self):
        return ("Scenario '{0}': mass ratio m/M = {1:.4g} is outside the Brownian limit. "
                "Use --override-brownian-limit to run anyway.".format(
                    self.scenario_name, self.report.alpha))

    def display(self):
        return self.message


# Failures during computation are real exceptions.

class ComputeError(Exception):
    pass


class DimensionMismatch(ComputeError, ValueError):
    pass


class DimensionTooLarge(ComputeError, ValueError):
    pass


class InvalidState(ComputeError, ValueError):
    pass


class QuadratureError(ComputeError):
    pass


class TabulationRangeError(ComputeError):
    pass


class NonFiniteState(ComputeError):
    def __init__(self, message, time=None, step=None):
        super().__init__(message)
        self.time = time
        self.step = step


class StepUnderflow(ComputeError):
    def __init__(self, message, time=None, dt=None):
        super().__init__(message)
        self.time = time
        self.dt = dt


class TruncationOverflow(ComputeError):
    """
    Physics abort: too much population has reached the top of the truncated
    basis. The partial trajectory recorded so far is attached.
    """
    def __init__(self, message, time=None, health=None, record=None):
        super().__init__(message)
        self.time = time
        self.health = health
        self.record = record
