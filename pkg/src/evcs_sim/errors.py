"""Exception types shared across the simulator."""


class SimError(Exception):
    """Base class for every error raised by the simulator."""


class DuplicateId(SimError):
    pass


class UnknownStation(SimError):
    pass


class BudgetExceeded(SimError):
    pass


class EmptyInput(SimError):
    pass


class ZeroAverage(SimError):
    pass


class Diverged(SimError):
    """Newton-Raphson did not converge. ``partial`` may carry a partial result."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class IslandWithoutSlack(SimError):
    pass


class Infeasible(SimError):
    pass


class UnstableIntegration(SimError):
    pass


class ValidationError(SimError):
    """Input file or object violates a type invariant; ``problems`` lists each one."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ScenarioError(SimError):
    """Wraps a module error with the simulation time it occurred at."""

    def __init__(self, message, time_s=None):
        self.time_s = time_s
        prefix = f"t={time_s:g}s: " if time_s is not None else ""
        super().__init__(prefix + message)
