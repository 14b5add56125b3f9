"""Exception types shared across the package."""

from __future__ import annotations


class GraphError(ValueError):
    """Malformed graph input: bad node id, self-loop, bad cluster spec."""


class AssumptionError(ValueError):
    """A structural precondition is violated (disconnected graph or cluster,
    cluster equal to the full node set, ...)."""


class ScenarioError(ValueError):
    """Scenario or graph file failed to parse or validate."""


class SolverError(RuntimeError):
    """Abnormal optimizer termination (iteration cap, LP failure).

    Distinct from infeasibility, which is a regular solver outcome.
    """


class SpectralCheckError(RuntimeError):
    """The floating-point eigensolver did not converge."""


class ClusterSearchExhausted(RuntimeError):
    """Cluster exploration hit its step cap without a feasible solution.

    Carries the cluster and trace reached so far.
    """

    def __init__(self, message, cluster=None, trace=None):
        super().__init__(message)
        self.cluster = cluster
        self.trace = trace if trace is not None else []


class SimulationAbort(RuntimeError):
    """A state variable became non-finite during integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
