"""Exception types shared across the solvers."""

from __future__ import annotations


class HypflowError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HypflowError):
    """Invalid grid, parameters, or mismatched inputs."""


class FlowAbort(HypflowError):
    """A flow run stopped early; carries the partial series and last state."""

    def __init__(self, message, state=None, series=None):
        super().__init__(message)
        self.state = state
        self.series = series


class PositivityLossError(FlowAbort):
    """A metric eigenvalue became nonpositive at some node."""

    def __init__(self, node, time, state=None, series=None):
        super().__init__(
            f"metric eigenvalue <= 0 at node {node}, t = {time:.6g}", state, series
        )
        self.node = node
        self.time = time


class ClosenessAbortError(FlowAbort):
    """The solution left the monitored closeness regime."""

    def __init__(self, epsilon, threshold, time, state=None, series=None):
        super().__init__(
            f"closeness {epsilon:.3g} exceeded abort threshold {threshold:.3g} "
            f"at t = {time:.6g}",
            state,
            series,
        )
        self.epsilon = epsilon
        self.threshold = threshold
        self.time = time


class NumericalError(HypflowError):
    """An iterative numerical procedure failed to converge."""
