"""Exception types raised across the package."""


class DagSplitError(Exception):
    """Base class for all package errors."""


class ProfileError(DagSplitError, ValueError):
    """A model profile document is malformed or structurally invalid."""


class PartitionError(DagSplitError, ValueError):
    """A partition does not cover the model or violates data-flow order."""


class GraphError(DagSplitError, ValueError):
    """A split DAG cannot be built or rewritten."""


class CapacityOverflowError(GraphError):
    """Finite capacities reach the INF sentinel."""


class FlowError(DagSplitError, RuntimeError):
    """Max-flow failed, e.g. the flow value reached the INF sentinel."""


class SplitError(DagSplitError, RuntimeError):
    """The splitter produced an inconsistent or unverifiable result."""


class BlockError(DagSplitError, ValueError):
    """A block annotation has an unsupported shape or failed its test."""
