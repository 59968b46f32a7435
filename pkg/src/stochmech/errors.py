"""Exception types for conditions callers are expected to handle by name."""


class StochmechError(Exception):
    """Base class for package-specific failures."""


class GridTruncationError(StochmechError, ValueError):
    """Wavefunction amplitude at a grid boundary exceeds the truncation budget."""


class StabilityGuardError(StochmechError, ValueError):
    """Propagator time step too large for the spatial resolution."""


class BoundaryLeakageError(StochmechError, RuntimeError):
    """Probability density reached the grid edge during propagation."""


class FieldCoverageError(StochmechError, ValueError):
    """Requested sampling window is not covered by the stored field slices."""


class NoBracketError(StochmechError, RuntimeError):
    """Energy search interval does not bracket a sign change of the defect."""


class NodeEncounteredError(StochmechError, RuntimeError):
    """Osmotic profile diverged, indicating a wavefunction node inside the domain."""


class ConfigError(StochmechError, ValueError):
    """One or more invalid entries in a scenario config; message lists all of them."""
