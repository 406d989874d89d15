"""Exception types raised across the package."""


class InvalidData(ValueError):
    """Input data is malformed, non-finite, or has the wrong shape."""


class InvalidConfig(ValueError):
    """A configuration value is out of range or inconsistent."""


class IdenticalPoints(InvalidData):
    """All pairwise distances are zero, so no bandwidth can be chosen."""


class DisconnectedPoint(InvalidData):
    """A row of an affinity matrix sums to zero."""

    def __init__(self, index):
        self.index = int(index)
        super().__init__(f"point {self.index} has no affinity to any point")


class UndefinedCorrelation(ValueError):
    """A distance vector has zero variance, so Pearson correlation is undefined."""
