"""Exception types shared across the package."""


class ConstantColumnError(ValueError):
    """A data column has zero variance, so it cannot be standardized."""


class DuplicateEdgeError(ValueError):
    """The same unordered item pair appears more than once in a weight list."""


class OutOfRangeError(ValueError):
    """A domain id or item index lies outside the layout bounds."""


class ZeroVarianceError(ValueError):
    """A coordinate column has no spread, so a rescaling factor is undefined."""


class ZeroWeightError(ValueError):
    """The total matching weight is zero, so normalization is undefined."""


class SingularGError(ValueError):
    """The constraint-side matrix of the pencil is not positive definite."""

    def __init__(self, smallest_pivot):
        self.smallest_pivot = float(smallest_pivot)
        super().__init__(
            "constraint matrix is singular or indefinite "
            f"(smallest pivot {self.smallest_pivot:.6e}); "
            "increasing gamma_m usually fixes this"
        )
