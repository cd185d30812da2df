"""Exception types shared across the package."""


class DegenerateVariance(ArithmeticError):
    """Residual sum of squares is zero, so the Gaussian likelihood is unbounded."""


class NonConvergence(RuntimeError):
    """No optimizer start reached the convergence criterion."""


class GridMismatch(ValueError):
    """Two time series that must share sample times do not."""


class LorenzDivergence(ArithmeticError):
    """Integrated Lorenz state became non-finite."""


class NoWindow(ValueError):
    """No interval in which the decay model is preferred."""


class NoRoot(ValueError):
    """Implicit crossover equation has no root in the search interval."""


class NoCrossing(ValueError):
    """Selection proportion never crosses one half along the sweep axis."""
