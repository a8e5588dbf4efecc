"""Exception types raised by the solver stack."""


class ResonantKGError(Exception):
    """Base class for every error raised by this package."""


class KernelOverlap(ResonantKGError):
    """A resolvent was applied to a field with content on ell = omega_j."""


class SmallDivisor(ResonantKGError):
    """A resolvent divisor fell below the configured floor."""

    def __init__(self, msg, ell=None, j=None, divisor=None):
        super().__init__(msg)
        self.ell = ell
        self.j = j
        self.divisor = divisor


class BasisMismatch(ResonantKGError):
    """Two fields built on different bases or truncations were combined."""


class EmptyGrid(ResonantKGError):
    """No sampled parameter passed the Diophantine check."""


class Diverged(ResonantKGError):
    """A fixed-point or Newton iteration left its ball or ran out of iterations."""

    def __init__(self, msg, equation=None, history=None):
        super().__init__(msg)
        self.equation = equation
        self.history = history or []


class Stalled(ResonantKGError):
    """The line search could not decrease the merit function."""


class EmptySubspace(ResonantKGError):
    """The requested period subspace contains no kernel modes."""


class InsufficientBranches(ResonantKGError):
    """Fewer distinct minimal periods were found than requested."""


class StepTooLarge(ResonantKGError):
    """The time step violates dt * max(omega_j) <= 1."""


class ConfigError(ResonantKGError):
    """Invalid run configuration."""


class FrequencyRejected(ConfigError):
    """omega_eps fails the Diophantine check at the truncation horizon."""


class UnsupportedExponent(ConfigError):
    """The nonlinearity degree or its pairing with the symmetry class is not supported."""
