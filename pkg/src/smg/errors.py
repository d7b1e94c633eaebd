"""Exception types raised by the library.

The CLI maps :class:`ConfigError` to exit status 1 and
:class:`NonConvergence` to exit status 2.
"""


class SMGError(Exception):
    pass


class ConfigError(SMGError, ValueError):
    """Invalid configuration, input file or argument."""


class RankDegenerate(SMGError, ValueError):
    """The frame violates the step-2 rank condition."""


class FrozenDegenerate(SMGError, ValueError):
    """The frozen coefficient matrix at the base point is singular."""


class NonConvergence(SMGError, RuntimeError):
    """A nonlinear solve stopped without meeting its residual tolerance.

    ``result`` holds the last iterate; ``stage`` is set by the continuation
    driver to the index of the failing stage.
    """

    def __init__(self, message, result=None, stage=None):
        super().__init__(message)
        self.result = result
        self.stage = stage


class SeedOutsideDomain(SMGError, ValueError):
    pass


class TooFewSamples(SMGError, ValueError):
    pass


class SubdomainTooLarge(SMGError, ValueError):
    """A derivative stencil would reach outside the grid."""
