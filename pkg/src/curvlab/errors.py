"""Exception taxonomy shared across the package.

Every failure mode maps to one of four classes so the CLI can translate
them into stable exit codes: bad input (2), detected violation or broken
internal invariant (1), and everything else is a genuine crash.
"""


class InvalidInputError(ValueError):
    """Malformed tensors, frames, dimensions, or unknown identifiers."""


class IntegrityError(RuntimeError):
    """An internal consistency check failed (symmetry drift, bad reduction)."""


class BlowUpError(RuntimeError):
    """The flow integrator hit a step-size underflow near a singularity.

    Carries the partial trace collected so far in ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SamplerError(RuntimeError):
    """Cone-conditioned sampling could not reach the requested margin."""
