"""Exception types raised by the toolkit."""


class SiframeError(Exception):
    """Base class for all toolkit errors."""


class BadParams(SiframeError):
    """Invalid or inconsistent construction parameters."""


class DimensionMismatch(SiframeError):
    """Operands live on incompatible grids or lattice dimensions."""


class ArityMismatch(SiframeError):
    """Number of coefficient arrays does not match the generator count."""


class WindowTooSmall(SiframeError):
    """Analysis window misses lattice points with support overlap."""


class NonHermitianFiber(SiframeError):
    """A Gramian fiber deviates from Hermitian symmetry beyond tolerance."""


class ConditionIIIFails(SiframeError):
    """Fiber rank is not constant, so no dual system exists."""


class TailMassExceeded(SiframeError):
    """Truncated inverse-transform energy exceeds the configured cap."""


class PreconditionSumNonzero(SiframeError):
    """Translate sum of the input field does not vanish on the unit cell."""


class UnknownCorpusEntry(SiframeError):
    """Requested corpus generator name is not registered."""


class BadScenario(SiframeError):
    """Oracle scenario file is malformed."""


class StageFailure(SiframeError):
    """A pipeline stage failed; carries the stage tag and the original error."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
