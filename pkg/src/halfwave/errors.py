"""Exception hierarchy shared by all modules."""


class HalfWaveError(Exception):
    """Base class for every error raised by this package."""


class GridError(HalfWaveError, ValueError):
    """Invalid grid geometry or time-stepping parameters."""


class NonHermitianSymbol(HalfWaveError, ValueError):
    """A real-valued output was requested for a symbol without Hermitian symmetry."""


class NonDecayingInput(HalfWaveError, ValueError):
    """A homogeneous norm was requested for a field whose mean was not removed."""


class DegenerateInput(HalfWaveError, ValueError):
    """A ratio was requested whose denominator vanishes."""


class ConstraintViolated(HalfWaveError):
    """A sphere-valued field left the unit sphere beyond the allowed tolerance."""

    def __init__(self, deviation: float, tol: float, where: str = ""):
        self.deviation = deviation
        self.tol = tol
        msg = f"| |u|^2 - 1 | = {deviation:.3e} exceeds {tol:.1e}"
        if where:
            msg = f"{where}: {msg}"
        super().__init__(msg)


class DegenerateBase(HalfWaveError, ValueError):
    """Tangent projection onto a base field with |base| < 1/2 somewhere."""


class BumpTooLarge(HalfWaveError, ValueError):
    """Bump support does not fit the periodic box with the required margin."""


class NormalizationFailure(HalfWaveError):
    """Pointwise normalization of p + eps*phi would divide by a small number."""


class WindowRequired(HalfWaveError, ValueError):
    """Space-time Fourier analysis of a non-periodic slab without a taper."""


class SlabError(HalfWaveError, ValueError):
    """Malformed trajectory slab (non-uniform times, wrong frame count...)."""


class DivergenceError(HalfWaveError):
    """Time integration left the small-data regime."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoContraction(HalfWaveError):
    """Picard difference norms stopped decreasing."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class GridTooLarge(HalfWaveError, ValueError):
    """The dense double-frequency sum was requested on a grid that is too big."""


class QuadratureFailure(HalfWaveError):
    """Fourier coefficients of a bilinear symbol do not decay."""


class SnapshotError(HalfWaveError):
    """Base class for snapshot file errors."""


class BadMagic(SnapshotError):
    pass


class VersionMismatch(SnapshotError):
    pass


class HeaderMismatch(VersionMismatch):
    """Header fields are inconsistent with each other or with the payload."""


class TruncatedFile(SnapshotError):
    pass
