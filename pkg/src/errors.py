"""Exception hierarchy shared by every module.

Checkers report mathematical failures as report entries; the exceptions below
signal misuse, unsatisfiable preconditions or malformed input.
"""

from typing import Any, Dict, Optional, Tuple


class GeometryError(Exception):
    """Root of all library errors."""


class MissingVariable(GeometryError):
    def __init__(self, name: str) -> None:
        super().__init__(f"no value supplied for variable '{name}'")
        self.name = name


class DomainError(GeometryError):
    def __init__(self, message: str, witness: Optional[Dict[str, float]] = None) -> None:
        if witness:
            message = f"{message} at {format_point(witness)}"
        super().__init__(message)
        self.witness = witness


class DimensionMismatch(GeometryError):
    pass


class DegreeError(GeometryError):
    pass


class PreconditionFailed(GeometryError):
    def __init__(self, hypothesis: str, residual: float = 0.0) -> None:
        super().__init__(f"precondition '{hypothesis}' violated (residual {residual:.3e})")
        self.hypothesis = hypothesis
        self.residual = residual


class DepthExceeded(GeometryError):
    pass


class GluingMismatch(GeometryError):
    def __init__(self, overlap: Tuple[int, ...], residual: float,
                 witness: Optional[Dict[str, float]] = None) -> None:
        message = f"local expressions disagree on overlap {overlap} (residual {residual:.3e})"
        if witness:
            message = f"{message} at {format_point(witness)}"
        super().__init__(message)
        self.overlap = overlap
        self.residual = residual
        self.witness = witness


class CurvatureMismatch(GeometryError):
    def __init__(self, residual: float) -> None:
        super().__init__(f"3-curvature of the cocycle differs from the plectic form (residual {residual:.3e})")
        self.residual = residual


class UnsupportedExactnessCheck(GeometryError):
    pass


class NotInKernel(GeometryError):
    def __init__(self, residual: float) -> None:
        super().__init__(f"element is not in the kernel of sigma (residual {residual:.3e})")
        self.residual = residual


class NoHamiltonianField(GeometryError):
    pass


class UnknownSuite(GeometryError):
    def __init__(self, name: str) -> None:
        super().__init__(f"unknown suite '{name}'")
        self.name = name


class BundleError(GeometryError):
    """Raised while loading a geometry bundle."""


class ParseError(BundleError):
    def __init__(self, text: str, offset: int, reason: str) -> None:
        super().__init__(f"cannot parse '{text}' at offset {offset}: {reason}")
        self.text = text
        self.offset = offset
        self.reason = reason


class SchemaError(BundleError):
    def __init__(self, key: str, reason: str = "missing") -> None:
        super().__init__(f"{key}: {reason}")
        self.key = key


def format_point(point: Dict[str, Any]) -> str:
    return "{" + ", ".join(f"{k}={float(v):.6g}" for k, v in point.items()) + "}"
