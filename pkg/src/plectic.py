"""The Poisson-Lie 2-algebra of a pre-2-plectic box manifold.

Degree-0 elements are Hamiltonian pairs ``(xi, beta)`` with
``i_xi chi = -d beta``; degree-1 elements are functions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import sympy as sp

from src.cartan import (
    Form,
    VectorField,
    compare_fields,
    compare_forms,
    contract,
    exterior_d,
    homotopy_operator,
    interior,
    vf_bracket,
)
from src.errors import DegreeError, PreconditionFailed
from src.lie2core import Lie2Structure
from src.symexpr import Box, Expr, Oracle, SampleComparison

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlecticManifold:
    """Box manifold with a closed 3-form; non-degeneracy is not required."""
    box: Box
    chi: Form

    def __post_init__(self) -> None:
        if self.chi.degree != 3:
            raise DegreeError("the plectic form must be a 3-form")

    @property
    def coords(self) -> Tuple[str, ...]:
        return self.box.coords

    def validate(self, oracle: Oracle) -> SampleComparison:
        """Closedness of chi."""
        return compare_forms(exterior_d(self.chi), Form.zero(self.coords, 4), self.box, oracle)


@dataclass(frozen=True)
class HamPair:
    xi: VectorField
    beta: Form

    @classmethod
    def zero(cls, coords: Sequence[str]) -> "HamPair":
        return cls(VectorField.zero(coords), Form.zero(coords, 1))

    def __add__(self, other: "HamPair") -> "HamPair":
        return HamPair(self.xi + other.xi, self.beta + other.beta)

    def __neg__(self) -> "HamPair":
        return HamPair(-self.xi, -self.beta)

    def __sub__(self, other: "HamPair") -> "HamPair":
        return self + (-other)

    def __mul__(self, c) -> "HamPair":
        return HamPair(self.xi * c, self.beta * c)

    __rmul__ = __mul__


def validate_ham_pair(P: PlecticManifold, h: HamPair, oracle: Oracle) -> SampleComparison:
    return compare_forms(interior(h.xi, P.chi), -exterior_d(h.beta), P.box, oracle)


def plectic_d(f: Expr, coords: Sequence[str]) -> HamPair:
    return HamPair(VectorField.zero(coords), exterior_d(Form.function(coords, f)))


def plectic_bracket(P: PlecticManifold, h1: HamPair, h2: HamPair) -> HamPair:
    return HamPair(vf_bracket(h1.xi, h2.xi), interior(h2.xi, interior(h1.xi, P.chi)))


def plectic_jacobiator(P: PlecticManifold, h1: HamPair, h2: HamPair, h3: HamPair) -> Expr:
    return -contract(P.chi, h1.xi, h2.xi, h3.xi).scalar


def hamiltonian_pair(P: PlecticManifold, xi: VectorField, oracle: Oracle,
                     center: Optional[Sequence[float]] = None) -> HamPair:
    """Complete ``xi`` to a Hamiltonian pair with ``beta = -H(i_xi chi)``.

    Raises
    ------
    PreconditionFailed
        When ``i_xi chi`` is not closed, i.e. ``xi`` does not preserve chi.
    """
    contracted = interior(xi, P.chi)
    closed = compare_forms(exterior_d(contracted), Form.zero(P.coords, 3), P.box, oracle)
    if not closed.passed:
        raise PreconditionFailed("L_xi chi = 0", closed.max_residual)
    return HamPair(xi, -homotopy_operator(contracted, center if center is not None else P.box.center))


class PoissonLie2(Lie2Structure):
    """``L(M, chi)`` as a geometric 2-term algebra with sampling equality."""

    name = "poisson_lie2"

    def __init__(self, P: PlecticManifold, oracle: Oracle) -> None:
        self.P = P
        self.oracle = oracle

    def differential(self, f):
        return plectic_d(f, self.P.coords)

    def bracket(self, x, y):
        return plectic_bracket(self.P, x, y)

    def act(self, x, h):
        return sp.S.Zero

    def jacobiator(self, x, y, z):
        return plectic_jacobiator(self.P, x, y, z)

    def zero0(self):
        return HamPair.zero(self.P.coords)

    def zero1(self):
        return sp.S.Zero

    def compare0(self, a, b):
        return SampleComparison.worst([compare_fields(a.xi, b.xi, self.P.box, self.oracle),
                                       compare_forms(a.beta, b.beta, self.P.box, self.oracle)])

    def compare1(self, a, b):
        return self.oracle.compare(a, b, self.P.box)


__all__ = [
    "PlecticManifold", "HamPair", "PoissonLie2", "validate_ham_pair", "plectic_d", "plectic_bracket",
    "plectic_jacobiator", "hamiltonian_pair",
]
