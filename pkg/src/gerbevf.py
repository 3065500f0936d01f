"""Multiplicative vector fields on a Čech-presented gerbe.

The fibre direction of the gerbe groupoid is never materialized: a
multiplicative vector field is a base field ``xi`` on M together with the
scalar fibre components ``f_ij`` on double overlaps, and a section of the
Lie algebroid is a family of chart functions ``u_i``.

The differential sends a section to ``((0, {u_i - u_j}), {-du_i})``; with this
orientation every connection-preserving invariant holds and the vertical
pairing of a section is ``u`` itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Union

import sympy as sp

from src.cartan import (
    Form,
    VectorField,
    compare_fields,
    exterior_d,
    homotopy_operator,
    interior,
    lie_derivative,
    vf_bracket,
)
from src.cech import CechForm, DeligneCocycle, cech_delta, compare_cech, glue, solve_constants, worst
from src.errors import DegreeError, PreconditionFailed
from src.lie2core import Lie2Structure
from src.report import Report, from_comparison
from src.symexpr import Oracle, SampleComparison, eval_expr

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultVF:
    xi: VectorField
    f: CechForm

    def __add__(self, other: "MultVF") -> "MultVF":
        return MultVF(self.xi + other.xi, self.f + other.f)

    def __neg__(self) -> "MultVF":
        return MultVF(-self.xi, -self.f)

    def __sub__(self, other: "MultVF") -> "MultVF":
        return self + (-other)


@dataclass(frozen=True)
class AlgebroidSection:
    u: CechForm

    @classmethod
    def of(cls, c: DeligneCocycle, values: Dict[int, object]) -> "AlgebroidSection":
        return cls(CechForm.functions(c.cover, 1, {(i,): v for i, v in values.items()}))

    @classmethod
    def zero(cls, c: DeligneCocycle) -> "AlgebroidSection":
        return cls(CechForm.zero(c.cover, 0, 1))

    def value(self, i: int) -> sp.Expr:
        return self.u.scalar((i,))

    def __add__(self, other: "AlgebroidSection") -> "AlgebroidSection":
        return AlgebroidSection(self.u + other.u)

    def __neg__(self) -> "AlgebroidSection":
        return AlgebroidSection(-self.u)

    def __sub__(self, other: "AlgebroidSection") -> "AlgebroidSection":
        return self + (-other)

    def __mul__(self, c) -> "AlgebroidSection":
        return AlgebroidSection(self.u * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ConnMultVF:
    """Connection-preserving multiplicative vector field ``((xi, f), a)``."""
    base: MultVF
    a: CechForm

    @classmethod
    def zero(cls, c: DeligneCocycle) -> "ConnMultVF":
        return cls(MultVF(VectorField.zero(c.coords), CechForm.zero(c.cover, 0, 2)), CechForm.zero(c.cover, 1, 1))

    @property
    def xi(self) -> VectorField:
        return self.base.xi

    @property
    def f(self) -> CechForm:
        return self.base.f

    def __add__(self, other: "ConnMultVF") -> "ConnMultVF":
        return ConnMultVF(self.base + other.base, self.a + other.a)

    def __neg__(self) -> "ConnMultVF":
        return ConnMultVF(-self.base, -self.a)

    def __sub__(self, other: "ConnMultVF") -> "ConnMultVF":
        return self + (-other)


def _contract_cochain(xi: VectorField, cochain: CechForm) -> CechForm:
    return cochain.map(lambda form: interior(xi, form), cochain.degree - 1)


def _derive_cochain(xi: VectorField, cochain: CechForm) -> CechForm:
    """Apply ``xi`` to every function of a degree-0 cochain."""
    return CechForm.make(cochain.cover, 0, cochain.depth,
                         {k: Form.function(cochain.cover.coords, xi.apply(cochain.scalar(k))) for k in cochain.indices()})


def _lie_cochain(xi: VectorField, cochain: CechForm) -> CechForm:
    return cochain.map(lambda form: lie_derivative(xi, form), cochain.degree)


def validate_multvf(c: DeligneCocycle, v: MultVF, oracle: Oracle) -> Report:
    """``f_jk - f_ik + f_ij = -i_xi dphi_ijk`` on triple overlaps."""
    twist = -_contract_cochain(v.xi, c.phi.map(exterior_d, 1))
    report = Report("multvf")
    for idx, cmp in compare_cech(cech_delta(v.f), twist, oracle).items():
        report.add(from_comparison(f"cocycle[{','.join(map(str, idx))}]", cmp))
    return report


def horizontal_lift(c: DeligneCocycle, xi: VectorField) -> MultVF:
    return MultVF(xi, -_contract_cochain(xi, c.A))


def multvf_bracket(v: MultVF, w: MultVF) -> MultVF:
    return MultVF(vf_bracket(v.xi, w.xi), _derive_cochain(v.xi, w.f) - _derive_cochain(w.xi, v.f))


def F_B_homotopy(c: DeligneCocycle, xi: VectorField, zeta: VectorField) -> AlgebroidSection:
    """Sections ``u_i = i_xi i_zeta B_i`` relating the lift of a bracket to the bracket of lifts."""
    return AlgebroidSection(c.B.map(lambda B: interior(xi, interior(zeta, B)), 0))


def diff_X(s: AlgebroidSection, c: DeligneCocycle) -> ConnMultVF:
    coords = c.coords
    f = CechForm.make(c.cover, 0, 2, {(i, j): Form.function(coords, s.value(i) - s.value(j))
                                      for i, j in c.cover.overlaps(2)})
    a = s.u.map(lambda g: -exterior_d(g), 1)
    return ConnMultVF(MultVF(VectorField.zero(coords), f), a)


def check_F_B_homotopy(c: DeligneCocycle, xi: VectorField, zeta: VectorField, oracle: Oracle) -> SampleComparison:
    """Fibre part of ``diff_X(F_B)`` equals ``Lift[xi, zeta] - [Lift xi, Lift zeta]``."""
    target = horizontal_lift(c, vf_bracket(xi, zeta)) - multvf_bracket(horizontal_lift(c, xi), horizontal_lift(c, zeta))
    image = diff_X(F_B_homotopy(c, xi, zeta), c).base
    return SampleComparison.worst([compare_fields(image.xi, target.xi, c.cover.manifold, oracle),
                                   worst(compare_cech(image.f, target.f, oracle))])


def bracket_X(c: DeligneCocycle, v1: Union[ConnMultVF, AlgebroidSection],
              v2: Union[ConnMultVF, AlgebroidSection]) -> Union[ConnMultVF, AlgebroidSection]:
    """Bracket of the connection-preserving symmetry algebra on tagged elements."""
    if isinstance(v1, AlgebroidSection) and isinstance(v2, AlgebroidSection):
        raise DegreeError("the bracket of two sections is not defined")
    if isinstance(v1, ConnMultVF) and isinstance(v2, ConnMultVF):
        a = _lie_cochain(v1.xi, v2.a) - _lie_cochain(v2.xi, v1.a)
        return ConnMultVF(multvf_bracket(v1.base, v2.base), a)
    if isinstance(v1, ConnMultVF):
        return AlgebroidSection(_derive_cochain(v1.xi, v2.u))
    return -bracket_X(c, v2, v1)


def validate_connpres(c: DeligneCocycle, v: ConnMultVF, oracle: Oracle, connection_only: bool = False) -> Report:
    """Curving condition ``L_xi B_i = da_i`` and connection condition on overlaps.

    With ``connection_only`` the curving condition is skipped.
    """
    report = Report("connpres")
    if not connection_only:
        for idx, cmp in compare_cech(_lie_cochain(v.xi, c.B), v.a.map(exterior_d, 2), oracle).items():
            report.add(from_comparison(f"curving[{idx[0]}]", cmp))
    expected = _lie_cochain(v.xi, c.A) + v.f.map(exterior_d, 1)
    for idx, cmp in compare_cech(cech_delta(v.a), expected, oracle).items():
        report.add(from_comparison(f"connection[{','.join(map(str, idx))}]", cmp))
    return report


def morphism_defect(c: DeligneCocycle, xi1: VectorField, xi2: VectorField, xi3: VectorField) -> AlgebroidSection:
    """Vertical part of the failure of the horizontal lift to respect the Jacobiator.

    Six-term combination of ``F_B`` values and brackets; it equals
    ``i_xi1 i_xi2 i_xi3 dB`` chart by chart.
    """
    def F(p, q):
        return F_B_homotopy(c, p, q).u

    total = (F(xi1, vf_bracket(xi2, xi3)) - F(vf_bracket(xi1, xi2), xi3) - F(xi2, vf_bracket(xi1, xi3))
             + _derive_cochain(xi3, F(xi1, xi2)) + _derive_cochain(xi1, F(xi2, xi3))
             - _derive_cochain(xi2, F(xi1, xi3)))
    return AlgebroidSection(total)


def check_morphism_defect(c: DeligneCocycle, xi1: VectorField, xi2: VectorField, xi3: VectorField,
                          oracle: Oracle) -> SampleComparison:
    expected = c.B.map(lambda B: interior(xi1, interior(xi2, interior(xi3, exterior_d(B)))), 0)
    return worst(compare_cech(morphism_defect(c, xi1, xi2, xi3).u, expected, oracle))


def vertical_section(c: DeligneCocycle, v: ConnMultVF, oracle: Oracle) -> AlgebroidSection:
    """Section whose differential is a given symmetry with vanishing base field.

    Chart primitives of the closed forms ``-a_i`` fix ``u_i`` up to constants;
    the constants are solved along a spanning tree of the nerve.
    """
    zero_field = compare_fields(v.xi, VectorField.zero(c.coords), c.cover.manifold, oracle)
    if not zero_field.passed:
        raise PreconditionFailed("base field vanishes", zero_field.max_residual)
    charts = range(len(c.cover.charts))
    u: Dict[int, sp.Expr] = {}
    for i in charts:
        box = c.cover.box((i,))
        closed = oracle.compare_all(((0, coef) for coef in exterior_d(v.a.part((i,))).terms.values()), box)
        if not closed.passed:
            raise PreconditionFailed(f"a_{i} closed", closed.max_residual)
        u[i] = -homotopy_operator(v.a.part((i,)), box.center).scalar
    offsets = {}
    for i, j in c.cover.overlaps(2):
        box = c.cover.box((i, j))
        offsets[(i, j)] = eval_expr(u[i] - u[j] - v.f.scalar((i, j)), box.point(box.center))
    k = solve_constants(c.cover, offsets, tol=max(oracle.tol, 1e-9) * 1e3)
    return AlgebroidSection.of(c, {i: u[i] + k[i] for i in charts})


def check_vertical_roundtrip(c: DeligneCocycle, v: ConnMultVF, oracle: Oracle) -> SampleComparison:
    s = vertical_section(c, v, oracle)
    return compare_conn(c, diff_X(s, c), v, oracle)


def check_section_pairing(c: DeligneCocycle, s: AlgebroidSection, oracle: Oracle) -> SampleComparison:
    """Fibre component of ``diff_X(s)`` is ``-delta`` of the vertical pairing ``v = u``."""
    return worst(compare_cech(diff_X(s, c).f, -cech_delta(s.u), oracle))


def check_same_base(c: DeligneCocycle, v: ConnMultVF, w: ConnMultVF, oracle: Oracle) -> SampleComparison:
    """Symmetries with equal bases differ by a closed global 1-form."""
    glued = glue(v.a - w.a, oracle)
    return SampleComparison.worst(
        [compare_fields(v.xi, w.xi, c.cover.manifold, oracle), worst(compare_cech(v.f, w.f, oracle))]
        + [oracle.compare(0, coef, c.cover.manifold) for coef in exterior_d(glued).terms.values()])


def compare_conn(c: DeligneCocycle, v: ConnMultVF, w: ConnMultVF, oracle: Oracle) -> SampleComparison:
    return SampleComparison.worst([
        compare_fields(v.xi, w.xi, c.cover.manifold, oracle),
        worst(compare_cech(v.f, w.f, oracle)),
        worst(compare_cech(v.a, w.a, oracle)),
    ])


def compare_sections(s: AlgebroidSection, t: AlgebroidSection, oracle: Oracle) -> SampleComparison:
    return worst(compare_cech(s.u, t.u, oracle))


class GerbeSymmetries(Lie2Structure):
    """Strict 2-term algebra of connection-preserving multiplicative vector fields."""

    name = "gerbe_symmetries"

    def __init__(self, c: DeligneCocycle, oracle: Oracle, connection_only: bool = False) -> None:
        self.c = c
        self.oracle = oracle
        self.connection_only = connection_only

    def differential(self, s):
        return diff_X(s, self.c)

    def bracket(self, x, y):
        return bracket_X(self.c, x, y)

    def act(self, x, s):
        return bracket_X(self.c, x, s)

    def zero0(self):
        return ConnMultVF.zero(self.c)

    def zero1(self):
        return AlgebroidSection.zero(self.c)

    def compare0(self, a, b):
        return compare_conn(self.c, a, b, self.oracle)

    def compare1(self, a, b):
        return compare_sections(a, b, self.oracle)

    def validate(self, v: ConnMultVF) -> Report:
        report = Report(self.name)
        report.extend(validate_multvf(self.c, v.base, self.oracle).results)
        report.extend(validate_connpres(self.c, v, self.oracle, self.connection_only).results)
        return report


__all__ = [
    "MultVF", "AlgebroidSection", "ConnMultVF", "GerbeSymmetries", "validate_multvf", "horizontal_lift",
    "multvf_bracket", "F_B_homotopy", "check_F_B_homotopy", "bracket_X", "diff_X", "validate_connpres",
    "morphism_defect", "check_morphism_defect", "vertical_section", "check_vertical_roundtrip",
    "check_section_pairing", "check_same_base", "compare_conn", "compare_sections",
]
