"""Prequantization butterflies, their 2-isomorphism, Kostant lifts and quasi-Hamiltonian data.

Both geometric butterflies share one carrier: a connection-preserving
multiplicative vector field together with chart functions ``g_i`` subject to
``g_j - g_i = i_xi A_ij + f_ij``. They differ in the source algebra, in the
map ``sigma`` and in the function part of the bracket.
"""

from __future__ import annotations

import logging
from abc import abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from src.cartan import (
    Form,
    VectorField,
    compare_fields,
    compare_forms,
    exterior_d,
    form_matrix,
    interior,
    lie_derivative,
    pullback,
    vf_bracket,
    wedge,
)
from src.cech import (
    CechForm,
    Cover,
    DeligneCocycle,
    Trivialization,
    cech_delta,
    compare_cech,
    glue,
    solve_coboundary,
    three_curvature,
    validate_trivialization,
    worst,
)
from src.constants import RANK_TOL
from src.errors import CurvatureMismatch, NoHamiltonianField, NotInKernel, PreconditionFailed
from src.gerbevf import (
    AlgebroidSection,
    ConnMultVF,
    GerbeSymmetries,
    MultVF,
    bracket_X,
    compare_conn,
    diff_X,
    horizontal_lift,
)
from src.lie2core import ButterflyData, FinDimLie2, Lie2Morphism, Lie2Structure, check_morphism
from src.plectic import HamPair, PlecticManifold, PoissonLie2
from src.report import CheckResult, Report, from_comparison, skipped
from src.symexpr import Box, Expr, Oracle, SampleComparison, evaluate, parse_expr, symbols_for

logger = logging.getLogger(__name__)


# -- carrier ---------------------------------------------------------------


@dataclass(frozen=True)
class EElement:
    """Carrier element ``(v; g)`` of the prequantization butterflies."""
    v: ConnMultVF
    g: CechForm

    @property
    def xi(self) -> VectorField:
        return self.v.xi

    def __add__(self, other: "EElement") -> "EElement":
        return EElement(self.v + other.v, self.g + other.g)

    def __neg__(self) -> "EElement":
        return EElement(-self.v, -self.g)

    def __sub__(self, other: "EElement") -> "EElement":
        return self + (-other)


def _contract(xi: VectorField, cochain: CechForm) -> CechForm:
    return cochain.map(lambda form: interior(xi, form), cochain.degree - 1)


def _functions(cover: Cover, expr: Expr) -> CechForm:
    return CechForm.functions(cover, 1, {(i,): expr for i in range(len(cover.charts))})


def validate_element(c: DeligneCocycle, e: EElement, oracle: Oracle) -> SampleComparison:
    """``g_j - g_i = i_xi A_ij + f_ij`` on every double overlap."""
    return worst(compare_cech(cech_delta(e.g), _contract(e.xi, c.A) + e.v.f, oracle))


class GerbeButterfly(ButterflyData):
    """Maps shared by the two prequantization butterflies.

    ``lam(u) = (diff_X u; -u)``, ``kappa(h) = (0; h)`` and ``rho`` forgets ``g``.
    """

    def __init__(self, c: DeligneCocycle, source: Lie2Structure, oracle: Oracle) -> None:
        self.c = c
        self.source = source
        self.target = GerbeSymmetries(c, oracle)
        self.oracle = oracle
        self.witnesses = GerbeWitnesses()

    @property
    def cover(self) -> Cover:
        return self.c.cover

    def kappa(self, h):
        return EElement(ConnMultVF.zero(self.c), _functions(self.cover, h))

    def lam(self, u: AlgebroidSection) -> EElement:
        return EElement(diff_X(u, self.c), -u.u)

    def rho(self, e: EElement) -> ConnMultVF:
        return e.v

    def zero(self) -> EElement:
        return EElement(ConnMultVF.zero(self.c), CechForm.zero(self.cover, 0, 1))

    def compare(self, a: EElement, b: EElement) -> SampleComparison:
        return SampleComparison.worst([compare_conn(self.c, a.v, b.v, self.oracle),
                                       worst(compare_cech(a.g, b.g, self.oracle))])

    @abstractmethod
    def _bracket_g(self, x: EElement, y: EElement) -> CechForm: ...

    def bracket(self, x: EElement, y: EElement) -> EElement:
        return EElement(bracket_X(self.c, x.v, y.v), self._bracket_g(x, y))

    @abstractmethod
    def sigma_section(self, h) -> EElement: ...

    def validate(self, e: EElement) -> SampleComparison:
        return validate_element(self.c, e, self.oracle)

    def rho_section(self, v: ConnMultVF) -> EElement:
        """A preimage under ``rho``: solve ``delta g = i_xi A + f`` with a partition of unity."""
        return EElement(v, solve_coboundary(_contract(v.xi, self.c.A) + v.f, self.oracle))


class EButterfly(GerbeButterfly):
    """``L(M, chi) ⇢ X(G; B, gamma)`` for a gerbe with 3-curvature chi."""

    name = "butterflyE"

    def __init__(self, c: DeligneCocycle, P: PlecticManifold, oracle: Oracle) -> None:
        super().__init__(c, PoissonLie2(P, oracle), oracle)
        self.P = P

    def epsilon(self, e: EElement) -> Form:
        chart = e.v.a - _contract(e.xi, self.c.B) - e.g.map(exterior_d, 1)
        return glue(chart, self.oracle)

    def sigma(self, e: EElement) -> HamPair:
        return HamPair(e.xi, -self.epsilon(e))

    def _bracket_g(self, x, y):
        return (_contract(x.xi, y.v.a) - _contract(y.xi, x.v.a)
                + self.c.B.map(lambda B: interior(y.xi, interior(x.xi, B)), 0))

    def sigma_section(self, h: HamPair) -> EElement:
        a = CechForm.restrict(self.cover, -h.beta) + _contract(h.xi, self.c.B)
        lift = horizontal_lift(self.c, h.xi)
        return EElement(ConnMultVF(lift, a), CechForm.zero(self.cover, 0, 1))


@dataclass(frozen=True)
class TrivialSymmetry:
    """Degree-0 element ``(xi, A)`` of the symmetries of a trivial gerbe, ``L_xi omega = dA``."""
    xi: VectorField
    A: Form

    def __add__(self, other: "TrivialSymmetry") -> "TrivialSymmetry":
        return TrivialSymmetry(self.xi + other.xi, self.A + other.A)

    def __neg__(self) -> "TrivialSymmetry":
        return TrivialSymmetry(-self.xi, -self.A)

    def __sub__(self, other: "TrivialSymmetry") -> "TrivialSymmetry":
        return self + (-other)


class TrivialGerbeSymmetries(Lie2Structure):
    """Strict algebra ``C(M) -> {(xi, A): L_xi omega = dA}`` with ``d f = (0, -df)``."""

    name = "trivial_gerbe_symmetries"

    def __init__(self, box: Box, omega: Form, oracle: Oracle) -> None:
        self.box = box
        self.omega = omega
        self.oracle = oracle

    @property
    def coords(self) -> Tuple[str, ...]:
        return self.box.coords

    def differential(self, f):
        return TrivialSymmetry(VectorField.zero(self.coords), -exterior_d(Form.function(self.coords, f)))

    def bracket(self, x, y):
        return TrivialSymmetry(vf_bracket(x.xi, y.xi), lie_derivative(x.xi, y.A) - lie_derivative(y.xi, x.A))

    def act(self, x, f):
        return x.xi.apply(f)

    def zero0(self):
        return TrivialSymmetry(VectorField.zero(self.coords), Form.zero(self.coords, 1))

    def zero1(self):
        return sp.S.Zero

    def compare0(self, a, b):
        return SampleComparison.worst([compare_fields(a.xi, b.xi, self.box, self.oracle),
                                       compare_forms(a.A, b.A, self.box, self.oracle)])

    def compare1(self, a, b):
        return self.oracle.compare(a, b, self.box)

    def validate(self, x: TrivialSymmetry) -> SampleComparison:
        return compare_forms(lie_derivative(x.xi, self.omega), exterior_d(x.A), self.box, self.oracle)


def as_conn(c: DeligneCocycle, x: TrivialSymmetry) -> ConnMultVF:
    """View ``(xi, A)`` as a symmetry of the single-chart cocycle."""
    return ConnMultVF(MultVF(x.xi, CechForm.zero(c.cover, 0, 2)), CechForm.restrict(c.cover, x.A))


def as_trivial(v: ConnMultVF) -> TrivialSymmetry:
    """Inverse of ``as_conn`` on a single chart."""
    return TrivialSymmetry(v.xi, v.a.part((0,)))


class QButterfly(GerbeButterfly):
    """``X(I_omega) ⇢ X(G; B, gamma)`` induced by a trivialization with error 2-form omega."""

    name = "butterflyQ"

    def __init__(self, c: DeligneCocycle, t: Trivialization, oracle: Oracle) -> None:
        super().__init__(c, TrivialGerbeSymmetries(c.cover.manifold, t.omega, oracle), oracle)
        self.t = t
        self.curv = t.eta.map(exterior_d, 2)

    def sigma(self, e: EElement) -> TrivialSymmetry:
        chart = e.v.a - _contract(e.xi, self.curv) - e.g.map(exterior_d, 1)
        return TrivialSymmetry(e.xi, glue(chart, self.oracle))

    def _bracket_g(self, x, y):
        derived = CechForm.functions(self.cover, 1, {
            k: x.xi.apply(y.g.scalar(k)) - y.xi.apply(x.g.scalar(k)) for k in self.cover.overlaps(1)})
        return derived + self.curv.map(lambda F: interior(x.xi, interior(y.xi, F)), 0)

    def sigma_section(self, s: TrivialSymmetry) -> EElement:
        a = CechForm.restrict(self.cover, s.A) + _contract(s.xi, self.curv)
        return EElement(ConnMultVF(horizontal_lift(self.c, s.xi), a), CechForm.zero(self.cover, 0, 1))


def build_E(c: DeligneCocycle, P: PlecticManifold, oracle: Oracle) -> EButterfly:
    """Butterfly from the Poisson 2-algebra of chi to the gerbe symmetries.

    Raises
    ------
    CurvatureMismatch
        When the glued ``dB_i`` differs from chi on samples.
    """
    cmp = compare_forms(three_curvature(c, oracle), P.chi, c.cover.manifold, oracle)
    if not cmp.passed:
        raise CurvatureMismatch(cmp.max_residual)
    logger.debug("butterfly E over %d charts", len(c.cover.charts))
    return EButterfly(c, P, oracle)


def build_Q(c: DeligneCocycle, t: Trivialization, oracle: Oracle) -> QButterfly:
    report = validate_trivialization(c, t, oracle)
    if not report.passed:
        raise PreconditionFailed("trivialization", report.max_residual)
    return QButterfly(c, t, oracle)


def sigma_section_E(b: EButterfly, h: HamPair) -> EElement:
    return b.sigma_section(h)


def sigma_section_Q(b: QButterfly, s: TrivialSymmetry) -> EElement:
    return b.sigma_section(s)


@dataclass(frozen=True)
class KernelWitness:
    """Preimage ``lam(section) + kappa(constant)`` of a kernel element of sigma."""
    section: AlgebroidSection
    constant: float

    def combined(self) -> AlgebroidSection:
        """The single section ``section - constant`` with the same image under lam."""
        return AlgebroidSection(self.section.u - _functions(self.section.u.cover, self.constant))


def lambda_kernel_witness(b: GerbeButterfly, e: EElement) -> KernelWitness:
    """Split a kernel element of sigma into a section and a global constant.

    In the kernel ``a_i = dg_i`` and ``f_ij = g_j - g_i``, so ``lam(-g) = e``.
    The constant is ``g`` at the centre of the first chart, which leaves a
    section vanishing there.

    Raises
    ------
    NotInKernel
        When ``sigma(e)`` does not vanish on samples.
    """
    cmp = b.source.compare0(b.sigma(e), b.source.zero0())
    if not cmp.passed:
        raise NotInKernel(cmp.max_residual)
    box = b.cover.box((0,))
    centre = np.array([[(lo + hi) / 2 for lo, hi in zip(box.lower, box.upper)]])
    constant = float(evaluate(e.g.scalar((0,)), box.coords, centre)[0])
    return KernelWitness(AlgebroidSection(-e.g + _functions(b.cover, constant)), constant)


def kappa_kernel_witness(b: GerbeButterfly, e: EElement) -> Expr:
    """The global function ``h`` with ``kappa(h) = e`` for ``e`` in the kernel of rho."""
    cmp = b.target.compare0(b.rho(e), b.target.zero0())
    if not cmp.passed:
        raise NotInKernel(cmp.max_residual)
    return glue(e.g, b.oracle).scalar


class GerbeWitnesses:
    """Constructive exactness of both wings, driven by carrier samples."""

    def ne_sw(self, b: GerbeButterfly, carrier: Sequence[EElement]) -> List[CheckResult]:
        V = b.source
        sections = [AlgebroidSection(-e.g) for e in carrier]
        injective = (worst(compare_cech(b.lam(u).g, -u.u, b.oracle)) for u in sections)
        surjective, exact = [], []
        for e in carrier:
            s = b.sigma_section(b.sigma(e))
            surjective.append(SampleComparison.worst([V.compare0(b.sigma(s), b.sigma(e)), b.validate(s)]))
            d = e - s
            w = lambda_kernel_witness(b, d)
            exact.append(b.compare(b.lam(w.section) + b.kappa(w.constant), d))
        return [
            from_comparison("lambda_injective", SampleComparison.worst(injective)),
            from_comparison("sigma_surjective", SampleComparison.worst(surjective)),
            from_comparison("exact_at_carrier_sigma", SampleComparison.worst(exact)),
        ]

    def nw_se(self, b: GerbeButterfly, carrier: Sequence[EElement]) -> List[CheckResult]:
        functions = [e.g.scalar((0,)) for e in carrier]
        injective = (b.source.compare1(kappa_kernel_witness(b, b.kappa(h)), h) for h in functions)
        surjective, exact = [], []
        for e in carrier:
            s = b.rho_section(b.rho(e))
            surjective.append(SampleComparison.worst([b.target.compare0(b.rho(s), b.rho(e)), b.validate(s)]))
            k = e - s
            exact.append(b.compare(b.kappa(kappa_kernel_witness(b, k)), k))
        return [
            from_comparison("kappa_injective", SampleComparison.worst(injective)),
            from_comparison("rho_surjective", SampleComparison.worst(surjective)),
            from_comparison("exact_at_carrier_rho", SampleComparison.worst(exact)),
        ]


# -- trivial gerbe quasi-isomorphism -----------------------------------------


def example_quasi_iso(T: TrivialGerbeSymmetries, printed_sign: bool = False) -> Lie2Morphism:
    """``(xi, A) -> (xi, i_xi omega - A)`` into the Poisson algebra of ``d omega``.

    With ``printed_sign`` the map ``(xi, i_xi omega + A)`` and the matching
    homotopy are used instead; that variant does not land in Hamiltonian pairs.
    """
    P = PlecticManifold(T.box, exterior_d(T.omega))
    L = PoissonLie2(P, T.oracle)
    s = 1 if printed_sign else -1

    def f0(x: TrivialSymmetry) -> HamPair:
        return HamPair(x.xi, interior(x.xi, T.omega) + x.A * s)

    def f2(x: TrivialSymmetry, y: TrivialSymmetry) -> Expr:
        return (interior(x.xi, interior(y.xi, T.omega)).scalar
                + s * (interior(x.xi, y.A).scalar - interior(y.xi, x.A).scalar))

    name = "quasi_iso_printed" if printed_sign else "quasi_iso"
    return Lie2Morphism(T, L, f0, lambda f: f, f2, name)


# -- composite and its 2-isomorphism ---------------------------------------


@dataclass(frozen=True)
class CompositeElement:
    """Pair ``(e', e)`` with ``rho'(e') = sigma_Q(e)``, taken modulo ``(lam'(w), kappa_Q(w))``."""
    outer: EElement
    inner: EElement

    def __add__(self, other: "CompositeElement") -> "CompositeElement":
        return CompositeElement(self.outer + other.outer, self.inner + other.inner)

    def __neg__(self) -> "CompositeElement":
        return CompositeElement(-self.outer, -self.inner)

    def __sub__(self, other: "CompositeElement") -> "CompositeElement":
        return self + (-other)


class CompositeButterfly:
    """Composite of the trivial-gerbe butterfly with Q, evaluated lazily on pairs."""

    def __init__(self, outer: EButterfly, inner: QButterfly) -> None:
        self.outer = outer
        self.inner = inner
        self.oracle = inner.oracle

    def make(self, e: EElement, g: Expr = 0) -> CompositeElement:
        """Complete a Q-carrier element by the unique outer lift with function ``g``."""
        v = as_conn(self.outer.c, self.inner.sigma(e))
        return CompositeElement(EElement(v, _functions(self.outer.cover, g)), e)

    def constraint(self, x: CompositeElement) -> SampleComparison:
        return compare_conn(self.outer.c, self.outer.rho(x.outer), as_conn(self.outer.c, self.inner.sigma(x.inner)),
                            self.oracle)

    def kappa(self, h) -> CompositeElement:
        return CompositeElement(self.outer.kappa(h), self.inner.zero())

    def lam(self, u: AlgebroidSection) -> CompositeElement:
        return CompositeElement(self.outer.zero(), self.inner.lam(u))

    def sigma(self, x: CompositeElement) -> HamPair:
        return self.outer.sigma(x.outer)

    def rho(self, x: CompositeElement) -> ConnMultVF:
        return self.inner.rho(x.inner)

    def bracket(self, x: CompositeElement, y: CompositeElement) -> CompositeElement:
        return CompositeElement(self.outer.bracket(x.outer, y.outer), self.inner.bracket(x.inner, y.inner))

    def shift(self, w) -> CompositeElement:
        """The quotient direction ``(lam'(w), kappa_Q(w))``."""
        return CompositeElement(self.outer.lam(AlgebroidSection(_functions(self.outer.cover, w))),
                                self.inner.kappa(w))

    def compare(self, x: CompositeElement, y: CompositeElement) -> SampleComparison:
        """Equality in the quotient: the difference must be a shift."""
        d = x - y
        base = self.inner.target.compare0(self.inner.rho(d.inner), self.inner.target.zero0())
        if not base.passed:
            return base
        w = kappa_kernel_witness(self.inner, d.inner)
        return SampleComparison.worst([self.outer.compare(d.outer, self.shift(w).outer),
                                       self.inner.compare(d.inner, self.inner.kappa(w))])


def phi(composite: CompositeButterfly, x: CompositeElement) -> EElement:
    """``[(e', e)] -> (v; g + g')`` with ``g'`` the function of the outer element."""
    outer_g = x.outer.g.scalar((0,))
    return EElement(x.inner.v, x.inner.g + _functions(composite.inner.cover, outer_g))


def two_iso_phi(bE_outer: EButterfly, bQ: QButterfly, bE: EButterfly, elements: Sequence[EElement],
                functions: Sequence[Expr], sections: Sequence[AlgebroidSection]) -> Report:
    """Check that phi is a butterfly isomorphism from the composite onto ``bE``.

    ``elements`` are Q-carrier samples, completed to composite elements with
    the sampled ``functions`` as outer parts.
    """
    comp = CompositeButterfly(bE_outer, bQ)
    pairs = [comp.make(e, functions[i % len(functions)]) for i, e in enumerate(elements)]
    V, W = bE.source, bE.target
    report = Report("phi")
    report.add(from_comparison("constraint", SampleComparison.worst(comp.constraint(x) for x in pairs)))
    report.add(from_comparison("kappa", SampleComparison.worst(
        bE.compare(phi(comp, comp.kappa(h)), bE.kappa(h)) for h in functions)))
    report.add(from_comparison("lambda", SampleComparison.worst(
        bE.compare(phi(comp, comp.lam(u)), bE.lam(u)) for u in sections)))
    report.add(from_comparison("sigma", SampleComparison.worst(
        V.compare0(bE.sigma(phi(comp, x)), comp.sigma(x)) for x in pairs)))
    report.add(from_comparison("rho", SampleComparison.worst(
        W.compare0(bE.rho(phi(comp, x)), comp.rho(x)) for x in pairs)))
    report.add(from_comparison("quotient", SampleComparison.worst(
        c for x in pairs for w in functions
        for c in (bE.compare(phi(comp, x + comp.shift(w)), phi(comp, x)), comp.compare(x + comp.shift(w), x)))))
    brackets = [(x, y) for i, x in enumerate(pairs) for y in pairs[i + 1:]]
    report.add(from_comparison("bracket", SampleComparison.worst(
        bE.compare(phi(comp, comp.bracket(x, y)), bE.bracket(phi(comp, x), phi(comp, y))) for x, y in brackets)))
    report.add(from_comparison("bracket_constraint", SampleComparison.worst(
        comp.constraint(comp.bracket(x, y)) for x, y in brackets)))
    report.add(from_comparison("zero", bE.compare(phi(comp, comp.make(bQ.zero())), bE.zero())))
    logger.debug("phi on %d composite samples: %s", len(pairs), report.counts())
    return report


# -- Kostant lift --------------------------------------------------------------


def hamiltonian_field(omega: Form, f: Expr) -> VectorField:
    """Solve ``i_X omega = -df``.

    Raises
    ------
    NoHamiltonianField
        When the coefficient matrix of omega is singular.
    """
    coords = omega.coords
    Omega = form_matrix(omega)
    grad = sp.Matrix([-sp.diff(sp.sympify(f), s) for s in symbols_for(coords)])
    if sp.simplify(Omega.det()) == 0:
        raise NoHamiltonianField(f"omega is degenerate on {coords}")
    X = Omega.T.LUsolve(grad)
    return VectorField.make(coords, [sp.simplify(entry) for entry in X])


def _fibre_name(coords: Sequence[str]) -> str:
    name = "theta"
    while name in coords:
        name += "_"
    return name


@dataclass(frozen=True)
class KostantLift:
    """Connection-preserving field ``X_f + (f - A(X_f)) d/dtheta`` on ``M x S^1``."""
    f: Expr
    base: VectorField
    field: VectorField
    gamma: Form
    box: Box


def kostant_lift(omega: Form, A: Form, f, box: Box, oracle: Oracle) -> KostantLift:
    """Lift of the Hamiltonian field of ``f``; string input is parsed over the box coordinates."""
    cmp = compare_forms(exterior_d(A), omega, box, oracle)
    if not cmp.passed:
        raise PreconditionFailed("dA = omega", cmp.max_residual)
    f = parse_expr(f, box.coords) if isinstance(f, str) else sp.sympify(f)
    X = hamiltonian_field(omega, f)
    theta = _fibre_name(box.coords)
    coords = box.coords + (theta,)
    vertical = f - interior(X, A).scalar
    lifted = VectorField.make(coords, list(X.components) + [vertical])
    gamma = Form.make(coords, 1, A.terms) + Form.make(coords, 1, {(len(coords) - 1,): 1})
    lifted_box = Box(coords, box.lower + (0.0,), box.upper + (2 * np.pi,))
    return KostantLift(f, X, lifted, gamma, lifted_box)


def check_kostant(lift: KostantLift, oracle: Oracle) -> Report:
    report = Report("kostant")
    coords = lift.box.coords
    report.add(from_comparison("quantomorphism", compare_forms(
        lie_derivative(lift.field, lift.gamma), Form.zero(coords, 1), lift.box, oracle)))
    report.add(from_comparison("contraction", oracle.compare(interior(lift.field, lift.gamma).scalar, lift.f, lift.box)))
    return report


def check_kostant_bracket(omega: Form, A: Form, f, g, box: Box, oracle: Oracle) -> SampleComparison:
    """``[lift f, lift g] = lift {f, g}`` with ``{f, g} = X_f(g)``."""
    lf = kostant_lift(omega, A, f, box, oracle)
    lg = kostant_lift(omega, A, g, box, oracle)
    poisson = lf.base.apply(lg.f)
    lb = kostant_lift(omega, A, poisson, box, oracle)
    return compare_fields(vf_bracket(lf.field, lg.field), lb.field, lf.box, oracle)


# -- quasi-Hamiltonian spaces -------------------------------------------------


@dataclass(eq=False)
class GroupModel:
    """One coordinate patch of a Lie group with Maurer-Cartan data.

    ``structure[k, i, j]`` are the structure constants and ``inner`` the
    invariant inner product on the Lie algebra.
    """
    box: Box
    theta_L: List[Form]
    theta_R: List[Form]
    eta: Form
    inner: np.ndarray
    structure: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.theta_L)

    def algebra(self) -> FinDimLie2:
        return FinDimLie2.from_lie_algebra(self.structure, name="moment_source")


@dataclass(eq=False)
class QHamData:
    box: Box
    omega: Form
    phi: Tuple[Expr, ...]
    generators: List[VectorField]


def _half_bracket(G: GroupModel, theta: List[Form], k: int) -> Form:
    total = Form.zero(G.box.coords, 2)
    for i in range(G.rank):
        for j in range(G.rank):
            if G.structure[k, i, j]:
                total = total + wedge(theta[i], theta[j]) * (float(G.structure[k, i, j]) / 2)
    return total


def validate_group_model(G: GroupModel, oracle: Oracle) -> Report:
    report = Report("group_model")
    coords = G.box.coords
    report.add(from_comparison("eta_closed", compare_forms(exterior_d(G.eta), Form.zero(coords, 4), G.box, oracle)))
    report.add(from_comparison("inner_symmetric", _array_comparison(G.inner, G.inner.T, oracle.tol)))
    invariance = np.einsum("kij,kl->ijl", G.structure, G.inner) + np.einsum("jk,kil->ijl", G.inner, G.structure)
    report.add(from_comparison("inner_invariant", _array_comparison(invariance, np.zeros_like(invariance), oracle.tol)))
    mc = []
    for k in range(G.rank):
        mc.append(compare_forms(exterior_d(G.theta_L[k]) + _half_bracket(G, G.theta_L, k),
                                Form.zero(coords, 2), G.box, oracle))
        mc.append(compare_forms(exterior_d(G.theta_R[k]) - _half_bracket(G, G.theta_R, k),
                                Form.zero(coords, 2), G.box, oracle))
    report.add(from_comparison("maurer_cartan", SampleComparison.worst(mc)))
    return report


def _array_comparison(a: np.ndarray, b: np.ndarray, tol: float) -> SampleComparison:
    residual = float(np.max(np.abs(a - b), initial=0.0))
    return SampleComparison(residual <= tol, residual)


def validate_qham(G: GroupModel, D: QHamData, oracle: Oracle) -> Report:
    """Closedness, moment condition per basis element, and minimal degeneracy."""
    if len(D.generators) != G.rank:
        raise PreconditionFailed("one generating field per basis element")
    coords = D.box.coords
    report = Report("qham")
    pulled_eta = pullback(G.eta, coords, D.phi)
    report.add(from_comparison("closedness", compare_forms(
        exterior_d(D.omega) + pulled_eta, Form.zero(coords, 3), D.box, oracle)))
    for a, xi in enumerate(D.generators):
        mc = Form.zero(G.box.coords, 1)
        for b in range(G.rank):
            if G.inner[b, a]:
                mc = mc + (G.theta_L[b] + G.theta_R[b]) * float(G.inner[b, a])
        lhs = interior(xi, D.omega) + pullback(mc, coords, D.phi) * sp.Rational(1, 2)
        report.add(from_comparison(f"moment[{a}]", compare_forms(lhs, Form.zero(coords, 1), D.box, oracle)))
    report.add(from_comparison("nondegeneracy", _nondegeneracy(D, oracle)))
    return report


def _nondegeneracy(D: QHamData, oracle: Oracle) -> SampleComparison:
    """``ker omega_x ∩ ker dPhi_x = 0``: the stacked matrix has full column rank."""
    coords = D.box.coords
    syms = symbols_for(coords)
    pts = oracle.points(D.box)
    Omega = form_matrix(D.omega)
    rows = [[Omega[i, j] for j in range(len(coords))] for i in range(len(coords))]
    rows += [[sp.diff(sp.sympify(p), s) for s in syms] for p in D.phi]
    values = np.stack([np.stack([evaluate(entry, coords, pts)
                                 for entry in row], axis=-1) for row in rows], axis=1)
    deficit = 0
    witness = None
    for k, matrix in enumerate(values):
        singular = np.linalg.svd(matrix, compute_uv=False)
        missing = len(coords) - int(np.sum(singular > RANK_TOL * max(1.0, singular.max(initial=0.0))))
        if missing > deficit:
            deficit, witness = missing, D.box.point(pts[k])
    return SampleComparison(deficit == 0, float(deficit), witness)


# -- the square -------------------------------------------------------------


@dataclass(frozen=True)
class MomentMap:
    """Hamiltonian pair per Lie-algebra basis element."""
    pairs: Tuple[HamPair, ...]

    def morphism(self, G: GroupModel, target: PoissonLie2) -> Lie2Morphism:
        def f0(x):
            total = target.zero0()
            for weight, pair in zip(x, self.pairs):
                if weight:
                    total = total + pair * float(weight)
            return total

        return Lie2Morphism(G.algebra(), target, f0, lambda h: sp.S.Zero, None, "moment_map")


def check_square(bE_triv: EButterfly, bE_gerbe: EButterfly, bQ: QButterfly, elements: Sequence[EElement],
                 functions: Sequence[Expr], sections: Sequence[AlgebroidSection],
                 moment: Optional[MomentMap] = None, group: Optional[GroupModel] = None) -> Report:
    """The square through the trivialization 2-commutes; optionally the moment-map triangle.

    Raises
    ------
    PreconditionFailed
        When the two Poisson algebras are built on different 3-forms.
    """
    oracle = bE_gerbe.oracle
    same = compare_forms(bE_triv.P.chi, bE_gerbe.P.chi, bE_gerbe.P.box, oracle)
    if not same.passed:
        raise PreconditionFailed("d omega = chi", same.max_residual)
    report = two_iso_phi(bE_triv, bQ, bE_gerbe, elements, functions, sections).prefixed("square")
    if moment is None or group is None:
        report.add(skipped("square.moment", "no moment map supplied"))
        return report
    V = bE_gerbe.source
    mu = moment.morphism(group, V)
    report.extend(check_morphism(mu, group.algebra().basis0(), []).prefixed("square.moment").results)
    comp = CompositeButterfly(bE_triv, bQ)
    for a, h in enumerate(moment.pairs):
        outer = bE_triv.sigma_section(h)
        inner = bQ.sigma_section(as_trivial(bE_triv.rho(outer)))
        image = phi(comp, CompositeElement(outer, inner))
        direct = bE_gerbe.sigma_section(h)
        d = image - direct
        w = lambda_kernel_witness(bE_gerbe, d)
        cmp = SampleComparison.worst([V.compare0(bE_gerbe.sigma(image), h),
                                      bE_gerbe.compare(bE_gerbe.lam(w.combined()), d)])
        report.add(from_comparison(f"square.triangle[{a}]", cmp))
    return report


__all__ = [
    "EElement", "GerbeButterfly", "EButterfly", "QButterfly", "TrivialSymmetry", "TrivialGerbeSymmetries",
    "GerbeWitnesses", "CompositeElement", "CompositeButterfly", "KostantLift", "GroupModel", "QHamData",
    "MomentMap", "validate_element", "build_E", "build_Q", "sigma_section_E", "sigma_section_Q",
    "KernelWitness", "lambda_kernel_witness", "kappa_kernel_witness", "example_quasi_iso", "as_conn", "as_trivial", "phi",
    "two_iso_phi", "hamiltonian_field", "kostant_lift", "check_kostant", "check_kostant_bracket",
    "validate_group_model", "validate_qham", "check_square",
]
