"""Differential forms and vector fields on a coordinate box, with Cartan calculus.

A :class:`Form` of degree k stores one ``sympy`` coefficient per strictly
increasing multi-index of coordinate positions; absent indices are zero.
Contractions insert the vector field into the first slot, so that
``interior(Z, interior(Y, interior(X, w)))`` equals ``w(X, Y, Z)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp

from src.constants import FLOW_STEP, FLOW_TOL
from src.errors import DegreeError, DimensionMismatch, PreconditionFailed
from src.symexpr import Box, Expr, Oracle, SampleComparison, symbols_for

logger = logging.getLogger(__name__)

Index = Tuple[int, ...]
Scalar = Union[Expr, int, float]


def _sorted_with_sign(indices: Sequence[int]) -> Tuple[int, Index]:
    """Sort a multi-index; sign is 0 when an index repeats."""
    if len(set(indices)) != len(indices):
        return 0, ()
    items = list(indices)
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


def _is_zero(e: Expr) -> bool:
    return e == 0 or e.is_zero is True


@dataclass(frozen=True)
class Form:
    """Differential form with coefficients keyed by increasing index tuples."""
    coords: Tuple[str, ...]
    degree: int
    terms: Mapping[Index, Expr]

    @classmethod
    def make(cls, coords: Sequence[str], degree: int,
             terms: Optional[Mapping[Sequence[int], Scalar]] = None) -> "Form":
        coords = tuple(coords)
        if degree < 0:
            raise DegreeError("negative degree")
        clean: Dict[Index, Expr] = {}
        if degree <= len(coords):
            for idx, coef in (terms or {}).items():
                idx = tuple(idx)
                if len(idx) != degree:
                    raise DegreeError(f"index {idx} does not have length {degree}")
                sign, key = _sorted_with_sign(idx)
                if sign == 0:
                    continue
                clean[key] = clean.get(key, sp.S.Zero) + sign * sp.sympify(coef)
        clean = {k: v for k, v in clean.items() if not _is_zero(v)}
        return cls(coords, degree, clean)

    @classmethod
    def zero(cls, coords: Sequence[str], degree: int) -> "Form":
        return cls.make(coords, degree)

    @classmethod
    def function(cls, coords: Sequence[str], f: Scalar) -> "Form":
        return cls.make(coords, 0, {(): f})

    @classmethod
    def from_names(cls, coords: Sequence[str], degree: int,
                   terms: Mapping[Sequence[str], Scalar]) -> "Form":
        """Build from coordinate-name multi-indices, e.g. ``{("y", "z"): x}``."""
        pos = {c: i for i, c in enumerate(coords)}
        try:
            return cls.make(coords, degree, {tuple(pos[n] for n in names): c for names, c in terms.items()})
        except KeyError as exc:
            raise DimensionMismatch(f"unknown coordinate {exc}") from exc

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def scalar(self) -> Expr:
        """Coefficient of a 0-form."""
        if self.degree != 0:
            raise DegreeError("scalar() needs a 0-form")
        return self.terms.get((), sp.S.Zero)

    def coefficient(self, names: Sequence[str]) -> Expr:
        sign, key = _sorted_with_sign([self.coords.index(n) for n in names])
        return sign * self.terms.get(key, sp.S.Zero)

    def _check(self, other: "Form") -> None:
        if self.coords != other.coords:
            raise DimensionMismatch(f"forms on {self.coords} and {other.coords}")
        if self.degree != other.degree:
            raise DegreeError(f"cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        terms: Dict[Index, Expr] = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, sp.S.Zero) + v
        return Form.make(self.coords, self.degree, terms)

    def __neg__(self) -> "Form":
        return Form(self.coords, self.degree, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __mul__(self, c: Scalar) -> "Form":
        return Form.make(self.coords, self.degree, {k: sp.sympify(c) * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def map_coefficients(self, fn) -> "Form":
        return Form.make(self.coords, self.degree, {k: fn(v) for k, v in self.terms.items()})

    def expand(self) -> "Form":
        return self.map_coefficients(sp.expand)

    def is_zero(self) -> bool:
        return not self.terms

    def describe(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for idx, coef in sorted(self.terms.items()):
            basis = "^".join(f"d{self.coords[i]}" for i in idx)
            parts.append(f"({coef})" + (f" {basis}" if basis else ""))
        return " + ".join(parts)


@dataclass(frozen=True)
class VectorField:
    """Vector field given by one component per coordinate."""
    coords: Tuple[str, ...]
    components: Tuple[Expr, ...]

    @classmethod
    def make(cls, coords: Sequence[str], components: Sequence[Scalar]) -> "VectorField":
        if len(components) != len(coords):
            raise DimensionMismatch("one component per coordinate is required")
        return cls(tuple(coords), tuple(sp.sympify(c) for c in components))

    @classmethod
    def from_names(cls, coords: Sequence[str], components: Mapping[str, Scalar]) -> "VectorField":
        unknown = set(components) - set(coords)
        if unknown:
            raise DimensionMismatch(f"unknown coordinates {sorted(unknown)}")
        return cls.make(coords, [components.get(c, 0) for c in coords])

    @classmethod
    def zero(cls, coords: Sequence[str]) -> "VectorField":
        return cls.make(coords, [0] * len(coords))

    @classmethod
    def partial(cls, coords: Sequence[str], name: str) -> "VectorField":
        return cls.from_names(coords, {name: 1})

    def _check(self, other: "VectorField") -> None:
        if self.coords != other.coords:
            raise DimensionMismatch(f"fields on {self.coords} and {other.coords}")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.coords, tuple(a + b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> "VectorField":
        return VectorField(self.coords, tuple(-a for a in self.components))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + (-other)

    def __mul__(self, c: Scalar) -> "VectorField":
        return VectorField(self.coords, tuple(sp.sympify(c) * a for a in self.components))

    __rmul__ = __mul__

    def apply(self, f: Scalar) -> Expr:
        """Directional derivative X(f)."""
        f = sp.sympify(f)
        return sp.Add(*[c * sp.diff(f, s) for c, s in zip(self.components, symbols_for(self.coords))])

    def is_zero(self) -> bool:
        return all(_is_zero(c) for c in self.components)


def wedge(a: Form, b: Form) -> Form:
    if a.coords != b.coords:
        raise DimensionMismatch(f"forms on {a.coords} and {b.coords}")
    terms: Dict[Index, Expr] = {}
    for i, ca in a.terms.items():
        for j, cb in b.terms.items():
            sign, key = _sorted_with_sign(i + j)
            if sign:
                terms[key] = terms.get(key, sp.S.Zero) + sign * ca * cb
    return Form.make(a.coords, a.degree + b.degree, terms)


def exterior_d(a: Form) -> Form:
    syms = symbols_for(a.coords)
    terms: Dict[Index, Expr] = {}
    for idx, coef in a.terms.items():
        for m, s in enumerate(syms):
            sign, key = _sorted_with_sign((m,) + idx)
            if sign:
                terms[key] = terms.get(key, sp.S.Zero) + sign * sp.diff(coef, s)
    return Form.make(a.coords, a.degree + 1, terms)


def interior(X: VectorField, a: Form) -> Form:
    if X.coords != a.coords:
        raise DimensionMismatch(f"field on {X.coords}, form on {a.coords}")
    if a.degree == 0:
        raise DegreeError("cannot contract a 0-form")
    terms: Dict[Index, Expr] = {}
    for idx, coef in a.terms.items():
        for j, i in enumerate(idx):
            key = idx[:j] + idx[j + 1:]
            terms[key] = terms.get(key, sp.S.Zero) + (-1) ** j * X.components[i] * coef
    return Form.make(a.coords, a.degree - 1, terms)


def contract(a: Form, *fields: VectorField) -> Form:
    """Evaluate ``a`` on ``fields`` in order: ``contract(w, X, Y) = w(X, Y)``."""
    for X in fields:
        a = interior(X, a)
    return a


def lie_derivative(X: VectorField, a: Form) -> Form:
    """Cartan formula ``L_X a = i_X d a + d i_X a``."""
    result = interior(X, exterior_d(a))
    if a.degree > 0:
        result = result + exterior_d(interior(X, a))
    return result


def lie_derivative_leibniz(X: VectorField, a: Form) -> Form:
    """Coordinate Lie derivative using ``L_X dx^i = d(X^i)`` and the Leibniz rule."""
    result = Form.zero(a.coords, a.degree)
    for idx, coef in a.terms.items():
        result = result + Form.make(a.coords, a.degree, {idx: X.apply(coef)})
        for j in range(len(idx)):
            piece = Form.function(a.coords, coef)
            for m, i in enumerate(idx):
                factor = exterior_d(Form.function(a.coords, X.components[i])) if m == j \
                    else Form.make(a.coords, 1, {(i,): 1})
                piece = wedge(piece, factor)
            result = result + piece
    return result


def vf_bracket(X: VectorField, Y: VectorField) -> VectorField:
    X._check(Y)
    return VectorField(X.coords, tuple(X.apply(y) - Y.apply(x)
                                       for x, y in zip(X.components, Y.components)))


def pullback(a: Form, source: Sequence[str], mapping: Sequence[Scalar]) -> Form:
    """Pull ``a`` back along the map whose ``j``-th target coordinate is ``mapping[j]``."""
    if len(mapping) != a.dim:
        raise DimensionMismatch("mapping needs one expression per target coordinate")
    subs = dict(zip(symbols_for(a.coords), (sp.sympify(m) for m in mapping)))
    differentials = [exterior_d(Form.function(source, m)) for m in mapping]
    result = Form.zero(source, a.degree)
    for idx, coef in a.terms.items():
        piece = Form.function(source, sp.sympify(coef).xreplace(subs))
        for i in idx:
            piece = wedge(piece, differentials[i])
        result = result + piece
    return result


def homotopy_operator(a: Form, center: Optional[Sequence[float]] = None) -> Form:
    """Poincaré homotopy operator on a box, star-shaped about ``center``.

    Satisfies ``d H a + H d a = a`` for forms of degree at least one; closed
    forms therefore satisfy ``d H a = a``.
    """
    if a.degree == 0:
        return Form.zero(a.coords, 0)
    syms = symbols_for(a.coords)
    center = tuple(center) if center is not None else (0.0,) * a.dim
    t = sp.Dummy("t")
    path = {s: c + t * (s - c) for s, c in zip(syms, (sp.nsimplify(c) for c in center))}
    terms: Dict[Index, Expr] = {}
    for idx, coef in a.terms.items():
        moved = sp.sympify(coef).xreplace(path) * t ** (a.degree - 1)
        for j, i in enumerate(idx):
            key = idx[:j] + idx[j + 1:]
            integrand = sp.expand(moved * (syms[i] - sp.nsimplify(center[i])))
            value = sp.integrate(integrand, (t, 0, 1))
            terms[key] = terms.get(key, sp.S.Zero) + (-1) ** j * value
    return Form.make(a.coords, a.degree - 1, terms)


def compare_forms(a: Form, b: Form, box: Box, oracle: Oracle) -> SampleComparison:
    if a.coords != b.coords:
        raise DimensionMismatch(f"forms on {a.coords} and {b.coords}")
    if a.degree != b.degree and not (a.is_zero() and b.is_zero()):
        raise DegreeError(f"comparing forms of degree {a.degree} and {b.degree}")
    keys = sorted(set(a.terms) | set(b.terms))
    return oracle.compare_all(((a.terms.get(k, sp.S.Zero), b.terms.get(k, sp.S.Zero)) for k in keys), box)


def compare_fields(X: VectorField, Y: VectorField, box: Box, oracle: Oracle) -> SampleComparison:
    X._check(Y)
    return oracle.compare_all(zip(X.components, Y.components), box)


def _rk4_step(field_fn, jac_fn, x: np.ndarray, s: float) -> Tuple[np.ndarray, np.ndarray]:
    """One RK4 step of the flow together with its Jacobian."""
    n = x.size

    def rhs(state):
        p, J = state[:n], state[n:].reshape(n, n)
        return np.concatenate([field_fn(p), (jac_fn(p) @ J).ravel()])

    state = np.concatenate([x, np.eye(n).ravel()])
    k1 = rhs(state)
    k2 = rhs(state + s / 2 * k1)
    k3 = rhs(state + s / 2 * k2)
    k4 = rhs(state + s * k3)
    state = state + s / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return state[:n], state[n:].reshape(n, n)


def flow_pullback(X: VectorField, a: Form, point: Sequence[float], s: float) -> Dict[Index, float]:
    """Coefficients of the pullback of ``a`` along the time-``s`` flow of X at ``point``."""
    syms = symbols_for(X.coords)
    comps = sp.lambdify(syms, list(X.components), "numpy")
    jac = sp.lambdify(syms, sp.Matrix(X.components).jacobian(syms), "numpy")
    field_fn = lambda p: np.asarray(comps(*p), dtype=float)
    jac_fn = lambda p: np.asarray(jac(*p), dtype=float)
    image, J = _rk4_step(field_fn, jac_fn, np.asarray(point, dtype=float), s)
    values = {k: float(sp.lambdify(syms, c, "numpy")(*image)) for k, c in a.terms.items()}
    out: Dict[Index, float] = {}
    for I in combinations(range(a.dim), a.degree):
        total = 0.0
        for K, v in values.items():
            minor = J[np.ix_(K, I)] if a.degree else np.ones((0, 0))
            total += v * (np.linalg.det(minor) if a.degree else 1.0)
        out[I] = total
    return out


def flow_pullback_check(X: VectorField, a: Form, box: Box, oracle: Oracle,
                        step: float = FLOW_STEP, tol: float = FLOW_TOL) -> SampleComparison:
    """Compare ``L_X a`` with a central difference of flow pullbacks."""
    L = lie_derivative(X, a)
    syms = symbols_for(a.coords)
    exact_fns = {I: sp.lambdify(syms, L.terms.get(I, sp.S.Zero), "numpy")
                 for I in combinations(range(a.dim), a.degree)}
    results = []
    for row in oracle.points(box):
        forward = flow_pullback(X, a, row, step)
        backward = flow_pullback(X, a, row, -step)
        for I, fn in exact_fns.items():
            numeric = (forward[I] - backward[I]) / (2 * step)
            exact = float(fn(*row))
            residual = abs(numeric - exact)
            results.append(SampleComparison(residual <= tol * (1 + abs(exact)), residual, box.point(row)))
    return SampleComparison.worst(results)


def check_calculus(a: Form, b: Form, X: VectorField, Y: VectorField, box: Box,
                   oracle: Oracle) -> Dict[str, SampleComparison]:
    """Sampled Cartan relations on one instance."""
    bracket = vf_bracket(X, Y)
    checks = {
        "d_squared": compare_forms(exterior_d(exterior_d(a)), Form.zero(a.coords, a.degree + 2), box, oracle),
        "magic_formula": compare_forms(lie_derivative(X, a), lie_derivative_leibniz(X, a), box, oracle),
        "leibniz": compare_forms(
            exterior_d(wedge(a, b)),
            wedge(exterior_d(a), b) + (-1) ** a.degree * wedge(a, exterior_d(b)), box, oracle),
        "lie_bracket": compare_forms(
            lie_derivative(bracket, a),
            lie_derivative(X, lie_derivative(Y, a)) - lie_derivative(Y, lie_derivative(X, a)), box, oracle),
    }
    if a.degree > 0:
        checks["lie_interior"] = compare_forms(
            lie_derivative(X, interior(Y, a)) - interior(Y, lie_derivative(X, a)),
            interior(bracket, a), box, oracle)
        checks["nilpotent_interior"] = compare_forms(
            interior(X, interior(X, a)) if a.degree > 1 else Form.zero(a.coords, 0),
            Form.zero(a.coords, max(a.degree - 2, 0)), box, oracle)
    return checks


def _appendix_term(B: Form, X: VectorField, Y: VectorField, Z: VectorField,
                   a: Form, b: Form, c: Form) -> Form:
    YZ = vf_bracket(Y, Z)
    return (interior(X, lie_derivative(Y, c) - lie_derivative(Z, b))
            - interior(YZ, a)
            + interior(YZ, interior(X, B)))


def check_appendix_identity(B: Form, X: VectorField, Y: VectorField, Z: VectorField,
                            a: Form, b: Form, c: Form, box: Box, oracle: Oracle) -> SampleComparison:
    """Verify the triple-contraction identity for a 2-form with exact Lie derivatives.

    Given ``L_X B = da``, ``L_Y B = db`` and ``L_Z B = dc``, the contraction
    ``-i_Z i_Y i_X dB`` equals
    ``i_X(L_Y c - L_Z b) - i_[Y,Z] a + i_[Y,Z] i_X B`` summed over the cyclic
    permutations of ``(X, a), (Y, b), (Z, c)``.

    Raises
    ------
    PreconditionFailed
        Naming the first hypothesis ``L_X B = da`` that fails on samples.
    """
    if B.degree != 2 or any(f.degree != 1 for f in (a, b, c)):
        raise DegreeError("need a 2-form and three 1-forms")
    for name, V, pot in (("X", X, a), ("Y", Y, b), ("Z", Z, c)):
        hyp = compare_forms(lie_derivative(V, B), exterior_d(pot), box, oracle)
        if not hyp.passed:
            raise PreconditionFailed(f"L_{name} B = d{_potential_name(name)}", hyp.max_residual)
    lhs = -interior(Z, interior(Y, interior(X, exterior_d(B))))
    rhs = (_appendix_term(B, X, Y, Z, a, b, c)
           + _appendix_term(B, Y, Z, X, b, c, a)
           + _appendix_term(B, Z, X, Y, c, a, b))
    logger.debug("appendix identity: lhs=%s", lhs.describe())
    return compare_forms(lhs, rhs, box, oracle)


def _potential_name(field_name: str) -> str:
    return {"X": "a", "Y": "b", "Z": "c"}[field_name]


def coordinate_forms(coords: Sequence[str]) -> List[Form]:
    """The basis 1-forms ``dx^i``."""
    return [Form.make(coords, 1, {(i,): 1}) for i in range(len(coords))]


def form_matrix(a: Form) -> sp.Matrix:
    """Antisymmetric coefficient matrix of a 2-form: ``a = sum_{i<j} M[i,j] dx^i dx^j``."""
    if a.degree != 2:
        raise DegreeError("form_matrix needs a 2-form")
    M = sp.zeros(a.dim, a.dim)
    for (i, j), c in a.terms.items():
        M[i, j] = c
        M[j, i] = -c
    return M


__all__ = [
    "Form", "VectorField", "wedge", "exterior_d", "interior", "contract", "lie_derivative",
    "lie_derivative_leibniz", "vf_bracket", "pullback", "homotopy_operator", "compare_forms",
    "compare_fields", "flow_pullback", "flow_pullback_check", "check_calculus",
    "check_appendix_identity", "coordinate_forms", "form_matrix",
]
