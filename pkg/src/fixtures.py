"""Programmatic fixtures and seeded random instances.

The named gerbes mirror the shipped bundles; the ``random_*`` helpers draw
polynomial data with small integer coefficients from a numpy generator so
that every draw is reproducible from its seed.
"""

from __future__ import annotations

import logging
from itertools import combinations, combinations_with_replacement
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from scipy.spatial.transform import Rotation

from src.cartan import Form, VectorField, exterior_d, homotopy_operator, interior, lie_derivative
from src.cech import CechForm, Cover, DeligneCocycle, Trivialization
from src.errors import DimensionMismatch, PreconditionFailed
from src.gerbevf import AlgebroidSection
from src.lie2core import FinDimLie2, FinDimMorphism
from src.plectic import HamPair, PlecticManifold, hamiltonian_pair
from src.quantomorph import GroupModel, MomentMap, QHamData, TrivialSymmetry
from src.symexpr import Box, Expr, Oracle, symbols_for

logger = logging.getLogger(__name__)

COORDS = ("x", "y", "z")
F2_BOX = Box(COORDS, (-2.0, -1.0, -1.0), (2.0, 1.0, 1.0))


def _form(degree: int, terms) -> Form:
    return Form.from_names(COORDS, degree, terms)


def volume_form(coords: Sequence[str] = COORDS) -> Form:
    return Form.make(coords, len(coords), {tuple(range(len(coords))): 1})


def f2_cover() -> Cover:
    return Cover(F2_BOX, (Box(COORDS, (-2.0, -1.0, -1.0), (1.0, 1.0, 1.0)),
                          Box(COORDS, (-1.0, -1.0, -1.0), (2.0, 1.0, 1.0))))


def f2_cocycle(broken: bool = False) -> DeligneCocycle:
    """Two charts, ``A_12 = y dz``, ``B_1 = x dy dz`` and ``B_2 = B_1 + dy dz``.

    With ``broken`` the second curving equals the first, so ``delta B = dA``
    fails by ``dy dz``.
    """
    x, y, _ = symbols_for(COORDS)
    cover = f2_cover()
    B1 = _form(2, {("y", "z"): x})
    B2 = B1 if broken else B1 + _form(2, {("y", "z"): 1})
    return DeligneCocycle(cover, CechForm.zero(cover, 0, 3),
                          CechForm.make(cover, 1, 2, {(0, 1): _form(1, {("z",): y})}),
                          CechForm.make(cover, 2, 1, {(0,): B1, (1,): B2}))


def f2_trivialization() -> Trivialization:
    """``eta_1 = 0``, ``eta_2 = y dz`` with error 2-form ``x dy dz``."""
    x, y, _ = symbols_for(COORDS)
    cover = f2_cover()
    return Trivialization(CechForm.zero(cover, 0, 2),
                          CechForm.make(cover, 1, 1, {(1,): _form(1, {("z",): y})}),
                          _form(2, {("y", "z"): x}))


def flat_cocycle() -> DeligneCocycle:
    """F2 cover with closed curvings ``B_1 = 0``, ``B_2 = dy dz``."""
    _, y, _ = symbols_for(COORDS)
    cover = f2_cover()
    return DeligneCocycle(cover, CechForm.zero(cover, 0, 3),
                          CechForm.make(cover, 1, 2, {(0, 1): _form(1, {("z",): y})}),
                          CechForm.make(cover, 2, 1, {(1,): _form(2, {("y", "z"): 1})}))


def single_chart_cocycle() -> DeligneCocycle:
    x = symbols_for(COORDS)[0]
    return DeligneCocycle.trivial(Box(COORDS, (-1.0,) * 3, (1.0,) * 3), _form(2, {("y", "z"): x}))


def three_chart_cocycle() -> DeligneCocycle:
    """x-slabs with ``phi_012 = y`` and ``A_01 = dy``; every curving is ``x dy dz``."""
    x, y, _ = symbols_for(COORDS)
    cover = Cover(F2_BOX, tuple(Box(COORDS, (lo, -1.0, -1.0), (hi, 1.0, 1.0))
                                for lo, hi in ((-2.0, 0.5), (-1.0, 1.0), (-0.5, 2.0))))
    B = _form(2, {("y", "z"): x})
    return DeligneCocycle(cover, CechForm.make(cover, 0, 3, {(0, 1, 2): Form.function(COORDS, y)}),
                          CechForm.make(cover, 1, 2, {(0, 1): _form(1, {("y",): 1})}),
                          CechForm.make(cover, 2, 1, {(i,): B for i in range(3)}))


def plectic_of(c: DeligneCocycle) -> PlecticManifold:
    return PlecticManifold(c.cover.manifold, volume_form(c.coords))


# -- random draws --------------------------------------------------------------


def random_polynomial(coords: Sequence[str], rng: np.random.Generator, degree: int = 2,
                      exclude: Optional[str] = None) -> Expr:
    syms = [s for s in symbols_for(coords) if s.name != exclude]
    total = sp.Integer(int(rng.integers(-2, 3)))
    for d in range(1, degree + 1):
        for mono in combinations_with_replacement(syms, d):
            total += int(rng.integers(-2, 3)) * sp.Mul(*mono)
    return total


def random_form(coords: Sequence[str], degree: int, rng: np.random.Generator, poly_degree: int = 2) -> Form:
    return Form.make(coords, degree, {idx: random_polynomial(coords, rng, poly_degree)
                                      for idx in combinations(range(len(coords)), degree)})


def random_field(coords: Sequence[str], rng: np.random.Generator, poly_degree: int = 2) -> VectorField:
    return VectorField.make(coords, [random_polynomial(coords, rng, poly_degree) for _ in coords])


def random_volume_preserving_field(coords: Sequence[str], rng: np.random.Generator,
                                   poly_degree: int = 2) -> VectorField:
    """Component ``i`` does not depend on ``x_i``, so the divergence vanishes."""
    return VectorField.make(coords, [random_polynomial(coords, rng, poly_degree, exclude=c) for c in coords])


def random_appendix_instance(rng: np.random.Generator, box: Box = F2_BOX):
    """``B = d(random 1-form) + x dy dz`` with volume-preserving fields and homotopy potentials."""
    coords = box.coords
    if len(coords) != 3:
        raise DimensionMismatch("appendix instances live in dimension 3")
    B = exterior_d(random_form(coords, 1, rng)) + Form.make(coords, 2, {(1, 2): symbols_for(coords)[0]})
    fields = [random_volume_preserving_field(coords, rng, 1) for _ in range(3)]
    potentials = [homotopy_operator(lie_derivative(V, B), box.center) for V in fields]
    return (B, *fields, *potentials)


def random_hamiltonian_pairs(P: PlecticManifold, rng: np.random.Generator, oracle: Oracle,
                             count: int = 4) -> List[HamPair]:
    """Up to ``count`` pairs from volume-preserving fields; fields that move chi are dropped."""
    pairs: List[HamPair] = []
    for _ in range(4 * count):
        if len(pairs) == count:
            break
        try:
            pairs.append(hamiltonian_pair(P, random_volume_preserving_field(P.coords, rng, 1), oracle))
        except PreconditionFailed as exc:
            logger.debug("dropped sample field: %s", exc)
    return pairs


def random_functions(coords: Sequence[str], rng: np.random.Generator, count: int = 2) -> List[Expr]:
    return [random_polynomial(coords, rng) for _ in range(count)]


def random_sections(c: DeligneCocycle, rng: np.random.Generator, count: int = 2) -> List[AlgebroidSection]:
    return [AlgebroidSection.of(c, {i: random_polynomial(c.coords, rng) for i in range(len(c.cover.charts))})
            for _ in range(count)]


def trivial_symmetry(omega: Form, h: HamPair) -> TrivialSymmetry:
    """``(xi, i_xi omega - beta)`` for a Hamiltonian pair of ``d omega``."""
    return TrivialSymmetry(h.xi, interior(h.xi, omega) - h.beta)


# -- finite-dimensional instances ------------------------------------------


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for (i, j, k), sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                            ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)):
        eps[i, j, k] = sign
    return eps


def conjugated_so3(P: np.ndarray, name: str = "so3") -> FinDimLie2:
    """``[x, y] = P (P^-1 x × P^-1 y)`` as a 2-term algebra with zero degree-1 part."""
    Pinv = np.linalg.inv(P)
    structure = np.einsum("ka,abc,bi,cj->kij", P, levi_civita(), Pinv, Pinv)
    return FinDimLie2.from_lie_algebra(structure, name=name)


def random_invertible(rng: np.random.Generator, n: int = 3) -> np.ndarray:
    while True:
        m = rng.normal(size=(n, n))
        if abs(np.linalg.det(m)) > 0.3:
            return m


def strict_adjoint(P0: np.ndarray, P1: np.ndarray, scale: float = 0.0, name: str = "adjoint") -> FinDimLie2:
    """Strict algebra ``R^3 -> so(3)``, ``d = scale * I``, with so(3) acting by the cross product.

    ``P0`` and ``P1`` change basis in degree 0 and degree 1.
    """
    eps = levi_civita()
    P0inv, P1inv = np.linalg.inv(P0), np.linalg.inv(P1)
    return FinDimLie2(scale * P0 @ P1inv, np.einsum("ka,abc,bi,cj->kij", P0, eps, P0inv, P0inv),
                      np.einsum("ka,abc,bi,cj->kij", P1, eps, P0inv, P1inv), np.zeros((3, 3, 3, 3)), name=name)


def random_strict_chain(rng: np.random.Generator, degree_one: bool = False,
                        scale: float = 0.0) -> Tuple[FinDimMorphism, FinDimMorphism]:
    """Two composable strict isomorphisms between rotated copies of one algebra.

    The copies are conjugates of so(3), or of :func:`strict_adjoint` when
    ``degree_one`` is set.
    """
    R1 = Rotation.random(random_state=int(rng.integers(2 ** 31))).as_matrix()
    R2 = Rotation.random(random_state=int(rng.integers(2 ** 31))).as_matrix()
    if not degree_one:
        P, Q, S = (random_invertible(rng) for _ in range(3))
        L1, L2, L3 = conjugated_so3(P, "L1"), conjugated_so3(Q, "L2"), conjugated_so3(S, "L3")
        f = FinDimMorphism(L1, L2, Q @ R1 @ np.linalg.inv(P), np.zeros((0, 0)))
        g = FinDimMorphism(L2, L3, S @ R2 @ np.linalg.inv(Q), np.zeros((0, 0)))
        return f, g
    (P0, P1), (Q0, Q1), (S0, S1) = ((random_invertible(rng), random_invertible(rng)) for _ in range(3))
    L1, L2, L3 = (strict_adjoint(A0, A1, scale, name) for A0, A1, name in
                  ((P0, P1, "A1"), (Q0, Q1, "A2"), (S0, S1, "A3")))
    f = FinDimMorphism(L1, L2, Q0 @ R1 @ np.linalg.inv(P0), Q1 @ R1 @ np.linalg.inv(P1))
    g = FinDimMorphism(L2, L3, S0 @ R2 @ np.linalg.inv(Q0), S1 @ R2 @ np.linalg.inv(Q1))
    return f, g


def string_type() -> FinDimLie2:
    """``R -> so(3)`` with zero differential and Jacobiator the triple product."""
    eps = levi_civita()
    return FinDimLie2(np.zeros((3, 1)), eps, np.zeros((1, 3, 1)), eps[np.newaxis], name="string")


# -- quasi-Hamiltonian -------------------------------------------------------


def abelian_group() -> GroupModel:
    coords = ("t",)
    dt = Form.make(coords, 1, {(0,): 1})
    return GroupModel(Box(coords, (-3.0,), (3.0,)), [dt], [dt], Form.zero(coords, 3),
                      np.eye(1), np.zeros((1, 1, 1)))


def abelian_qham(flipped: bool = False) -> QHamData:
    """``M = (q, p)``, ``omega = dp dq``, ``Phi = p`` and generator ``d/dq``."""
    coords = ("q", "p")
    omega = Form.make(coords, 2, {(1, 0): -1 if flipped else 1})
    _, p = symbols_for(coords)
    return QHamData(Box(coords, (-1.0, -1.0), (1.0, 1.0)), omega, (p,), [VectorField.partial(coords, "q")])


def kostant_plane() -> Tuple[Form, Form, Box]:
    """``(R^2, dx dy)`` with primitive ``A = x dy`` on the square ``[-1, 1]^2``."""
    coords = ("x", "y")
    x = symbols_for(coords)[0]
    return (Form.make(coords, 2, {(0, 1): 1}), Form.make(coords, 1, {(1,): x}),
            Box(coords, (-1.0, -1.0), (1.0, 1.0)))


def translation_moment(coords: Sequence[str] = COORDS) -> MomentMap:
    """Translation along the first axis with ``beta = -y dz``, so ``d beta = -i_xi chi``."""
    y = symbols_for(coords)[1]
    return MomentMap((HamPair(VectorField.partial(coords, coords[0]), Form.make(coords, 1, {(2,): -y})),))


__all__ = [
    "COORDS", "F2_BOX", "volume_form", "f2_cover", "f2_cocycle", "f2_trivialization", "flat_cocycle",
    "single_chart_cocycle", "three_chart_cocycle", "plectic_of", "random_polynomial", "random_form",
    "random_field", "random_volume_preserving_field", "random_appendix_instance", "random_hamiltonian_pairs",
    "random_functions", "random_sections", "trivial_symmetry", "levi_civita", "conjugated_so3",
    "random_invertible", "random_strict_chain", "strict_adjoint", "string_type", "abelian_group", "abelian_qham", "kostant_plane",
    "translation_moment",
]
