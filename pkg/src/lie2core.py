"""Two-term L-infinity algebras, their morphisms and butterflies.

Conventions
-----------
A homotopy "from P to Q" satisfies ``d H = P - Q``. The Jacobiator therefore
obeys ``d J(x, y, z) = [x,[y,z]] + [y,[z,x]] + [z,[x,y]]`` and a morphism
homotopy obeys ``d F(x, y) = F0[x, y] - [F0 x, F0 y]``.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import combinations, product
from typing import Any, Callable, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.constants import DEFAULT_TOL, FIND_2ISO_STEPS, LSTSQ_TOL, RANK_TOL
from src.errors import DimensionMismatch, PreconditionFailed, UnsupportedExactnessCheck
from src.report import CheckResult, Report, Status, from_comparison
from src.symexpr import SampleComparison

logger = logging.getLogger(__name__)


class Lie2Structure(ABC):
    """A 2-term L-infinity algebra ``V1 --d--> V0`` with an equality oracle."""

    name = "lie2"

    @abstractmethod
    def differential(self, h: Any) -> Any: ...

    @abstractmethod
    def bracket(self, x: Any, y: Any) -> Any:
        """Bracket of two degree-0 elements."""

    @abstractmethod
    def act(self, x: Any, h: Any) -> Any:
        """Bracket ``[x, h]`` of a degree-0 with a degree-1 element."""

    def jacobiator(self, x: Any, y: Any, z: Any) -> Any:
        return self.zero1()

    @abstractmethod
    def zero0(self) -> Any: ...

    @abstractmethod
    def zero1(self) -> Any: ...

    @abstractmethod
    def compare0(self, a: Any, b: Any) -> SampleComparison: ...

    @abstractmethod
    def compare1(self, a: Any, b: Any) -> SampleComparison: ...


def _tuples(items: Sequence[Any], k: int, exhaustive: bool) -> Iterable[Tuple[Any, ...]]:
    return product(items, repeat=k) if exhaustive else combinations(items, k)


def _entry(check_id: str, comparisons: Iterable[SampleComparison]) -> CheckResult:
    return from_comparison(check_id, SampleComparison.worst(comparisons))


def check_lie2_axioms(L: Lie2Structure, elements0: Sequence[Any], elements1: Sequence[Any],
                      exhaustive: bool = False) -> Report:
    """Chain-map, skew-symmetry, homotopy-Jacobi and coherence checks.

    Parameters
    ----------
    L : Lie2Structure
        The algebra under test.
    elements0, elements1 : sequence
        Sample elements of degree 0 (at least four) and degree 1 (at least two).
    exhaustive : bool
        Use all ordered tuples instead of combinations (finite bases).
    """
    if len(elements0) < 4 or len(elements1) < 2:
        raise PreconditionFailed("at least 4 degree-0 and 2 degree-1 samples")
    br, act, J, d = L.bracket, L.act, L.jacobiator, L.differential
    report = Report(L.name)

    report.add(_entry("chain_map", (L.compare0(d(act(x, h)), br(x, d(h)))
                                    for x in elements0 for h in elements1)))
    report.add(_entry("d_bracket", (L.compare1(act(d(h), k), -act(d(k), h))
                                    for h, k in product(elements1, repeat=2))))
    report.add(_entry("skew_bracket", (L.compare0(br(x, y), -br(y, x))
                                       for x, y in _tuples(elements0, 2, exhaustive))))
    triples = list(_tuples(elements0, 3, exhaustive))
    report.add(_entry("skew_jacobiator", (c for x, y, z in triples for c in (
        L.compare1(J(x, y, z), -J(y, x, z)), L.compare1(J(x, y, z), -J(x, z, y))))))
    report.add(_entry("homotopy_jacobi", (
        L.compare0(d(J(x, y, z)), br(x, br(y, z)) + br(y, br(z, x)) + br(z, br(x, y)))
        for x, y, z in triples)))
    report.add(_entry("homotopy_jacobi_degree1", (
        L.compare1(J(x, y, d(h)), act(x, act(y, h)) - act(y, act(x, h)) - act(br(x, y), h))
        for x, y in _tuples(elements0, 2, exhaustive) for h in elements1)))

    def coherence(x, y, z, w):
        lhs = (act(x, J(y, z, w)) + J(x, br(y, z), w) + J(x, z, br(y, w))
               - act(w, J(x, y, z)) + act(z, J(x, y, w)))
        rhs = (J(x, y, br(z, w)) + J(br(x, y), z, w) + act(y, J(x, z, w))
               + J(y, br(x, z), w) + J(y, z, br(x, w)))
        return L.compare1(lhs, rhs)

    report.add(_entry("coherence", (coherence(*q) for q in _tuples(elements0, 4, exhaustive))))
    logger.debug("lie2 axioms for %s: %s", L.name, report.counts())
    return report


@dataclass
class Lie2Morphism:
    """Chain map ``(F0, F1)`` with homotopy ``F2``."""
    source: Lie2Structure
    target: Lie2Structure
    f0: Callable[[Any], Any]
    f1: Callable[[Any], Any]
    f2: Optional[Callable[[Any, Any], Any]] = None
    name: str = "morphism"

    def homotopy(self, x: Any, y: Any) -> Any:
        return self.f2(x, y) if self.f2 is not None else self.target.zero1()


def check_morphism(m: Lie2Morphism, elements0: Sequence[Any], elements1: Sequence[Any],
                   exhaustive: bool = False) -> Report:
    V, W = m.source, m.target
    F0, F1, F = m.f0, m.f1, m.homotopy
    report = Report(m.name)
    report.add(_entry("chain_map", (W.compare0(F0(V.differential(h)), W.differential(F1(h))) for h in elements1)))
    report.add(_entry("homotopy_skew", (W.compare1(F(x, y), -F(y, x))
                                        for x, y in _tuples(elements0, 2, exhaustive))))
    report.add(_entry("homotopy_degree0", (
        W.compare0(W.differential(F(x, y)), F0(V.bracket(x, y)) - W.bracket(F0(x), F0(y)))
        for x, y in _tuples(elements0, 2, exhaustive))))
    report.add(_entry("homotopy_degree1", (
        W.compare1(F(x, V.differential(h)), F1(V.act(x, h)) - W.act(F0(x), F1(h)))
        for x in elements0 for h in elements1)))

    def jacobiator(x, y, z):
        lhs = F1(V.jacobiator(x, y, z)) - W.jacobiator(F0(x), F0(y), F0(z))
        rhs = (F(x, V.bracket(y, z)) - F(V.bracket(x, y), z) - F(y, V.bracket(x, z))
               + W.act(F0(z), F(x, y)) + W.act(F0(x), F(y, z)) - W.act(F0(y), F(x, z)))
        return W.compare1(lhs, rhs)

    report.add(_entry("jacobiator", (jacobiator(*t) for t in _tuples(elements0, 3, exhaustive))))
    return report


def vector_comparison(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> SampleComparison:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"vectors of length {a.size} and {b.size}")
    if a.size == 0:
        return SampleComparison(True)
    residual = np.abs(a - b)
    excess = residual / (1 + np.abs(a))
    idx = int(np.argmax(excess))
    return SampleComparison(bool(np.all(excess <= tol)), float(residual.max()), {"component": float(idx)})


@dataclass(eq=False)
class FinDimLie2(Lie2Structure):
    """Numeric 2-term L-infinity algebra given by coefficient tensors.

    ``[x, y]_k = b00[k, i, j] x_i y_j``, ``[x, h]_k = b01[k, i, j] x_i h_j`` and
    ``J(x, y, z)_k = jac[k, i, j, l] x_i y_j z_l``.
    """
    d: np.ndarray
    b00: np.ndarray
    b01: np.ndarray
    jac: np.ndarray
    tol: float = DEFAULT_TOL
    name: str = "findim"

    def __post_init__(self) -> None:
        n0, n1 = self.d.shape
        shapes = {"b00": (self.b00.shape, (n0, n0, n0)), "b01": (self.b01.shape, (n1, n0, n1)),
                  "jac": (self.jac.shape, (n1, n0, n0, n0))}
        for key, (got, want) in shapes.items():
            if got != want:
                raise DimensionMismatch(f"{key} has shape {got}, expected {want}")

    @classmethod
    def from_lie_algebra(cls, structure: np.ndarray, name: str = "lie") -> "FinDimLie2":
        """The algebra ``[0 -> g]`` of an ordinary Lie algebra."""
        n = structure.shape[0]
        return cls(np.zeros((n, 0)), np.asarray(structure, float), np.zeros((0, n, 0)),
                   np.zeros((0, n, n, n)), name=name)

    @property
    def n0(self) -> int:
        return self.d.shape[0]

    @property
    def n1(self) -> int:
        return self.d.shape[1]

    def differential(self, h):
        return self.d @ h

    def bracket(self, x, y):
        return np.einsum("kij,i,j->k", self.b00, x, y)

    def act(self, x, h):
        return np.einsum("kij,i,j->k", self.b01, x, h)

    def jacobiator(self, x, y, z):
        return np.einsum("kijl,i,j,l->k", self.jac, x, y, z)

    def zero0(self):
        return np.zeros(self.n0)

    def zero1(self):
        return np.zeros(self.n1)

    def compare0(self, a, b):
        return vector_comparison(a, b, self.tol)

    def compare1(self, a, b):
        return vector_comparison(a, b, self.tol)

    def basis0(self) -> List[np.ndarray]:
        return list(np.eye(self.n0))

    def basis1(self) -> List[np.ndarray]:
        return list(np.eye(self.n1))

    def validate_tensors(self) -> Report:
        """Skew-symmetry of the bracket tensor and full skew-symmetry of J."""
        report = Report(self.name)
        report.add(from_comparison("bracket_tensor_skew",
                                   vector_comparison(self.b00, -np.swapaxes(self.b00, 1, 2), self.tol)))
        report.add(from_comparison("jacobiator_tensor_skew", SampleComparison.worst([
            vector_comparison(self.jac, -np.swapaxes(self.jac, 1, 2), self.tol),
            vector_comparison(self.jac, -np.swapaxes(self.jac, 2, 3), self.tol)])))
        return report


@dataclass(eq=False)
class FinDimMorphism:
    """Matrices of a morphism between finite-dimensional algebras."""
    source: FinDimLie2
    target: FinDimLie2
    f0: np.ndarray
    f1: np.ndarray
    f2: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.f0.shape != (self.target.n0, self.source.n0) or self.f1.shape != (self.target.n1, self.source.n1):
            raise DimensionMismatch("morphism matrices do not match the algebras")
        if self.f2 is None:
            self.f2 = np.zeros((self.target.n1, self.source.n0, self.source.n0))

    @classmethod
    def identity(cls, L: FinDimLie2) -> "FinDimMorphism":
        return cls(L, L, np.eye(L.n0), np.eye(L.n1))

    def homotopy(self, x, y):
        return np.einsum("kij,i,j->k", self.f2, x, y)

    def as_morphism(self, name: str = "findim_morphism") -> Lie2Morphism:
        return Lie2Morphism(self.source, self.target, lambda x: self.f0 @ x, lambda h: self.f1 @ h,
                            self.homotopy, name)

    def then(self, other: "FinDimMorphism") -> "FinDimMorphism":
        """Composite of two strict morphisms (``other`` after ``self``)."""
        return FinDimMorphism(self.source, other.target, other.f0 @ self.f0, other.f1 @ self.f1)


class ExactnessWitness(Protocol):
    """Constructive exactness checks for carriers without a rank argument."""

    def ne_sw(self, butterfly: "ButterflyData", carrier: Sequence[Any]) -> List[CheckResult]: ...

    def nw_se(self, butterfly: "ButterflyData", carrier: Sequence[Any]) -> List[CheckResult]: ...


class ButterflyData(ABC):
    """Butterfly ``source ⇢ target`` with carrier maps and bracket."""

    name = "butterfly"
    source: Lie2Structure
    target: Lie2Structure
    witnesses: Optional[ExactnessWitness] = None

    @abstractmethod
    def kappa(self, h: Any) -> Any: ...

    @abstractmethod
    def lam(self, u: Any) -> Any: ...

    @abstractmethod
    def sigma(self, e: Any) -> Any: ...

    @abstractmethod
    def rho(self, e: Any) -> Any: ...

    @abstractmethod
    def bracket(self, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def compare(self, a: Any, b: Any) -> SampleComparison: ...

    @abstractmethod
    def zero(self) -> Any: ...

    def exactness(self, carrier: Sequence[Any]) -> List[CheckResult]:
        if self.witnesses is None:
            raise UnsupportedExactnessCheck(f"{self.name}: no exactness witnesses registered")
        return list(self.witnesses.ne_sw(self, carrier)) + list(self.witnesses.nw_se(self, carrier))


def check_butterfly(b: ButterflyData, carrier: Sequence[Any], source1: Sequence[Any],
                    target1: Sequence[Any]) -> Report:
    """The four butterfly conditions on samples, plus wing exactness."""
    V, W = b.source, b.target
    report = Report(b.name)
    report.add(_entry("rho_kappa", (W.compare0(b.rho(b.kappa(h)), W.zero0()) for h in source1)))
    report.add(_entry("sigma_lambda", (V.compare0(b.sigma(b.lam(u)), V.zero0()) for u in target1)))
    report.add(_entry("sigma_kappa", (V.compare0(b.sigma(b.kappa(h)), V.differential(h)) for h in source1)))
    report.add(_entry("rho_lambda", (W.compare0(b.rho(b.lam(u)), W.differential(u)) for u in target1)))
    pairs = list(combinations(carrier, 2))
    report.add(_entry("skew_bracket", (b.compare(b.bracket(x, y), -b.bracket(y, x)) for x, y in pairs)))
    report.add(_entry("sigma_bracket", (V.compare0(b.sigma(b.bracket(x, y)), V.bracket(b.sigma(x), b.sigma(y)))
                                        for x, y in pairs)))
    report.add(_entry("rho_bracket", (W.compare0(b.rho(b.bracket(x, y)), W.bracket(b.rho(x), b.rho(y)))
                                      for x, y in pairs)))
    report.add(_entry("act_lambda", (b.compare(b.bracket(a, b.lam(u)), b.lam(W.act(b.rho(a), u)))
                                     for a in carrier for u in target1)))
    report.add(_entry("act_kappa", (b.compare(b.bracket(a, b.kappa(h)), b.kappa(V.act(b.sigma(a), h)))
                                    for a in carrier for h in source1)))

    def jacobi(x, y, z):
        lhs = (b.lam(W.jacobiator(b.rho(x), b.rho(y), b.rho(z)))
               + b.kappa(V.jacobiator(b.sigma(x), b.sigma(y), b.sigma(z))))
        rhs = b.bracket(x, b.bracket(y, z)) + b.bracket(y, b.bracket(z, x)) + b.bracket(z, b.bracket(x, y))
        return b.compare(lhs, rhs)

    report.add(_entry("jacobiator", (jacobi(*t) for t in combinations(carrier, 3))))
    report.extend(b.exactness(carrier))
    return report


def bilinear_tensor(fn: Callable[[np.ndarray, np.ndarray], np.ndarray], n_left: int, n_right: int,
                    n_out: int) -> np.ndarray:
    out = np.zeros((n_out, n_left, n_right))
    for i, ei in enumerate(np.eye(n_left)):
        for j, ej in enumerate(np.eye(n_right)):
            out[:, i, j] = fn(ei, ej)
    return out


def _rank(m: np.ndarray) -> int:
    return int(np.linalg.matrix_rank(m, tol=RANK_TOL)) if m.size else 0


@dataclass(eq=False)
class FinDimButterfly(ButterflyData):
    """Butterfly with a finite-dimensional carrier ``R^n``."""
    source: FinDimLie2
    target: FinDimLie2
    kappa_m: np.ndarray
    lam_m: np.ndarray
    sigma_m: np.ndarray
    rho_m: np.ndarray
    bracket_t: np.ndarray
    name: str = "findim_butterfly"
    tol: float = DEFAULT_TOL
    require_invertible: bool = False

    def __post_init__(self) -> None:
        n = self.dim
        V, W = self.source, self.target
        expected = {"kappa": (self.kappa_m.shape, (n, V.n1)), "lambda": (self.lam_m.shape, (n, W.n1)),
                    "sigma": (self.sigma_m.shape, (V.n0, n)), "rho": (self.rho_m.shape, (W.n0, n)),
                    "bracket": (self.bracket_t.shape, (n, n, n))}
        for key, (got, want) in expected.items():
            if got != want:
                raise DimensionMismatch(f"{key} map has shape {got}, expected {want}")

    @property
    def dim(self) -> int:
        return self.bracket_t.shape[0]

    def kappa(self, h):
        return self.kappa_m @ h

    def lam(self, u):
        return self.lam_m @ u

    def sigma(self, e):
        return self.sigma_m @ e

    def rho(self, e):
        return self.rho_m @ e

    def bracket(self, a, b):
        return np.einsum("kij,i,j->k", self.bracket_t, a, b)

    def compare(self, a, b):
        return vector_comparison(a, b, self.tol)

    def zero(self):
        return np.zeros(self.dim)

    def basis(self) -> List[np.ndarray]:
        return list(np.eye(self.dim))

    def exactness(self, carrier: Sequence[Any]) -> List[CheckResult]:
        n, V, W = self.dim, self.source, self.target
        ne_sw = (_rank(self.lam_m) == W.n1 and _rank(self.sigma_m) == V.n0 and n == V.n0 + W.n1
                 and np.allclose(self.sigma_m @ self.lam_m, 0, atol=self.tol))
        nw_se = (_rank(self.kappa_m) == V.n1 and _rank(self.rho_m) == W.n0 and n == W.n0 + V.n1)
        results = [CheckResult("exact_ne_sw", Status.PASS if ne_sw else Status.FAIL,
                               detail=f"rank lambda={_rank(self.lam_m)}, rank sigma={_rank(self.sigma_m)}, dim={n}")]
        if nw_se:
            results.append(CheckResult("exact_nw_se", Status.PASS, detail="invertible"))
        else:
            status = Status.FAIL if self.require_invertible else Status.SKIP
            results.append(CheckResult("exact_nw_se", status, detail="not invertible"))
        return results


def butterfly_of_morphism(m: FinDimMorphism) -> FinDimButterfly:
    """Butterfly ``E = V0 (+) W1`` of a morphism.

    ``kappa(x) = (dx, -F1 x)``, ``lambda(u) = (0, u)``, ``sigma(v, u) = v``,
    ``rho(v, u) = F0 v + du``.
    """
    V, W = m.source, m.target
    n = V.n0 + W.n1
    kappa_m = np.vstack([V.d, -m.f1])
    lam_m = np.vstack([np.zeros((V.n0, W.n1)), np.eye(W.n1)])
    sigma_m = np.hstack([np.eye(V.n0), np.zeros((V.n0, W.n1))])
    rho_m = np.hstack([m.f0, W.d])

    def bracket(a, b):
        x, u = a[:V.n0], a[V.n0:]
        y, w = b[:V.n0], b[V.n0:]
        top = V.bracket(x, y)
        bottom = (W.act(m.f0 @ x, w) - W.act(m.f0 @ y, u) + W.act(W.d @ u, w) - m.homotopy(x, y))
        return np.concatenate([top, bottom])

    return FinDimButterfly(V, W, kappa_m, lam_m, sigma_m, rho_m, bilinear_tensor(bracket, n, n, n),
                           name=f"butterfly({V.name}->{W.name})")


def identity_butterfly(L: FinDimLie2) -> FinDimButterfly:
    return butterfly_of_morphism(FinDimMorphism.identity(L))


def flip(b: FinDimButterfly) -> FinDimButterfly:
    """Inverse of an invertible butterfly: mirror the diagram."""
    return FinDimButterfly(b.target, b.source, b.lam_m, b.kappa_m, b.rho_m, b.sigma_m, b.bracket_t,
                           name=f"flip({b.name})", tol=b.tol, require_invertible=b.require_invertible)


def _complement(s: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the column span of ``s``."""
    if s.size == 0 or np.allclose(s, 0):
        return np.eye(n)
    return linalg.null_space(s.T, rcond=RANK_TOL)


def compose_butterflies(b1: FinDimButterfly, b2: FinDimButterfly) -> FinDimButterfly:
    """Composite ``b2 ∘ b1`` on the fibre product over the middle degree-0 space.

    The fibre product ``{(e, e') : rho1 e = sigma2 e'}`` is quotiented by the
    image of the middle degree-1 space under ``(lambda1, kappa2)``.
    """
    mid1, mid2 = b1.target, b2.source
    if (mid1.n0, mid1.n1) != (mid2.n0, mid2.n1):
        raise DimensionMismatch("butterflies do not share the middle algebra")
    e1, e2 = b1.dim, b2.dim
    fibre = linalg.null_space(np.hstack([b1.rho_m, -b2.sigma_m]), rcond=RANK_TOL)
    image = np.vstack([b1.lam_m, b2.kappa_m])
    comp = _complement(fibre.T @ image, fibre.shape[1])
    lift = fibre @ comp
    proj = lift.T
    kappa_m = proj @ np.vstack([b1.kappa_m, np.zeros((e2, b1.source.n1))])
    lam_m = proj @ np.vstack([np.zeros((e1, b2.target.n1)), b2.lam_m])
    sigma_m = np.hstack([b1.sigma_m, np.zeros((b1.source.n0, e2))]) @ lift
    rho_m = np.hstack([np.zeros((b2.target.n0, e1)), b2.rho_m]) @ lift
    total = np.zeros((e1 + e2,) * 3)
    total[:e1, :e1, :e1] = b1.bracket_t
    total[e1:, e1:, e1:] = b2.bracket_t
    bracket_t = np.einsum("ka,abc,bi,cj->kij", proj, total, lift, lift)
    logger.debug("composed %s then %s: carrier dimension %d", b1.name, b2.name, lift.shape[1])
    return FinDimButterfly(b1.source, b2.target, kappa_m, lam_m, sigma_m, rho_m, bracket_t,
                           name=f"{b2.name}∘{b1.name}", tol=max(b1.tol, b2.tol))


@dataclass
class ButterflyMorphism:
    """Linear map between carriers commuting with all structure."""
    matrix: np.ndarray
    residual: float = 0.0
    bracket_residual: float = 0.0


def _bracket_defect(M: np.ndarray, b1: FinDimButterfly, b2: FinDimButterfly) -> np.ndarray:
    """``M [a, b]_1 - [M a, M b]_2`` as a tensor over basis pairs."""
    lhs = np.einsum("ka,aij->kij", M, b1.bracket_t)
    return lhs - np.einsum("kab,ai,bj->kij", b2.bracket_t, M, M)


def _bracket_jacobian(M: np.ndarray, N: np.ndarray, b1: FinDimButterfly, b2: FinDimButterfly) -> np.ndarray:
    """Derivative of :func:`_bracket_defect` at ``M`` in the direction ``N``."""
    lhs = np.einsum("ka,aij->kij", N, b1.bracket_t)
    return lhs - np.einsum("kab,ai,bj->kij", b2.bracket_t, N, M) - np.einsum("kab,ai,bj->kij", b2.bracket_t, M, N)


def find_2iso(b1: FinDimButterfly, b2: FinDimButterfly, tol: float = LSTSQ_TOL,
              max_steps: int = FIND_2ISO_STEPS) -> Optional[ButterflyMorphism]:
    """Solve for ``M: E1 -> E2`` commuting with kappa, lambda, sigma, rho and brackets.

    The structure-map constraints are linear in ``M``; their solutions form
    ``M0 + span(N_k)``. Bracket preservation is then solved over that family
    by Gauss-Newton, which terminates in one step whenever the bracket
    constraints are linear in the family.
    """
    if b1.dim != b2.dim:
        return None
    n = b1.dim
    eye = np.eye(n)
    blocks, rhs = [], []
    for k1, k2 in ((b1.kappa_m, b2.kappa_m), (b1.lam_m, b2.lam_m)):
        if k1.size:
            blocks.append(np.kron(k1.T, eye))
            rhs.append(k2.ravel(order="F"))
    for s1, s2 in ((b1.sigma_m, b2.sigma_m), (b1.rho_m, b2.rho_m)):
        if s1.size:
            blocks.append(np.kron(eye, s2))
            rhs.append(s1.ravel(order="F"))
    if not blocks:
        return None
    A, y = np.vstack(blocks), np.concatenate(rhs)
    solution, *_ = linalg.lstsq(A, y)
    residual = float(np.linalg.norm(A @ solution - y))
    if residual > tol:
        logger.debug("find_2iso infeasible: residual %.3e", residual)
        return None
    M = solution.reshape((n, n), order="F")
    family = [col.reshape((n, n), order="F") for col in linalg.null_space(A, rcond=RANK_TOL).T]

    defect = _bracket_defect(M, b1, b2)
    for _ in range(max_steps):
        if np.abs(defect).max(initial=0.0) <= tol or not family:
            break
        J = np.stack([_bracket_jacobian(M, N, b1, b2).ravel() for N in family], axis=1)
        step, *_ = linalg.lstsq(J, -defect.ravel())
        M = M + np.einsum("k,kij->ij", step, np.stack(family))
        defect = _bracket_defect(M, b1, b2)
    bracket_residual = float(np.abs(defect).max(initial=0.0))
    logger.debug("find_2iso: bracket residual %.3e over a %d-parameter family", bracket_residual, len(family))
    if bracket_residual > tol or _rank(M) != n:
        return None
    return ButterflyMorphism(M, residual, bracket_residual)


__all__ = [
    "Lie2Structure", "Lie2Morphism", "FinDimLie2", "FinDimMorphism", "ButterflyData", "FinDimButterfly",
    "ButterflyMorphism", "ExactnessWitness", "check_lie2_axioms", "check_morphism", "check_butterfly",
    "butterfly_of_morphism", "identity_butterfly", "flip", "compose_butterflies", "find_2iso",
    "vector_comparison", "bilinear_tensor",
]
