"""Covers, Čech cochains of differential forms, Deligne cocycles and trivializations.

Overlaps are indexed by strictly increasing chart tuples. The alternating
differential reads ``(delta f)_{i0..ip} = sum_j (-1)^j f_{i0..^ij..ip}``, so on
functions ``(delta g)_ij = g_j - g_i``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import sympy as sp

from src.cartan import Form, compare_forms, exterior_d
from src.constants import COVER_GRID, INTEGER_TOL, MAX_DEPTH, PARTITION_MARGIN
from src.errors import DegreeError, DepthExceeded, DimensionMismatch, GluingMismatch, PreconditionFailed
from src.report import CheckResult, Report, Status, from_comparison
from src.symexpr import Box, Oracle, SampleComparison, symbols_for

logger = logging.getLogger(__name__)

Overlap = Tuple[int, ...]


@dataclass(frozen=True)
class Cover:
    """A box manifold covered by open sub-boxes."""
    manifold: Box
    charts: Tuple[Box, ...]

    def __post_init__(self) -> None:
        for chart in self.charts:
            if chart.coords != self.manifold.coords:
                raise DimensionMismatch("chart coordinates differ from the manifold's")

    @classmethod
    def single(cls, manifold: Box) -> "Cover":
        return cls(manifold, (manifold,))

    @property
    def coords(self) -> Tuple[str, ...]:
        return self.manifold.coords

    @cached_property
    def nerve(self) -> nx.Graph:
        """Graph on chart indices with an edge for every nonempty double overlap."""
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.charts)))
        for i in range(len(self.charts)):
            for j in range(i + 1, len(self.charts)):
                if not self.box((i, j)).is_empty:
                    graph.add_edge(i, j)
        return graph

    @cached_property
    def _overlaps(self) -> Dict[int, List[Overlap]]:
        # Axis-parallel boxes have the Helly property: pairwise intersecting
        # families intersect, so cliques of the nerve are exactly the overlaps.
        found: Dict[int, List[Overlap]] = {p: [] for p in range(1, MAX_DEPTH + 1)}
        for clique in nx.enumerate_all_cliques(self.nerve):
            if len(clique) > MAX_DEPTH:
                break
            found[len(clique)].append(tuple(sorted(clique)))
        return {p: sorted(v) for p, v in found.items()}

    def overlaps(self, depth: int) -> List[Overlap]:
        if depth < 1 or depth > MAX_DEPTH:
            raise DepthExceeded(f"overlap depth {depth} outside 1..{MAX_DEPTH}")
        return self._overlaps[depth]

    def box(self, index: Overlap) -> Box:
        result = self.manifold
        for i in index:
            result = result.intersect(self.charts[i])
        return result

    def check_covering(self, k: int = COVER_GRID) -> SampleComparison:
        """Every interior grid point of the manifold lies in some chart."""
        grid = self.manifold.grid(k)
        inside = np.zeros(len(grid), dtype=bool)
        for chart in self.charts:
            inside |= chart.contains(grid)
        if inside.all():
            return SampleComparison(True)
        miss = int(np.nonzero(~inside)[0][0])
        return SampleComparison(False, 1.0, self.manifold.point(grid[miss]))

    def membership(self, index: int) -> sp.Basic:
        chart = self.charts[index]
        return sp.And(*[c for s, lo, hi in zip(symbols_for(self.coords), chart.lower, chart.upper)
                        for c in (s > lo, s < hi)])


@dataclass(frozen=True)
class CechForm:
    """Degree-k forms attached to the depth-p overlaps of a cover."""
    cover: Cover
    degree: int
    depth: int
    parts: Mapping[Overlap, Form] = field(default_factory=dict)

    @classmethod
    def make(cls, cover: Cover, degree: int, depth: int,
             parts: Optional[Mapping[Overlap, Form]] = None) -> "CechForm":
        valid = set(cover.overlaps(depth))
        clean: Dict[Overlap, Form] = {}
        for idx, form in (parts or {}).items():
            idx = tuple(idx)
            if idx not in valid:
                raise DimensionMismatch(f"{idx} is not a nonempty depth-{depth} overlap")
            if form.degree != degree:
                raise DegreeError(f"part {idx} has degree {form.degree}, expected {degree}")
            if not form.is_zero():
                clean[idx] = form
        return cls(cover, degree, depth, clean)

    @classmethod
    def zero(cls, cover: Cover, degree: int, depth: int) -> "CechForm":
        return cls.make(cover, degree, depth)

    @classmethod
    def functions(cls, cover: Cover, depth: int, values: Mapping[Overlap, object]) -> "CechForm":
        return cls.make(cover, 0, depth, {k: Form.function(cover.coords, v) for k, v in values.items()})

    @classmethod
    def restrict(cls, cover: Cover, form: Form) -> "CechForm":
        """The depth-1 cochain ``{form|U_i}``."""
        return cls.make(cover, form.degree, 1, {(i,): form for i in range(len(cover.charts))})

    def part(self, index: Sequence[int]) -> Form:
        return self.parts.get(tuple(index), Form.zero(self.cover.coords, self.degree))

    def scalar(self, index: Sequence[int]) -> sp.Expr:
        return self.part(index).scalar

    def indices(self) -> List[Overlap]:
        return self.cover.overlaps(self.depth)

    def _check(self, other: "CechForm") -> None:
        if (self.degree, self.depth) != (other.degree, other.depth) or self.cover != other.cover:
            raise DimensionMismatch("cochains of different shape")

    def __add__(self, other: "CechForm") -> "CechForm":
        self._check(other)
        keys = set(self.parts) | set(other.parts)
        return CechForm.make(self.cover, self.degree, self.depth, {k: self.part(k) + other.part(k) for k in keys})

    def __neg__(self) -> "CechForm":
        return CechForm(self.cover, self.degree, self.depth, {k: -v for k, v in self.parts.items()})

    def __sub__(self, other: "CechForm") -> "CechForm":
        return self + (-other)

    def __mul__(self, c) -> "CechForm":
        return CechForm.make(self.cover, self.degree, self.depth, {k: v * c for k, v in self.parts.items()})

    __rmul__ = __mul__

    def map(self, fn: Callable[[Form], Form], degree: Optional[int] = None) -> "CechForm":
        """Apply a form operation chart-wise (``d``, contraction, Lie derivative, ...)."""
        parts = {k: fn(self.part(k)) for k in self.indices()}
        target = degree if degree is not None else next(iter(parts.values())).degree if parts else self.degree
        return CechForm.make(self.cover, target, self.depth, parts)


def cech_delta(f: CechForm) -> CechForm:
    if f.depth + 1 > MAX_DEPTH:
        raise DepthExceeded(f"cannot take delta of a depth-{f.depth} cochain")
    parts: Dict[Overlap, Form] = {}
    for idx in f.cover.overlaps(f.depth + 1):
        total = Form.zero(f.cover.coords, f.degree)
        for j in range(len(idx)):
            face = f.part(idx[:j] + idx[j + 1:])
            total = total + face if j % 2 == 0 else total - face
        parts[idx] = total
    return CechForm.make(f.cover, f.degree, f.depth + 1, parts)


def compare_cech(a: CechForm, b: CechForm, oracle: Oracle) -> Dict[Overlap, SampleComparison]:
    a._check(b)
    return {idx: compare_forms(a.part(idx), b.part(idx), a.cover.box(idx), oracle) for idx in a.indices()}


def worst(comparisons: Mapping[Overlap, SampleComparison]) -> SampleComparison:
    return SampleComparison.worst(comparisons.values())


def glue(zeta: CechForm, oracle: Oracle) -> Form:
    """Glue a delta-closed depth-1 cochain into a global form.

    Raises
    ------
    GluingMismatch
        When two charts disagree on their overlap.
    """
    if zeta.depth != 1:
        raise DepthExceeded("only depth-1 cochains glue")
    for idx, cmp in compare_cech(cech_delta(zeta), CechForm.zero(zeta.cover, zeta.degree, 2), oracle).items():
        if not cmp.passed:
            raise GluingMismatch(idx, cmp.max_residual, cmp.witness)
    charts = range(len(zeta.cover.charts))
    first = zeta.part((0,))
    if all((zeta.part((i,)) - first).expand().is_zero() for i in charts):
        return first
    coords = zeta.cover.coords
    keys = sorted({k for i in charts for k in zeta.part((i,)).terms})
    terms = {}
    last = len(zeta.cover.charts) - 1
    for key in keys:
        pieces = [(zeta.part((i,)).terms.get(key, sp.S.Zero),
                   zeta.cover.membership(i) if i < last else sp.true) for i in charts]
        terms[key] = sp.Piecewise(*pieces)
    return Form.make(coords, zeta.degree, terms)


def _smooth_step(t: sp.Expr) -> sp.Expr:
    rise = sp.exp(-1 / t)
    return sp.Piecewise((0, t <= 0), (1, t >= 1), (rise / (rise + sp.exp(-1 / (1 - t))), True))


def partition_of_unity(cover: Cover) -> List[sp.Expr]:
    """Smooth functions ``rho_k`` supported in ``U_k`` with ``sum rho_k = 1`` on M."""
    syms = symbols_for(cover.coords)
    M = cover.manifold
    bumps = []
    for chart in cover.charts:
        bump = sp.S.One
        for s, lo, hi, mlo, mhi in zip(syms, chart.lower, chart.upper, M.lower, M.upper):
            width = PARTITION_MARGIN * (hi - lo)
            if lo > mlo:
                bump *= _smooth_step((s - lo) / width)
            if hi < mhi:
                bump *= _smooth_step((hi - s) / width)
        bumps.append(bump)
    total = sp.Add(*bumps)
    return [b / total for b in bumps]


def _oriented(h: CechForm, i: int, k: int) -> Form:
    if i == k:
        return Form.zero(h.cover.coords, h.degree)
    return h.part((i, k)) if i < k else -h.part((k, i))


def solve_coboundary(h: CechForm, oracle: Oracle) -> CechForm:
    """Solve ``delta g = h`` for a delta-closed depth-2 cochain.

    Uses ``g_i = -sum_k rho_k h_ik`` with a partition of unity ``rho``.
    """
    if h.depth != 2:
        raise DepthExceeded("solve_coboundary expects a depth-2 cochain")
    closed = worst(compare_cech(cech_delta(h), CechForm.zero(h.cover, h.degree, 3), oracle))
    if not closed.passed:
        raise PreconditionFailed("delta h = 0", closed.max_residual)
    rho = partition_of_unity(h.cover)
    coords = h.cover.coords
    parts = {}
    for i in range(len(h.cover.charts)):
        total = Form.zero(coords, h.degree)
        for k in h.cover.nerve.neighbors(i):
            inside = h.cover.membership(k)
            total = total - _oriented(h, i, k).map_coefficients(
                lambda c, r=rho[k], cond=inside: sp.Piecewise((r * c, cond), (0, True)))
        parts[(i,)] = total
    return CechForm.make(h.cover, h.degree, 1, parts)


def solve_constants(cover: Cover, c: Mapping[Overlap, float], tol: float = INTEGER_TOL) -> Dict[int, float]:
    """Constants ``k_i`` with ``k_j - k_i = c_ij`` on every edge of the nerve.

    Walks a breadth-first spanning forest and verifies the remaining edges.
    """
    k: Dict[int, float] = {}
    for root in sorted(cover.nerve.nodes):
        if root in k:
            continue
        k[root] = 0.0
        for i, j in nx.bfs_edges(cover.nerve, root):
            k[j] = k[i] + c[(i, j)] if i < j else k[i] - c[(j, i)]
    for (i, j) in cover.nerve.edges:
        i, j = min(i, j), max(i, j)
        residual = abs(k[j] - k[i] - c[(i, j)])
        if residual > tol:
            raise GluingMismatch((i, j), residual)
    return k


@dataclass(frozen=True)
class DeligneCocycle:
    """Phases, connection 1-forms and curvings of a gerbe with connective structure."""
    cover: Cover
    phi: CechForm
    A: CechForm
    B: CechForm

    def __post_init__(self) -> None:
        for name, cochain, shape in (("phi", self.phi, (0, 3)), ("A", self.A, (1, 2)), ("B", self.B, (2, 1))):
            if (cochain.degree, cochain.depth) != shape:
                raise DegreeError(f"{name} must have (degree, depth) = {shape}")

    @classmethod
    def trivial(cls, manifold: Box, curving: Form) -> "DeligneCocycle":
        """Single-chart gerbe with curving ``curving``."""
        cover = Cover.single(manifold)
        return cls(cover, CechForm.zero(cover, 0, 3), CechForm.zero(cover, 1, 2),
                   CechForm.restrict(cover, curving))

    @property
    def coords(self) -> Tuple[str, ...]:
        return self.cover.coords


@dataclass(frozen=True)
class Trivialization:
    """Phases psi_ij, 1-forms eta_i and the error 2-form omega."""
    psi: CechForm
    eta: CechForm
    omega: Form


def _integrality(values: np.ndarray, box: Box, points: np.ndarray) -> SampleComparison:
    gap = np.abs(values - np.round(values))
    idx = int(np.argmax(gap)) if gap.size else 0
    return SampleComparison(bool(np.all(gap <= INTEGER_TOL)), float(gap.max(initial=0.0)),
                            box.point(points[idx]) if gap.size else None)


def _entries(prefix: str, comparisons: Mapping[Overlap, SampleComparison]) -> List[CheckResult]:
    return [from_comparison(f"{prefix}[{','.join(map(str, idx))}]", cmp) for idx, cmp in comparisons.items()]


def validate_cover(cover: Cover) -> CheckResult:
    return from_comparison("cover.union", cover.check_covering())


def validate_deligne(c: DeligneCocycle, oracle: Oracle) -> Report:
    """Sampled check of the three cocycle conditions, one entry per overlap."""
    report = Report("deligne")
    dphi = cech_delta(c.phi)
    for idx in c.cover.overlaps(4):
        box = c.cover.box(idx)
        pts = oracle.points(box)
        values = oracle.values(dphi.part(idx).scalar, box)
        report.add(from_comparison(f"phase_integral[{','.join(map(str, idx))}]", _integrality(values, box, pts)))
    report.extend(_entries("connection", compare_cech(cech_delta(c.A), c.phi.map(exterior_d, 1), oracle)))
    report.extend(_entries("curving", compare_cech(cech_delta(c.B), c.A.map(exterior_d, 2), oracle)))
    logger.debug("validated cocycle on %d charts", len(c.cover.charts))
    return report


def three_curvature(c: DeligneCocycle, oracle: Oracle) -> Form:
    """The global 3-form glued from ``dB_i``.

    Raises
    ------
    PreconditionFailed
        When the curving layer ``delta B = dA`` fails, or when the glued form
        is not closed.
    GluingMismatch
        When the local ``dB_i`` disagree on an overlap.
    """
    curving = worst(compare_cech(cech_delta(c.B), c.A.map(exterior_d, 2), oracle))
    if not curving.passed:
        raise PreconditionFailed("delta B = dA", curving.max_residual)
    H = glue(c.B.map(exterior_d, 3), oracle)
    closed = compare_forms(exterior_d(H), Form.zero(H.coords, 4), c.cover.manifold, oracle)
    if not closed.passed:
        raise PreconditionFailed("dH = 0", closed.max_residual)
    return H


def validate_trivialization(c: DeligneCocycle, t: Trivialization, oracle: Oracle) -> Report:
    report = Report("trivialization")
    gap = cech_delta(t.psi) - c.phi
    for idx in c.cover.overlaps(3):
        box = c.cover.box(idx)
        values = oracle.values(gap.part(idx).scalar, box)
        report.add(from_comparison(f"phase_integral[{','.join(map(str, idx))}]",
                                   _integrality(values, box, oracle.points(box))))
    report.extend(_entries("connection", compare_cech(cech_delta(t.eta), c.A + t.psi.map(exterior_d, 1), oracle)))
    report.extend(_entries("error_form", compare_cech(c.B - t.eta.map(exterior_d, 2),
                                                      CechForm.restrict(c.cover, t.omega), oracle)))
    return report


def check_glue_roundtrip(zeta: CechForm, oracle: Oracle) -> CheckResult:
    """Glue a delta-closed cochain and restrict it back."""
    try:
        glued = glue(zeta, oracle)
    except GluingMismatch as exc:
        return CheckResult("glue_roundtrip", Status.FAIL, exc.residual, None, str(exc))
    return from_comparison("glue_roundtrip", worst(compare_cech(CechForm.restrict(zeta.cover, glued), zeta, oracle)))


__all__ = [
    "Cover", "CechForm", "DeligneCocycle", "Trivialization", "cech_delta", "compare_cech", "worst",
    "glue", "partition_of_unity", "solve_coboundary", "solve_constants", "validate_cover",
    "validate_deligne", "three_curvature", "validate_trivialization", "check_glue_roundtrip",
]
