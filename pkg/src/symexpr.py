"""Scalar expressions in chart coordinates and the sampling equality oracle.

Expressions are ``sympy`` objects over real coordinate symbols. Equality of two
expressions is decided by evaluating both at seeded pseudo-random points of a
coordinate box, never by canonical forms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from tokenize import TokenError
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from sympy.core.function import AppliedUndef
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr as _sympy_parse,
    standard_transformations,
)

from src.constants import DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL
from src.errors import DimensionMismatch, DomainError, MissingVariable, ParseError

logger = logging.getLogger(__name__)

Expr = sp.Expr
Point = Dict[str, float]

FUNCTIONS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "pi": sp.pi,
}

_TRANSFORMS = standard_transformations + (convert_xor,)
_GLOBALS = {name: getattr(sp, name) for name in ("Integer", "Float", "Rational", "Symbol", "Function")}


def symbol(name: str) -> sp.Symbol:
    return sp.Symbol(name, real=True)


def symbols_for(coords: Sequence[str]) -> Tuple[sp.Symbol, ...]:
    return tuple(symbol(c) for c in coords)


def parse_expr(text: str, coords: Sequence[str]) -> Expr:
    """Parse an infix expression such as ``"x^2*y + sin(z)"``.

    Parameters
    ----------
    text : str
        The expression. ``^`` denotes a power.
    coords : sequence of str
        Coordinate names allowed as free variables.

    Raises
    ------
    ParseError
        On malformed input or an unknown name; ``offset`` points into ``text``.
    """
    local = {name: symbol(name) for name in coords}
    for name, fn in FUNCTIONS.items():
        local.setdefault(name, fn)
    try:
        expr = _sympy_parse(text, local_dict=local, global_dict=dict(_GLOBALS),
                            transformations=_TRANSFORMS, evaluate=True)
    except SyntaxError as exc:
        offset = max(0, min(len(text), (exc.offset or 1) - 1))
        raise ParseError(text, offset, exc.msg or "syntax error") from exc
    except TokenError as exc:
        raise ParseError(text, len(text), "unbalanced expression") from exc
    except (TypeError, ValueError, AttributeError) as exc:
        raise ParseError(text, 0, str(exc)) from exc
    if not isinstance(expr, sp.Expr):
        raise ParseError(text, 0, "not a scalar expression")
    for call in expr.atoms(AppliedUndef):
        name = call.func.__name__
        raise ParseError(text, max(text.find(name), 0), f"unknown function '{name}'")
    allowed = set(local.values())
    for sym in expr.free_symbols:
        if sym not in allowed:
            raise ParseError(text, max(text.find(sym.name), 0), f"unknown variable '{sym.name}'")
    return expr


def diff(e: Expr, v: str) -> Expr:
    return sp.diff(e, symbol(v))


def normalize(e: Expr) -> Expr:
    """Flatten sums and products and fold constants; idempotent."""
    return sp.expand(sp.sympify(e))


@lru_cache(maxsize=8192)
def _compiled(expr: Expr, syms: Tuple[sp.Symbol, ...]):
    return sp.lambdify(syms, expr, modules="numpy")


def evaluate(expr: Expr, coords: Sequence[str], points: np.ndarray) -> np.ndarray:
    """Evaluate ``expr`` at every row of ``points`` (shape ``(n, len(coords))``)."""
    syms = symbols_for(coords)
    expr = sp.sympify(expr)
    missing = expr.free_symbols - set(syms)
    if missing:
        raise MissingVariable(sorted(s.name for s in missing)[0])
    points = np.atleast_2d(np.asarray(points, dtype=float))
    with np.errstate(all="ignore"):
        values = _compiled(expr, syms)(*points.T)
    values = np.broadcast_to(np.asarray(values), (points.shape[0],))
    if np.iscomplexobj(values):
        bad = np.nonzero(np.abs(values.imag) > 0)[0]
        if bad.size:
            raise DomainError("complex value", dict(zip(coords, points[bad[0]])))
        values = values.real
    values = values.astype(float)
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        raise DomainError("non-finite value", dict(zip(coords, points[bad[0]])))
    return values


def eval_expr(e: Expr, p: Mapping[str, float]) -> float:
    """Evaluate ``e`` at a single point given as coordinate-name → value."""
    e = sp.sympify(e)
    for sym in e.free_symbols:
        if sym.name not in p:
            raise MissingVariable(sym.name)
    coords = sorted(p)
    return float(evaluate(e, coords, np.array([[p[c] for c in coords]]))[0])


@dataclass(frozen=True)
class Box:
    """Open axis-parallel box with named coordinates."""
    coords: Tuple[str, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.coords) == len(self.lower) == len(self.upper)):
            raise DimensionMismatch("box bounds do not match coordinates")

    @classmethod
    def from_bounds(cls, coords: Sequence[str], bounds: Sequence[Sequence[float]]) -> "Box":
        return cls(tuple(coords), tuple(float(b[0]) for b in bounds), tuple(float(b[1]) for b in bounds))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def is_empty(self) -> bool:
        return any(lo >= hi for lo, hi in zip(self.lower, self.upper))

    @property
    def center(self) -> Tuple[float, ...]:
        return tuple((lo + hi) / 2 for lo, hi in zip(self.lower, self.upper))

    def intersect(self, other: "Box") -> "Box":
        if self.coords != other.coords:
            raise DimensionMismatch("boxes live in different coordinate systems")
        return Box(self.coords,
                   tuple(max(a, b) for a, b in zip(self.lower, other.lower)),
                   tuple(min(a, b) for a, b in zip(self.upper, other.upper)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.all((points > np.array(self.lower)) & (points < np.array(self.upper)), axis=1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def grid(self, k: int) -> np.ndarray:
        """Interior grid of ``k`` points per axis."""
        axes = [np.linspace(lo, hi, k + 2)[1:-1] for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def point(self, row: Iterable[float]) -> Point:
        return {c: float(v) for c, v in zip(self.coords, row)}


@dataclass(frozen=True)
class SampleComparison:
    """Outcome of a sampled equality test."""
    passed: bool
    max_residual: float = 0.0
    witness: Optional[Point] = None

    @staticmethod
    def worst(items: Iterable["SampleComparison"]) -> "SampleComparison":
        items = list(items)
        if not items:
            return SampleComparison(True)
        failing = [c for c in items if not c.passed]
        pool = failing or items
        top = max(pool, key=lambda c: c.max_residual)
        return SampleComparison(not failing, max(c.max_residual for c in items), top.witness)


@dataclass(frozen=True)
class Oracle:
    """Seeded sampling oracle; every comparison redraws from ``seed``."""
    samples: int = DEFAULT_SAMPLES
    tol: float = DEFAULT_TOL
    seed: int = DEFAULT_SEED

    def points(self, box: Box) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return box.sample(self.samples, rng)

    def compare_values(self, a: np.ndarray, b: np.ndarray, box: Box,
                       points: np.ndarray) -> SampleComparison:
        residual = np.abs(a - b)
        excess = residual / (1.0 + np.abs(a))
        worst = int(np.argmax(excess))
        ok = bool(np.all(excess <= self.tol))
        idx = worst if not ok else int(np.argmax(residual))
        return SampleComparison(ok, float(residual.max(initial=0.0)), box.point(points[idx]))

    def compare(self, a: Expr, b: Expr, box: Box) -> SampleComparison:
        if box.is_empty:
            return SampleComparison(True)
        pts = self.points(box)
        return self.compare_values(evaluate(a, box.coords, pts), evaluate(b, box.coords, pts), box, pts)

    def compare_all(self, pairs: Iterable[Tuple[Expr, Expr]], box: Box) -> SampleComparison:
        return SampleComparison.worst(self.compare(a, b, box) for a, b in pairs)

    def is_zero(self, e: Expr, box: Box) -> SampleComparison:
        return self.compare(sp.S.Zero, e, box)

    def values(self, e: Expr, box: Box) -> np.ndarray:
        return evaluate(e, box.coords, self.points(box))


def equal_on_samples(a: Expr, b: Expr, domain: Box, n: int = DEFAULT_SAMPLES,
                     tol: float = DEFAULT_TOL, seed: int = DEFAULT_SEED) -> SampleComparison:
    """True iff ``|a - b| <= tol (1 + |a|)`` at ``n`` seeded points of ``domain``."""
    if n < 1 or tol <= 0:
        raise ValueError("need n >= 1 and tol > 0")
    return Oracle(n, tol, seed).compare(a, b, domain)


__all__ = [
    "Expr", "Point", "Box", "Oracle", "SampleComparison", "symbol", "symbols_for",
    "parse_expr", "diff", "normalize", "evaluate", "eval_expr", "equal_on_samples",
]
