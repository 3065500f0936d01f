"""Named verification suites over a loaded bundle.

Every suite draws its random instances from a generator seeded by the
oracle seed and the suite's position in :data:`SUITES`, so ``all`` yields
exactly the union of the individual suites. Any :class:`GeometryError`
raised inside a check becomes a FAIL entry carrying the message.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Union

import numpy as np
import sympy as sp

from src.bundle import Bundle
from src.cartan import Form, check_appendix_identity, check_calculus, compare_forms, exterior_d, flow_pullback_check
from src.cartan import homotopy_operator
from src.cech import CechForm, DeligneCocycle, check_glue_roundtrip, three_curvature, validate_cover
from src.cech import validate_deligne, validate_trivialization
from src.constants import APPENDIX_INSTANCES, CALCULUS_INSTANCES, CARRIER_SAMPLES, FINDIM_INSTANCES, MORPHISM_TRIPLES
from src.errors import GeometryError, UnknownSuite
from src.events import CheckEvent, EventCallback, EventType, maybe_emit
from src.fixtures import (
    kostant_plane,
    random_appendix_instance,
    random_field,
    random_form,
    random_functions,
    random_hamiltonian_pairs,
    random_sections,
    random_strict_chain,
    trivial_symmetry,
)
from src.gerbevf import (
    AlgebroidSection,
    ConnMultVF,
    GerbeSymmetries,
    check_F_B_homotopy,
    check_morphism_defect,
    check_same_base,
    check_section_pairing,
    check_vertical_roundtrip,
    diff_X,
    horizontal_lift,
    multvf_bracket,
    validate_multvf,
)
from src.lie2core import (
    butterfly_of_morphism,
    check_butterfly,
    check_lie2_axioms,
    check_morphism,
    compose_butterflies,
    find_2iso,
    flip,
    identity_butterfly,
)
from src.plectic import PlecticManifold, PoissonLie2, plectic_bracket, validate_ham_pair
from src.quantomorph import (
    EElement,
    TrivialGerbeSymmetries,
    build_E,
    build_Q,
    check_kostant,
    check_kostant_bracket,
    check_square,
    example_quasi_iso,
    kostant_lift,
    lambda_kernel_witness,
    validate_group_model,
    validate_qham,
)
from src.report import CheckResult, Report, Status, failure, from_comparison, skipped
from src.symexpr import Oracle, SampleComparison, parse_expr

logger = logging.getLogger(__name__)

Outcome = Union[CheckResult, SampleComparison, Report, Mapping[str, SampleComparison], List[CheckResult]]


def _as_results(check_id: str, outcome: Outcome) -> List[CheckResult]:
    if isinstance(outcome, CheckResult):
        outcome.check_id = check_id
        return [outcome]
    if isinstance(outcome, SampleComparison):
        return [from_comparison(check_id, outcome)]
    if isinstance(outcome, Report):
        return outcome.prefixed(check_id).results
    if isinstance(outcome, Mapping):
        return [from_comparison(f"{check_id}.{key}", cmp) for key, cmp in outcome.items()]
    return Report(check_id, list(outcome)).prefixed(check_id).results


@dataclass(frozen=True)
class SuiteSizes:
    """How many random instances each suite draws."""
    calculus: int = CALCULUS_INSTANCES
    appendix: int = APPENDIX_INSTANCES
    carrier: int = CARRIER_SAMPLES
    findim: int = FINDIM_INSTANCES
    morphism_triples: int = MORPHISM_TRIPLES


class _Session:
    """Runs checks of one suite, timing them and turning errors into entries."""

    def __init__(self, suite: str, on_event: Optional[EventCallback]) -> None:
        self.report = Report(suite)
        self.on_event = on_event

    def run(self, check_id: str, check: Callable[[], Outcome]) -> None:
        full_id = f"{self.report.suite}.{check_id}"
        maybe_emit(self.on_event, CheckEvent(EventType.CHECK_STARTED, {"suite": self.report.suite,
                                                                       "check_id": full_id}, time.time()))
        logger.debug("check %s started", full_id)
        start = time.perf_counter()
        try:
            results = _as_results(full_id, check())
        except GeometryError as exc:
            logger.debug("check %s raised %s", full_id, type(exc).__name__)
            results = [failure(full_id, str(exc), float(getattr(exc, "residual", 0.0)))]
        elapsed = time.perf_counter() - start
        for r in results:
            r.wall_time = elapsed / max(len(results), 1)
        self.report.extend(results)
        status = Status.FAIL if any(r.status is Status.FAIL for r in results) else (
            Status.SKIP if results and all(r.status is Status.SKIP for r in results) else Status.PASS)
        maybe_emit(self.on_event, CheckEvent(EventType.CHECK_FINISHED, {
            "suite": self.report.suite, "check_id": full_id, "status": status.value}, time.time()))

    def skip(self, check_id: str, detail: str) -> None:
        self.run(check_id, lambda: skipped(check_id, detail))


class _Samples:
    """Seeded sample elements for one suite, built lazily from the bundle."""

    def __init__(self, bundle: Bundle, oracle: Oracle, rng: np.random.Generator, sizes: SuiteSizes) -> None:
        self.bundle = bundle
        self.oracle = oracle
        self.rng = rng
        self.sizes = sizes

    @property
    def c(self) -> DeligneCocycle:
        return self.bundle.cocycle

    @cached_property
    def functions(self) -> List[sp.Expr]:
        return random_functions(self.bundle.coords, self.rng, 2)

    @cached_property
    def sections(self) -> List[AlgebroidSection]:
        return random_sections(self.c, self.rng, 2)

    @cached_property
    def fields(self):
        return [random_field(self.bundle.coords, self.rng, 1) for _ in range(3)]

    @cached_property
    def pairs(self):
        return random_hamiltonian_pairs(self.bundle.plectic, self.rng, self.oracle, 3)

    @cached_property
    def trivial_plectic(self) -> PlecticManifold:
        return PlecticManifold(self.bundle.manifold, exterior_d(self.bundle.trivialization.omega))

    @cached_property
    def trivial_pairs(self):
        return random_hamiltonian_pairs(self.trivial_plectic, self.rng, self.oracle, 3)

    @cached_property
    def butterfly_E(self):
        return build_E(self.c, self.bundle.plectic, self.oracle)

    @cached_property
    def butterfly_Q(self):
        return build_Q(self.c, self.bundle.trivialization, self.oracle)

    def carrier(self, b, sources) -> List[EElement]:
        """``sigma_section(s) + lam(u) + kappa(h)`` over the sampled sources, sections and functions."""
        elements = []
        for k in range(self.sizes.carrier):
            s = sources[k % len(sources)]
            element = b.sigma_section(s) + b.lam(self.sections[k % len(self.sections)])
            if k % 2:
                element = element + b.kappa(self.functions[k % len(self.functions)])
            elements.append(element)
        return elements

    @cached_property
    def symmetries(self) -> List[ConnMultVF]:
        """Declared symmetries, E-sections of Hamiltonian pairs when chi matches, and vertical ones."""
        found = list(self.bundle.symmetries)
        if self.bundle.plectic is not None:
            try:
                b = self.butterfly_E
                found += [b.sigma_section(h).v for h in self.pairs]
            except GeometryError as exc:
                logger.debug("no E-sections for symmetry samples: %s", exc)
        extra = random_sections(self.c, self.rng, max(4 - len(found), 2))
        return found + [diff_X(s, self.c) for s in extra]


def _need(condition: bool) -> None:
    if not condition:
        raise GeometryError("too few admissible samples")


# -- suites ------------------------------------------------------------------


def _cartan(session: _Session, s: _Samples) -> None:
    coords, box = s.bundle.coords, s.bundle.manifold
    for k in range(s.sizes.calculus):
        a = random_form(coords, k % (len(coords) + 1), s.rng)
        b = random_form(coords, 1, s.rng)
        X, Y = (random_field(coords, s.rng) for _ in range(2))
        session.run(f"calculus[{k}]", lambda a=a, b=b, X=X, Y=Y: check_calculus(a, b, X, Y, box, s.oracle))
    for k in range(min(2, len(coords) + 1)):
        a = random_form(coords, k + 1, s.rng)
        session.run(f"homotopy[{k}]", lambda a=a: compare_forms(
            exterior_d(homotopy_operator(a, box.center)) + homotopy_operator(exterior_d(a), box.center), a,
            box, s.oracle))
    X, a = random_field(coords, s.rng, 1), random_form(coords, 1, s.rng, 1)
    session.run("flow", lambda: flow_pullback_check(X, a, box, s.oracle))
    if len(coords) != 3:
        session.skip("appendix", "triple contraction identity needs three coordinates")
        return
    for k in range(s.sizes.appendix):
        instance = random_appendix_instance(s.rng, box)
        session.run(f"appendix[{k}]", lambda inst=instance: check_appendix_identity(*inst, box, s.oracle))


def _deligne(session: _Session, s: _Samples) -> None:
    c, bundle = s.c, s.bundle
    session.run("cover", lambda: validate_cover(c.cover))
    session.run("cocycle", lambda: validate_deligne(c, s.oracle))
    session.run("glue_curvature", lambda: check_glue_roundtrip(c.B.map(exterior_d, 3), s.oracle))
    session.run("curvature_closed", lambda: compare_forms(
        exterior_d(three_curvature(c, s.oracle)), Form.zero(bundle.coords, 4), bundle.manifold, s.oracle))
    if bundle.plectic is None:
        session.skip("curvature_matches_plectic", "no plectic form")
    else:
        session.run("curvature_matches_plectic", lambda: compare_forms(
            three_curvature(c, s.oracle), bundle.plectic.chi, bundle.manifold, s.oracle))
    if bundle.trivialization is None:
        session.skip("trivialization", "no trivialization")
    else:
        session.run("trivialization", lambda: validate_trivialization(c, bundle.trivialization, s.oracle))


def _multvf(session: _Session, s: _Samples) -> None:
    c = s.c
    X, Y = s.fields[:2]
    lifts = [horizontal_lift(c, V) for V in s.fields]
    for k, v in enumerate(lifts):
        session.run(f"lift[{k}]", lambda v=v: validate_multvf(c, v, s.oracle))
    session.run("bracket_closed", lambda: validate_multvf(c, multvf_bracket(lifts[0], lifts[1]), s.oracle))
    session.run("F_B_homotopy", lambda: check_F_B_homotopy(c, X, Y, s.oracle))
    for k in range(s.sizes.morphism_triples):
        P, Q, R = (random_field(c.coords, s.rng, 1) for _ in range(3))
        session.run(f"morphism_defect[{k}]", lambda P=P, Q=Q, R=R: check_morphism_defect(c, P, Q, R, s.oracle))
    for k, u in enumerate(s.sections):
        session.run(f"section_pairing[{k}]", lambda u=u: check_section_pairing(c, u, s.oracle))
        session.run(f"vertical_roundtrip[{k}]", lambda u=u: check_vertical_roundtrip(c, diff_X(u, c), s.oracle))
    G = GerbeSymmetries(c, s.oracle)
    for k, v in enumerate(s.bundle.symmetries):
        session.run(f"declared[{k}]", lambda v=v: G.validate(v))
    v = diff_X(s.sections[0], c)
    h = Form.function(s.bundle.coords, s.functions[0])
    w = ConnMultVF(v.base, v.a + CechForm.restrict(c.cover, exterior_d(h)))
    session.run("same_base", lambda: check_same_base(c, v, w, s.oracle))


def _lie2(session: _Session, s: _Samples) -> None:
    c = s.c
    G = GerbeSymmetries(c, s.oracle)
    session.run("gerbe_symmetries", lambda: check_lie2_axioms(G, s.symmetries, s.sections))
    session.run("gerbe_symmetries.closed", lambda: Report("closed").extend(
        r for k, (x, y) in enumerate(zip(s.symmetries, s.symmetries[1:]))
        for r in G.validate(G.bracket(x, y)).prefixed(f"pair{k}").results))
    L = s.bundle.findim
    if L is None:
        session.skip("findim", "no finite-dimensional 2-algebra")
    else:
        session.run("findim.tensors", L.validate_tensors)
        x0 = [s.rng.normal(size=L.n0) for _ in range(4)]
        x1 = [s.rng.normal(size=L.n1) for _ in range(2)]
        session.run("findim.axioms", lambda: check_lie2_axioms(L, x0, x1))
        b = identity_butterfly(L)
        session.run("findim.identity_butterfly", lambda: check_butterfly(b, b.basis(), L.basis1(), L.basis1()))
    for k in range(s.sizes.findim):
        f, g = random_strict_chain(s.rng, degree_one=bool(k % 2), scale=1.0 if k % 4 == 1 else 0.0)
        session.run(f"findim.composition[{k}]", lambda f=f, g=g: _two_iso(
            compose_butterflies(butterfly_of_morphism(f), butterfly_of_morphism(g)),
            butterfly_of_morphism(f.then(g))))
        session.run(f"findim.inverse[{k}]", lambda f=f: _two_iso(
            compose_butterflies(butterfly_of_morphism(f), flip(butterfly_of_morphism(f))),
            identity_butterfly(f.source)))
    if s.bundle.trivialization is None:
        session.skip("quasi_iso", "no error 2-form")
        return

    def quasi_iso():
        T = TrivialGerbeSymmetries(s.bundle.manifold, s.bundle.trivialization.omega, s.oracle)
        elements = [trivial_symmetry(T.omega, h) for h in s.trivial_pairs]
        _need(len(elements) >= 3)
        return check_morphism(example_quasi_iso(T), elements, s.functions)

    session.run("quasi_iso", quasi_iso)


def _two_iso(b1, b2) -> CheckResult:
    found = find_2iso(b1, b2)
    if found is None:
        return failure("two_iso", "no 2-isomorphism between the butterflies")
    return CheckResult("two_iso", Status.PASS, max(found.residual, found.bracket_residual))


def _plectic(session: _Session, s: _Samples) -> None:
    P = s.bundle.plectic
    if P is None:
        session.skip("plectic", "no plectic form")
        return
    session.run("closed", lambda: P.validate(s.oracle))
    for k, h in enumerate(s.pairs):
        session.run(f"ham_pair[{k}]", lambda h=h: validate_ham_pair(P, h, s.oracle))
    session.run("bracket_closed", lambda: SampleComparison.worst(
        validate_ham_pair(P, plectic_bracket(P, x, y), s.oracle) for x, y in zip(s.pairs, s.pairs[1:])))

    def axioms():
        extra = random_hamiltonian_pairs(P, s.rng, s.oracle, 1)
        _need(len(s.pairs) + len(extra) >= 4)
        return check_lie2_axioms(PoissonLie2(P, s.oracle), s.pairs + extra, s.functions)

    session.run("axioms", axioms)


def _butterfly_E(session: _Session, s: _Samples) -> None:
    if s.bundle.plectic is None:
        session.skip("butterfly", "no plectic form")
        return

    def butterfly():
        _need(len(s.pairs) > 0)
        b = s.butterfly_E
        return check_butterfly(b, s.carrier(b, s.pairs), s.functions, s.sections)

    session.run("butterfly", butterfly)
    session.run("sigma_section", lambda: SampleComparison.worst(
        s.butterfly_E.source.compare0(s.butterfly_E.sigma(s.butterfly_E.sigma_section(h)), h) for h in s.pairs))
    session.run("carrier_valid", lambda: SampleComparison.worst(
        s.butterfly_E.validate(e) for e in s.carrier(s.butterfly_E, s.pairs)))
    session.run("lambda_witness", lambda: _lambda_witness(s, s.butterfly_E))


def _lambda_witness(s: _Samples, b) -> SampleComparison:
    """``lam(u) + kappa(h)`` with constant ``h`` has witness ``u - h``."""
    cover = s.c.cover
    out = []
    for u in s.sections:
        h = sp.Integer(int(s.rng.integers(-3, 4)))
        e = b.lam(u) + b.kappa(h)
        w = lambda_kernel_witness(b, e)
        expected = AlgebroidSection(u.u - CechForm.functions(cover, 1, {k: h for k in cover.overlaps(1)}))
        out.append(b.target.compare1(w.combined(), expected))
        out.append(b.compare(b.lam(w.section) + b.kappa(w.constant), e))
    return SampleComparison.worst(out)


def _butterfly_Q(session: _Session, s: _Samples) -> None:
    if s.bundle.trivialization is None:
        session.skip("butterfly", "no trivialization")
        return

    def sources():
        found = [trivial_symmetry(s.bundle.trivialization.omega, h) for h in s.trivial_pairs]
        _need(len(found) > 0)
        return found

    session.run("butterfly", lambda: check_butterfly(s.butterfly_Q, s.carrier(s.butterfly_Q, sources()),
                                                     s.functions, s.sections))
    session.run("sigma_section", lambda: SampleComparison.worst(
        s.butterfly_Q.source.compare0(s.butterfly_Q.sigma(s.butterfly_Q.sigma_section(x)), x) for x in sources()))
    session.run("lambda_witness", lambda: _lambda_witness(s, s.butterfly_Q))


def _square(session: _Session, s: _Samples) -> None:
    bundle = s.bundle
    if bundle.trivialization is None or bundle.plectic is None:
        session.skip("square", "needs a trivialization and a plectic form")
        return

    def square():
        omega = bundle.trivialization.omega
        bE_triv = build_E(DeligneCocycle.trivial(bundle.manifold, omega), s.trivial_plectic, s.oracle)
        sources = [trivial_symmetry(omega, h) for h in s.trivial_pairs]
        _need(len(sources) > 0)
        elements = s.carrier(s.butterfly_Q, sources)
        return check_square(bE_triv, s.butterfly_E, s.butterfly_Q, elements, s.functions, s.sections,
                            bundle.moment, bundle.group)

    session.run("square", square)


def _qham(session: _Session, s: _Samples) -> None:
    omega, A, box = kostant_plane()
    for f in ("x", "y", "x*y", "1"):
        session.run(f"kostant[{f}]", lambda f=f: check_kostant(kostant_lift(omega, A, parse_expr(f, box.coords), box,
                                                                            s.oracle), s.oracle))
    session.run("kostant.bracket", lambda: check_kostant_bracket(omega, A, parse_expr("x*y", box.coords),
                                                                 parse_expr("x^2", box.coords), box, s.oracle))
    G, D = s.bundle.group, s.bundle.qham
    if G is None:
        session.skip("group_model", "no group model")
        session.skip("space", "no group model")
        return
    session.run("group_model", lambda: validate_group_model(G, s.oracle))
    if D is None:
        session.skip("space", "no quasi-Hamiltonian data")
    else:
        session.run("space", lambda: validate_qham(G, D, s.oracle))


SuiteFn = Callable[[_Session, _Samples], None]

SUITES: Dict[str, SuiteFn] = {
    "cartan": _cartan,
    "deligne": _deligne,
    "multvf": _multvf,
    "lie2": _lie2,
    "plectic": _plectic,
    "butterflyE": _butterfly_E,
    "butterflyQ": _butterfly_Q,
    "square": _square,
    "qham": _qham,
}


def suite_names() -> List[str]:
    return list(SUITES) + ["all"]


def run_suite(bundle: Bundle, suite: str, oracle: Optional[Oracle] = None,
              on_event: Optional[EventCallback] = None, sizes: Optional[SuiteSizes] = None) -> Report:
    """Run one named suite, or ``all``, and return the report sorted by check id.

    Raises
    ------
    UnknownSuite
        When ``suite`` is not a registered name.
    """
    if suite != "all" and suite not in SUITES:
        raise UnknownSuite(suite)
    oracle = oracle or Oracle()
    sizes = sizes or SuiteSizes()
    names: Iterable[str] = SUITES if suite == "all" else [suite]
    report = Report(suite)
    maybe_emit(on_event, CheckEvent(EventType.SUITE_STARTED, {"suite": suite, "bundle": bundle.name}, time.time()))
    for name in names:
        session = _Session(name, on_event)
        rng = np.random.default_rng([oracle.seed, list(SUITES).index(name)])
        SUITES[name](session, _Samples(bundle, oracle, rng, sizes))
        report.extend(session.report.results)
        logger.info("suite %s on %s: %s", name, bundle.name, session.report.counts())
    maybe_emit(on_event, CheckEvent(EventType.SUITE_FINISHED, {"suite": suite, "counts": report.counts()},
                                    time.time()))
    return report.sorted()


__all__ = ["SUITES", "SuiteSizes", "run_suite", "suite_names"]
