"""Loading geometry bundles from JSON.

A bundle names a box manifold, a cover by sub-boxes and a Deligne cocycle,
plus optional trivialization, plectic form, finite-dimensional 2-algebra,
group model, quasi-Hamiltonian data, moment map and sample symmetries.
Forms are written as ``{"degree": k, "terms": [{"indices": [...], "coefficient": "..."}]}``
with coordinate names as indices and coefficients as infix strings.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import jsonschema
import numpy as np

from src.cartan import Form, VectorField
from src.cech import CechForm, Cover, DeligneCocycle, Trivialization
from src.errors import GeometryError, ParseError, SchemaError
from src.gerbevf import ConnMultVF, MultVF
from src.lie2core import FinDimLie2
from src.plectic import HamPair, PlecticManifold
from src.quantomorph import GroupModel, MomentMap, QHamData
from src.symexpr import Box, Expr, parse_expr

logger = logging.getLogger(__name__)

_BOX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}}
_FORM = {
    "type": "object",
    "required": ["degree", "terms"],
    "properties": {
        "degree": {"type": "integer", "minimum": 0},
        "terms": {"type": "array", "items": {
            "type": "object",
            "required": ["indices", "coefficient"],
            "properties": {"indices": {"type": "array", "items": {"type": "string"}},
                           "coefficient": {"type": ["string", "number"]}},
        }},
    },
}
_EXPR = {"type": ["string", "number"]}
_OVERLAP = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}


def _indexed(key: str, value: Dict[str, Any]) -> Dict[str, Any]:
    index = _OVERLAP if key == "overlap" else {"type": ["integer", "array"]}
    return {"type": "array", "items": {"type": "object", "required": [key, *value], "properties": {
        key: index, **value}}}


_FIELD = {"type": "array", "items": _EXPR}

BUNDLE_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["manifold", "cover", "deligne"],
    "properties": {
        "name": {"type": "string"},
        "manifold": {"type": "object", "required": ["coords", "box"], "properties": {
            "coords": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "box": _BOX}},
        "cover": {"type": "array", "items": _BOX, "minItems": 1},
        "deligne": {"type": "object", "required": ["phi", "A", "B"], "properties": {
            "phi": _indexed("overlap", {"expr": _EXPR}),
            "A": _indexed("overlap", {"form": _FORM}),
            "B": _indexed("chart", {"form": _FORM}),
        }},
        "trivialization": {"type": "object", "required": ["psi", "eta", "omega"], "properties": {
            "psi": _indexed("overlap", {"expr": _EXPR}),
            "eta": _indexed("chart", {"form": _FORM}),
            "omega": _FORM,
        }},
        "plectic_form": _FORM,
        "findim_lie2": {"type": "object", "required": ["d", "b00", "b01", "jac"], "properties": {
            "name": {"type": "string"}, "d": {"type": "array"}, "b00": {"type": "array"},
            "b01": {"type": "array"}, "jac": {"type": "array"}}},
        "group_model": {"type": "object",
                        "required": ["coords", "box", "theta_L", "theta_R", "eta", "inner", "structure"],
                        "properties": {
                            "coords": {"type": "array", "items": {"type": "string"}},
                            "box": _BOX,
                            "theta_L": {"type": "array", "items": _FORM},
                            "theta_R": {"type": "array", "items": _FORM},
                            "eta": _FORM,
                            "inner": {"type": "array"},
                            "structure": {"type": "array"}}},
        "qham": {"type": "object", "required": ["omega", "phi", "generators"], "properties": {
            "omega": _FORM,
            "phi": {"type": "array", "items": _EXPR},
            "generators": {"type": "array", "items": _FIELD}}},
        "moment_map": {"type": "array", "items": {"type": "object", "required": ["xi", "beta"], "properties": {
            "xi": _FIELD, "beta": _FORM}}},
        "mult_vf": {"type": "array", "items": {"type": "object", "required": ["xi", "f", "a"], "properties": {
            "xi": _FIELD,
            "f": _indexed("overlap", {"expr": _EXPR}),
            "a": _indexed("chart", {"form": _FORM})}}},
    },
}


@dataclass
class Bundle:
    """Every object declared by one geometry bundle."""
    name: str
    manifold: Box
    cover: Cover
    cocycle: DeligneCocycle
    trivialization: Optional[Trivialization] = None
    plectic: Optional[PlecticManifold] = None
    findim: Optional[FinDimLie2] = None
    group: Optional[GroupModel] = None
    qham: Optional[QHamData] = None
    moment: Optional[MomentMap] = None
    symmetries: List[ConnMultVF] = field(default_factory=list)

    @property
    def coords(self) -> Tuple[str, ...]:
        return self.manifold.coords


def _schema_error(error: jsonschema.ValidationError) -> SchemaError:
    path = [str(p) for p in error.absolute_path]
    if error.validator == "required":
        missing = next((k for k in error.validator_value if k not in error.instance), None)
        if missing is not None:
            return SchemaError(".".join(path + [missing]))
    return SchemaError(".".join(path) or "<root>", error.message)


def validate_schema(data: Any) -> None:
    """Raise the most relevant schema violation as ``SchemaError``."""
    validator = jsonschema.Draft7Validator(BUNDLE_SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise _schema_error(error)


class _Reader:
    """Turns validated JSON into library objects, tracking the key being read."""

    def __init__(self, coords: Sequence[str]) -> None:
        self.coords = tuple(coords)

    def expr(self, value: Union[str, float], key: str, coords: Optional[Sequence[str]] = None) -> Expr:
        try:
            return parse_expr(str(value), coords or self.coords)
        except ParseError as exc:
            raise ParseError(exc.text, exc.offset, f"{exc.reason} (in {key})") from exc

    def form(self, value: Mapping[str, Any], key: str, coords: Optional[Sequence[str]] = None) -> Form:
        coords = tuple(coords or self.coords)
        terms: Dict[Tuple[str, ...], Expr] = {}
        for n, term in enumerate(value["terms"]):
            names = tuple(term["indices"])
            if len(names) != value["degree"]:
                raise SchemaError(f"{key}.terms.{n}.indices", f"expected {value['degree']} indices")
            unknown = [c for c in names if c not in coords]
            if unknown:
                raise SchemaError(f"{key}.terms.{n}.indices", f"unknown coordinate '{unknown[0]}'")
            coef = self.expr(term["coefficient"], f"{key}.terms.{n}.coefficient", coords)
            terms[names] = terms.get(names, 0) + coef
        return Form.from_names(coords, value["degree"], terms)

    def vector(self, values: Sequence[Any], key: str, coords: Optional[Sequence[str]] = None) -> VectorField:
        coords = tuple(coords or self.coords)
        if len(values) != len(coords):
            raise SchemaError(key, f"expected {len(coords)} components")
        return VectorField.make(coords, [self.expr(v, f"{key}.{i}", coords) for i, v in enumerate(values)])

    def cochain(self, cover: Cover, entries: Sequence[Mapping[str, Any]], key: str, index: str,
                degree: int, depth: int) -> CechForm:
        parts: Dict[Tuple[int, ...], Form] = {}
        for n, entry in enumerate(entries):
            raw = entry[index]
            idx = tuple(raw) if isinstance(raw, list) else (raw,)
            if list(idx) != sorted(set(idx)) or len(idx) != depth:
                raise SchemaError(f"{key}.{n}.{index}", f"expected {depth} increasing chart indices")
            if "form" in entry:
                form = self.form(entry["form"], f"{key}.{n}.form")
            else:
                form = Form.function(self.coords, self.expr(entry["expr"], f"{key}.{n}.expr"))
            if form.degree != degree:
                raise SchemaError(f"{key}.{n}.form", f"expected degree {degree}")
            parts[idx] = form
        try:
            return CechForm.make(cover, degree, depth, parts)
        except GeometryError as exc:
            raise SchemaError(key, str(exc)) from exc


def _chart_list(entries: Sequence[Mapping[str, Any]]) -> List[Dict[str, Any]]:
    """Chart entries carry a scalar index; normalise to the overlap form."""
    return [dict(entry, chart=[entry["chart"]] if not isinstance(entry["chart"], list) else entry["chart"])
            for entry in entries]


def _array(value: Any, key: str) -> np.ndarray:
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(key, "not a numeric array") from exc


def build_bundle(data: Mapping[str, Any], name: str = "bundle") -> Bundle:
    """Construct and structurally validate every declared object."""
    validate_schema(data)
    coords = tuple(data["manifold"]["coords"])
    reader = _Reader(coords)
    manifold = Box.from_bounds(coords, data["manifold"]["box"])
    try:
        cover = Cover(manifold, tuple(Box.from_bounds(coords, b) for b in data["cover"]))
    except GeometryError as exc:
        raise SchemaError("cover", str(exc)) from exc
    deligne = data["deligne"]
    phi = reader.cochain(cover, deligne["phi"], "deligne.phi", "overlap", 0, 3)
    A = reader.cochain(cover, deligne["A"], "deligne.A", "overlap", 1, 2)
    B = reader.cochain(cover, _chart_list(deligne["B"]), "deligne.B", "chart", 2, 1)
    bundle = Bundle(data.get("name", name), manifold, cover, DeligneCocycle(cover, phi, A, B))

    if "trivialization" in data:
        t = data["trivialization"]
        bundle.trivialization = Trivialization(
            reader.cochain(cover, t["psi"], "trivialization.psi", "overlap", 0, 2),
            reader.cochain(cover, _chart_list(t["eta"]), "trivialization.eta", "chart", 1, 1),
            reader.form(t["omega"], "trivialization.omega"))
    if "plectic_form" in data:
        bundle.plectic = PlecticManifold(manifold, reader.form(data["plectic_form"], "plectic_form"))
    if "findim_lie2" in data:
        f = data["findim_lie2"]
        try:
            bundle.findim = FinDimLie2(*(_array(f[k], f"findim_lie2.{k}") for k in ("d", "b00", "b01", "jac")),
                                       name=f.get("name", "findim"))
        except GeometryError as exc:
            raise SchemaError("findim_lie2", str(exc)) from exc
    if "group_model" in data:
        bundle.group = _group_model(reader, data["group_model"])
    if "qham" in data:
        q = data["qham"]
        group_coords = bundle.group.box.coords if bundle.group is not None else None
        if group_coords is not None and len(q["phi"]) != len(group_coords):
            raise SchemaError("qham.phi", f"expected {len(group_coords)} components")
        bundle.qham = QHamData(
            manifold, reader.form(q["omega"], "qham.omega"),
            tuple(reader.expr(p, f"qham.phi.{i}") for i, p in enumerate(q["phi"])),
            [reader.vector(g, f"qham.generators.{i}") for i, g in enumerate(q["generators"])])
    if "moment_map" in data:
        bundle.moment = MomentMap(tuple(
            HamPair(reader.vector(m["xi"], f"moment_map.{i}.xi"), reader.form(m["beta"], f"moment_map.{i}.beta"))
            for i, m in enumerate(data["moment_map"])))
    for i, v in enumerate(data.get("mult_vf", [])):
        key = f"mult_vf.{i}"
        base = MultVF(reader.vector(v["xi"], f"{key}.xi"), reader.cochain(cover, v["f"], f"{key}.f", "overlap", 0, 2))
        a = reader.cochain(cover, _chart_list(v["a"]), f"{key}.a", "chart", 1, 1)
        bundle.symmetries.append(ConnMultVF(base, a))
    logger.info("loaded bundle %s: %d charts, optional parts %s", bundle.name, len(cover.charts),
                sorted(k for k in data if k not in ("name", "manifold", "cover", "deligne")))
    return bundle


def _group_model(reader: _Reader, g: Mapping[str, Any]) -> GroupModel:
    coords = tuple(g["coords"])
    theta_L = [reader.form(f, f"group_model.theta_L.{i}", coords) for i, f in enumerate(g["theta_L"])]
    theta_R = [reader.form(f, f"group_model.theta_R.{i}", coords) for i, f in enumerate(g["theta_R"])]
    rank = len(theta_L)
    inner = _array(g["inner"], "group_model.inner")
    structure = _array(g["structure"], "group_model.structure")
    if len(theta_R) != rank or inner.shape != (rank, rank) or structure.shape != (rank, rank, rank):
        raise SchemaError("group_model", f"Maurer-Cartan data, inner product and structure constants "
                                         f"disagree on the rank {rank}")
    return GroupModel(Box.from_bounds(coords, g["box"]), theta_L, theta_R,
                      reader.form(g["eta"], "group_model.eta", coords), inner, structure)


def load_bundle(path: Union[str, Path]) -> Bundle:
    """Read, parse and validate a bundle file.

    Raises
    ------
    ParseError
        On malformed JSON or an unparsable expression, with the offset.
    SchemaError
        Naming the dotted key that is missing or malformed.
    """
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path.name, exc.pos, exc.msg) from exc
    return build_bundle(data, path.stem)


__all__ = ["BUNDLE_SCHEMA", "Bundle", "validate_schema", "build_bundle", "load_bundle"]
