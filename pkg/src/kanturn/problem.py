"""Problem documents: the validated bridge between YAML/JSON and core types.

A problem document names a space, a ground metric, and a catalogue of urns
and distributions; command sections reference the catalogue by name.  All
probabilities must be exact rational literals ("1/2"); float literals are
rejected because they would silently break exact equality checks.
"""
from __future__ import annotations

from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError

from .core import Dist, Multiset, Space, as_rational
from .metric import GroundMetric

Label = Union[int, str]
RationalStr = Union[int, str]


class ProblemError(ValueError):
    """A problem document failed validation; the message names the field."""


class SpaceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    labels: list[Label]
    coords: Optional[dict[str, RationalStr]] = None


class MatrixMetricModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    matrix: list[list[RationalStr]]


MetricField = Union[Literal["discrete", "numeric"], MatrixMetricModel]


class ProblemModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    space: SpaceModel
    metric: MetricField = "discrete"
    urns: dict[str, dict[str, int]] = {}
    dists: dict[str, dict[str, RationalStr]] = {}


def _label_index(space_model: SpaceModel) -> dict[str, Label]:
    index: dict[str, Label] = {}
    for label in space_model.labels:
        key = str(label)
        if key in index:
            raise ProblemError(f"space.labels: {label!r} and {index[key]!r} collide as strings")
        index[key] = label
    return index


def build_space(model: ProblemModel) -> Space:
    index = _label_index(model.space)
    coords = None
    if model.space.coords is not None:
        coords = {}
        for key, value in model.space.coords.items():
            if key not in index:
                raise ProblemError(f"space.coords: unknown label {key!r}")
            try:
                coords[index[key]] = as_rational(value)
            except (TypeError, ValueError) as err:
                raise ProblemError(f"space.coords.{key}: {err}") from err
    try:
        return Space(model.space.labels, coords)
    except ValueError as err:
        raise ProblemError(f"space: {err}") from err


def build_metric(model: ProblemModel, space: Space) -> GroundMetric:
    if model.metric == "discrete":
        return GroundMetric.discrete()
    if model.metric == "numeric":
        try:
            for x in space:
                space.coord(x)
        except ValueError as err:
            raise ProblemError(f"metric: {err}") from err
        return GroundMetric.numeric(space)
    try:
        return GroundMetric.from_matrix(space.elems, model.metric.matrix)
    except (TypeError, ValueError) as err:
        raise ProblemError(f"metric.matrix: {err}") from err


def build_multiset(model: ProblemModel, name: str, space: Space) -> Multiset:
    if name not in model.urns:
        raise ProblemError(f"urns: no urn named {name!r}")
    index = _label_index(model.space)
    counts = {}
    for key, count in model.urns[name].items():
        if key not in index:
            raise ProblemError(f"urns.{name}: unknown label {key!r}")
        counts[index[key]] = count
    try:
        return Multiset(counts)
    except (TypeError, ValueError) as err:
        raise ProblemError(f"urns.{name}: {err}") from err


def build_dist(model: ProblemModel, name: str, space: Space) -> Dist:
    if name not in model.dists:
        raise ProblemError(f"dists: no distribution named {name!r}")
    index = _label_index(model.space)
    weights = {}
    for key, value in model.dists[name].items():
        if key not in index:
            raise ProblemError(f"dists.{name}: unknown label {key!r}")
        try:
            weights[index[key]] = as_rational(value)
        except (TypeError, ValueError) as err:
            raise ProblemError(f"dists.{name}.{key}: {err}") from err
    try:
        return Dist(weights)
    except ValueError as err:
        raise ProblemError(f"dists.{name}: {err}") from err


def resolve_object(model: ProblemModel, name: str, space: Space):
    """Look a name up in the catalogue; urns and dists must not collide."""
    in_urns = name in model.urns
    in_dists = name in model.dists
    if in_urns and in_dists:
        raise ProblemError(f"{name!r} names both an urn and a distribution")
    if in_urns:
        return build_multiset(model, name, space)
    if in_dists:
        return build_dist(model, name, space)
    raise ProblemError(f"no urn or distribution named {name!r}")


# ---------------------------------------------------------------------------
# document files

def load_problem_document(path: str) -> dict:
    """Parse a YAML problem document into a plain dict, with line-addressed
    parse errors."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = yaml.safe_load(handle)
        except yaml.YAMLError as err:
            raise ProblemError(f"{path}: {err}") from err
    if not isinstance(doc, dict):
        raise ProblemError(f"{path}: document must be a mapping of sections")
    return doc


def validate_problem(doc: dict) -> ProblemModel:
    """Validate the problem half of a document (space/metric/urns/dists)."""
    body = {key: doc[key] for key in ("space", "metric", "urns", "dists") if key in doc}
    if "space" not in body:
        raise ProblemError("missing required section 'space'")
    try:
        return ProblemModel.model_validate(_stringify_keys(body))
    except ValidationError as err:
        first = err.errors()[0]
        loc = ".".join(str(part) for part in first["loc"])
        raise ProblemError(f"{loc}: {first['msg']}") from err


def _stringify_keys(value):
    """YAML allows int mapping keys; the wire format (JSON) does not."""
    if isinstance(value, dict):
        return {str(k): _stringify_keys(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_stringify_keys(v) for v in value]
    return value


def problem_payload(doc: dict) -> dict:
    """The JSON-ready problem block of a document."""
    model = validate_problem(doc)
    return model.model_dump(mode="json", exclude_none=True)


def problem_to_yaml(model: ProblemModel) -> str:
    """Serialise a problem back to YAML; round-trips to an equivalent spec."""
    return yaml.safe_dump(model.model_dump(mode="json", exclude_none=True),
                          sort_keys=True, default_flow_style=False)
