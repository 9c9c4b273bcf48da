"""Scenario files: what to build and which identities to check.

A scenario is a UTF-8 JSON document, read through ``fsspec`` so it can live
on any supported filesystem::

    {
      "schema_version": "1",
      "name": "annulus1_sl2",
      "algebra": "sl2",
      "graph": "annulus_marked(1)",
      "r_matrices": {"*": "sl2_standard"},
      "checks": ["cyb", "jacobi"],
      "seed": 0, "tol": 1e-8, "samples": 8
    }

``graph`` and ``algebra`` accept a built-in name or an inline record.
``r_matrices`` maps vertex ids (``"*"`` for the rest) to a built-in name, an
inline ``{"s": ..., "lambda": ...}`` record or ``{"conjugate": <r-matrix>}``.
"""

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field
from importlib import resources

import fsspec

from .ciliated_graph import Skeleton, builtin_skeleton, from_json
from .lie_core import InvariantError, LieAlgebra, algebra_from_record
from .r_matrix import RMatrix, conjugate, r_matrix_from_record

_logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

CHECKS = (
    "cyb",
    "section2",
    "rgamma_cyb",
    "sgamma_symmetric_part",
    "jacobi",
    "gauge_poisson",
    "quasi",
    "qs_lambda_independence",
    "orientation_independence",
    "local_move_independence",
    "fusion_theorem",
    "polyuble_multiplicativity",
    "gauge_equivariance",
)

# checks that never look at the r-matrices
_GRAPH_ONLY_CHECKS = frozenset({"gauge_equivariance"})

CORRUPTIONS = frozenset({"zero_cobracket", "skip_lambda_shift"})


class ScenarioError(ValueError):
    """A scenario document is malformed; ``pointer`` locates the offending field."""

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer or "/"
        super().__init__(f"{self.pointer}: {message}")


class UnknownCheckError(ValueError):
    """A check name is not in the registry."""


def validate_checks(names) -> list[str]:
    names = list(names)
    for name in names:
        if name not in CHECKS:
            raise UnknownCheckError(
                f"Unknown check {name!r}; known checks: {', '.join(CHECKS)}"
            )
    return names


@dataclass
class Scenario:
    """A validated scenario."""

    name: str
    algebra: LieAlgebra
    skeleton: Skeleton
    assignment: dict[str, RMatrix]
    checks: list[str] = field(default_factory=list)
    seed: int | None = None
    tol: float | None = None
    samples: int | None = None
    scale: float | None = None
    n_max: int = 3
    corruptions: frozenset[str] = frozenset()
    source: str = "<memory>"

    @property
    def graph(self):
        return self.skeleton.graph

    @property
    def orientation(self):
        return self.skeleton.orientation


def _pointer(*parts) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def _resolve_r(value, algebra: LieAlgebra, pointer: str) -> RMatrix:
    try:
        if isinstance(value, Mapping) and "conjugate" in value:
            return conjugate(_resolve_r(value["conjugate"], algebra, pointer + "/conjugate"))
        return r_matrix_from_record(value, algebra)
    except ScenarioError:
        raise
    except (ValueError, TypeError) as e:
        raise ScenarioError(str(e), pointer) from e


def scenario_from_dict(doc: Mapping, source: str = "<memory>") -> Scenario:
    """Validate a decoded scenario document.

    Raises
    ------
    ScenarioError
        With a JSON pointer to the offending field; invariant violations of
        embedded objects keep the invariant's name in the message.
    """
    if not isinstance(doc, Mapping):
        raise ScenarioError("A scenario must be a JSON object")
    version = str(doc.get("schema_version", SCHEMA_VERSION))
    if version != SCHEMA_VERSION:
        raise ScenarioError(
            f"Unsupported schema_version {version!r} (expected {SCHEMA_VERSION!r})",
            _pointer("schema_version"),
        )
    for required in ("algebra", "graph"):
        if required not in doc:
            raise ScenarioError(f"missing required field {required!r}", _pointer(required))

    try:
        algebra = algebra_from_record(doc["algebra"])
    except (ValueError, TypeError) as e:
        raise ScenarioError(str(e), _pointer("algebra")) from e

    graph_doc = doc["graph"]
    try:
        if isinstance(graph_doc, str):
            skeleton = builtin_skeleton(graph_doc)
        elif isinstance(graph_doc, Mapping):
            skeleton = from_json(graph_doc)
        else:
            raise ScenarioError("graph must be a name or an object", _pointer("graph"))
    except InvariantError as e:
        raise ScenarioError(f"invariant violated: {e}", _pointer("graph")) from e
    except ScenarioError:
        raise
    except (ValueError, TypeError) as e:
        raise ScenarioError(str(e), _pointer("graph")) from e

    checks_doc = doc.get("checks", [])
    if not isinstance(checks_doc, list):
        raise ScenarioError("checks must be a list", _pointer("checks"))
    for i, name in enumerate(checks_doc):
        if name not in CHECKS:
            raise ScenarioError(f"unknown check {name!r}", _pointer("checks", i))

    r_doc = doc.get("r_matrices", {})
    if not isinstance(r_doc, Mapping):
        raise ScenarioError("r_matrices must be an object", _pointer("r_matrices"))
    vertices = skeleton.graph.vertices
    for key in r_doc:
        if key != "*" and key not in vertices:
            raise ScenarioError(f"no vertex {key!r} in the graph", _pointer("r_matrices", key))
    assignment = {}
    for v in vertices:
        key = v if v in r_doc else "*" if "*" in r_doc else None
        if key is not None:
            assignment[v] = _resolve_r(r_doc[key], algebra, _pointer("r_matrices", key))
    needs_r = any(c not in _GRAPH_ONLY_CHECKS for c in checks_doc)
    missing = [v for v in vertices if v not in assignment]
    if needs_r and missing:
        raise ScenarioError(
            f"vertices {missing} have no r-matrix but the checks need one",
            _pointer("r_matrices"),
        )

    corruptions = doc.get("corruptions", [])
    if not isinstance(corruptions, list):
        raise ScenarioError("corruptions must be a list", _pointer("corruptions"))
    for i, name in enumerate(corruptions):
        if not isinstance(name, str) or name not in CORRUPTIONS:
            raise ScenarioError(
                f"unknown corruption {name!r}; known: {sorted(CORRUPTIONS)}",
                _pointer("corruptions", i),
            )

    numbers = {}
    for name, kind in (("seed", int), ("samples", int), ("tol", float), ("scale", float), ("n_max", int)):
        if name in doc and doc[name] is not None:
            value = doc[name]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioError(f"{name} must be a number", _pointer(name))
            if kind is int and value != int(value):
                raise ScenarioError(f"{name} must be an integer", _pointer(name))
            numbers[name] = kind(value)
    if numbers.get("n_max", 3) < 1:
        raise ScenarioError("n_max must be >= 1", _pointer("n_max"))

    scenario = Scenario(
        name=str(doc.get("name", source)),
        algebra=algebra,
        skeleton=skeleton,
        assignment=assignment,
        checks=list(checks_doc),
        seed=numbers.get("seed"),
        tol=numbers.get("tol"),
        samples=numbers.get("samples"),
        scale=numbers.get("scale"),
        n_max=numbers.get("n_max", 3),
        corruptions=frozenset(corruptions),
        source=source,
    )
    _logger.debug(
        "Loaded scenario %s: %d vertices, %d edges, checks=%s",
        scenario.name, len(vertices), len(skeleton.graph.edges), scenario.checks,
    )
    return scenario


def builtin_scenarios() -> list[str]:
    """Names of the scenarios shipped with the package."""
    folder = resources.files("frpoisson") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in folder.iterdir() if p.name.endswith(".json"))


def _read_builtin(name: str) -> str | None:
    stem = name[: -len(".json")] if name.endswith(".json") else name
    resource = resources.files("frpoisson") / "scenarios" / f"{stem}.json"
    if resource.is_file():
        return resource.read_text(encoding="utf-8")
    return None


def load_scenario(path: str) -> Scenario:
    """Load a scenario from an fsspec URL/path or a built-in scenario name.

    Args:
        path: ``file.json``, ``memory://x.json``, ``s3://...`` or a built-in
            name such as ``annulus1_sl2``.

    Returns:
        Scenario: the validated scenario.
    """
    fs, fs_path = fsspec.core.url_to_fs(path)
    if fs.exists(fs_path):
        with fsspec.open(path, "r", encoding="utf-8") as f:
            text = f.read()
    else:
        text = _read_builtin(path)
        if text is None:
            raise FileNotFoundError(f"No scenario file or built-in scenario {path!r}")
        _logger.debug("Using built-in scenario %s", path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON: {e}") from e
    return scenario_from_dict(doc, source=path)
