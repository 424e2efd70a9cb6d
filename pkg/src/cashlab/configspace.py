"""Hierarchical configuration spaces for combined model/hyperparameter search.

A space is a two-level hierarchy: a list of models, each carrying typed
hyperparameters (continuous, integer, or categorical). Model-sampling
distributions over the space can be uniform, weighted by hyperparameter
count (doubling per hyperparameter), weighted by search-box volume, or
fully custom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

SPACE_FORMAT_VERSION = 1

KINDS = ("continuous", "integer", "categorical")
SCALES = ("linear", "log")

# 2**n weights overflow comfort zone; larger counts are rejected.
MAX_WEIGHTED_HP_COUNT = 64


class SpaceError(ValueError):
    """Malformed space definition or invalid space argument."""


@dataclass(frozen=True)
class HyperparameterSpec:
    """One typed hyperparameter with its range or category list.

    Continuous and integer kinds carry a half-open numeric range
    ``lower < upper`` (inclusive bounds for sampling purposes); the
    categorical kind carries an ordered list of category labels instead.
    ``scale`` selects linear or log-uniform sampling and applies to the
    continuous kind only.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    scale: str = "linear"
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise SpaceError("hyperparameter name must be a non-empty string")
        if self.kind not in KINDS:
            raise SpaceError(f"unknown hyperparameter kind {self.kind!r} for {self.name!r}")
        if self.scale not in SCALES:
            raise SpaceError(f"unknown scale {self.scale!r} for {self.name!r}")
        if self.kind == "categorical":
            if len(self.categories) < 1:
                raise SpaceError(f"categorical {self.name!r} needs at least one category")
            if self.lower is not None or self.upper is not None:
                raise SpaceError(f"categorical {self.name!r} must not carry a range")
            if self.scale != "linear":
                raise SpaceError(f"categorical {self.name!r} must not carry a scale")
            if len(set(self.categories)) != len(self.categories):
                raise SpaceError(f"categorical {self.name!r} has duplicate categories")
            return
        if self.categories:
            raise SpaceError(f"{self.kind} {self.name!r} must not carry categories")
        if self.lower is None or self.upper is None:
            raise SpaceError(f"{self.kind} {self.name!r} needs lower and upper bounds")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise SpaceError(f"{self.name!r} bounds must be finite")
        if self.lower >= self.upper:
            raise SpaceError(
                f"{self.name!r}: lower ({self.lower}) must be < upper ({self.upper})"
            )
        if self.scale == "log" and self.lower <= 0:
            raise SpaceError(f"{self.name!r}: log scale requires lower > 0")
        if self.kind == "integer":
            if self.lower != int(self.lower) or self.upper != int(self.upper):
                raise SpaceError(f"integer {self.name!r} bounds must be whole numbers")
            if self.scale != "linear":
                # Integer draws are uniform over {lower..upper}; a log scale
                # would contradict that contract.
                raise SpaceError(f"integer {self.name!r} does not support log scale")


@dataclass(frozen=True)
class ModelSpec:
    """A named model with an ordered hyperparameter list."""

    name: str
    hyperparameters: tuple[HyperparameterSpec, ...] = ()

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise SpaceError("model name must be a non-empty string")
        names = [hp.name for hp in self.hyperparameters]
        if len(set(names)) != len(names):
            raise SpaceError(f"model {self.name!r} has duplicate hyperparameter names")

    @property
    def n_hyperparameters(self) -> int:
        return len(self.hyperparameters)


@dataclass(frozen=True)
class ConfigurationSpace:
    """Ordered collection of models forming the search hierarchy."""

    models: tuple[ModelSpec, ...]

    def __post_init__(self):
        if len(self.models) < 1:
            raise SpaceError("a configuration space needs at least one model")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise SpaceError("model names must be unique")

    @property
    def n_models(self) -> int:
        return len(self.models)

    def model_index(self, name: str) -> int:
        for i, m in enumerate(self.models):
            if m.name == name:
                return i
        raise SpaceError(f"unknown model {name!r}")

    def hp_counts(self) -> list[int]:
        return [m.n_hyperparameters for m in self.models]

    def validate_configuration(self, config: "Configuration") -> None:
        """Raise SpaceError unless ``config`` is a valid point in this space."""
        if not 0 <= config.model_index < self.n_models:
            raise SpaceError(f"model_index {config.model_index} out of range")
        model = self.models[config.model_index]
        expected = {hp.name for hp in model.hyperparameters}
        got = set(config.values)
        if expected != got:
            raise SpaceError(
                f"configuration values {sorted(got)} do not match "
                f"model {model.name!r} hyperparameters {sorted(expected)}"
            )
        for hp in model.hyperparameters:
            v = config.values[hp.name]
            if hp.kind == "categorical":
                if v not in hp.categories:
                    raise SpaceError(f"{hp.name!r}: {v!r} not among categories")
            elif hp.kind == "integer":
                if v != int(v) or not hp.lower <= v <= hp.upper:
                    raise SpaceError(f"{hp.name!r}: {v!r} outside integer range")
            else:
                if not hp.lower <= v <= hp.upper:
                    raise SpaceError(f"{hp.name!r}: {v!r} outside range")


@dataclass
class Configuration:
    """A concrete point: a model index plus one value per hyperparameter."""

    model_index: int
    values: dict[str, Any] = field(default_factory=dict)


class ModelDistribution:
    """Probability vector over the models of a space.

    Entries are nonnegative and sum to one (within 1e-12). The cumulative
    vector is cached for sampling.
    """

    def __init__(self, probabilities: Sequence[float]):
        p = np.asarray(probabilities, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise SpaceError("probabilities must be a non-empty vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise SpaceError("probabilities must be finite and nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-12:
            raise SpaceError(f"probabilities sum to {total!r}, expected 1")
        self.probabilities = p
        self._cumulative = np.cumsum(p)
        self._cumulative[-1] = 1.0

    def __len__(self) -> int:
        return int(self.probabilities.size)

    def sample_index(self, rng: np.random.Generator) -> int:
        u = rng.random()
        idx = int(np.searchsorted(self._cumulative, u, side="right"))
        return min(idx, len(self) - 1)


def model_probabilities(
    space: ConfigurationSpace,
    scheme: str,
    weights: Sequence[float] | None = None,
) -> ModelDistribution:
    """Build a model-sampling distribution for ``space``.

    Schemes:
      - ``uniform``: every model gets 1/M.
      - ``hp_count_weighted``: weight 2**N per model, N its hyperparameter
        count (all kinds counted).
      - ``volume_weighted``: weights proportional to the supplied search-box
        volumes (one positive value per model).
      - ``custom``: weights proportional to the supplied positive vector.
    """
    m = space.n_models
    if scheme == "uniform":
        w = np.full(m, 1.0)
    elif scheme == "hp_count_weighted":
        counts = space.hp_counts()
        if max(counts) > MAX_WEIGHTED_HP_COUNT:
            raise SpaceError(
                f"hyperparameter count {max(counts)} exceeds the "
                f"{MAX_WEIGHTED_HP_COUNT}-hyperparameter weighting limit"
            )
        w = np.array([2.0 ** n for n in counts])
    elif scheme in ("volume_weighted", "custom"):
        if weights is None:
            raise SpaceError(f"scheme {scheme!r} requires a weight vector")
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (m,):
            raise SpaceError(f"weight vector length {w.size} != model count {m}")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise SpaceError("weights must be finite and strictly positive")
    else:
        raise SpaceError(f"unknown sampling scheme {scheme!r}")
    return ModelDistribution(w / w.sum())


def sample_configuration(
    space: ConfigurationSpace,
    dist: ModelDistribution,
    rng: np.random.Generator,
) -> Configuration:
    """Draw one configuration: model per ``dist``, hyperparameters uniform.

    Continuous values are uniform over their range (log-uniform when
    scale is log); integer values are uniform over the inclusive integer
    range; categorical values are uniform over the category list. The
    draw is deterministic given the generator state.
    """
    if len(dist) != space.n_models:
        raise SpaceError(
            f"distribution length {len(dist)} != model count {space.n_models}"
        )
    idx = dist.sample_index(rng)
    model = space.models[idx]
    values: dict[str, Any] = {}
    for hp in model.hyperparameters:
        if hp.kind == "continuous":
            if hp.scale == "log":
                values[hp.name] = math.exp(
                    rng.uniform(math.log(hp.lower), math.log(hp.upper))
                )
            else:
                values[hp.name] = float(rng.uniform(hp.lower, hp.upper))
        elif hp.kind == "integer":
            values[hp.name] = int(rng.integers(int(hp.lower), int(hp.upper) + 1))
        else:
            values[hp.name] = hp.categories[int(rng.integers(0, len(hp.categories)))]
    return Configuration(model_index=idx, values=values)


def hyperparameter_volume(model: ModelSpec) -> float:
    """Product of range lengths over a model's continuous hyperparameters.

    The empty product is 1. Models carrying integer or categorical
    hyperparameters are rejected; box volume is only defined for purely
    continuous models.
    """
    vol = 1.0
    for hp in model.hyperparameters:
        if hp.kind != "continuous":
            raise SpaceError(
                f"volume undefined: {model.name!r} has {hp.kind} "
                f"hyperparameter {hp.name!r}"
            )
        vol *= hp.upper - hp.lower
    return vol


def space_volumes(space: ConfigurationSpace) -> list[float]:
    """Per-model box volumes; requires every model to be purely continuous."""
    return [hyperparameter_volume(m) for m in space.models]


# ---------------------------------------------------------------------------
# Space definition documents
# ---------------------------------------------------------------------------

_HP_KEYS = {"name", "kind", "lower", "upper", "scale", "categories"}
_MODEL_KEYS = {"name", "hyperparameters"}
_TOP_KEYS = {"format", "models"}


def _require_mapping(obj: Any, what: str) -> Mapping:
    if not isinstance(obj, Mapping):
        raise SpaceError(f"{what} must be a mapping, got {type(obj).__name__}")
    return obj


def _check_keys(obj: Mapping, allowed: set, what: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise SpaceError(f"unknown keys {sorted(extra)} in {what}")


def _parse_hp(entry: Any) -> HyperparameterSpec:
    entry = _require_mapping(entry, "hyperparameter entry")
    _check_keys(entry, _HP_KEYS, f"hyperparameter {entry.get('name')!r}")
    kind = entry.get("kind")
    cats = entry.get("categories")
    if cats is not None and not isinstance(cats, list):
        raise SpaceError(f"categories of {entry.get('name')!r} must be a list")
    lower = entry.get("lower")
    upper = entry.get("upper")
    for bound, label in ((lower, "lower"), (upper, "upper")):
        if bound is not None and not isinstance(bound, (int, float)):
            raise SpaceError(f"{label} of {entry.get('name')!r} must be numeric")
    return HyperparameterSpec(
        name=entry.get("name"),
        kind=kind,
        lower=None if lower is None else float(lower),
        upper=None if upper is None else float(upper),
        scale=entry.get("scale", "linear"),
        categories=tuple(str(c) for c in cats) if cats else (),
    )


def parse_space(text: str) -> ConfigurationSpace:
    """Parse a space definition document into a validated space.

    The document is YAML: a top-level mapping with ``format: 1`` and a
    ``models`` list; each model has a ``name`` and a ``hyperparameters``
    list whose entries carry ``name``, ``kind``, and either a numeric
    ``lower``/``upper`` range (plus optional ``scale``) or a
    ``categories`` list. Round-trips through :func:`serialize_space`.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpaceError(f"unparseable space document: {exc}") from exc
    doc = _require_mapping(doc, "space document")
    _check_keys(doc, _TOP_KEYS, "space document")
    if doc.get("format") != SPACE_FORMAT_VERSION:
        raise SpaceError(
            f"space document must declare format: {SPACE_FORMAT_VERSION}, "
            f"got {doc.get('format')!r}"
        )
    raw_models = doc.get("models")
    if not isinstance(raw_models, list) or not raw_models:
        raise SpaceError("space document needs a non-empty models list")
    models = []
    for raw in raw_models:
        raw = _require_mapping(raw, "model entry")
        _check_keys(raw, _MODEL_KEYS, f"model {raw.get('name')!r}")
        hps = raw.get("hyperparameters") or []
        if not isinstance(hps, list):
            raise SpaceError(f"hyperparameters of {raw.get('name')!r} must be a list")
        models.append(
            ModelSpec(name=raw.get("name"), hyperparameters=tuple(_parse_hp(h) for h in hps))
        )
    return ConfigurationSpace(models=tuple(models))


def serialize_space(space: ConfigurationSpace) -> str:
    """Render a space back to its document form, preserving order."""
    models = []
    for m in space.models:
        hps = []
        for hp in m.hyperparameters:
            entry: dict[str, Any] = {"name": hp.name, "kind": hp.kind}
            if hp.kind == "categorical":
                entry["categories"] = list(hp.categories)
            else:
                if hp.kind == "integer":
                    entry["lower"] = int(hp.lower)
                    entry["upper"] = int(hp.upper)
                else:
                    entry["lower"] = float(hp.lower)
                    entry["upper"] = float(hp.upper)
                if hp.scale != "linear":
                    entry["scale"] = hp.scale
            hps.append(entry)
        models.append({"name": m.name, "hyperparameters": hps})
    doc = {"format": SPACE_FORMAT_VERSION, "models": models}
    return yaml.safe_dump(doc, sort_keys=False)


def load_space(path) -> ConfigurationSpace:
    """Read and parse a space definition file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_space(fh.read())
