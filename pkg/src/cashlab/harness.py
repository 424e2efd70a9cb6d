"""Synthetic benchmark harness: problem generation, suite execution,
persistence, and the rank/bracket analyses fed to the statistics pipeline.

Each synthetic problem is a deterministic loss landscape over a
configuration space: per model, a random quadratic bowl in normalized
hyperparameter coordinates plus a per-model offset, with categorical
values mapped to per-category offsets. The evaluator adds zero-mean noise
whose scale grows as the resource fraction shrinks, emulating loss
estimation on a subsample; at full resource the true loss is returned
exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .configspace import (
    Configuration,
    ConfigurationSpace,
    ModelDistribution,
    SpaceError,
    model_probabilities,
    space_volumes,
)
from .engine import (
    RunResult,
    compute_s_max,
    hyperband,
    hyperband_brackets,
    random_search,
    successive_halving,
)
from .stats import LossMatrix

STORE_VERSION = 1

# Landscape shape defaults, frozen after calibration on the stock
# suite: offsets are spread over `base_spread`, bowls are scaled by
# `depth` and normalized by dimension, and models with larger search
# spaces tend to hold better optima (capacity_tilt), mirroring how
# flexible model families behave on real tabular tasks.
BASE_SPREAD = 0.30
DEPTH = 1.0
CURVATURE_LOW = 0.5
CURVATURE_HIGH = 1.5
CAT_SCALE = 0.30
CAPACITY_TILT = 1.0
DIM_NORM = 1.0


class HarnessError(RuntimeError):
    """Suite construction or execution failure."""


# ---------------------------------------------------------------------------
# Synthetic landscapes
# ---------------------------------------------------------------------------

@dataclass
class _NumericTerm:
    name: str
    z_star: float
    weight: float
    lower: float
    width: float
    log_scale: bool

    def normalize(self, value: float) -> float:
        if self.log_scale:
            return (math.log(value) - self.lower) / self.width
        return (value - self.lower) / self.width


@dataclass
class _CategoricalTerm:
    name: str
    categories: tuple[str, ...]
    offsets: tuple[float, ...]


@dataclass
class _ModelLandscape:
    base: float
    numeric: list[_NumericTerm]
    categorical: list[_CategoricalTerm]
    denom: float


@dataclass
class SyntheticProblem:
    """A deterministic landscape with recorded ground-truth optimum."""

    problem_id: str
    space: ConfigurationSpace
    landscape_seed: int
    noise_scale: float
    optimum: Configuration
    optimum_loss: float
    models: list[_ModelLandscape] = field(repr=False, default_factory=list)
    noise_key: int = 0
    depth: float = DEPTH

    def true_loss(self, config: Configuration) -> float:
        """Noise-free landscape value at a configuration."""
        land = self.models[config.model_index]
        total = 0.0
        for term in land.numeric:
            z = term.normalize(float(config.values[term.name]))
            dz = z - term.z_star
            total += term.weight * dz * dz
        for term in land.categorical:
            total += term.offsets[term.categories.index(config.values[term.name])]
        return land.base + self.depth * total / land.denom

    def evaluate(
        self,
        config: Configuration,
        resource: float,
        trial_seed: int,
        inner_splits: int = 10,
    ) -> float:
        """True loss plus the mean of ``inner_splits`` noise draws.

        The noise scale is noise_scale * sqrt((1 - r) / r): zero at full
        resource, growing as the subsample shrinks. The draw is seeded by
        (problem, configuration digest, trial seed), so repeated calls
        are identical.
        """
        if not 0.0 < resource <= 1.0:
            raise HarnessError(f"resource {resource} outside (0, 1]")
        true = self.true_loss(config)
        if resource == 1.0 or self.noise_scale == 0.0:
            return true
        scale = self.noise_scale * math.sqrt((1.0 - resource) / resource)
        rng = np.random.default_rng(
            np.random.SeedSequence(
                [self.noise_key, _config_digest(config), int(trial_seed)]
            )
        )
        eps = float(rng.standard_normal(inner_splits).mean()) * scale
        return true + eps

    def evaluator(self, inner_splits: int = 10) -> "SyntheticEvaluator":
        return SyntheticEvaluator(self, inner_splits)


class SyntheticEvaluator:
    """Engine-facing adapter around a problem's evaluate method."""

    def __init__(self, problem: SyntheticProblem, inner_splits: int = 10):
        self.problem = problem
        self.inner_splits = int(inner_splits)

    def __call__(self, config: Configuration, resource: float, trial_seed: int) -> float:
        return self.problem.evaluate(config, resource, trial_seed, self.inner_splits)


def _config_digest(config: Configuration) -> int:
    parts = [str(config.model_index)]
    for name in sorted(config.values):
        parts.append(f"{name}={config.values[name]!r}")
    digest = hashlib.blake2b("|".join(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _problem_key(problem_id: str, landscape_seed: int) -> int:
    digest = hashlib.blake2b(
        f"{problem_id}|{landscape_seed}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def generate_problem(
    space: ConfigurationSpace,
    landscape_seed: int,
    noise_scale: float,
    problem_id: str | None = None,
    base_spread: float = BASE_SPREAD,
    depth: float = DEPTH,
    curvature_low: float = CURVATURE_LOW,
    curvature_high: float = CURVATURE_HIGH,
    cat_scale: float = CAT_SCALE,
    capacity_tilt: float = CAPACITY_TILT,
    dim_norm: float = DIM_NORM,
) -> SyntheticProblem:
    """Build a deterministic problem over ``space``.

    Per model: an offset drawn over ``base_spread`` (lowered in
    expectation by ``capacity_tilt`` for models with more
    hyperparameters), a quadratic bowl with random per-dimension
    curvatures and a random interior optimum, and random per-category
    offsets (zero at the optimal category). The global optimum is
    recorded at construction; no probe can beat it.
    """
    if noise_scale < 0:
        raise HarnessError(f"noise_scale must be nonnegative, got {noise_scale}")
    if landscape_seed < 0:
        raise HarnessError(f"landscape_seed must be nonnegative, got {landscape_seed}")
    problem_id = problem_id if problem_id is not None else f"problem-{landscape_seed}"
    max_n = max(1, max(m.n_hyperparameters for m in space.models))
    landscapes: list[_ModelLandscape] = []
    optimum_values: list[dict[str, Any]] = []
    for midx, model in enumerate(space.models):
        rng = np.random.default_rng(
            np.random.SeedSequence([int(landscape_seed), midx])
        )
        base = float(rng.random()) * base_spread
        base -= capacity_tilt * (model.n_hyperparameters / max_n)
        numeric: list[_NumericTerm] = []
        categorical: list[_CategoricalTerm] = []
        best_values: dict[str, Any] = {}
        for hp in model.hyperparameters:
            if hp.kind == "categorical":
                offs = rng.random(len(hp.categories)) * cat_scale
                offs -= offs.min()
                categorical.append(
                    _CategoricalTerm(
                        name=hp.name,
                        categories=hp.categories,
                        offsets=tuple(float(o) for o in offs),
                    )
                )
                best_values[hp.name] = hp.categories[int(np.argmin(offs))]
                continue
            log_scale = hp.kind == "continuous" and hp.scale == "log"
            lo = math.log(hp.lower) if log_scale else float(hp.lower)
            width = (math.log(hp.upper) if log_scale else float(hp.upper)) - lo
            term = _NumericTerm(
                name=hp.name,
                z_star=0.0,
                weight=float(rng.uniform(curvature_low, curvature_high)),
                lower=lo,
                width=width,
                log_scale=log_scale,
            )
            if hp.kind == "integer":
                # Optimum pinned to the integer grid so the recorded
                # optimum attains the bowl minimum exactly.
                v_star = int(rng.integers(int(hp.lower), int(hp.upper) + 1))
                term.z_star = term.normalize(float(v_star))
                best_values[hp.name] = v_star
            else:
                z = float(rng.random())
                term.z_star = z
                if log_scale:
                    best_values[hp.name] = math.exp(lo + z * width)
                else:
                    best_values[hp.name] = lo + z * width
            numeric.append(term)
        landscapes.append(
            _ModelLandscape(
                base=base,
                numeric=numeric,
                categorical=categorical,
                denom=max(1.0, float(model.n_hyperparameters)) ** dim_norm,
            )
        )
        optimum_values.append(best_values)
    best_model = min(range(len(landscapes)), key=lambda i: landscapes[i].base)
    optimum = Configuration(model_index=best_model, values=optimum_values[best_model])
    problem = SyntheticProblem(
        problem_id=problem_id,
        space=space,
        landscape_seed=int(landscape_seed),
        noise_scale=float(noise_scale),
        optimum=optimum,
        optimum_loss=0.0,
        models=landscapes,
        noise_key=_problem_key(problem_id, landscape_seed),
        depth=float(depth),
    )
    problem.optimum_loss = problem.true_loss(optimum)
    return problem


def synthetic_evaluate(
    problem: SyntheticProblem,
    configuration: Configuration,
    resource: float,
    trial_seed: int,
    inner_splits: int = 10,
) -> float:
    """Functional form of :meth:`SyntheticProblem.evaluate`."""
    return problem.evaluate(configuration, resource, trial_seed, inner_splits)


# ---------------------------------------------------------------------------
# Suites, methods, and the results store
# ---------------------------------------------------------------------------

ALGORITHMS = ("rs", "sh", "hyperband")
SAMPLINGS = ("uniform", "weighted", "theta", "custom")


@dataclass(frozen=True)
class MethodSpec:
    """One tuning scheme: algorithm, sampling, and budget parameters."""

    name: str
    algorithm: str
    sampling: str
    budget: int
    eta: float = 3.0
    rmin: float = 1.0
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise HarnessError(f"unknown algorithm {self.algorithm!r}")
        if self.sampling not in SAMPLINGS:
            raise HarnessError(f"unknown sampling {self.sampling!r}")
        if self.budget < 1:
            raise HarnessError(f"budget must be positive, got {self.budget}")
        if self.sampling == "custom" and not self.weights:
            raise HarnessError("custom sampling needs a weight vector")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = list(self.weights) if self.weights is not None else None
        return d


@dataclass
class Suite:
    """A problem collection plus repetition and validation-averaging counts."""

    problems: list[SyntheticProblem]
    reps: int
    inner_splits: int

    def __post_init__(self):
        if self.reps < 1:
            raise HarnessError(f"reps must be >= 1, got {self.reps}")
        if self.inner_splits < 1:
            raise HarnessError(f"inner_splits must be >= 1, got {self.inner_splits}")
        ids = [p.problem_id for p in self.problems]
        if len(set(ids)) != len(ids):
            raise HarnessError("problem ids must be unique")
        if not self.problems:
            raise HarnessError("suite needs at least one problem")


def method_distribution(space: ConfigurationSpace, method: MethodSpec) -> ModelDistribution:
    if method.sampling == "uniform":
        return model_probabilities(space, "uniform")
    if method.sampling == "weighted":
        return model_probabilities(space, "hp_count_weighted")
    if method.sampling == "theta":
        return model_probabilities(space, "volume_weighted", weights=space_volumes(space))
    return model_probabilities(space, "custom", weights=method.weights)


def run_method(
    space: ConfigurationSpace,
    dist: ModelDistribution,
    method: MethodSpec,
    evaluator,
    seed: int,
    workers: int = 1,
) -> RunResult:
    """Execute one method at its nominal budget.

    ``rs`` evaluates ``budget`` configurations at full resource. ``sh``
    runs the single bracket of depth floor(-log_eta(rmin)) sized so its
    budget matches. ``hyperband`` splits the budget evenly over brackets
    0..s_max.
    """
    if method.algorithm == "rs":
        return random_search(space, dist, method.budget, evaluator, seed, workers=workers)
    s_max = compute_s_max(method.rmin, method.eta)
    if method.algorithm == "sh":
        schedule = hyperband_brackets(method.budget, method.eta, [s_max])[0]
        return successive_halving(space, dist, schedule, evaluator, seed, workers=workers)
    per_bracket = math.floor(method.budget / (s_max + 1) + 0.5)
    return hyperband(
        space,
        dist,
        per_bracket,
        method.eta,
        list(range(s_max + 1)),
        evaluator,
        seed,
        workers=workers,
    )


@dataclass
class RunRecord:
    """Stored outcome of one (problem, rep, method) run."""

    problem_id: str
    rep: int
    method: str
    validation_loss: float
    generalization_loss: float
    budget_spent: float
    bracket_of_winner: int
    winner_model_index: int
    winner_values: dict[str, Any]
    trial_count: int
    error: str | None = None


@dataclass
class ResultsStore:
    """Complete (problem, rep, method) grid of run outcomes plus manifest."""

    manifest: dict
    records: list[RunRecord] = field(default_factory=list)

    def key_set(self) -> set[tuple[str, int, str]]:
        return {(r.problem_id, r.rep, r.method) for r in self.records}

    def check_complete(self) -> None:
        expected = {
            (pid, rep, m["name"])
            for pid in self.manifest["problem_ids"]
            for rep in range(self.manifest["reps"])
            for m in self.manifest["methods"]
        }
        got = self.key_set()
        if len(self.records) != len(got):
            raise HarnessError("duplicate (problem, rep, method) records in store")
        if got != expected:
            missing = sorted(expected - got)[:5]
            raise HarnessError(f"store grid incomplete; first missing: {missing}")
        failed = [r for r in self.records if r.error]
        if failed:
            raise HarnessError(
                f"{len(failed)} runs failed; first: "
                f"{failed[0].problem_id}/{failed[0].rep}/{failed[0].method}: {failed[0].error}"
            )

    def to_lines(self) -> list[str]:
        lines = [json.dumps({"record": "manifest", **self.manifest}, sort_keys=True)]
        for r in self.records:
            lines.append(json.dumps({"record": "run", **asdict(r)}, sort_keys=True))
        return lines

    def to_bytes(self) -> bytes:
        return ("\n".join(self.to_lines()) + "\n").encode("utf-8")

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @staticmethod
    def load(path) -> "ResultsStore":
        manifest = None
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                kind = obj.pop("record", None)
                if kind == "manifest":
                    manifest = obj
                elif kind == "run":
                    records.append(RunRecord(**obj))
                else:
                    raise HarnessError(f"unknown record kind {kind!r} in store")
        if manifest is None:
            raise HarnessError("store has no manifest line")
        return ResultsStore(manifest=manifest, records=records)


def _run_seed(seed: int, problem_index: int, rep: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(problem_index), int(rep)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_suite(
    suite: Suite,
    methods: Sequence[MethodSpec],
    worker_limit: int = 1,
    seed: int = 0,
) -> ResultsStore:
    """Execute the full (problem, rep, method) grid.

    Methods sharing a (problem, rep) cell share the same run seed, so
    schemes are compared under common random numbers. Runs are scheduled
    concurrently up to ``worker_limit``; results are assembled in grid
    order, so the store is byte-identical at any worker limit.
    """
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise HarnessError("method names must be unique")
    if not methods:
        raise HarnessError("no methods to run")
    manifest = {
        "version": STORE_VERSION,
        "seed": int(seed),
        "reps": suite.reps,
        "inner_splits": suite.inner_splits,
        "problem_ids": [p.problem_id for p in suite.problems],
        "problems": [
            {
                "id": p.problem_id,
                "landscape_seed": p.landscape_seed,
                "noise_scale": p.noise_scale,
            }
            for p in suite.problems
        ],
        "methods": [m.to_dict() for m in methods],
    }
    evaluators = [p.evaluator(suite.inner_splits) for p in suite.problems]
    dists = [
        [method_distribution(p.space, m) for m in methods] for p in suite.problems
    ]

    def one(task: tuple[int, int, int]) -> RunRecord:
        pi, rep, mi = task
        problem = suite.problems[pi]
        method = methods[mi]
        run_seed = _run_seed(seed, pi, rep)
        try:
            result = run_method(
                problem.space, dists[pi][mi], method, evaluators[pi], run_seed
            )
        except Exception as exc:
            return RunRecord(
                problem_id=problem.problem_id,
                rep=rep,
                method=method.name,
                validation_loss=math.nan,
                generalization_loss=math.nan,
                budget_spent=math.nan,
                bracket_of_winner=-1,
                winner_model_index=-1,
                winner_values={},
                trial_count=0,
                error=str(exc),
            )
        return RunRecord(
            problem_id=problem.problem_id,
            rep=rep,
            method=method.name,
            validation_loss=result.winner_loss,
            generalization_loss=problem.true_loss(result.winner),
            budget_spent=result.budget_spent,
            bracket_of_winner=result.bracket_of_winner,
            winner_model_index=result.winner.model_index,
            winner_values=dict(result.winner.values),
            trial_count=len(result.trials),
        )

    tasks = [
        (pi, rep, mi)
        for pi in range(len(suite.problems))
        for rep in range(suite.reps)
        for mi in range(len(methods))
    ]
    if worker_limit > 1:
        with ThreadPoolExecutor(max_workers=worker_limit) as pool:
            records = list(pool.map(one, tasks))
    else:
        records = [one(t) for t in tasks]
    return ResultsStore(manifest=manifest, records=records)


def export_loss_matrix(store: ResultsStore, split: str = "validation") -> LossMatrix:
    """Problems x methods matrix of per-problem losses averaged over reps."""
    if split not in ("validation", "generalization"):
        raise HarnessError(f"unknown split {split!r}")
    store.check_complete()
    problem_ids = store.manifest["problem_ids"]
    methods = [m["name"] for m in store.manifest["methods"]]
    by_key: dict[tuple[str, str], list[float]] = {}
    for r in store.records:
        loss = r.validation_loss if split == "validation" else r.generalization_loss
        by_key.setdefault((r.problem_id, r.method), []).append(loss)
    losses = np.array(
        [
            [float(np.mean(by_key[(pid, m)])) for m in methods]
            for pid in problem_ids
        ]
    )
    return LossMatrix(dataset_ids=list(problem_ids), method_names=methods, losses=losses)


@dataclass
class BracketWinCounts:
    """Winning-bracket tallies per sampling scheme."""

    counts: dict[str, np.ndarray]

    def entropy(self, scheme: str) -> float:
        return count_entropy(self.counts[scheme])


def count_entropy(counts: np.ndarray) -> float:
    """Shannon entropy (nats) of a count vector, 0 log 0 = 0."""
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def bracket_win_counts(store: ResultsStore) -> BracketWinCounts:
    """Tally which bracket produced the winner, per sampling scheme."""
    store.check_complete()
    sampling_of = {m["name"]: m["sampling"] for m in store.manifest["methods"]}
    hb_methods = {m["name"] for m in store.manifest["methods"] if m["algorithm"] == "hyperband"}
    if not hb_methods:
        raise HarnessError("store contains no hyperband runs")
    raw: dict[str, dict[int, int]] = {}
    for r in store.records:
        if r.method not in hb_methods:
            continue
        scheme = sampling_of[r.method]
        raw.setdefault(scheme, {})
        raw[scheme][r.bracket_of_winner] = raw[scheme].get(r.bracket_of_winner, 0) + 1
    n_brackets = 1 + max(b for per in raw.values() for b in per)
    counts = {
        scheme: np.array([per.get(b, 0) for b in range(n_brackets)], dtype=np.int64)
        for scheme, per in raw.items()
    }
    return BracketWinCounts(counts=counts)
