"""Tuning engines: random search, successive halving, and Hyperband.

An evaluator is any callable ``(configuration, resource, trial_seed) -> loss``
that is pure: repeated calls with the same arguments must return the same
finite loss. ``resource`` is the fraction of the training data in (0, 1];
budget is counted in full-data-evaluation units (sum of resources).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .configspace import Configuration, ConfigurationSpace, ModelDistribution, sample_configuration

Evaluator = Callable[[Configuration, float, int], float]

RUN_RECORD_VERSION = 1

# SeedSequence stream tags: configuration sampling vs per-trial seeds.
_SAMPLE_TAG = 0
_TRIAL_TAG = 1


class EngineError(RuntimeError):
    """Engine-level failure."""


class EvaluationError(EngineError):
    """An evaluator raised or returned a non-finite loss."""

    def __init__(self, message: str, trial_id: int, rung: int, bracket: int):
        super().__init__(message)
        self.trial_id = trial_id
        self.rung = rung
        self.bracket = bracket


@dataclass
class TrialRecord:
    """One evaluation of a configuration at a resource."""

    trial_id: int
    configuration: Configuration
    resource: float
    loss: float
    rung: int
    bracket: int
    trial_seed: int


@dataclass(frozen=True)
class Rung:
    """One elimination stage: how many configurations at which resource."""

    n_configs: int
    resource: float

    def __post_init__(self):
        if self.n_configs < 1:
            raise EngineError(f"rung needs at least one configuration, got {self.n_configs}")
        if not 0.0 < self.resource <= 1.0:
            raise EngineError(f"rung resource {self.resource} outside (0, 1]")


@dataclass(frozen=True)
class Schedule:
    """A successive-halving schedule: rungs plus its scaling factor."""

    rungs: tuple[Rung, ...]
    eta: float
    s_max: int

    def __post_init__(self):
        if self.eta <= 1.0:
            raise EngineError(f"eta must exceed 1, got {self.eta}")
        if self.s_max < 0 or len(self.rungs) != self.s_max + 1:
            raise EngineError(
                f"schedule needs s_max + 1 = {self.s_max + 1} rungs, got {len(self.rungs)}"
            )
        counts = [r.n_configs for r in self.rungs]
        resources = [r.resource for r in self.rungs]
        if any(a < b for a, b in zip(counts, counts[1:])):
            raise EngineError(f"rung configuration counts must be nonincreasing: {counts}")
        if any(a >= b for a, b in zip(resources, resources[1:])):
            raise EngineError(f"rung resources must be strictly increasing: {resources}")
        if resources[-1] != 1.0:
            raise EngineError(f"final rung resource must be 1, got {resources[-1]}")


@dataclass
class RunResult:
    """Outcome of one tuning run."""

    winner: Configuration
    winner_loss: float
    trials: list[TrialRecord]
    budget_spent: float
    bracket_of_winner: int = -1


def _integral_eta(eta: float) -> int | None:
    r = round(eta)
    if abs(eta - r) < 1e-12 and r > 1:
        return int(r)
    return None


def compute_s_max(r_min: float, eta: float) -> int:
    """Number of halvings: floor(-log_eta(r_min)), with a guard against
    floating-point wobble at exact powers of eta."""
    if not 0.0 < r_min <= 1.0:
        raise EngineError(f"r_min {r_min} outside (0, 1]")
    if eta <= 1.0:
        raise EngineError(f"eta must exceed 1, got {eta}")
    raw = -math.log(r_min) / math.log(eta)
    return max(0, math.floor(raw + 1e-9))


def _build_schedule(n0: int, s_max: int, eta: float) -> Schedule:
    eta_int = _integral_eta(eta)
    if eta_int is not None:
        if n0 < eta_int**s_max:
            raise EngineError(
                f"n0 = {n0} violates n0 >= eta**s_max = {eta_int**s_max}"
            )
    elif n0 < eta**s_max - 1e-9:
        raise EngineError(f"n0 = {n0} violates n0 >= eta**s_max = {eta**s_max}")
    rungs = []
    for i in range(s_max + 1):
        if eta_int is not None:
            n_i = n0 // eta_int**i
            r_i = 1.0 if i == s_max else 1.0 / eta_int ** (s_max - i)
        else:
            n_i = math.floor(n0 * eta ** (-i) + 1e-9)
            r_i = 1.0 if i == s_max else eta ** (i - s_max)
        rungs.append(Rung(n_configs=n_i, resource=r_i))
    return Schedule(rungs=tuple(rungs), eta=float(eta), s_max=s_max)


def make_schedule(n0: int, r_min: float, eta: float) -> Schedule:
    """Build the halving schedule for ``n0`` starting configurations.

    Rung i holds floor(n0 * eta**-i) configurations at resource
    eta**(i - s_max), for i = 0..s_max with s_max = floor(-log_eta(r_min)).
    Requires n0 >= eta**s_max so the final rung is non-empty.
    """
    if n0 < 1:
        raise EngineError(f"n0 must be positive, got {n0}")
    return _build_schedule(n0, compute_s_max(r_min, eta), eta)


def budget_of(schedule: Schedule) -> float:
    """Total resource consumed by a schedule: sum of n_i * r_i."""
    return math.fsum(r.n_configs * r.resource for r in schedule.rungs)


def _bracket_key(bracket: int) -> int:
    # Standalone runs (bracket -1) share the stream of Hyperband bracket 0,
    # which makes the single-bracket Hyperband reduce to plain RS/SH.
    return max(bracket, 0)


def _sampling_rng(seed: int, bracket: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), _SAMPLE_TAG, _bracket_key(bracket)])
    )


def _trial_seed(seed: int, bracket: int, trial_index: int) -> int:
    ss = np.random.SeedSequence(
        [int(seed), _TRIAL_TAG, _bracket_key(bracket), int(trial_index)]
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _check_seed(seed: int) -> int:
    if seed < 0:
        raise EngineError(f"run seed must be nonnegative, got {seed}")
    return int(seed)


def _effective_workers(evaluator: Evaluator, workers: int) -> int:
    declared = getattr(evaluator, "max_concurrency", None)
    if declared is None:
        return max(1, workers)
    return max(1, min(workers, int(declared)))


def _evaluate_batch(
    evaluator: Evaluator,
    jobs: Sequence[tuple[int, Configuration, float, int, int, int]],
    workers: int,
) -> list[TrialRecord]:
    """Evaluate (trial_id, config, resource, trial_seed, rung, bracket) jobs.

    Results are keyed by job order, so concurrent completion order cannot
    change the outcome.
    """

    def one(job) -> TrialRecord:
        trial_id, config, resource, tseed, rung, bracket = job
        try:
            loss = evaluator(config, resource, tseed)
        except Exception as exc:
            raise EvaluationError(
                f"evaluator failed on trial {trial_id} "
                f"(rung {rung}, bracket {bracket}): {exc}",
                trial_id=trial_id,
                rung=rung,
                bracket=bracket,
            ) from exc
        loss = float(loss)
        if not math.isfinite(loss):
            raise EvaluationError(
                f"evaluator returned non-finite loss {loss!r} on trial {trial_id} "
                f"(rung {rung}, bracket {bracket})",
                trial_id=trial_id,
                rung=rung,
                bracket=bracket,
            )
        return TrialRecord(
            trial_id=trial_id,
            configuration=config,
            resource=resource,
            loss=loss,
            rung=rung,
            bracket=bracket,
            trial_seed=tseed,
        )

    n_workers = _effective_workers(evaluator, workers)
    if n_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(one, jobs))
    return [one(job) for job in jobs]


def random_search(
    space: ConfigurationSpace,
    dist: ModelDistribution,
    n: int,
    evaluator: Evaluator,
    seed: int,
    workers: int = 1,
) -> RunResult:
    """Sample ``n`` configurations i.i.d. and evaluate each at full resource.

    The winner is the minimal loss, ties broken by the smaller trial id;
    the budget is exactly ``n`` full-data evaluations.
    """
    if n < 1:
        raise EngineError(f"random search needs n >= 1, got {n}")
    seed = _check_seed(seed)
    rng = _sampling_rng(seed, -1)
    jobs = []
    for i in range(n):
        config = sample_configuration(space, dist, rng)
        jobs.append((i, config, 1.0, _trial_seed(seed, -1, i), 0, -1))
    trials = _evaluate_batch(evaluator, jobs, workers)
    best = min(trials, key=lambda t: (t.loss, t.trial_id))
    return RunResult(
        winner=best.configuration,
        winner_loss=best.loss,
        trials=trials,
        budget_spent=float(n),
        bracket_of_winner=-1,
    )


def _run_bracket(
    space: ConfigurationSpace,
    dist: ModelDistribution,
    schedule: Schedule,
    evaluator: Evaluator,
    seed: int,
    workers: int,
    bracket: int,
    trial_id_start: int,
) -> tuple[list[TrialRecord], list[TrialRecord]]:
    """Run one halving bracket; returns (all trials, final-rung trials)."""
    rng = _sampling_rng(seed, bracket)
    survivors = [
        sample_configuration(space, dist, rng)
        for _ in range(schedule.rungs[0].n_configs)
    ]
    trials: list[TrialRecord] = []
    local_index = 0
    final: list[TrialRecord] = []
    for i, rung in enumerate(schedule.rungs):
        jobs = []
        for config in survivors:
            trial_id = trial_id_start + local_index
            tseed = _trial_seed(seed, bracket, local_index)
            jobs.append((trial_id, config, rung.resource, tseed, i, bracket))
            local_index += 1
        records = _evaluate_batch(evaluator, jobs, workers)
        trials.extend(records)
        ranked = sorted(records, key=lambda t: (t.loss, t.trial_id))
        if i < schedule.s_max:
            survivors = [
                t.configuration for t in ranked[: schedule.rungs[i + 1].n_configs]
            ]
        else:
            final = records
    return trials, final


def successive_halving(
    space: ConfigurationSpace,
    dist: ModelDistribution,
    schedule: Schedule,
    evaluator: Evaluator,
    seed: int,
    workers: int = 1,
) -> RunResult:
    """Run one successive-halving bracket over ``schedule``.

    Rung 0 samples the schedule's initial configuration count; each later
    rung re-evaluates the lowest-loss survivors (ties broken by trial id)
    at its larger resource. The winner is the lowest final-rung loss. A
    single-rung schedule reproduces random search trial for trial under
    the same seed.
    """
    seed = _check_seed(seed)
    trials, final = _run_bracket(
        space, dist, schedule, evaluator, seed, workers, bracket=-1, trial_id_start=0
    )
    best = min(final, key=lambda t: (t.loss, t.trial_id))
    return RunResult(
        winner=best.configuration,
        winner_loss=best.loss,
        trials=trials,
        budget_spent=math.fsum(t.resource for t in trials),
        bracket_of_winner=-1,
    )


def hyperband_brackets(n: int, eta: float, s_list: Sequence[int]) -> list[Schedule]:
    """Schedules for brackets ``s_list`` at a common per-bracket budget ``n``.

    Bracket s starts with round(n * eta**s / (s + 1)) configurations at
    minimum resource eta**-s, which keeps every bracket's budget within
    one unit of ``n`` (exact when the counts divide evenly).
    """
    if n < 1:
        raise EngineError(f"hyperband needs n >= 1, got {n}")
    if not s_list:
        raise EngineError("s_list must be non-empty")
    schedules = []
    for s in s_list:
        if s < 0:
            raise EngineError(f"bracket depth must be nonnegative, got {s}")
        n0 = math.floor(n * eta**s / (s + 1) + 0.5)
        schedules.append(_build_schedule(n0, s, eta))
    return schedules


def hyperband(
    space: ConfigurationSpace,
    dist: ModelDistribution,
    n: int,
    eta: float,
    s_list: Sequence[int],
    evaluator: Evaluator,
    seed: int,
    workers: int = 1,
) -> RunResult:
    """Run the brackets of ``s_list`` and return the best bracket winner.

    Each bracket runs successive halving on an independent per-bracket
    seed stream. The overall winner is the minimal final-rung loss across
    brackets, ties broken by smaller bracket index then trial id.
    """
    seed = _check_seed(seed)
    schedules = hyperband_brackets(n, eta, s_list)
    all_trials: list[TrialRecord] = []
    candidates: list[TrialRecord] = []
    next_trial_id = 0
    for b, schedule in enumerate(schedules):
        trials, final = _run_bracket(
            space,
            dist,
            schedule,
            evaluator,
            seed,
            workers,
            bracket=b,
            trial_id_start=next_trial_id,
        )
        next_trial_id += len(trials)
        all_trials.extend(trials)
        candidates.append(min(final, key=lambda t: (t.loss, t.trial_id)))
    best = min(candidates, key=lambda t: (t.loss, t.bracket, t.trial_id))
    return RunResult(
        winner=best.configuration,
        winner_loss=best.loss,
        trials=all_trials,
        budget_spent=math.fsum(t.resource for t in all_trials),
        bracket_of_winner=best.bracket,
    )


# ---------------------------------------------------------------------------
# Run record files
# ---------------------------------------------------------------------------

def run_records_lines(result: RunResult) -> list[str]:
    """Serialize a run as line-delimited records plus a footer summary.

    Field names are stable API: trial lines carry ``record=trial``,
    ``trial_id``, ``model_index``, ``values``, ``resource``, ``loss``,
    ``rung``, ``bracket``, ``trial_seed``; the footer carries
    ``record=summary`` with the winner, loss, budget, and trial count.
    """
    lines = []
    for t in result.trials:
        lines.append(
            json.dumps(
                {
                    "record": "trial",
                    "trial_id": t.trial_id,
                    "model_index": t.configuration.model_index,
                    "values": t.configuration.values,
                    "resource": t.resource,
                    "loss": t.loss,
                    "rung": t.rung,
                    "bracket": t.bracket,
                    "trial_seed": t.trial_seed,
                },
                sort_keys=True,
            )
        )
    lines.append(
        json.dumps(
            {
                "record": "summary",
                "version": RUN_RECORD_VERSION,
                "winner_model_index": result.winner.model_index,
                "winner_values": result.winner.values,
                "winner_loss": result.winner_loss,
                "budget_spent": result.budget_spent,
                "bracket_of_winner": result.bracket_of_winner,
                "trial_count": len(result.trials),
            },
            sort_keys=True,
        )
    )
    return lines


def write_run_records(result: RunResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in run_records_lines(result):
            fh.write(line + "\n")
