"""Worst-case failure-probability laboratory for budget-K random search.

The worst-case model: the optimal model is uniform over M models, and the
optimal configuration within it is uniform over that model's box. Each
hyperparameter range has an integer length, so the box splits into
unit-volume cells and "success" means landing in the optimum's cell; the
per-draw success probability of a sampler with model probabilities p is
then exactly p_lambda / theta_lambda with theta the cell count.

Closed forms:
    fail(p)      = (1/M) * sum_lambda (1 - p_lambda / theta_lambda)**K
    fail_uniform = fail(p = 1/M)
    fail_weighted= (1 - 1 / sum(theta))**K   (p proportional to theta)

The Monte Carlo estimator simulates the scenario directly and is the
hot kernel of this package: a numba-compiled sample loop with a
vectorized numpy fallback. Both variants consume the same pre-drawn
uniforms, so their counts are identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._accel import njit, use_numba
from .configspace import ModelDistribution

# Counting beyond 2**53 samples would lose exactness in float accumulators.
MAX_MC_SAMPLES = 2**53

_MC_CHUNK = 1 << 16


class WorstCaseError(ValueError):
    """Invalid worst-case specification or argument."""


@dataclass(frozen=True)
class WorstCaseSpec:
    """Model count, per-model integer range lengths, and search budget K."""

    M: int
    range_lengths: tuple[tuple[int, ...], ...]
    K: int

    def __post_init__(self):
        if self.M < 1:
            raise WorstCaseError(f"M must be positive, got {self.M}")
        if len(self.range_lengths) != self.M:
            raise WorstCaseError(
                f"range_lengths has {len(self.range_lengths)} entries, expected M={self.M}"
            )
        for lam, lengths in enumerate(self.range_lengths):
            for length in lengths:
                if int(length) != length or length < 1:
                    raise WorstCaseError(
                        f"model {lam}: range lengths must be integers >= 1, got {length!r}"
                    )
        if self.K < 1:
            raise WorstCaseError(f"K must be >= 1, got {self.K}")
        if max(self.cell_counts_exact()) > 2**53:
            raise WorstCaseError("cell count exceeds 2**53; volumes this large lose exactness")

    @staticmethod
    def of(range_lengths: Sequence[Sequence[int]], K: int) -> "WorstCaseSpec":
        for model in range_lengths:
            for v in model:
                if int(v) != v:
                    raise WorstCaseError(f"range lengths must be integers >= 1, got {v!r}")
        lengths = tuple(tuple(int(v) for v in model) for model in range_lengths)
        return WorstCaseSpec(M=len(lengths), range_lengths=lengths, K=int(K))

    def cell_counts_exact(self) -> list[int]:
        return [math.prod(lengths) if lengths else 1 for lengths in self.range_lengths]

    def thetas(self) -> np.ndarray:
        """Per-model cell counts (box volumes) as floats."""
        return np.array(self.cell_counts_exact(), dtype=np.float64)


@dataclass
class FailureReport:
    """Closed-form and (optionally) Monte Carlo failure probabilities."""

    p_fail_uniform: float
    p_fail_weighted: float
    p_fail_custom: float | None = None
    mc_estimate: float | None = None
    mc_stderr: float | None = None
    samples: int | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "p_fail_uniform": self.p_fail_uniform,
                "p_fail_weighted": self.p_fail_weighted,
                "p_fail_custom": self.p_fail_custom,
                "mc_estimate": self.mc_estimate,
                "mc_stderr": self.mc_stderr,
                "samples": self.samples,
            },
            sort_keys=True,
        )


def uniform_distribution(m: int) -> ModelDistribution:
    return ModelDistribution(np.full(m, 1.0 / m))


def volume_distribution(spec: WorstCaseSpec) -> ModelDistribution:
    theta = spec.thetas()
    return ModelDistribution(theta / theta.sum())


def _survival_term(x: float, k: int) -> float:
    """(1 - x)**k computed as exp(k * log1p(-x)); stable for tiny x."""
    if x >= 1.0:
        return 0.0
    return math.exp(k * math.log1p(-x))


def failure_prob_closed(spec: WorstCaseSpec, dist: ModelDistribution) -> float:
    """Probability that K draws from ``dist`` all miss the optimal cell,
    averaged over the uniformly random location of the optimum."""
    if len(dist) != spec.M:
        raise WorstCaseError(f"distribution length {len(dist)} != M = {spec.M}")
    theta = spec.thetas()
    ratios = dist.probabilities / theta
    if np.any(ratios > 1.0 + 1e-12):
        raise WorstCaseError(
            "per-draw success probability p/theta exceeds 1 for some model"
        )
    terms = [_survival_term(min(float(x), 1.0), spec.K) for x in ratios]
    return math.fsum(terms) / spec.M


def failure_prob_uniform(spec: WorstCaseSpec) -> float:
    """Closed-form failure probability under uniform model sampling."""
    return failure_prob_closed(spec, uniform_distribution(spec.M))


def failure_prob_weighted(spec: WorstCaseSpec) -> float:
    """Closed-form failure probability under volume-proportional sampling.

    With p proportional to theta every per-draw success probability
    collapses to 1/sum(theta), giving (1 - 1/sum(theta))**K exactly.
    """
    total = float(spec.thetas().sum())
    return _survival_term(1.0 / total, spec.K)


def theorem_gap(spec: WorstCaseSpec) -> float:
    """Signed gap uniform - weighted; positive when weighting wins."""
    return failure_prob_uniform(spec) - failure_prob_weighted(spec)


# ---------------------------------------------------------------------------
# Monte Carlo kernels
# ---------------------------------------------------------------------------
#
# Uniform layout per sample row: column 0 draws the optimal model, column 1
# its cell; columns 2+2k / 3+2k draw the k-th search model and cell.


@njit(cache=True)
def _count_failures_loop(u, cum_p, theta, m_count):  # pragma: no cover - jitted
    n, cols = u.shape
    k_draws = (cols - 2) // 2
    failures = 0
    for i in range(n):
        lam_star = int(u[i, 0] * m_count)
        if lam_star > m_count - 1:
            lam_star = m_count - 1
        t_star = theta[lam_star]
        cell_star = int(u[i, 1] * t_star)
        if cell_star > int(t_star) - 1:
            cell_star = int(t_star) - 1
        hit = False
        for k in range(k_draws):
            uv = u[i, 2 + 2 * k]
            lam = 0
            while lam < m_count - 1 and uv >= cum_p[lam]:
                lam += 1
            if lam != lam_star:
                continue
            cell = int(u[i, 3 + 2 * k] * theta[lam])
            if cell > int(theta[lam]) - 1:
                cell = int(theta[lam]) - 1
            if cell == cell_star:
                hit = True
                break
        if not hit:
            failures += 1
    return failures


def _count_failures_numpy(u, cum_p, theta, m_count):
    k_draws = (u.shape[1] - 2) // 2
    lam_star = np.minimum((u[:, 0] * m_count).astype(np.int64), m_count - 1)
    t_star = theta[lam_star]
    cell_star = np.minimum(
        (u[:, 1] * t_star).astype(np.int64), t_star.astype(np.int64) - 1
    )
    lam = np.searchsorted(cum_p, u[:, 2 : 2 + 2 * k_draws : 2], side="right")
    lam = np.minimum(lam, m_count - 1)
    t_lam = theta[lam]
    cell = np.minimum(
        (u[:, 3 : 3 + 2 * k_draws : 2] * t_lam).astype(np.int64),
        t_lam.astype(np.int64) - 1,
    )
    hit = (lam == lam_star[:, None]) & (cell == cell_star[:, None])
    return int(np.count_nonzero(~hit.any(axis=1)))


def failure_prob_monte_carlo(
    spec: WorstCaseSpec,
    dist: ModelDistribution,
    samples: int,
    seed: int,
    accel: bool | None = None,
) -> tuple[float, float]:
    """Estimate the failure probability by direct simulation.

    Returns (estimate, stderr) with the binomial standard error
    sqrt(p*(1-p)/samples). Sampling is chunked; chunk c draws from the
    counter-based stream SeedSequence([seed, c]) and partial counts are
    reduced in chunk order, so the result is reproducible at any worker
    count. ``accel`` overrides the global numba/numpy selection.
    """
    if len(dist) != spec.M:
        raise WorstCaseError(f"distribution length {len(dist)} != M = {spec.M}")
    if samples < 1:
        raise WorstCaseError(f"samples must be >= 1, got {samples}")
    if samples > MAX_MC_SAMPLES:
        raise WorstCaseError(f"samples > {MAX_MC_SAMPLES} would overflow exact counting")
    theta = spec.thetas()
    cum_p = np.cumsum(dist.probabilities)
    cum_p[-1] = 1.0
    cols = 2 + 2 * spec.K
    kernel = _count_failures_loop if use_numba(accel) else _count_failures_numpy
    failures = 0
    chunk_index = 0
    remaining = int(samples)
    while remaining > 0:
        n = min(_MC_CHUNK, remaining)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), chunk_index]))
        u = rng.random((n, cols))
        failures += int(kernel(u, cum_p, theta, spec.M))
        remaining -= n
        chunk_index += 1
    estimate = failures / samples
    stderr = math.sqrt(estimate * (1.0 - estimate) / samples)
    return estimate, stderr


# ---------------------------------------------------------------------------
# Reports and sweeps
# ---------------------------------------------------------------------------

def build_report(
    spec: WorstCaseSpec,
    custom_dist: ModelDistribution | None = None,
    mc_samples: int | None = None,
    seed: int = 0,
    accel: bool | None = None,
) -> FailureReport:
    """Assemble closed forms plus an optional Monte Carlo check.

    The Monte Carlo estimate targets the custom distribution when one is
    given, otherwise the uniform closed form.
    """
    report = FailureReport(
        p_fail_uniform=failure_prob_uniform(spec),
        p_fail_weighted=failure_prob_weighted(spec),
    )
    if custom_dist is not None:
        report.p_fail_custom = failure_prob_closed(spec, custom_dist)
    if mc_samples:
        dist = custom_dist if custom_dist is not None else uniform_distribution(spec.M)
        est, err = failure_prob_monte_carlo(spec, dist, mc_samples, seed, accel=accel)
        report.mc_estimate = est
        report.mc_stderr = err
        report.samples = int(mc_samples)
    return report


SWEEP_COLUMNS = (
    "M",
    "K",
    "theta_spec",
    "p_uniform",
    "p_weighted",
    "gap",
    "mc_estimate",
    "mc_stderr",
)


def _theta_label(spec: WorstCaseSpec) -> str:
    return ";".join(str(c) for c in spec.cell_counts_exact())


def write_sweep_csv(
    specs: Sequence[WorstCaseSpec],
    path,
    mc_samples: int | None = None,
    seed: int = 0,
    accel: bool | None = None,
) -> None:
    """Evaluate a list of specs and emit one CSV row per spec."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for i, spec in enumerate(specs):
            p_u = failure_prob_uniform(spec)
            p_w = failure_prob_weighted(spec)
            mc_est: float | str = ""
            mc_err: float | str = ""
            if mc_samples:
                mc_est, mc_err = failure_prob_monte_carlo(
                    spec, uniform_distribution(spec.M), mc_samples, seed + i, accel=accel
                )
            writer.writerow(
                [spec.M, spec.K, _theta_label(spec), repr(p_u), repr(p_w), repr(p_u - p_w), mc_est, mc_err]
            )


def parse_spec_document(text: str) -> list[WorstCaseSpec]:
    """Parse a worst-case spec file: one spec object or a list of them.

    Each spec is a JSON/YAML mapping with ``range_lengths`` (list of
    per-model integer lists) and ``K``.
    """
    import yaml

    doc = yaml.safe_load(text)
    entries = doc if isinstance(doc, list) else [doc]
    specs = []
    for entry in entries:
        if not isinstance(entry, dict) or "range_lengths" not in entry or "K" not in entry:
            raise WorstCaseError("each spec needs range_lengths and K")
        specs.append(WorstCaseSpec.of(entry["range_lengths"], entry["K"]))
    return specs
