"""Nonparametric comparison of tuning methods across dataset collections.

Pipeline: midrank averaging per dataset, the Friedman omnibus test with
the Iman-Davenport F extension, all-to-all pairwise two-sided Wilcoxon
signed-rank tests, and Finner or Bonferroni multiplicity adjustment of
the flattened p-value vector.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .special import f_sf, normal_sf

# Above this effective sample size the exact signed-rank distribution is
# replaced by the tie-corrected normal approximation.
WILCOXON_EXACT_LIMIT = 25

P_VALUE_FLOOR = 1e-300


class StatsError(ValueError):
    """Invalid statistical input."""


@dataclass
class LossMatrix:
    """Datasets x methods loss table."""

    dataset_ids: list[str]
    method_names: list[str]
    losses: np.ndarray

    def __post_init__(self):
        self.losses = np.asarray(self.losses, dtype=np.float64)
        n, k = len(self.dataset_ids), len(self.method_names)
        if n < 2 or k < 2:
            raise StatsError(
                f"loss matrix needs N >= 2 datasets and k >= 2 methods, got {n} x {k}"
            )
        if self.losses.shape != (n, k):
            raise StatsError(
                f"losses shape {self.losses.shape} != ({n}, {k})"
            )
        if not np.all(np.isfinite(self.losses)):
            raise StatsError("losses must all be finite")
        if len(set(self.dataset_ids)) != n:
            raise StatsError("duplicate dataset ids")
        if len(set(self.method_names)) != k:
            raise StatsError("duplicate method names")

    @property
    def n_datasets(self) -> int:
        return len(self.dataset_ids)

    @property
    def n_methods(self) -> int:
        return len(self.method_names)

    def column(self, method: str) -> np.ndarray:
        return self.losses[:, self.method_names.index(method)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["dataset"] + self.method_names)
        for i, ds in enumerate(self.dataset_ids):
            writer.writerow([ds] + [repr(float(v)) for v in self.losses[i]])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "LossMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or not rows[0] or rows[0][0] != "dataset":
            raise StatsError("loss matrix CSV must start with a 'dataset' header column")
        methods = rows[0][1:]
        ids = []
        data = []
        for row in rows[1:]:
            if not row:
                continue
            if len(row) != len(methods) + 1:
                raise StatsError(f"row {row[0]!r} has {len(row) - 1} losses, expected {len(methods)}")
            ids.append(row[0])
            try:
                data.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise StatsError(f"non-numeric loss in row {row[0]!r}") from exc
        return LossMatrix(dataset_ids=ids, method_names=methods, losses=np.array(data))


@dataclass
class RankSummary:
    """Per-dataset midranks and their column means."""

    average_ranks: np.ndarray
    per_dataset_ranks: np.ndarray
    method_names: list[str] = field(default_factory=list)


@dataclass
class OmnibusReport:
    """Friedman chi-squared with the Iman-Davenport F extension."""

    chi2_stat: float
    imandavenport_stat: float
    dof: tuple[int, int]
    p_value: float
    rejected: bool
    alpha: float
    degenerate: bool = False


@dataclass
class PValueMatrix:
    """Symmetric raw/adjusted pairwise p-values (diagonal NaN)."""

    method_names: list[str]
    raw: np.ndarray
    adjusted: np.ndarray

    @property
    def empty(self) -> bool:
        return len(self.method_names) == 0

    def adjusted_for(self, a: str, b: str) -> float:
        i = self.method_names.index(a)
        j = self.method_names.index(b)
        return float(self.adjusted[i, j])

    def to_csv(self) -> str:
        """Lower-triangular layout with an NA diagonal."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow([""] + self.method_names)
        for i, name in enumerate(self.method_names):
            row: list[str] = [name]
            for j in range(len(self.method_names)):
                if j < i:
                    row.append(repr(float(self.adjusted[i, j])))
                elif j == i:
                    row.append("NA")
                else:
                    row.append("")
            writer.writerow(row)
        return buf.getvalue()


@dataclass
class PipelineResult:
    omnibus: OmnibusReport
    ranks: RankSummary
    pvalues: PValueMatrix
    halted: bool


def midranks(values: Sequence[float]) -> np.ndarray:
    """Ranks 1..n with tied values sharing the mean of their positions."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def average_ranks(matrix: LossMatrix) -> RankSummary:
    """Midrank each dataset row (lower loss -> rank 1) and average columns."""
    per_row = np.vstack([midranks(row) for row in matrix.losses])
    return RankSummary(
        average_ranks=per_row.mean(axis=0),
        per_dataset_ranks=per_row,
        method_names=list(matrix.method_names),
    )


def friedman_imandavenport(matrix: LossMatrix, alpha: float) -> OmnibusReport:
    """Friedman omnibus over midranks with the Iman-Davenport F form.

    chi2 = [12N / (k(k+1))] * [sum_j Rbar_j^2 - k(k+1)^2 / 4]
    F    = (N-1) chi2 / (N(k-1) - chi2), tail from F(k-1, (k-1)(N-1)).

    A perfect ordering drives the denominator to zero; that degenerate
    case is reported as p = 0 with the ``degenerate`` flag set.
    """
    if not 0.0 < alpha < 1.0:
        raise StatsError(f"alpha must lie in (0, 1), got {alpha}")
    n, k = matrix.n_datasets, matrix.n_methods
    rbar = average_ranks(matrix).average_ranks
    chi2 = (12.0 * n / (k * (k + 1.0))) * (
        float(np.sum(rbar**2)) - k * (k + 1.0) ** 2 / 4.0
    )
    chi2 = max(chi2, 0.0)
    dof = (k - 1, (k - 1) * (n - 1))
    denom = n * (k - 1.0) - chi2
    if denom <= 1e-12:
        return OmnibusReport(
            chi2_stat=chi2,
            imandavenport_stat=math.inf,
            dof=dof,
            p_value=0.0,
            rejected=True,
            alpha=alpha,
            degenerate=True,
        )
    f_stat = (n - 1.0) * chi2 / denom
    p = max(f_sf(f_stat, dof[0], dof[1]), P_VALUE_FLOOR) if f_stat > 0 else 1.0
    return OmnibusReport(
        chi2_stat=chi2,
        imandavenport_stat=f_stat,
        dof=dof,
        p_value=p,
        rejected=p < alpha,
        alpha=alpha,
    )


def _signed_rank_statistics(x: np.ndarray, y: np.ndarray):
    """Drop zero differences, midrank |d|, return (n, ranks, T, r_plus)."""
    d = x - y
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return 0, np.empty(0), 0.0, 0.0
    ranks = midranks(np.abs(d))
    r_plus = float(ranks[d > 0].sum())
    r_minus = float(ranks[d < 0].sum())
    return n, ranks, min(r_plus, r_minus), r_plus


def _exact_signed_rank_p(ranks: np.ndarray, t_obs: float) -> float:
    """Exact two-sided p via the distribution of the positive-rank sum.

    Doubling the midranks makes them integers, so the null distribution
    is a shift convolution with exact integer counts (n <= 25 keeps every
    count below 2**53). Two-sided p = min(1, 2 * P(W <= T)).
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    upper = 0
    for r in doubled:
        r = int(r)
        counts[r : upper + r + 1] += counts[0 : upper + 1]
        upper += r
    threshold = int(round(2.0 * t_obs))
    cdf = float(counts[: threshold + 1].sum())
    return min(1.0, 2.0 * cdf / 2.0 ** len(doubled))


def _approx_signed_rank_p(ranks: np.ndarray, t_obs: float) -> float:
    """Normal approximation with tie correction and continuity correction."""
    n = ranks.size
    mean = n * (n + 1.0) / 4.0
    # Tie correction: subtract sum(t^3 - t)/48 over tie groups of |d|.
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts).sum())) / 48.0
    var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term
    if var <= 0:
        return 1.0
    num = t_obs - mean
    if num < 0:
        num += 0.5
    elif num > 0:
        num -= 0.5
    z = num / math.sqrt(var)
    return min(1.0, 2.0 * normal_sf(abs(z)))


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float]) -> float:
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are dropped; absolute differences are midranked and
    T = min(R+, R-). The p-value is exact (full null distribution) up to
    25 effective pairs and a tie-corrected, continuity-corrected normal
    approximation beyond. All-zero differences yield p = 1.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 1:
        raise StatsError(f"paired samples must be equal-length vectors, got {x.shape} and {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise StatsError("inputs must be finite")
    n, ranks, t_obs, _ = _signed_rank_statistics(x, y)
    if n == 0:
        return 1.0
    if n <= WILCOXON_EXACT_LIMIT:
        return _exact_signed_rank_p(ranks, t_obs)
    return _approx_signed_rank_p(ranks, t_obs)


def _check_probabilities(p: Sequence[float]) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1:
        raise StatsError("p-values must form a vector")
    if np.any(arr < 0) or np.any(arr > 1) or not np.all(np.isfinite(arr)):
        raise StatsError("p-values must lie in [0, 1]")
    return arr


def finner_adjust(p: Sequence[float]) -> np.ndarray:
    """Finner step-down adjustment.

    On ascending p: adjusted_(i) = max_{j<=i} min(1, 1 - (1 - p_(j))**(m/j)),
    mapped back to the original positions.
    """
    arr = _check_probabilities(p)
    m = arr.size
    order = np.argsort(arr, kind="stable")
    adjusted = np.empty(m, dtype=np.float64)
    running = 0.0
    for rank, idx in enumerate(order, start=1):
        p = float(arr[idx])
        if p >= 1.0:
            value = 1.0
        else:
            value = min(1.0, -math.expm1((m / rank) * math.log1p(-p)))
        running = max(running, value)
        adjusted[idx] = running
    return adjusted


def bonferroni_adjust(p: Sequence[float]) -> np.ndarray:
    """Bonferroni adjustment: min(1, m * p)."""
    arr = _check_probabilities(p)
    return np.minimum(1.0, arr.size * arr)


_CORRECTIONS = {"finner": finner_adjust, "bonferroni": bonferroni_adjust}


def compare_pipeline(
    matrix: LossMatrix,
    alpha: float = 0.05,
    correction: str = "finner",
    force: bool = False,
) -> PipelineResult:
    """Run the omnibus test and, on rejection, adjusted pairwise tests.

    All k(k-1)/2 pairwise two-sided Wilcoxon p-values are adjusted
    jointly. When the omnibus fails to reject, the pipeline halts with an
    empty p-value matrix unless ``force`` is set (exploratory use).
    """
    if correction not in _CORRECTIONS:
        raise StatsError(f"unknown correction {correction!r}")
    omnibus = friedman_imandavenport(matrix, alpha)
    ranks = average_ranks(matrix)
    k = matrix.n_methods
    if not omnibus.rejected and not force:
        empty = PValueMatrix(
            method_names=[], raw=np.empty((0, 0)), adjusted=np.empty((0, 0))
        )
        return PipelineResult(omnibus=omnibus, ranks=ranks, pvalues=empty, halted=True)
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    raw_flat = np.array(
        [
            wilcoxon_signed_rank(matrix.losses[:, i], matrix.losses[:, j])
            for i, j in pairs
        ]
    )
    adj_flat = _CORRECTIONS[correction](raw_flat)
    raw = np.full((k, k), np.nan)
    adjusted = np.full((k, k), np.nan)
    for (i, j), pr, pa in zip(pairs, raw_flat, adj_flat):
        raw[i, j] = raw[j, i] = pr
        adjusted[i, j] = adjusted[j, i] = pa
    pmat = PValueMatrix(
        method_names=list(matrix.method_names), raw=raw, adjusted=adjusted
    )
    return PipelineResult(omnibus=omnibus, ranks=ranks, pvalues=pmat, halted=False)
