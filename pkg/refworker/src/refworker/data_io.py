"""Dataset loading, preprocessing, and stratified subsampling."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.model_selection import StratifiedKFold

# Inner train/validation splits are fixed per dataset so every request
# sees the same folds; only the subsample varies with the request seed.
SPLIT_SEED = 1729


class DatasetError(ValueError):
    pass


@dataclass
class TabularDataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]

    @property
    def n_classes(self) -> int:
        return int(np.unique(self.labels).size)


def load_dataset(path, label_column: str = "label") -> TabularDataset:
    """Read a delimited text file with a header row.

    Missing values are imputed with the column's most frequent value and
    non-numeric (categorical) feature columns are label-encoded.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DatasetError(f"{path} has no data rows")
    header = rows[0]
    if label_column not in header:
        raise DatasetError(f"label column {label_column!r} not in header {header}")
    label_idx = header.index(label_column)
    feature_names = [h for i, h in enumerate(header) if i != label_idx]
    raw_columns: list[list[str]] = [[] for _ in header]
    for row in rows[1:]:
        if len(row) != len(header):
            raise DatasetError(f"row with {len(row)} cells, expected {len(header)}")
        for i, cell in enumerate(row):
            raw_columns[i].append(cell.strip())

    def encode(values: list[str]) -> np.ndarray:
        present = [v for v in values if v != ""]
        if not present:
            raise DatasetError("a column is entirely empty")
        try:
            numeric = [float(v) if v != "" else None for v in values]
            filled = [v for v in numeric if v is not None]
            fill = max(set(filled), key=filled.count)
            return np.array([fill if v is None else v for v in numeric], dtype=np.float64)
        except ValueError:
            fill = max(set(present), key=present.count)
            levels = sorted(set(present))
            mapping = {level: float(i) for i, level in enumerate(levels)}
            return np.array(
                [mapping[fill if v == "" else v] for v in values], dtype=np.float64
            )

    columns = [encode(col) for col in raw_columns]
    labels = columns[label_idx].astype(np.int64)
    features = np.column_stack([c for i, c in enumerate(columns) if i != label_idx])
    dataset = TabularDataset(features=features, labels=labels, feature_names=feature_names)
    if dataset.n_classes < 2:
        raise DatasetError("dataset needs at least two classes")
    return dataset


def inner_splits(labels: np.ndarray, n_splits: int):
    """Fixed stratified train/validation index pairs."""
    if n_splits < 2:
        raise DatasetError("inner_splits must be at least 2 for train/validation folds")
    splitter = StratifiedKFold(n_splits=n_splits, shuffle=True, random_state=SPLIT_SEED)
    return [
        (train.copy(), val.copy())
        for train, val in splitter.split(np.zeros_like(labels), labels)
    ]


def stratified_subsample(
    labels: np.ndarray, indices: np.ndarray, fraction: float, seed: int
) -> np.ndarray:
    """Subsample ``indices`` to ``fraction``, per class, seeded.

    Per-class counts are round(fraction * class_count) with a floor of
    one example, which keeps class proportions within one example of the
    full split. ``fraction`` = 1 returns the indices unchanged.
    """
    if not 0.0 < fraction <= 1.0:
        raise DatasetError(f"fraction {fraction} outside (0, 1]")
    if fraction == 1.0:
        return indices
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), indices.size]))
    chosen = []
    for cls in np.unique(labels[indices]):
        members = indices[labels[indices] == cls]
        take = max(1, int(round(fraction * members.size)))
        chosen.append(rng.choice(members, size=min(take, members.size), replace=False))
    return np.sort(np.concatenate(chosen))
