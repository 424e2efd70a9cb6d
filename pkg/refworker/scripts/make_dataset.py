"""Regenerate the bundled binary classification dataset.

1000 examples, 12 numeric features, two classes with mild imbalance.
Deterministic; the checked-in CSV was produced by this script.
"""

from pathlib import Path

import numpy as np
from sklearn.datasets import make_classification

OUT = Path(__file__).resolve().parent.parent / "src" / "refworker" / "data" / "tabular_binary.csv"


def main() -> None:
    x, y = make_classification(
        n_samples=1000,
        n_features=12,
        n_informative=6,
        n_redundant=2,
        n_clusters_per_class=2,
        weights=[0.6, 0.4],
        flip_y=0.03,
        class_sep=1.2,
        random_state=20240817,
    )
    header = ",".join([f"f{i}" for i in range(x.shape[1])] + ["label"])
    lines = [header]
    for row, label in zip(x, y):
        lines.append(",".join(f"{v:.6f}" for v in row) + f",{int(label)}")
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({len(lines) - 1} rows, positives: {int(y.sum())})")


if __name__ == "__main__":
    main()
