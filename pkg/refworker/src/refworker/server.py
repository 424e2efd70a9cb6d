"""Wire-protocol server: read request lines, train, answer with losses.

Handshake on startup: ``{"protocol": 1, "max_concurrency": 1}``. Each
request ``{"id", "model", "params", "resource", "seed"}`` is answered by
``{"id", "loss", "status"}``; failures answer ``status: "error"`` with a
``message`` and the server keeps serving. One request is handled at a
time.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping, TextIO

import numpy as np
from sklearn.metrics import log_loss

from .data_io import TabularDataset, inner_splits, load_dataset, stratified_subsample
from .models import DEFAULT_REGISTRY, Builder

PROTOCOL_VERSION = 1


@dataclass
class WorkerConfig:
    dataset_path: str
    label_column: str = "label"
    inner_splits: int = 3
    model_registry: dict[str, Builder] = field(default_factory=lambda: dict(DEFAULT_REGISTRY))


class RequestError(ValueError):
    pass


def evaluate_request(
    dataset: TabularDataset,
    splits,
    registry: Mapping[str, Builder],
    model: str,
    params: Mapping[str, Any],
    resource: float,
    seed: int,
) -> float:
    """Mean validation log loss over the inner splits.

    Per split, the training indices are stratified-subsampled to
    ``resource`` with the request seed, the named model is trained on
    the subsample, and the log loss is computed on the validation part.
    """
    if model not in registry:
        raise RequestError(f"unknown model {model!r}")
    if not isinstance(resource, (int, float)) or not 0.0 < float(resource) <= 1.0:
        raise RequestError(f"resource {resource!r} outside (0, 1]")
    classes = np.unique(dataset.labels)
    losses = []
    for fold, (train_idx, val_idx) in enumerate(splits):
        subsample = stratified_subsample(
            dataset.labels, train_idx, float(resource), int(seed) + fold
        )
        estimator = registry[model](params, int(seed))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            estimator.fit(dataset.features[subsample], dataset.labels[subsample])
            proba = estimator.predict_proba(dataset.features[val_idx])
        if proba.shape[1] < classes.size:
            present = estimator.classes_
            padded = np.full((proba.shape[0], classes.size), 1e-12)
            for j, cls in enumerate(present):
                padded[:, int(np.searchsorted(classes, cls))] = proba[:, j]
            proba = padded / padded.sum(axis=1, keepdims=True)
        losses.append(log_loss(dataset.labels[val_idx], proba, labels=classes))
    return float(np.mean(losses))


def _respond(out: TextIO, payload: dict) -> None:
    out.write(json.dumps(payload) + "\n")
    out.flush()


def serve(config: WorkerConfig, stdin: TextIO = None, stdout: TextIO = None) -> None:
    """Run the request loop until the input stream closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    dataset = load_dataset(config.dataset_path, config.label_column)
    splits = inner_splits(dataset.labels, config.inner_splits)
    _respond(stdout, {"protocol": PROTOCOL_VERSION, "max_concurrency": 1})
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        request_id = None
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise RequestError("request line is not an object")
            request_id = request.get("id")
            loss = evaluate_request(
                dataset,
                splits,
                config.model_registry,
                request.get("model"),
                request.get("params") or {},
                request.get("resource"),
                request.get("seed", 0),
            )
            _respond(stdout, {"id": request_id, "loss": loss, "status": "ok"})
        except Exception as exc:
            _respond(
                stdout,
                {"id": request_id, "loss": None, "status": "error", "message": str(exc)},
            )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="refworker", description="evaluation worker for tabular classification"
    )
    parser.add_argument("--dataset", required=True, help="CSV file with a header row")
    parser.add_argument("--label-column", default="label")
    parser.add_argument("--inner-splits", type=int, default=3)
    args = parser.parse_args(argv)
    serve(
        WorkerConfig(
            dataset_path=args.dataset,
            label_column=args.label_column,
            inner_splits=args.inner_splits,
        )
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
