import math
from pathlib import Path

import numpy as np
import pytest

from refworker.data_io import (
    DatasetError,
    inner_splits,
    load_dataset,
    stratified_subsample,
)
from refworker.models import DEFAULT_REGISTRY
from refworker.server import evaluate_request

DATA = Path(__file__).resolve().parent.parent / "src" / "refworker" / "data" / "tabular_binary.csv"


@pytest.fixture(scope="module")
def dataset():
    return load_dataset(DATA)


@pytest.fixture(scope="module")
def splits(dataset):
    return inner_splits(dataset.labels, 3)


class TestData:
    def test_load_shapes(self, dataset):
        assert dataset.features.shape == (1000, 12)
        assert dataset.n_classes == 2

    def test_missing_values_imputed(self, tmp_path):
        path = tmp_path / "holes.csv"
        path.write_text("a,b,label\n1.0,x,0\n,y,1\n1.0,x,0\n2.0,,1\n")
        data = load_dataset(path)
        assert np.all(np.isfinite(data.features))
        # most-frequent fill: the missing 'a' becomes 1.0; missing 'b' is 'x'.
        assert data.features[1, 0] == 1.0

    def test_single_class_rejected(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("a,label\n1.0,0\n2.0,0\n")
        with pytest.raises(DatasetError, match="two classes"):
            load_dataset(path)

    def test_subsample_stratification_within_one_example(self, dataset):
        train = np.arange(dataset.labels.size)
        for fraction in (0.1, 0.25, 0.5):
            sub = stratified_subsample(dataset.labels, train, fraction, seed=3)
            for cls in (0, 1):
                full_count = int((dataset.labels[train] == cls).sum())
                sub_count = int((dataset.labels[sub] == cls).sum())
                assert abs(sub_count - fraction * full_count) <= 1.0

    def test_subsample_identity_at_full_resource(self, dataset):
        train = np.arange(100)
        assert np.array_equal(
            stratified_subsample(dataset.labels, train, 1.0, seed=1), train
        )

    def test_subsample_deterministic(self, dataset):
        train = np.arange(dataset.labels.size)
        a = stratified_subsample(dataset.labels, train, 0.2, seed=11)
        b = stratified_subsample(dataset.labels, train, 0.2, seed=11)
        assert np.array_equal(a, b)


class TestEvaluation:
    def test_losses_finite_nonnegative_across_registry(self, dataset, splits):
        params = {
            "RandomForestClassifier": {"n_estimators": 20, "max_depth": 4},
            "ExtraTreesClassifier": {"n_estimators": 20, "max_depth": 4},
            "GradientBoostingClassifier": {"n_estimators": 20, "max_depth": 2},
            "AdaBoostClassifier": {"n_estimators": 20},
            "LogisticRegression": {"C": 1.0},
            "BernoulliNB": {"alpha": 1.0, "binarize_level": 5},
            "GaussianNB": {"var_smoothing": 1e-9},
            "KNeighborsClassifier": {"n_neighbors": 5, "weights": "distance"},
            "LinearDiscriminantAnalysis": {"solver": "lsqr", "shrinkage": 0.1},
            "QuadraticDiscriminantAnalysis": {"reg_param": 0.1},
        }
        assert set(params) == set(DEFAULT_REGISTRY)
        for model, p in params.items():
            loss = evaluate_request(
                dataset, splits, DEFAULT_REGISTRY, model, p, resource=0.4, seed=2
            )
            assert math.isfinite(loss) and loss >= 0.0

    def test_string_coercions(self, dataset, splits):
        loss = evaluate_request(
            dataset,
            splits,
            DEFAULT_REGISTRY,
            "LogisticRegression",
            {"C": 0.5, "fit_intercept": "false", "class_weight": "none"},
            resource=1.0,
            seed=0,
        )
        assert math.isfinite(loss)

    def test_purity(self, dataset, splits):
        kwargs = dict(model="KNeighborsClassifier", params={"n_neighbors": 7}, resource=0.3, seed=9)
        a = evaluate_request(dataset, splits, DEFAULT_REGISTRY, **kwargs)
        b = evaluate_request(dataset, splits, DEFAULT_REGISTRY, **kwargs)
        assert a == b
