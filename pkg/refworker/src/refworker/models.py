"""Trainer registry: model name -> builder(params, seed) -> estimator.

Hyperparameter values arrive over the wire as JSON scalars; builders
coerce the common string encodings ("true"/"false" booleans, "none" for
null) and apply small per-model translations before handing the rest to
the scikit-learn constructor. Unknown parameters surface as training
errors, which the server reports as status=error responses.
"""

from __future__ import annotations

from typing import Any, Callable, Mapping

from sklearn.discriminant_analysis import (
    LinearDiscriminantAnalysis,
    QuadraticDiscriminantAnalysis,
)
from sklearn.ensemble import (
    AdaBoostClassifier,
    ExtraTreesClassifier,
    GradientBoostingClassifier,
    RandomForestClassifier,
)
from sklearn.linear_model import LogisticRegression
from sklearn.naive_bayes import BernoulliNB, GaussianNB
from sklearn.neighbors import KNeighborsClassifier


def _coerce(value: Any) -> Any:
    if isinstance(value, str):
        lowered = value.lower()
        if lowered == "true":
            return True
        if lowered == "false":
            return False
        if lowered in ("none", "null"):
            return None
    return value


def _coerce_params(params: Mapping[str, Any]) -> dict[str, Any]:
    return {k: _coerce(v) for k, v in params.items()}


def _random_forest(params, seed):
    return RandomForestClassifier(**_coerce_params(params), random_state=seed, n_jobs=1)


def _extra_trees(params, seed):
    return ExtraTreesClassifier(**_coerce_params(params), random_state=seed, n_jobs=1)


def _gradient_boosting(params, seed):
    p = _coerce_params(params)
    if p.get("max_features") == "all":
        p["max_features"] = None
    return GradientBoostingClassifier(**p, random_state=seed)


def _adaboost(params, seed):
    return AdaBoostClassifier(**_coerce_params(params), random_state=seed)


def _logistic_regression(params, seed):
    p = _coerce_params(params)
    p.setdefault("max_iter", 200)
    return LogisticRegression(**p)


def _bernoulli_nb(params, seed):
    p = _coerce_params(params)
    # The tuning space exposes the binarization threshold in tenths.
    if "binarize_level" in p:
        p["binarize"] = p.pop("binarize_level") / 10.0
    return BernoulliNB(**p)


def _gaussian_nb(params, seed):
    return GaussianNB(**_coerce_params(params))


def _knn(params, seed):
    return KNeighborsClassifier(**_coerce_params(params))


def _lda(params, seed):
    p = _coerce_params(params)
    if p.get("solver") == "svd":
        p.pop("shrinkage", None)
    return LinearDiscriminantAnalysis(**p)


def _qda(params, seed):
    return QuadraticDiscriminantAnalysis(**_coerce_params(params))


Builder = Callable[[Mapping[str, Any], int], Any]

DEFAULT_REGISTRY: dict[str, Builder] = {
    "RandomForestClassifier": _random_forest,
    "ExtraTreesClassifier": _extra_trees,
    "GradientBoostingClassifier": _gradient_boosting,
    "AdaBoostClassifier": _adaboost,
    "LogisticRegression": _logistic_regression,
    "BernoulliNB": _bernoulli_nb,
    "GaussianNB": _gaussian_nb,
    "KNeighborsClassifier": _knn,
    "LinearDiscriminantAnalysis": _lda,
    "QuadraticDiscriminantAnalysis": _qda,
}
