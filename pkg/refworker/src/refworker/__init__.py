"""refworker: reference evaluation worker speaking the newline-delimited
JSON wire protocol, training scikit-learn classifiers on a local tabular
dataset with resource-fraction stratified subsampling."""

from .data_io import TabularDataset, load_dataset, stratified_subsample
from .models import DEFAULT_REGISTRY
from .server import WorkerConfig, evaluate_request, serve

__version__ = "0.1.0"
