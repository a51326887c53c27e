"""Rule-list network learner with a synthetic FMCW radar gesture benchmark."""

import json

import numpy as np

from . import _core
from ._core import (
    ConfigError,
    DataError,
    DivergenceError,
    IoError,
    Model,
    RuleList,
    ShapeError,
    binarize,
    class_names,
    feature_names,
    read_feature_csv,
    write_feature_csv,
)

__version__ = _core.__version__

__all__ = [
    "ConfigError",
    "DataError",
    "DivergenceError",
    "IoError",
    "Model",
    "RuleList",
    "ShapeError",
    "binarize",
    "class_names",
    "feature_names",
    "generate_dataset",
    "read_feature_csv",
    "scores",
    "train",
    "transfer",
    "write_feature_csv",
]


def _dump(options):
    return "" if options is None else json.dumps(options)


def generate_dataset(users, samples_per_class, seed=0, first_user=0, shifted=False, radar=None):
    """Simulates recordings and returns {"ids", "labels", "features", "rejections"}."""
    out = _core.generate_dataset(users, samples_per_class, seed, first_user, shifted, _dump(radar))
    out["labels"] = np.asarray(out["labels"], dtype=np.int64)
    return out


def scores(y_true, y_pred, classes):
    """Accuracy, per-class and averaged F1, confusion matrix."""
    return json.loads(_core.confusion_scores(list(y_true), list(y_pred), classes))


def _finish(result, *keys):
    for key in keys:
        result[key] = json.loads(result[key])
    return result


def train(features, labels, config=None, split=None):
    """Trains on a stratified split; `config` and `split` are dicts of overrides."""
    result = _core.train(np.asarray(features, dtype=np.float64), list(labels), _dump(config), _dump(split))
    return _finish(result, "test", "history")


def transfer(model, features, labels, config=None, split=None):
    """Adapts `model` to new data with the base rule weights frozen."""
    result = _core.transfer(model, np.asarray(features, dtype=np.float64), list(labels), _dump(config), _dump(split))
    return _finish(result, "before", "after", "history")
