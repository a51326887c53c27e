import numpy as np
import pytest

import rlnet


def easy_data(per_class=40, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(5), per_class)
    features = rng.normal(0.0, 0.05, size=(labels.size, 5))
    features[:, 0] += labels
    features[:, 1] += labels
    return features, labels


def test_module_metadata():
    assert rlnet.class_names == ["SwipeLeft", "SwipeRight", "SwipeUp", "SwipeDown", "Push"]
    assert len(rlnet.feature_names) == 5
    assert rlnet.__version__


def test_generate_dataset_is_deterministic():
    a = rlnet.generate_dataset(1, 4, seed=3)
    b = rlnet.generate_dataset(1, 4, seed=3)
    assert len(a["ids"]) == 20
    assert a["features"].shape == (20, 5)
    assert np.array_equal(a["features"], b["features"])
    assert list(a["labels"]) == list(b["labels"])


def test_binarize_shape_and_values():
    features, _ = easy_data()
    X, columns = rlnet.binarize(features, 4)
    assert X.shape[0] == features.shape[0]
    assert X.shape[1] == len(columns)
    assert set(np.unique(X)) <= {0.0, 1.0}
    assert "≤" in columns[0]


def test_train_predict_and_round_trips(tmp_path):
    features, labels = easy_data()
    result = rlnet.train(features, labels, {"rules": 30, "max_epochs": 60, "batch_size": 8, "lr": 0.05, "seed": 1})
    model, rules = result["model"], result["rules"]
    assert result["fidelity"] == 1.0
    assert 0.0 <= result["test"]["macro_f1"] <= 1.0
    assert result["history"][0]["epoch"] == 0

    # The rule list and the discrete network agree.
    assert list(rules.predict(features)) == list(model.predict_network(features))

    path = tmp_path / "model.bin"
    model.save(path)
    assert rlnet.Model.load(path).hash == model.hash
    assert rlnet.Model.from_bytes(model.to_bytes()).hash == model.hash
    assert rlnet.RuleList.from_json(rules.to_json()) == rules

    explanation = rules.explain(list(features[0]))
    assert explanation["class"] in rlnet.class_names
    assert rules.text().strip().splitlines()[-1].startswith("ELSE class = ")


def test_transfer_keeps_base_weights():
    features, labels = easy_data()
    base = rlnet.train(features, labels, {"rules": 20, "max_epochs": 20})
    shifted, shifted_labels = easy_data(30, seed=5)
    result = rlnet.transfer(base["model"], shifted + 0.2, shifted_labels, {"max_epochs": 10})
    assert result["frozen_groups_ok"]
    assert set(result["before"]) >= {"accuracy", "macro_f1", "rules", "conditions"}


def test_scores_and_errors():
    s = rlnet.scores([0, 0, 1], [0, 1, 1], 2)
    assert s["accuracy"] == pytest.approx(2 / 3)
    assert s["macro_f1"] == pytest.approx(2 / 3)
    features, labels = easy_data()
    with pytest.raises(rlnet.ConfigError):
        rlnet.train(features, labels, {"learning_rate": 0.1})
    with pytest.raises(rlnet.ShapeError):
        rlnet.train(features, labels[:-1])
    with pytest.raises(rlnet.IoError):
        rlnet.Model.load("/nonexistent/model.bin")
