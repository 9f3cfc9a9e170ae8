import json
import random

import pytest

from hebnn import wire
from hebnn.model import BatchNorm, DenseLayer, SignActivation, TernaryModel, load_model, oracle_eval, save_model, validate_model
from hebnn.wire import DocumentError, dump_model, parse_input, parse_model


def cancer_shaped_doc():
    rng = random.Random(90)
    return {
        "version": 1,
        "input_shape": 90,
        "output_mode": "sign_bits",
        "layers": [
            {
                "weights": [[rng.choice((-1, 1)) for _ in range(90)]],
                "bias": [0],
                "type": "dense",
            },
            {
                "type": "batchnorm",
                "gamma": ["1.25"],
                "beta": ["-0.5"],
                "mu": ["3.0"],
                "sigma2": ["2.25"],
                "epsilon": "0.001",
            },
        ],
    }


def two_layer_model():
    rng = random.Random(1)
    l1 = DenseLayer(
        tuple(tuple(rng.choice((-1, 0, 1)) for _ in range(6)) for _ in range(4)),
        (1, -2, 0, 3),
        magnitudes=tuple(tuple(round(rng.uniform(0, 2), 3) for _ in range(6)) for _ in range(4)),
    )
    l2 = DenseLayer(tuple(tuple(rng.choice((-1, 1)) for _ in range(4)) for _ in range(2)), (0, 1))
    bn = BatchNorm(
        gamma=(0.5, -1.5, 2.0, 0.0),
        beta=(0.1, 0.2, -0.3, 0.4),
        mu=(0.0, 1.0, -1.0, 2.0),
        sigma2=(1.0, 2.0, 0.5, 1.5),
        epsilon=0.01,
    )
    layers = (l1, bn, SignActivation(), l2, SignActivation())
    return validate_model(TernaryModel(input_shape=6, layers=layers, output_mode="sign_bits"))


def test_save_load_roundtrip(tmp_path):
    m = two_layer_model()
    path = tmp_path / "model.json"
    save_model(m, path)
    assert load_model(path) == m


def test_dump_is_deterministic():
    m = two_layer_model()
    assert wire.to_json(dump_model(m)) == wire.to_json(dump_model(m))


def test_cancer_shaped_model_loads():
    m = parse_model(cancer_shaped_doc())
    assert m.input_shape == 90
    assert m.layers[0].in_units == 90
    assert oracle_eval(m, [1] * 90) in ([1], [-1])


def test_bad_weight_named_with_location():
    doc = cancer_shaped_doc()
    doc["layers"][0]["weights"][0][3] = 2
    with pytest.raises(ValueError, match=r"weights\[0\]\[3\]"):
        parse_model(doc)


def test_unknown_field_rejected():
    doc = cancer_shaped_doc()
    doc["extra"] = True
    with pytest.raises(DocumentError, match="unknown field"):
        parse_model(doc)
    doc = cancer_shaped_doc()
    doc["layers"][0]["padding"] = "same"
    with pytest.raises(DocumentError, match="unknown field"):
        parse_model(doc)


def test_version_checked():
    doc = cancer_shaped_doc()
    doc["version"] = 2
    with pytest.raises(DocumentError, match="version"):
        parse_model(doc)


def test_reals_must_be_decimal_strings():
    doc = cancer_shaped_doc()
    doc["layers"][1]["gamma"] = [1.25]
    with pytest.raises(DocumentError, match="decimal string"):
        parse_model(doc)


def test_input_document_pm1_and_binary():
    vals = parse_input({"version": 1, "encoding": "pm1", "values": [1, -1, 1]}, 3)
    assert vals == [1, -1, 1]
    vals = parse_input({"version": 1, "encoding": "binary", "values": [1, 0, 1]}, 3)
    assert vals == [1, -1, 1]


def test_input_document_grid():
    grid = [[[1, 0], [0, 1]]]
    vals = parse_input({"version": 1, "encoding": "binary", "values": grid}, (1, 2, 2))
    assert vals == [1, -1, -1, 1]


def test_input_length_mismatch_names_expected_and_actual():
    with pytest.raises(DocumentError, match="expected 3 values, got 2"):
        parse_input({"version": 1, "encoding": "pm1", "values": [1, -1]}, 3)


def test_input_bad_value_for_encoding():
    with pytest.raises(DocumentError, match="not in"):
        parse_input({"version": 1, "encoding": "pm1", "values": [1, 0, 1]}, 3)
    with pytest.raises(DocumentError, match="not in"):
        parse_input({"version": 1, "encoding": "binary", "values": [1, -1, 1]}, 3)


def test_json_file_errors(tmp_path):
    with pytest.raises(DocumentError, match="no such file"):
        wire.read_model(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(DocumentError, match="invalid JSON"):
        wire.read_model(bad)


def test_magnitudes_survive_roundtrip(tmp_path):
    m = two_layer_model()
    path = tmp_path / "m.json"
    save_model(m, path)
    doc = json.loads(path.read_text())
    assert doc["layers"][0]["magnitudes"][0][0] == repr(m.layers[0].magnitudes[0][0])
    assert load_model(path).layers[0].magnitudes == m.layers[0].magnitudes
