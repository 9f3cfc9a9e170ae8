"""Document formats: model, input, and report.

One human-readable JSON schema each, versioned. Integers are exact
JSON integers; reals travel as decimal strings so batchnorm folding
sees identical values on every platform. Unknown fields are rejected.
"""

from __future__ import annotations

import json

from hebnn.model import (
    SCORE_WORDS,
    SIGN_BITS,
    BatchNorm,
    ConvLayer,
    DenseLayer,
    SignActivation,
    TernaryModel,
    flat_size,
    validate_model,
)

MODEL_VERSION = 1
INPUT_VERSION = 1
ENCODING_PM1 = "pm1"
ENCODING_BINARY = "binary"


class DocumentError(ValueError):
    """Malformed document; message names the offending location."""

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")


def _require_keys(obj, required, optional, loc):
    if not isinstance(obj, dict):
        raise DocumentError(loc, f"expected an object, got {type(obj).__name__}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise DocumentError(loc, f"missing field(s): {', '.join(missing)}")
    unknown = [k for k in obj if k not in required and k not in optional]
    if unknown:
        raise DocumentError(loc, f"unknown field(s): {', '.join(unknown)}")


def _parse_int(v, loc):
    if isinstance(v, bool) or not isinstance(v, int):
        raise DocumentError(loc, f"expected an integer, got {v!r}")
    return v


def _parse_real(v, loc):
    # decimal string preferred; a bare int is exact and accepted
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            raise DocumentError(loc, f"bad decimal string {v!r}") from None
    if isinstance(v, bool) or isinstance(v, float):
        raise DocumentError(loc, f"reals must be decimal strings, got {v!r}")
    if isinstance(v, int):
        return float(v)
    raise DocumentError(loc, f"expected a decimal string, got {v!r}")


def _real_str(x):
    return repr(float(x))


def _parse_int_list(v, loc):
    if not isinstance(v, list):
        raise DocumentError(loc, "expected a list")
    return tuple(_parse_int(e, f"{loc}[{i}]") for i, e in enumerate(v))


def _parse_real_list(v, loc):
    if not isinstance(v, list):
        raise DocumentError(loc, "expected a list")
    return tuple(_parse_real(e, f"{loc}[{i}]") for i, e in enumerate(v))


def _parse_matrix(v, loc, leaf):
    if not isinstance(v, list):
        raise DocumentError(loc, "expected a list")
    return tuple(leaf(row, f"{loc}[{i}]") for i, row in enumerate(v))


# -- model documents -----------------------------------------------------


def _parse_dense(obj, loc):
    _require_keys(obj, ("type", "weights", "bias"), ("magnitudes",), loc)
    weights = _parse_matrix(obj["weights"], f"{loc}.weights", _parse_int_list)
    bias = _parse_int_list(obj["bias"], f"{loc}.bias")
    mags = None
    if obj.get("magnitudes") is not None:
        mags = _parse_matrix(obj["magnitudes"], f"{loc}.magnitudes", _parse_real_list)
    return DenseLayer(weights, bias, magnitudes=mags)


def _parse_conv(obj, loc):
    _require_keys(obj, ("type", "filters", "bias"), ("stride", "magnitudes"), loc)

    def plane(v, l):
        return _parse_matrix(v, l, _parse_int_list)

    def filt(v, l):
        return _parse_matrix(v, l, plane)

    filters = _parse_matrix(obj["filters"], f"{loc}.filters", filt)
    bias = _parse_int_list(obj["bias"], f"{loc}.bias")
    stride = _parse_int(obj.get("stride", 1), f"{loc}.stride")
    mags = None
    if obj.get("magnitudes") is not None:

        def rplane(v, l):
            return _parse_matrix(v, l, _parse_real_list)

        def rfilt(v, l):
            return _parse_matrix(v, l, rplane)

        mags = _parse_matrix(obj["magnitudes"], f"{loc}.magnitudes", rfilt)
    return ConvLayer(filters, bias, stride=stride, magnitudes=mags)


def _parse_batchnorm(obj, loc):
    _require_keys(obj, ("type", "gamma", "beta", "mu", "sigma2"), ("epsilon",), loc)
    return BatchNorm(
        gamma=_parse_real_list(obj["gamma"], f"{loc}.gamma"),
        beta=_parse_real_list(obj["beta"], f"{loc}.beta"),
        mu=_parse_real_list(obj["mu"], f"{loc}.mu"),
        sigma2=_parse_real_list(obj["sigma2"], f"{loc}.sigma2"),
        epsilon=_parse_real(obj.get("epsilon", "0.0"), f"{loc}.epsilon"),
    )


_LAYER_PARSERS = {"dense": _parse_dense, "conv": _parse_conv, "batchnorm": _parse_batchnorm}


def parse_model(doc):
    _require_keys(doc, ("version", "input_shape", "output_mode", "layers"), (), "model")
    version = _parse_int(doc["version"], "model.version")
    if version != MODEL_VERSION:
        raise DocumentError("model.version", f"unsupported version {version}, expected {MODEL_VERSION}")
    raw_shape = doc["input_shape"]
    if isinstance(raw_shape, list):
        shape = tuple(_parse_int(v, f"model.input_shape[{i}]") for i, v in enumerate(raw_shape))
        if len(shape) != 3:
            raise DocumentError("model.input_shape", "grid shape must be [channels, height, width]")
    else:
        shape = _parse_int(raw_shape, "model.input_shape")
    mode = doc["output_mode"]
    if mode not in (SIGN_BITS, SCORE_WORDS):
        raise DocumentError("model.output_mode", f"expected '{SIGN_BITS}' or '{SCORE_WORDS}', got {mode!r}")
    if not isinstance(doc["layers"], list):
        raise DocumentError("model.layers", "expected a list")
    layers = []
    for i, obj in enumerate(doc["layers"]):
        loc = f"model.layers[{i}]"
        if not isinstance(obj, dict) or "type" not in obj:
            raise DocumentError(loc, "layer record needs a 'type' field")
        kind = obj["type"]
        if kind == "sign":
            _require_keys(obj, ("type",), (), loc)
            layers.append(SignActivation())
        elif kind in _LAYER_PARSERS:
            layers.append(_LAYER_PARSERS[kind](obj, loc))
        else:
            raise DocumentError(loc, f"unknown layer type {kind!r}")
    model = TernaryModel(input_shape=shape, layers=tuple(layers), output_mode=mode)
    return validate_model(model)


def dump_model(model):
    layers = []
    for layer in model.layers:
        if isinstance(layer, DenseLayer):
            rec = {"type": "dense", "weights": [list(r) for r in layer.weights], "bias": list(layer.bias)}
            if layer.magnitudes is not None:
                rec["magnitudes"] = [[_real_str(m) for m in r] for r in layer.magnitudes]
        elif isinstance(layer, ConvLayer):
            rec = {
                "type": "conv",
                "filters": [[[list(r) for r in plane] for plane in filt] for filt in layer.filters],
                "bias": list(layer.bias),
                "stride": layer.stride,
            }
            if layer.magnitudes is not None:
                rec["magnitudes"] = [
                    [[[_real_str(m) for m in r] for r in plane] for plane in filt] for filt in layer.magnitudes
                ]
        elif isinstance(layer, BatchNorm):
            rec = {
                "type": "batchnorm",
                "gamma": [_real_str(v) for v in layer.gamma],
                "beta": [_real_str(v) for v in layer.beta],
                "mu": [_real_str(v) for v in layer.mu],
                "sigma2": [_real_str(v) for v in layer.sigma2],
                "epsilon": _real_str(layer.epsilon),
            }
        else:
            rec = {"type": "sign"}
        layers.append(rec)
    shape = model.input_shape
    return {
        "version": MODEL_VERSION,
        "input_shape": list(shape) if not isinstance(shape, int) else shape,
        "output_mode": model.output_mode,
        "layers": layers,
    }


# -- input documents -----------------------------------------------------


def _flatten_grid(values, shape, loc):
    c, h, w = shape
    if not isinstance(values, list) or len(values) != c:
        raise DocumentError(loc, f"expected {c} channel planes")
    flat = []
    for ci, plane in enumerate(values):
        if not isinstance(plane, list) or len(plane) != h:
            raise DocumentError(f"{loc}[{ci}]", f"expected {h} rows")
        for yi, row in enumerate(plane):
            if not isinstance(row, list) or len(row) != w:
                raise DocumentError(f"{loc}[{ci}][{yi}]", f"expected {w} values")
            flat.extend(_parse_int(v, f"{loc}[{ci}][{yi}][{xi}]") for xi, v in enumerate(row))
    return flat


def parse_input(doc, input_shape):
    """Parse an input document into a flat +-1 vector for the model."""
    _require_keys(doc, ("version", "encoding", "values"), (), "input")
    version = _parse_int(doc["version"], "input.version")
    if version != INPUT_VERSION:
        raise DocumentError("input.version", f"unsupported version {version}, expected {INPUT_VERSION}")
    encoding = doc["encoding"]
    if encoding not in (ENCODING_PM1, ENCODING_BINARY):
        raise DocumentError("input.encoding", f"expected '{ENCODING_PM1}' or '{ENCODING_BINARY}', got {encoding!r}")
    values = doc["values"]
    if values and isinstance(values, list) and isinstance(values[0], list):
        if isinstance(input_shape, int):
            raise DocumentError("input.values", "nested grid given but the model takes a flat vector")
        flat = _flatten_grid(values, input_shape, "input.values")
    else:
        flat = [_parse_int(v, f"input.values[{i}]") for i, v in enumerate(values)]
    expected = flat_size(input_shape)
    if len(flat) != expected:
        raise DocumentError("input.values", f"expected {expected} values, got {len(flat)}")
    domain = (-1, 1) if encoding == ENCODING_PM1 else (0, 1)
    out = []
    for i, v in enumerate(flat):
        if v not in domain:
            raise DocumentError(f"input.values[{i}]", f"value {v} not in {set(domain)}")
        out.append(v if encoding == ENCODING_PM1 else (1 if v else -1))
    return out


def dump_input(values, encoding=ENCODING_PM1):
    if encoding == ENCODING_PM1:
        out = list(values)
    else:
        out = [1 if v > 0 else 0 for v in values]
    return {"version": INPUT_VERSION, "encoding": encoding, "values": out}


# -- file helpers ----------------------------------------------------------


def to_json(doc):
    return json.dumps(doc, indent=2) + "\n"


def read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DocumentError(what, f"no such file: {path}") from None
    except json.JSONDecodeError as e:
        raise DocumentError(what, f"invalid JSON in {path}: {e}") from None


def read_model(path):
    return parse_model(read_json(path, "model"))


def write_model(model, path):
    with open(path, "w") as fh:
        fh.write(to_json(dump_model(model)))


def read_input(path, input_shape):
    return parse_input(read_json(path, "input"), input_shape)
