"""Ternary neural network data model and exact plaintext oracle.

Weights live in {-1, 0, +1}, activations in {-1, +1} (non-standard
binary; stored binary maps -1 to 0). Batch normalization never survives
to circuit evaluation: it folds into an integer threshold test on the
integer pre-activation, so the oracle and the compiled circuit can both
work in exact integer arithmetic. sign(0) = +1 throughout.

Models are immutable; every transformation returns a new model.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

SIGN_BITS = "sign_bits"
SCORE_WORDS = "score_words"


class ModelValidationError(ValueError):
    """Invalid model structure; message names the offending location."""

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")


@dataclass(frozen=True)
class DenseLayer:
    weights: tuple  # p rows of d ternary ints
    bias: tuple  # p ints
    magnitudes: tuple | None = None  # optional pre-binarization |w|, p x d

    @property
    def out_units(self):
        return len(self.weights)

    @property
    def in_units(self):
        return len(self.weights[0]) if self.weights else 0


@dataclass(frozen=True)
class ConvLayer:
    filters: tuple  # [out][in][kh][kw] ternary ints
    bias: tuple  # per output channel
    stride: int = 1
    magnitudes: tuple | None = None

    @property
    def out_channels(self):
        return len(self.filters)

    @property
    def in_channels(self):
        return len(self.filters[0]) if self.filters else 0

    @property
    def kernel(self):
        f = self.filters[0][0]
        return len(f), len(f[0])


@dataclass(frozen=True)
class BatchNorm:
    gamma: tuple
    beta: tuple
    mu: tuple
    sigma2: tuple
    epsilon: float = 0.0

    @property
    def channels(self):
        return len(self.gamma)


@dataclass(frozen=True)
class SignActivation:
    pass


@dataclass(frozen=True)
class TernaryModel:
    input_shape: object  # flat length d, or (channels, height, width)
    layers: tuple
    output_mode: str = SIGN_BITS


@dataclass(frozen=True)
class FoldedThreshold:
    """Integer test replacing batchnorm + sign on one output unit.

    compare mode: unit fires iff pre-activation z >= tau, negated when
    flip is set. constant mode: the unit's output bit is fixed.
    """

    mode: str  # "compare" | "constant"
    tau: int = 0
    flip: bool = False
    bit: int = 0


def flat_size(shape):
    if isinstance(shape, int):
        return shape
    c, h, w = shape
    return c * h * w


def conv_output_shape(layer, in_shape, stride=None):
    c, h, w = in_shape
    kh, kw = layer.kernel
    s = layer.stride if stride is None else stride
    if kh > h or kw > w:
        raise ModelValidationError("conv", f"kernel {kh}x{kw} larger than input {h}x{w}")
    return (layer.out_channels, (h - kh) // s + 1, (w - kw) // s + 1)


# -- validation ----------------------------------------------------------


def _check_ternary(values, location):
    for idx, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, int) or v not in (-1, 0, 1):
            raise ModelValidationError(f"{location}[{idx}]", f"weight {v!r} not in {{-1, 0, 1}}")


def _check_int_vector(values, location):
    for idx, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ModelValidationError(f"{location}[{idx}]", f"expected integer, got {v!r}")


def validate_model(model):
    """Check shape composition, weight domains, and layer ordering.

    Structure must be a sequence of dense/conv blocks, each optionally
    followed by batchnorm and then sign. Batchnorm may trail the model
    only in sign_bits mode (an implicit final sign applies); score_words
    mode must end on a bare dense/conv layer.
    """
    if model.output_mode not in (SIGN_BITS, SCORE_WORDS):
        raise ModelValidationError("output_mode", f"unknown mode {model.output_mode!r}")
    if isinstance(model.input_shape, int):
        if model.input_shape < 1:
            raise ModelValidationError("input_shape", "must be positive")
    else:
        shape = tuple(model.input_shape)
        if len(shape) != 3 or any(not isinstance(v, int) or v < 1 for v in shape):
            raise ModelValidationError("input_shape", f"expected flat length or (c, h, w), got {model.input_shape!r}")
    if not model.layers:
        raise ModelValidationError("layers", "model has no layers")

    shape = model.input_shape if isinstance(model.input_shape, int) else tuple(model.input_shape)
    prev = None
    for li, layer in enumerate(model.layers):
        loc = f"layers[{li}]"
        if isinstance(layer, DenseLayer):
            if prev is not None and not isinstance(prev, SignActivation):
                raise ModelValidationError(loc, "dense layer must be first or follow a sign activation")
            if not layer.weights:
                raise ModelValidationError(f"{loc}.weights", "empty weight matrix")
            d = flat_size(shape)
            for ri, row in enumerate(layer.weights):
                if len(row) != d:
                    raise ModelValidationError(f"{loc}.weights[{ri}]", f"row length {len(row)} != input size {d}")
                _check_ternary(row, f"{loc}.weights[{ri}]")
            if len(layer.bias) != layer.out_units:
                raise ModelValidationError(f"{loc}.bias", f"length {len(layer.bias)} != {layer.out_units} units")
            _check_int_vector(layer.bias, f"{loc}.bias")
            if layer.magnitudes is not None:
                if len(layer.magnitudes) != layer.out_units or any(len(r) != d for r in layer.magnitudes):
                    raise ModelValidationError(f"{loc}.magnitudes", "shape does not match weights")
            shape = layer.out_units
        elif isinstance(layer, ConvLayer):
            if prev is not None and not isinstance(prev, SignActivation):
                raise ModelValidationError(loc, "conv layer must be first or follow a sign activation")
            if isinstance(shape, int):
                raise ModelValidationError(loc, "conv layer needs a (c, h, w) input, got a flat vector")
            if layer.stride < 1:
                raise ModelValidationError(f"{loc}.stride", "must be >= 1")
            if not layer.filters or not layer.filters[0]:
                raise ModelValidationError(f"{loc}.filters", "empty filter bank")
            kh, kw = layer.kernel
            for oi, filt in enumerate(layer.filters):
                if len(filt) != shape[0]:
                    raise ModelValidationError(f"{loc}.filters[{oi}]", f"{len(filt)} input channels != {shape[0]}")
                for ci, plane in enumerate(filt):
                    if len(plane) != kh or any(len(r) != kw for r in plane):
                        raise ModelValidationError(f"{loc}.filters[{oi}][{ci}]", "ragged kernel")
                    for yi, row in enumerate(plane):
                        _check_ternary(row, f"{loc}.filters[{oi}][{ci}][{yi}]")
            if len(layer.bias) != layer.out_channels:
                raise ModelValidationError(f"{loc}.bias", f"length {len(layer.bias)} != {layer.out_channels} channels")
            _check_int_vector(layer.bias, f"{loc}.bias")
            try:
                shape = conv_output_shape(layer, shape)
            except ModelValidationError as e:
                raise ModelValidationError(loc, str(e)) from None
        elif isinstance(layer, BatchNorm):
            if not isinstance(prev, (DenseLayer, ConvLayer)):
                raise ModelValidationError(loc, "batchnorm may only follow a dense or conv layer")
            channels = shape if isinstance(shape, int) else shape[0]
            for name in ("gamma", "beta", "mu", "sigma2"):
                vec = getattr(layer, name)
                if len(vec) != channels:
                    raise ModelValidationError(f"{loc}.{name}", f"length {len(vec)} != {channels} channels")
            if layer.epsilon < 0:
                raise ModelValidationError(f"{loc}.epsilon", "must be >= 0")
            for ci, s2 in enumerate(layer.sigma2):
                if s2 + layer.epsilon <= 0:
                    raise ModelValidationError(f"{loc}.sigma2[{ci}]", "sigma2 + epsilon must be positive")
        elif isinstance(layer, SignActivation):
            if not isinstance(prev, (DenseLayer, ConvLayer, BatchNorm)):
                raise ModelValidationError(loc, "sign may only follow dense, conv, or batchnorm")
        else:
            raise ModelValidationError(loc, f"unknown layer type {type(layer).__name__}")
        prev = layer

    last = model.layers[-1]
    if model.output_mode == SCORE_WORDS and not isinstance(last, (DenseLayer, ConvLayer)):
        raise ModelValidationError(
            f"layers[{len(model.layers) - 1}]",
            "score_words mode requires the model to end on a dense or conv layer",
        )
    if isinstance(last, BatchNorm) and model.output_mode != SIGN_BITS:
        raise ModelValidationError(f"layers[{len(model.layers) - 1}]", "trailing batchnorm needs sign_bits mode")
    return model


# -- block view ----------------------------------------------------------


@dataclass(frozen=True)
class Block:
    """One dense/conv layer with its folded activation."""

    linear: object
    bn: BatchNorm | None
    explicit_sign: bool
    emits: str  # "bits" | "words"
    in_shape: object
    out_shape: object


def model_blocks(model, stride=None):
    """Group a validated model's layers into linear+bn+sign blocks and
    track shapes. In sign_bits mode a missing final sign is implicit."""
    blocks = []
    shape = model.input_shape if isinstance(model.input_shape, int) else tuple(model.input_shape)
    i = 0
    layers = model.layers
    while i < len(layers):
        linear = layers[i]
        in_shape = shape
        if isinstance(linear, DenseLayer):
            shape = linear.out_units
        else:
            shape = conv_output_shape(linear, shape, stride=stride)
        i += 1
        bn = None
        if i < len(layers) and isinstance(layers[i], BatchNorm):
            bn = layers[i]
            i += 1
        explicit_sign = False
        if i < len(layers) and isinstance(layers[i], SignActivation):
            explicit_sign = True
            i += 1
        is_last = i == len(layers)
        emits = "words" if (is_last and model.output_mode == SCORE_WORDS) else "bits"
        blocks.append(Block(linear, bn, explicit_sign, emits, in_shape, shape))
    return blocks


# -- batchnorm folding -----------------------------------------------------


def fold_batchnorm(bias, bn):
    """Fold per-channel batchnorm + sign into integer threshold tests.

    For z the integer pre-activation without bias, b the bias, and
    normalization gamma * (z + b - mu) / sqrt(sigma2 + eps) + beta, the
    sign test becomes z >= ceil(mu - beta * sqrt(sigma2 + eps) / gamma - b)
    when gamma > 0, flips direction when gamma < 0, and degenerates to
    the constant sign(beta) when gamma = 0.
    """
    if len(bias) != bn.channels:
        raise ModelValidationError("batchnorm", f"{len(bias)} biases != {bn.channels} channels")
    out = []
    for b, g, be, mu, s2 in zip(bias, bn.gamma, bn.beta, bn.mu, bn.sigma2):
        spread = math.sqrt(s2 + bn.epsilon)
        if g > 0:
            out.append(FoldedThreshold("compare", tau=math.ceil(mu - be * spread / g - b)))
        elif g < 0:
            cutoff = mu - be * spread / g - b
            out.append(FoldedThreshold("compare", tau=math.floor(cutoff) + 1, flip=True))
        else:
            out.append(FoldedThreshold("constant", bit=1 if be >= 0 else 0))
    return out


def block_thresholds(block):
    """Per-unit integer tests for a bits-emitting block."""
    bias = block.linear.bias
    if block.bn is not None:
        return fold_batchnorm(bias, block.bn)
    return [FoldedThreshold("compare", tau=-b) for b in bias]


def _fold_unit(weights_row, thr):
    """Rewrite one unit's (weights, bias) so a plain sign test matches a
    folded threshold: flipped tests negate the row, constants zero it."""
    if thr.mode == "constant":
        return tuple(0 for _ in weights_row), (0 if thr.bit else -1)
    if thr.flip:
        return tuple(-w for w in weights_row), thr.tau - 1
    return tuple(weights_row), -thr.tau


def fold_model(model):
    """Absorb every batchnorm into the preceding layer's weights/bias.

    The returned model has no batchnorm layers and identical oracle
    outputs; sign layers are preserved as they appeared.
    """
    validate_model(model)
    new_layers = []
    for block in model_blocks(model):
        linear = block.linear
        if block.bn is None:
            new_layers.append(linear)
        elif block.emits == "bits":
            thrs = fold_batchnorm(linear.bias, block.bn)
            if isinstance(linear, DenseLayer):
                rows, bias = zip(*(_fold_unit(r, t) for r, t in zip(linear.weights, thrs)))
                new_layers.append(DenseLayer(tuple(rows), tuple(bias), magnitudes=linear.magnitudes))
            else:
                filters, bias = [], []
                for filt, t in zip(linear.filters, thrs):
                    if t.mode == "constant":
                        filters.append(tuple(tuple(tuple(0 for _ in row) for row in plane) for plane in filt))
                        bias.append(0 if t.bit else -1)
                    elif t.flip:
                        filters.append(tuple(tuple(tuple(-w for w in row) for row in plane) for plane in filt))
                        bias.append(t.tau - 1)
                    else:
                        filters.append(filt)
                        bias.append(-t.tau)
                new_layers.append(
                    ConvLayer(tuple(filters), tuple(bias), stride=linear.stride, magnitudes=linear.magnitudes)
                )
        if block.explicit_sign:
            new_layers.append(SignActivation())
    folded = replace(model, layers=tuple(new_layers))
    return validate_model(folded)


# -- ternarization ---------------------------------------------------------


def _drop_positions(flat_weights, flat_mags, n_drop, rng):
    nonzero = [i for i, w in enumerate(flat_weights) if w != 0]
    if n_drop <= 0:
        return set()
    if flat_mags is not None:
        ranked = sorted(nonzero, key=lambda i: (abs(flat_mags[i]), i))
        return set(ranked[:n_drop])
    return set(rng.sample(nonzero, n_drop))


def ternarize(model, drop_fraction, seed=0):
    """Zero out a fraction of each linear layer's nonzero weights.

    Weights with the smallest stored pre-binarization magnitudes go
    first; without magnitudes the choice is uniform at random but
    deterministic for a given seed. Exactly ceil((1 - f) * nonzero)
    weights per layer survive.
    """
    if not 0 <= drop_fraction <= 1:
        raise ValueError(f"drop fraction must be in [0, 1], got {drop_fraction}")
    rng = random.Random(seed)
    new_layers = []
    for layer in model.layers:
        if isinstance(layer, DenseLayer):
            flat = [w for row in layer.weights for w in row]
            mags = [m for row in layer.magnitudes for m in row] if layer.magnitudes is not None else None
            nz = sum(1 for w in flat if w != 0)
            n_drop = nz - math.ceil((1 - drop_fraction) * nz)
            dropped = _drop_positions(flat, mags, n_drop, rng)
            d = layer.in_units
            rows = tuple(
                tuple(0 if ri * d + ci in dropped else w for ci, w in enumerate(row))
                for ri, row in enumerate(layer.weights)
            )
            new_layers.append(replace(layer, weights=rows))
        elif isinstance(layer, ConvLayer):
            flat, index = [], {}
            for oi, filt in enumerate(layer.filters):
                for ci, plane in enumerate(filt):
                    for yi, row in enumerate(plane):
                        for xi, w in enumerate(row):
                            index[(oi, ci, yi, xi)] = len(flat)
                            flat.append(w)
            mags = None
            if layer.magnitudes is not None:
                mags = [
                    m for filt in layer.magnitudes for plane in filt for row in plane for m in row
                ]
            nz = sum(1 for w in flat if w != 0)
            n_drop = nz - math.ceil((1 - drop_fraction) * nz)
            dropped = _drop_positions(flat, mags, n_drop, rng)
            filters = tuple(
                tuple(
                    tuple(
                        tuple(0 if index[(oi, ci, yi, xi)] in dropped else w for xi, w in enumerate(row))
                        for yi, row in enumerate(plane)
                    )
                    for ci, plane in enumerate(filt)
                )
                for oi, filt in enumerate(layer.filters)
            )
            new_layers.append(replace(layer, filters=filters))
        else:
            new_layers.append(layer)
    return replace(model, layers=tuple(new_layers))


# -- exact oracle -----------------------------------------------------------


def window_indices(in_shape, kernel, stride, oy, ox):
    """Flat input indices of one conv window, channel-major row-major."""
    c, h, w = in_shape
    kh, kw = kernel
    idx = []
    for ci in range(c):
        for ky in range(kh):
            for kx in range(kw):
                idx.append((ci * h + oy * stride + ky) * w + ox * stride + kx)
    return idx


def flat_filter(filt):
    return [w for plane in filt for row in plane for w in row]


def _apply_threshold(z, thr):
    if thr.mode == "constant":
        return 1 if thr.bit else -1
    fired = z >= thr.tau
    if thr.flip:
        fired = not fired
    return 1 if fired else -1


def oracle_eval(model, x):
    """Exact integer forward pass on plaintext +-1 inputs.

    Returns a list of +-1 sign bits, or integer scores (pre-activation
    plus bias of the final layer) in score_words mode. This is the
    reference every compiled circuit must match bit for bit.
    """
    vals = list(x)
    d = flat_size(model.input_shape)
    if len(vals) != d:
        raise ModelValidationError("input", f"length {len(vals)} != expected {d}")
    for i, v in enumerate(vals):
        if v not in (-1, 1):
            raise ModelValidationError(f"input[{i}]", f"value {v!r} not in {{-1, +1}}")

    for block in model_blocks(model):
        linear = block.linear
        if isinstance(linear, DenseLayer):
            z = [sum(w * v for w, v in zip(row, vals)) for row in linear.weights]
            unit_bias = list(linear.bias)
            unit_thrs = None if block.emits == "words" else block_thresholds(block)
        else:
            oc, oh, ow = block.out_shape
            kernel = linear.kernel
            stride = linear.stride
            z, unit_bias, unit_thrs = [], [], []
            thrs = None if block.emits == "words" else block_thresholds(block)
            for co in range(oc):
                fw = flat_filter(linear.filters[co])
                for oy in range(oh):
                    for ox in range(ow):
                        win = window_indices(block.in_shape, kernel, stride, oy, ox)
                        z.append(sum(w * vals[i] for w, i in zip(fw, win)))
                        unit_bias.append(linear.bias[co])
                        if thrs is not None:
                            unit_thrs.append(thrs[co])
        if block.emits == "words":
            return [zj + bj for zj, bj in zip(z, unit_bias)]
        vals = [_apply_threshold(zj, t) for zj, t in zip(z, unit_thrs)]
    return vals


# -- wire format entry points ------------------------------------------------


def load_model(path):
    from hebnn import wire

    return wire.read_model(path)


def save_model(model, path):
    from hebnn import wire

    wire.write_model(model, path)
