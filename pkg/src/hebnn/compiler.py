"""Lower ternary network layers to gate circuits over encrypted bits.

Per output unit the compiler picks one of two exact evaluation methods:

direct
    XNOR the encrypted input bits with the plaintext weights (free:
    identity or a free NOT per bit), popcount the support with a reduce
    tree, and threshold-test the sum.

plus_one
    Sum only the cheaper weight side plus, for ternary rows, the
    zero-weight positions, and combine them with the layer's shared
    full-input sum. With S+ the sum of input bits under +1 weights,
    S0 the sum under zero weights, Sall the shared full sum, P/N the
    +1/-1 weight counts and tau the folded integer threshold, the unit
    fires iff (plus polarity, P <= N):

        4*S+ + 2*S0 - 2*Sall >= tau + P - N

    or (minus polarity, N < P, with S- summing negated bits under -1
    weights):

        4*S- + 2*Sall - 2*S0 >= tau + P + 3*N

    Both identities are verified against brute force in the tests. The
    shared sum is computed once per layer (once per window position for
    convolutions) no matter how many output units consume it.

The choice is made per row by predicted encrypted additions:
min(P, N) + #zeros + the combine word width, against the direct cost of
summing the whole support.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

from hebnn.backend import GateStats
from hebnn.circuits import (
    CipherWord,
    batcher_sort_desc,
    compare_ge_const,
    compare_signed_ge_const,
    pad_word,
    rc_add,
    rc_sub,
    reduce_tree_sum,
    shift_mul_pow2,
    sign_from_sorted,
    trivial_word,
)
from hebnn.model import (
    ConvLayer,
    DenseLayer,
    FoldedThreshold,
    flat_filter,
    flat_size,
    model_blocks,
    block_thresholds,
    window_indices,
)

COMPARATOR_REDUCE = "reduce"
COMPARATOR_SORT = "sort"


@dataclass(frozen=True)
class EvalOptions:
    plus_one: bool = True
    comparator: str = COMPARATOR_REDUCE
    cache_shared_sums: bool = True
    stride: int | None = None  # overrides every conv layer's stride when set

    def __post_init__(self):
        if self.comparator not in (COMPARATOR_REDUCE, COMPARATOR_SORT):
            raise ValueError(f"comparator must be 'reduce' or 'sort', got {self.comparator!r}")


@dataclass(frozen=True)
class RowPlan:
    """Compilation plan for one output unit's ternary weight row."""

    weights: tuple
    support: tuple  # indices with w != 0
    plus_count: int
    minus_count: int
    zero_indices: tuple
    polarity: str  # "plus" | "minus"
    sum_indices: tuple  # the cheaper side, len == min(P, N)
    method: str  # "direct" | "plus_one"
    predicted_adds: int
    threshold: FoldedThreshold | None = None

    @property
    def s(self):
        return len(self.support)


def plan_row(weights, threshold=None, options=EvalOptions()):
    """Choose polarity and evaluation method for one weight row."""
    weights = tuple(weights)
    support = tuple(i for i, w in enumerate(weights) if w != 0)
    zeros = tuple(i for i, w in enumerate(weights) if w == 0)
    plus = tuple(i for i, w in enumerate(weights) if w == 1)
    minus = tuple(i for i, w in enumerate(weights) if w == -1)
    p, n = len(plus), len(minus)
    polarity = "plus" if p <= n else "minus"
    sum_indices = plus if polarity == "plus" else minus
    s = len(support)
    # combine overhead: width of the signed subtraction word
    combine = (math.ceil(math.log2(4 * s + 1)) + 1) if s else 0
    plus_one_adds = min(p, n) + len(zeros) + combine
    if options.plus_one and s > 0 and plus_one_adds < s:
        method, predicted = "plus_one", plus_one_adds
    else:
        method, predicted = "direct", s
    return RowPlan(
        weights=weights,
        support=support,
        plus_count=p,
        minus_count=n,
        zero_indices=zeros,
        polarity=polarity,
        sum_indices=sum_indices,
        method=method,
        predicted_adds=predicted,
        threshold=threshold,
    )


# -- shared sums ----------------------------------------------------------


class SharedSumCache:
    """Reduce-tree sums keyed by (layer, index set), each built once.

    First-build races are resolved under a lock so the gate cost of a
    shared sum is charged exactly once.
    """

    def __init__(self):
        self._sums = {}
        self._lock = threading.Lock()

    def get_or_build(self, layer_key, indices, build):
        key = (layer_key, frozenset(indices))
        with self._lock:
            word = self._sums.get(key)
            if word is None:
                word = build()
                self._sums[key] = word
            return word


def shared_input_sum(ctx, x_bits, indices, cache=None, layer_key=""):
    """Popcount over a declared index set of the encrypted input;
    cached per (layer, index set) so repeats cost no further gates."""
    indices = tuple(indices)
    if not indices:
        raise ValueError("empty index set")

    def build():
        return reduce_tree_sum([x_bits[i] for i in indices])

    if cache is None:
        return build()
    return cache.get_or_build(layer_key, indices, build)


# -- word helpers -----------------------------------------------------------


def _add2(a, b):
    k = max(a.width, b.width)
    return rc_add(pad_word(a, k), pad_word(b, k))


def _sub2(a, b):
    k = max(a.width, b.width)
    return rc_sub(pad_word(a, k), pad_word(b, k))


def _sub_const(word, const):
    """word - plaintext integer, as a signed word; the constant rides
    along as a trivial two's-complement word."""
    ctx = word.context
    k = max(word.width, const.bit_length() + 1 if const else 1)
    return _sub2(pad_word(word, k), trivial_word(ctx, const, k, signed=True))


def _ceil_half(v):
    return -(-v // 2)


def _apply_flip(ctx, bit, flip):
    return ctx.g_not(bit) if flip else bit


# -- neuron circuits ---------------------------------------------------------


def _xnor_bits(ctx, bits, plan):
    """Per-element product with plaintext weights: identity for +1,
    free NOT for -1; zero weights are skipped."""
    return [bits[i] if plan.weights[i] == 1 else ctx.g_not(bits[i]) for i in plan.support]


def neuron_direct(ctx, bits, plan, options=EvalOptions()):
    """Activation bit via XNOR + popcount + threshold. The comparator is
    selectable: reduce tree + MUX-chain compare, or sorting network +
    positional select."""
    thr = plan.threshold
    if thr.mode == "constant":
        return ctx.trivial_const(thr.bit)
    if plan.s == 0:
        fired = 0 >= thr.tau
        if thr.flip:
            fired = not fired
        return ctx.trivial_const(1 if fired else 0)
    matched = _xnor_bits(ctx, bits, plan)
    m = _ceil_half(plan.s + thr.tau)
    if options.comparator == COMPARATOR_SORT:
        out = sign_from_sorted(batcher_sort_desc(matched), m)
    else:
        out = compare_ge_const(reduce_tree_sum(matched), m)
    return _apply_flip(ctx, out, thr.flip)


def neuron_plus_one(ctx, bits, plan, shared_word, options=EvalOptions()):
    """Activation bit via the sparsified identity and the shared sum."""
    thr = plan.threshold
    if thr.mode == "constant":
        return ctx.trivial_const(thr.bit)
    if shared_word is None:
        raise ValueError("plus_one neuron requires the shared input sum")
    side = None
    if plan.sum_indices:
        if plan.polarity == "plus":
            side = reduce_tree_sum([bits[i] for i in plan.sum_indices])
        else:
            side = reduce_tree_sum([ctx.g_not(bits[i]) for i in plan.sum_indices])
    zero = reduce_tree_sum([bits[i] for i in plan.zero_indices]) if plan.zero_indices else None

    p, n, tau = plan.plus_count, plan.minus_count, thr.tau
    if plan.polarity == "plus":
        c = tau + p - n
        pos = [shift_mul_pow2(w, sh) for w, sh in ((side, 2), (zero, 1)) if w is not None]
        neg = shift_mul_pow2(shared_word, 1)
        if pos:
            acc = pos[0] if len(pos) == 1 else _add2(pos[0], pos[1])
            out = compare_signed_ge_const(_sub2(acc, neg), c)
        else:
            # all-minus row: -2*Sall >= c  <=>  not (2*Sall >= -c + 1)
            out = ctx.g_not(compare_ge_const(neg, -c + 1))
    else:
        c = tau + p + 3 * n
        acc = shift_mul_pow2(shared_word, 1)
        if side is not None:
            acc = _add2(shift_mul_pow2(side, 2), acc)
        if zero is not None:
            out = compare_signed_ge_const(_sub2(acc, shift_mul_pow2(zero, 1)), c)
        else:
            out = compare_ge_const(acc, c)
    return _apply_flip(ctx, out, thr.flip)


def _score_width(bias):
    return max(1, abs(bias).bit_length() + 1)


def neuron_score_word(ctx, bits, plan, bias, shared_word, options=EvalOptions()):
    """Signed pre-activation word whose decrypted value is w.x + bias."""
    if plan.s == 0:
        return trivial_word(ctx, bias, _score_width(bias), signed=True)
    if plan.method == "plus_one" and shared_word is not None:
        side = None
        if plan.sum_indices:
            side_bits = (
                [bits[i] for i in plan.sum_indices]
                if plan.polarity == "plus"
                else [ctx.g_not(bits[i]) for i in plan.sum_indices]
            )
            side = reduce_tree_sum(side_bits)
        zero = reduce_tree_sum([bits[i] for i in plan.zero_indices]) if plan.zero_indices else None
        if plan.polarity == "plus":
            # w.x + b = 4*S+ + 2*S0 - 2*Sall - (P - N - b)
            pos = [shift_mul_pow2(w, sh) for w, sh in ((side, 2), (zero, 1)) if w is not None]
            const = plan.plus_count - plan.minus_count - bias
            neg = shift_mul_pow2(shared_word, 1)
            if pos:
                acc = pos[0] if len(pos) == 1 else _add2(pos[0], pos[1])
                word = _sub2(acc, neg)
            else:
                word = _sub2(trivial_word(ctx, 0, neg.width), neg)
        else:
            # w.x + b = 4*S- + 2*Sall - 2*S0 - (P + 3N - b)
            acc = shift_mul_pow2(shared_word, 1)
            if side is not None:
                acc = _add2(shift_mul_pow2(side, 2), acc)
            const = plan.plus_count + 3 * plan.minus_count - bias
            word = _sub2(acc, shift_mul_pow2(zero, 1)) if zero is not None else acc
    else:
        # w.x + b = 2*Smatch - (s - b)
        word = shift_mul_pow2(reduce_tree_sum(_xnor_bits(ctx, bits, plan)), 1)
        const = plan.s - bias
    return _sub_const(word, const)


# -- layers -------------------------------------------------------------------


@dataclass
class LayerScopeStats:
    """Gate stats for one layer: the shared-sum scope plus one scope per
    output unit."""

    label: str
    shared: GateStats
    outputs: list = field(default_factory=list)

    @property
    def total(self):
        t = self.shared.total
        return t + sum(o.total for o in self.outputs)


def _layer_plans(linear, thrs, options):
    if isinstance(linear, DenseLayer):
        rows = linear.weights
    else:
        rows = [tuple(flat_filter(f)) for f in linear.filters]
    return [plan_row(row, thrs[i] if thrs is not None else None, options) for i, row in enumerate(rows)]


def dense_layer(ctx, x_bits, block, options=EvalOptions(), cache=None, label="dense"):
    """Evaluate one dense block; returns (outputs, LayerScopeStats)."""
    linear = block.linear
    d = flat_size(block.in_shape)
    if len(x_bits) != d:
        raise ValueError(f"{label}: got {len(x_bits)} input bits, expected {d}")
    thrs = block_thresholds(block) if block.emits == "bits" else None
    plans = _layer_plans(linear, thrs, options)
    needs_shared = any(p.method == "plus_one" for p in plans)

    # With caching on, the full-input sum is built once in the layer's
    # shared scope; with it off every output unit pays for its own copy.
    ctx.begin_scope(f"{label}/shared")
    shared = None
    if needs_shared and options.cache_shared_sums:
        shared = shared_input_sum(ctx, x_bits, range(d), cache=cache, layer_key=label)
    stats = LayerScopeStats(label=label, shared=ctx.end_scope())

    outputs = []
    for j, plan in enumerate(plans):
        ctx.begin_scope(f"{label}/out{j}")
        word = shared
        if word is None and plan.method == "plus_one":
            word = shared_input_sum(ctx, x_bits, range(d))
        if block.emits == "words":
            out = neuron_score_word(ctx, x_bits, plan, linear.bias[j], word, options)
        elif plan.method == "plus_one":
            out = neuron_plus_one(ctx, x_bits, plan, word, options)
        else:
            out = neuron_direct(ctx, x_bits, plan, options)
        stats.outputs.append(ctx.end_scope())
        outputs.append(out)
    return outputs, stats


def conv_layer(ctx, x_bits, block, options=EvalOptions(), cache=None, label="conv"):
    """Evaluate one conv block (valid padding); output units are laid
    out channel-major, then row-major over positions. The per-window
    shared sum is built once and reused by every output channel."""
    linear = block.linear
    if len(x_bits) != flat_size(block.in_shape):
        raise ValueError(f"{label}: got {len(x_bits)} input bits, expected {flat_size(block.in_shape)}")
    stride = linear.stride if options.stride is None else options.stride
    oc, oh, ow = block.out_shape
    kernel = linear.kernel
    thrs = block_thresholds(block) if block.emits == "bits" else None
    plans = _layer_plans(linear, thrs, options)
    windows = {
        (oy, ox): window_indices(block.in_shape, kernel, stride, oy, ox)
        for oy in range(oh)
        for ox in range(ow)
    }

    needs_shared = any(p.method == "plus_one" for p in plans)
    ctx.begin_scope(f"{label}/shared")
    shared = {}
    if needs_shared and options.cache_shared_sums:
        for (oy, ox), win in windows.items():
            shared[(oy, ox)] = shared_input_sum(ctx, x_bits, win, cache=cache, layer_key=label)
    stats = LayerScopeStats(label=label, shared=ctx.end_scope())

    outputs = []
    for co in range(oc):
        plan = plans[co]
        for oy in range(oh):
            for ox in range(ow):
                win_bits = [x_bits[i] for i in windows[(oy, ox)]]
                ctx.begin_scope(f"{label}/out{co},{oy},{ox}")
                word = shared.get((oy, ox))
                if word is None and plan.method == "plus_one":
                    word = shared_input_sum(ctx, x_bits, windows[(oy, ox)])
                if block.emits == "words":
                    out = neuron_score_word(ctx, win_bits, plan, linear.bias[co], word, options)
                elif plan.method == "plus_one":
                    out = neuron_plus_one(ctx, win_bits, plan, word, options)
                else:
                    out = neuron_direct(ctx, win_bits, plan, options)
                stats.outputs.append(ctx.end_scope())
                outputs.append(out)
    return outputs, stats


# -- whole model ----------------------------------------------------------------


@dataclass
class EvalStats:
    layers: list = field(default_factory=list)

    @property
    def total_gates(self):
        return sum(ls.total for ls in self.layers)


def encrypt_input(ctx, values):
    """Encrypt a +-1 vector as stored-binary bits (-1 -> 0)."""
    bits = []
    for i, v in enumerate(values):
        if v not in (-1, 1):
            raise ValueError(f"input[{i}]: value {v!r} not in {{-1, +1}}")
        bits.append(ctx.encrypt(1 if v == 1 else 0))
    return bits


def eval_model(ctx, model, x_bits, options=EvalOptions()):
    """Lower and evaluate the whole model on encrypted input bits.

    Returns (outputs, EvalStats); outputs are activation CipherBits, or
    CipherWords in score_words mode. Decrypted outputs equal the
    plaintext oracle exactly.
    """
    d = flat_size(model.input_shape)
    if len(x_bits) != d:
        raise ValueError(f"input: got {len(x_bits)} bits, expected {d}")
    cache = SharedSumCache() if options.cache_shared_sums else None
    stats = EvalStats()
    vals = list(x_bits)
    for bi, block in enumerate(model_blocks(model, stride=options.stride)):
        if isinstance(block.linear, ConvLayer):
            label = f"layer{bi}/conv"
            vals, ls = conv_layer(ctx, vals, block, options, cache, label)
        else:
            label = f"layer{bi}/dense"
            vals, ls = dense_layer(ctx, vals, block, options, cache, label)
        stats.layers.append(ls)
    return vals, stats


def decrypt_output(ctx, outputs):
    """Decrypt eval_model outputs: sign bits to +-1, words to ints."""
    from hebnn.circuits import decrypt_word

    if outputs and isinstance(outputs[0], CipherWord):
        return [decrypt_word(w) for w in outputs]
    return [1 if ctx.decrypt(b) else -1 for b in outputs]
