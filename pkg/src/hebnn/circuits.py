"""Data-oblivious combinational circuits on encrypted bits.

Words are little-endian sequences of ``CipherBit`` (LSB first), either
unsigned or two's-complement. Gate costs are fixed by construction:

* half adder: 1 XOR + 1 AND = 2 gates
* k-bit ripple-carry add: k full adders, each 2 XOR + 2 AND + 1 OR = 5k
* subtract: ripple over k+1 bits with free NOTs and carry-in 1
* compare against a plaintext constant: one MUX per scanned bit
* sorting-network exchange: 1 OR + 1 AND, free when an input is a
  trivial constant (both trivial: elided entirely)

Bit shifts and selections at plaintext positions cost nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class CipherWord:
    """Multi-bit encrypted integer, bits LSB first."""

    bits: list
    signed: bool = False
    max_value: int | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.bits:
            raise ValueError("CipherWord needs at least one bit")
        ctx = self.bits[0].context
        for b in self.bits:
            if b.context is not ctx:
                raise ValueError("all bits of a word must share one context")

    @property
    def width(self):
        return len(self.bits)

    @property
    def context(self):
        return self.bits[0].context


def encrypt_word(ctx, value, width, signed=False):
    lo, hi = (-(1 << width - 1), (1 << width - 1) - 1) if signed else (0, (1 << width) - 1)
    if not lo <= value <= hi:
        raise ValueError(f"value {value} does not fit in {width} {'signed' if signed else 'unsigned'} bits")
    raw = value & ((1 << width) - 1)
    return CipherWord([ctx.encrypt((raw >> i) & 1) for i in range(width)], signed=signed)


def trivial_word(ctx, value, width, signed=False):
    raw = value & ((1 << width) - 1)
    return CipherWord([ctx.trivial_const((raw >> i) & 1) for i in range(width)], signed=signed)


def decrypt_word(word):
    ctx = word.context
    raw = 0
    for i, b in enumerate(word.bits):
        raw |= ctx.decrypt(b) << i
    if word.signed and raw >= 1 << (word.width - 1):
        raw -= 1 << word.width
    return raw


def pad_word(word, width):
    """Widen to ``width`` bits for free: zero-extend, or sign-extend by
    repeating the MSB handle for signed words."""
    if width < word.width:
        raise ValueError("pad_word cannot shrink a word")
    if width == word.width:
        return word
    ctx = word.context
    if word.signed:
        extra = [word.bits[-1]] * (width - word.width)
    else:
        extra = [ctx.trivial_const(0) for _ in range(width - word.width)]
    return CipherWord(list(word.bits) + extra, signed=word.signed, max_value=word.max_value)


def truncate_word(word, width):
    """Drop provably-zero high bits (caller guarantees the value fits)."""
    if width > word.width or width < 1:
        raise ValueError("bad truncation width")
    return CipherWord(word.bits[:width], signed=word.signed, max_value=word.max_value)


# -- adders ------------------------------------------------------------


def half_adder(a, b):
    """sum = a XOR b, carry = a AND b; exactly 2 costed gates."""
    ctx = a.context
    return ctx.g_xor(a, b), ctx.g_and(a, b)


def _full_adder(ctx, a, b, cin):
    # 2 XOR + 2 AND + 1 OR, fixed decomposition so a k-bit ripple-carry
    # adder costs exactly 5k gates.
    axb = ctx.g_xor(a, b)
    s = ctx.g_xor(axb, cin)
    t = ctx.g_and(axb, cin)
    cout = ctx.g_or(ctx.g_and(a, b), t)
    return s, cout


def _ripple(ctx, a_bits, b_bits, cin):
    sums = []
    carry = cin
    for a, b in zip(a_bits, b_bits):
        s, carry = _full_adder(ctx, a, b, carry)
        sums.append(s)
    return sums, carry


def rc_add(a, b):
    """Ripple-carry addition of two equal-width unsigned words.

    Returns a (k+1)-bit word; costs exactly 5k gates.
    """
    if a.width != b.width:
        raise ValueError(f"width mismatch: {a.width} vs {b.width}")
    ctx = a.context
    sums, carry = _ripple(ctx, a.bits, b.bits, ctx.trivial_const(0))
    return CipherWord(sums + [carry])


def rc_sub(a, b):
    """a - b as a (k+1)-bit two's-complement word.

    Built from the same ripple chain: widen both operands one bit, add
    the free bitwise NOT of b with carry-in 1, drop the final carry.
    """
    if a.width != b.width:
        raise ValueError(f"width mismatch: {a.width} vs {b.width}")
    ctx = a.context
    k = a.width + 1
    a_bits = pad_word(a, k).bits
    nb_bits = [ctx.g_not(bit) for bit in pad_word(b, k).bits]
    sums, _ = _ripple(ctx, a_bits, nb_bits, ctx.trivial_const(1))
    return CipherWord(sums, signed=True)


def shift_mul_pow2(word, s):
    """Multiply by 2**s by prepending s trivial-zero low bits; 0 gates."""
    if s < 0:
        raise ValueError("shift must be non-negative")
    if s == 0:
        return word
    ctx = word.context
    zeros = [ctx.trivial_const(0) for _ in range(s)]
    return CipherWord(zeros + list(word.bits), signed=word.signed)


# -- reduce tree popcount ----------------------------------------------


def _width_for(count):
    return max(1, math.ceil(math.log2(count + 1)))


def _add_bounded(a, b, bound_a, bound_b):
    """Add two words whose values are bounded, truncating the result to
    the width its bound needs (the dropped high bits are provably 0)."""
    if a.width == 1 and b.width == 1:
        s, c = half_adder(a.bits[0], b.bits[0])
        out = CipherWord([s, c])
    else:
        k = max(a.width, b.width)
        out = rc_add(pad_word(a, k), pad_word(b, k))
    need = _width_for(bound_a + bound_b)
    if need < out.width:
        out = truncate_word(out, need)
    return out


def reduce_tree_layer_count(n):
    """Number of adder layers a reduce tree over n bits uses."""
    if n < 1:
        raise ValueError("empty input")
    layers = 0
    while n > 1:
        n = (n + 1) // 2
        layers += 1
    return layers


def reduce_tree_sum(bits):
    """Popcount of n encrypted bits as an unsigned word of width
    ceil(log2(n+1)).

    Adjacent operands are paired layer by layer; an odd word left over
    at a layer is promoted unchanged to the next one, so the tree has
    ceil(log2 n) adder layers and no constant padding.
    """
    bits = list(bits)
    if not bits:
        raise ValueError("empty input")
    words = [CipherWord([b]) for b in bits]
    bounds = [1] * len(words)
    while len(words) > 1:
        next_words, next_bounds = [], []
        for i in range(0, len(words) - 1, 2):
            next_words.append(_add_bounded(words[i], words[i + 1], bounds[i], bounds[i + 1]))
            next_bounds.append(bounds[i] + bounds[i + 1])
        if len(words) % 2:
            next_words.append(words[-1])
            next_bounds.append(bounds[-1])
        words, bounds = next_words, next_bounds
    out = words[0]
    out.max_value = bounds[0]
    return out


# -- sorting network ----------------------------------------------------


def batcher_schedule(m):
    """Compare-exchange layers of Batcher's bitonic network for m = 2**q
    inputs, as (i, j, keep_max_at_i) triples; q(q+1)/2 layers of m/2
    exchanges each."""
    if m < 1 or m & (m - 1):
        raise ValueError("network size must be a power of two")
    layers = []
    k = 2
    while k <= m:
        j = k // 2
        while j >= 1:
            layer = []
            for i in range(m):
                partner = i ^ j
                if partner > i:
                    # max kept at i in the (i & k) == 0 blocks makes the
                    # full array come out descending (ones first)
                    layer.append((i, partner, (i & k) == 0))
            layers.append(layer)
            j //= 2
        k *= 2
    return layers


def _exchange(ctx, a, b):
    """(max, min) of two bits: OR and AND, elided/free around trivial
    constants so tail padding costs nothing."""
    if a.trivial_value is not None and b.trivial_value is not None:
        return (
            ctx.trivial_const(a.trivial_value | b.trivial_value),
            ctx.trivial_const(a.trivial_value & b.trivial_value),
        )
    if a.trivial_value is not None:
        return (ctx.trivial_const(1), b) if a.trivial_value else (b, ctx.trivial_const(0))
    if b.trivial_value is not None:
        return (ctx.trivial_const(1), a) if b.trivial_value else (a, ctx.trivial_const(0))
    return ctx.g_or(a, b), ctx.g_and(a, b)


def batcher_sort_desc(bits):
    """Sort encrypted bits descending (all 1s first).

    The input is padded to the next power of two with trivial zeros;
    pad positions are stripped from the returned sequence.
    """
    bits = list(bits)
    if not bits:
        raise ValueError("empty input")
    ctx = bits[0].context
    n = len(bits)
    m = 1 << max(0, (n - 1).bit_length())
    arr = bits + [ctx.trivial_const(0) for _ in range(m - n)]
    for layer in batcher_schedule(m):
        for i, j, max_at_i in layer:
            hi, lo = _exchange(ctx, arr[i], arr[j])
            arr[i], arr[j] = (hi, lo) if max_at_i else (lo, hi)
    return arr[:n]


def sign_from_sorted(sorted_bits, m):
    """Bit at 1-indexed position m of a ones-first sequence, i.e.
    [popcount >= m]; out-of-range thresholds are plaintext answers."""
    ctx = sorted_bits[0].context
    if m <= 0:
        return ctx.trivial_const(1)
    if m > len(sorted_bits):
        return ctx.trivial_const(0)
    return sorted_bits[m - 1]


# -- comparators ---------------------------------------------------------


def compare_ge_const(word, threshold):
    """[value(word) >= threshold] for an unsigned word and plaintext
    integer, as a MUX chain of at most ``width`` gates.

    Implemented as strict-greater against threshold-1, scanning LSB to
    MSB so later (more significant) bits dominate: at a constant 0 bit a
    set data bit forces true, at a constant 1 bit a clear data bit
    forces false, otherwise the lower-bit verdict rides through.
    """
    ctx = word.context
    if threshold <= 0:
        return ctx.trivial_const(1)
    if threshold > (1 << word.width) - 1:
        return ctx.trivial_const(0)
    limit = threshold - 1
    out = ctx.trivial_const(0)
    one = ctx.trivial_const(1)
    zero = ctx.trivial_const(0)
    for i in range(word.width):
        if (limit >> i) & 1:
            out = ctx.g_mux(word.bits[i], out, zero)
        else:
            out = ctx.g_mux(word.bits[i], one, out)
    return out


def compare_signed_ge_const(word, threshold):
    """[value(word) >= threshold] for a two's-complement word: flip the
    sign bit for free (bias by 2^(k-1)) and compare unsigned."""
    ctx = word.context
    bias = 1 << (word.width - 1)
    biased = CipherWord(word.bits[:-1] + [ctx.g_not(word.bits[-1])])
    return compare_ge_const(biased, threshold + bias)
