"""Homomorphic-bit backend: boolean gates on opaque bit handles.

The only implementation provided here simulates ciphertext bits in
plaintext while keeping full accounting of costed gates and circuit
depth. A real gate-bootstrapping FHE library could implement the same
``GateBackend`` interface; nothing above this module may look at a
bit's hidden value except through ``decrypt``.

Cost model: every binary gate in ``COSTED_KINDS`` costs one unit and
raises the output level to 1 + max(input levels). NOT is free (no
bootstrap needed in gate-bootstrapping schemes) and so is a MUX whose
selector is a trivial constant; free operations preserve the maximum
input level. Flip ``NOT_IS_FREE`` to price NOT as an XNOR against a
trivial constant instead.
"""

from __future__ import annotations

import abc
import threading
from dataclasses import dataclass, field

AND = "AND"
OR = "OR"
XOR = "XOR"
XNOR = "XNOR"
MUX = "MUX"

COSTED_KINDS = (AND, OR, XOR, XNOR, MUX)

# NOT costs nothing; see module docstring. Single switch so the
# alternative pricing can be evaluated without touching call sites.
NOT_IS_FREE = True


class ContextMismatchError(ValueError):
    """A bit handle was used with a context that did not create it."""


class ScopeError(RuntimeError):
    """begin_scope/end_scope calls were not properly balanced."""


class CipherBit:
    """Opaque handle to one encrypted bit.

    ``level`` is the length of the longest costed-gate path from the
    inputs to this bit. ``trivial_value`` is the publicly-known value of
    a trivial (noiseless) constant, or None for genuinely encrypted
    bits; circuits may use it to elide gates, the backend uses it to
    make plaintext-conditioned selection free.
    """

    __slots__ = ("_ctx", "_value", "level", "trivial_value")

    def __init__(self, ctx, value, level, trivial_value=None):
        self._ctx = ctx
        self._value = value
        self.level = level
        self.trivial_value = trivial_value

    @property
    def context(self):
        return self._ctx

    def __repr__(self):
        kind = "trivial" if self.trivial_value is not None else "cipher"
        return f"<CipherBit {kind} level={self.level}>"


@dataclass
class GateStats:
    """Costed-gate counts per kind plus a histogram of gates per level."""

    label: str = ""
    counts: dict = field(default_factory=lambda: {k: 0 for k in COSTED_KINDS})
    level_histogram: dict = field(default_factory=dict)

    def record(self, kind, level):
        self.counts[kind] += 1
        self.level_histogram[level] = self.level_histogram.get(level, 0) + 1

    @property
    def total(self):
        return sum(self.counts.values())

    @property
    def max_level(self):
        return max(self.level_histogram) if self.level_histogram else 0

    def merged(self, other):
        out = GateStats(label=self.label)
        for k in COSTED_KINDS:
            out.counts[k] = self.counts[k] + other.counts[k]
        for hist in (self.level_histogram, other.level_histogram):
            for lvl, n in hist.items():
                out.level_histogram[lvl] = out.level_histogram.get(lvl, 0) + n
        return out

    def copy(self):
        out = GateStats(label=self.label)
        out.counts = dict(self.counts)
        out.level_histogram = dict(self.level_histogram)
        return out

    def as_dict(self):
        return {
            "label": self.label,
            "counts": {k: self.counts[k] for k in COSTED_KINDS},
            "total": self.total,
            "level_histogram": {str(k): self.level_histogram[k] for k in sorted(self.level_histogram)},
            "max_level": self.max_level,
        }


class GateBackend(abc.ABC):
    """Interface a homomorphic bit backend must provide."""

    @abc.abstractmethod
    def encrypt(self, b): ...

    @abc.abstractmethod
    def decrypt(self, c): ...

    @abc.abstractmethod
    def trivial_const(self, b): ...

    @abc.abstractmethod
    def g_and(self, a, b): ...

    @abc.abstractmethod
    def g_or(self, a, b): ...

    @abc.abstractmethod
    def g_xor(self, a, b): ...

    @abc.abstractmethod
    def g_xnor(self, a, b): ...

    @abc.abstractmethod
    def g_not(self, a): ...

    @abc.abstractmethod
    def g_mux(self, s, a, b): ...

    @abc.abstractmethod
    def begin_scope(self, label): ...

    @abc.abstractmethod
    def end_scope(self): ...


_GATE_FUNCS = {
    AND: lambda a, b: a & b,
    OR: lambda a, b: a | b,
    XOR: lambda a, b: a ^ b,
    XNOR: lambda a, b: 1 - (a ^ b),
}


class SimContext(GateBackend):
    """Plaintext-simulating backend with gate/level accounting.

    Handles are bound to the context that created them; mixing handles
    from two contexts raises ``ContextMismatchError`` (the moral
    equivalent of a key mismatch). Gate application and stats updates
    are guarded by a lock so independent gates may be issued from
    several threads; scope begin/end are serialization points.
    """

    def __init__(self):
        self.global_stats = GateStats(label="global")
        self._scopes = []
        self._lock = threading.Lock()

    # -- bit creation ------------------------------------------------

    def encrypt(self, b):
        if b not in (0, 1):
            raise ValueError(f"plaintext bit must be 0 or 1, got {b!r}")
        return CipherBit(self, b, 0)

    def trivial_const(self, b):
        if b not in (0, 1):
            raise ValueError(f"plaintext bit must be 0 or 1, got {b!r}")
        return CipherBit(self, b, 0, trivial_value=b)

    def decrypt(self, c):
        self._check(c)
        return c._value

    # -- gates -------------------------------------------------------

    def _check(self, *bits):
        for c in bits:
            if not isinstance(c, CipherBit) or c._ctx is not self:
                raise ContextMismatchError("bit handle does not belong to this context")

    def _record(self, kind, level):
        with self._lock:
            self.global_stats.record(kind, level)
            for scope in self._scopes:
                scope.record(kind, level)

    def _binary_gate(self, kind, a, b):
        self._check(a, b)
        level = max(a.level, b.level) + 1
        self._record(kind, level)
        return CipherBit(self, _GATE_FUNCS[kind](a._value, b._value), level)

    def g_and(self, a, b):
        return self._binary_gate(AND, a, b)

    def g_or(self, a, b):
        return self._binary_gate(OR, a, b)

    def g_xor(self, a, b):
        return self._binary_gate(XOR, a, b)

    def g_xnor(self, a, b):
        return self._binary_gate(XNOR, a, b)

    def g_not(self, a):
        self._check(a)
        if not NOT_IS_FREE:
            return self.g_xnor(a, self.trivial_const(0))
        trivial = None if a.trivial_value is None else 1 - a.trivial_value
        return CipherBit(self, 1 - a._value, a.level, trivial_value=trivial)

    def g_mux(self, s, a, b):
        self._check(s, a, b)
        if s.trivial_value is not None:
            # Selection on a public bit happens in the clear.
            return a if s.trivial_value else b
        level = max(s.level, a.level, b.level) + 1
        self._record(MUX, level)
        return CipherBit(self, a._value if s._value else b._value, level)

    # -- scoped stats --------------------------------------------------

    def begin_scope(self, label=""):
        with self._lock:
            self._scopes.append(GateStats(label=label))

    def end_scope(self):
        with self._lock:
            if not self._scopes:
                raise ScopeError("end_scope without matching begin_scope")
            return self._scopes.pop()

    @property
    def scope_depth(self):
        return len(self._scopes)

    @property
    def gate_count(self):
        return self.global_stats.total
