"""Boolean-gate circuit compiler and evaluator for binary/ternary neural
networks over an abstract homomorphic-bit backend.

The backend simulates ciphertext bits in plaintext while counting costed
gates and tracking circuit depth; the compiler lowers dense/conv/batchnorm/
sign layers to data-oblivious circuits whose decrypted outputs match the
exact integer oracle bit for bit.
"""

from hebnn.backend import (
    CipherBit,
    ContextMismatchError,
    GateBackend,
    GateStats,
    ScopeError,
    SimContext,
)
from hebnn.circuits import (
    CipherWord,
    batcher_sort_desc,
    compare_ge_const,
    compare_signed_ge_const,
    half_adder,
    rc_add,
    rc_sub,
    reduce_tree_sum,
    shift_mul_pow2,
    sign_from_sorted,
)
from hebnn.model import (
    BatchNorm,
    ConvLayer,
    DenseLayer,
    FoldedThreshold,
    ModelValidationError,
    SignActivation,
    TernaryModel,
    fold_batchnorm,
    fold_model,
    load_model,
    oracle_eval,
    save_model,
    ternarize,
    validate_model,
)
from hebnn.compiler import EvalOptions, RowPlan, encrypt_input, eval_model, plan_row
from hebnn.costs import CostModel, build_report, estimate, per_output_time

__all__ = [
    "BatchNorm",
    "CipherBit",
    "CipherWord",
    "ContextMismatchError",
    "ConvLayer",
    "CostModel",
    "DenseLayer",
    "EvalOptions",
    "FoldedThreshold",
    "GateBackend",
    "GateStats",
    "ModelValidationError",
    "RowPlan",
    "ScopeError",
    "SignActivation",
    "SimContext",
    "TernaryModel",
    "batcher_sort_desc",
    "build_report",
    "compare_ge_const",
    "compare_signed_ge_const",
    "encrypt_input",
    "estimate",
    "eval_model",
    "fold_batchnorm",
    "fold_model",
    "half_adder",
    "load_model",
    "oracle_eval",
    "per_output_time",
    "plan_row",
    "rc_add",
    "rc_sub",
    "reduce_tree_sum",
    "save_model",
    "shift_mul_pow2",
    "sign_from_sorted",
    "ternarize",
    "validate_model",
]
