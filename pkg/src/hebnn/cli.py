"""Command-line interface: eval, estimate, fold, ternarize, selftest."""

from __future__ import annotations

import argparse
import itertools
import json
import sys

from hebnn import circuits, wire
from hebnn.backend import SimContext
from hebnn.circuits import decrypt_word, encrypt_word
from hebnn.compiler import EvalOptions, decrypt_output, encrypt_input, eval_model, neuron_direct, neuron_plus_one, plan_row
from hebnn.costs import CostModel, build_report, estimate
from hebnn.model import (
    SCORE_WORDS,
    FoldedThreshold,
    ModelValidationError,
    flat_size,
    fold_model,
    ternarize,
)


def _add_eval_flags(p):
    p.add_argument("--plus-one", choices=["on", "off"], default="on", help="sparsified evaluation (default on)")
    p.add_argument("--comparator", choices=["reduce", "sort"], default="reduce", help="activation comparator")
    p.add_argument("--cache-shared-sums", choices=["on", "off"], default="on")


def _add_cost_flags(p):
    p.add_argument("--t-gate", type=float, default=0.1, help="seconds per costed gate (default 0.1)")
    p.add_argument("--intra-workers", type=int, default=16, help="CPUs per machine (default 16)")
    p.add_argument("--machines", type=int, default=16, help="cluster size for out_16p (default 16)")


def _options(args):
    return EvalOptions(
        plus_one=args.plus_one == "on",
        comparator=args.comparator,
        cache_shared_sums=args.cache_shared_sums == "on",
    )


def _options_echo(args):
    echo = {
        "plus_one": args.plus_one,
        "comparator": args.comparator,
        "cache_shared_sums": args.cache_shared_sums,
        "t_gate": args.t_gate,
        "intra_workers": args.intra_workers,
        "machines": args.machines,
    }
    if getattr(args, "seed", None) is not None:
        echo["seed"] = args.seed
    return echo


def _emit_report(args, ctx, stats):
    cm = CostModel(t_gate=args.t_gate, intra_workers=args.intra_workers, machines=args.machines)
    est = estimate(stats, cm)
    report = build_report(stats, ctx.global_stats, est, _options_echo(args))
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(wire.to_json(report))
    return report


def cmd_eval(args):
    model = wire.read_model(args.model)
    values = wire.read_input(args.input, model.input_shape)
    ctx = SimContext()
    outputs, stats = eval_model(ctx, model, encrypt_input(ctx, values), _options(args))
    decoded = decrypt_output(ctx, outputs)
    if model.output_mode == SCORE_WORDS:
        # argmax with lowest-index tie-break
        result = {"output_mode": SCORE_WORDS, "scores": decoded, "argmax": decoded.index(max(decoded))}
    else:
        result = {"output_mode": model.output_mode, "prediction": decoded}
    report = _emit_report(args, ctx, stats)
    result["estimates"] = report["estimates"]
    print(json.dumps(result, indent=2))
    return 0


def cmd_estimate(args):
    model = wire.read_model(args.model)
    # circuit shape is data-oblivious, so any input of the right shape
    # yields the same stats; use all zeros (all -1s)
    values = [-1] * flat_size(model.input_shape)
    ctx = SimContext()
    _, stats = eval_model(ctx, model, encrypt_input(ctx, values), _options(args))
    report = _emit_report(args, ctx, stats)
    print(json.dumps(report, indent=2))
    return 0


def cmd_fold(args):
    model = wire.read_model(args.model)
    wire.write_model(fold_model(model), args.out)
    print(f"folded model written to {args.out}")
    return 0


def cmd_ternarize(args):
    model = wire.read_model(args.model)
    wire.write_model(ternarize(model, args.fraction, seed=args.seed or 0), args.out)
    print(f"ternarized model written to {args.out}")
    return 0


# -- selftest ----------------------------------------------------------------


def _check_truth_tables(ctx):
    plain = {
        "AND": lambda a, b: a & b,
        "OR": lambda a, b: a | b,
        "XOR": lambda a, b: a ^ b,
        "XNOR": lambda a, b: 1 - (a ^ b),
    }
    for name, fn in plain.items():
        gate = getattr(ctx, f"g_{name.lower()}")
        for a, b in itertools.product((0, 1), repeat=2):
            got = ctx.decrypt(gate(ctx.encrypt(a), ctx.encrypt(b)))
            if got != fn(a, b):
                return f"{name}({a},{b}) = {got}, want {fn(a, b)}"
    for s, a, b in itertools.product((0, 1), repeat=3):
        got = ctx.decrypt(ctx.g_mux(ctx.encrypt(s), ctx.encrypt(a), ctx.encrypt(b)))
        if got != (a if s else b):
            return f"MUX({s},{a},{b}) = {got}"
    for a in (0, 1):
        if ctx.decrypt(ctx.g_not(ctx.encrypt(a))) != 1 - a:
            return f"NOT({a}) wrong"
    return None


def _check_adders(ctx):
    k = 4
    for x, y in itertools.product(range(1 << k), repeat=2):
        a, b = encrypt_word(ctx, x, k), encrypt_word(ctx, y, k)
        if decrypt_word(circuits.rc_add(a, b)) != x + y:
            return f"add {x}+{y} wrong"
        if decrypt_word(circuits.rc_sub(a, b)) != x - y:
            return f"sub {x}-{y} wrong"
    before = ctx.gate_count
    circuits.rc_add(encrypt_word(ctx, 5, 3), encrypt_word(ctx, 3, 3))
    if ctx.gate_count - before != 15:
        return f"3-bit adder cost {ctx.gate_count - before}, want 15"
    return None


def _check_comparators(ctx):
    k = 6
    for value in range(1 << k):
        word = encrypt_word(ctx, value, k)
        for threshold in range(-1, (1 << k) + 2):
            got = ctx.decrypt(circuits.compare_ge_const(word, threshold))
            if got != (1 if value >= threshold else 0):
                return f"compare {value} >= {threshold} gave {got}"
    for value in range(-16, 16):
        word = encrypt_word(ctx, value, 5, signed=True)
        for threshold in range(-18, 18):
            got = ctx.decrypt(circuits.compare_signed_ge_const(word, threshold))
            if got != (1 if value >= threshold else 0):
                return f"signed compare {value} >= {threshold} gave {got}"
    return None


def _check_plus_one_identity():
    # plain-arithmetic brute force of both polarity inequalities
    for d in range(1, 7):
        for w in itertools.product((-1, 0, 1), repeat=d):
            p = sum(1 for v in w if v == 1)
            n = sum(1 for v in w if v == -1)
            for xs in itertools.product((-1, 1), repeat=d):
                xb = [(v + 1) // 2 for v in xs]
                s_plus = sum(xb[i] for i in range(d) if w[i] == 1)
                s_supp = sum(xb[i] for i in range(d) if w[i] != 0)
                s_neg = sum(1 - xb[i] for i in range(d) if w[i] == -1)
                wx = sum(w[i] * xs[i] for i in range(d))
                for b in range(-d, d + 1):
                    want = wx + b >= 0
                    if (4 * s_plus - 2 * s_supp >= p - n - b) != want:
                        return f"plus polarity off at d={d} w={w} x={xs} b={b}"
                    if (4 * s_neg + 2 * s_supp >= p + 3 * n - b) != want:
                        return f"minus polarity off at d={d} w={w} x={xs} b={b}"
    return None


def _check_neurons(ctx):
    # every ternary row and input at small width, both methods, with
    # threshold boundaries of both parities
    for d in range(1, 5):
        for w in itertools.product((-1, 0, 1), repeat=d):
            for b in range(-d, d + 1):
                thr = FoldedThreshold("compare", tau=-b)
                plan_d = plan_row(w, thr, EvalOptions(plus_one=False))
                plan_p = plan_row(w, thr, EvalOptions(plus_one=True))
                for xs in itertools.product((-1, 1), repeat=d):
                    want = 1 if sum(wi * xi for wi, xi in zip(w, xs)) + b >= 0 else 0
                    bits = encrypt_input(ctx, list(xs))
                    if ctx.decrypt(neuron_direct(ctx, bits, plan_d)) != want:
                        return f"direct neuron wrong at w={w} x={xs} b={b}"
                    if plan_p.s:
                        shared = circuits.reduce_tree_sum(bits)
                        if ctx.decrypt(neuron_plus_one(ctx, bits, plan_p, shared)) != want:
                            return f"plus_one neuron wrong at w={w} x={xs} b={b}"
    return None


def cmd_selftest(_args=None):
    checks = [
        ("gate truth tables", lambda: _check_truth_tables(SimContext())),
        ("ripple-carry adders (k=4 exhaustive)", lambda: _check_adders(SimContext())),
        ("comparators (k=6 exhaustive, equality cases)", lambda: _check_comparators(SimContext())),
        ("plus-one identity (d<=6 brute force)", _check_plus_one_identity),
        ("neuron circuits vs oracle (d<=4 exhaustive)", lambda: _check_neurons(SimContext())),
    ]
    failures = 0
    for name, fn in checks:
        problem = fn()
        if problem is None:
            print(f"selftest: {name} ... ok")
        else:
            failures += 1
            print(f"selftest: {name} ... FAIL ({problem})")
    print(f"selftest: {len(checks) - failures}/{len(checks)} checks passed")
    return 0 if failures == 0 else 1


# -- entry point ----------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="hebnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="encrypt an input, evaluate the model circuit, decrypt the prediction")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    _add_eval_flags(p)
    _add_cost_flags(p)
    p.add_argument("--report", help="write the gate/estimate report here")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("estimate", help="report gate counts and strategy timings without an input")
    p.add_argument("--model", required=True)
    _add_eval_flags(p)
    _add_cost_flags(p)
    p.add_argument("--report", help="also write the report to this path")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("fold", help="fold batchnorm layers into integer thresholds")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_fold)

    p = sub.add_parser("ternarize", help="drop a fraction of nonzero weights")
    p.add_argument("--model", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ternarize)

    p = sub.add_parser("selftest", help="run built-in exhaustive circuit checks")
    p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (wire.DocumentError, ModelValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
