"""Analytic runtime estimation from gate statistics.

Gates at the same level are independent, so a pool of workers clears a
level in ceil(gates / workers) rounds of one gate latency each. Three
strategies map a model's per-layer, per-output stats to wall time:

* out_seq: every output unit in sequence, intra-worker parallelism only
* out_16p: output units spread over a cluster of machines
* out_full_p: one machine per output unit

Shared-sum work is charged once per layer, before the output units.
Everything here is a pure function of the recorded stats; nothing is
measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

STRATEGIES = ("out_seq", "out_16p", "out_full_p")


@dataclass(frozen=True)
class CostModel:
    t_gate: float = 0.1  # seconds per costed gate (one bootstrap)
    intra_workers: int = 16
    machines: int = 16
    strategy: str = "out_seq"

    def __post_init__(self):
        if self.t_gate <= 0:
            raise ValueError("t_gate must be positive")
        if self.intra_workers < 1 or self.machines < 1:
            raise ValueError("worker and machine counts must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")


def per_output_time(stats, workers, t_gate=0.1):
    """Level-greedy schedule time: sum over levels of
    ceil(gates_at_level / workers) gate latencies."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    rounds = sum(math.ceil(n / workers) for n in stats.level_histogram.values())
    return rounds * t_gate


@dataclass(frozen=True)
class LayerEstimate:
    label: str
    n_outputs: int
    out_seq: float
    out_16p: float
    out_full_p: float


@dataclass(frozen=True)
class Estimate:
    out_seq: float
    out_16p: float
    out_full_p: float
    layers: tuple = field(default_factory=tuple)

    def for_strategy(self, strategy):
        return getattr(self, strategy)


def estimate(eval_stats, cost_model=CostModel()):
    """Estimate seconds per strategy, with a per-layer breakdown."""
    cm = cost_model
    layers = []
    totals = {s: 0.0 for s in STRATEGIES}
    for ls in eval_stats.layers:
        shared_t = per_output_time(ls.shared, cm.intra_workers, cm.t_gate)
        out_times = [per_output_time(o, cm.intra_workers, cm.t_gate) for o in ls.outputs]
        p = len(out_times)
        seq_outs = sum(out_times)
        max_out = max(out_times, default=0.0)
        seq = shared_t + seq_outs
        full = shared_t + max_out
        # a cluster never schedules worse than a single machine running
        # the outputs back to back
        t16 = shared_t + min(seq_outs, math.ceil(p / cm.machines) * max_out)
        layers.append(LayerEstimate(ls.label, p, seq, t16, full))
        totals["out_seq"] += seq
        totals["out_16p"] += t16
        totals["out_full_p"] += full
    return Estimate(totals["out_seq"], totals["out_16p"], totals["out_full_p"], tuple(layers))


def _kind_counts(stats):
    out = dict(stats.counts)
    out["total"] = stats.total
    return out


def build_report(eval_stats, global_stats, est, options_echo):
    """Structured report: gate counts by kind/layer/level, circuit
    depth, and the three strategy estimates. Field order is stable."""
    by_layer = []
    for ls, le in zip(eval_stats.layers, est.layers):
        by_layer.append(
            {
                "label": ls.label,
                "total": ls.total,
                "shared": _kind_counts(ls.shared),
                "outputs": [{"label": o.label, "total": o.total} for o in ls.outputs],
                "estimates": {
                    "out_seq": le.out_seq,
                    "out_16p": le.out_16p,
                    "out_full_p": le.out_full_p,
                },
            }
        )
    return {
        "gates": {
            "by_kind": {k: global_stats.counts[k] for k in sorted(global_stats.counts)},
            "by_layer": by_layer,
            "by_level": {str(k): global_stats.level_histogram[k] for k in sorted(global_stats.level_histogram)},
        },
        "depth": global_stats.max_level,
        "estimates": {
            "out_seq": est.out_seq,
            "out_16p": est.out_16p,
            "out_full_p": est.out_full_p,
        },
        "options_echo": options_echo,
    }
