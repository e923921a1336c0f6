"""Fano sequential decoding of PAC codes.

The search walks the polar decoding tree one phase at a time. Frozen phases
have a single branch (the value the shift register dictates), information
phases have two. The branch metric at phase ``i`` is
``log2 P(u_i | y, u^{i-1}) - bias[i]`` with the probability taken from the
successive-cancellation LLR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .codespec import CodeSpec, DEFAULT_DESIGN_SNR_DB, reliability_table
from .encoder import extract_profile, polar_transform
from .scl import counters_dict, to_tree_order

DEFAULT_CYCLE_CAP = 1_300_000
DEFAULT_DELTA = 2.0


def reliability_bias(spec: CodeSpec, design_snr_db: float = DEFAULT_DESIGN_SNR_DB) -> np.ndarray:
    """bias[i] = log2(1 - p_i), p_i the estimated bit-channel error probability.

    This is the expected branch gain of a correct decision, so the true path
    drifts upward by roughly zero and strictly climbs on clean input.
    """
    pe = reliability_table(spec.n, design_snr_db, rate=spec.rate).error_probabilities()
    return np.log2(np.clip(1.0 - pe, 1e-300, 1.0))


def capacity_bias(spec: CodeSpec, design_snr_db: float = DEFAULT_DESIGN_SNR_DB) -> np.ndarray:
    """bias[i] = I(W_i) - 1 on information phases, I(W_i) on frozen ones.

    Equivalent to the textbook metric log2(P(u|y)/P(u)) - I(W_i).
    """
    cap = reliability_table(spec.n, design_snr_db, rate=spec.rate).capacities()
    return cap - spec.mask.astype(np.float64)


def make_bias(spec: CodeSpec, kind: str = "reliability",
              design_snr_db: float = DEFAULT_DESIGN_SNR_DB) -> np.ndarray:
    """Bias vector from a name: ``reliability``, ``capacity`` or ``const:B``."""
    if kind == "reliability":
        return reliability_bias(spec, design_snr_db)
    if kind == "capacity":
        return capacity_bias(spec, design_snr_db)
    if kind.startswith("const:"):
        try:
            b = float(kind[6:])
        except ValueError:
            raise ValueError(f"bias: cannot parse constant in {kind!r}") from None
        return np.full(spec.n, b)
    raise ValueError(f"bias: unknown kind {kind!r} (reliability, capacity, const:B)")


@dataclass(frozen=True)
class FanoConfig:
    delta: float = DEFAULT_DELTA
    bias: np.ndarray | None = None  # None: reliability bias of the spec
    cycle_cap: int = DEFAULT_CYCLE_CAP

    def __post_init__(self):
        if not self.delta > 0 or not math.isfinite(self.delta):
            raise ValueError("delta must be positive and finite")
        if self.cycle_cap < 1:
            raise ValueError("cycle_cap must be >= 1")
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.float64)
            if not np.all(np.isfinite(b)):
                raise ValueError("bias must be finite")
            object.__setattr__(self, "bias", b)

    def bias_for(self, spec: CodeSpec) -> np.ndarray:
        if self.bias is None:
            return reliability_bias(spec)
        if self.bias.shape != (spec.n,):
            raise ValueError(f"bias must have length n={spec.n}")
        return self.bias


@dataclass
class FanoOutcome:
    """Result of one Fano search.

    ``x``, ``u``, ``v`` and ``d`` are None when the cycle cap was hit.
    """

    x: np.ndarray | None
    u: np.ndarray | None
    v: np.ndarray | None
    d: np.ndarray | None
    cycles: int
    forward_moves: int
    backward_moves: int
    nodes_visited: int
    final_metric: float
    failed: bool
    counters: dict = field(default_factory=dict)

    @property
    def result(self):
        return None if self.failed else self.x


class FanoDecoder:
    """Fano decoder bound to a code; holds the bias vector and scratch."""

    def __init__(self, spec: CodeSpec, cfg: FanoConfig | None = None):
        self.spec = spec
        self.cfg = cfg or FanoConfig()
        self.bias = np.ascontiguousarray(self.cfg.bias_for(spec), dtype=np.float64)
        self.frozen = (1 - spec.mask).astype(np.uint8)
        self.cmask = np.uint64(spec.history_mask)

    def decode(self, llr) -> FanoOutcome:
        spec = self.spec
        llr = np.asarray(llr, dtype=np.float64)
        if llr.shape != (spec.n,):
            raise ValueError(f"expected {spec.n} LLRs, got shape {llr.shape}")
        counters = np.zeros(K.N_COUNTERS, dtype=np.int64)
        u = np.zeros(spec.n, dtype=np.uint8)
        v = np.zeros(spec.n, dtype=np.uint8)
        status, cycles, metric, back = K.fano_search(
            to_tree_order(llr), self.frozen, self.cmask, spec.nu, self.bias,
            float(self.cfg.delta), int(self.cfg.cycle_cap), counters, u, v)
        failed = status != 0
        c = counters_dict(counters)
        if failed:
            x = d = uo = vo = None
        else:
            uo, vo = u, v
            x = polar_transform(u)
            d = extract_profile(v, spec)
        return FanoOutcome(x=x, u=uo, v=vo, d=d, cycles=int(cycles),
                           forward_moves=int(cycles - back), backward_moves=int(back),
                           nodes_visited=c["nodes"], final_metric=float(metric),
                           failed=failed, counters=c)


def fano_decode(llr, spec: CodeSpec, cfg: FanoConfig | None = None) -> FanoOutcome:
    return FanoDecoder(spec, cfg).decode(llr)


def count_cycles(outcome: FanoOutcome) -> int:
    """Forward plus backward moves of a finished search."""
    return outcome.forward_moves + outcome.backward_moves


def metric_from_penalty(pm: float, bias: np.ndarray) -> float:
    """Fano metric of a full path given its list-decoder penalty ``pm``."""
    return -pm / math.log(2.0) - float(np.sum(bias))
