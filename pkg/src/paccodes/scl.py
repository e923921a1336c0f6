"""Successive-cancellation list decoding of PAC codes.

PAC codes are decoded as polar codes with dynamically frozen bits: every path
carries a shift register with its last nu carrier bits, frozen phases take
the value the register dictates, and information phases fork into the two
carrier values. Path storage is reference counted and copied on write.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .codespec import CodeSpec, bit_reversal_permutation
from .encoder import convolve, extract_profile, polar_transform

# per-evaluation operation counts (additions, comparisons, multiplications)
F_COST = (4, 1, 1)
G_COST = (1, 0, 1)
PEN_COST = (1, 1, 1)
CMP_COST = (0, 1, 0)


def to_tree_order(llr: np.ndarray) -> np.ndarray:
    """Permute channel LLRs into the decoder's tree order (z_j = x_{rev(j)})."""
    llr = np.asarray(llr, dtype=np.float64)
    n = llr.shape[-1]
    return np.ascontiguousarray(llr[..., bit_reversal_permutation(n.bit_length() - 1)])


def counters_dict(c: np.ndarray) -> dict[str, int]:
    return {
        "nodes": int(c[K.C_NODES]),
        "f": int(c[K.C_F]),
        "g": int(c[K.C_G]),
        "penalties": int(c[K.C_PEN]),
        "comparisons": int(c[K.C_CMP]),
        "clones": int(c[K.C_CLONE]),
    }


def flop_counts(c: dict[str, int]) -> dict[str, int]:
    """Translate kernel event counters into add/compare/multiply totals."""
    add = c["f"] * F_COST[0] + c["g"] * G_COST[0] + c["penalties"] * PEN_COST[0]
    cmp_ = (c["f"] * F_COST[1] + c["g"] * G_COST[1] + c["penalties"] * PEN_COST[1]
            + c["comparisons"] * CMP_COST[1])
    mul = c["f"] * F_COST[2] + c["g"] * G_COST[2] + c["penalties"] * PEN_COST[2]
    return {"add": add, "cmp": cmp_, "mul": mul, "total": add + cmp_ + mul}


@dataclass
class CandidateList:
    """Final list, sorted by path metric (ties by path index)."""

    v: np.ndarray
    u: np.ndarray
    x: np.ndarray
    d: np.ndarray
    metrics: np.ndarray
    path_index: np.ndarray
    counters: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.metrics)

    @property
    def best_codeword(self) -> np.ndarray:
        return self.x[0]

    @property
    def best_data(self) -> np.ndarray:
        return self.d[0]

    def contains(self, x) -> int:
        """Rank of codeword x in the list, or -1."""
        hits = np.flatnonzero(np.all(self.x == np.asarray(x, dtype=np.uint8), axis=1))
        return int(hits[0]) if hits.size else -1


class PathStore:
    """Lazy-copy state of up to L decoding paths for one code."""

    def __init__(self, spec: CodeSpec, L: int):
        if L < 1:
            raise ValueError("list size must be >= 1")
        n, m = spec.n, spec.m
        nbytes = L * ((n - 1) * 9 + n + 8 * 4 * (m + 1) + 64)
        try:
            self.llr_pool = np.zeros(L * (n - 1), dtype=np.float64)
            self.lb_pool = np.zeros(L * (n - 1), dtype=np.uint8)
            shape = (m + 1, L)
            self.path_llr = np.empty(shape, dtype=np.int32)
            self.path_lb = np.empty(shape, dtype=np.int32)
            self.ref_llr = np.empty(shape, dtype=np.int32)
            self.ref_lb = np.empty(shape, dtype=np.int32)
            self.free_llr = np.empty(shape, dtype=np.int32)
            self.free_lb = np.empty(shape, dtype=np.int32)
            self.vhat = np.zeros((L, n), dtype=np.uint8)
        except MemoryError as exc:  # pragma: no cover - depends on host
            raise MemoryError(f"list size {L} needs about {nbytes / 2**20:.0f} MiB") from exc
        self.spec = spec
        self.L = L
        self.free_llr_top = np.empty(m + 1, dtype=np.int64)
        self.free_lb_top = np.empty(m + 1, dtype=np.int64)
        self.inactive = np.empty(L, dtype=np.int32)
        self.inactive_top = np.zeros(1, dtype=np.int64)
        self.active = np.zeros(L, dtype=np.uint8)
        self.pm = np.zeros(L, dtype=np.float64)
        self.sreg = np.zeros(L, dtype=np.uint64)
        self.lam = np.zeros(L, dtype=np.float64)
        self.ubits = np.zeros(L, dtype=np.uint8)
        self.cand = np.zeros(2 * L, dtype=np.float64)
        self.forks = np.zeros((L, 2), dtype=np.uint8)
        self.scratch = np.zeros(2 * n, dtype=np.uint8)
        self.counters = np.zeros(K.N_COUNTERS, dtype=np.int64)
        self.frozen = (1 - spec.mask).astype(np.uint8)
        self.cmask = np.uint64(spec.history_mask)
        self.regmask = np.uint64((1 << spec.nu) - 1)
        self.chan = np.zeros(n, dtype=np.float64)
        self.phase = 0

    def reset(self, llr) -> None:
        """Load channel LLRs (natural order) and start a single root path."""
        llr = np.asarray(llr, dtype=np.float64)
        if llr.shape != (self.spec.n,):
            raise ValueError(f"expected {self.spec.n} LLRs, got shape {llr.shape}")
        self.chan[:] = to_tree_order(llr)
        K.store_init(self.spec.n, self.spec.m, self.L, self.path_llr, self.path_lb,
                     self.ref_llr, self.ref_lb, self.free_llr, self.free_llr_top,
                     self.free_lb, self.free_lb_top, self.inactive, self.inactive_top,
                     self.active, self.pm, self.sreg, self.vhat, self.counters)
        self.phase = 0

    # -- one phase at a time (used by tests and for inspection) --

    def calc_llr(self, phi: int) -> None:
        K.store_calc_llr(self.spec.n, self.spec.m, self.L, phi, self.chan, self.llr_pool,
                         self.lb_pool, self.path_llr, self.path_lb, self.ref_llr,
                         self.free_llr, self.free_llr_top, self.active, self.lam,
                         self.counters)

    def fork_unfrozen(self, phi: int) -> None:
        """Fork every path at information phase phi and keep the best L children."""
        if self.spec.is_frozen(phi):
            raise ValueError(f"phase {phi} is frozen")
        K.store_fork(self.spec.n, self.spec.m, self.L, phi, self.cmask, self.regmask,
                     self.path_llr, self.path_lb, self.ref_llr, self.ref_lb, self.free_llr,
                     self.free_llr_top, self.free_lb, self.free_lb_top, self.inactive,
                     self.inactive_top, self.active, self.pm, self.sreg, self.vhat,
                     self.lam, self.ubits, self.cand, self.forks, self.counters)

    def extend_frozen(self, phi: int) -> None:
        K.store_extend_frozen(self.spec.n, self.spec.m, self.L, phi, self.cmask,
                              self.regmask, self.lb_pool, self.path_lb, self.ref_lb,
                              self.free_lb, self.free_lb_top, self.active, self.pm,
                              self.sreg, self.vhat, self.lam, self.ubits, self.counters)

    def update_bits(self, phi: int) -> None:
        K.store_update_all_bits(self.spec.n, self.spec.m, self.L, phi, self.active,
                                self.ubits, self.lb_pool, self.path_lb, self.ref_lb,
                                self.free_lb, self.free_lb_top, self.scratch)

    def step(self) -> None:
        """Process the next phase exactly as :meth:`run` would."""
        phi = self.phase
        self.calc_llr(phi)
        if self.spec.is_frozen(phi):
            self.extend_frozen(phi)
        else:
            self.fork_unfrozen(phi)
        self.update_bits(phi)
        self.phase += 1

    def run(self, stop: int | None = None) -> None:
        stop = self.spec.n if stop is None else stop
        K.store_run(self.spec.n, self.spec.m, self.L, self.phase, stop, self.frozen,
                    self.cmask, self.regmask, self.chan, self.llr_pool, self.lb_pool,
                    self.path_llr, self.path_lb, self.ref_llr, self.ref_lb, self.free_llr,
                    self.free_llr_top, self.free_lb, self.free_lb_top, self.inactive,
                    self.inactive_top, self.active, self.pm, self.sreg, self.vhat, self.lam,
                    self.ubits, self.cand, self.forks, self.scratch, self.counters)
        self.phase = stop

    # -- inspection --

    @property
    def active_paths(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    def shift_register(self, ell: int) -> tuple[int, ...]:
        """Last nu carrier bits of path ell, oldest first (rightmost = newest)."""
        nu = self.spec.nu
        s = int(self.sreg[ell])
        return tuple((s >> (nu - 1 - t)) & 1 for t in range(nu))

    def prefixes(self) -> dict[int, np.ndarray]:
        """Decided u-prefix of every active path."""
        out = {}
        for ell in self.active_paths:
            out[int(ell)] = convolve(self.vhat[ell, : self.phase], self.spec.generator)
        return out

    def live_arrays(self) -> int:
        """Distinct LLR arrays currently referenced (lazy-copy footprint)."""
        return int((self.ref_llr[1:] > 0).sum())

    def candidates(self) -> CandidateList:
        idx = self.active_paths
        metrics = self.pm[idx]
        order = np.lexsort((idx, metrics))
        idx = idx[order]
        v = self.vhat[idx].copy()
        u = convolve(v, self.spec.generator)
        x = polar_transform(u)
        d = extract_profile(v, self.spec)
        return CandidateList(v=v, u=u, x=x, d=d, metrics=self.pm[idx].copy(),
                             path_index=idx.astype(np.int64),
                             counters=counters_dict(self.counters))


class ListDecoder:
    """Reusable list decoder: allocates its path store once."""

    def __init__(self, spec: CodeSpec, L: int):
        self.spec = spec
        self.L = L
        self.store = PathStore(spec, L)

    def decode(self, llr) -> CandidateList:
        self.store.reset(llr)
        self.store.run()
        return self.store.candidates()


def scl_decode(llr, spec: CodeSpec, L: int) -> CandidateList:
    return ListDecoder(spec, L).decode(llr)


def path_metric_of(u, llr, spec: CodeSpec) -> float:
    """Penalty the list decoder assigns to the path u (lower = more likely)."""
    u = np.ascontiguousarray(np.asarray(u, dtype=np.uint8))
    if u.shape != (spec.n,):
        raise ValueError("u must have length n")
    counters = np.zeros(K.N_COUNTERS, dtype=np.int64)
    return float(K.teacher_forced_metric(to_tree_order(llr), u, counters))


def decision_node_count(L: int, k: int) -> int:
    """Decision nodes visited: one per (active path, information phase)."""
    if L < 1 or k < 0:
        raise ValueError("need L >= 1 and k >= 0")
    total = 0
    width = 1
    for _ in range(k):
        total += min(width, L)
        width = min(2 * width, L) if width < L else width
    return total


def closed_form_node_count(L: int, k: int) -> int:
    """L (k + 1 - ceil(log2 L)) + 2^ceil(log2 L) - 1 (doubling levels counted once more)."""
    c = math.ceil(math.log2(L)) if L > 1 else 0
    return L * (k + 1 - c) + 2**c - 1
