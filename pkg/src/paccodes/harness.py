"""Monte-Carlo frame-error-rate simulation.

Every frame is fully determined by ``(seed, snr index, frame index)``. Frames
are processed in fixed-size chunks and the stopping rule is checked only at
chunk boundaries, in chunk order, so the set of frames counted (and hence
every number reported) does not depend on how many workers ran them.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelConfig, frame_rng, llr as channel_llr, modulate, transmit
from .codespec import CodeSpec
from .encoder import encode, precode
from .fano import FanoConfig, FanoDecoder, FanoOutcome
from .scl import CandidateList, ListDecoder, flop_counts, path_metric_of

CSV_COLUMNS = ("snr_db", "frames", "errors", "failures", "selection_errors", "fer",
               "fer_stderr", "ml_lb", "mean_nodes", "max_nodes", "mean_flops", "max_flops",
               "mean_cycles", "max_cycles")

CORRECT = "correct"
ERROR = "error"
FAILURE = "failure"


@dataclass(frozen=True)
class StoppingRule:
    min_frame_errors: int = 100
    max_frames: int = 10_000_000
    chunk: int = 64

    def __post_init__(self):
        if self.min_frame_errors < 1 or self.max_frames < 1 or self.chunk < 1:
            raise ValueError("stopping rule values must be positive")


@dataclass(frozen=True)
class DecoderConfig:
    kind: str = "list"  # list | fano
    list_size: int = 32
    fano: FanoConfig = field(default_factory=FanoConfig)

    def __post_init__(self):
        if self.kind not in ("list", "fano"):
            raise ValueError(f"decoder: unknown kind {self.kind!r}")
        if self.list_size < 1:
            raise ValueError("list_size must be >= 1")

    def build(self, spec: CodeSpec):
        if self.kind == "list":
            return ListDecoder(spec, self.list_size)
        return FanoDecoder(spec, self.fano)


@dataclass(frozen=True)
class Outcome:
    kind: str  # correct | error | failure
    selection_error: bool = False


def classify_outcome(transmitted, result: CandidateList | FanoOutcome) -> Outcome:
    """Compare a decoder result with the transmitted codeword."""
    x = np.asarray(transmitted, dtype=np.uint8)
    if isinstance(result, FanoOutcome):
        if result.failed:
            return Outcome(FAILURE)
        return Outcome(CORRECT if np.array_equal(result.x, x) else ERROR)
    if np.array_equal(result.best_codeword, x):
        return Outcome(CORRECT)
    return Outcome(ERROR, selection_error=result.contains(x) > 0)


def ml_lower_bound_update(u_true, u_out, llr, spec: CodeSpec) -> bool:
    """True when the decoded path is at least as likely as the transmitted one.

    Such an error would be made by a maximum-likelihood decoder as well.
    """
    u_true = np.asarray(u_true, dtype=np.uint8)
    u_out = np.asarray(u_out, dtype=np.uint8)
    if np.array_equal(u_true, u_out):
        return False
    return path_metric_of(u_out, llr, spec) <= path_metric_of(u_true, llr, spec)


@dataclass
class PointStats:
    """Counters for one SNR point; merging is plain addition and max."""

    snr_db: float
    frames: int = 0
    errors: int = 0
    failures: int = 0
    selection_errors: int = 0
    ml_lb: int = 0
    nodes_sum: int = 0
    nodes_max: int = 0
    flops_sum: int = 0
    flops_max: int = 0
    cycles_sum: int = 0
    cycles_max: int = 0
    truncated: bool = False

    def merge(self, o: "PointStats") -> None:
        self.frames += o.frames
        self.errors += o.errors
        self.failures += o.failures
        self.selection_errors += o.selection_errors
        self.ml_lb += o.ml_lb
        self.nodes_sum += o.nodes_sum
        self.flops_sum += o.flops_sum
        self.cycles_sum += o.cycles_sum
        self.nodes_max = max(self.nodes_max, o.nodes_max)
        self.flops_max = max(self.flops_max, o.flops_max)
        self.cycles_max = max(self.cycles_max, o.cycles_max)

    @property
    def frame_errors(self) -> int:
        return self.errors + self.failures

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def fer_stderr(self) -> float:
        p = self.fer
        return math.sqrt(p * (1.0 - p) / self.frames) if self.frames else 0.0

    @property
    def ml_lb_rate(self) -> float:
        return self.ml_lb / self.frames if self.frames else 0.0

    def row(self) -> dict:
        f = max(self.frames, 1)
        return {
            "snr_db": self.snr_db, "frames": self.frames, "errors": self.errors,
            "failures": self.failures, "selection_errors": self.selection_errors,
            "fer": self.fer, "fer_stderr": self.fer_stderr, "ml_lb": self.ml_lb,
            "mean_nodes": self.nodes_sum / f, "max_nodes": self.nodes_max,
            "mean_flops": self.flops_sum / f, "max_flops": self.flops_max,
            "mean_cycles": self.cycles_sum / f, "max_cycles": self.cycles_max,
        }


@dataclass
class SimReport:
    points: list[PointStats]
    config: dict = field(default_factory=dict)
    frame_log: list[tuple] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in self.points:
            r = p.row()
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    outcome: str
    selection_error: bool
    ml_counted: bool
    nodes: int
    flops: int
    cycles: int


def draw_frame(spec: CodeSpec, ch: ChannelConfig, seed: int, snr_index: int, frame: int):
    """(data, codeword, LLRs) of one frame; depends only on its arguments."""
    rng = frame_rng(seed, snr_index, frame)
    d = rng.integers(0, 2, spec.k, dtype=np.uint8)
    x = encode(d, spec)
    y = transmit(modulate(x), ch, rng)
    return d, x, channel_llr(y, ch)


def run_frame(spec: CodeSpec, decoder, ch: ChannelConfig, seed: int, snr_index: int,
              frame: int, ml_bound: bool = True) -> FrameRecord:
    d, x, lam = draw_frame(spec, ch, seed, snr_index, frame)
    res = decoder.decode(lam)
    out = classify_outcome(x, res)
    counted = False
    if out.kind == ERROR and ml_bound:
        u_out = res.u[0] if isinstance(res, CandidateList) else res.u
        counted = ml_lower_bound_update(precode(d, spec), u_out, lam, spec)
    c = res.counters
    cycles = res.cycles if isinstance(res, FanoOutcome) else 0
    return FrameRecord(frame, out.kind, out.selection_error, counted, c["nodes"],
                       flop_counts(c)["total"], cycles)


def _run_chunk(spec, decoder, ch, seed, snr_index, start, count, ml_bound, keep_log):
    st = PointStats(ch.ebno_db)
    log = []
    for f in range(start, start + count):
        r = run_frame(spec, decoder, ch, seed, snr_index, f, ml_bound)
        st.frames += 1
        st.errors += r.outcome == ERROR
        st.failures += r.outcome == FAILURE
        st.selection_errors += r.selection_error
        st.ml_lb += r.ml_counted
        st.nodes_sum += r.nodes
        st.nodes_max = max(st.nodes_max, r.nodes)
        st.flops_sum += r.flops
        st.flops_max = max(st.flops_max, r.flops)
        st.cycles_sum += r.cycles
        st.cycles_max = max(st.cycles_max, r.cycles)
        if keep_log and r.outcome != CORRECT:
            log.append((ch.ebno_db, r.frame, r.outcome, int(r.selection_error),
                        int(r.ml_counted)))
    return st, log


# per-process decoder cache for worker pools
_WORKER: dict = {}


def _worker_init(spec, dec_cfg):
    _WORKER["spec"] = spec
    _WORKER["decoder"] = dec_cfg.build(spec)


def _worker_chunk(args):
    ch, seed, snr_index, start, count, ml_bound, keep_log = args
    return _run_chunk(_WORKER["spec"], _WORKER["decoder"], ch, seed, snr_index, start,
                      count, ml_bound, keep_log)


def _chunk_plan(stop: StoppingRule):
    start = 0
    while start < stop.max_frames:
        count = min(stop.chunk, stop.max_frames - start)
        yield start, count
        start += count


def run_fer(spec: CodeSpec, decoder: DecoderConfig, snrs: Sequence[float],
            stop: StoppingRule = StoppingRule(), seed: int = 0, threads: int = 1,
            ml_bound: bool = True, keep_log: bool = False) -> SimReport:
    """Simulate the frame error rate at each Eb/N0 in ``snrs``."""
    points = []
    frame_log = []
    pool = None
    if threads > 1:
        pool = ProcessPoolExecutor(max_workers=threads, initializer=_worker_init,
                                   initargs=(spec, decoder))
        local = None
    else:
        local = decoder.build(spec)
    try:
        for s_idx, snr in enumerate(snrs):
            ch = ChannelConfig(float(snr), spec.rate, seed)
            total = PointStats(float(snr))
            plan = _chunk_plan(stop)
            if pool is None:
                for start, count in plan:
                    st, log = _run_chunk(spec, local, ch, seed, s_idx, start, count,
                                         ml_bound, keep_log)
                    total.merge(st)
                    frame_log.extend(log)
                    if total.frame_errors >= stop.min_frame_errors:
                        break
            else:
                _pool_point(pool, threads, plan, ch, seed, s_idx, ml_bound, keep_log,
                            stop, total, frame_log)
            total.truncated = total.frame_errors < stop.min_frame_errors
            points.append(total)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    cfg = {"spec": {"n": spec.n, "k": spec.k, "generator": "".join(map(str, spec.generator))},
           "decoder": decoder.kind, "stopping": asdict(stop), "seed": seed}
    return SimReport(points=points, config=cfg, frame_log=frame_log)


def _pool_point(pool, threads, plan, ch, seed, s_idx, ml_bound, keep_log, stop, total,
                frame_log):
    # keep a window of chunks in flight and fold results back in chunk order
    pending = []
    plan = iter(plan)
    exhausted = False
    while True:
        while not exhausted and len(pending) < 2 * threads:
            try:
                start, count = next(plan)
            except StopIteration:
                exhausted = True
                break
            pending.append(pool.submit(_worker_chunk,
                                       (ch, seed, s_idx, start, count, ml_bound, keep_log)))
        if not pending:
            return
        st, log = pending.pop(0).result()
        total.merge(st)
        frame_log.extend(log)
        if total.frame_errors >= stop.min_frame_errors:
            for fut in pending:
                fut.cancel()
            return


def parse_snr_list(text: str) -> list[float]:
    """``a:b:c`` (start, step, stop inclusive) or comma-separated values."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"snr list: expected start:step:stop, got {text!r}")
        a, step, b = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ValueError("snr list: need step > 0 and stop >= start")
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        return [round(a + i * step, 10) for i in range(count)]
    vals = [float(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise ValueError("snr list is empty")
    return vals


def frames_log_csv(records: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("snr_db", "frame", "outcome", "selection_error", "ml_lb"))
    for r in records:
        w.writerow(r)
    return buf.getvalue()
