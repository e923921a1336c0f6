"""BPSK over the binary-input AWGN channel, with per-frame random streams."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ChannelConfig:
    """Eb/N0 in dB and code rate; sigma follows from unit-energy BPSK."""

    ebno_db: float
    rate: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.rate <= 1:
            raise ValueError("rate must be in (0, 1]")
        if not math.isfinite(self.ebno_db):
            raise ValueError("ebno_db must be finite")

    @property
    def sigma2(self) -> float:
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.ebno_db / 10.0))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def frame_rng(seed: int, stream: int, frame: int) -> np.random.Generator:
    """Generator for one frame: Philox keyed by (seed, stream), frame in the counter.

    Each frame owns a 2**128 block of counter space, so frames never overlap and
    any single frame can be regenerated on its own.
    """
    bg = np.random.Philox(key=[seed & MASK64, stream & MASK64],
                          counter=[0, 0, frame & MASK64, 0])
    return np.random.Generator(bg)


def modulate(x) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(x, dtype=np.float64)


def hard_decision(y) -> np.ndarray:
    return (np.asarray(y) < 0).astype(np.uint8)


def transmit(s, cfg: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    return s + cfg.sigma * rng.standard_normal(s.shape)


def llr(y, cfg: ChannelConfig) -> np.ndarray:
    """2 y / sigma^2; positive favours bit 0."""
    return 2.0 * np.asarray(y, dtype=np.float64) / cfg.sigma2


def uncoded_ber(cfg: ChannelConfig) -> float:
    return 0.5 * math.erfc(1.0 / cfg.sigma / math.sqrt(2.0))
