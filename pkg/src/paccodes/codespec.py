"""Code parameters, rate profiles and index utilities for PAC codes.

Indices are decoding phases: phase ``i`` of a length ``n = 2**m`` code sits in
the successive-cancellation tree by reading the m bits of ``i`` from the most
significant end (``0`` = left/check child, ``1`` = right/variable child).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

DEFAULT_GENERATOR = (1, 0, 1, 1, 0, 1, 1)
DEFAULT_DESIGN_SNR_DB = 2.0


def _log2_exact(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ValueError(f"block length must be a power of two, got {n}")
    return n.bit_length() - 1


def bit_reverse(i: int, m: int) -> int:
    """Reverse the m-bit binary expansion of ``i``."""
    if m < 0 or not 0 <= i < (1 << m):
        raise ValueError(f"index {i} out of range for depth {m}")
    out = 0
    for _ in range(m):
        out = (out << 1) | (i & 1)
        i >>= 1
    return out


def bit_reversal_permutation(m: int) -> np.ndarray:
    idx = np.arange(1 << m)
    out = np.zeros_like(idx)
    for b in range(m):
        out |= ((idx >> b) & 1) << (m - 1 - b)
    return out


def hamming_weights(n: int) -> np.ndarray:
    idx = np.arange(n)
    w = np.zeros(n, dtype=np.int64)
    while idx.any():
        w += idx & 1
        idx = idx >> 1
    return w


def rm_profile(n: int, k: int) -> tuple[int, ...]:
    """The k indices of largest binary weight; ties go to the larger index."""
    _log2_exact(n)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    wt = hamming_weights(n)
    # sort by (weight desc, index desc)
    order = sorted(range(n), key=lambda i: (-wt[i], -i))
    return tuple(sorted(order[:k]))


# -- Gaussian approximation of density evolution --------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(256)
_GL_UPPER = 90.0
_GL_NODES = 0.5 * _GL_UPPER * (_GL_X + 1.0)
_GL_WEIGHTS = 0.5 * _GL_UPPER * _GL_W
_GH_X, _GH_W = np.polynomial.hermite.hermgauss(96)


def log_phi(mu: float) -> float:
    """log of phi(mu) = 1 - E[tanh(L/2)], L ~ N(mu, 2 mu).

    For mu >= 1 the expectation is rewritten as
    exp(-mu/4)/sqrt(4 pi mu) * int sech(l/2) exp(-l^2/(4 mu)) dl, which stays
    accurate when phi underflows.
    """
    if mu <= 0.0:
        return 0.0
    if mu < 1.0:
        ell = mu + 2.0 * np.sqrt(mu) * _GH_X
        val = np.dot(_GH_W, 2.0 / (1.0 + np.exp(ell))) / np.sqrt(np.pi)
        return float(np.log(val))
    integrand = np.exp(-_GL_NODES**2 / (4.0 * mu)) / np.cosh(0.5 * _GL_NODES)
    total = 2.0 * np.dot(_GL_WEIGHTS, integrand)
    return float(-mu / 4.0 - 0.5 * np.log(4.0 * np.pi * mu) + np.log(total))


def inverse_log_phi(target: float) -> float:
    if target >= 0.0:
        return 0.0
    hi = 1.0
    while log_phi(hi) > target:
        hi *= 2.0
    lo = hi / 2.0 if hi > 1.0 else 0.0
    while lo > 0.0 and log_phi(lo) < target:
        lo /= 2.0
    if lo == 0.0:
        lo = 1e-300
    return float(brentq(lambda x: log_phi(x) - target, lo, hi, xtol=1e-13, rtol=1e-13))


def check_node_mean(mu: float) -> float:
    """Mean LLR of the check-node (f) combination of two N(mu, 2mu) inputs."""
    lp = log_phi(mu)
    # 1 - (1 - phi)^2 = phi (2 - phi)
    return inverse_log_phi(lp + np.log(2.0 - np.exp(lp)))


@dataclass(frozen=True)
class ReliabilityTable:
    """Per-phase mean LLR under the Gaussian approximation (larger = better)."""

    values: np.ndarray
    design_snr_db: float
    rate: float = 1.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("reliability values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    def error_probabilities(self) -> np.ndarray:
        """Bit-channel error probability Q(sqrt(mu/2)) for each phase."""
        return ndtr(-np.sqrt(self.values / 2.0))

    def capacities(self) -> np.ndarray:
        """Bit-channel mutual information J(mu) in bits."""
        out = np.empty(len(self.values))
        for i, mu in enumerate(self.values):
            out[i] = _j_function(float(mu))
        return out


def _j_function(mu: float) -> float:
    if mu <= 0:
        return 0.0
    ell = mu + 2.0 * np.sqrt(mu) * _GH_X
    return float(1.0 - np.dot(_GH_W, np.logaddexp(0.0, -ell)) / np.sqrt(np.pi) / np.log(2.0))


def channel_mean_llr(design_snr_db: float, rate: float = 1.0) -> float:
    """Mean channel LLR 2/sigma^2 for BPSK at Eb/N0 = design_snr_db."""
    return 4.0 * rate * 10.0 ** (design_snr_db / 10.0)


@lru_cache(maxsize=64)
def _reliability_values(n: int, design_snr_db: float, rate: float) -> tuple[float, ...]:
    m = _log2_exact(n)
    level = [channel_mean_llr(design_snr_db, rate)]
    for _ in range(m):
        nxt = []
        for mu in level:
            nxt.append(check_node_mean(mu))
            nxt.append(2.0 * mu)
        level = nxt
    return tuple(level)


def reliability_table(n: int, design_snr_db: float = DEFAULT_DESIGN_SNR_DB,
                      rate: float = 1.0) -> ReliabilityTable:
    """Gaussian-approximation mean LLR of every bit-channel.

    ``design_snr_db`` is an Eb/N0 at code rate ``rate`` (rate 1 makes it Es/N0).
    """
    vals = np.array(_reliability_values(n, float(design_snr_db), float(rate)))
    return ReliabilityTable(values=vals, design_snr_db=float(design_snr_db), rate=float(rate))


def polar_profile(n: int, k: int, design_snr_db: float = DEFAULT_DESIGN_SNR_DB) -> tuple[int, ...]:
    """The k most reliable bit-channels (design SNR is Eb/N0 at rate k/n)."""
    _log2_exact(n)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    table = reliability_table(n, design_snr_db, rate=k / n)
    order = sorted(range(n), key=lambda i: (-table.values[i], i))
    return tuple(sorted(order[:k]))


# -- code description ---------------------------------------------------------------


def parse_generator(text: str | Sequence[int]) -> tuple[int, ...]:
    """Generator in binary (``1011011``) or octal (``0o133``) notation, c_0 first."""
    if not isinstance(text, str):
        return tuple(int(b) for b in text)
    s = text.strip().lower()
    if s.startswith("0o"):
        s = bin(int(s[2:], 8))[2:]
    elif s.startswith("0b"):
        s = s[2:]
    if not s or any(ch not in "01" for ch in s):
        raise ValueError(f"cannot parse generator {text!r}")
    return tuple(int(ch) for ch in s)


@dataclass(frozen=True)
class CodeSpec:
    """An (n, k) PAC code: rate profile plus convolutional generator."""

    n: int
    k: int
    profile: tuple[int, ...]
    generator: tuple[int, ...] = DEFAULT_GENERATOR
    name: str = ""
    mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _log2_exact(self.n)
        profile = tuple(sorted(int(i) for i in self.profile))
        gen = tuple(int(c) for c in self.generator)
        if len(set(profile)) != len(profile) or len(profile) != self.k:
            raise ValueError(f"profile must hold k={self.k} distinct indices")
        if profile and not (0 <= profile[0] and profile[-1] < self.n):
            raise ValueError("profile index out of range")
        if not gen or any(c not in (0, 1) for c in gen):
            raise ValueError("generator must be a nonempty 0/1 sequence")
        if gen[0] != 1 or gen[-1] != 1:
            raise ValueError("generator: need c_0 = c_nu = 1")
        if len(gen) > 64:
            raise ValueError("generator memory above 63 is not supported")
        object.__setattr__(self, "profile", profile)
        object.__setattr__(self, "generator", gen)
        mask = np.zeros(self.n, dtype=np.uint8)
        mask[list(profile)] = 1
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def m(self) -> int:
        return self.n.bit_length() - 1

    @property
    def nu(self) -> int:
        return len(self.generator) - 1

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def frozen(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if not self.mask[i])

    def is_frozen(self, i: int) -> bool:
        return not self.mask[i]

    @property
    def history_mask(self) -> int:
        """c_1..c_nu packed so that bit j-1 multiplies v_{i-j}."""
        out = 0
        for j in range(1, len(self.generator)):
            if self.generator[j]:
                out |= 1 << (j - 1)
        return out

    @classmethod
    def rm(cls, n: int, k: int, generator: Sequence[int] = DEFAULT_GENERATOR) -> "CodeSpec":
        return cls(n, k, rm_profile(n, k), tuple(generator), name="rm")

    @classmethod
    def polar(cls, n: int, k: int, generator: Sequence[int] = DEFAULT_GENERATOR,
              design_snr_db: float = DEFAULT_DESIGN_SNR_DB) -> "CodeSpec":
        return cls(n, k, polar_profile(n, k, design_snr_db), tuple(generator), name="polar")

    def with_generator(self, generator: Sequence[int]) -> "CodeSpec":
        return CodeSpec(self.n, self.k, self.profile, tuple(generator), name=self.name)


def write_profile(profile: Iterable[int], path: str | Path) -> None:
    Path(path).write_text("".join(f"{i}\n" for i in sorted(profile)))


def read_profile(path: str | Path) -> tuple[int, ...]:
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(int(line))
    return tuple(sorted(out))
