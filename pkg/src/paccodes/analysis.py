"""Weight-spectrum estimation, truncated union bound and the normal approximation.

The low-weight part of a spectrum is found by sending the all-zero codeword
through a nearly noiseless channel and list decoding with a huge list: the
surviving candidates are then the codewords closest to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import log_ndtr, ndtr

from .channel import ChannelConfig, frame_rng, llr as channel_llr, transmit
from .codespec import CodeSpec, DEFAULT_DESIGN_SNR_DB, polar_profile, rm_profile
from .encoder import encode
from .scl import ListDecoder

TABLE_WEIGHTS = (8, 12, 16, 18, 20, 22)
CRC8_POLY = 0x07


def qfunc(x):
    return ndtr(-np.asarray(x, dtype=np.float64))


# -- CRC ---------------------------------------------------------------------------


def crc_matrix(k: int, width: int = 8, poly: int = CRC8_POLY) -> np.ndarray:
    """k x width matrix G with crc(d) = d G (mod 2); MSB-first, zero init."""
    out = np.zeros((k, width), dtype=np.uint8)
    top = 1 << (width - 1)
    full = (1 << width) - 1
    for row in range(k):
        reg = 0
        for i in range(k):
            bit = 1 if i == row else 0
            fb = ((reg & top) != 0) ^ bit
            reg = (reg << 1) & full
            if fb:
                reg ^= poly
        out[row] = [(reg >> (width - 1 - j)) & 1 for j in range(width)]
    return out


def crc_bits(d, width: int = 8, poly: int = CRC8_POLY) -> np.ndarray:
    d = np.asarray(d, dtype=np.uint8)
    g = crc_matrix(d.shape[-1], width, poly)
    return ((d.astype(np.int64) @ g) & 1).astype(np.uint8)


# -- weight spectra ----------------------------------------------------------------


@dataclass
class WeightSpectrum:
    """Observed codeword counts per weight (A_0 = 1 left out)."""

    counts: dict[int, int]
    list_size_used: int
    saturated: dict[int, bool] = field(default_factory=dict)
    trials: int = 1
    high_snr_db: float = 8.0

    def __getitem__(self, w: int) -> int:
        return self.counts.get(w, 0)

    @property
    def min_weight(self) -> int | None:
        return min(self.counts) if self.counts else None


@dataclass(frozen=True)
class CodeFamily:
    """A code for spectrum work: a PAC spec plus an optional CRC on the data."""

    name: str
    spec: CodeSpec
    crc_width: int = 0
    crc_poly: int = CRC8_POLY

    @property
    def k(self) -> int:
        return self.spec.k - self.crc_width

    @property
    def rate(self) -> float:
        return self.k / self.spec.n

    def members(self, d: np.ndarray) -> np.ndarray:
        """Rows of decoded data words that belong to the code."""
        if not self.crc_width:
            return np.ones(len(d), dtype=bool)
        info, check = d[:, : self.k], d[:, self.k:]
        return np.all(crc_bits(info, self.crc_width, self.crc_poly) == check, axis=1)


def baseline(name: str, n: int = 128, k: int = 64,
             generator: Sequence[int] = (1, 0, 1, 1, 0, 1, 1),
             design_snr_db: float = DEFAULT_DESIGN_SNR_DB) -> CodeFamily:
    """Named comparison codes: pac-rm, pac-polar, polar, polar-crc8, rm."""
    if name == "pac-rm":
        return CodeFamily(name, CodeSpec(n, k, rm_profile(n, k), tuple(generator), "pac-rm"))
    if name == "pac-polar":
        return CodeFamily(name, CodeSpec(n, k, polar_profile(n, k, design_snr_db),
                                         tuple(generator), "pac-polar"))
    if name == "polar":
        return CodeFamily(name, CodeSpec(n, k, polar_profile(n, k, design_snr_db), (1,), "polar"))
    if name == "polar-crc8":
        # the profile is chosen for the mother code rate (k + 8) / n
        prof = polar_profile(n, k + 8, design_snr_db)
        return CodeFamily(name, CodeSpec(n, k + 8, prof, (1,), "polar-crc8"), crc_width=8)
    if name == "rm":
        return CodeFamily(name, CodeSpec(n, k, rm_profile(n, k), (1,), "rm"))
    raise ValueError(f"unknown baseline {name!r}")


def _as_family(code) -> CodeFamily:
    return code if isinstance(code, CodeFamily) else CodeFamily(code.name or "pac", code)


def _collect(family: CodeFamily, L: int, high_snr_db: float, trials: int, seed: int):
    """Distinct nonzero member codewords found over all trials: (packed d, weights)."""
    spec = family.spec
    dec = ListDecoder(spec, L)
    ch = ChannelConfig(high_snr_db, family.rate, seed)
    zero = np.zeros(spec.n)
    keys = []
    weights = []
    for t in range(trials):
        rng = frame_rng(seed, 0xA11, t)
        lam = channel_llr(transmit(1.0 + zero, ch, rng), ch)
        cand = dec.decode(lam)
        ok = family.members(cand.d)
        d, x = cand.d[ok], cand.x[ok]
        w = x.sum(axis=1, dtype=np.int64)
        nz = w > 0
        keys.append(np.packbits(d[nz], axis=1))
        weights.append(w[nz])
    if not keys:
        return np.zeros((0, 0), np.uint8), np.zeros(0, np.int64)
    keys = np.concatenate(keys)
    weights = np.concatenate(weights)
    _, first = np.unique(keys, axis=0, return_index=True)
    return keys[first], weights[first]


def _verify_members(family: CodeFamily, packed: np.ndarray, weights: np.ndarray) -> None:
    """Re-encode every counted data word and check its weight."""
    spec = family.spec
    for s in range(0, len(packed), 65536):
        d = np.unpackbits(packed[s:s + 65536], axis=1, count=spec.k)
        x = encode(d, spec)
        if not np.array_equal(x.sum(axis=1), weights[s:s + 65536]):
            raise AssertionError("decoded candidate is not a codeword of the stated weight")
        if not family.members(d).all():
            raise AssertionError("candidate fails the CRC")


def _histogram(weights: np.ndarray) -> dict[int, int]:
    vals, cnt = np.unique(weights, return_counts=True)
    return {int(w): int(c) for w, c in zip(vals, cnt)}


def estimate_spectrum(code, L: int, high_snr_db: float = 8.0, trials: int = 8,
                      seed: int = 0, saturation: bool = True,
                      verify: bool = True) -> WeightSpectrum:
    """Low-weight spectrum from list decoding noisy all-zero frames.

    Candidates from ``trials`` frames are merged by data word. With
    ``saturation`` the run is repeated at ``L // 2`` and a weight counts as
    saturated when both list sizes found the same number of codewords.
    """
    if L < 2:
        raise ValueError("list size must be >= 2")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    family = _as_family(code)
    try:
        packed, weights = _collect(family, L, high_snr_db, trials, seed)
    except MemoryError as exc:
        raise MemoryError(f"{exc}; try a smaller list size") from exc
    if verify:
        _verify_members(family, packed, weights)
    counts = _histogram(weights)
    sat = {}
    if saturation:
        _, w_half = _collect(family, L // 2, high_snr_db, trials, seed)
        half = _histogram(w_half)
        sat = {w: half.get(w, 0) == c for w, c in counts.items()}
    return WeightSpectrum(counts=counts, list_size_used=L, saturated=sat, trials=trials,
                          high_snr_db=high_snr_db)


def exhaustive_spectrum(code) -> dict[int, int]:
    """All 2^k codewords (small k only)."""
    family = _as_family(code)
    spec = family.spec
    if spec.k > 20:
        raise ValueError("exhaustive enumeration limited to k <= 20")
    idx = np.arange(1 << spec.k, dtype=np.int64)
    d = ((idx[:, None] >> np.arange(spec.k - 1, -1, -1)) & 1).astype(np.uint8)
    d = d[family.members(d)]
    w = encode(d, spec).sum(axis=1)
    return _histogram(w[w > 0])


# -- bounds ------------------------------------------------------------------------


@dataclass
class BoundCurve:
    points: list[tuple[float, float]]
    kind: str

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


def truncated_union_bound(spectrum: WeightSpectrum | Mapping[int, int], rate: float,
                          snrs: Iterable[float]) -> BoundCurve:
    """sum_w A_w Q(sqrt(2 w R Eb/N0)) over the known weights only."""
    counts = spectrum.counts if isinstance(spectrum, WeightSpectrum) else dict(spectrum)
    pts = []
    for snr in snrs:
        g = rate * 10.0 ** (snr / 10.0)
        val = sum(a * float(qfunc(math.sqrt(2.0 * w * g))) for w, a in counts.items())
        pts.append((float(snr), val))
    return BoundCurve(pts, "truncated-union")


_GH_NODES = 128


def biawgn_info_density_moments(snr_db: float, rate: float) -> tuple[float, float]:
    """Capacity C and dispersion V (bits, bits^2) of BPSK at Eb/N0 ``snr_db``.

    With x = +1 sent, y = 1 + sigma Z and i(y) = 1 - log2(1 + exp(-2y/sigma^2));
    both moments are Gauss-Hermite averages over Z.
    """
    sigma2 = ChannelConfig(snr_db, rate).sigma2
    t, wts = np.polynomial.hermite.hermgauss(_GH_NODES)
    y = 1.0 + math.sqrt(2.0 * sigma2) * t
    dens = 1.0 - np.logaddexp(0.0, -2.0 * y / sigma2) / math.log(2.0)
    wts = wts / math.sqrt(math.pi)
    c = float(np.dot(wts, dens))
    v = float(np.dot(wts, (dens - c) ** 2))
    return c, v


def normal_approximation(n: int, rate: float, snrs: Iterable[float]) -> BoundCurve:
    """eps with R = C - sqrt(V/n) Qinv(eps) + log2(n)/(2n)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    pts = []
    for snr in snrs:
        c, v = biawgn_info_density_moments(snr, rate)
        arg = (c - rate + math.log2(n) / (2 * n)) / math.sqrt(v / n)
        pts.append((float(snr), float(math.exp(log_ndtr(-arg)))))
    return BoundCurve(pts, "normal-approximation")


# -- comparison table --------------------------------------------------------------


@dataclass
class ComparisonRow:
    name: str
    spectrum: WeightSpectrum
    bound: BoundCurve


def compare_codes(codes: Sequence[str | CodeFamily], L: int, snrs: Sequence[float],
                  n: int = 128, k: int = 64, trials: int = 8, seed: int = 0,
                  high_snr_db: float = 8.0) -> list[ComparisonRow]:
    rows = []
    for code in codes:
        fam = baseline(code, n, k) if isinstance(code, str) else code
        spec_ = estimate_spectrum(fam, L, high_snr_db, trials, seed)
        rows.append(ComparisonRow(fam.name, spec_, truncated_union_bound(spec_, fam.rate, snrs)))
    return rows


def comparison_table(rows: Sequence[ComparisonRow],
                     weights: Sequence[int] = TABLE_WEIGHTS) -> str:
    head = "code," + ",".join(f"A{w}" for w in weights)
    lines = [head]
    for r in rows:
        lines.append(r.name + "," + ",".join(str(r.spectrum[w]) for w in weights))
    return "\n".join(lines) + "\n"
