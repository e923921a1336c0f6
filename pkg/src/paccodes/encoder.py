"""PAC encoding chain: rate-profile insertion, convolutional precoding, polar transform.

All functions accept a single word (shape ``(n,)``) or a batch (shape ``(..., n)``)
of 0/1 ``uint8`` values.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .codespec import CodeSpec, bit_reversal_permutation


def _bits(a) -> np.ndarray:
    return np.asarray(a, dtype=np.uint8)


def insert_profile(d, spec: CodeSpec) -> np.ndarray:
    d = _bits(d)
    if d.shape[-1] != spec.k:
        raise ValueError(f"data word length {d.shape[-1]} != k={spec.k}")
    v = np.zeros(d.shape[:-1] + (spec.n,), dtype=np.uint8)
    v[..., list(spec.profile)] = d
    return v


def extract_profile(v, spec: CodeSpec) -> np.ndarray:
    v = _bits(v)
    return v[..., list(spec.profile)].copy()


def convolve(v, c: Sequence[int]) -> np.ndarray:
    """u_i = sum_j c_j v_{i-j} (mod 2), with v_{<0} = 0."""
    v = _bits(v)
    u = np.zeros_like(v)
    n = v.shape[-1]
    for j, cj in enumerate(c):
        if cj and j < n:
            u[..., j:] ^= v[..., : n - j]
    return u


def deconvolve(u, c: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`convolve` (requires c_0 = 1), solved left to right."""
    u = _bits(u)
    if c[0] != 1:
        raise ValueError("deconvolution needs c_0 = 1")
    v = np.zeros_like(u)
    taps = [j for j in range(1, len(c)) if c[j]]
    for i in range(u.shape[-1]):
        acc = u[..., i].copy()
        for j in taps:
            if i - j >= 0:
                acc ^= v[..., i - j]
        v[..., i] = acc
    return v


def butterfly(z) -> np.ndarray:
    """z -> z F^{(x)m} over GF(2), F = [[1,0],[1,1]] (no bit reversal)."""
    x = _bits(z).copy()
    n = x.shape[-1]
    half = 1
    while half < n:
        shaped = x.reshape(x.shape[:-1] + (n // (2 * half), 2, half))
        shaped[..., 0, :] ^= shaped[..., 1, :]
        half *= 2
    return x


def polar_transform(u) -> np.ndarray:
    """x = u B_n F^{(x)m}: bit-reverse, then butterfly."""
    u = _bits(u)
    n = u.shape[-1]
    perm = bit_reversal_permutation(n.bit_length() - 1)
    return butterfly(u[..., perm])


def encode(d, spec: CodeSpec) -> np.ndarray:
    return polar_transform(convolve(insert_profile(d, spec), spec.generator))


def precode(d, spec: CodeSpec) -> np.ndarray:
    """The polar-transform input u for data word(s) d."""
    return convolve(insert_profile(d, spec), spec.generator)


def decode_codeword(x, spec: CodeSpec) -> np.ndarray:
    """Recover d from a codeword x (inverts all three steps; x F = u B)."""
    u = polar_transform(x)  # P_m is an involution
    return extract_profile(deconvolve(u, spec.generator), spec)


def dynamic_frozen_value(history: Sequence[int], c: Sequence[int]) -> int:
    """u_i for a frozen phase (v_i = 0): sum_{j>=1} c_j v_{i-j} mod 2.

    ``history`` lists the already decided carrier bits, most recent last; only
    its last nu entries are used.
    """
    acc = 0
    h = list(history)
    for j in range(1, len(c)):
        if c[j] and j <= len(h):
            acc ^= int(h[-j])
    return acc


def generator_matrix(spec: CodeSpec) -> np.ndarray:
    """k x n generator matrix: codeword of each unit data word."""
    eye = np.eye(spec.k, dtype=np.uint8)
    return encode(eye, spec)
