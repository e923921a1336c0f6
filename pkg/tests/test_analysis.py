import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import all_codewords, biawgn_c_v_quad, q_mp
from paccodes.analysis import (CodeFamily, WeightSpectrum, baseline, biawgn_info_density_moments,
                               comparison_table, compare_codes, crc_bits, estimate_spectrum,
                               exhaustive_spectrum, normal_approximation, truncated_union_bound)
from paccodes.channel import ChannelConfig
from paccodes.codespec import CodeSpec

SPEC16 = CodeSpec.rm(16, 8, (1, 0, 1, 1))


def test_exhaustive_spectrum_against_dense_oracle():
    _, code = all_codewords(SPEC16.profile, SPEC16.generator, 16)
    w = code.sum(axis=1)
    vals, cnt = np.unique(w[w > 0], return_counts=True)
    assert exhaustive_spectrum(SPEC16) == dict(zip(vals.tolist(), cnt.tolist()))


def test_full_list_finds_whole_spectrum():
    ws = estimate_spectrum(SPEC16, 256, trials=2)
    assert ws.counts == exhaustive_spectrum(SPEC16)
    assert set(ws.saturated) == set(ws.counts)
    assert all(w % 2 == 0 for w in ws.counts)


def test_small_list_respects_min_distance():
    ws = estimate_spectrum(SPEC16, 2, trials=1, saturation=False)
    dmin = min(exhaustive_spectrum(SPEC16))
    assert all(w >= dmin for w in ws.counts)


def test_counts_monotone_in_list_size():
    spec = CodeSpec.rm(64, 32)
    prev = {}
    for L in (8, 64, 512):
        cur = estimate_spectrum(spec, L, trials=4, saturation=False).counts
        assert sum(cur.values()) >= sum(prev.values())
        prev = cur


def test_saturation_flag_means_equal_counts():
    spec = CodeSpec.rm(64, 32)
    full = estimate_spectrum(spec, 512, trials=4)
    half = estimate_spectrum(spec, 256, trials=4, saturation=False)
    for w, sat in full.saturated.items():
        assert sat == (full[w] == half[w])


def test_crc_is_linear_and_matches_bitwise():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2, (20, 64)).astype(np.uint8)
    b = rng.integers(0, 2, (20, 64)).astype(np.uint8)
    assert np.array_equal(crc_bits(a ^ b), crc_bits(a) ^ crc_bits(b))

    def crc8(bits):
        reg = 0
        for bit in bits:
            fb = ((reg >> 7) & 1) ^ int(bit)
            reg = (reg << 1) & 0xFF
            if fb:
                reg ^= 0x07
        return [(reg >> (7 - j)) & 1 for j in range(8)]

    assert crc_bits(a[0]).tolist() == crc8(a[0])
    # "123456789" check value of CRC-8 (poly 0x07, zero init) is 0xF4
    msg = np.unpackbits(np.frombuffer(b"123456789", dtype=np.uint8))
    assert int("".join(map(str, crc_bits(msg))), 2) == 0xF4


def test_crc_family_members_are_codewords():
    fam = baseline("polar-crc8", 32, 8)
    ws = estimate_spectrum(fam, 64, trials=2, saturation=False)
    assert fam.rate == 8 / 32
    assert sum(ws.counts.values()) <= 2**8


def test_union_bound_single_term():
    ub = truncated_union_bound({16: 3120}, 0.5, [3.0])
    ref = 3120 * q_mp(math.sqrt(16 * 10 ** 0.3))
    assert ub.values[0] == pytest.approx(ref, rel=1e-10)
    assert truncated_union_bound({}, 0.5, [1.0, 2.0]).values.tolist() == [0.0, 0.0]
    table = {16: 3120, 18: 2696, 20: 95828}
    full = truncated_union_bound(table, 0.5, [1, 2, 3]).values
    single = truncated_union_bound({16: 3120}, 0.5, [1, 2, 3]).values
    assert np.all(full >= single) and np.all(np.diff(full) < 0)


@pytest.mark.parametrize("snr", [0.0, 1.0, 2.5, 4.0])
def test_capacity_dispersion_against_quadrature(snr):
    c, v = biawgn_info_density_moments(snr, 0.5)
    c_ref, v_ref = biawgn_c_v_quad(ChannelConfig(snr, 0.5).sigma2)
    assert abs(c - c_ref) < 1e-6 and abs(v - v_ref) < 1e-6


def test_normal_approximation_shape():
    curve = normal_approximation(128, 0.5, np.arange(0.0, 6.01, 0.5))
    vals = curve.values
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-6 and np.all(vals > 0)
    # rate above capacity gives eps above one half
    assert normal_approximation(128, 0.9, [-3.0]).values[0] > 0.5
    with pytest.raises(ValueError):
        normal_approximation(1, 0.5, [1.0])


@given(st.floats(-2, 8), st.floats(0.05, 0.95))
@settings(max_examples=30, deadline=None)
def test_capacity_bounds(snr, rate):
    c, v = biawgn_info_density_moments(snr, rate)
    assert 0 <= c <= 1 and v >= 0


def test_compare_codes_table():
    rows = compare_codes(["pac-rm", "rm"], 64, [2.0], n=32, k=16, trials=2)
    text = comparison_table(rows, (4, 8))
    assert text.splitlines()[0] == "code,A4,A8" and len(text.splitlines()) == 3
    with pytest.raises(ValueError):
        baseline("nope")


def test_polar_baseline_min_distance_is_half_of_pac_rm():
    polar = estimate_spectrum(baseline("polar"), 256, trials=4, saturation=False)
    pac = estimate_spectrum(baseline("pac-rm"), 256, trials=4, saturation=False)
    assert polar.min_weight == 8 and pac.min_weight == 16
