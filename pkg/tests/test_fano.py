import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paccodes.codespec import CodeSpec
from paccodes.encoder import encode
from paccodes.fano import (FanoConfig, FanoDecoder, count_cycles, fano_decode, make_bias,
                           metric_from_penalty, reliability_bias)
from paccodes.scl import path_metric_of, scl_decode

SPEC = CodeSpec.rm(128, 64)


def noisy(rng, spec, snr_db):
    d = rng.integers(0, 2, spec.k).astype(np.uint8)
    x = encode(d, spec)
    sigma2 = 1 / (2 * spec.rate * 10 ** (snr_db / 10))
    y = 1 - 2 * x.astype(float) + math.sqrt(sigma2) * rng.standard_normal(spec.n)
    return d, x, 2 * y / sigma2


def test_noiseless_no_backtracking():
    rng = np.random.default_rng(0)
    d = rng.integers(0, 2, 64).astype(np.uint8)
    x = encode(d, SPEC)
    out = fano_decode(50.0 * (1 - 2 * x.astype(float)), SPEC)
    assert not out.failed and np.array_equal(out.x, x) and np.array_equal(out.d, d)
    assert out.cycles == 128 and out.backward_moves == 0 and count_cycles(out) == 128
    assert out.nodes_visited == 64


def test_cycle_cap_one_fails():
    rng = np.random.default_rng(1)
    _, _, llr = noisy(rng, SPEC, 1.0)
    out = fano_decode(llr, SPEC, FanoConfig(cycle_cap=1))
    assert out.failed and out.cycles == 1 and out.result is None


def test_hand_built_single_backtrack():
    # n = 2, u_1 = u_0 (dynamic frozen): the locally better u_0 = 1 dies at
    # phase 1, the search backs up once and takes u_0 = 0.
    # phase-0 LLR f(-3, 0.5) < 0 prefers u_0 = 1; the forced u_1 = 1 then has
    # LLR 3.5 and a branch metric of about -1.89, below the threshold 0.
    spec = CodeSpec(2, 1, (0,), (1, 1))
    out = fano_decode(np.array([-3.0, 0.5]), spec,
                      FanoConfig(delta=4.0, bias=np.array([-2.0, -3.2])))
    assert (out.forward_moves, out.backward_moves) == (3, 1)
    assert count_cycles(out) == out.cycles == 4
    assert list(out.u) == [0, 0]
    assert out.final_metric == pytest.approx(0.1178696, abs=1e-6)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_deterministic_and_consistent(seed):
    rng = np.random.default_rng(seed)
    _, _, llr = noisy(rng, SPEC, 2.0)
    dec = FanoDecoder(SPEC)
    a, b = dec.decode(llr), dec.decode(llr)
    assert a.cycles == b.cycles and a.final_metric == b.final_metric
    if not a.failed:
        assert np.array_equal(encode(a.d, SPEC), a.x)
        pm = path_metric_of(a.u, llr, SPEC)
        assert a.final_metric == pytest.approx(metric_from_penalty(pm, dec.bias), abs=1e-7)
        assert count_cycles(a) == a.cycles


def test_huge_delta_without_dips_is_sc():
    rng = np.random.default_rng(2)
    cfg = FanoConfig(delta=1e9, bias=np.full(128, -10.0))
    checked = 0
    for _ in range(100):
        _, _, llr = noisy(rng, SPEC, 2.0)
        out = fano_decode(llr, SPEC, cfg)
        if out.backward_moves == 0:
            checked += 1
            assert np.array_equal(out.x, scl_decode(llr, SPEC, 1).best_codeword)
    assert checked > 50


def test_bias_options():
    assert np.all(reliability_bias(SPEC) <= 0)
    assert make_bias(SPEC, "const:0.5").tolist() == [0.5] * 128
    cap = make_bias(SPEC, "capacity")
    assert cap.shape == (128,) and np.all(np.isfinite(cap))
    with pytest.raises(ValueError):
        make_bias(SPEC, "nope")
    with pytest.raises(ValueError):
        FanoConfig(delta=0)
    with pytest.raises(ValueError):
        FanoConfig(cycle_cap=0)
    with pytest.raises(ValueError):
        FanoConfig(bias=np.array([np.nan]))


@pytest.mark.slow
def test_cycles_decrease_with_snr():
    spec = CodeSpec.rm(64, 32)
    dec = FanoDecoder(spec)
    means = []
    for snr in (1.0, 3.0):
        rng = np.random.default_rng(7)
        means.append(np.mean([dec.decode(noisy(rng, spec, snr)[2]).cycles
                              for _ in range(10_000)]))
    assert means[0] > means[1]
