import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from sclab.arith import mod_inv
from sclab.errors import InvalidParameterError, SampleTooSmallError, SkipSample
from sclab.formats import load_params
from sclab.groups import wnaf_recode
from sclab.hnp import (
    TIMING,
    WNAF_SIGNED,
    WNAF_UNSIGNED,
    AttackConfig,
    HnpEquation,
    HnpKeyRecovery,
    WnafPair,
    build_lattice,
    build_timing_equation,
    build_wnaf_equation,
    derive_params,
    extract_wnaf_pairs,
    filter_fastest,
    pair_is_sound,
    recover_key,
    residual_check,
    success_estimate,
    target_vector,
    wnaf_equations,
)
from sclab.lattice import embed_cvp, matmul
from sclab.leaksim import NoiseModel, Timing, signed_wnaf_oracle
from sclab.sign import RAW, SignatureSample, dsa_keygen, dsa_sign, ecdsa_keygen, ecdsa_sign

CURVE64 = load_params("toy_curve64")
CURVE127 = load_params("toy_curve127")
DSA = load_params("toy_dsa128")


def _forged(q, alpha, k, rng):
    # a consistent (r, s, h) for a chosen nonce, without the group operation
    r = rng.randrange(1, q)
    h = rng.randrange(1, q)
    s = mod_inv(k, q) * (h + alpha * r) % q
    return SignatureSample(r, s, h, truth_nonce=k)


def _ecdsa_batch(curve, n, w, rng, signed):
    key = ecdsa_keygen(curve, rng)
    sigs = []
    for _ in range(n):
        s = ecdsa_sign(rng.randrange(1, curve.q), key, curve, RAW, rng, w=w, capture_sequence=True, record_nonce=True)
        if signed:
            s.leak = signed_wnaf_oracle(s.truth_nonce, w)
        sigs.append(s)
    return key, sigs


class TestParams:
    def test_frozen_values(self):
        assert derive_params(1536, 224, 4) == (104, 70, pytest.approx(3.870717, abs=1e-6))
        f, d, theta = derive_params(16384, 128, 4)
        assert (f, d) == (59, 40)
        # theta by the formula, computed independently
        assert theta == pytest.approx(14 + 2 - 7 - math.log2(1.875))

    def test_too_small(self):
        with pytest.raises(SampleTooSmallError):
            derive_params(50, 224, 4)

    def test_success_estimate(self):
        assert success_estimate() == pytest.approx(0.7135, abs=1e-4)

    def test_config_invariants(self):
        with pytest.raises(InvalidParameterError):
            AttackConfig(c=0)
        with pytest.raises(InvalidParameterError):
            AttackConfig(delta=2.5)
        with pytest.raises(InvalidParameterError):
            AttackConfig(N=10, f=11)
        with pytest.raises(InvalidParameterError):
            AttackConfig(f=10, d=11)


class TestFilter:
    def _samples(self, omegas):
        return [SignatureSample(1, 1, 1, Timing(o)) for o in omegas]

    def test_basic(self):
        s = self._samples([3.0, 1.0, 2.0, 1.0])
        assert filter_fastest(s, 4) == [s[1], s[3], s[2], s[0]]
        assert filter_fastest(s, 1) == [s[1]]
        with pytest.raises(InvalidParameterError):
            filter_fastest(s, 5)
        with pytest.raises(InvalidParameterError):
            filter_fastest([SignatureSample(1, 1, 1)], 1)

    def test_noise_free_audit(self):
        rng = random.Random(1)
        key = dsa_keygen(DSA, rng)
        sigs = [dsa_sign(rng.randrange(1, DSA.q), key, DSA, rng=rng, leak_model=NoiseModel(), record_nonce=True)
                for _ in range(4096)]
        f, _, _ = derive_params(len(sigs), DSA.q.bit_length(), 4)
        kept = filter_fastest(sigs, f)
        assert all(s.truth_nonce < DSA.q >> 4 for s in kept)
        for i, s in enumerate(kept):
            assert residual_check(build_timing_equation(s, 4, DSA.q, i), key.alpha, DSA.q)


class TestTimingEquations:
    def test_fields(self):
        q = DSA.q
        s = SignatureSample(5, 7, 11)
        eq = build_timing_equation(s, 4, q)
        assert eq.t == 5 * pow(7, -1, q) % q
        assert eq.u_tilde == -11 * pow(7, -1, q) % q
        assert eq.W == 16 and eq.kind == TIMING and eq.centering

    def test_skip(self):
        with pytest.raises(SkipSample):
            build_timing_equation(SignatureSample(5, DSA.q, 11), 4, DSA.q)

    def test_short_nonce_passes_and_long_fails(self):
        rng = random.Random(2)
        q = DSA.q
        m = q.bit_length()
        alpha = rng.randrange(1, q)
        for ell in (1, 4, 8, 20):
            for _ in range(200):
                k = rng.randrange(1, q >> ell)
                assert residual_check(build_timing_equation(_forged(q, alpha, k, rng), ell, q), alpha, q)
            # a nonce with ell clear bits claimed to have ell + 1
            fails = 0
            for _ in range(200):
                k = rng.randrange((q >> (ell + 1)) + 1, 1 << (m - ell))
                fails += not residual_check(build_timing_equation(_forged(q, alpha, k, rng), ell + 1, q), alpha, q)
            assert fails == 200

    def test_k_one(self):
        rng = random.Random(3)
        q = DSA.q
        alpha = rng.randrange(1, q)
        s = _forged(q, alpha, 1, rng)
        assert all(residual_check(build_timing_equation(s, ell, q), alpha, q) for ell in range(1, 127))

    def test_wrong_alpha(self):
        rng = random.Random(4)
        q = DSA.q
        alpha = rng.randrange(1, q)
        hits = 0
        for _ in range(4000):
            eq = build_timing_equation(_forged(q, alpha, rng.randrange(1, q >> 2), rng), 2, q)
            hits += residual_check(eq, rng.randrange(1, q), q)
        # about 1/W
        assert abs(hits / 4000 - 0.25) < 0.03


class TestPairs:
    def test_example(self):
        assert extract_wnaf_pairs(wnaf_recode(7, 3), 3) == [WnafPair(0, 3, 1)]
        assert extract_wnaf_pairs(signed_wnaf_oracle(7, 3), 3, signed=True) == [WnafPair(0, 3, 2, -1)]
        assert extract_wnaf_pairs([0, 3], 3) == [WnafPair(0, 3, 1)]
        assert extract_wnaf_pairs([5], 3) == []

    def test_z_threshold(self):
        assert extract_wnaf_pairs([0, 3], 3, z_min=1) != []
        assert extract_wnaf_pairs([0, 3], 3, z_min=2) == []

    def test_bad_input(self):
        with pytest.raises(InvalidParameterError):
            extract_wnaf_pairs([3, 1], 3)
        with pytest.raises(InvalidParameterError):
            extract_wnaf_pairs([0, 3], 3, signed=True)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 2**127), st.integers(3, 6))
    def test_signed_one_larger(self, k, w):
        u = extract_wnaf_pairs(wnaf_recode(k, w), w, z_min=1)
        s = extract_wnaf_pairs(signed_wnaf_oracle(k, w), w, z_min=2, signed=True)
        assert [(p.j, p.ell, p.z + 1) for p in u] == [(p.j, p.ell, p.z) for p in s]

    def test_gap_mean(self):
        rng = random.Random(5)
        for w in (3, 4, 5):
            gaps = []
            for _ in range(500):
                pos = wnaf_recode(rng.getrandbits(128) | 1, w).nonzero_positions()
                gaps += [b - a for a, b in zip(pos, pos[1:])]
            assert abs(sum(gaps) / len(gaps) - (w + 1)) < 0.15


class TestWnafEquations:
    @pytest.mark.parametrize("curve", [CURVE64, CURVE127], ids=["q64", "q127"])
    @pytest.mark.parametrize("signed", [False, True], ids=["unsigned", "signed"])
    def test_residual_gate(self, curve, signed):
        rng = random.Random(6)
        w = 5
        key, sigs = _ecdsa_batch(curve, 60, w, rng, signed)
        q = curve.q
        honest = wrong = wrong_pass = 0
        for s in sigs:
            for p in extract_wnaf_pairs(s.leak, w, 1, signed):
                if not pair_is_sound(p, w, q, signed):
                    continue
                eq = build_wnaf_equation(s, p, w, q, signed)
                assert residual_check(eq, key.alpha, q)
                honest += 1
                bad = WnafPair(p.j, p.ell, p.z, -1 - p.b) if signed else WnafPair(p.j, p.ell + 1, p.z + 1)
                try:
                    eq2 = build_wnaf_equation(s, bad, w, q, signed)
                except SkipSample:
                    continue
                wrong += 1
                wrong_pass += residual_check(eq2, key.alpha, q)
        assert honest > 100
        assert wrong_pass <= 0.01 * wrong

    def test_fields(self):
        q = CURVE64.q
        m = q.bit_length()
        s = SignatureSample(5, 7, 11)
        eq = build_wnaf_equation(s, WnafPair(3, 8, 4), 5, q)
        e = m - 3 - 8 - 1
        assert eq.t == 5 * pow(7, -1, q) * 2 ** e % q
        sinv = pow(7, -1, q)
        assert eq.u_tilde == (2 ** (m + 4 - 8 - 1) - (11 * sinv + 2 ** (3 + 4) - 2 ** (3 + 8)) * 2 ** e) % q
        assert eq.W == 16 and eq.kind == WNAF_UNSIGNED
        sg = build_wnaf_equation(s, WnafPair(3, 8, 5, -1), 5, q, signed=True)
        assert sg.W == 32 and sg.kind == WNAF_SIGNED

    def test_top_pair_skipped(self):
        q = CURVE64.q
        with pytest.raises(SkipSample):
            build_wnaf_equation(SignatureSample(5, 7, 11), WnafPair(60, 8, 4), 5, q)

    def test_pool_filters(self):
        rng = random.Random(7)
        _, sigs = _ecdsa_batch(CURVE64, 20, 5, rng, False)
        eqs = wnaf_equations(sigs, 5, CURVE64.q)
        assert eqs and all(e.kind == WNAF_UNSIGNED for e in eqs)
        capped = wnaf_equations(sigs, 5, CURVE64.q, per_signature_cap=1)
        assert len(capped) <= 20
        sigs[0].leak = sigs[0].leak.__class__(sigs[0].leak.ops, dropped=True)
        assert all(e.source != 0 for e in wnaf_equations(sigs, 5, CURVE64.q))


class TestLattice:
    def test_hand_example(self):
        eqs = [HnpEquation(3, 1, 2, WNAF_UNSIGNED), HnpEquation(5, 2, 2, WNAF_UNSIGNED)]
        B, u = build_lattice(eqs, 11)
        assert B == [[44, 0, 0], [0, 44, 0], [12, 20, 1]]
        assert u == [4, 8, 0]
        tB, tu = build_lattice([HnpEquation(3, 1, 2), HnpEquation(5, 2, 2)], 11)
        assert tB == B and tu == [15, 19, 0]
        with pytest.raises(InvalidParameterError):
            build_lattice(eqs[:1], 11)

    def test_target_is_lattice_point_minus_u(self):
        rng = random.Random(8)
        q = DSA.q
        alpha = rng.randrange(1, q)
        eqs = [build_timing_equation(_forged(q, alpha, rng.randrange(1, q >> 4), rng), 4, q) for _ in range(6)]
        B, u = build_lattice(eqs, q)
        y = target_vector(eqs, alpha, q)
        assert y[-1] == alpha
        # y + u lies in the lattice: solve for the lambda coefficients
        z = []
        for i, eq in enumerate(eqs):
            num = y[i] + u[i] - 2 * eq.W * eq.t * alpha
            assert num % (2 * eq.W * q) == 0
            z.append(num // (2 * eq.W * q))
        assert matmul([z + [alpha]], B)[0] == [a + b for a, b in zip(y, u)]
        assert all(abs(c) <= q for c in y[:-1])
        E = embed_cvp(B, u, q)
        assert len(E) == len(E[0]) == 8


class TestRecover:
    def test_signed_toy(self):
        rng = random.Random(9)
        key, sigs = _ecdsa_batch(CURVE64, 6, 5, rng, True)
        eqs = wnaf_equations(sigs, 5, CURVE64.q, signed=True)
        cfg = AttackConfig(d=min(len(eqs), 24), block_size=10, max_lattices=10, seed=1)
        res = recover_key(eqs, cfg, key.public, CURVE64)
        assert res.found and res.alpha == key.alpha
        assert res.stats["lattices_built"] >= 1 and res.stats["candidates_checked"] >= 1

    def test_failure_reported(self):
        rng = random.Random(10)
        q = CURVE64.q
        key = ecdsa_keygen(CURVE64, rng)
        junk = [HnpEquation(rng.randrange(1, q), rng.randrange(q), 4, WNAF_UNSIGNED) for _ in range(10)]
        res = recover_key(junk, AttackConfig(d=8, max_lattices=2, rerandomize=1, block_size=2), key.public, CURVE64, rng=1)
        assert not res.found
        assert res.stats["lattices_built"] == 2

    def test_too_few(self):
        with pytest.raises(SampleTooSmallError):
            recover_key([HnpEquation(1, 1, 2)] * 3, AttackConfig(d=5), None, CURVE64)

    def test_deterministic(self):
        rng = random.Random(11)
        key, sigs = _ecdsa_batch(CURVE64, 6, 5, rng, True)
        eqs = wnaf_equations(sigs, 5, CURVE64.q, signed=True)
        cfg = AttackConfig(d=min(len(eqs), 20), block_size=10, max_lattices=3, seed=5)
        a = recover_key(eqs, cfg, key.public, CURVE64)
        b = recover_key(eqs, cfg, key.public, CURVE64)
        assert (a.alpha, a.stats["lattices_built"]) == (b.alpha, b.stats["lattices_built"])


class TestEstimator:
    def test_signed(self):
        rng = random.Random(12)
        key, sigs = _ecdsa_batch(CURVE64, 6, 5, rng, True)
        est = HnpKeyRecovery(params=CURVE64, public=key.public, source=WNAF_SIGNED, block_size=10, random_state=0)
        assert est.fit(sigs).predict() == key.alpha
        assert est.get_params()["source"] == WNAF_SIGNED
        assert est.stats_["d"] <= len(est.equations_)

    def test_unfitted(self):
        from sclab.errors import NotFittedError

        with pytest.raises(NotFittedError):
            HnpKeyRecovery().predict()
        with pytest.raises(InvalidParameterError):
            HnpKeyRecovery().fit([])
