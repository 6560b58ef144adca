import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latcomm import (
    GeneratorMatrix,
    ProtocolError,
    ProtocolUnsupportedError,
    SourceModel,
    build_ratio_table,
    centralized_rate_bound,
    empirical_entropy,
    fusion_decode,
    interactive_coefficients_batch,
    interactive_rate,
    nearest_plane,
    node_encode,
    round_half_up,
    run_centralized,
    run_interactive,
    varint_bits,
    varint_decode,
    varint_encode,
)


def _round_fraction(f: Fraction) -> int:
    """Ties-up rounding of an exact rational, the test-side oracle."""
    return math.floor(f + Fraction(1, 2))


def _scan_s(z: float, q: int) -> int:
    """Largest s in [0, q) with [z - s/q] = [z], by exhaustive exact scan."""
    zf = Fraction(z)
    target = round_half_up(z)
    best = 0
    for s in range(q):
        if _round_fraction(zf - Fraction(s, q)) == target:
            best = s
    return best


class TestVarint:
    def test_single_byte_boundaries(self):
        for v, nbytes in [(0, 1), (1, 1), (-1, 1), (63, 1), (-64, 1),
                          (64, 2), (-65, 2), (500, 2), (8191, 2), (8192, 3)]:
            assert len(varint_encode(v)) == nbytes
            assert varint_bits(v) == 8 * nbytes

    @given(st.integers(min_value=-2**62, max_value=2**62))
    def test_roundtrip(self, v):
        enc = varint_encode(v)
        dec, off = varint_decode(enc)
        assert dec == v
        assert off == len(enc)
        assert varint_bits(v) == 8 * len(enc)

    @given(st.lists(st.integers(-10**9, 10**9), min_size=1, max_size=8))
    def test_stream_decoding(self, values):
        blob = b"".join(varint_encode(v) for v in values)
        out = []
        off = 0
        while off < len(blob):
            v, off = varint_decode(blob, off)
            out.append(v)
        assert out == values

    def test_truncated(self):
        with pytest.raises(ProtocolError):
            varint_decode(bytes([0x80]))


class TestSourceModel:
    def test_uniform_entropy(self):
        assert SourceModel.uniform(0, 1).differential_entropy_bits() == 0.0
        assert SourceModel.uniform(0, 2).differential_entropy_bits() == 1.0
        assert SourceModel.uniform(-1, 1).differential_entropy_bits() == 1.0

    def test_gaussian_entropy(self):
        h = SourceModel.gaussian(5.0, 1.0).differential_entropy_bits()
        assert h == pytest.approx(0.5 * math.log2(2 * math.pi * math.e))

    def test_json_roundtrip(self):
        for s in (SourceModel.uniform(-2, 3), SourceModel.gaussian(1, 0.5)):
            assert SourceModel.from_json(s.to_json()) == s

    def test_validation(self):
        with pytest.raises(ValueError):
            SourceModel.uniform(1, 1)
        with pytest.raises(ValueError):
            SourceModel.gaussian(0, 0)
        with pytest.raises(ValueError):
            SourceModel.from_json({"dist": "poisson"})
        with pytest.raises(ValueError):
            SourceModel.from_json({"lo": 0, "hi": 1})

    def test_sampling_respects_support(self):
        rng = np.random.Generator(np.random.Philox(key=0))
        x = SourceModel.uniform(2, 3).sample(rng, 1000)
        assert np.all((x >= 2) & (x < 3))


class TestRatioTable:
    def test_half_ratio(self, hexagonal):
        t = build_ratio_table(hexagonal)
        assert t.q == (2, 1)
        assert t.ratios[(0, 1)] == Fraction(1, 2)
        assert t.weights[(0, 1)] == 1

    def test_thousandth_ratio(self, ratio311):
        t = build_ratio_table(ratio311)
        assert t.q == (1000, 1)
        assert t.ratios[(0, 1)] == Fraction(311, 1000)
        assert t.weights[(0, 1)] == 311

    def test_diagonal_is_trivial(self):
        V = GeneratorMatrix.from_columns([[2, 0], [0, 3]])
        t = build_ratio_table(V)
        assert t.q == (1, 1)
        assert t.ratios == {}

    def test_lcm_across_row(self):
        V = GeneratorMatrix.from_columns(
            [[1, 0, 0], ["1/2", 1, 0], ["1/3", "1/5", 1]])
        t = build_ratio_table(V)
        assert t.q == (6, 5, 1)
        assert t.weights[(0, 1)] == 3  # 1/2 * 6
        assert t.weights[(0, 2)] == 2  # 1/3 * 6
        assert t.weights[(1, 2)] == 1  # 1/5 * 5

    def test_irrational_diagonal_ok_when_row_has_no_ratios(self, hexagonal):
        # bottom-right entry is a plain float; the last row needs no ratios
        assert hexagonal.rational[1][1] is None
        build_ratio_table(hexagonal)

    def test_missing_rational_data(self):
        V = GeneratorMatrix.from_columns([[1, 0], [0.311, 1]])
        with pytest.raises(ProtocolUnsupportedError):
            build_ratio_table(V)

    def test_requires_triangular(self):
        V = GeneratorMatrix.from_columns([[3, 4], [1, 2]])
        with pytest.raises(ProtocolUnsupportedError):
            build_ratio_table(V)


class TestNodeEncode:
    def test_golden_thousand(self):
        m = node_encode(1.0, 1.0, 1000)
        assert (m.b_tilde, m.s) == (1, 500)

    def test_q_one_always_zero(self):
        for x in (-3.7, -0.5, 0.0, 0.49, 123.456):
            assert node_encode(x, 1.0, 1).s == 0

    def test_golden_point_three(self):
        m = node_encode(0.3, 1.0, 2)
        assert (m.b_tilde, m.s) == (0, 1)

    def test_tie_rounds_up_and_s_is_zero(self):
        m = node_encode(0.5, 1.0, 2)
        assert (m.b_tilde, m.s) == (1, 0)

    def test_validation(self):
        with pytest.raises(ProtocolError):
            node_encode(1.0, 0.0, 2)
        with pytest.raises(ProtocolError):
            node_encode(1.0, 1.0, 0)
        with pytest.raises(ProtocolError):
            node_encode(float("inf"), 1.0, 2)

    @given(st.floats(min_value=-100, max_value=100),
           st.integers(min_value=1, max_value=200))
    def test_matches_exhaustive_scan(self, z, q):
        m = node_encode(z, 1.0, q)
        assert m.b_tilde == round_half_up(z)
        assert m.s == _scan_s(z, q)

    def test_scan_at_large_q(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            z = float(rng.uniform(-5, 5))
            q = 10**4
            assert node_encode(z, 1.0, q).s == _scan_s(z, q)

    @given(st.floats(min_value=-50, max_value=50),
           st.integers(min_value=1, max_value=1000))
    def test_monotone_step_values(self, z, q):
        # s -> [z - s/q] only ever steps down once across s in [0, q)
        zf = Fraction(z)
        base = round_half_up(z)
        vals = [_round_fraction(zf - Fraction(s, q)) for s in range(0, q,
                                                                    max(1, q // 97))]
        assert all(v in (base, base - 1) for v in vals)
        assert all(vals[i] >= vals[i + 1] for i in range(len(vals) - 1))

    def test_monotone_step_exhaustive_large_q(self):
        q = 10**4
        z = 3.37712
        zf = Fraction(z)
        base = round_half_up(z)
        prev = base
        for s in range(q):
            v = _round_fraction(zf - Fraction(s, q))
            assert v in (base, base - 1)
            assert v <= prev
            prev = v


class TestFusionDecode:
    def test_golden_walkthrough(self, ratio311):
        b, transcript = run_centralized(ratio311, [1.0, 1.0])
        assert tuple(b) == (1, 1)
        payloads = [m.payload for m in transcript.messages]
        assert payloads[0] == {"b_tilde": 1, "s": 500}
        assert payloads[1] == {"b_tilde": 1, "s": 0}
        # coefficient byte + 10 side-information bits, then 1 byte
        assert [m.bits for m in transcript.messages] == [18, 8]
        assert transcript.total_bits == 26
        assert tuple(transcript.decoded[0]) == (1, 1)

    def test_correction_branch(self, hexagonal):
        b, transcript = run_centralized(hexagonal, [0.9, 0.8])
        assert tuple(b) == (0, 1)
        # node 1 reports its local rounding of 0.9, corrected at the center
        assert transcript.messages[0].payload == {"b_tilde": 1, "s": 0}

    def test_message_count_checked(self, hexagonal):
        t = build_ratio_table(hexagonal)
        with pytest.raises(ProtocolError):
            fusion_decode([node_encode(0.5, 1.0, 2)], t)

    def test_diagonal_passthrough(self):
        V = GeneratorMatrix.from_columns([[2, 0], [0, 3]])
        b, _ = run_centralized(V, [3.1, -4.4])
        assert tuple(b) == (2, -1)

    def test_agrees_with_nearest_plane(self, hexagonal, ratio311):
        rng = np.random.default_rng(12)
        V3 = GeneratorMatrix.from_columns(
            [[1, 0, 0], ["2/3", "3/2", 0], ["-1/6", "5/4", "7/8"]])
        for V in (hexagonal, ratio311, V3):
            for _ in range(500):
                x = rng.uniform(-20, 20, size=V.n)
                b, _ = run_centralized(V, x)
                assert np.array_equal(b, nearest_plane(V, x).coeffs)

    def test_side_information_bits(self, hexagonal, ratio311):
        _, t1 = run_centralized(hexagonal, [0.0, 0.0])
        assert t1.messages[0].bits - varint_bits(0) == 1  # ceil(log2 2)
        _, t3 = run_centralized(ratio311, [0.0, 0.0])
        assert t3.messages[0].bits - varint_bits(0) == 10  # ceil(log2 1000)


class TestInteractive:
    def test_golden(self, hexagonal):
        b, t = run_interactive(hexagonal, [0.9, 0.8], 1.0)
        assert tuple(b) == (0, 1)
        assert t.model == "interactive"
        # node order: highest coordinate first
        assert [m.sender for m in t.messages] == [2, 1]
        assert t.messages[0].receivers == (1,)
        assert all(np.array_equal(v, b) for v in t.decoded.values())

    def test_zero_target(self, hexagonal):
        b, t = run_interactive(hexagonal, [0.0, 0.0], 0.25)
        assert tuple(b) == (0, 0)
        assert t.total_bits == 2 * 8  # one minimal varint each, 1 receiver

    def test_broadcast_fanout(self):
        V = GeneratorMatrix(np.triu([[1.0, 0.2, 0.1],
                                     [0.0, 1.0, 0.3],
                                     [0.0, 0.0, 1.0]]))
        _, t = run_interactive(V, [0.4, -0.6, 0.9], 1.0)
        assert [m.sender for m in t.messages] == [3, 2, 1]
        assert t.messages[0].receivers == (1, 2)
        assert len(t.decoded) == 3

    def test_equals_scaled_nearest_plane(self, ratio311):
        rng = np.random.default_rng(5)
        for alpha in (1.0, 0.5, 2.0 ** -6):
            scaled = ratio311.scaled(alpha)
            for _ in range(200):
                x = rng.uniform(-5, 5, size=2)
                b, _ = run_interactive(ratio311, x, alpha)
                assert np.array_equal(b, nearest_plane(scaled, x).coeffs)

    def test_agrees_with_centralized_on_scaled_lattice(self, hexagonal):
        rng = np.random.default_rng(6)
        alpha = 0.125
        scaled = hexagonal.scaled(alpha)
        for _ in range(500):
            x = rng.uniform(-4, 4, size=2)
            bi, _ = run_interactive(hexagonal, x, alpha)
            bc, _ = run_centralized(scaled, x)
            assert np.array_equal(bi, bc)

    def test_batch_matches_single_runs(self, hexagonal):
        rng = np.random.default_rng(8)
        X = rng.uniform(-3, 3, size=(500, 2))
        B = interactive_coefficients_batch(hexagonal, X, 2.0 ** -4)
        for i in range(0, 500, 23):
            b, _ = run_interactive(hexagonal, X[i], 2.0 ** -4)
            assert np.array_equal(B[i], b)

    def test_validation(self, hexagonal):
        with pytest.raises(ProtocolError):
            run_interactive(hexagonal, [0.0, 0.0], 0.0)
        with pytest.raises(ProtocolUnsupportedError):
            run_interactive(GeneratorMatrix.from_columns([[3, 4], [1, 2]]),
                            [0.0, 0.0], 1.0)
        with pytest.raises(ProtocolError):
            run_interactive(hexagonal, [0.0], 1.0)


class TestRates:
    def test_centralized_bound_hexagonal(self, hexagonal):
        src = [SourceModel.uniform(0, 1)] * 2
        bound = centralized_rate_bound(src, hexagonal, 2.0 ** -10)
        expect = -math.log2(math.sqrt(3) / 2) + 20.0 + 1.0
        assert bound == pytest.approx(expect, abs=1e-9)
        assert bound == pytest.approx(21.2075, abs=5e-4)

    def test_centralized_bound_trivial(self):
        V = GeneratorMatrix.from_columns([[1, 0], [0, 1]])
        src = [SourceModel.uniform(0, 1)] * 2
        assert centralized_rate_bound(src, V, 1.0) == 0.0

    def test_interactive_rate_unit_determinant(self):
        V = GeneratorMatrix.from_columns([["5/4", 0], [0, "4/5"]])
        src = [SourceModel.uniform(0, 1)] * 2
        assert interactive_rate(src, V, 2.0 ** -10) == pytest.approx(20.0)
        assert interactive_rate(src, V, 1.0) == pytest.approx(0.0)

    def test_interactive_rate_linearity_in_entropy(self):
        V = GeneratorMatrix(np.triu([[1.0, 0.1, 0.2],
                                     [0.0, 1.0, 0.3],
                                     [0.0, 0.0, 1.0]]))
        narrow = [SourceModel.uniform(0, 1)] * 3
        wide = [SourceModel.uniform(0, 2)] * 3
        r1 = interactive_rate(narrow, V, 0.25)
        r2 = interactive_rate(wide, V, 0.25)
        assert r2 - r1 == pytest.approx((3 - 1) * 3 * 1.0)

    def test_source_count_checked(self, hexagonal):
        with pytest.raises(ProtocolError):
            interactive_rate([SourceModel.uniform(0, 1)], hexagonal, 0.5)
        with pytest.raises(ProtocolError):
            centralized_rate_bound([SourceModel.uniform(0, 1)],
                                   hexagonal, 0.5)


class TestEmpiricalEntropy:
    def test_constant(self):
        assert empirical_entropy([7] * 100) == 0.0

    def test_fair_coin(self):
        assert empirical_entropy([0, 1] * 500) == pytest.approx(1.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            empirical_entropy([])

    def test_hexagonal_coefficient_entropy(self, hexagonal):
        # U_2 = [x_2 / (alpha v_22)] for x_2 ~ U[0,1) spreads over about
        # 1/(alpha v_22) values, so H ~ -log2(alpha v_22)
        alpha = 2.0 ** -8
        rng = np.random.Generator(np.random.Philox(key=0))
        X = np.column_stack([rng.uniform(0, 1, 400000),
                             rng.uniform(0, 1, 400000)])
        B = interactive_coefficients_batch(hexagonal, X, alpha)
        h2 = empirical_entropy(B[:, 1].tolist())
        target = -math.log2(alpha * math.sqrt(3) / 2)
        assert target == pytest.approx(8.2075, abs=5e-4)
        assert h2 == pytest.approx(target, abs=0.05)


class TestRateConvergence:
    def test_gap_shrinks_with_alpha(self):
        V = GeneratorMatrix.from_columns([["5/4", 0], [0, "4/5"]])
        sources = [SourceModel.uniform(0, 1)] * 2
        rng = np.random.Generator(np.random.Philox(key=1))
        X = np.column_stack([s.sample(rng, 200000) for s in sources])
        gaps = []
        for alpha in (2.0 ** -4, 2.0 ** -6, 2.0 ** -8):
            B = interactive_coefficients_batch(V, X, alpha)
            gap = 0.0
            for i in range(2):
                h = empirical_entropy(B[:, i].tolist())
                target = (sources[i].differential_entropy_bits()
                          - math.log2(alpha * float(V.matrix[i, i])))
                gap = max(gap, abs(h - target))
            gaps.append(gap)
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.1
