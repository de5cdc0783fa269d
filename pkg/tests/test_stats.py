import math

import pytest
from hypothesis import given, strategies as st

from lingmask.masking import MaskingConfig, build_example, sequence_rng
from lingmask.stats import (
    empirical_mask_report,
    expected_conditional_mask_prob,
    flagged_sequences,
    ks_two_sample,
    summarize_distribution,
)


class TestExpectedConditional:
    def test_reference_values(self):
        assert expected_conditional_mask_prob(0.15, 0.75, 0.507) == pytest.approx(
            0.15 * 0.75 / 0.507
        )
        assert round(expected_conditional_mask_prob(0.15, 0.75, 0.507), 2) == 0.22
        assert expected_conditional_mask_prob(0.15, 1.0, 0.5) == pytest.approx(0.30)

    def test_reduction_is_exact(self):
        assert expected_conditional_mask_prob(0.15, 0.507, 0.507) == 0.15

    @given(
        st.floats(0.01, 1.0, allow_nan=False),
        st.floats(0.01, 1.0, allow_nan=False),
    )
    def test_reduction_identity_property(self, mask_prob, p):
        assert expected_conditional_mask_prob(mask_prob, p, p) == mask_prob

    def test_zero_p_y1_rejected(self):
        with pytest.raises(ValueError):
            expected_conditional_mask_prob(0.15, 0.75, 0.0)

    def test_inconsistent_parameterization_rejected(self):
        with pytest.raises(ValueError, match="inconsistent"):
            expected_conditional_mask_prob(0.9, 1.0, 0.1)


def _report(strategy, p_nc, n, seed=3, seq_len=64, p_y1=0.5):
    cfg = MaskingConfig(strategy=strategy, p_nc=p_nc, seed=seed, max_seq_len=seq_len)
    seqs = flagged_sequences(n, seq_len=seq_len, p_y1=p_y1, seed=seed)
    pairs = (
        (build_example(s, cfg, sequence_rng(seed, i)), s.y) for i, s in enumerate(seqs)
    )
    return empirical_mask_report(pairs, cfg.mask_prob, p_nc if strategy == "lim" else None)


class TestEmpiricalReport:
    def test_mlm_is_flag_independent(self):
        report = _report("mlm", None, 4000)
        assert report.p_mask_given_y1 == pytest.approx(report.p_mask_given_y0, abs=0.01)
        assert report.p_mask_given_y1 == pytest.approx(0.15, abs=0.01)
        assert report.abs_error < 0.01

    def test_forced_nc_branch_starves_non_chunk_positions(self):
        report = _report("lim", 1.0, 2000)
        # Fallback never fires here (both pools are always populated).
        assert report.p_mask_given_y0 == 0.0
        assert report.p_mask_given_y1 > 0.2

    def test_undefined_conditional_reported_as_none(self):
        report = _report("mlm", None, 200, p_y1=0.0)
        assert report.p_mask_given_y1 is None
        assert report.abs_error is None
        assert report.p_mask_given_y0 == pytest.approx(0.15, abs=0.02)

    def test_empty_stream_rejected(self):
        with pytest.raises(ValueError):
            empirical_mask_report(iter(()), 0.15, None)

    def test_misaligned_flags_rejected(self):
        cfg = MaskingConfig(seed=0, max_seq_len=8)
        seq = next(iter(flagged_sequences(1, seq_len=8, p_y1=0.5, seed=0)))
        example = build_example(seq, cfg, sequence_rng(0, 0))
        with pytest.raises(ValueError):
            empirical_mask_report([(example, [True])], 0.15, None)

    def test_counts(self):
        report = _report("mlm", None, 100, seq_len=32)
        assert report.n_sequences == 100
        assert report.n_tokens == 3200

    def test_error_converges_under_doubling(self):
        # The absolute error stays inside its 99% envelope as the corpus
        # doubles: a shrinking statistical part (2.58 se) plus the fixed
        # count-rounding offset (the builder masks round(0.15 * 128) = 19
        # positions, not 19.2).
        seq_len, p_y1 = 128, 0.507
        rounding_gap = abs(0.15 - round(0.15 * seq_len) / seq_len)
        previous_bound = None
        for n in (2000, 4000, 8000):
            report = _report("lim", 0.75, n, seed=21, seq_len=seq_len, p_y1=p_y1)
            bound = rounding_gap * 0.75 / report.p_y1 + 2.58 * report.se_mask_given_y1
            assert report.abs_error <= bound
            if previous_bound is not None:
                assert bound < previous_bound
            previous_bound = bound


def _brute_force_d(a, b):
    points = sorted(set(a) | set(b))
    best = 0.0
    for x in points:
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


class TestKs:
    def test_identical_samples(self):
        result = ks_two_sample([1, 2, 3], [1, 2, 3])
        assert result.d_statistic == 0.0
        assert result.p_value == 1.0

    def test_disjoint_supports(self):
        assert ks_two_sample([1, 2], [3, 4]).d_statistic == 1.0

    def test_quarter_case(self):
        assert ks_two_sample([1, 2, 3, 4], [1, 2, 3, 10]).d_statistic == 0.25

    def test_sample_sizes_recorded(self):
        result = ks_two_sample([1.5, 2.5], [0.5, 1.5, 9.0])
        assert (result.n1, result.n2) == (2, 3)

    def test_large_disjoint_samples_give_tiny_p(self):
        result = ks_two_sample(list(range(50)), list(range(100, 150)))
        assert result.d_statistic == 1.0
        assert result.p_value < 0.001

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            ks_two_sample([], [1])

    @given(
        st.lists(st.integers(0, 10), min_size=1, max_size=50),
        st.lists(st.integers(0, 10), min_size=1, max_size=50),
    )
    def test_scan_equals_brute_force_and_symmetry(self, a, b):
        result = ks_two_sample(a, b)
        assert result.d_statistic == _brute_force_d(a, b)
        assert result.d_statistic == ks_two_sample(b, a).d_statistic
        assert 0.0 <= result.d_statistic <= 1.0
        assert 0.0 <= result.p_value <= 1.0


class TestSummarize:
    def test_hand_arithmetic(self):
        summary = summarize_distribution([2, 2, 4])
        assert summary.mean == pytest.approx(8 / 3, abs=1e-12)
        assert summary.sd == pytest.approx(math.sqrt(8 / 9), abs=1e-12)
        assert summary.histogram == {2: 2, 4: 1}

    def test_constant_sample(self):
        assert summarize_distribution([5, 5, 5]).sd == 0.0

    def test_two_point_masses(self):
        assert summarize_distribution([1, 1, 9, 9]).mean == pytest.approx(5.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize_distribution([])


class TestFlaggedSequences:
    def test_deterministic(self):
        a = [s.y for s in flagged_sequences(20, seq_len=16, p_y1=0.5, seed=4)]
        b = [s.y for s in flagged_sequences(20, seq_len=16, p_y1=0.5, seed=4)]
        assert a == b

    def test_shapes_and_rate(self):
        seqs = list(flagged_sequences(500, seq_len=64, p_y1=0.507, seed=1))
        assert len(seqs) == 500
        assert all(len(s.pieces) == 64 and len(s.y) == 64 for s in seqs)
        rate = sum(sum(s.y) for s in seqs) / (500 * 64)
        assert rate == pytest.approx(0.507, abs=0.01)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            list(flagged_sequences(0))
        with pytest.raises(ValueError):
            list(flagged_sequences(1, p_y1=1.5))
