"""Verification machinery: masking-probability algebra and estimators, the
two-sample Kolmogorov-Smirnov test, and distribution summaries.

The conditional masking law says that when masking is restricted to
chunk-flagged positions with branch probability p_nc, the chance that a given
flagged token gets masked is mask_prob * p_nc / p(y=1); choosing
p_nc = p(y=1) recovers the plain strategy's mask_prob. The empirical report
estimates both conditionals from generated examples so the law can be checked
end to end.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .masking import MaskedExample, TokenizedSequence


def expected_conditional_mask_prob(mask_prob: float, p_nc: float, p_y1: float) -> float:
    """Analytic p(masked | flagged) = mask_prob * p_nc / p_y1.

    All arguments must lie in (0, 1]. ``p_nc == p_y1`` returns ``mask_prob``
    exactly (the reduction to the plain strategy is an algebraic identity and
    must not pick up float round-off).
    """
    for name, value in (("mask_prob", mask_prob), ("p_nc", p_nc), ("p_y1", p_y1)):
        if not 0.0 < value <= 1.0:
            raise ValueError(f"{name} must be in (0, 1], got {value}")
    if p_nc == p_y1:
        return mask_prob
    result = mask_prob * p_nc / p_y1
    if result > 1.0:
        raise ValueError(
            f"inconsistent parameterization: mask_prob * p_nc / p_y1 = {result:.4f} > 1"
        )
    return result


@dataclass
class MaskProbReport:
    """Empirical conditional masking probabilities over an example stream.

    Standard errors are delta-method estimates for the ratio estimators,
    clustered by sequence (mask decisions within one sequence are correlated
    because they share the branch coin and the fixed mask budget).
    """

    n_sequences: int
    n_tokens: int
    p_y1: float
    p_mask_given_y1: float | None
    p_mask_given_y0: float | None
    expected_p_mask_given_y1: float | None
    abs_error: float | None
    se_mask_given_y1: float | None
    se_mask_given_y0: float | None

    def to_dict(self) -> dict:
        return {
            "n_sequences": self.n_sequences,
            "n_tokens": self.n_tokens,
            "p_y1": self.p_y1,
            "p_mask_given_y1": self.p_mask_given_y1,
            "p_mask_given_y0": self.p_mask_given_y0,
            "expected_p_mask_given_y1": self.expected_p_mask_given_y1,
            "abs_error": self.abs_error,
            "se_mask_given_y1": self.se_mask_given_y1,
            "se_mask_given_y0": self.se_mask_given_y0,
        }


def _ratio_and_se(
    num: float, den: float, num_sq: float, den_sq: float, cross: float
) -> tuple[float | None, float | None]:
    if den <= 0:
        return None, None
    ratio = num / den
    # Var(sum a / sum b) ~= sum (a_j - R b_j)^2 / (sum b)^2 over sequences j.
    spread = max(0.0, num_sq - 2.0 * ratio * cross + ratio * ratio * den_sq)
    return ratio, math.sqrt(spread) / den


def empirical_mask_report(
    pairs: Iterable[tuple[MaskedExample, Sequence[bool]]],
    mask_prob: float,
    p_nc: float | None = None,
) -> MaskProbReport:
    """Estimate p(masked | flag) from (example, per-position flags) pairs.

    ``p_nc`` of None means plain masking, whose expected conditional equals
    ``mask_prob``. A corpus with no flagged tokens reports the conditional as
    undefined (None), never as 0.
    """
    n_sequences = 0
    n_tokens = 0
    y1_slots = 0
    masked_y1 = 0
    masked_y0 = 0
    s_a1_sq = s_k1_sq = s_a1_k1 = 0.0
    s_a0_sq = s_k0_sq = s_a0_k0 = 0.0

    for example, flags in pairs:
        if len(flags) != len(example.input_ids):
            raise ValueError("flags must align with example input ids")
        k1 = sum(flags)
        k0 = len(flags) - k1
        a1 = sum(1 for p in example.masked_positions if flags[p])
        a0 = len(example.masked_positions) - a1
        n_sequences += 1
        n_tokens += len(flags)
        y1_slots += k1
        masked_y1 += a1
        masked_y0 += a0
        s_a1_sq += a1 * a1
        s_k1_sq += k1 * k1
        s_a1_k1 += a1 * k1
        s_a0_sq += a0 * a0
        s_k0_sq += k0 * k0
        s_a0_k0 += a0 * k0

    if n_sequences == 0:
        raise ValueError("empty example stream")

    y0_slots = n_tokens - y1_slots
    p_y1 = y1_slots / n_tokens
    p1, se1 = _ratio_and_se(masked_y1, y1_slots, s_a1_sq, s_k1_sq, s_a1_k1)
    p0, se0 = _ratio_and_se(masked_y0, y0_slots, s_a0_sq, s_k0_sq, s_a0_k0)

    if p_nc is None:
        expected: float | None = mask_prob
    elif p_y1 > 0:
        expected = mask_prob if p_nc == p_y1 else mask_prob * p_nc / p_y1
    else:
        expected = None
    abs_error = abs(p1 - expected) if p1 is not None and expected is not None else None

    return MaskProbReport(
        n_sequences=n_sequences,
        n_tokens=n_tokens,
        p_y1=p_y1,
        p_mask_given_y1=p1,
        p_mask_given_y0=p0,
        expected_p_mask_given_y1=expected,
        abs_error=abs_error,
        se_mask_given_y1=se1,
        se_mask_given_y0=se0,
    )


@dataclass
class KsResult:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""

    d_statistic: float
    p_value: float
    n1: int
    n2: int


def ks_two_sample(sample_a: Sequence[float], sample_b: Sequence[float]) -> KsResult:
    """Exact D via a merged sorted scan; asymptotic p-value.

    Ties are handled by evaluating the ECDF difference at every distinct value
    of the pooled sample. The p-value uses the Kolmogorov survival series
    Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2), truncated at
    k = 100, with lambda = (sqrt(n_e) + 0.12 + 0.11 / sqrt(n_e)) D and
    n_e = n1 n2 / (n1 + n2).
    """
    if len(sample_a) == 0 or len(sample_b) == 0:
        raise ValueError("both samples must be non-empty")
    a = sorted(sample_a)
    b = sorted(sample_b)
    n1, n2 = len(a), len(b)
    i = j = 0
    d = 0.0
    while i < n1 or j < n2:
        if j >= n2 or (i < n1 and a[i] <= b[j]):
            value = a[i]
        else:
            value = b[j]
        while i < n1 and a[i] == value:
            i += 1
        while j < n2 and b[j] == value:
            j += 1
        diff = abs(i / n1 - j / n2)
        if diff > d:
            d = diff
    n_e = n1 * n2 / (n1 + n2)
    lam = (math.sqrt(n_e) + 0.12 + 0.11 / math.sqrt(n_e)) * d
    if lam <= 0.0:
        p_value = 1.0
    else:
        series = sum(
            (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
            for k in range(1, 101)
        )
        p_value = min(1.0, max(0.0, 2.0 * series))
    return KsResult(d_statistic=d, p_value=p_value, n1=n1, n2=n2)


@dataclass
class DistributionSummary:
    mean: float
    sd: float
    histogram: dict[int, int]


def summarize_distribution(sample: Sequence[float]) -> DistributionSummary:
    """Population mean/sd and an integer-bucketed histogram."""
    if len(sample) == 0:
        raise ValueError("empty sample")
    n = len(sample)
    mean = sum(sample) / n
    var = sum((x - mean) ** 2 for x in sample) / n
    histogram: Counter[int] = Counter(int(math.floor(x)) for x in sample)
    return DistributionSummary(
        mean=mean, sd=math.sqrt(var), histogram=dict(sorted(histogram.items()))
    )


def flagged_sequences(
    n_sequences: int,
    seq_len: int = 128,
    p_y1: float = 0.507,
    seed: int = 0,
    block: int = 4096,
) -> Iterator[TokenizedSequence]:
    """Synthetic corpus stream with iid Bernoulli chunk flags.

    Piece ids are all 0; masking-probability statistics depend only on the
    flags. Generation is blocked so memory stays flat at any corpus size.
    """
    if n_sequences < 1:
        raise ValueError(f"n_sequences must be >= 1, got {n_sequences}")
    if not 0.0 <= p_y1 <= 1.0:
        raise ValueError(f"p_y1 must be in [0, 1], got {p_y1}")
    rng = np.random.default_rng(seed)
    emitted = 0
    while emitted < n_sequences:
        rows = min(block, n_sequences - emitted)
        flags_block = (rng.random((rows, seq_len)) < p_y1).tolist()
        for flags in flags_block:
            yield TokenizedSequence(
                pieces=[0] * seq_len, y=flags, doc_id=f"syn-{emitted}"
            )
            emitted += 1
