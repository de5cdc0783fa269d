"""A minimal trainable masked-LM head for desk-scale strategy comparisons.

The encoder is a deliberate stand-in for a deep network: the hidden vector of
a masked position is the mean embedding of the unmasked pieces in its context
window (radius 0 means the whole sequence). The output layer, the weighted
cross-entropy loss over prediction slots, and the padding-weight mechanism are
implemented exactly, so masking strategies can be compared end to end without
a transformer. Training is plain gradient descent to keep optimizer effects
out of the comparison.
"""

from __future__ import annotations

import csv
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .masking import MaskedExample, MaskingConfig, TokenizedSequence, build_example, sequence_rng

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-12


@dataclass
class TinyLmParams:
    """Embedding table plus the output projection of the masked-LM head."""

    embeddings: np.ndarray
    w_mlm: np.ndarray
    b_mlm: np.ndarray
    context_radius: int

    def __post_init__(self) -> None:
        v, h = self.embeddings.shape
        if h < 1:
            raise ValueError("hidden dimension must be >= 1")
        if self.w_mlm.shape != (v, h) or self.b_mlm.shape != (v,):
            raise ValueError("output layer shapes must match the embedding table")
        if self.context_radius < 0:
            raise ValueError("context_radius must be >= 0")
        for arr in (self.embeddings, self.w_mlm, self.b_mlm):
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters must be finite")

    @classmethod
    def init(
        cls, vocab_size: int, hidden_dim: int, context_radius: int = 0, seed: int = 0
    ) -> "TinyLmParams":
        rng = np.random.default_rng(seed)
        return cls(
            embeddings=rng.uniform(-0.05, 0.05, (vocab_size, hidden_dim)),
            w_mlm=rng.uniform(-0.05, 0.05, (vocab_size, hidden_dim)),
            b_mlm=np.zeros(vocab_size),
            context_radius=context_radius,
        )

    @property
    def vocab_size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.embeddings.shape[1]


def _context_ids(example: MaskedExample, radius: int) -> list[list[int]]:
    """Context piece ids per masked position (unmasked positions only)."""
    masked = set(example.masked_positions)
    unmasked = [k for k in range(len(example.input_ids)) if k not in masked]
    contexts = []
    for position in example.masked_positions:
        if radius == 0:
            window = unmasked
        else:
            window = [k for k in unmasked if abs(k - position) <= radius]
        contexts.append([example.input_ids[k] for k in window])
    return contexts


def context_encode(
    example: MaskedExample, params: TinyLmParams
) -> tuple[np.ndarray, np.ndarray]:
    """Hidden vectors for the masked positions of one example.

    Returns ``(hidden, empty)`` where ``hidden`` is (n_masked, H) and
    ``empty`` flags positions whose context window contained no unmasked
    piece (their hidden vector is zero).
    """
    n = len(example.masked_positions)
    hidden = np.zeros((n, params.hidden_dim))
    empty = np.zeros(n, dtype=bool)
    for i, context in enumerate(_context_ids(example, params.context_radius)):
        if context:
            hidden[i] = params.embeddings[context].mean(axis=0)
        else:
            empty[i] = True
    return hidden, empty


def predict(hidden: np.ndarray, params: TinyLmParams) -> np.ndarray:
    """Probability rows softmax(W h + b), stabilized by max subtraction."""
    logits = hidden @ params.w_mlm.T + params.b_mlm
    if not np.all(np.isfinite(logits)):
        raise ValueError("non-finite logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def mlm_loss(
    predictions: np.ndarray,
    labels: Sequence[int],
    weights: Sequence[float],
    clamp_counter: Counter | None = None,
) -> float:
    """Weighted mean negative log-likelihood over prediction slots.

    sum_ij -log(p_ij[label_ij]) w_ij / sum_ij w_ij. Padding slots carry
    weight 0 and contribute nothing. Probabilities are clamped at 1e-12;
    clamps on real slots are counted and logged.
    """
    probs = np.asarray(predictions, dtype=float)
    label_arr = np.asarray(labels, dtype=int)
    weight_arr = np.asarray(weights, dtype=float)
    if probs.ndim != 2 or label_arr.shape != (probs.shape[0],) or weight_arr.shape != (
        probs.shape[0],
    ):
        raise ValueError("predictions, labels, and weights must align")
    total_weight = float(weight_arr.sum())
    if total_weight == 0.0:
        raise ValueError("no prediction slots: all weights are zero")
    picked = probs[np.arange(probs.shape[0]), label_arr]
    clamped = (picked < PROB_CLAMP) & (weight_arr > 0)
    if clamped.any():
        count = int(clamped.sum())
        log.warning("clamped %d zero label probabilities", count)
        if clamp_counter is not None:
            clamp_counter["clamped_probs"] += count
    picked = np.maximum(picked, PROB_CLAMP)
    return float(np.sum(-np.log(picked) * weight_arr) / total_weight)


def loss_and_grads(
    batch: Sequence[MaskedExample], params: TinyLmParams
) -> tuple[float, dict[str, np.ndarray]]:
    """Forward and analytic backward pass over a batch.

    Gradients cover the output layer and every embedding that entered a
    context mean. Accumulation order is fixed (batch order, then slot order)
    so results are reproducible.
    """
    grads = {
        "embeddings": np.zeros_like(params.embeddings),
        "w_mlm": np.zeros_like(params.w_mlm),
        "b_mlm": np.zeros_like(params.b_mlm),
    }
    slots = []
    for example in batch:
        contexts = _context_ids(example, params.context_radius)
        hidden = np.zeros((len(contexts), params.hidden_dim))
        for i, context in enumerate(contexts):
            if context:
                hidden[i] = params.embeddings[context].mean(axis=0)
        probs = predict(hidden, params)
        for i, label in enumerate(example.labels):
            slots.append((probs[i], label, hidden[i], contexts[i]))
    if not slots:
        raise ValueError("batch has no prediction slots")
    total_weight = float(len(slots))
    loss = 0.0
    for probs_row, label, hidden_row, context in slots:
        p_label = max(float(probs_row[label]), PROB_CLAMP)
        loss += -math.log(p_label) / total_weight
        # d loss / d logits = (p - onehot(label)) / total_weight
        dlogits = probs_row / total_weight
        dlogits[label] -= 1.0 / total_weight
        grads["b_mlm"] += dlogits
        grads["w_mlm"] += np.outer(dlogits, hidden_row)
        if context:
            dhidden = params.w_mlm.T @ dlogits
            np.add.at(grads["embeddings"], context, dhidden / len(context))
    return loss, grads


def grad_and_step(
    batch: Sequence[MaskedExample], params: TinyLmParams, lr: float
) -> tuple[TinyLmParams, float]:
    """One plain gradient-descent update; returns the pre-step loss."""
    if lr < 0:
        raise ValueError(f"learning rate must be >= 0, got {lr}")
    loss, grads = loss_and_grads(batch, params)
    for arr in grads.values():
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite gradient")
    params.embeddings -= lr * grads["embeddings"]
    params.w_mlm -= lr * grads["w_mlm"]
    params.b_mlm -= lr * grads["b_mlm"]
    return params, loss


def evaluate(
    pairs: Sequence[tuple[MaskedExample, Sequence[bool]]], params: TinyLmParams
) -> tuple[float, float, float]:
    """(total, chunk-slot, non-chunk-slot) mean NLL over fixed examples.

    ``pairs`` joins each example with the chunk flags of its source sequence;
    a class with no slots reports nan.
    """
    losses: list[float] = []
    flags: list[bool] = []
    for example, seq_flags in pairs:
        hidden, _ = context_encode(example, params)
        probs = predict(hidden, params)
        for i, (position, label) in enumerate(
            zip(example.masked_positions, example.labels)
        ):
            p_label = max(float(probs[i][label]), PROB_CLAMP)
            losses.append(-math.log(p_label))
            flags.append(bool(seq_flags[position]))
    if not losses:
        raise ValueError("no prediction slots to evaluate")
    nc = [l for l, f in zip(losses, flags) if f]
    non = [l for l, f in zip(losses, flags) if not f]
    total = sum(losses) / len(losses)
    nc_loss = sum(nc) / len(nc) if nc else float("nan")
    non_loss = sum(non) / len(non) if non else float("nan")
    return total, nc_loss, non_loss


@dataclass
class TrainingConfig:
    lr: float = 0.5
    steps: int = 1000
    batch_size: int = 32
    eval_every: int = 100
    seed: int = 0
    context_radius: int = 0
    hidden_dim: int = 8
    eval_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.batch_size < 1 or self.eval_every < 1 or self.hidden_dim < 1:
            raise ValueError("batch_size, eval_every, and hidden_dim must be >= 1")
        if not 0.0 < self.eval_fraction < 1.0:
            raise ValueError("eval_fraction must be in (0, 1)")


@dataclass
class MetricsRow:
    step: int
    total_loss: float
    nc_token_loss: float
    non_nc_token_loss: float
    is_eval: bool


def train(
    corpus: Iterable[TokenizedSequence],
    masking_config: MaskingConfig,
    train_config: TrainingConfig,
) -> tuple[list[MetricsRow], TinyLmParams]:
    """Train the tiny head on statically masked examples from ``corpus``.

    The corpus is split into train and held-out parts with the training seed,
    examples are generated once per sequence with the masking seed, and the
    held-out set is re-evaluated at step 0, every ``eval_every`` steps, and at
    the end. Per-step rows report the training batch; eval rows carry
    ``is_eval``. Raises if the loss stops being finite.
    """
    sequences = [s for s in corpus if s.pieces]
    if not sequences:
        raise ValueError("empty corpus")
    pairs = [
        (build_example(seq, masking_config, sequence_rng(masking_config.seed, i)), seq.y)
        for i, seq in enumerate(sequences)
    ]
    order = list(range(len(pairs)))
    random.Random(f"{train_config.seed}:split").shuffle(order)
    eval_n = max(1, int(round(train_config.eval_fraction * len(pairs))))
    eval_pairs = [pairs[i] for i in order[:eval_n]]
    train_pairs = [pairs[i] for i in order[eval_n:]]
    if train_config.steps > 0 and not train_pairs:
        raise ValueError("corpus too small: no training sequences after held-out split")

    params = TinyLmParams.init(
        vocab_size=masking_config.vocab_size,
        hidden_dim=train_config.hidden_dim,
        context_radius=train_config.context_radius,
        seed=train_config.seed,
    )

    metrics: list[MetricsRow] = []

    def eval_row(step: int) -> None:
        total, nc, non = evaluate(eval_pairs, params)
        metrics.append(MetricsRow(step, total, nc, non, True))

    eval_row(0)
    epoch = 0
    cursor = 0
    epoch_order: list[int] = []
    for step in range(1, train_config.steps + 1):
        batch: list[MaskedExample] = []
        batch_flags: list[Sequence[bool]] = []
        while len(batch) < train_config.batch_size:
            if cursor >= len(epoch_order):
                epoch_order = list(range(len(train_pairs)))
                random.Random(f"{train_config.seed}:epoch:{epoch}").shuffle(epoch_order)
                epoch += 1
                cursor = 0
            example, flags = train_pairs[epoch_order[cursor]]
            batch.append(example)
            batch_flags.append(flags)
            cursor += 1
        params, loss = grad_and_step(batch, params, train_config.lr)
        if not math.isfinite(loss):
            raise RuntimeError(f"training diverged at step {step}: loss={loss}")
        _, batch_nc, batch_non = evaluate(list(zip(batch, batch_flags)), params)
        metrics.append(MetricsRow(step, loss, batch_nc, batch_non, False))
        if step % train_config.eval_every == 0 or step == train_config.steps:
            eval_row(step)
    return metrics, params


def write_metrics_csv(rows: Iterable[MetricsRow], path: str) -> None:
    """CSV with columns step, total_loss, nc_token_loss, non_nc_token_loss, eval."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["step", "total_loss", "nc_token_loss", "non_nc_token_loss", "eval"])
        for row in rows:
            writer.writerow(
                [
                    row.step,
                    repr(row.total_loss),
                    repr(row.nc_token_loss),
                    repr(row.non_nc_token_loss),
                    int(row.is_eval),
                ]
            )
