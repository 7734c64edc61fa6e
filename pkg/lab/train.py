# lab/train.py
# Training (EP or frame-wise loss, ADADELTA), evaluation and the EP/FP
# demonstrations on the toy model.
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from ep.config import get_settings
from ep.core import (
    EditPath,
    EmissionSequence,
    OpKind,
    TargetString,
    best_edit_path,
    classify_path,
    ep_score,
    fp_prefix_vector,
)
from ep.decode import Lexicon, build_trie, predict_free, predict_lex
from ep.errors import DivergedLoss, EpError, ZeroProbability
from ep.grad import EmissionGradients, chain_softmax, ep_backward

from .models import TrainReport
from .network import ToyModel, backward_model, forward_model
from .rng import SplitMix64
from .synth import Sample

logger = logging.getLogger(__name__)

LOSS_KINDS = ("ep", "fp")
HELDOUT_FRACTION = 0.2
DEFAULT_LAMBDAS = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 1.0)


# ---------- Frame-wise loss ----------

def fp_loss(em: EmissionSequence, target: TargetString) -> tuple[float, EmissionGradients]:
    """
    -ln FP: frame j scores target symbol j, for j up to min(|T|, n); longer
    targets are truncated at n. Only y receives gradient.
    """
    m = min(len(target), em.n)
    rows = np.arange(m)
    cols = np.array(target.indices[:m], dtype=np.intp)
    picked = em.y[rows, cols]
    with np.errstate(divide="ignore"):
        loss = float(-np.sum(np.log(picked)))
        dy = np.zeros_like(em.y)
        dy[rows, cols] = -1.0 / picked
    return loss, EmissionGradients(dy, np.zeros_like(em.r), np.zeros_like(em.ins), np.zeros_like(em.final_ins))


# ---------- ADADELTA ----------

class Adadelta:
    """
    Per-coordinate steps from running averages of squared gradients (rho)
    and squared updates; eps keeps the first steps finite.
    """

    def __init__(self, rho: float | None = None, eps: float | None = None):
        settings = get_settings()
        self.rho = settings.adadelta_rho if rho is None else rho
        self.eps = settings.adadelta_eps if eps is None else eps
        self.square_avg: dict[str, np.ndarray] = {}
        self.acc_delta: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        rho, eps = self.rho, self.eps
        for name in sorted(grads):
            g = grads[name]
            sq = self.square_avg.setdefault(name, np.zeros_like(g))
            acc = self.acc_delta.setdefault(name, np.zeros_like(g))
            sq *= rho
            sq += (1.0 - rho) * g * g
            delta = np.sqrt(acc + eps) / np.sqrt(sq + eps) * g
            params[name] -= delta
            acc *= rho
            acc += (1.0 - rho) * delta * delta


# ---------- Gradients through the model ----------

def sample_gradients(model: ToyModel, sample: Sample, loss_kind: str) -> tuple[float, dict[str, np.ndarray]]:
    em = forward_model(model, sample.features)
    if loss_kind == "ep":
        loss, grads = ep_backward(em, sample.target)
    elif loss_kind == "fp":
        loss, grads = fp_loss(em, sample.target)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}; expected one of {LOSS_KINDS}")
    return loss, backward_model(model, sample.features, chain_softmax(grads, em))


def _batch_gradients(model, batch, loss_kind, workers):
    if workers > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: sample_gradients(model, s, loss_kind), batch))
    else:
        results = [sample_gradients(model, s, loss_kind) for s in batch]
    loss = 0.0
    total = {name: np.zeros_like(p) for name, p in model.params.items()}
    for item_loss, grads in results:  # fixed order
        loss += item_loss
        for name, g in grads.items():
            total[name] += g
    return loss, total


# ---------- Training ----------

def split_heldout(corpus: Sequence[Sample]) -> tuple[list[Sample], list[Sample]]:
    cut = max(1, int(round(len(corpus) * (1.0 - HELDOUT_FRACTION))))
    train_part, held = list(corpus[:cut]), list(corpus[cut:])
    return train_part, held or train_part


def train(
    model: ToyModel,
    corpus: Sequence[Sample],
    loss_kind: str = "ep",
    epochs: int = 50,
    rho: float | None = None,
    eps: float | None = None,
    seed: int = 0,
    batch_size: int | None = None,
    heldout: Sequence[Sample] | None = None,
    workers: int | None = None,
) -> tuple[ToyModel, TrainReport]:
    """
    ADADELTA over shuffled mini-batches of the mean per-sample loss. The
    input model is left untouched. Without an explicit held-out set the last
    20% of the corpus is held out.
    """
    if not corpus:
        raise ValueError("cannot train on an empty corpus")
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {loss_kind!r}; expected one of {LOSS_KINDS}")
    settings = get_settings()
    batch_size = settings.batch_size if batch_size is None else batch_size
    workers = settings.workers if workers is None else workers

    if heldout is None:
        train_set, heldout = split_heldout(corpus)
    else:
        train_set = list(corpus)

    model = model.copy()
    optimizer = Adadelta(rho, eps)
    rng = SplitMix64(seed)
    order = list(range(len(train_set)))
    report = TrainReport(loss_kind=loss_kind, alphabet=list(model.alphabet.symbols), seed=seed, epochs=epochs)
    started = time.perf_counter()

    logger.info("training (%s loss): %d samples, %d held out, %d epoch(s)", loss_kind, len(train_set), len(heldout), epochs)
    for epoch in range(1, epochs + 1):
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), batch_size):
            batch = [train_set[k] for k in order[start:start + batch_size]]
            try:
                loss, grads = _batch_gradients(model, batch, loss_kind, workers)
            except ZeroProbability as exc:
                logger.error("epoch %d: %s", epoch, exc)
                raise DivergedLoss(f"epoch {epoch}: {exc}") from exc
            if not math.isfinite(loss):
                logger.error("epoch %d: non-finite loss %r", epoch, loss)
                raise DivergedLoss(f"epoch {epoch}: loss became {loss}")
            optimizer.step(model.params, {name: g / len(batch) for name, g in grads.items()})
            epoch_loss += loss

        accuracy = evaluate(model, heldout)
        report.epoch_loss.append(epoch_loss / len(train_set))
        report.epoch_accuracy.append(accuracy)
        logger.info("epoch %d/%d loss=%.4f heldout_acc=%.3f", epoch, epochs, epoch_loss / len(train_set), accuracy)

    report.final_accuracy = evaluate(model, heldout) if epochs == 0 else report.epoch_accuracy[-1]
    report.wall_clock = time.perf_counter() - started
    return model, TrainReport.model_validate(report.model_dump())


# ---------- Evaluation ----------

def predict_sample(model: ToyModel, sample: Sample, lex: Lexicon | None = None, lam: float | None = None):
    em = forward_model(model, sample.features)
    if lex is None:
        return predict_free(em)
    lam = get_settings().default_lambda if lam is None else lam
    return predict_lex(em, lex, lam)


def evaluate(model: ToyModel, corpus: Sequence[Sample], lex: Lexicon | None = None, lam: float | None = None) -> float:
    """Exact-match accuracy (EOS included) of lexicon-free or lexicon predictions."""
    if not corpus:
        return 0.0
    hits = sum(
        predict_sample(model, sample, lex, lam).text.indices == sample.target.indices
        for sample in corpus
    )
    return hits / len(corpus)


def lexicon_from_corpus(corpus: Sequence[Sample]) -> Lexicon:
    alphabet = corpus[0].target.alphabet
    return Lexicon(tuple(sample.target.body for sample in corpus), alphabet)


def sweep_lambda(
    model: ToyModel,
    corpus: Sequence[Sample],
    lex: Lexicon,
    lambdas: Sequence[float] = DEFAULT_LAMBDAS,
) -> pd.DataFrame:
    """Accuracy for each lambda; each sample's trie is built once and reused."""
    hits = np.zeros(len(lambdas))
    for sample in corpus:
        em = forward_model(model, sample.features)
        trie = build_trie(lex, em)
        for k, lam in enumerate(lambdas):
            hits[k] += predict_lex(em, lex, lam, trie=trie).text.indices == sample.target.indices
    accuracy = hits / len(corpus) if corpus else hits
    return pd.DataFrame({"lambda": list(lambdas), "accuracy": accuracy})


# ---------- EP vs FP demonstrations ----------

@dataclass(frozen=True)
class EpFpComparison:
    log_ep: float
    log_fp: float
    path: EditPath
    path_class: str


def compare_ep_fp(model: ToyModel, sample: Sample) -> EpFpComparison:
    """EP and FP of the ground truth under the model, with the best path's shape."""
    em = forward_model(model, sample.features)
    path, _ = best_edit_path(em, sample.target)
    out = EpFpComparison(
        log_ep=ep_score(em, sample.target),
        log_fp=float(fp_prefix_vector(em, sample.target)[-1]),
        path=path,
        path_class=classify_path(path, sample.target),
    )
    logger.info(
        "%r: ln EP=%.4f ln FP=%.4f best path %s",
        sample.target.text, out.log_ep, out.log_fp, out.path_class,
    )
    return out


def is_diagonal(path: EditPath) -> bool:
    return all(op.kind is OpKind.CONSUME for op in path)


def diagonal_fraction(model: ToyModel, corpus: Sequence[Sample]) -> float:
    """Share of samples whose best edit path is consumptions only."""
    if not corpus:
        return 0.0
    hits = 0
    for sample in corpus:
        try:
            path, _ = best_edit_path(forward_model(model, sample.features), sample.target)
        except EpError:
            continue
        hits += is_diagonal(path)
    return hits / len(corpus)
