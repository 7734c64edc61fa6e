# ep/grad.py
# Exact gradients of -ln EP with respect to every emission entry, from a
# backward sweep over the same grid the forward DP fills.
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import get_settings
from .core import (
    R_CONSUME,
    R_DELETE,
    R_INSERT,
    EmissionSequence,
    TargetString,
    _delete_scan,
    ep_forward,
)
from .errors import DimensionMismatch, ZeroProbability

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmissionGradients:
    """Same layout as EmissionSequence: dy (n, K), dr (n, 3), dins (n, K), dfinal_ins (K,)."""

    dy: np.ndarray
    dr: np.ndarray
    dins: np.ndarray
    dfinal_ins: np.ndarray

    @classmethod
    def zeros_like(cls, em: EmissionSequence) -> "EmissionGradients":
        return cls(
            np.zeros_like(em.y),
            np.zeros_like(em.r),
            np.zeros_like(em.ins),
            np.zeros_like(em.final_ins),
        )

    def arrays(self) -> tuple[np.ndarray, ...]:
        return self.dy, self.dr, self.dins, self.dfinal_ins

    def __add__(self, other: "EmissionGradients") -> "EmissionGradients":
        if any(a.shape != b.shape for a, b in zip(self.arrays(), other.arrays())):
            raise DimensionMismatch("cannot add gradients of different shapes")
        return EmissionGradients(*(a + b for a, b in zip(self.arrays(), other.arrays())))

    def scaled(self, factor: float) -> "EmissionGradients":
        return EmissionGradients(*(a * factor for a in self.arrays()))

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(a))) for a in self.arrays() if a.size), default=0.0)


def sum_gradients(grads: Sequence[EmissionGradients]) -> EmissionGradients:
    """Left-to-right sum, so a batch always reduces in the same order."""
    total = grads[0]
    for g in grads[1:]:
        total = total + g
    return total


def _backward_rows(em: EmissionSequence, target: TargetString) -> np.ndarray:
    """ln d(EP)/d(alpha[i, j]): the total probability of finishing from (i, j)."""
    L, n = len(target), em.n
    eos = em.alphabet.eos_index
    T = target.indices
    beta = np.full((L + 1, n + 1), -np.inf)

    for i in range(L, -1, -1):
        through = np.full(n + 1, -np.inf)
        if i == L:
            through[n] = 0.0
        else:
            nxt = T[i]
            through = beta[i + 1] + em.ins_table[:, nxt]
            if n:
                through[:-1] = np.logaddexp(through[:-1], beta[i + 1, 1:] + em.cons_table[1:, nxt])
        if i > 0 and T[i - 1] == eos:
            steps = np.zeros(n + 1)
        else:
            steps = em.del_row
        # scan right-to-left: reverse the row, then steps[k] pairs column n-k+1
        rev_steps = np.zeros(n + 1)
        rev_steps[1:] = steps[1:][::-1]
        beta[i] = _delete_scan(through[::-1][None, :], rev_steps[None, :], em.deletes_finite)[0][::-1]
    return beta


def ep_backward(em: EmissionSequence, target: TargetString) -> tuple[float, EmissionGradients]:
    """
    loss = -ln EP(target | em) and d(loss)/d(entry) for every probability
    entry, each entry treated as a free variable (no simplex projection).
    """
    alpha = ep_forward(em, target).log_values
    log_ep = float(alpha[-1, -1])
    if not np.isfinite(log_ep):
        raise ZeroProbability(f"EP of {target.text!r} is 0; loss is infinite")
    beta = _backward_rows(em, target)

    L, n = len(target), em.n
    eos = em.alphabet.eos_index
    T = target.indices
    with np.errstate(divide="ignore"):
        log_y = np.log(em.y)
        log_r = np.log(em.r)
        log_ins = np.log(em.ins)

    g = EmissionGradients.zeros_like(em)
    dy, dr, dins, dfinal = (np.array(a) for a in g.arrays())

    for i in range(1, L + 1):
        s = T[i - 1]
        if n:
            # consume(i, j), j = 1..n: weight alpha[i-1, j-1] * beta[i, j] / EP
            w = alpha[i - 1, :-1] + beta[i, 1:] - log_ep
            dy[:, s] -= np.exp(w + log_r[:, R_CONSUME])
            dr[:, R_CONSUME] -= np.exp(w + log_y[:, s])
        # insert(i, j), j = 0..n
        w = alpha[i - 1, :] + beta[i, :] - log_ep
        if n:
            dr[:, R_INSERT] -= np.exp(w[:-1] + log_ins[:, s])
            dins[:, s] -= np.exp(w[:-1] + log_r[:, R_INSERT])
        dfinal[s] -= np.exp(w[-1])

    for i in range(L + 1):
        if i > 0 and T[i - 1] == eos:
            continue  # deleting after the EOS costs nothing
        if n:
            w = alpha[i, :-1] + beta[i, 1:] - log_ep
            dr[:, R_DELETE] -= np.exp(w)

    return -log_ep, EmissionGradients(dy, dr, dins, dfinal)


def batch_loss(
    ems: Sequence[EmissionSequence],
    targets: Sequence[TargetString],
    workers: int | None = None,
) -> tuple[float, list[EmissionGradients]]:
    """
    Summed loss and per-item gradients. With workers > 1 items run on a
    thread pool; results are still collected and summed in item order.
    """
    if len(ems) != len(targets):
        raise DimensionMismatch(f"{len(ems)} emission sequences but {len(targets)} targets")
    workers = get_settings().workers if workers is None else workers

    def _one(k):
        try:
            return ep_backward(ems[k], targets[k])
        except ZeroProbability as exc:
            raise ZeroProbability(str(exc), index=k) from exc

    if workers > 1 and len(ems) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, range(len(ems))))
    else:
        results = [_one(k) for k in range(len(ems))]

    loss = 0.0
    for item_loss, _ in results:
        loss += item_loss
    return loss, [grads for _, grads in results]


def _softmax_vjp(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Row-wise p * (g - <p, g>): the gradient through a normalized exponential."""
    return p * (g - np.sum(p * g, axis=-1, keepdims=True))


def chain_softmax(grads: EmissionGradients, em: EmissionSequence) -> EmissionGradients:
    """
    Turn probability-space gradients into gradients w.r.t. the scores that
    produced each vector through a softmax.
    """
    for name, a in (("y", em.y), ("r", em.r), ("ins", em.ins), ("final_ins", em.final_ins)):
        if a.size and np.any(a <= 0):
            raise ZeroProbability(f"{name} has non-positive entries; softmax outputs are strictly positive")
    return EmissionGradients(
        _softmax_vjp(em.y, grads.dy),
        _softmax_vjp(em.r, grads.dr),
        _softmax_vjp(em.ins, grads.dins),
        _softmax_vjp(em.final_ins, grads.dfinal_ins),
    )
