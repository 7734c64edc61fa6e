# ep/oracle.py
# Brute-force references for tests: exhaustive edit-path and string
# enumeration and the exact total probability mass. Everything here works
# in linear probability space straight from the emission arrays, sharing
# nothing with the log-space tables in ep.core.
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    R_CONSUME,
    R_DELETE,
    R_INSERT,
    EditOp,
    EditPath,
    EmissionSequence,
    OpKind,
    TargetString,
    ep_score,
)
from .errors import NonPositiveEntry, TooLarge

logger = logging.getLogger(__name__)

MAX_PATH_TARGET = 6
MAX_PATH_FRAMES = 6
MAX_STRING_ALPHABET = 4
MAX_STRING_FRAMES = 4
MAX_STRING_CANDIDATES = 10_000


@dataclass(frozen=True)
class PathEnumeration:
    paths: list[tuple[EditPath, float]]
    total: float

    def best(self) -> tuple[EditPath, float]:
        return max(self.paths, key=lambda item: item[1])


def _op_prob(em: EmissionSequence, T: tuple[int, ...], op: EditOp) -> float:
    eos = em.alphabet.eos_index
    n = em.n
    i, j = op.i, op.j
    if op.kind is OpKind.CONSUME:
        return float(em.r[j - 1, R_CONSUME] * em.y[j - 1, T[i - 1]])
    if op.kind is OpKind.DELETE:
        if i > 0 and T[i - 1] == eos:
            return 1.0
        return float(em.r[j - 1, R_DELETE])
    if j < n:
        return float(em.r[j, R_INSERT] * em.ins[j, T[i - 1]])
    return float(em.final_ins[T[i - 1]])


def enumerate_paths(em: EmissionSequence, target: TargetString) -> PathEnumeration:
    """Every edit path from ("", no frames) to (target, all frames), with its probability."""
    L, n = len(target), em.n
    if L > MAX_PATH_TARGET or n > MAX_PATH_FRAMES:
        raise TooLarge(f"|T|={L}, n={n}; path enumeration is limited to {MAX_PATH_TARGET} x {MAX_PATH_FRAMES}")
    T = target.indices
    found: list[tuple[EditPath, float]] = []

    def walk(i, j, ops, prob):
        if (i, j) == (L, n):
            found.append((tuple(ops), prob))
            return
        moves = []
        if i < L and j < n:
            moves.append(EditOp.consume(i + 1, j + 1))
        if j < n:
            moves.append(EditOp.delete(i, j + 1))
        if i < L:
            moves.append(EditOp.insert(i + 1, j))
        for op in moves:
            ops.append(op)
            walk(op.i, op.j, ops, prob * _op_prob(em, T, op))
            ops.pop()

    walk(0, 0, [], 1.0)
    return PathEnumeration(found, float(sum(p for _, p in found)))


def best_path_enumerated(em: EmissionSequence, target: TargetString) -> tuple[EditPath, float]:
    return enumerate_paths(em, target).best()


def _candidate_count(alphabet_size: int, max_len: int) -> int:
    return sum((alphabet_size - 1) ** k for k in range(max_len))


def enumerate_strings(em: EmissionSequence, max_len: int) -> list[tuple[TargetString, float]]:
    """Every valid string of length <= max_len (EOS included) with exp(ep_score)."""
    K = em.alphabet.size
    if K > MAX_STRING_ALPHABET or em.n > MAX_STRING_FRAMES:
        raise TooLarge(f"|alphabet|={K}, n={em.n}; string enumeration needs <= {MAX_STRING_ALPHABET} and <= {MAX_STRING_FRAMES}")
    if max_len < 1 or _candidate_count(K, max_len) > MAX_STRING_CANDIDATES:
        raise TooLarge(f"max_len={max_len} yields too many candidates for an alphabet of {K}")

    body = [int(k) for k in em.alphabet.non_eos]
    eos = em.alphabet.eos_index
    out = []
    for length in range(max_len):
        for word in itertools.product(body, repeat=length):
            target = TargetString(word + (eos,), em.alphabet)
            out.append((target, float(np.exp(ep_score(em, target)))))
    return out


def best_eos_free(em: EmissionSequence, max_inserts: int = 2) -> tuple[tuple[int, ...], float]:
    """
    Exhaustive argmax over EOS-free strings and their edit paths (the
    base-string search), allowing up to max_inserts insertions in total.
    Ties keep the first string found in consume/delete/insert order.
    """
    if em.n > MAX_PATH_FRAMES or em.alphabet.size > 6:
        raise TooLarge("EOS-free search is limited to 6 frames and 6 symbols")
    body = [int(k) for k in em.alphabet.non_eos]
    n = em.n
    best = [(), -1.0]

    def walk(j, word, prob, inserts_left):
        if j == n:
            # the string ends here: no further insertions can help, but they are allowed
            if prob > best[1]:
                best[0], best[1] = tuple(word), prob
        if j < n:
            for c in body:
                walk(j + 1, word + [c], prob * em.r[j, R_CONSUME] * em.y[j, c], inserts_left)
            walk(j + 1, word, prob * em.r[j, R_DELETE], inserts_left)
        if inserts_left:
            for c in body:
                p = em.r[j, R_INSERT] * em.ins[j, c] if j < n else em.final_ins[c]
                walk(j, word + [c], prob * p, inserts_left - 1)

    walk(0, [], 1.0, max_inserts)
    return best[0], float(best[1])


def total_mass(em: EmissionSequence, strict: bool = True) -> float:
    """
    Sum of EP(T) over every valid string, read as the probability that the
    generative process (consume / delete / insert per state) ever emits EOS.

    M_j is the mass still to come from a not-yet-ended state at frame j.
    strict=True requires every entry to be positive, which makes the answer 1.
    """
    arrays = {"y": em.y, "r": em.r, "ins": em.ins, "final_ins": em.final_ins}
    for name, a in arrays.items():
        if a.size and (np.any(a <= 0) if strict else np.any(a < 0)):
            kind = "non-positive" if strict else "negative"
            raise NonPositiveEntry(f"{name} has {kind} entries")

    eos = em.alphabet.eos_index
    n = em.n
    p_end = float(em.final_ins[eos])
    m_next = 1.0 if p_end > 0 else 0.0  # geometric run of insertions after the last frame
    for j in range(n - 1, -1, -1):
        rc, ri, rd = (float(x) for x in em.r[j])
        i_end = float(em.ins[j, eos])
        y_end = float(em.y[j, eos])
        stay = ri * (1.0 - i_end)
        rest = ri * i_end + rd * m_next + rc * (y_end + (1.0 - y_end) * m_next)
        denom = 1.0 - stay
        m_next = rest / denom if denom > 0 else 0.0
    return m_next


def argmax_mismatches(em: EmissionSequence, predicted: TargetString, max_len: int) -> bool:
    """
    True when the exhaustive argmax over strings up to max_len differs from
    `predicted`; the mismatch is logged, never raised.
    """
    candidates = enumerate_strings(em, max_len)
    best, p_best = max(candidates, key=lambda item: item[1])
    if best.indices != predicted.indices and len(predicted) <= max_len:
        logger.info(
            "global argmax %r (%.6g) differs from prediction %r (%.6g)",
            best.text, p_best, predicted.text, float(np.exp(ep_score(em, predicted))),
        )
        return True
    return False
