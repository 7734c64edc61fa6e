# ep/decode.py
# Lexicon-free prediction, lexicon prediction with the lambda trust weight,
# and the EP-Trie that scores a whole lexicon with shared prefixes.
from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .core import (
    R_CONSUME,
    R_DELETE,
    Alphabet,
    EmissionSequence,
    TargetString,
    ep_score,
    extend_rows,
    initial_row,
)
from .errors import DimensionMismatch, LambdaOutOfRange, WordContainsEOS

logger = logging.getLogger(__name__)

LAMBDA_MIN, LAMBDA_MAX = 0.5, 1.0


class PredictionSource(str, enum.Enum):
    FREE = "free"
    LEXICON = "lexicon"


@dataclass(frozen=True)
class Prediction:
    text: TargetString
    log_score: float  # ln EP of text, before any lambda weighting
    source: PredictionSource


# ---------- Lexicon ----------

@dataclass(frozen=True)
class Lexicon:
    """Words as alphabet indices, without EOS. Duplicates are dropped, first one kept."""

    words: tuple[tuple[int, ...], ...]
    alphabet: Alphabet = field(repr=False)

    def __post_init__(self):
        eos = self.alphabet.eos_index
        seen = set()
        unique = []
        for word in self.words:
            word = tuple(int(k) for k in word)
            if not word:
                continue
            if eos in word:
                raise WordContainsEOS(f"lexicon word {self.alphabet.text(word)!r} contains EOS")
            if word not in seen:
                seen.add(word)
                unique.append(word)
        object.__setattr__(self, "words", tuple(unique))

    @classmethod
    def from_words(cls, words: Iterable[str], alphabet: Alphabet, fold_case: bool = False) -> "Lexicon":
        """
        Map plain words onto the alphabet. Words with symbols outside the
        alphabet are skipped with a warning; a word containing EOS is an error.
        With fold_case, letters match alphabet symbols case-insensitively.
        """
        folded = {}
        if fold_case:
            for k, sym in enumerate(alphabet.symbols):
                if k != alphabet.eos_index:
                    folded.setdefault(sym.casefold(), k)

        encoded = []
        skipped = 0
        for word in words:
            if not word:
                continue
            if alphabet.eos in word:
                raise WordContainsEOS(f"lexicon word {word!r} contains EOS {alphabet.eos!r}")
            indices = []
            for ch in word:
                if ch in alphabet:
                    indices.append(alphabet.index(ch))
                elif fold_case and ch.casefold() in folded:
                    indices.append(folded[ch.casefold()])
                else:
                    indices = None
                    break
            if indices is None:
                skipped += 1
                logger.warning("skipping lexicon word %r: symbol outside the alphabet", word)
                continue
            encoded.append(tuple(indices))
        if skipped:
            logger.warning("skipped %d lexicon word(s) with out-of-alphabet symbols", skipped)
        return cls(tuple(encoded), alphabet)

    def __len__(self) -> int:
        return len(self.words)

    @cached_property
    def _word_set(self) -> frozenset[tuple[int, ...]]:
        return frozenset(self.words)

    def __contains__(self, word) -> bool:
        return tuple(int(k) for k in word) in self._word_set

    def targets(self) -> list[TargetString]:
        eos = self.alphabet.eos_index
        return [TargetString(word + (eos,), self.alphabet) for word in self.words]

    def texts(self) -> list[str]:
        return [self.alphabet.text(w) for w in self.words]


# ---------- EP-Trie ----------

@dataclass(frozen=True, eq=False)
class TrieLevel:
    """All nodes at one prefix length: parent index into the level above, last symbol, vectors."""

    parent: np.ndarray
    symbol: np.ndarray
    v: np.ndarray  # (m, n+1): ln ep(prefix, y_{1:j}), j = 0..n

    def __len__(self) -> int:
        return len(self.symbol)


@dataclass(frozen=True)
class TrieNode:
    trie: "EpTrie" = field(repr=False, compare=False)
    depth: int
    index: int

    @property
    def v(self) -> np.ndarray:
        return self.trie.levels[self.depth].v[self.index]

    @property
    def symbol(self) -> int | None:
        if self.depth == 0:
            return None
        return int(self.trie.levels[self.depth].symbol[self.index])

    @property
    def is_word(self) -> bool:
        # EOS only ever closes a word
        return self.symbol == self.trie.lexicon.alphabet.eos_index

    def prefix(self) -> tuple[int, ...]:
        out = []
        index = self.index
        for depth in range(self.depth, 0, -1):
            level = self.trie.levels[depth]
            out.append(int(level.symbol[index]))
            index = int(level.parent[index])
        return tuple(reversed(out))


@dataclass(frozen=True, eq=False)
class EpTrie:
    levels: tuple[TrieLevel, ...]
    lexicon: Lexicon
    frame_len: int
    word_depth: np.ndarray  # per lexicon word: depth of its word + EOS node
    word_node: np.ndarray  # per lexicon word: index of that node within its level

    @property
    def root(self) -> TrieNode:
        return TrieNode(self, 0, 0)

    @property
    def node_count(self) -> int:
        return sum(len(level) for level in self.levels)

    def nodes(self):
        for depth, level in enumerate(self.levels):
            for index in range(len(level)):
                yield TrieNode(self, depth, index)

    def find(self, indices: Iterable[int]) -> TrieNode | None:
        index = 0
        depth = 0
        for depth, s in enumerate(indices, start=1):
            if depth >= len(self.levels):
                return None
            level = self.levels[depth]
            hit = np.flatnonzero((level.parent == index) & (level.symbol == int(s)))
            if not hit.size:
                return None
            index = int(hit[0])
        return TrieNode(self, depth, index)

    def word_scores(self) -> np.ndarray:
        """ln EP(word + EOS) for every lexicon word, in lexicon order."""
        scores = np.full(len(self.lexicon), -np.inf)
        for depth in np.unique(self.word_depth):
            sel = self.word_depth == depth
            scores[sel] = self.levels[depth].v[self.word_node[sel], -1]
        return scores


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_trie(lex: Lexicon, em: EmissionSequence) -> EpTrie:
    """
    Lay the words + EOS out as rows of a padded matrix and sort them, so every
    prefix occupies a contiguous block of rows. A row opens a new node at
    depth d exactly when it differs from the previous row somewhere in its
    first d symbols. The vectors are then filled depth by depth: each level
    is one batched row recurrence over all of its nodes' parents.
    """
    eos = em.alphabet.eos_index
    if lex.alphabet != em.alphabet:
        raise DimensionMismatch("lexicon and emissions use different alphabets")
    root = TrieLevel(_frozen(np.array([-1])), _frozen(np.array([-1])), _frozen(initial_row(em)[None, :]))
    m = len(lex)
    if not m:
        empty = np.zeros(0, dtype=np.intp)
        return EpTrie((root,), lex, em.n, empty, empty)

    lengths = np.fromiter(map(len, lex.words), dtype=np.intp, count=m)
    flat = np.fromiter(itertools.chain.from_iterable(lex.words), dtype=np.intp, count=int(lengths.sum()))
    if np.any(flat == eos):
        raise WordContainsEOS("lexicon word contains EOS")
    width = int(lengths.max()) + 1
    padded = np.full((m, width), -1, dtype=np.intp)
    padded[np.arange(width) < lengths[:, None]] = flat
    padded[np.arange(m), lengths] = eos

    # lexsort keys run last-to-first, so column 0 is the primary key
    order = np.lexsort(padded.T[::-1])
    rows = padded[order]
    opens = np.ones((m, width), dtype=bool)
    opens[1:] = np.logical_or.accumulate(rows[1:] != rows[:-1], axis=1)
    opens &= rows >= 0
    ids = np.cumsum(opens, axis=0) - 1

    levels = [root]
    for d in range(width):
        members = np.flatnonzero(opens[:, d])
        parent = ids[members, d - 1] if d else np.zeros(len(members), dtype=np.intp)
        symbol = rows[members, d]
        v = extend_rows(em, levels[-1].v[parent], symbol)
        levels.append(TrieLevel(_frozen(parent), _frozen(symbol), _frozen(v)))

    word_depth = np.empty(m, dtype=np.intp)
    word_node = np.empty(m, dtype=np.intp)
    sorted_lengths = lengths[order]
    word_depth[order] = sorted_lengths + 1
    word_node[order] = ids[np.arange(m), sorted_lengths]

    trie = EpTrie(tuple(levels), lex, em.n, _frozen(word_depth), _frozen(word_node))
    logger.debug("built EP-Trie: %d words, %d nodes, depth %d", m, trie.node_count, width)
    return trie


def score_lexicon(em: EmissionSequence, lex: Lexicon) -> np.ndarray:
    """Per-word DP, one full ep_forward per word (the enumeration baseline)."""
    return np.array([ep_score(em, t) for t in lex.targets()], dtype=float)


# ---------- Lexicon-free ----------

def greedy_base_string(em: EmissionSequence) -> tuple[int, ...]:
    """
    The EOS-free string with the most probable edit path. Insertions never
    raise an EOS-free path's probability, so each frame is decided on its
    own: consume its best non-EOS symbol, or delete it when rD is larger.
    """
    if em.n == 0:
        return ()
    body = em.alphabet.non_eos
    scores = em.y[:, body]
    best = body[np.argmax(scores, axis=1)]
    keep = em.r[:, R_DELETE] <= em.r[:, R_CONSUME] * scores.max(axis=1)
    return tuple(int(c) for c in best[keep])


def free_candidates(em: EmissionSequence) -> list[tuple[TargetString, float]]:
    """Every EOS-closed prefix of the base string with its ln EP, sharing DP rows."""
    eos = em.alphabet.eos_index
    base = greedy_base_string(em)
    rows = np.empty((len(base) + 1, em.n + 1))
    rows[0] = initial_row(em)
    for i, s in enumerate(base, start=1):
        rows[i] = extend_rows(em, rows[i - 1], [s])[0]
    closed = extend_rows(em, rows, np.full(len(base) + 1, eos))
    return [
        (TargetString(base[:i] + (eos,), em.alphabet), float(closed[i, -1]))
        for i in range(len(base) + 1)
    ]


def _rank(weighted: float, in_lexicon: bool, indices: tuple[int, ...]):
    # min() over this key: higher score, then lexicon members, then shorter, then alphabet order
    return (-weighted, not in_lexicon, len(indices), indices)


def predict_free(em: EmissionSequence) -> Prediction:
    candidates = free_candidates(em)
    target, score = min(candidates, key=lambda c: _rank(c[1], False, c[0].indices))
    return Prediction(target, score, PredictionSource.FREE)


def predict_lex(
    em: EmissionSequence,
    lex: Lexicon,
    lam: float,
    trie: EpTrie | None = None,
    method: str = "trie",
) -> Prediction:
    """
    argmax over free candidates and lexicon words of lam * EP for lexicon
    words and (1 - lam) * EP for the rest. lam = 1 always returns a
    lexicon word; an empty lexicon falls back to the free prediction.
    """
    if not LAMBDA_MIN <= lam <= LAMBDA_MAX:
        raise LambdaOutOfRange(f"lambda must lie in [{LAMBDA_MIN}, {LAMBDA_MAX}], got {lam}")
    if not lex.words:
        logger.debug("empty lexicon; using the lexicon-free prediction")
        return predict_free(em)

    if method == "trie":
        if trie is None:
            trie = build_trie(lex, em)
        elif trie.frame_len != em.n:
            raise DimensionMismatch(f"trie was built for {trie.frame_len} frames, emissions have {em.n}")
        lex_scores = trie.word_scores()
    elif method == "enumerate":
        lex_scores = score_lexicon(em, lex)
    else:
        raise ValueError(f"unknown lexicon scoring method {method!r}")

    eos = em.alphabet.eos_index
    log_lam = math.log(lam)
    log_rest = math.log(1.0 - lam) if lam < 1.0 else -math.inf

    pool: dict[tuple[int, ...], tuple[float, bool, float]] = {}
    for word, score in zip(lex.words, lex_scores):
        pool[word + (eos,)] = (log_lam + float(score), True, float(score))
    for target, score in free_candidates(em):
        if target.indices not in pool:
            pool[target.indices] = (log_rest + score, False, score)

    indices, (_, in_lex, score) = min(pool.items(), key=lambda item: _rank(item[1][0], item[1][1], item[0]))
    source = PredictionSource.LEXICON if in_lex else PredictionSource.FREE
    return Prediction(TargetString(indices, em.alphabet), score, source)
