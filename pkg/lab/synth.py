# lab/synth.py
# Synthetic data: misaligned-frame corpora, random emission sequences and
# random lexicons.
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ep.core import Alphabet, EmissionSequence, TargetString
from ep.errors import TooLarge

from .models import SynthConfig
from .rng import SplitMix64

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Sample:
    features: np.ndarray  # (frames, feature_dim)
    target: TargetString
    # frames rendered per target symbol: 0 dropped, 1 normal, 2 duplicated (empty when unknown)
    copies: tuple[int, ...] = field(default=())

    @property
    def aligned(self) -> bool:
        return bool(self.copies) and all(c == 1 for c in self.copies)


def _render(rng: SplitMix64, symbol: int, dim: int, sigma: float) -> np.ndarray:
    x = np.zeros(dim)
    x[symbol] = 1.0
    if sigma > 0:
        x += sigma * rng.normals(dim)
    return x


def generate_corpus(cfg: SynthConfig, count: int) -> list[Sample]:
    """
    Random strings over the non-EOS symbols plus EOS, one noisy one-hot
    frame per symbol. Each non-EOS frame is dropped with p_drop or else
    duplicated with p_dup; both draws are always taken so the stream stays
    in step whatever the probabilities.
    """
    rng = SplitMix64(cfg.seed)
    alphabet = cfg.alphabet()
    body = alphabet.non_eos
    eos = alphabet.eos_index
    dim = cfg.input_dim

    corpus = []
    for _ in range(count):
        length = rng.randint(cfg.len_min, cfg.len_max)
        symbols = [int(body[rng.randint(0, len(body) - 1)]) for _ in range(length)] + [eos]
        frames, copies = [], []
        for s in symbols:
            n_copies = 1
            if s != eos:
                u_drop, u_dup = rng.random(), rng.random()
                if u_drop < cfg.p_drop:
                    n_copies = 0
                elif u_dup < cfg.p_dup:
                    n_copies = 2
            for _ in range(n_copies):
                frames.append(_render(rng, s, dim, cfg.noise_sigma))
            copies.append(n_copies)
        corpus.append(Sample(np.array(frames), TargetString(tuple(symbols), alphabet), tuple(copies)))
    logger.debug("generated %d samples (seed=%d)", count, cfg.seed)
    return corpus


def random_emissions(rng: SplitMix64, alphabet: Alphabet, n: int, floor: float = 0.0) -> EmissionSequence:
    """Random emission sequence; with floor > 0 every entry is at least floor."""
    K = alphabet.size
    y = np.array([rng.simplex(K, floor) for _ in range(n)]).reshape(n, K)
    r = np.array([rng.simplex(3, floor) for _ in range(n)]).reshape(n, 3)
    ins = np.array([rng.simplex(K, floor) for _ in range(n)]).reshape(n, K)
    return EmissionSequence(alphabet, y, r, ins, rng.simplex(K, floor))


def random_target(rng: SplitMix64, alphabet: Alphabet, max_len: int) -> TargetString:
    """Random valid target of total length 1..max_len (EOS included)."""
    body = alphabet.non_eos
    length = rng.randint(0, max_len - 1)
    word = tuple(int(body[rng.randint(0, len(body) - 1)]) for _ in range(length))
    return TargetString(word + (alphabet.eos_index,), alphabet)


def synthetic_lexicon(alphabet: Alphabet, count: int, seed: int, len_min: int = 2, len_max: int = 9) -> list[str]:
    """`count` distinct random words; a stand-in for a large dictionary."""
    body = [alphabet.symbols[k] for k in alphabet.non_eos]
    capacity = sum(len(body) ** k for k in range(len_min, len_max + 1))
    if count > capacity:
        raise TooLarge(f"only {capacity} distinct words of length {len_min}..{len_max} exist")
    rng = SplitMix64(seed)
    seen = set()
    words = []
    while len(words) < count:
        length = rng.randint(len_min, len_max)
        word = "".join(body[rng.randint(0, len(body) - 1)] for _ in range(length))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words
