# lab/corpus.py
# Corpus text format, one sample per line:
#   <frame features, comma-separated>;<next frame>;...<TAB><target string>
import csv
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from ep.core import Alphabet
from ep.errors import DimensionMismatch

from .synth import Sample

logger = logging.getLogger(__name__)


def format_sample(sample: Sample) -> str:
    frames = ";".join(",".join(repr(float(v)) for v in frame) for frame in sample.features)
    return f"{frames}\t{sample.target.text}"


def write_corpus(corpus: Sequence[Sample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in corpus:
            fh.write(format_sample(sample) + "\n")


def read_corpus(path: str | Path, alphabet: Alphabet) -> list[Sample]:
    """Parse a corpus file; every line must use the same feature width."""
    df = pd.read_csv(
        path,
        sep="\t",
        header=None,
        names=["features", "target"],
        dtype=str,
        keep_default_na=False,
        quoting=csv.QUOTE_NONE,
        comment=None,
    )
    samples = []
    width = None
    for line_no, row in enumerate(df.itertuples(index=False), start=1):
        frames = [f for f in row.features.split(";") if f]
        features = np.array([[float(v) for v in f.split(",")] for f in frames], dtype=float)
        if features.size:
            if width is None:
                width = features.shape[1]
            elif features.shape[1] != width:
                raise DimensionMismatch(f"line {line_no}: feature width {features.shape[1]}, expected {width}")
        else:
            features = np.zeros((0, width or 0))
        samples.append(Sample(features, alphabet.encode(row.target)))
    logger.info("read %d sample(s) from %s", len(samples), path)
    return samples


def feature_width(corpus: Sequence[Sample]) -> int:
    for sample in corpus:
        if sample.features.size:
            return sample.features.shape[1]
    raise DimensionMismatch("corpus has no frames to infer the feature width from")


def check_alphabet(corpus: Sequence[Sample], alphabet: Alphabet) -> None:
    """
    Synthetic features carry a one-hot block over the whole alphabet, EOS
    included, so a corpus narrower than that was generated for a smaller one.
    """
    width = feature_width(corpus)
    if width < alphabet.size:
        raise DimensionMismatch(
            f"corpus feature width {width} is narrower than the {alphabet.size}-symbol alphabet; "
            f"was it generated with a smaller --alphabet-size?"
        )
    used = {k for sample in corpus for k in sample.target.body}
    unused = alphabet.size - 1 - len(used)
    if unused:
        logger.warning("%d alphabet symbol(s) never occur in the corpus targets", unused)
