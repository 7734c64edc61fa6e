# ep/formats.py
# Emission files (JSON), lexicon text files and matrix dumps (CSV).
from __future__ import annotations

import io
import logging
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .core import Alphabet, EditOp, EmissionSequence, EpMatrix, Frame, OpKind, validate_emissions
from .decode import Lexicon
from .errors import DimensionMismatch
from .models import EmissionFile, FrameRecord

logger = logging.getLogger(__name__)


# ---------- Emission files ----------

def emissions_from_record(record: EmissionFile, tolerance: float | None = None) -> EmissionSequence:
    alphabet = Alphabet(tuple(record.alphabet), record.alphabet.index(record.eos))
    K = alphabet.size
    for j, frame in enumerate(record.frames, start=1):
        for name, values, want in (("y", frame.y, K), ("r", frame.r, 3), ("ins", frame.ins, K)):
            if len(values) != want:
                raise DimensionMismatch(f"frame {j}: {name} has {len(values)} entries, expected {want}")
    if len(record.final_ins) != K:
        raise DimensionMismatch(f"final_ins has {len(record.final_ins)} entries, expected {K}")

    raw = EmissionSequence.from_frames(
        alphabet,
        [Frame(f.y, f.r, f.ins) for f in record.frames],
        np.array(record.final_ins, dtype=float),
    )
    return validate_emissions(raw, tolerance)


def emissions_to_record(em: EmissionSequence) -> EmissionFile:
    return EmissionFile(
        alphabet=list(em.alphabet.symbols),
        eos=em.alphabet.eos,
        frames=[FrameRecord(y=f.y.tolist(), r=f.r.tolist(), ins=f.ins.tolist()) for f in em.frames],
        final_ins=em.final_ins.tolist(),
    )


def read_emissions(path: str | Path, tolerance: float | None = None) -> EmissionSequence:
    """Parse and validate an emission file; vectors come back renormalized."""
    text = Path(path).read_text(encoding="utf-8")
    return emissions_from_record(EmissionFile.model_validate_json(text), tolerance)


def write_emissions(em: EmissionSequence, path: str | Path) -> None:
    # floats serialize with repr, the shortest text that reads back to the same double
    Path(path).write_text(emissions_to_record(em).model_dump_json(indent=2) + "\n", encoding="utf-8")


# ---------- Lexicons ----------

def read_lexicon_words(path: str | Path) -> list[str]:
    """One word per line; blank lines and lines starting with '%' are ignored."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if not word or word.startswith("%"):
                continue
            words.append(word)
    return words


def load_lexicon(path: str | Path, alphabet: Alphabet, fold_case: bool = False) -> Lexicon:
    words = read_lexicon_words(path)
    lex = Lexicon.from_words(words, alphabet, fold_case=fold_case)
    logger.info("loaded %d lexicon word(s) from %s (%d line(s))", len(lex), path, len(words))
    return lex


def write_lexicon(words: Iterable[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word in words:
            fh.write(word + "\n")


# ---------- Matrix dumps ----------

def matrix_frame(matrix: EpMatrix) -> pd.DataFrame:
    """Rows i = 0..|T|, columns j = 0..n of ln ep(T_{1:i}, y_{1:j})."""
    return pd.DataFrame(
        np.asarray(matrix.log_values),
        index=pd.RangeIndex(matrix.target_len + 1, name="i"),
        columns=list(range(matrix.frame_len + 1)),
    )


def path_frame(path: Sequence[EditOp]) -> pd.DataFrame:
    return pd.DataFrame(
        [(op.kind.value, op.i, op.j) for op in path],
        columns=["op", "i", "j"],
    )


def write_matrix_dump(matrix: EpMatrix, path: Sequence[EditOp], out: str | Path) -> None:
    """
    Two CSV sections separated by a blank line: the log-EP grid (header
    i,0..n; zero probability written as -inf), then the best path as op,i,j.
    """
    with open(out, "w", encoding="utf-8", newline="") as fh:
        matrix_frame(matrix).to_csv(fh)
        fh.write("\n")
        path_frame(path).to_csv(fh, index=False)


def parse_matrix_dump(text: str) -> tuple[pd.DataFrame, list[EditOp]]:
    grid_text, _, path_text = text.partition("\n\n")
    grid = pd.read_csv(io.StringIO(grid_text), index_col="i")
    grid.columns = [int(c) for c in grid.columns]
    ops = []
    if path_text.strip():
        steps = pd.read_csv(io.StringIO(path_text))
        ops = [EditOp(OpKind(row.op), int(row.i), int(row.j)) for row in steps.itertuples(index=False)]
    return grid, ops


def read_matrix_dump(path: str | Path) -> tuple[pd.DataFrame, list[EditOp]]:
    return parse_matrix_dump(Path(path).read_text(encoding="utf-8"))
