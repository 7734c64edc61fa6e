# ep/core.py
# Domain types, edit-operation probabilities, the forward EP dynamic program
# and best-edit-path extraction.
#
# States are (i, j): the first i target symbols have been produced from the
# first j frames. An EditOp is named by the state it lands on:
#   consume(i, j): (i-1, j-1) -> (i, j)
#   delete(i, j):  (i, j-1)   -> (i, j)
#   insert(i, j):  (i-1, j)   -> (i, j)   (a symbol missing before frame j+1)
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import get_settings
from .errors import (
    BadSum,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidAlphabet,
    InvalidChain,
    InvalidTarget,
    NegativeEntry,
    UnknownSymbol,
)

logger = logging.getLogger(__name__)

EOS = "#"
NEG_INF = -np.inf

# column order of the R triple
R_CONSUME, R_INSERT, R_DELETE = 0, 1, 2


# ---------- Alphabet / targets ----------

@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]
    eos_index: int
    _lookup: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise InvalidAlphabet("alphabet needs at least one symbol besides EOS")
        if len(set(symbols)) != len(symbols):
            raise InvalidAlphabet(f"alphabet symbols must be distinct: {symbols}")
        if not 0 <= self.eos_index < len(symbols):
            raise InvalidAlphabet(f"eos_index {self.eos_index} outside alphabet of size {len(symbols)}")
        object.__setattr__(self, "_lookup", {s: k for k, s in enumerate(symbols)})

    @classmethod
    def from_symbols(cls, symbols: Iterable[str], eos: str = EOS) -> "Alphabet":
        """Build an alphabet; EOS is appended when the symbols do not contain it."""
        symbols = list(symbols)
        if eos not in symbols:
            symbols.append(eos)
        return cls(tuple(symbols), symbols.index(eos))

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def eos(self) -> str:
        return self.symbols[self.eos_index]

    @property
    def non_eos(self) -> np.ndarray:
        return np.array([k for k in range(self.size) if k != self.eos_index], dtype=np.intp)

    def index(self, symbol: str) -> int:
        try:
            return self._lookup[symbol]
        except KeyError:
            raise UnknownSymbol(symbol) from None

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._lookup

    def text(self, indices: Iterable[int]) -> str:
        return "".join(self.symbols[k] for k in indices)

    def encode(self, text: str) -> "TargetString":
        """
        Map text to a TargetString. A trailing EOS is appended when absent,
        so CLI users never have to type it.
        """
        indices = [self.index(ch) for ch in text]
        if not indices or indices[-1] != self.eos_index:
            indices.append(self.eos_index)
        return TargetString(tuple(indices), self)


@dataclass(frozen=True)
class TargetString:
    indices: tuple[int, ...]
    alphabet: Alphabet = field(repr=False)

    def __post_init__(self):
        indices = tuple(int(k) for k in self.indices)
        object.__setattr__(self, "indices", indices)
        eos = self.alphabet.eos_index
        if not indices:
            raise InvalidTarget("target must contain at least the EOS symbol")
        if indices[-1] != eos:
            raise InvalidTarget(f"target {self.alphabet.text(indices)!r} must end with EOS")
        if eos in indices[:-1]:
            raise InvalidTarget(f"target {self.alphabet.text(indices)!r} contains EOS before its end")
        if any(not 0 <= k < self.alphabet.size for k in indices):
            raise InvalidTarget(f"target indices {indices} outside alphabet")

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def text(self) -> str:
        return self.alphabet.text(self.indices)

    @property
    def body(self) -> tuple[int, ...]:
        """Indices without the trailing EOS."""
        return self.indices[:-1]


# ---------- Emissions ----------

@dataclass(frozen=True, eq=False)
class Frame:
    y: np.ndarray
    r: np.ndarray
    ins: np.ndarray


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EmissionSequence:
    """
    Per-frame output distribution y, alignment triple r = (rC, rI, rD) and
    insertion distribution ins, plus final_ins for insertions after the
    last frame. Arrays are (n, K), (n, 3), (n, K) and (K,).

    Construction checks shapes only; validate_emissions checks the values.
    """

    alphabet: Alphabet
    y: np.ndarray
    r: np.ndarray
    ins: np.ndarray
    final_ins: np.ndarray

    # log tables used by the DP; row j of each is the operation landing on column j
    cons_table: np.ndarray = field(init=False, repr=False)
    ins_table: np.ndarray = field(init=False, repr=False)
    del_row: np.ndarray = field(init=False, repr=False)
    deletes_finite: bool = field(init=False, repr=False)

    def __post_init__(self):
        K = self.alphabet.size
        y = _readonly(self.y)
        r = _readonly(self.r)
        ins = _readonly(self.ins)
        final_ins = _readonly(self.final_ins)
        n = y.shape[0] if y.ndim == 2 else 0
        if y.size == 0:
            y = _readonly(np.zeros((0, K)))
        if r.size == 0:
            r = _readonly(np.zeros((0, 3)))
        if ins.size == 0:
            ins = _readonly(np.zeros((0, K)))

        problems = []
        if y.shape != (n, K):
            problems.append(f"y has shape {y.shape}, expected ({n}, {K})")
        if r.shape != (n, 3):
            problems.append(f"r has shape {r.shape}, expected ({n}, 3)")
        if ins.shape != (n, K):
            problems.append(f"ins has shape {ins.shape}, expected ({n}, {K})")
        if final_ins.shape != (K,):
            problems.append(f"final_ins has shape {final_ins.shape}, expected ({K},)")
        if problems:
            raise DimensionMismatch("; ".join(problems))

        for name, value in (("y", y), ("r", r), ("ins", ins), ("final_ins", final_ins)):
            object.__setattr__(self, name, value)

        with np.errstate(divide="ignore", invalid="ignore"):
            log_y = np.log(y)
            log_r = np.log(r)
            log_ins = np.log(ins)
            log_final = np.log(final_ins)

        cons = np.full((n + 1, K), NEG_INF)
        cons[1:] = log_r[:, [R_CONSUME]] + log_y
        insert = np.empty((n + 1, K))
        insert[:n] = log_r[:, [R_INSERT]] + log_ins
        insert[n] = log_final
        dele = np.full(n + 1, NEG_INF)
        dele[1:] = log_r[:, R_DELETE]

        object.__setattr__(self, "cons_table", _readonly(cons))
        object.__setattr__(self, "ins_table", _readonly(insert))
        object.__setattr__(self, "del_row", _readonly(dele))
        object.__setattr__(self, "deletes_finite", bool(np.all(np.isfinite(dele[1:]))))

    @classmethod
    def from_frames(cls, alphabet: Alphabet, frames: Sequence[Frame], final_ins) -> "EmissionSequence":
        K = alphabet.size
        if not frames:
            return cls(alphabet, np.zeros((0, K)), np.zeros((0, 3)), np.zeros((0, K)), final_ins)
        return cls(
            alphabet,
            np.stack([np.asarray(f.y, dtype=float) for f in frames]),
            np.stack([np.asarray(f.r, dtype=float) for f in frames]),
            np.stack([np.asarray(f.ins, dtype=float) for f in frames]),
            final_ins,
        )

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def frames(self) -> tuple[Frame, ...]:
        return tuple(Frame(self.y[j], self.r[j], self.ins[j]) for j in range(self.n))

    def replace(self, **arrays) -> "EmissionSequence":
        """Copy with some of y / r / ins / final_ins swapped out (no validation)."""
        values = {"y": self.y, "r": self.r, "ins": self.ins, "final_ins": self.final_ins}
        values.update(arrays)
        return EmissionSequence(self.alphabet, **values)


def validate_emissions(raw: EmissionSequence, tolerance: float | None = None) -> EmissionSequence:
    """
    Check every distribution is non-negative and sums to 1 within tolerance,
    then return a copy with each vector renormalized to sum 1. Vectors that
    already sum to 1 up to rounding come back unchanged, so a validated
    sequence survives a file round trip bit for bit.
    """
    tol = get_settings().tolerance if tolerance is None else tolerance
    K = raw.alphabet.size
    n = raw.n
    if raw.y.shape != (n, K) or raw.ins.shape != (n, K) or raw.r.shape != (n, 3) or raw.final_ins.shape != (K,):
        raise DimensionMismatch("emission arrays do not match the alphabet size / frame count")

    vectors = (
        ("y", raw.y),
        ("r", raw.r),
        ("ins", raw.ins),
        ("final_ins", raw.final_ins[None, :]),
    )
    for name, arr in vectors:
        if not np.all(np.isfinite(arr)):
            row = int(np.argwhere(~np.isfinite(arr))[0][0])
            raise BadSum(f"{name} of frame {row + 1} has a non-finite entry")
        negative = np.argwhere(arr < 0)
        if negative.size:
            row, col = (int(x) for x in negative[0])
            where = "final_ins" if name == "final_ins" else f"{name} of frame {row + 1}"
            raise NegativeEntry(f"{where}: entry {col} is {arr[row, col]!r}")
        sums = arr.sum(axis=1)
        off = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if off.size:
            row = int(off[0])
            where = "final_ins" if name == "final_ins" else f"{name} of frame {row + 1}"
            raise BadSum(f"{where} sums to {sums[row]!r} (tolerance {tol})")

    def _norm(a):
        if a.shape[0] == 0:
            return a
        sums = a.sum(axis=1, keepdims=True)
        # rows already on the simplex up to summation rounding stay bit-identical
        settled = np.abs(sums - 1.0) <= 4 * a.shape[1] * np.finfo(float).eps
        return np.where(settled, a, a / sums)

    return EmissionSequence(
        raw.alphabet,
        _norm(raw.y),
        _norm(raw.r),
        _norm(raw.ins),
        _norm(raw.final_ins[None, :])[0],
    )


# ---------- Edit operations ----------

class OpKind(str, enum.Enum):
    CONSUME = "consume"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class EditOp:
    kind: OpKind
    i: int
    j: int

    @property
    def source(self) -> tuple[int, int]:
        if self.kind is OpKind.CONSUME:
            return self.i - 1, self.j - 1
        if self.kind is OpKind.DELETE:
            return self.i, self.j - 1
        return self.i - 1, self.j

    @property
    def target(self) -> tuple[int, int]:
        return self.i, self.j

    @classmethod
    def consume(cls, i: int, j: int) -> "EditOp":
        return cls(OpKind.CONSUME, i, j)

    @classmethod
    def delete(cls, i: int, j: int) -> "EditOp":
        return cls(OpKind.DELETE, i, j)

    @classmethod
    def insert(cls, i: int, j: int) -> "EditOp":
        return cls(OpKind.INSERT, i, j)


EditPath = tuple[EditOp, ...]


def _same_alphabet(em: EmissionSequence, target: TargetString):
    if target.alphabet != em.alphabet:
        raise InvalidTarget("target and emissions use different alphabets")


def op_log_prob(em: EmissionSequence, target: TargetString, op: EditOp) -> float:
    """ln p(op) for one edit operation."""
    _same_alphabet(em, target)
    L, n = len(target), em.n
    i, j = op.i, op.j
    if op.kind is OpKind.CONSUME:
        if not (0 < i <= L and 0 < j <= n):
            raise IndexOutOfRange(f"consume({i}, {j}) outside 1..{L} x 1..{n}")
        return float(em.cons_table[j, target.indices[i - 1]])
    if op.kind is OpKind.DELETE:
        if not (0 <= i <= L and 0 < j <= n):
            raise IndexOutOfRange(f"delete({i}, {j}) outside 0..{L} x 1..{n}")
        if i > 0 and target.indices[i - 1] == em.alphabet.eos_index:
            return 0.0
        return float(em.del_row[j])
    if not (0 < i <= L and 0 <= j <= n):
        raise IndexOutOfRange(f"insert({i}, {j}) outside 1..{L} x 0..{n}")
    return float(em.ins_table[j, target.indices[i - 1]])


def path_log_prob(em: EmissionSequence, target: TargetString, path: Sequence[EditOp]) -> float:
    state = (0, 0)
    total = 0.0
    for step, op in enumerate(path):
        if op.source != state:
            raise InvalidChain(f"op {step} ({op.kind.value} {op.i},{op.j}) does not start at state {state}")
        total += op_log_prob(em, target, op)
        state = op.target
    return total


# ---------- Forward DP ----------

def _delete_scan(through: np.ndarray, steps: np.ndarray, fast: bool) -> np.ndarray:
    """
    Solve out[:, j] = logaddexp(out[:, j-1] + steps[:, j], through[:, j])
    along each row. With finite steps this is a shifted cumulative
    logaddexp; otherwise fall back to the column loop.
    """
    if fast:
        offset = np.zeros_like(through)
        np.cumsum(steps[:, 1:], axis=1, out=offset[:, 1:])
        return offset + np.logaddexp.accumulate(through - offset, axis=1)
    out = through.copy()
    for j in range(1, through.shape[1]):
        out[:, j] = np.logaddexp(out[:, j - 1] + steps[:, j], through[:, j])
    return out


def initial_row(em: EmissionSequence) -> np.ndarray:
    """ln ep("", y_{1:j}) for j = 0..n: only deletions reach row 0."""
    row = np.zeros(em.n + 1)
    np.cumsum(em.del_row[1:], out=row[1:])
    return row


def extend_rows(em: EmissionSequence, parents: np.ndarray, symbols) -> np.ndarray:
    """
    One application of the row recurrence for a batch of prefixes.

    parents: (m, n+1) log rows of the prefixes; symbols: (m,) symbol appended
    to each. Returns the (m, n+1) rows of the extended prefixes.
    """
    parents = np.atleast_2d(parents)
    symbols = np.asarray(symbols, dtype=np.intp)
    through = parents + em.ins_table[:, symbols].T
    if em.n:
        through[:, 1:] = np.logaddexp(through[:, 1:], parents[:, :-1] + em.cons_table[1:, symbols].T)
    is_eos = (symbols == em.alphabet.eos_index)[:, None]
    steps = np.where(is_eos, 0.0, em.del_row[None, :])
    return _delete_scan(through, steps, em.deletes_finite)


@dataclass(frozen=True, eq=False)
class EpMatrix:
    log_values: np.ndarray
    target: TargetString

    @property
    def target_len(self) -> int:
        return self.log_values.shape[0] - 1

    @property
    def frame_len(self) -> int:
        return self.log_values.shape[1] - 1

    @property
    def log_ep(self) -> float:
        return float(self.log_values[-1, -1])

    @property
    def ep(self) -> float:
        return float(np.exp(self.log_ep))


def ep_forward(em: EmissionSequence, target: TargetString) -> EpMatrix:
    _same_alphabet(em, target)
    rows = np.empty((len(target) + 1, em.n + 1))
    rows[0] = initial_row(em)
    for i, symbol in enumerate(target.indices, start=1):
        rows[i] = extend_rows(em, rows[i - 1], [symbol])[0]
    rows.setflags(write=False)
    return EpMatrix(rows, target)


def ep_score(em: EmissionSequence, target: TargetString) -> float:
    return ep_forward(em, target).log_ep


# ---------- Best path (max-product) ----------

def best_edit_path(em: EmissionSequence, target: TargetString) -> tuple[EditPath, float]:
    """
    Most probable single edit path to (target, all frames) and its log
    probability. Ties prefer consume, then delete, then insert.
    """
    _same_alphabet(em, target)
    L, n = len(target), em.n
    eos = em.alphabet.eos_index
    T = target.indices
    score = np.full((L + 1, n + 1), NEG_INF)
    came_from = np.empty((L + 1, n + 1), dtype=object)
    score[0, 0] = 0.0

    for i in range(L + 1):
        for j in range(n + 1):
            if i == 0 and j == 0:
                continue
            best, how = None, None
            if i > 0 and j > 0:
                v = score[i - 1, j - 1] + em.cons_table[j, T[i - 1]]
                best, how = v, OpKind.CONSUME
            if j > 0:
                step = 0.0 if (i > 0 and T[i - 1] == eos) else em.del_row[j]
                v = score[i, j - 1] + step
                if best is None or v > best:
                    best, how = v, OpKind.DELETE
            if i > 0:
                v = score[i - 1, j] + em.ins_table[j, T[i - 1]]
                if best is None or v > best:
                    best, how = v, OpKind.INSERT
            score[i, j] = best
            came_from[i, j] = how

    path = []
    i, j = L, n
    while (i, j) != (0, 0):
        op = EditOp(came_from[i, j], i, j)
        path.append(op)
        i, j = op.source
    path.reverse()
    return tuple(path), float(score[L, n])


# ---------- Frame-wise probability ----------

def fp_prefix_vector(em: EmissionSequence, target: TargetString) -> np.ndarray:
    """
    ln FP of the first j target symbols from the first j frames,
    j = 0..min(|T|, n). Positions after the EOS never enter the product.
    """
    _same_alphabet(em, target)
    m = min(len(target), em.n)
    picks = np.array([em.y[j, target.indices[j]] for j in range(m)], dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.log(picks)
    out = np.zeros(m + 1)
    np.cumsum(logs, out=out[1:])
    return out


def classify_path(path: Sequence[EditOp], target: TargetString) -> str:
    """
    'aligned' for a pure diagonal, 'missing' when only insertions leave it,
    'superfluous' when only deletions of not-yet-ended frames do, 'mixed'
    otherwise. Deletions after the EOS is produced are free and ignored.
    """
    L = len(target)
    inserts = any(op.kind is OpKind.INSERT for op in path)
    deletes = any(op.kind is OpKind.DELETE and op.i < L for op in path)
    if inserts and deletes:
        return "mixed"
    if inserts:
        return "missing"
    if deletes:
        return "superfluous"
    return "aligned"
