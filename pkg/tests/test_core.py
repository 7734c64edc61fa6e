import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ep.core import (
    Alphabet,
    EditOp,
    EmissionSequence,
    OpKind,
    TargetString,
    best_edit_path,
    classify_path,
    ep_forward,
    ep_score,
    fp_prefix_vector,
    op_log_prob,
    path_log_prob,
    validate_emissions,
)
from ep.errors import (
    BadSum,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidAlphabet,
    InvalidChain,
    InvalidTarget,
    NegativeEntry,
    UnknownSymbol,
)
from ep.oracle import best_path_enumerated, enumerate_paths
from lab.gradcheck import random_instances
from lab.models import default_alphabet
from lab.rng import SplitMix64
from lab.synth import random_emissions, random_target


# ---------- alphabet / targets ----------

def test_alphabet_appends_eos():
    a = Alphabet.from_symbols("AB")
    assert a.symbols == ("A", "B", "#")
    assert a.eos == "#"
    assert list(a.non_eos) == [0, 1]


def test_alphabet_rejects_duplicates_and_eos_only():
    with pytest.raises(InvalidAlphabet):
        Alphabet(("A", "A", "#"), 2)
    with pytest.raises(InvalidAlphabet):
        Alphabet.from_symbols("")


def test_encode_appends_eos_once():
    a = Alphabet.from_symbols("AB")
    assert a.encode("AB").text == "AB#"
    assert a.encode("AB#").text == "AB#"
    assert a.encode("").text == "#"


def test_unknown_symbol_names_the_symbol():
    a = Alphabet.from_symbols("AB")
    with pytest.raises(UnknownSymbol) as exc:
        a.encode("AxB")
    assert exc.value.symbol == "x"
    assert "'x'" in str(exc.value)


def test_target_must_end_with_single_eos():
    a = Alphabet.from_symbols("AB")
    with pytest.raises(InvalidTarget):
        TargetString((0, 1), a)
    with pytest.raises(InvalidTarget):
        TargetString((2, 0, 2), a)
    with pytest.raises(InvalidTarget):
        TargetString((), a)


# ---------- validation ----------

def test_validate_renormalizes_within_tolerance():
    a = Alphabet.from_symbols("A")
    raw = EmissionSequence(a, [[0.5, 0.5 + 1e-9]], [[0.7, 0.2, 0.1]], [[0.5, 0.5]], [0.6, 0.4])
    em = validate_emissions(raw, tolerance=1e-6)
    assert em.y[0].sum() == pytest.approx(1.0, abs=1e-15)
    assert em.y[0, 0] < 0.5


def test_validate_rejects_bad_sum():
    a = Alphabet.from_symbols("A")
    raw = EmissionSequence(a, [[0.5, 0.6]], [[0.7, 0.2, 0.1]], [[0.5, 0.5]], [0.6, 0.4])
    with pytest.raises(BadSum, match="frame 1"):
        validate_emissions(raw)


def test_validate_rejects_negative_entry():
    a = Alphabet.from_symbols("A")
    raw = EmissionSequence(a, [[1.1, -0.1]], [[0.7, 0.2, 0.1]], [[0.5, 0.5]], [0.6, 0.4])
    with pytest.raises(NegativeEntry):
        validate_emissions(raw)


def test_shape_mismatch_is_reported():
    a = Alphabet.from_symbols("A")
    with pytest.raises(DimensionMismatch):
        EmissionSequence(a, [[0.5, 0.3, 0.2]], [[0.7, 0.2, 0.1]], [[0.5, 0.5]], [0.6, 0.4])


def test_emission_arrays_are_read_only(eos_frame):
    with pytest.raises(ValueError):
        eos_frame.y[0, 0] = 1.0


# ---------- operations and paths ----------

def test_op_log_probs_of_one_frame(eos_frame):
    t = eos_frame.alphabet.encode("")
    assert op_log_prob(eos_frame, t, EditOp.consume(1, 1)) == pytest.approx(math.log(0.7 * 0.3))
    assert op_log_prob(eos_frame, t, EditOp.insert(1, 0)) == pytest.approx(math.log(0.2 * 0.5))
    assert op_log_prob(eos_frame, t, EditOp.insert(1, 1)) == pytest.approx(math.log(0.4))
    assert op_log_prob(eos_frame, t, EditOp.delete(0, 1)) == pytest.approx(math.log(0.1))
    # deleting after the EOS costs nothing
    assert op_log_prob(eos_frame, t, EditOp.delete(1, 1)) == 0.0


def test_op_out_of_range(eos_frame):
    t = eos_frame.alphabet.encode("")
    with pytest.raises(IndexOutOfRange):
        op_log_prob(eos_frame, t, EditOp.consume(1, 2))
    with pytest.raises(IndexOutOfRange):
        op_log_prob(eos_frame, t, EditOp.insert(0, 0))


def test_path_must_chain(eos_frame):
    t = eos_frame.alphabet.encode("")
    assert path_log_prob(eos_frame, t, []) == 0.0
    with pytest.raises(InvalidChain):
        path_log_prob(eos_frame, t, [EditOp.insert(1, 0), EditOp.insert(1, 1)])


def test_edit_probability_of_one_frame(eos_frame):
    t = eos_frame.alphabet.encode("")
    assert math.exp(ep_score(eos_frame, t)) == pytest.approx(0.35, rel=1e-12)
    paths = enumerate_paths(eos_frame, t)
    assert len(paths.paths) == 3
    assert paths.total == pytest.approx(0.35, rel=1e-12)


def test_no_frames_only_insertions():
    a = Alphabet.from_symbols("AB")
    em = EmissionSequence(a, np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 3)), [0.2, 0.3, 0.5])
    assert math.exp(ep_score(em, a.encode(""))) == pytest.approx(0.5)
    assert math.exp(ep_score(em, a.encode("AB"))) == pytest.approx(0.2 * 0.3 * 0.5)
    assert len(enumerate_paths(em, a.encode("")).paths) == 1


def test_row_zero_is_cumulative_deletion():
    rng = SplitMix64(3)
    em = random_emissions(rng, default_alphabet(3), 5, 0.01)
    rows = ep_forward(em, em.alphabet.encode("ab")).log_values
    expected = np.concatenate([[0.0], np.cumsum(np.log(em.r[:, 2]))])
    np.testing.assert_allclose(rows[0], expected, rtol=1e-12)


def test_zero_rows_give_zero_probability():
    a = Alphabet.from_symbols("A")
    em = EmissionSequence(a, [[1.0, 0.0]], [[1.0, 0.0, 0.0]], [[1.0, 0.0]], [1.0, 0.0])
    assert ep_score(em, a.encode("")) == -np.inf
    assert ep_score(em, a.encode("A")) == -np.inf


def test_reduces_to_frame_product_when_always_consuming():
    rng = SplitMix64(11)
    a = default_alphabet(3)
    for _ in range(200):
        n = rng.randint(1, 6)
        em = random_emissions(rng, a, n, 0.01).replace(r=np.tile([1.0, 0.0, 0.0], (n, 1)))
        t = random_target(rng, a, n)
        expected = math.prod(em.y[j, s] for j, s in enumerate(t.indices))
        assert math.exp(ep_score(em, t)) == pytest.approx(expected, rel=1e-12)


def test_fp_prefix_vector_stops_at_shorter_side():
    rng = SplitMix64(5)
    em = random_emissions(rng, default_alphabet(2), 3, 0.05)
    t = em.alphabet.encode("abab")
    fp = fp_prefix_vector(em, t)
    assert fp.shape == (4,)
    assert fp[0] == 0.0
    assert fp[2] == pytest.approx(math.log(em.y[0, 0] * em.y[1, 1]))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ep_dominates_every_single_path(seed):
    em, t = next(iter(random_instances(1, seed, max_alphabet=4, max_frames=4, max_target=4)))
    log_ep = ep_score(em, t)
    for path, prob in enumerate_paths(em, t).paths:
        assert path_log_prob(em, t, path) <= log_ep + 1e-12
        assert math.log(prob) == pytest.approx(path_log_prob(em, t, path), rel=1e-9, abs=1e-12)


def test_dp_matches_path_enumeration():
    for em, t in random_instances(1000, seed=2024, max_alphabet=4, max_frames=4, max_target=4):
        total = enumerate_paths(em, t).total
        assert math.exp(ep_score(em, t)) == pytest.approx(total, rel=1e-10)


# ---------- best path ----------

def test_best_path_inserts_missing_symbol_and_drops_trailing_frames(dove):
    t = dove.alphabet.encode("DOVE")
    path, log_prob = best_edit_path(dove, t)
    assert path == (
        EditOp.consume(1, 1),
        EditOp.insert(2, 1),
        EditOp.consume(3, 2),
        EditOp.consume(4, 3),
        EditOp.consume(5, 4),
        EditOp.delete(5, 5),
        EditOp.delete(5, 6),
    )
    assert sum(op.kind is OpKind.CONSUME for op in path) == 4
    assert log_prob == pytest.approx(path_log_prob(dove, t, path))
    assert classify_path(path, t) == "missing"


def test_best_path_matches_enumeration():
    for em, t in random_instances(200, seed=7, max_alphabet=4, max_frames=4, max_target=4):
        path, log_prob = best_edit_path(em, t)
        _, best_prob = best_path_enumerated(em, t)
        assert log_prob == pytest.approx(math.log(best_prob), rel=1e-9)


def test_ties_prefer_consume_then_delete():
    a = Alphabet.from_symbols("A")
    t = a.encode("")
    three_way = EmissionSequence(a, [[0.5, 0.5]], [[0.5, 0.25, 0.25]], [[0.0, 1.0]], [0.0, 1.0])
    path, _ = best_edit_path(three_way, t)
    assert path == (EditOp.consume(1, 1),)

    no_consume = three_way.replace(y=[[1.0, 0.0]])
    path, _ = best_edit_path(no_consume, t)
    assert path == (EditOp.insert(1, 0), EditOp.delete(1, 1))


def test_classify_path_shapes():
    a = Alphabet.from_symbols("A")
    t = a.encode("A")
    assert classify_path((EditOp.consume(1, 1), EditOp.consume(2, 2)), t) == "aligned"
    assert classify_path((EditOp.delete(0, 1), EditOp.consume(1, 2), EditOp.consume(2, 3)), t) == "superfluous"
    assert classify_path((EditOp.insert(1, 0), EditOp.consume(2, 1), EditOp.delete(2, 2)), t) == "missing"
    assert classify_path((EditOp.insert(1, 0), EditOp.delete(1, 1), EditOp.consume(2, 2)), t) == "mixed"
