import json

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from ep.core import EmissionSequence, best_edit_path, ep_forward, validate_emissions
from ep.errors import BadSum, DimensionMismatch, WordContainsEOS
from ep.formats import (
    load_lexicon,
    matrix_frame,
    parse_matrix_dump,
    read_emissions,
    read_lexicon_words,
    read_matrix_dump,
    write_emissions,
    write_lexicon,
    write_matrix_dump,
)
from lab.models import default_alphabet
from lab.rng import SplitMix64
from lab.synth import random_emissions


def test_emission_file_round_trip_is_exact(tmp_path):
    em = validate_emissions(random_emissions(SplitMix64(10), default_alphabet(4), 5, 0.01))
    path = tmp_path / "em.json"
    write_emissions(em, path)
    back = read_emissions(path)
    assert back.alphabet == em.alphabet
    for a, b in ((back.y, em.y), (back.r, em.r), (back.ins, em.ins), (back.final_ins, em.final_ins)):
        np.testing.assert_array_equal(a, b)

    again = tmp_path / "again.json"
    write_emissions(back, again)
    assert again.read_text() == path.read_text()
    np.testing.assert_array_equal(read_emissions(again).y, em.y)


def test_validation_keeps_settled_vectors_and_rescales_the_rest():
    a = default_alphabet(2)
    em = EmissionSequence(a, [[0.1, 0.2, 0.7]], [[0.7, 0.2, 0.1]], [[0.2, 0.2, 0.6000001]], [0.3, 0.3, 0.4])
    out = validate_emissions(em)
    np.testing.assert_array_equal(out.y, em.y)
    np.testing.assert_array_equal(out.r, em.r)
    assert out.ins[0].sum() == pytest.approx(1.0, abs=1e-15)
    assert out.ins[0, 2] < 0.6000001


def test_frames_view_rebuilds_the_sequence():
    em = random_emissions(SplitMix64(11), default_alphabet(3), 4, 0.01)
    frames = em.frames
    assert len(frames) == 4
    np.testing.assert_array_equal(frames[2].y, em.y[2])
    back = EmissionSequence.from_frames(em.alphabet, frames, em.final_ins)
    for a, b in ((back.y, em.y), (back.r, em.r), (back.ins, em.ins)):
        np.testing.assert_array_equal(a, b)
    assert EmissionSequence.from_frames(em.alphabet, [], em.final_ins).n == 0


def test_emission_file_without_frames(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps({"alphabet": ["a", "#"], "frames": [], "final_ins": [0.25, 0.75]}))
    em = read_emissions(path)
    assert em.n == 0
    assert em.alphabet.eos == "#"


def test_emission_file_frame_length_mismatch(tmp_path):
    path = tmp_path / "bad.json"
    frame = {"y": [0.5, 0.5], "r": [0.8, 0.1, 0.1], "ins": [1.0]}
    path.write_text(json.dumps({"alphabet": ["a", "#"], "frames": [frame], "final_ins": [0.5, 0.5]}))
    with pytest.raises(DimensionMismatch, match="frame 1: ins"):
        read_emissions(path)


def test_emission_file_bad_sum(tmp_path):
    path = tmp_path / "bad.json"
    frame = {"y": [0.5, 0.6], "r": [0.8, 0.1, 0.1], "ins": [0.5, 0.5]}
    path.write_text(json.dumps({"alphabet": ["a", "#"], "frames": [frame], "final_ins": [0.5, 0.5]}))
    with pytest.raises(BadSum):
        read_emissions(path)


def test_emission_file_schema_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"alphabet": ["ab", "#"], "final_ins": [0.5, 0.5]}))
    with pytest.raises(ValidationError):
        read_emissions(path)
    path.write_text(json.dumps({"alphabet": ["a", "b"], "final_ins": [0.5, 0.5]}))
    with pytest.raises(ValidationError, match="eos"):
        read_emissions(path)


def test_lexicon_file_skips_blanks_and_comments(tmp_path):
    path = tmp_path / "words.txt"
    path.write_text("% header\nab\n\n  ba  \n%ab\nzz\n", encoding="utf-8")
    assert read_lexicon_words(path) == ["ab", "ba", "zz"]
    lex = load_lexicon(path, default_alphabet(2))
    assert lex.texts() == ["ab", "ba"]


def test_lexicon_file_with_eos(tmp_path):
    path = tmp_path / "words.txt"
    write_lexicon(["ab", "a#"], path)
    with pytest.raises(WordContainsEOS):
        load_lexicon(path, default_alphabet(2))


def test_matrix_dump_round_trip(tmp_path, dove):
    t = dove.alphabet.encode("DOVE")
    matrix = ep_forward(dove, t)
    path, _ = best_edit_path(dove, t)
    out = tmp_path / "m.csv"
    write_matrix_dump(matrix, path, out)

    grid, ops = read_matrix_dump(out)
    assert list(grid.columns) == list(range(dove.n + 1))
    np.testing.assert_allclose(grid.to_numpy(), matrix.log_values, rtol=1e-14)
    assert tuple(ops) == path
    assert out.read_text().splitlines()[0].split(",")[0] == "i"

    uploaded_grid, uploaded_ops = parse_matrix_dump(out.read_bytes().decode("utf-8"))
    pd.testing.assert_frame_equal(uploaded_grid, grid)
    assert uploaded_ops == ops


def test_matrix_dump_keeps_zero_probability(tmp_path):
    a = default_alphabet(1)
    em = EmissionSequence(a, [[1.0, 0.0]], [[1.0, 0.0, 0.0]], [[1.0, 0.0]], [1.0, 0.0])
    t = a.encode("")
    out = tmp_path / "zero.csv"
    write_matrix_dump(ep_forward(em, t), best_edit_path(em, t)[0], out)
    grid, _ = read_matrix_dump(out)
    assert grid.loc[1, 1] == -np.inf
    assert matrix_frame(ep_forward(em, t)).index.name == "i"
