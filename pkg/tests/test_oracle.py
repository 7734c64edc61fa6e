import math

import numpy as np
import pytest

from ep.core import Alphabet, EditOp, EmissionSequence, path_log_prob
from ep.errors import NonPositiveEntry, TooLarge
from ep.oracle import (
    argmax_mismatches,
    best_eos_free,
    enumerate_paths,
    enumerate_strings,
    total_mass,
)
from lab.models import default_alphabet
from lab.rng import SplitMix64
from lab.synth import random_emissions

from .builders import terminating_emissions


def test_three_paths_for_one_frame(eos_frame):
    found = enumerate_paths(eos_frame, eos_frame.alphabet.encode(""))
    ops = {path for path, _ in found.paths}
    assert ops == {
        (EditOp.insert(1, 0), EditOp.delete(1, 1)),
        (EditOp.delete(0, 1), EditOp.insert(1, 1)),
        (EditOp.consume(1, 1),),
    }
    for path, prob in found.paths:
        assert math.log(prob) == pytest.approx(path_log_prob(eos_frame, eos_frame.alphabet.encode(""), path))


def test_path_count_is_delannoy_number():
    em = random_emissions(SplitMix64(1), default_alphabet(2), 3, 0.05)
    # D(3, 3) = 63 lattice paths
    assert len(enumerate_paths(em, em.alphabet.encode("ab")).paths) == 63


def test_enumeration_refuses_large_instances():
    em = random_emissions(SplitMix64(1), default_alphabet(2), 7, 0.05)
    with pytest.raises(TooLarge):
        enumerate_paths(em, em.alphabet.encode(""))
    with pytest.raises(TooLarge):
        enumerate_strings(em, 3)


def test_total_mass_is_one_and_truncated_sums_approach_it():
    rng = SplitMix64(314)
    for _ in range(100):
        alphabet = default_alphabet(rng.randint(1, 2))
        n = rng.randint(0, 3)
        em = terminating_emissions(rng, alphabet, n)
        mass = total_mass(em)
        assert mass == pytest.approx(1.0, abs=1e-9)
        truncated = sum(p for _, p in enumerate_strings(em, n + 6))
        assert 0.99 * mass <= truncated <= mass + 1e-9


def test_truncated_sums_grow_with_length():
    em = terminating_emissions(SplitMix64(8), default_alphabet(2), 3)
    sums = [sum(p for _, p in enumerate_strings(em, k)) for k in range(1, 8)]
    assert all(b >= a for a, b in zip(sums, sums[1:]))


def test_total_mass_strict_mode():
    a = Alphabet.from_symbols("A")
    em = EmissionSequence(a, [[1.0, 0.0]], [[0.5, 0.0, 0.5]], [[0.5, 0.5]], [0.0, 1.0])
    with pytest.raises(NonPositiveEntry):
        total_mass(em)
    # no insertions and no EOS consumption: every string ends by a final insertion
    assert total_mass(em, strict=False) == pytest.approx(1.0)


def test_total_mass_with_no_way_to_end():
    a = Alphabet.from_symbols("A")
    em = EmissionSequence(a, np.zeros((0, 2)), np.zeros((0, 3)), np.zeros((0, 2)), [1.0, 0.0])
    assert total_mass(em, strict=False) == 0.0


def test_best_eos_free_ignores_insertions():
    rng = SplitMix64(21)
    em = random_emissions(rng, default_alphabet(3), 3, 0.02)
    with_inserts = best_eos_free(em, max_inserts=2)
    without = best_eos_free(em, max_inserts=0)
    assert with_inserts == without


def test_argmax_mismatch_is_reported_not_raised(caplog):
    em = random_emissions(SplitMix64(4), default_alphabet(2), 2, 0.05)
    candidates = enumerate_strings(em, 4)
    best, _ = max(candidates, key=lambda c: c[1])
    assert argmax_mismatches(em, best, 4) is False
    worst, _ = min(candidates, key=lambda c: c[1])
    with caplog.at_level("INFO", logger="ep.oracle"):
        assert argmax_mismatches(em, worst, 4) is True
    assert "differs from prediction" in caplog.text
