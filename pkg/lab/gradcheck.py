# lab/gradcheck.py
# Central finite differences against the analytic gradients, both for the
# raw emission entries and for the toy model's weights.
from __future__ import annotations

import logging
from typing import Iterable

import numpy as np

from ep.core import EmissionSequence, TargetString, ep_score
from ep.grad import EmissionGradients, ep_backward

from .models import default_alphabet
from .network import ToyModel
from .rng import SplitMix64
from .synth import Sample, random_emissions, random_target
from .train import sample_gradients

logger = logging.getLogger(__name__)

REL_TOL = 1e-5
ABS_FLOOR = 1e-8
FIELDS = ("y", "r", "ins", "final_ins")


def gradient_error(analytic, numeric, rel_tol: float = REL_TOL, abs_floor: float = ABS_FLOOR) -> float:
    """
    Largest |a - f| / max(|f|, abs_floor / rel_tol). A value <= rel_tol means
    every entry is within rel_tol relative or abs_floor absolute.
    """
    a = np.asarray(analytic, dtype=float).ravel()
    f = np.asarray(numeric, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.abs(f), abs_floor / rel_tol)
    return float(np.max(np.abs(a - f) / scale))


def finite_difference_emissions(em: EmissionSequence, target: TargetString, step: float = 1e-6) -> EmissionGradients:
    """d(-ln EP)/d(entry) by central differences, one entry at a time, no renormalization."""
    out = {}
    for name in FIELDS:
        base = np.array(getattr(em, name))
        grad = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            plus = base.copy()
            plus[idx] += step
            minus = base.copy()
            minus[idx] -= step
            f_plus = -ep_score(em.replace(**{name: plus}), target)
            f_minus = -ep_score(em.replace(**{name: minus}), target)
            grad[idx] = (f_plus - f_minus) / (2 * step)
        out[name] = grad
    return EmissionGradients(out["y"], out["r"], out["ins"], out["final_ins"])


def emission_gradient_error(em: EmissionSequence, target: TargetString, step: float = 1e-6) -> float:
    _, analytic = ep_backward(em, target)
    numeric = finite_difference_emissions(em, target, step)
    return max(gradient_error(a, f) for a, f in zip(analytic.arrays(), numeric.arrays()))


def random_instances(
    count: int,
    seed: int,
    max_alphabet: int = 5,
    max_frames: int = 6,
    max_target: int = 5,
    floor: float = 0.02,
) -> Iterable[tuple[EmissionSequence, TargetString]]:
    rng = SplitMix64(seed)
    for _ in range(count):
        alphabet = default_alphabet(rng.randint(1, max_alphabet - 1))
        n = rng.randint(0, max_frames)
        yield random_emissions(rng, alphabet, n, floor), random_target(rng, alphabet, max_target)


def check_emission_gradients(count: int, seed: int, step: float = 1e-6) -> float:
    """Max gradient_error over `count` random strictly positive instances."""
    worst = 0.0
    for k, (em, target) in enumerate(random_instances(count, seed)):
        err = emission_gradient_error(em, target, step)
        logger.debug("instance %d: n=%d |T|=%d err=%.3g", k, em.n, len(target), err)
        worst = max(worst, err)
    logger.info("gradient check: %d instance(s), max relative error %.3g", count, worst)
    return worst


def finite_difference_model(
    model: ToyModel,
    sample: Sample,
    coords: Iterable[tuple[str, tuple[int, ...]]],
    loss_kind: str = "ep",
    step: float = 1e-6,
) -> list[float]:
    """Central differences of the sample loss w.r.t. chosen weight coordinates."""
    out = []
    for name, idx in coords:
        plus, minus = model.copy(), model.copy()
        plus.params[name][idx] += step
        minus.params[name][idx] -= step
        f_plus, _ = sample_gradients(plus, sample, loss_kind)
        f_minus, _ = sample_gradients(minus, sample, loss_kind)
        out.append((f_plus - f_minus) / (2 * step))
    return out


def random_coords(model: ToyModel, per_param: int, seed: int) -> list[tuple[str, tuple[int, ...]]]:
    rng = SplitMix64(seed)
    coords = []
    for name in sorted(model.params):
        shape = model.params[name].shape
        for _ in range(per_param):
            coords.append((name, tuple(rng.randint(0, d - 1) for d in shape)))
    return coords


def model_gradient_error(model: ToyModel, sample: Sample, coords, loss_kind: str = "ep", step: float = 1e-6) -> float:
    _, analytic = sample_gradients(model, sample, loss_kind)
    picked = [analytic[name][idx] for name, idx in coords]
    numeric = finite_difference_model(model, sample, coords, loss_kind, step)
    return gradient_error(picked, numeric, rel_tol=1e-4, abs_floor=1e-8)
