# lab/network.py
# Frame-local softmax heads: each frame's features map affinely to the
# scores of y, r and ins; final_ins is a free score vector.
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ep.core import Alphabet, EmissionSequence
from ep.errors import DimensionMismatch
from ep.grad import EmissionGradients

from .rng import SplitMix64

PARAM_NAMES = ("W_y", "b_y", "W_r", "b_r", "W_ins", "b_ins", "final")


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - np.max(scores, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


@dataclass(eq=False)
class ToyModel:
    alphabet: Alphabet
    feature_dim: int
    params: dict[str, np.ndarray]

    @classmethod
    def zeros(cls, alphabet: Alphabet, feature_dim: int) -> "ToyModel":
        K = alphabet.size
        shapes = {
            "W_y": (feature_dim, K),
            "b_y": (K,),
            "W_r": (feature_dim, 3),
            "b_r": (3,),
            "W_ins": (feature_dim, K),
            "b_ins": (K,),
            "final": (K,),
        }
        return cls(alphabet, feature_dim, {name: np.zeros(shape) for name, shape in shapes.items()})

    @classmethod
    def initialized(cls, alphabet: Alphabet, feature_dim: int, seed: int, scale: float = 0.01) -> "ToyModel":
        model = cls.zeros(alphabet, feature_dim)
        rng = SplitMix64(seed)
        for name in PARAM_NAMES:
            if name.startswith("W_"):
                p = model.params[name]
                model.params[name] = scale * rng.normals(p.size).reshape(p.shape)
        return model

    def copy(self) -> "ToyModel":
        return ToyModel(self.alphabet, self.feature_dim, {k: v.copy() for k, v in self.params.items()})

    def save(self, path: str | Path) -> None:
        np.savez(
            path,
            symbols=np.array(self.alphabet.symbols),
            eos_index=np.array(self.alphabet.eos_index),
            feature_dim=np.array(self.feature_dim),
            **self.params,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ToyModel":
        with np.load(path, allow_pickle=False) as data:
            alphabet = Alphabet(tuple(str(s) for s in data["symbols"]), int(data["eos_index"]))
            params = {name: np.array(data[name], dtype=float) for name in PARAM_NAMES}
            return cls(alphabet, int(data["feature_dim"]), params)


def forward_model(model: ToyModel, features: np.ndarray) -> EmissionSequence:
    x = np.asarray(features, dtype=float)
    if x.size == 0:
        x = np.zeros((0, model.feature_dim))
    if x.ndim != 2 or x.shape[1] != model.feature_dim:
        raise DimensionMismatch(f"features have shape {x.shape}, model expects (frames, {model.feature_dim})")
    p = model.params
    return EmissionSequence(
        model.alphabet,
        softmax(x @ p["W_y"] + p["b_y"]),
        softmax(x @ p["W_r"] + p["b_r"]),
        softmax(x @ p["W_ins"] + p["b_ins"]),
        softmax(p["final"]),
    )


def backward_model(model: ToyModel, features: np.ndarray, logit_grads: EmissionGradients) -> dict[str, np.ndarray]:
    """Chain score gradients (from chain_softmax) into the affine weights."""
    x = np.asarray(features, dtype=float).reshape(-1, model.feature_dim)
    return {
        "W_y": x.T @ logit_grads.dy,
        "b_y": logit_grads.dy.sum(axis=0),
        "W_r": x.T @ logit_grads.dr,
        "b_r": logit_grads.dr.sum(axis=0),
        "W_ins": x.T @ logit_grads.dins,
        "b_ins": logit_grads.dins.sum(axis=0),
        "final": np.array(logit_grads.dfinal_ins),
    }
