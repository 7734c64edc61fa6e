import math
import string

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ep.core import EOS, Alphabet

SYMBOL_POOL = string.ascii_lowercase + string.digits + "'-"


def default_alphabet(size: int) -> Alphabet:
    """`size` non-EOS symbols from a fixed pool, then EOS."""
    if not 1 <= size <= len(SYMBOL_POOL):
        raise ValueError(f"alphabet size must be between 1 and {len(SYMBOL_POOL)}, got {size}")
    return Alphabet.from_symbols(SYMBOL_POOL[:size], EOS)


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    alphabet_size: int = Field(8, ge=1, le=len(SYMBOL_POOL))  # symbols besides EOS
    feature_dim: int | None = None  # defaults to alphabet_size + 1 (one-hot incl. EOS)
    len_min: int = Field(2, ge=1)
    len_max: int = Field(5, ge=1)
    noise_sigma: float = Field(0.3, ge=0)
    p_drop: float = Field(0.0, ge=0, le=0.5)
    p_dup: float = Field(0.0, ge=0, le=0.5)
    seed: int = 0

    @model_validator(mode="after")
    def _consistent(self):
        if self.len_max < self.len_min:
            raise ValueError(f"len_max {self.len_max} < len_min {self.len_min}")
        if self.feature_dim is not None and self.feature_dim < self.alphabet_size + 1:
            raise ValueError(f"feature_dim must be at least alphabet_size + 1 = {self.alphabet_size + 1}")
        return self

    @property
    def input_dim(self) -> int:
        return self.feature_dim if self.feature_dim is not None else self.alphabet_size + 1

    def alphabet(self) -> Alphabet:
        return default_alphabet(self.alphabet_size)


class TrainReport(BaseModel):
    loss_kind: str
    alphabet: list[str] = []
    seed: int
    epochs: int
    epoch_loss: list[float] = []
    epoch_accuracy: list[float] = []
    final_accuracy: float = Field(0.0, ge=0, le=1)
    wall_clock: float = Field(0.0, ge=0)

    @field_validator("epoch_loss")
    @classmethod
    def _finite(cls, values: list[float]) -> list[float]:
        if any(not math.isfinite(v) for v in values):
            raise ValueError("epoch losses must be finite")
        return values

    @field_validator("epoch_accuracy")
    @classmethod
    def _accuracy_range(cls, values: list[float]) -> list[float]:
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError("accuracies must lie in [0, 1]")
        return values

    def comparable(self) -> dict:
        """Everything except timing, for determinism checks."""
        return self.model_dump(exclude={"wall_clock"})
