from pydantic import BaseModel, field_validator, model_validator

from .core import EOS


class FrameRecord(BaseModel):
    y: list[float]
    r: list[float]  # [C, I, D]
    ins: list[float]


class EmissionFile(BaseModel):
    alphabet: list[str]
    eos: str = EOS
    frames: list[FrameRecord] = []
    final_ins: list[float]

    @field_validator("alphabet")
    @classmethod
    def _single_characters(cls, symbols: list[str]) -> list[str]:
        bad = [s for s in symbols if len(s) != 1]
        if bad:
            raise ValueError(f"alphabet entries must be single characters, got {bad}")
        return symbols

    @model_validator(mode="after")
    def _eos_in_alphabet(self):
        if self.eos not in self.alphabet:
            raise ValueError(f"eos {self.eos!r} is not in the alphabet")
        return self
