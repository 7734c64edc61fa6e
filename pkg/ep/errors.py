# ep/errors.py
# Every failure the library reports is an EpError, so callers (the CLI in
# particular) can catch one type and map it to an exit code.


class EpError(ValueError):
    """Base class for edit-probability errors."""


# ---------- emission validation ----------
class InvalidEmissions(EpError):
    pass


class DimensionMismatch(InvalidEmissions):
    pass


class NegativeEntry(InvalidEmissions):
    pass


class BadSum(InvalidEmissions):
    pass


# ---------- targets / paths ----------
class InvalidAlphabet(EpError):
    pass


class InvalidTarget(EpError):
    pass


class UnknownSymbol(InvalidTarget):
    def __init__(self, symbol: str):
        super().__init__(f"unknown symbol {symbol!r} (not in alphabet)")
        self.symbol = symbol


class IndexOutOfRange(EpError):
    pass


class InvalidChain(EpError):
    pass


# ---------- math ----------
class ZeroProbability(EpError):
    def __init__(self, msg: str, index: int | None = None):
        if index is not None:
            msg = f"item {index}: {msg}"
        super().__init__(msg)
        self.index = index


class NonPositiveEntry(EpError):
    pass


class TooLarge(EpError):
    pass


# ---------- decoding ----------
class WordContainsEOS(EpError):
    pass


class LambdaOutOfRange(EpError):
    pass


# ---------- training ----------
class DivergedLoss(EpError):
    pass
