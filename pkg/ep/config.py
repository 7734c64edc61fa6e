# ep/config.py
# Runtime knobs come from the environment (optionally a .env file).
# Function parameters that default to None fall back to these values.
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

from dotenv import load_dotenv

load_dotenv()

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class Settings:
    tolerance: float = 1e-6
    log_level: str = "INFO"
    adadelta_rho: float = 0.95
    adadelta_eps: float = 1e-6
    batch_size: int = 32
    workers: int = 1
    default_lambda: float = 0.95


def _settings_from_env() -> Settings:
    """
    Read EP_* variables. Collect every bad value before failing so one run
    reports all of them.
    """
    raw = {
        "EP_TOLERANCE": os.getenv("EP_TOLERANCE", "1e-6"),
        "EP_LOG_LEVEL": os.getenv("EP_LOG_LEVEL", "INFO"),
        "EP_ADADELTA_RHO": os.getenv("EP_ADADELTA_RHO", "0.95"),
        "EP_ADADELTA_EPS": os.getenv("EP_ADADELTA_EPS", "1e-6"),
        "EP_BATCH_SIZE": os.getenv("EP_BATCH_SIZE", "32"),
        "EP_WORKERS": os.getenv("EP_WORKERS", "1"),
        "EP_DEFAULT_LAMBDA": os.getenv("EP_DEFAULT_LAMBDA", "0.95"),
    }

    bad = []

    def _num(key, cast, ok):
        try:
            value = cast(raw[key])
        except ValueError:
            bad.append(f"{key}={raw[key]!r}")
            return None
        if not ok(value):
            bad.append(f"{key}={raw[key]!r}")
            return None
        return value

    tolerance = _num("EP_TOLERANCE", float, lambda v: 0 <= v < 1)
    rho = _num("EP_ADADELTA_RHO", float, lambda v: 0 < v < 1)
    eps = _num("EP_ADADELTA_EPS", float, lambda v: v > 0)
    batch = _num("EP_BATCH_SIZE", int, lambda v: v >= 1)
    workers = _num("EP_WORKERS", int, lambda v: v >= 1)
    lam = _num("EP_DEFAULT_LAMBDA", float, lambda v: 0.5 <= v <= 1)

    level = raw["EP_LOG_LEVEL"].strip().upper()
    if level not in LOG_LEVELS:
        bad.append(f"EP_LOG_LEVEL={raw['EP_LOG_LEVEL']!r}")

    if bad:
        raise RuntimeError(
            f"Invalid configuration value(s): {', '.join(bad)}. "
            "Fix them in the environment or in .env."
        )

    return Settings(
        tolerance=tolerance,
        log_level=level,
        adadelta_rho=rho,
        adadelta_eps=eps,
        batch_size=batch,
        workers=workers,
        default_lambda=lam,
    )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return _settings_from_env()
