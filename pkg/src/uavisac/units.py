"""Decibel helpers shared across modules. Powers are kept in mW internally."""

import math


def to_db(value: float) -> float:
    """Linear power ratio (or mW) to dB (or dBm). Zero maps to -inf."""
    if value <= 0.0:
        return -math.inf
    return 10.0 * math.log10(value)


def from_db(db: float) -> float:
    """dB (or dBm) to linear power ratio (or mW)."""
    return 10.0 ** (db / 10.0)
