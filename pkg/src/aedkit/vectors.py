"""Detector output containers shared by the detect, io, and eval layers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Polarity(str, Enum):
    """Which end of a score range marks a suspicious unit."""

    HIGH = "high"
    LOW = "low"


@dataclass(frozen=True)
class FlagVector:
    method: str
    flags: dict[str, bool]  # uid -> flagged


@dataclass(frozen=True)
class ScoreVector:
    method: str
    scores: dict[str, float]  # uid -> score
    polarity: Polarity

    def suspicion(self, uid: str) -> float:
        """Score oriented so that larger always means more suspicious."""
        s = self.scores[uid]
        return s if self.polarity is Polarity.HIGH else -s
