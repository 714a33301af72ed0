"""The trial record: one teaching interaction, as persisted and analyzed."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable


@dataclass(frozen=True, slots=True)
class TrialRecord:
    """One presentation: when, what, how it went, and what was predicted.

    ``predicted_recall`` is the teacher's probability at decision time
    (pinned to 1.0 on first presentations, where the answer is revealed;
    None for teachers that make no predictions).  ``true_recall`` is only
    available in simulation, where the learner's parameters are known.
    The service fills the identification and multiple-choice fields.
    """

    step: int
    session_index: int
    time: float
    item: Hashable
    outcome: int
    predicted_recall: float | None
    is_first_presentation: bool
    true_recall: float | None = None
    user: str | None = None
    arm: str | None = None
    choices: tuple[str, ...] | None = None
    chosen: str | None = None
