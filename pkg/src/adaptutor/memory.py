"""Exponential-forgetting recall model and per-item presentation bookkeeping.

Recall of an item decays exponentially with the time elapsed since its last
presentation; each additional presentation damps the decay rate by a constant
factor.  Two parameters govern a memory curve:

* ``alpha`` -- initial forgetting rate, in 1/second.
* ``beta``  -- repetition effect in (0, 1): every extra presentation
  multiplies the effective decay rate by ``1 - beta``.

For an item presented ``n`` times, last at time ``t_last``, the probability
of recall at time ``t`` is::

    p = exp(-alpha * (1 - beta) ** (n - 1) * (t - t_last))

The same law serves two model flavours: a single (alpha, beta) per learner,
or an independent pair per (learner, item).  Both are pure functions over
the immutable values below, so they are safe to evaluate concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import TimeReversalError, UnseenItemError


class ModelKind(Enum):
    """Parameter granularity: one curve per learner, or one per item."""

    EF = "ef"
    ISEF = "isef"


@dataclass(frozen=True, slots=True)
class ParamPoint:
    """A single point of the memory-curve parameter space.

    ``alpha >= 0`` (zero means no forgetting, admitted for degenerate
    cases), ``0 < beta < 1``.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha >= 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie strictly in (0, 1), got {self.beta}")

    def decay_rate(self, n_presentations: int) -> float:
        """Effective decay rate after ``n_presentations`` presentations."""
        return self.alpha * (1.0 - self.beta) ** (n_presentations - 1)


@dataclass(frozen=True, slots=True)
class ItemState:
    """Presentation-history summary for one item.

    ``last_presentation`` is an absolute timestamp in seconds and is present
    exactly when the item has been presented at least once.
    """

    n_presentations: int = 0
    last_presentation: float | None = None

    def __post_init__(self) -> None:
        if self.n_presentations < 0:
            raise ValueError("n_presentations must be >= 0")
        if (self.n_presentations >= 1) != (self.last_presentation is not None):
            raise ValueError(
                "last_presentation must be present iff the item was presented"
            )

    @property
    def seen(self) -> bool:
        return self.n_presentations >= 1


def recall_probability(state: ItemState, theta: ParamPoint, now: float) -> float:
    """Probability that an item is recalled at time ``now``.

    Raises :class:`UnseenItemError` for a never-presented item: recall is
    undefined there, and callers must treat introduction of a new item as a
    separate branch.
    """
    if not state.seen:
        raise UnseenItemError("recall is undefined for a never-presented item")
    assert state.last_presentation is not None
    if now < state.last_presentation:
        raise TimeReversalError(
            f"now={now} precedes last presentation at {state.last_presentation}"
        )
    dt = now - state.last_presentation
    return math.exp(-theta.decay_rate(state.n_presentations) * dt)


def record_presentation(state: ItemState, now: float) -> ItemState:
    """Return the state after presenting the item at time ``now``."""
    if state.last_presentation is not None and now < state.last_presentation:
        raise TimeReversalError(
            f"time went backwards: {now} < {state.last_presentation}"
        )
    return ItemState(state.n_presentations + 1, now)
