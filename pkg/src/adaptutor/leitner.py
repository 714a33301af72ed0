"""Rule-based baseline teacher: Leitner boxes with geometric review delays.

Every item lives in a box ``k``; a review is due ``delta_a * delta_b**k``
seconds after the item was last shown.  Success promotes an item one box
(doubling its delay for ``delta_b = 2``), failure demotes it one box, never
below zero.  When several items are due at once, the one that has waited
the most teaching iterations wins, then the one in the lowest box, then a
seeded coin flip.  New items enter only when nothing is due.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable

from .errors import ConfigurationError
from .seeding import substream

Item = Hashable


@dataclass(frozen=True, slots=True)
class LeitnerConfig:
    """Review-delay scale (seconds) and geometric spacing factor."""

    delta_a: float = 4.0
    delta_b: float = 2.0

    def __post_init__(self) -> None:
        if self.delta_a <= 0:
            raise ConfigurationError("delta_a must be positive")
        if self.delta_b <= 1:
            raise ConfigurationError("delta_b must exceed 1")

    def delay(self, box: int) -> float:
        return self.delta_a * self.delta_b**box


@dataclass
class LeitnerState:
    """Boxes, due times, waiting queue, and the new-item cursor."""

    config: LeitnerConfig
    item_universe: tuple[Item, ...]
    rng_seed: int = 0
    box: dict[Item, int] = field(default_factory=dict)
    due: dict[Item, float] = field(default_factory=dict)
    waiting_since: dict[Item, int] = field(default_factory=dict)
    next_new_index: int = 0

    def __post_init__(self) -> None:
        if not self.item_universe:
            raise ConfigurationError("item universe must not be empty")


def leitner_select(state: LeitnerState, now: float, step: int) -> Item:
    """Choose the item to present at iteration ``step`` (time ``now``).

    Among due items: longest wait (in iterations since first missed), then
    smallest box, then seeded uniform choice.  Nothing due: the next new
    item, or -- universe exhausted -- the item with the earliest upcoming
    due time so a session never stalls.  Items left due but unchosen join
    the waiting queue at this iteration.
    """
    universe_index = {item: i for i, item in enumerate(state.item_universe)}
    due_items = [item for item in state.item_universe if state.due.get(item, now + 1) <= now]

    if due_items:
        ranked = [
            (-(step - state.waiting_since.get(item, step)), state.box[item], item)
            for item in due_items
        ]
        best = min(rank[:2] for rank in ranked)
        tied = [item for wait, box, item in ranked if (wait, box) == best]
        if len(tied) == 1:
            chosen = tied[0]
        else:
            tied.sort(key=universe_index.__getitem__)
            rng = substream(state.rng_seed, "leitner-tie", step)
            chosen = tied[int(rng.integers(len(tied)))]
        for item in due_items:
            if item != chosen and item not in state.waiting_since:
                state.waiting_since[item] = step
        return chosen

    if state.next_new_index < len(state.item_universe):
        return state.item_universe[state.next_new_index]

    if not state.due:
        raise ConfigurationError("no boxed items and universe exhausted")
    return min(state.due, key=lambda a: (state.due[a], state.box[a], universe_index[a]))


def leitner_update(state: LeitnerState, item: Item, outcome: int, now: float) -> LeitnerState:
    """Advance boxes after ``item`` was presented with result ``outcome``.

    A first presentation lands in box 1 regardless of the outcome (the
    answer was revealed, so the outcome carries no signal); afterwards
    success promotes and failure demotes.  The next due time uses the new
    box.  Mutates and returns ``state``.
    """
    if item not in state.box:
        new_box = 1
        state.next_new_index += 1
    elif outcome:
        new_box = state.box[item] + 1
    else:
        new_box = max(0, state.box[item] - 1)
    state.box[item] = new_box
    state.due[item] = now + state.config.delay(new_box)
    state.waiting_since.pop(item, None)
    return state
