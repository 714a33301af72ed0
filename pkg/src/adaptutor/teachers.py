"""Teacher loop adapters: one uniform select/observe surface per policy.

A teacher owns everything one learner-arm needs between interactions:
presentation histories, beliefs or boxes, and the planning caches.  The
simulation runner and the live service drive teachers identically:
``select`` proposes the next item, ``observe`` folds in the outcome.
All mutations for one teacher are serialized by its owning loop.
"""

from __future__ import annotations

from typing import Hashable, Protocol, Sequence

from .leitner import LeitnerConfig, LeitnerState, leitner_select, leitner_update
from .memory import ItemState, ModelKind, ParamPoint, record_presentation
from .planner import PlannerConfig, PlannerKind, Schedule, TeacherState, select_item
from .psychologist import BeliefBank, GridSpec, OmniscientBank, RecallBank

Item = Hashable


class Teacher(Protocol):
    """What the teaching loop needs from any policy."""

    @property
    def item_states(self) -> dict[Item, ItemState]: ...

    @property
    def introduced(self) -> list[Item]: ...

    def select(self, now: float, step: int) -> Item: ...

    def predicted_recall(self, item: Item, now: float) -> float | None: ...

    def observe(self, item: Item, outcome: int, now: float, step: int) -> None: ...


class ModelTeacher:
    """Planner + psychologist pairing (myopic or conservative)."""

    def __init__(self, cfg: PlannerConfig, schedule: Schedule, bank: RecallBank) -> None:
        self.cfg = cfg
        self.schedule = schedule
        self.state = TeacherState(item_states={}, bank=bank, introduced=[])

    @property
    def item_states(self) -> dict[Item, ItemState]:
        return self.state.item_states

    @property
    def introduced(self) -> list[Item]:
        return self.state.introduced

    @property
    def bank(self) -> RecallBank:
        return self.state.bank

    def select(self, now: float, step: int) -> Item:
        self.state.step = step
        self.state.clock = now
        return select_item(self.state, self.cfg, self.schedule)

    def predicted_recall(self, item: Item, now: float) -> float:
        """Teacher's recall prediction at decision time; 1.0 when the
        upcoming presentation is the first (the answer will be shown)."""
        state = self.state.item_states.get(item)
        if state is None or not state.seen:
            return 1.0
        return self.state.bank.recall(item, state, now)

    def observe(self, item: Item, outcome: int, now: float, step: int) -> None:
        state = self.state.item_states.get(item, ItemState())
        if state.seen:
            # Only informative observations update beliefs; a first
            # presentation reveals the answer and carries no memory signal.
            self.state.bank.observe(item, state, outcome, now)
        else:
            self.state.introduced.append(item)
        self.state.item_states[item] = record_presentation(state, now)
        self.state.step = step + 1
        self.state.clock = now


class LeitnerTeacher:
    """Box-system baseline; keeps presentation histories for evaluation."""

    def __init__(self, cfg: LeitnerConfig, universe: Sequence[Item], rng_seed: int) -> None:
        self.state = LeitnerState(config=cfg, item_universe=tuple(universe), rng_seed=rng_seed)
        self._item_states: dict[Item, ItemState] = {}
        self._introduced: list[Item] = []

    @property
    def item_states(self) -> dict[Item, ItemState]:
        return self._item_states

    @property
    def introduced(self) -> list[Item]:
        return self._introduced

    def select(self, now: float, step: int) -> Item:
        return leitner_select(self.state, now, step)

    def predicted_recall(self, item: Item, now: float) -> None:
        return None

    def observe(self, item: Item, outcome: int, now: float, step: int) -> None:
        state = self._item_states.get(item, ItemState())
        if not state.seen:
            self._introduced.append(item)
        self._item_states[item] = record_presentation(state, now)
        leitner_update(self.state, item, outcome, now)


TEACHER_KINDS = ("leitner", "myopic", "conservative")


def make_teacher(
    kind: str,
    universe: Sequence[Item],
    rho: float,
    schedule: Schedule,
    *,
    grid: GridSpec | None = None,
    model: ModelKind = ModelKind.ISEF,
    true_params: ParamPoint | dict[Item, ParamPoint] | None = None,
    leitner_config: LeitnerConfig | None = None,
    rng_seed: int = 0,
) -> Teacher:
    """Build a teacher of the named kind over ``universe``.

    Model-based kinds take either a grid (inferring, non-omniscient) or the
    learner's true parameters (omniscient); exactly one must be given.
    """
    if kind == "leitner":
        return LeitnerTeacher(leitner_config or LeitnerConfig(), universe, rng_seed)
    if kind not in ("myopic", "conservative"):
        raise ValueError(f"unknown teacher kind: {kind!r}")
    planner_kind = PlannerKind.MYOPIC if kind == "myopic" else PlannerKind.CONSERVATIVE
    cfg = PlannerConfig(rho=rho, item_universe=tuple(universe), kind=planner_kind)
    bank: RecallBank
    if true_params is not None:
        bank = OmniscientBank(true_params)
    elif grid is not None:
        bank = BeliefBank(model, grid)
    else:
        raise ValueError("model-based teachers need a grid or true parameters")
    return ModelTeacher(cfg, schedule, bank)
