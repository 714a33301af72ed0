"""Schedule-aware selection of the next item to present.

The teacher's objective is the number of items whose predicted recall is at
or above a threshold ``rho`` after the final teaching step.  Two policies
are implemented:

* **myopic** -- greedy on the immediate count: re-teach the most at-risk
  item whose predicted recall has dropped below ``rho``, otherwise
  introduce the next new item.
* **conservative** -- myopic, vetoed by a feasibility check: before a
  proposed item is accepted, a deterministic rollout of a myopic teacher
  restricted to the items introduced *earlier* verifies that those items
  can all still reach ``rho`` by the end of the schedule.  When they
  cannot, the candidate set shrinks to that earlier prefix and the
  selection repeats.

Rollouts freeze the current beliefs: recall dynamics depend only on
presentation counts and lags, never on outcomes, so no sampling and no
simulated belief updates are needed.  Each rollout step evaluates every
item's predicted recall in one vectorized pass over the concatenated
belief supports, and a rollout stops early once every restricted item is
guaranteed to stay above threshold through the end of teaching.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError
from .memory import ItemState
from .psychologist import RecallBank

Item = Hashable


@dataclass(frozen=True, slots=True)
class Session:
    """One teaching session: back-to-back iterations of fixed duration."""

    start: float
    iteration_count: int
    iteration_duration: float

    def __post_init__(self) -> None:
        if self.iteration_count < 1:
            raise ConfigurationError("sessions need at least one iteration")
        if self.iteration_duration <= 0:
            raise ConfigurationError("iteration duration must be positive")

    @property
    def end(self) -> float:
        return self.start + self.iteration_count * self.iteration_duration


@dataclass(frozen=True)
class Schedule:
    """Deterministic session calendar, known to the teacher in advance.

    Supplies the planning horizon (the total number of teaching steps) and
    the evaluation timestamp at which the final reward is counted.
    """

    sessions: tuple[Session, ...]
    eval_time: float
    _starts_at_step: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.sessions:
            raise ConfigurationError("a schedule needs at least one session")
        cumulative = [0]
        for prev, cur in zip(self.sessions, self.sessions[1:]):
            if cur.start < prev.end:
                raise ConfigurationError("sessions must be ascending and non-overlapping")
        for sess in self.sessions:
            cumulative.append(cumulative[-1] + sess.iteration_count)
        if self.eval_time < self.sessions[-1].end:
            raise ConfigurationError("evaluation must come after the last session")
        object.__setattr__(self, "_starts_at_step", tuple(cumulative))

    @property
    def horizon(self) -> int:
        """Total number of teaching steps (the final step index plus one)."""
        return self._starts_at_step[-1]

    @property
    def teaching_end(self) -> float:
        """The instant right after the final teaching interaction.

        This is the planner's reward horizon: the item count it maximizes
        is taken here, when teaching stops -- not at the later evaluation
        sitting (possibly a day beyond), which measures what the teaching
        was worth but is not what the objective formula counts.
        """
        return self.sessions[-1].end

    def session_of_step(self, step: int) -> int:
        if not 0 <= step < self.horizon:
            raise ValueError(f"step {step} outside horizon {self.horizon}")
        return bisect.bisect_right(self._starts_at_step, step) - 1

    def time_of_step(self, step: int) -> float:
        s = self.session_of_step(step)
        sess = self.sessions[s]
        return sess.start + (step - self._starts_at_step[s]) * sess.iteration_duration

    def steps_from(self, step: int, clock: float) -> Iterator[tuple[int, float]]:
        """Remaining (step, time) pairs, re-anchored at the caller's clock.

        Within the current session, times advance from ``clock`` by that
        session's iteration duration; later sessions start at their nominal
        start (clamped so time never runs backwards when the caller is
        behind schedule).  When ``clock`` equals the nominal step time the
        yielded times are exactly the nominal calendar.
        """
        if step >= self.horizon:
            return
        first_session = self.session_of_step(step)
        j = step
        t = clock
        for s in range(first_session, len(self.sessions)):
            sess = self.sessions[s]
            if s > first_session:
                t = max(t, sess.start)
            offset = j - self._starts_at_step[s]
            for _ in range(offset, sess.iteration_count):
                yield j, t
                j += 1
                t += sess.iteration_duration


class PlannerKind(Enum):
    MYOPIC = "myopic"
    CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class PlannerConfig:
    """Learned threshold, item universe (introduction order), and policy."""

    rho: float
    item_universe: tuple[Item, ...]
    kind: PlannerKind = PlannerKind.MYOPIC

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError(f"rho must lie in (0, 1), got {self.rho}")
        if len(self.item_universe) < 1:
            raise ConfigurationError("item universe must not be empty")
        if len(set(self.item_universe)) != len(self.item_universe):
            raise ConfigurationError("item universe contains duplicates")


@dataclass
class TeacherState:
    """One learner's teaching position: histories, beliefs, schedule cursor."""

    item_states: dict[Item, ItemState]
    bank: RecallBank
    introduced: list[Item]
    step: int = 0
    clock: float = 0.0


def reward_count(state: TeacherState, rho: float, at: float) -> int:
    """Number of introduced items with predicted recall >= rho at ``at``."""
    return sum(
        1
        for a in state.introduced
        if state.bank.recall(a, state.item_states[a], at) >= rho
    )


def myopic_select(
    state: TeacherState,
    cfg: PlannerConfig,
    candidates: Sequence[Item] | None = None,
) -> Item:
    """Greedy choice maximizing the immediate above-threshold count.

    Re-teaching an item whose predicted recall fell below ``rho`` raises
    the count by one; when nothing is below, a new item is introduced (the
    next unseen one in universe order).  With the universe exhausted and
    nothing below, the item with the lowest predicted recall is reviewed.
    ``candidates`` optionally restricts the universe (used by the
    conservative policy's retries).
    """
    universe = list(cfg.item_universe) if candidates is None else list(candidates)
    if not universe:
        raise ConfigurationError("item universe must not be empty")
    universe_set = set(universe)
    introduced_set = set(state.introduced)

    scored: list[tuple[float, int, Item]] = []
    for order, item in enumerate(state.introduced):
        if item in universe_set:
            p = state.bank.recall(item, state.item_states[item], state.clock)
            scored.append((p, order, item))

    below = [entry for entry in scored if entry[0] < cfg.rho]
    if below:
        return min(below)[2]
    for item in universe:
        if item not in introduced_set:
            return item
    if scored:
        return min(scored)[2]
    raise ConfigurationError("no selectable item in the candidate set")


def _rollout(
    state: TeacherState,
    restricted_universe: Sequence[Item],
    schedule: Schedule,
    cfg: PlannerConfig,
    stop_when_secure: bool,
) -> tuple[TeacherState, bool]:
    """Myopic rollout over ``restricted_universe`` with frozen beliefs.

    Every restricted item's belief is flattened into one concatenated
    (weight, decay-rate) mixture so that each simulated step evaluates all
    predicted recalls in a single pass.  With ``stop_when_secure`` the
    rollout aborts as soon as every restricted item is introduced and
    predicted to stay at or above ``rho`` through the reward horizon (the
    instant after the final teaching interaction): further teaching can
    only help, so full memorization is already decided.  (That state is
    unreachable while any item sits below threshold, so the check only
    runs when nothing is below.)

    Returns the simulated end state and the early-abort flag.
    """
    bank = state.bank
    restricted = list(restricted_universe)
    restricted_set = set(restricted)
    introduced_set = set(state.introduced)
    ordered: list[Item] = [a for a in state.introduced if a in restricted_set]
    n_pre_introduced = len(ordered)
    ordered += [a for a in restricted if a not in introduced_set]

    if not ordered:
        return (
            TeacherState(dict(state.item_states), bank, [], state.step, state.clock),
            False,
        )

    seg_weights: list[np.ndarray] = []
    seg_rates: list[np.ndarray] = []
    n_list: list[int] = []
    last_list: list[float] = []
    for k, item in enumerate(ordered):
        if k < n_pre_introduced:
            st = state.item_states[item]
            n = st.n_presentations
            assert st.last_presentation is not None
            last = st.last_presentation
        else:
            n, last = 1, state.clock  # placeholder until the item is introduced
        w, r = bank.recall_profile(item, n)
        seg_weights.append(w)
        seg_rates.append(r)
        n_list.append(n)
        last_list.append(last)

    weights = np.concatenate(seg_weights)
    rates = np.concatenate(seg_rates)  # fresh array; mutated as items are re-taught
    lengths = np.array([len(w) for w in seg_weights])
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    slices = [slice(int(s), int(s + n)) for s, n in zip(starts, lengths)]
    n_arr = np.array(n_list, dtype=np.int64)
    last_items = np.array(last_list, dtype=np.float64)
    count = n_pre_introduced  # items 0..count-1 are introduced, in order
    pending_left = len(ordered) - n_pre_introduced

    rho = cfg.rho
    secure = False
    end_step, end_clock = state.step, state.clock

    # Incrementally maintained state, valid at the current step time t:
    #   contrib[i]  = weights[i] * exp(-rates[i] * (t - last of i's item))
    #   p_end[k]    = item k's predicted recall at the reward horizon
    #                 (right after the final teaching interaction)
    # Advancing t by d multiplies contrib elementwise by exp(-rates * d);
    # teaching an item resets only its own segment of both structures.
    contrib: np.ndarray | None = None
    decay: np.ndarray | None = None
    decay_step: float | None = None
    horizon_time = schedule.teaching_end
    p_end = np.ones(len(ordered))
    init_lag = horizon_time - last_items[:n_pre_introduced]
    for k in range(n_pre_introduced):
        p_end[k] = float(
            np.exp(-seg_rates[k] * init_lag[k]) @ seg_weights[k]
        )
    prev_t: float | None = None

    for j, t in schedule.steps_from(state.step, state.clock):
        end_step, end_clock = j, t
        if stop_when_secure:
            if pending_left == 0 and float(p_end[:count].min(initial=np.inf)) >= rho:
                secure = True
                break
            if pending_left > schedule.horizon - j:
                break  # not even one presentation per remaining item fits
        if contrib is None:
            contrib = weights * np.exp(rates * (np.repeat(last_items, lengths) - t))
        else:
            d = t - prev_t
            if d != decay_step:
                decay_step = d
                decay = np.exp(rates * (-d))
            contrib *= decay
        prev_t = t
        p_now = np.add.reduceat(contrib, starts)[:count] if count else np.empty(0)
        below = p_now < rho
        if below.any():
            # First minimum wins, which is the earliest-introduced item.
            chosen = int(np.argmin(np.where(below, p_now, np.inf)))
            n_arr[chosen] += 1
            rates[slices[chosen]] = bank.recall_profile(ordered[chosen], int(n_arr[chosen]))[1]
        elif pending_left:
            chosen = count
            count += 1
            pending_left -= 1
        elif count:
            chosen = int(np.argmin(p_now))
            n_arr[chosen] += 1
            rates[slices[chosen]] = bank.recall_profile(ordered[chosen], int(n_arr[chosen]))[1]
        else:
            break
        sl = slices[chosen]
        last_items[chosen] = t
        contrib[sl] = weights[sl]
        if decay is not None:
            decay[sl] = np.exp(rates[sl] * (-decay_step))
        p_end[chosen] = float(np.exp(rates[sl] * (t - horizon_time)) @ weights[sl])
        end_step, end_clock = j + 1, t

    sim_states = {
        ordered[k]: ItemState(int(n_arr[k]), float(last_items[k])) for k in range(count)
    }
    end = TeacherState(
        item_states={**state.item_states, **sim_states},
        bank=bank,
        introduced=ordered[:count],
        step=end_step,
        clock=end_clock,
    )
    return end, secure


def rollout_myopic(
    state: TeacherState,
    restricted_universe: Sequence[Item],
    schedule: Schedule,
    cfg: PlannerConfig,
) -> TeacherState:
    """Simulate a myopic teacher over the remaining schedule, without
    mutating the real state.

    Only item presentation histories evolve; beliefs are frozen at their
    current values.  The returned state is scoped to the restricted
    universe: its ``introduced`` list contains exactly the restricted items
    introduced by the end of the rollout, so reward counting on it answers
    "were the restricted items all memorized?".
    """
    end, _ = _rollout(state, restricted_universe, schedule, cfg, stop_when_secure=False)
    return end


def _prefix_feasible(
    state: TeacherState,
    prefix: Sequence[Item],
    schedule: Schedule,
    cfg: PlannerConfig,
) -> bool:
    """Can a myopic teacher still bring every prefix item to threshold by
    the end of teaching?  (The reward horizon sits right after the final
    interaction; holding through any later evaluation sitting is not part
    of the planning objective.)"""
    end, secure = _rollout(state, prefix, schedule, cfg, stop_when_secure=True)
    if secure:
        return True
    return reward_count(end, cfg.rho, schedule.teaching_end) == len(prefix)


def conservative_select(
    state: TeacherState,
    cfg: PlannerConfig,
    schedule: Schedule,
) -> Item:
    """Myopic choice, vetoed when it would sacrifice earlier items.

    The myopic proposal ``a`` is accepted only if a myopic teacher
    restricted to the items introduced before ``a``'s first presentation
    (all currently introduced items, when ``a`` is new) could still bring
    them all to ``rho`` by the end of teaching; otherwise the candidate
    set shrinks to that prefix and selection repeats.  The
    earliest-introduced item is always accepted, which bounds the retries.
    """
    introduced_set = set(state.introduced)
    candidates: Sequence[Item] | None = None
    while True:
        choice = myopic_select(state, cfg, candidates)
        if state.introduced and choice == state.introduced[0]:
            return choice
        if choice in introduced_set:
            position = state.introduced.index(choice)
            prefix: list[Item] = state.introduced[:position]
        else:
            prefix = list(state.introduced)
        if not prefix:
            return choice
        if _prefix_feasible(state, prefix, schedule, cfg):
            return choice
        candidates = prefix


def select_item(
    state: TeacherState,
    cfg: PlannerConfig,
    schedule: Schedule,
) -> Item:
    """Dispatch to the configured policy."""
    if cfg.kind is PlannerKind.MYOPIC:
        return myopic_select(state, cfg)
    return conservative_select(state, cfg, schedule)
