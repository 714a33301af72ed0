"""Domain logic of the live tutor service.

Each user trains two arms -- the Leitner baseline and one model-based
teacher -- on disjoint item sets, one session per arm per day, with the
daily arm order alternating.  Questions are six-way multiple choice; the
first presentation of an item reveals its answer.  After the training days
comes an evaluation in which every seen item is quizzed exactly twice and
counts as learned only if both answers were correct.

All teacher state lives in memory and is reconstructed from the persisted
trial log by replaying selections and observations, so stopping and
restarting the service never changes the question sequence.  Every random
choice (item assignment, answer choices, evaluation order, Leitner
tie-breaks) is derived statelessly from the configured seed.
"""

from __future__ import annotations

import math
import threading
import time as _time
from collections import defaultdict
from typing import Any

from ..config import ServiceConfig
from ..planner import Schedule, Session
from ..psychologist import BeliefBank
from ..seeding import substream
from ..teachers import ModelTeacher, Teacher, make_teacher
from .storage import Store
from .vocab import VocabularyItem, load_vocabulary

ARMS = ("leitner", "model")


class EngineError(Exception):
    def __init__(self, code: str, detail: str) -> None:
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


class NotFoundError(EngineError):
    pass


class ConflictError(EngineError):
    pass


class RequestError(EngineError):
    pass


def _parse_daily_time(value: Any) -> float:
    """Seconds after local midnight; accepts a number or ``HH:MM``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        seconds = float(value)
    elif isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 2:
            raise RequestError("bad_daily_time", f"expected 'HH:MM', got {value!r}")
        try:
            seconds = int(parts[0]) * 3600.0 + int(parts[1]) * 60.0
        except ValueError:
            raise RequestError("bad_daily_time", f"expected 'HH:MM', got {value!r}") from None
    else:
        raise RequestError("bad_daily_time", f"expected seconds or 'HH:MM', got {value!r}")
    if not 0.0 <= seconds < 86_400.0:
        raise RequestError("bad_daily_time", "daily time must fall within one day")
    return seconds


class TutorEngine:
    """One instance serves every user; per-arm mutations are serialized."""

    def __init__(self, cfg: ServiceConfig, store: Store) -> None:
        self.cfg = cfg
        self.store = store
        self._runtimes: dict[tuple[str, str], Teacher] = {}
        self._arm_locks: defaultdict[tuple[str, str], threading.Lock] = defaultdict(
            threading.Lock
        )
        self._create_lock = threading.Lock()
        if store.item_count() == 0:
            store.ingest_items(load_vocabulary(cfg.vocabulary))
        self._items: dict[str, VocabularyItem] = {i.id: i for i in store.all_items()}

    # -- helpers -------------------------------------------------------------

    def _item(self, item_id: str) -> VocabularyItem:
        return self._items[item_id]

    def _now(self, now: float | None) -> float:
        return _time.time() if now is None else float(now)

    def _user(self, user_id: str):
        row = self.store.get_user(user_id)
        if row is None:
            raise NotFoundError("unknown_user", f"no user {user_id!r}")
        return row

    def _check_arm(self, arm: str) -> None:
        if arm not in ARMS:
            raise NotFoundError("unknown_arm", f"arm must be one of {ARMS}")

    def _day_index(self, user, now: float) -> int:
        return int((now - user["day_zero"]) // self.cfg.day_seconds)

    def _arm_order(self, user, day: int) -> tuple[str, str]:
        first = user["first_arm"]
        second = "model" if first == "leitner" else "leitner"
        return (first, second) if day % 2 == 0 else (second, first)

    def _session_span(self) -> float:
        return self.cfg.questions_per_session * self.cfg.iteration_seconds

    def _schedule_for(self, user, arm: str) -> Schedule:
        """The declared calendar this arm plans against."""
        sessions = []
        for day in range(self.cfg.sessions):
            position = self._arm_order(user, day).index(arm)
            start = (
                user["day_zero"]
                + day * self.cfg.day_seconds
                + user["daily_seconds"]
                + position * self._session_span()
            )
            sessions.append(
                Session(start, self.cfg.questions_per_session, self.cfg.iteration_seconds)
            )
        eval_time = (
            user["day_zero"]
            + self.cfg.sessions * self.cfg.day_seconds
            + user["daily_seconds"]
        )
        return Schedule(sessions=tuple(sessions), eval_time=eval_time)

    # -- teacher runtimes ----------------------------------------------------

    def _build_runtime(self, user, arm: str) -> Teacher:
        universe = self.store.assignment(user["id"], arm)
        kind = "leitner" if arm == "leitner" else user["model_kind"]
        teacher = make_teacher(
            kind,
            universe,
            self.cfg.rho,
            self._schedule_for(user, arm),
            grid=self.cfg.grid,
            model=self.cfg.model,
            leitner_config=self.cfg.leitner,
            rng_seed=int(substream(self.cfg.seed, "leitner-ties", user["id"]).integers(2**62)),
        )
        for row in self.store.trials(user["id"], arm):
            selected = teacher.select(row["time"], row["step"])
            if selected != row["item"]:
                raise RuntimeError(
                    f"trial log corrupt for {user['id']}/{arm}: replayed selection"
                    f" {selected!r} != recorded {row['item']!r} at seq {row['seq']}"
                )
            teacher.observe(row["item"], row["omega"], row["time"], row["step"])
        return teacher

    def runtime(self, user_id: str, arm: str) -> Teacher:
        key = (user_id, arm)
        teacher = self._runtimes.get(key)
        if teacher is None:
            teacher = self._build_runtime(self._user(user_id), arm)
            self._runtimes[key] = teacher
        return teacher

    def rebuild_runtime(self, user_id: str, arm: str) -> Teacher:
        """Fresh replay from the log, bypassing the cache (used by tests)."""
        return self._build_runtime(self._user(user_id), arm)

    # -- users ----------------------------------------------------------------

    def create_user(
        self,
        model_kind: str | None = None,
        daily_time: Any = "09:00",
        start_epoch: float | None = None,
        now: float | None = None,
    ) -> dict:
        now = self._now(now)
        kind = model_kind or self.cfg.model_teacher
        if kind not in ("myopic", "conservative"):
            raise RequestError("bad_model_kind", "model_kind must be myopic or conservative")
        daily_seconds = _parse_daily_time(daily_time)
        needed = 2 * self.cfg.items_per_arm
        all_ids = sorted(self._items)
        if len(all_ids) < needed:
            raise ConflictError(
                "vocabulary_too_small",
                f"need {needed} items for two arms, vocabulary holds {len(all_ids)}",
            )
        with self._create_lock:
            seq = self.store.user_count()
            user_id = substream(self.cfg.seed, "user-token", seq).bytes(6).hex()
            day_zero = (
                float(start_epoch)
                if start_epoch is not None
                else (now // self.cfg.day_seconds) * self.cfg.day_seconds
            )
            order = substream(self.cfg.seed, "assignment", user_id).permutation(len(all_ids))
            drawn = [all_ids[i] for i in order[:needed]]
            assignments = {
                "leitner": drawn[: self.cfg.items_per_arm],
                "model": drawn[self.cfg.items_per_arm :],
            }
            for arm, ids in assignments.items():
                answers = {self._item(i).answer for i in ids}
                if len(answers) < self.cfg.choice_count:
                    raise ConflictError(
                        "too_few_answers",
                        f"arm {arm} has only {len(answers)} distinct answers;"
                        f" {self.cfg.choice_count} are needed per question",
                    )
            first_arm = ARMS[int(substream(self.cfg.seed, "first-arm", user_id).integers(2))]
            self.store.create_user(
                user_id,
                created_at=now,
                day_zero=day_zero,
                daily_seconds=daily_seconds,
                model_kind=kind,
                first_arm=first_arm,
                seq=seq,
                assignments=assignments,
            )
        return self.user_payload(user_id)

    def user_payload(self, user_id: str) -> dict:
        user = self._user(user_id)
        return {
            "user_id": user["id"],
            "model_kind": user["model_kind"],
            "first_arm": user["first_arm"],
            "day_zero": user["day_zero"],
            "daily_seconds": user["daily_seconds"],
            "arms": list(ARMS),
            "items_per_arm": self.cfg.items_per_arm,
            "sessions": self.cfg.sessions,
            "questions_per_session": self.cfg.questions_per_session,
            "evaluation_day": self.cfg.sessions,
        }

    def schedule_payload(self, user_id: str) -> dict:
        user = self._user(user_id)
        days = []
        for day in range(self.cfg.sessions):
            order = self._arm_order(user, day)
            start = user["day_zero"] + day * self.cfg.day_seconds + user["daily_seconds"]
            days.append(
                {
                    "day": day,
                    "arm_order": list(order),
                    "start_times": {
                        arm: start + position * self._session_span()
                        for position, arm in enumerate(order)
                    },
                }
            )
        return {
            "user_id": user["id"],
            "days": days,
            "evaluation": {
                "day": self.cfg.sessions,
                "start_time": user["day_zero"]
                + self.cfg.sessions * self.cfg.day_seconds
                + user["daily_seconds"],
            },
        }

    # -- questions -------------------------------------------------------------

    def _make_choices(self, user_id: str, arm: str, tag: Any, item_id: str) -> list[str]:
        correct = self._item(item_id).answer
        pool = sorted(
            {self._item(i).answer for i in self.store.assignment(user_id, arm)} - {correct}
        )
        rng = substream(self.cfg.seed, "choices", user_id, arm, str(tag))
        picks = rng.choice(len(pool), size=self.cfg.choice_count - 1, replace=False)
        choices = [pool[int(k)] for k in picks] + [correct]
        return [choices[int(k)] for k in rng.permutation(self.cfg.choice_count)]

    def _question_view(self, user_id: str, arm: str, payload: dict) -> dict:
        view = {
            "user_id": user_id,
            "arm": arm,
            "item_id": payload["item"],
            "prompt": self._item(payload["item"]).prompt,
            "choices": payload["choices"],
            "is_first_presentation": bool(payload["first"]),
            "session": payload["session"],
            "progress": {
                "answered": payload["step"] % self.cfg.questions_per_session,
                "quota": self.cfg.questions_per_session,
            },
        }
        if payload["first"]:
            # First presentations reveal the answer before the choices unlock.
            view["answer"] = self._item(payload["item"]).answer
        return view

    def next_question(self, user_id: str, arm: str, now: float | None = None) -> dict:
        self._check_arm(arm)
        user = self._user(user_id)
        now = self._now(now)
        with self._arm_locks[(user_id, arm)]:
            pending = self.store.get_pending(user_id, arm)
            if pending is not None:
                kind, payload = pending
                if kind == "training":
                    return self._question_view(user_id, arm, payload)
                raise ConflictError(
                    "evaluation_pending", "an evaluation question is awaiting its answer"
                )
            day = self._day_index(user, now)
            if day < 0 or day >= self.cfg.sessions:
                if day == self.cfg.sessions:
                    raise ConflictError(
                        "evaluation_day", "training is over; use the evaluation endpoints"
                    )
                raise ConflictError("outside_session", "no session is open at this time")
            order = self._arm_order(user, day)
            if arm == order[1]:
                done_first = self.store.session_trial_count(user_id, order[0], day)
                if done_first < self.cfg.questions_per_session:
                    raise ConflictError(
                        "arm_order",
                        f"day {day} starts with the {order[0]} arm"
                        f" ({done_first}/{self.cfg.questions_per_session} answered)",
                    )
            answered_today = self.store.session_trial_count(user_id, arm, day)
            if answered_today >= self.cfg.questions_per_session:
                raise ConflictError("session_complete", f"day {day} session is complete")
            last_time = self.store.last_trial_time(user_id, arm)
            if last_time is not None and now < last_time:
                raise ConflictError(
                    "time_went_backwards", f"now={now} precedes last trial at {last_time}"
                )
            step = day * self.cfg.questions_per_session + answered_today
            teacher = self.runtime(user_id, arm)
            item = teacher.select(now, step)
            state = teacher.item_states.get(item)
            first = state is None or not state.seen
            payload = {
                "seq": self.store.trial_count(user_id, arm),
                "step": step,
                "session": day,
                "time": now,
                "item": item,
                "choices": self._make_choices(user_id, arm, self.store.trial_count(user_id, arm), item),
                "predicted": teacher.predicted_recall(item, now),
                "first": first,
            }
            self.store.set_pending(user_id, arm, "training", payload)
            return self._question_view(user_id, arm, payload)

    def submit_answer(
        self, user_id: str, arm: str, item_id: str, chosen: str, now: float | None = None
    ) -> dict:
        self._check_arm(arm)
        self._user(user_id)
        now = self._now(now)
        with self._arm_locks[(user_id, arm)]:
            pending = self.store.get_pending(user_id, arm)
            if pending is None or pending[0] != "training":
                raise ConflictError(
                    "no_pending_question", "no training question is awaiting an answer"
                )
            payload = pending[1]
            if payload["item"] != item_id:
                raise ConflictError(
                    "stale_item",
                    f"pending question is {payload['item']!r}, not {item_id!r}",
                )
            if chosen not in payload["choices"]:
                raise RequestError("bad_choice", "chosen answer is not among the choices")
            correct_answer = self._item(item_id).answer
            omega = int(chosen == correct_answer)
            # Materialize the runtime from the log *before* appending, so a
            # lazy replay never folds this trial in twice.
            teacher = self.runtime(user_id, arm)
            self.store.append_trial(
                user_id,
                arm,
                {
                    **payload,
                    "chosen": chosen,
                    "omega": omega,
                    "answered": now,
                },
            )
            try:
                selected = teacher.select(payload["time"], payload["step"])
                if selected != item_id:
                    raise RuntimeError(
                        f"selection drift: {selected!r} != pending {item_id!r}"
                    )
                teacher.observe(item_id, omega, payload["time"], payload["step"])
            except Exception:
                # Drop the cached runtime: the log is authoritative and a
                # fresh replay restores a consistent teacher.
                self._runtimes.pop((user_id, arm), None)
                raise
            return {
                "correct": bool(omega),
                "omega": omega,
                "correct_answer": correct_answer,
                "answered_in_session": payload["step"] % self.cfg.questions_per_session + 1,
                "quota": self.cfg.questions_per_session,
            }

    # -- evaluation --------------------------------------------------------------

    def _seen_items(self, user_id: str, arm: str) -> list[str]:
        seen: list[str] = []
        seen_set: set[str] = set()
        for row in self.store.trials(user_id, arm):
            if row["item"] not in seen_set:
                seen_set.add(row["item"])
                seen.append(row["item"])
        return seen

    def _eval_sequence(self, user_id: str, arm: str) -> list[str]:
        """Every seen item exactly twice, in a seeded shuffled order."""
        doubled = self._seen_items(user_id, arm) * 2
        rng = substream(self.cfg.seed, "eval-order", user_id, arm)
        return [doubled[int(k)] for k in rng.permutation(len(doubled))]

    def _require_eval_window(self, user, now: float) -> None:
        if self._day_index(user, now) < self.cfg.sessions:
            raise ConflictError(
                "evaluation_not_open", "the evaluation session opens after the last training day"
            )

    def evaluation_next(self, user_id: str, arm: str, now: float | None = None) -> dict:
        self._check_arm(arm)
        user = self._user(user_id)
        now = self._now(now)
        with self._arm_locks[(user_id, arm)]:
            self._require_eval_window(user, now)
            pending = self.store.get_pending(user_id, arm)
            if pending is not None:
                kind, payload = pending
                if kind == "eval":
                    return self._eval_view(user_id, arm, payload)
                raise ConflictError(
                    "training_pending", "a training question is awaiting its answer"
                )
            sequence = self._eval_sequence(user_id, arm)
            done = self.store.eval_trial_count(user_id, arm)
            if done >= len(sequence):
                raise ConflictError("evaluation_complete", "every item was quizzed twice")
            item = sequence[done]
            payload = {
                "seq": done,
                "time": now,
                "item": item,
                "choices": self._make_choices(user_id, arm, f"eval-{done}", item),
            }
            self.store.set_pending(user_id, arm, "eval", payload)
            return self._eval_view(user_id, arm, payload)

    def _eval_view(self, user_id: str, arm: str, payload: dict) -> dict:
        sequence_length = 2 * len(self._seen_items(user_id, arm))
        return {
            "user_id": user_id,
            "arm": arm,
            "item_id": payload["item"],
            "prompt": self._item(payload["item"]).prompt,
            "choices": payload["choices"],
            "progress": {"answered": payload["seq"], "total": sequence_length},
        }

    def evaluation_answer(
        self, user_id: str, arm: str, item_id: str, chosen: str, now: float | None = None
    ) -> dict:
        self._check_arm(arm)
        self._user(user_id)
        now = self._now(now)
        with self._arm_locks[(user_id, arm)]:
            pending = self.store.get_pending(user_id, arm)
            if pending is None or pending[0] != "eval":
                raise ConflictError(
                    "no_pending_question", "no evaluation question is awaiting an answer"
                )
            payload = pending[1]
            if payload["item"] != item_id:
                raise ConflictError(
                    "stale_item", f"pending question is {payload['item']!r}, not {item_id!r}"
                )
            if chosen not in payload["choices"]:
                raise RequestError("bad_choice", "chosen answer is not among the choices")
            omega = int(chosen == self._item(item_id).answer)
            self.store.append_eval_trial(
                user_id, arm, {**payload, "chosen": chosen, "omega": omega}
            )
            total = 2 * len(self._seen_items(user_id, arm))
            answered = self.store.eval_trial_count(user_id, arm)
            if answered >= total:
                self._finalize_evaluation(user_id, arm)
            # Evaluation answers are never revealed and never update beliefs.
            return {"recorded": True, "progress": {"answered": answered, "total": total}}

    def _finalize_evaluation(self, user_id: str, arm: str) -> None:
        results: dict[str, list[int]] = {}
        for row in self.store.eval_trials(user_id, arm):
            results.setdefault(row["item"], []).append(int(row["omega"]))
        verdicts = {item: len(o) == 2 and all(o) for item, o in results.items()}
        n_seen = len(self._seen_items(user_id, arm))
        n_learned = sum(verdicts.values())
        self.store.put_eval_summary(user_id, arm, n_learned, n_seen, verdicts)

    def evaluation_summary(self, user_id: str, arm: str) -> dict:
        self._check_arm(arm)
        self._user(user_id)
        with self._arm_locks[(user_id, arm)]:
            total = 2 * len(self._seen_items(user_id, arm))
            answered = self.store.eval_trial_count(user_id, arm)
            if answered >= total and self.store.get_eval_summary(user_id, arm) is None:
                self._finalize_evaluation(user_id, arm)
            summary = self.store.get_eval_summary(user_id, arm)
            if summary is None:
                return {
                    "complete": False,
                    "progress": {"answered": answered, "total": total},
                }
            ratio = (
                summary["n_learned"] / summary["n_seen"] if summary["n_seen"] else None
            )
            return {
                "complete": True,
                "n_learned": summary["n_learned"],
                "n_seen": summary["n_seen"],
                "ratio": ratio,
                "verdicts": summary["verdicts"],
            }

    # -- reporting -----------------------------------------------------------------

    def belief_snapshot(self, user_id: str, item_id: str) -> dict:
        """Posterior table for one item of the model arm: rows of
        (alpha, beta, weight), the format the analysis tooling consumes."""
        self._user(user_id)
        if item_id not in self._items:
            raise NotFoundError("unknown_item", f"no item {item_id!r}")
        from ..psychologist import belief_table

        with self._arm_locks[(user_id, "model")]:
            teacher = self.runtime(user_id, "model")
            if not isinstance(teacher, ModelTeacher) or not isinstance(teacher.bank, BeliefBank):
                raise ConflictError("no_beliefs", "this arm does not maintain beliefs")
            rows = belief_table(teacher.bank.belief_for(item_id))
            own = item_id in teacher.bank.per_item_beliefs
        return {
            "user_id": user_id,
            "item_id": item_id,
            "columns": ["alpha", "beta", "weight"],
            "rows": rows,
            "own_belief": own,
        }

    def stats(self, user_id: str) -> dict:
        user = self._user(user_id)
        arms: dict[str, dict] = {}
        for arm in ARMS:
            with self._arm_locks[(user_id, arm)]:
                seen = self._seen_items(user_id, arm)
                summary = self.store.get_eval_summary(user_id, arm)
                arms[arm] = {
                    "teacher": "leitner" if arm == "leitner" else user["model_kind"],
                    "trials": self.store.trial_count(user_id, arm),
                    "n_seen": len(seen),
                    "evaluation": summary,
                }
        estimates: dict[str, Any] = {"items": [], "user_mean": None}
        with self._arm_locks[(user_id, "model")]:
            teacher = self.runtime(user_id, "model")
            per_item = (
                teacher.bank.estimates()
                if isinstance(teacher, ModelTeacher) and isinstance(teacher.bank, BeliefBank)
                else {}
            )
        rows = [
            {"item_id": item, "alpha": theta.alpha, "beta": theta.beta}
            for item, theta in sorted(per_item.items())
        ]
        estimates["items"] = rows
        if rows:
            log_alpha = sum(math.log(r["alpha"]) for r in rows) / len(rows)
            estimates["user_mean"] = {
                "alpha": math.exp(log_alpha),
                "beta": sum(r["beta"] for r in rows) / len(rows),
            }
        return {"user_id": user_id, "arms": arms, "parameter_estimates": estimates}
