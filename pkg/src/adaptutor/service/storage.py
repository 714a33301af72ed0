"""Embedded transactional persistence for the tutor service.

A single SQLite database holds the vocabulary, user accounts, per-arm item
assignments, the append-only trial log, evaluation progress, and the
currently pending question per (user, arm).  Every teacher's in-memory
state is derivable from these tables plus the configured seeds, which is
what makes kill-and-restart replay exact.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path
from typing import Any, Iterator

from .vocab import VocabularyItem

_SCHEMA = """
CREATE TABLE IF NOT EXISTS items (
    id      TEXT PRIMARY KEY,
    prompt  TEXT NOT NULL,
    answer  TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS users (
    id            TEXT PRIMARY KEY,
    created_at    REAL NOT NULL,
    day_zero      REAL NOT NULL,
    daily_seconds REAL NOT NULL,
    model_kind    TEXT NOT NULL,
    first_arm     TEXT NOT NULL,
    seq           INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS assignments (
    user     TEXT NOT NULL,
    arm      TEXT NOT NULL,
    position INTEGER NOT NULL,
    item     TEXT NOT NULL,
    PRIMARY KEY (user, arm, position)
);
CREATE TABLE IF NOT EXISTS trials (
    user      TEXT NOT NULL,
    arm       TEXT NOT NULL,
    seq       INTEGER NOT NULL,
    step      INTEGER NOT NULL,
    session   INTEGER NOT NULL,
    time      REAL NOT NULL,
    item      TEXT NOT NULL,
    choices   TEXT NOT NULL,
    chosen    TEXT NOT NULL,
    omega     INTEGER NOT NULL,
    predicted REAL,
    first     INTEGER NOT NULL,
    answered  REAL NOT NULL,
    PRIMARY KEY (user, arm, seq)
);
CREATE TABLE IF NOT EXISTS pending (
    user    TEXT NOT NULL,
    arm     TEXT NOT NULL,
    kind    TEXT NOT NULL,
    payload TEXT NOT NULL,
    PRIMARY KEY (user, arm)
);
CREATE TABLE IF NOT EXISTS eval_trials (
    user    TEXT NOT NULL,
    arm     TEXT NOT NULL,
    seq     INTEGER NOT NULL,
    time    REAL NOT NULL,
    item    TEXT NOT NULL,
    choices TEXT NOT NULL,
    chosen  TEXT NOT NULL,
    omega   INTEGER NOT NULL,
    PRIMARY KEY (user, arm, seq)
);
CREATE TABLE IF NOT EXISTS eval_summaries (
    user      TEXT NOT NULL,
    arm       TEXT NOT NULL,
    n_learned INTEGER NOT NULL,
    n_seen    INTEGER NOT NULL,
    verdicts  TEXT NOT NULL,
    PRIMARY KEY (user, arm)
);
CREATE TABLE IF NOT EXISTS meta (
    key   TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""


class Store:
    """Thread-safe wrapper over one SQLite file."""

    def __init__(self, path: Path | str) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._db = sqlite3.connect(self.path, check_same_thread=False)
        self._db.row_factory = sqlite3.Row
        with self._lock, self._db:
            self._db.execute("PRAGMA journal_mode=WAL")
            self._db.execute("PRAGMA foreign_keys=ON")
            self._db.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._db.close()

    # -- vocabulary ---------------------------------------------------------

    def ingest_items(self, items: list[VocabularyItem]) -> int:
        """Insert all items or none; duplicate ids reject the batch."""
        with self._lock, self._db:
            existing = {row["id"] for row in self._db.execute("SELECT id FROM items")}
            clashes = [item.id for item in items if item.id in existing]
            if clashes:
                raise ValueError(f"duplicate item ids: {clashes[:5]}")
            self._db.executemany(
                "INSERT INTO items (id, prompt, answer) VALUES (?, ?, ?)",
                [(i.id, i.prompt, i.answer) for i in items],
            )
        return len(items)

    def item_count(self) -> int:
        with self._lock:
            (count,) = self._db.execute("SELECT COUNT(*) FROM items").fetchone()
        return int(count)

    def all_items(self) -> list[VocabularyItem]:
        with self._lock:
            rows = self._db.execute("SELECT id, prompt, answer FROM items ORDER BY id").fetchall()
        return [VocabularyItem(r["id"], r["prompt"], r["answer"]) for r in rows]

    # -- users --------------------------------------------------------------

    def user_count(self) -> int:
        with self._lock:
            (count,) = self._db.execute("SELECT COUNT(*) FROM users").fetchone()
        return int(count)

    def create_user(
        self,
        user_id: str,
        created_at: float,
        day_zero: float,
        daily_seconds: float,
        model_kind: str,
        first_arm: str,
        seq: int,
        assignments: dict[str, list[str]],
    ) -> None:
        with self._lock, self._db:
            self._db.execute(
                "INSERT INTO users (id, created_at, day_zero, daily_seconds, model_kind,"
                " first_arm, seq) VALUES (?, ?, ?, ?, ?, ?, ?)",
                (user_id, created_at, day_zero, daily_seconds, model_kind, first_arm, seq),
            )
            for arm, item_ids in assignments.items():
                self._db.executemany(
                    "INSERT INTO assignments (user, arm, position, item) VALUES (?, ?, ?, ?)",
                    [(user_id, arm, pos, item) for pos, item in enumerate(item_ids)],
                )

    def get_user(self, user_id: str) -> sqlite3.Row | None:
        with self._lock:
            return self._db.execute("SELECT * FROM users WHERE id = ?", (user_id,)).fetchone()

    def assignment(self, user_id: str, arm: str) -> list[str]:
        with self._lock:
            rows = self._db.execute(
                "SELECT item FROM assignments WHERE user = ? AND arm = ? ORDER BY position",
                (user_id, arm),
            ).fetchall()
        return [r["item"] for r in rows]

    # -- training trials ----------------------------------------------------

    def trial_count(self, user_id: str, arm: str) -> int:
        with self._lock:
            (count,) = self._db.execute(
                "SELECT COUNT(*) FROM trials WHERE user = ? AND arm = ?", (user_id, arm)
            ).fetchone()
        return int(count)

    def trials(self, user_id: str, arm: str) -> Iterator[sqlite3.Row]:
        with self._lock:
            rows = self._db.execute(
                "SELECT * FROM trials WHERE user = ? AND arm = ? ORDER BY seq",
                (user_id, arm),
            ).fetchall()
        return iter(rows)

    def session_trial_count(self, user_id: str, arm: str, session: int) -> int:
        with self._lock:
            (count,) = self._db.execute(
                "SELECT COUNT(*) FROM trials WHERE user = ? AND arm = ? AND session = ?",
                (user_id, arm, session),
            ).fetchone()
        return int(count)

    def last_trial_time(self, user_id: str, arm: str) -> float | None:
        with self._lock:
            row = self._db.execute(
                "SELECT MAX(time) AS t FROM trials WHERE user = ? AND arm = ?",
                (user_id, arm),
            ).fetchone()
        return None if row["t"] is None else float(row["t"])

    def append_trial(self, user_id: str, arm: str, row: dict[str, Any]) -> None:
        """Persist one answered trial and clear the pending question."""
        with self._lock, self._db:
            self._db.execute(
                "INSERT INTO trials (user, arm, seq, step, session, time, item, choices,"
                " chosen, omega, predicted, first, answered)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    user_id,
                    arm,
                    row["seq"],
                    row["step"],
                    row["session"],
                    row["time"],
                    row["item"],
                    json.dumps(row["choices"]),
                    row["chosen"],
                    row["omega"],
                    row["predicted"],
                    int(row["first"]),
                    row["answered"],
                ),
            )
            self._db.execute(
                "DELETE FROM pending WHERE user = ? AND arm = ?", (user_id, arm)
            )

    # -- pending question ---------------------------------------------------

    def get_pending(self, user_id: str, arm: str) -> tuple[str, dict] | None:
        with self._lock:
            row = self._db.execute(
                "SELECT kind, payload FROM pending WHERE user = ? AND arm = ?",
                (user_id, arm),
            ).fetchone()
        if row is None:
            return None
        return row["kind"], json.loads(row["payload"])

    def set_pending(self, user_id: str, arm: str, kind: str, payload: dict) -> None:
        with self._lock, self._db:
            self._db.execute(
                "INSERT OR REPLACE INTO pending (user, arm, kind, payload) VALUES (?, ?, ?, ?)",
                (user_id, arm, kind, json.dumps(payload)),
            )

    # -- evaluation ---------------------------------------------------------

    def eval_trial_count(self, user_id: str, arm: str) -> int:
        with self._lock:
            (count,) = self._db.execute(
                "SELECT COUNT(*) FROM eval_trials WHERE user = ? AND arm = ?",
                (user_id, arm),
            ).fetchone()
        return int(count)

    def eval_trials(self, user_id: str, arm: str) -> list[sqlite3.Row]:
        with self._lock:
            return self._db.execute(
                "SELECT * FROM eval_trials WHERE user = ? AND arm = ? ORDER BY seq",
                (user_id, arm),
            ).fetchall()

    def append_eval_trial(self, user_id: str, arm: str, row: dict[str, Any]) -> None:
        with self._lock, self._db:
            self._db.execute(
                "INSERT INTO eval_trials (user, arm, seq, time, item, choices, chosen, omega)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    user_id,
                    arm,
                    row["seq"],
                    row["time"],
                    row["item"],
                    json.dumps(row["choices"]),
                    row["chosen"],
                    row["omega"],
                ),
            )
            self._db.execute(
                "DELETE FROM pending WHERE user = ? AND arm = ?", (user_id, arm)
            )

    def put_eval_summary(
        self, user_id: str, arm: str, n_learned: int, n_seen: int, verdicts: dict[str, bool]
    ) -> None:
        with self._lock, self._db:
            self._db.execute(
                "INSERT OR REPLACE INTO eval_summaries (user, arm, n_learned, n_seen, verdicts)"
                " VALUES (?, ?, ?, ?, ?)",
                (user_id, arm, n_learned, n_seen, json.dumps(verdicts)),
            )

    def get_eval_summary(self, user_id: str, arm: str) -> dict | None:
        with self._lock:
            row = self._db.execute(
                "SELECT * FROM eval_summaries WHERE user = ? AND arm = ?",
                (user_id, arm),
            ).fetchone()
        if row is None:
            return None
        return {
            "n_learned": int(row["n_learned"]),
            "n_seen": int(row["n_seen"]),
            "verdicts": json.loads(row["verdicts"]),
        }
