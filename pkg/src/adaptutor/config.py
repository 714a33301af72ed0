"""Structured JSON configuration for the CLI and the service.

A config file is a JSON object; any leaf can be overridden through the
environment with ``ADAPTUTOR_``-prefixed variables, nesting expressed by
double underscores (``ADAPTUTOR_GRID__ALPHA_POINTS=50``).  Override values
are parsed as JSON when possible and taken as strings otherwise.
Validation errors name the offending field.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigurationError
from .leitner import LeitnerConfig
from .memory import ModelKind
from .psychologist import GridSpec
from .simulator import DAY_SECONDS, ExperimentConfig, build_daily_schedule
from .teachers import TEACHER_KINDS

ENV_PREFIX = "ADAPTUTOR_"


def _apply_env_overrides(data: dict, environ: Mapping[str, str]) -> dict:
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        try:
            value: Any = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigurationError(f"override {key} descends into a non-object")
        node[path[-1]] = value
    return data


def load_config_file(path: Path | str, environ: Mapping[str, str] | None = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    return _apply_env_overrides(data, os.environ if environ is None else environ)


class _Reader:
    """Typed field access with error messages that name the field."""

    def __init__(self, data: Mapping[str, Any], context: str = "") -> None:
        self.data = data
        self.context = context

    def _name(self, key: str) -> str:
        return f"{self.context}{key}"

    def get(self, key: str, kind: type, default: Any) -> Any:
        value = self.data.get(key, default)
        if value is None:
            return None
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            raise ConfigurationError(f"{self._name(key)}: expected {kind.__name__}, got {value!r}")
        return value

    def pair(self, key: str, default: tuple[float, float]) -> tuple[float, float]:
        value = self.data.get(key, list(default))
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        ):
            raise ConfigurationError(f"{self._name(key)}: expected [low, high]")
        return float(value[0]), float(value[1])

    def sub(self, key: str) -> "_Reader":
        value = self.data.get(key, {})
        if not isinstance(value, dict):
            raise ConfigurationError(f"{self._name(key)}: expected an object")
        return _Reader(value, context=f"{self._name(key)}.")

    def unknown_keys(self, known: set[str]) -> set[str]:
        return set(self.data) - known


def _grid_from(reader: _Reader) -> GridSpec:
    try:
        return GridSpec(
            alpha_points=reader.get("alpha_points", int, 100),
            alpha_bounds=reader.pair("alpha_bounds", (2e-7, 2.5e-2)),
            beta_points=reader.get("beta_points", int, 100),
            beta_bounds=reader.pair("beta_bounds", (0.0001, 0.9999)),
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"{reader.context[:-1]}: {exc}") from exc


def _leitner_from(reader: _Reader) -> LeitnerConfig:
    return LeitnerConfig(
        delta_a=reader.get("delta_a", float, 4.0),
        delta_b=reader.get("delta_b", float, 2.0),
    )


def _model_from(raw: str) -> ModelKind:
    try:
        return ModelKind(raw)
    except ValueError:
        raise ConfigurationError(f"model: expected one of 'ef', 'isef', got {raw!r}") from None


def experiment_config_from(data: Mapping[str, Any]) -> ExperimentConfig:
    reader = _Reader(data)
    teachers = data.get("teachers", list(TEACHER_KINDS))
    if not isinstance(teachers, list) or not all(isinstance(t, str) for t in teachers):
        raise ConfigurationError("teachers: expected a list of teacher names")
    schedule = build_daily_schedule(
        n_sessions=reader.get("sessions", int, 6),
        iterations_per_session=reader.get("iterations_per_session", int, 100),
        iteration_seconds=reader.get("iteration_seconds", float, 4.0),
        day_seconds=reader.get("day_seconds", float, DAY_SECONDS),
        eval_day=reader.get("eval_day", int, None),
    )
    return ExperimentConfig(
        population_size=reader.get("population_size", int, 100),
        item_count=reader.get("item_count", int, 500),
        schedule=schedule,
        teachers=tuple(teachers),
        omniscient=reader.get("omniscient", bool, False),
        model=_model_from(reader.get("model", str, "isef")),
        rho=reader.get("rho", float, 0.9),
        grid=_grid_from(reader.sub("grid")),
        alpha_range=reader.pair("alpha_range", (2e-7, 2.5e-2)),
        beta_range=reader.pair("beta_range", (0.0001, 0.9999)),
        leitner=_leitner_from(reader.sub("leitner")),
        seed=reader.get("seed", int, 0),
        require_leitner_learnable=reader.get("require_leitner_learnable", bool, True),
        keep_trials=reader.get("keep_trials", bool, False),
    )


@dataclass(frozen=True)
class ServiceConfig:
    """Everything the live tutor service needs to run."""

    host: str = "127.0.0.1"
    port: int = 8715
    data_dir: Path = Path("tutor-data")
    vocabulary: Path | None = None  # None: the bundled sample vocabulary
    items_per_arm: int = 30
    model_teacher: str = "conservative"
    model: ModelKind = ModelKind.ISEF
    sessions: int = 6
    questions_per_session: int = 100
    iteration_seconds: float = 4.0
    day_seconds: float = DAY_SECONDS
    rho: float = 0.9
    choice_count: int = 6
    grid: GridSpec = field(default_factory=lambda: GridSpec(100, (2e-7, 2.5e-2), 100, (0.0001, 0.9999)))
    leitner: LeitnerConfig = field(default_factory=LeitnerConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.model_teacher not in ("myopic", "conservative"):
            raise ConfigurationError(
                f"model_teacher: expected 'myopic' or 'conservative', got {self.model_teacher!r}"
            )
        if self.items_per_arm < 1 or self.sessions < 1 or self.questions_per_session < 1:
            raise ConfigurationError("items_per_arm, sessions, questions_per_session must be >= 1")
        if self.choice_count < 2:
            raise ConfigurationError("choice_count must be >= 2")
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError("rho must lie in (0, 1)")


def service_config_from(data: Mapping[str, Any]) -> ServiceConfig:
    reader = _Reader(data)
    vocabulary = reader.get("vocabulary", str, None)
    return ServiceConfig(
        host=reader.get("host", str, "127.0.0.1"),
        port=reader.get("port", int, 8715),
        data_dir=Path(reader.get("data_dir", str, "tutor-data")),
        vocabulary=Path(vocabulary) if vocabulary else None,
        items_per_arm=reader.get("items_per_arm", int, 30),
        model_teacher=reader.get("model_teacher", str, "conservative"),
        model=_model_from(reader.get("model", str, "isef")),
        sessions=reader.get("sessions", int, 6),
        questions_per_session=reader.get("questions_per_session", int, 100),
        iteration_seconds=reader.get("iteration_seconds", float, 4.0),
        day_seconds=reader.get("day_seconds", float, DAY_SECONDS),
        rho=reader.get("rho", float, 0.9),
        choice_count=reader.get("choice_count", int, 6),
        grid=_grid_from(reader.sub("grid")),
        leitner=_leitner_from(reader.sub("leitner")),
        seed=reader.get("seed", int, 0),
    )
