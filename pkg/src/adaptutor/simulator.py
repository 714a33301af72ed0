"""Artificial-learner experiments: populations, teaching runs, and metrics.

Learners respond according to the same exponential-forgetting law the
teacher reasons about, with true parameters drawn per learner (or per
learner-item).  The same population, with the same response streams, is
taught by each teacher under comparison, over a week-long schedule of
daily sessions with day-long breaks, and evaluated at the end: an item
counts as learned when its *true* recall probability at evaluation time
reaches the learned threshold.

Every random draw is derived from the experiment seed and its context
(learner index, item, presentation count, timestamp), so identical
configurations reproduce bit-identical results regardless of execution
order, and learners are matched across teacher arms for paired
comparisons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Mapping

from .errors import ConfigurationError
from .leitner import LeitnerConfig
from .memory import ItemState, ModelKind, ParamPoint, recall_probability
from .planner import Schedule, Session
from .psychologist import GridSpec
from .records import TrialRecord
from .seeding import substream, substream_uniform
from .teachers import TEACHER_KINDS, Teacher, make_teacher

Item = Hashable

DAY_SECONDS = 86_400.0


def build_daily_schedule(
    n_sessions: int,
    iterations_per_session: int,
    iteration_seconds: float = 4.0,
    day_seconds: float = DAY_SECONDS,
    eval_day: int | None = None,
) -> Schedule:
    """Sessions at the same time each day; evaluation on ``eval_day``
    (default: the day after the last session)."""
    sessions = tuple(
        Session(day * day_seconds, iterations_per_session, iteration_seconds)
        for day in range(n_sessions)
    )
    if eval_day is None:
        eval_day = n_sessions
    return Schedule(sessions=sessions, eval_time=eval_day * day_seconds)


@dataclass(frozen=True)
class LearnerSpec:
    """Ground truth for one artificial learner."""

    model: ModelKind
    params: ParamPoint | dict[Item, ParamPoint]
    rng_seed: int

    def theta_for(self, item: Item) -> ParamPoint:
        if isinstance(self.params, ParamPoint):
            return self.params
        return self.params[item]


@dataclass(frozen=True)
class ExperimentConfig:
    population_size: int
    item_count: int
    schedule: Schedule
    teachers: tuple[str, ...] = TEACHER_KINDS
    omniscient: bool = False
    model: ModelKind = ModelKind.ISEF
    rho: float = 0.9
    grid: GridSpec = GridSpec(100, (2e-7, 2.5e-2), 100, (0.0001, 0.9999))
    alpha_range: tuple[float, float] = (2e-7, 2.5e-2)
    beta_range: tuple[float, float] = (0.0001, 0.9999)
    leitner: LeitnerConfig = LeitnerConfig()
    seed: int = 0
    # Population inclusion filter: resample learners that would not learn
    # at least one item under the Leitner baseline.
    require_leitner_learnable: bool = True
    max_resample_attempts: int = 100
    keep_trials: bool = True

    def __post_init__(self) -> None:
        if self.population_size < 1 or self.item_count < 1:
            raise ConfigurationError("population and item counts must be >= 1")
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError("rho must lie in (0, 1)")
        for kind in self.teachers:
            if kind not in TEACHER_KINDS:
                raise ConfigurationError(f"unknown teacher kind {kind!r}")
        if not self.teachers:
            raise ConfigurationError("at least one teacher kind is required")


@dataclass
class RunMetrics:
    """Outcome of teaching one learner with one teacher."""

    learner: int
    teacher: str
    n_learned: int
    n_seen: int
    ratio: float | None
    per_session_error: dict[int, float] | None
    trials: list[TrialRecord] = field(default_factory=list)


def simulate_learner_response(
    spec: LearnerSpec, item: Item, state: ItemState, now: float
) -> int:
    """Bernoulli recall draw at the learner's true parameters.

    The draw is derived from (seed, item, presentation count, time), so a
    replayed interaction reproduces the same answer.  First presentations
    are answer reveals and never reach this function.
    """
    p = recall_probability(state, spec.theta_for(item), now)
    if p >= 1.0:
        return 1
    u = substream_uniform(spec.rng_seed, "response", str(item), state.n_presentations, now)
    return 1 if u < p else 0


def _draw_point(rng, alpha_range: tuple[float, float], beta_range: tuple[float, float]) -> ParamPoint:
    log_lo, log_hi = math.log(alpha_range[0]), math.log(alpha_range[1])
    alpha = math.exp(rng.uniform(log_lo, log_hi))
    beta = rng.uniform(beta_range[0], beta_range[1])
    return ParamPoint(alpha, beta)


def _draw_spec(cfg: ExperimentConfig, learner: int, attempt: int) -> LearnerSpec:
    rng = substream(cfg.seed, "learner-params", learner, attempt)
    rng_seed = int(substream(cfg.seed, "learner-responses", learner, attempt).integers(2**62))
    if cfg.model is ModelKind.EF:
        params: ParamPoint | dict[Item, ParamPoint] = _draw_point(
            rng, cfg.alpha_range, cfg.beta_range
        )
    else:
        params = {
            item: _draw_point(rng, cfg.alpha_range, cfg.beta_range)
            for item in range(cfg.item_count)
        }
    return LearnerSpec(model=cfg.model, params=params, rng_seed=rng_seed)


def _count_learned(
    spec: LearnerSpec, item_states: Mapping[Item, ItemState], introduced: Iterable[Item],
    rho: float, at: float,
) -> int:
    return sum(
        1
        for item in introduced
        if recall_probability(item_states[item], spec.theta_for(item), at) >= rho
    )


def _leitner_learns_anything(spec: LearnerSpec, cfg: ExperimentConfig) -> bool:
    metrics = run_learner_arm(spec, -1, "leitner", cfg, keep_trials=False)
    return metrics.n_learned >= 1


def sample_learner_specs(cfg: ExperimentConfig) -> list[LearnerSpec]:
    """Population draw with the baseline-learnability inclusion filter."""
    specs: list[LearnerSpec] = []
    for learner in range(cfg.population_size):
        for attempt in range(cfg.max_resample_attempts):
            spec = _draw_spec(cfg, learner, attempt)
            if not cfg.require_leitner_learnable or _leitner_learns_anything(spec, cfg):
                specs.append(spec)
                break
        else:
            raise RuntimeError(
                f"learner {learner}: no includable parameter draw in "
                f"{cfg.max_resample_attempts} attempts"
            )
    return specs


def _build_teacher(kind: str, spec: LearnerSpec, cfg: ExperimentConfig, learner: int) -> Teacher:
    universe = tuple(range(cfg.item_count))
    leitner_seed = int(substream(cfg.seed, "leitner-ties", learner).integers(2**62))
    return make_teacher(
        kind,
        universe,
        cfg.rho,
        cfg.schedule,
        grid=None if cfg.omniscient else cfg.grid,
        model=cfg.model,
        true_params=spec.params if cfg.omniscient and kind != "leitner" else None,
        leitner_config=cfg.leitner,
        rng_seed=leitner_seed,
    )


def run_learner_arm(
    spec: LearnerSpec,
    learner: int,
    kind: str,
    cfg: ExperimentConfig,
    keep_trials: bool | None = None,
) -> RunMetrics:
    """Teach one learner with one teacher across the whole schedule."""
    if keep_trials is None:
        keep_trials = cfg.keep_trials
    teacher = _build_teacher(kind, spec, cfg, learner)
    schedule = cfg.schedule
    records: list[TrialRecord] = []
    model_based = kind != "leitner"

    for step in range(schedule.horizon):
        now = schedule.time_of_step(step)
        item = teacher.select(now, step)
        state = teacher.item_states.get(item, ItemState())
        first = not state.seen
        predicted = teacher.predicted_recall(item, now)
        if first:
            true_p = 1.0
            outcome = 1
        else:
            true_p = recall_probability(state, spec.theta_for(item), now)
            outcome = simulate_learner_response(spec, item, state, now)
        teacher.observe(item, outcome, now, step)
        if keep_trials or model_based:
            records.append(
                TrialRecord(
                    step=step,
                    session_index=schedule.session_of_step(step),
                    time=now,
                    item=item,
                    outcome=outcome,
                    predicted_recall=predicted,
                    is_first_presentation=first,
                    true_recall=true_p,
                )
            )

    n_seen = len(teacher.introduced)
    n_learned = _count_learned(
        spec, teacher.item_states, teacher.introduced, cfg.rho, schedule.eval_time
    )
    error_series = prediction_error_series(records) if model_based else None
    return RunMetrics(
        learner=learner,
        teacher=kind,
        n_learned=n_learned,
        n_seen=n_seen,
        ratio=(n_learned / n_seen) if n_seen else None,
        per_session_error=error_series,
        trials=records if keep_trials else [],
    )


def _run_all_arms(args: tuple[LearnerSpec, int, ExperimentConfig]) -> list[RunMetrics]:
    spec, learner, cfg = args
    return [run_learner_arm(spec, learner, kind, cfg) for kind in cfg.teachers]


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> dict[str, list[RunMetrics]]:
    """Teach the same population with every configured teacher.

    Results are keyed by teacher kind and ordered by learner index.  With
    ``workers > 1`` learners are simulated in process parallel; results are
    merged by learner index, so the output is identical either way.
    """
    specs = sample_learner_specs(cfg)
    jobs = [(spec, learner, cfg) for learner, spec in enumerate(specs)]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_learner = list(pool.map(_run_all_arms, jobs, chunksize=1))
    else:
        per_learner = [_run_all_arms(job) for job in jobs]
    results: dict[str, list[RunMetrics]] = {kind: [] for kind in cfg.teachers}
    for arm_metrics in per_learner:
        for metrics in arm_metrics:
            results[metrics.teacher].append(metrics)
    return results


def prediction_error_series(records: Iterable[TrialRecord]) -> dict[int, float]:
    """Mean absolute prediction error per session index.

    First presentations contribute zero (the prediction is pinned to 1
    while the answer is shown).  Records lacking a prediction or a true
    recall are rejected: this series is only defined for simulated
    model-based runs.
    """
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for record in records:
        if record.is_first_presentation:
            error = 0.0
        else:
            if record.predicted_recall is None or record.true_recall is None:
                raise ValueError("records must carry predicted and true recall")
            error = abs(record.predicted_recall - record.true_recall)
        sums[record.session_index] = sums.get(record.session_index, 0.0) + error
        counts[record.session_index] = counts.get(record.session_index, 0) + 1
    return {s: sums[s] / counts[s] for s in sorted(sums)}


# ---------------------------------------------------------------------------
# On-disk run format consumed by the analysis command.

METRICS_FILE = "metrics.tsv"
ERRORS_FILE = "errors.tsv"
TRIALS_FILE = "trials.tsv"
MANIFEST_FILE = "manifest.json"


def config_echo(cfg: ExperimentConfig) -> dict:
    return {
        "population_size": cfg.population_size,
        "item_count": cfg.item_count,
        "sessions": [
            {
                "start": s.start,
                "iteration_count": s.iteration_count,
                "iteration_duration": s.iteration_duration,
            }
            for s in cfg.schedule.sessions
        ],
        "eval_time": cfg.schedule.eval_time,
        "teachers": list(cfg.teachers),
        "omniscient": cfg.omniscient,
        "model": cfg.model.value,
        "rho": cfg.rho,
        "grid": {
            "alpha_points": cfg.grid.alpha_points,
            "alpha_bounds": list(cfg.grid.alpha_bounds),
            "beta_points": cfg.grid.beta_points,
            "beta_bounds": list(cfg.grid.beta_bounds),
        },
        "alpha_range": list(cfg.alpha_range),
        "beta_range": list(cfg.beta_range),
        "leitner": {"delta_a": cfg.leitner.delta_a, "delta_b": cfg.leitner.delta_b},
        "seed": cfg.seed,
        "require_leitner_learnable": cfg.require_leitner_learnable,
    }


def write_run(outdir: Path, cfg: ExperimentConfig, results: dict[str, list[RunMetrics]]) -> None:
    """Write the manifest and the tab-separated metric tables."""
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / METRICS_FILE, "w") as fh:
        fh.write("teacher\tlearner\tn_learned\tn_seen\tratio\n")
        for kind in results:
            for m in results[kind]:
                ratio = "" if m.ratio is None else f"{m.ratio:.10g}"
                fh.write(f"{kind}\t{m.learner}\t{m.n_learned}\t{m.n_seen}\t{ratio}\n")
    with open(outdir / ERRORS_FILE, "w") as fh:
        fh.write("teacher\tlearner\tsession\tmean_abs_error\n")
        for kind in results:
            for m in results[kind]:
                if m.per_session_error is None:
                    continue
                for session, err in m.per_session_error.items():
                    fh.write(f"{kind}\t{m.learner}\t{session}\t{err:.10g}\n")
    wrote_trials = False
    if any(m.trials for runs in results.values() for m in runs):
        wrote_trials = True
        with open(outdir / TRIALS_FILE, "w") as fh:
            fh.write(
                "teacher\tlearner\tstep\tsession\ttime\titem\toutcome"
                "\tpredicted_recall\ttrue_recall\tfirst\n"
            )
            for kind in results:
                for m in results[kind]:
                    for t in m.trials:
                        pred = "" if t.predicted_recall is None else f"{t.predicted_recall:.10g}"
                        true = "" if t.true_recall is None else f"{t.true_recall:.10g}"
                        fh.write(
                            f"{kind}\t{m.learner}\t{t.step}\t{t.session_index}\t{t.time:.10g}"
                            f"\t{t.item}\t{t.outcome}\t{pred}\t{true}"
                            f"\t{int(t.is_first_presentation)}\n"
                        )
    manifest = {
        "artifact": "adaptutor",
        "format": 1,
        "config": config_echo(cfg),
        "outputs": {
            "metrics": METRICS_FILE,
            "errors": ERRORS_FILE,
            "trials": TRIALS_FILE if wrote_trials else None,
        },
    }
    with open(outdir / MANIFEST_FILE, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metrics(outdir: Path) -> dict[str, list[dict]]:
    """Load the per-learner metric table written by :func:`write_run`."""
    path = outdir / METRICS_FILE
    if not path.exists():
        raise FileNotFoundError(f"no metrics table at {path}")
    table: dict[str, list[dict]] = {}
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        for line in fh:
            row = dict(zip(header, line.rstrip("\n").split("\t")))
            entry = {
                "learner": int(row["learner"]),
                "n_learned": int(row["n_learned"]),
                "n_seen": int(row["n_seen"]),
                "ratio": float(row["ratio"]) if row["ratio"] else None,
            }
            table.setdefault(row["teacher"], []).append(entry)
    return table
