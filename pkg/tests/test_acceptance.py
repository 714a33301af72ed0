"""End-to-end acceptance suite.

One test per acceptance criterion, each printing a PASS/FAIL line (run
with ``pytest -s tests/test_acceptance.py`` to see every line).  The
desk-scale directional battery runs five seeded experiment batches once
and feeds the three directional checks from that shared run.
"""

from __future__ import annotations

import math
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from adaptutor.leitner import LeitnerConfig, LeitnerState, leitner_select, leitner_update
from adaptutor.memory import (
    ItemState,
    ModelKind,
    ParamPoint,
    recall_probability,
    record_presentation,
)
from adaptutor.planner import (
    PlannerConfig,
    PlannerKind,
    Schedule,
    Session,
    reward_count,
)
from adaptutor.psychologist import (
    BeliefBank,
    GridSpec,
    grid_for,
    init_belief,
    posterior_mean,
    update_belief,
)
from adaptutor.simulator import ExperimentConfig, build_daily_schedule, run_experiment
from adaptutor.stats import bonferroni, mann_whitney_u, median
from adaptutor.teachers import ModelTeacher
from adaptutor.psychologist import OmniscientBank
from adaptutor.config import ServiceConfig
from adaptutor.service import Store, TutorEngine

from oracles import bayes_update, best_sequence_reward, recall_curve

pytestmark = pytest.mark.acceptance

WORKERS = 2
DESK_GRID = GridSpec(50, (2e-7, 2.5e-2), 50, (0.0001, 0.9999))
DESK_SEEDS = (101, 202, 303, 404, 505)


def check(label: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {label} ({detail})")
    assert ok, f"{label}: {detail}"


# -- closed-form recall model -------------------------------------------------


def test_recall_model_closed_form_and_properties() -> None:
    state = ItemState(2, 0.0)
    hand_cases = [
        (ItemState(1, 0.0), ParamPoint(0.3, 0.5), 0.0, 1.0),
        (state, ParamPoint(0.025, 0.5), 10.0, math.exp(-0.125)),
        (state, ParamPoint(0.025, 0.9999), 1e6, recall_curve(0.025, 0.9999, 2, 1e6)),
    ]
    worst = 0.0
    for item_state, theta, dt, expected in hand_cases:
        got = recall_probability(item_state, theta, (item_state.last_presentation or 0.0) + dt)
        worst = max(worst, abs(got - expected))
    check("closed-form recall values", worst < 1e-12, f"max deviation {worst:.2e}")

    rng = np.random.default_rng(2718)
    draws = 100_000
    monotone_lag = monotone_reps = scaling = 0
    for _ in range(draws):
        theta = ParamPoint(10.0 ** rng.uniform(-6, -1.7), rng.uniform(0.05, 0.95))
        n = int(rng.integers(1, 15))
        dt = 10.0 ** rng.uniform(0.5, 5.5)
        rate = theta.decay_rate(n)
        st = ItemState(n, 0.0)
        p = recall_probability(st, theta, dt)
        assert 0.0 <= p <= 1.0
        # strictly decreasing in lag, inside the float-representable window
        dt2 = dt * (1.0 + rng.uniform(0.05, 1.0))
        if 1e-11 < rate * dt < rate * dt2 < 600.0:
            assert recall_probability(st, theta, dt2) < p
            monotone_lag += 1
        # strictly increasing in presentations
        if 1e-11 < rate * dt < 600.0:
            p_more = recall_probability(ItemState(n + 1, 0.0), theta, dt)
            assert p_more > p
            monotone_reps += 1
        # scale alpha up, lag down: same probability
        c = 10.0 ** rng.uniform(-2, 2)
        q = recall_probability(st, ParamPoint(theta.alpha * c, theta.beta), dt / c)
        assert q == pytest.approx(p, rel=1e-9, abs=1e-12)
        scaling += 1
    check(
        "recall monotonicity and scaling over randomized draws",
        monotone_lag > 20_000 and monotone_reps > 20_000 and scaling == draws,
        f"{draws} draws; lag-monotone checks {monotone_lag},"
        f" repetition-monotone {monotone_reps}, scaling {scaling}",
    )


# -- Bayes updates vs brute force ----------------------------------------------


def test_belief_update_matches_bruteforce_oracle() -> None:
    rng = np.random.default_rng(314)
    worst = 0.0
    sequences = 1000
    for _ in range(sequences):
        spec = GridSpec(
            int(rng.integers(2, 6)),
            (10.0 ** rng.uniform(-7, -5), 10.0 ** rng.uniform(-4, -1)),
            int(rng.integers(2, 6)),
            (rng.uniform(0.01, 0.45), rng.uniform(0.5, 0.99)),
        )
        belief = init_belief(spec)
        grid = belief.grid
        oracle = list(belief.weights)
        state = ItemState(1, 0.0)
        now = 0.0
        for _ in range(int(rng.integers(1, 8))):
            now += float(10.0 ** rng.uniform(0, 4.5))
            outcome = int(rng.integers(0, 2))
            belief = update_belief(belief, state, outcome, now)
            oracle = bayes_update(
                oracle,
                list(grid.alpha),
                list(grid.beta),
                state.n_presentations,
                now - state.last_presentation,
                outcome,
            )
            worst = max(worst, float(np.max(np.abs(belief.weights - np.asarray(oracle)))))
            state = record_presentation(state, now)
    check(
        "grid Bayes equals direct normalization",
        worst < 1e-12,
        f"{sequences} randomized sequences, max |diff| {worst:.2e}",
    )


# -- planner vs exhaustive search ----------------------------------------------


def test_planner_never_beats_exhaustive_oracle() -> None:
    started = time.time()
    rng = np.random.default_rng(1618)
    instances = 50
    greedy_optimal = 0
    violations = 0
    for _ in range(instances):
        q = int(rng.integers(1, 4))
        horizon = int(rng.integers(1, 7))
        schedule = Schedule(
            sessions=(Session(0.0, horizon, 4.0),),
            eval_time=horizon * 4.0 + float(rng.integers(10, 500)),
        )
        universe = tuple(f"i{k}" for k in range(q))
        theta = {
            a: ParamPoint(10.0 ** rng.uniform(-3.2, -0.5), rng.uniform(0.05, 0.9))
            for a in universe
        }
        rho = float(rng.choice([0.6, 0.75, 0.9]))
        oracle = best_sequence_reward(
            universe,
            [schedule.time_of_step(j) for j in range(horizon)],
            schedule.eval_time,
            {a: (t.alpha, t.beta) for a, t in theta.items()},
            rho,
        )
        for kind in (PlannerKind.MYOPIC, PlannerKind.CONSERVATIVE):
            teacher = ModelTeacher(
                PlannerConfig(rho, universe, kind), schedule, OmniscientBank(theta)
            )
            for step in range(horizon):
                now = schedule.time_of_step(step)
                item = teacher.select(now, step)
                teacher.observe(item, 1, now, step)
            reward = reward_count(teacher.state, rho, schedule.eval_time)
            if reward > oracle:
                violations += 1
            if kind is PlannerKind.MYOPIC and reward == oracle:
                greedy_optimal += 1
    elapsed = time.time() - started
    check(
        "exhaustive oracle bounds both planners",
        violations == 0 and elapsed < 60.0,
        f"{instances} instances in {elapsed:.1f}s;"
        f" greedy matched the oracle in {greedy_optimal}/{instances}",
    )


# -- Leitner reference behavior --------------------------------------------------


def test_leitner_reference_transitions_and_trace() -> None:
    cfg = LeitnerConfig(delta_a=4.0, delta_b=2.0)

    def fresh() -> LeitnerState:
        return LeitnerState(config=cfg, item_universe=("w0", "w1", "w2", "w3"), rng_seed=11)

    state = fresh()
    leitner_update(state, "w0", 1, 0.0)
    enters_box_one = state.box["w0"] == 1 and state.due["w0"] == 8.0
    leitner_update(state, "w0", 0, 100.0)
    demotes = state.box["w0"] == 0 and state.due["w0"] == 104.0
    leitner_update(state, "w0", 1, 200.0)
    leitner_update(state, "w0", 1, 300.0)
    promotes = state.box["w0"] == 2 and state.due["w0"] == 316.0
    check(
        "box transitions reproduce the 8s/4s/16s delays",
        enters_box_one and demotes and promotes,
        "entry->8s, demotion->4s, promotion->16s",
    )

    outcomes = [1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 1, 1, 0, 1, 1, 1, 0, 1]

    def trace() -> list[tuple]:
        st = fresh()
        rows = []
        now = 0.0
        for step, outcome in enumerate(outcomes):
            item = leitner_select(st, now, step)
            leitner_update(st, item, outcome, now)
            rows.append((step, item, st.box[item], st.due[item]))
            now += 4.0
        return rows

    first, second = trace(), trace()
    check(
        "scripted 20-trial trace replays bit-identically",
        first == second and len(first) == 20,
        f"{len(first)} trials, identical items, boxes, and due times",
    )


# -- desk-scale directional replication ----------------------------------------


@pytest.fixture(scope="module")
def desk_runs() -> dict:
    batches = []
    started = time.time()
    for seed in DESK_SEEDS:
        cfg = ExperimentConfig(
            population_size=30,
            item_count=100,
            schedule=build_daily_schedule(6, 50, 4.0),
            teachers=("leitner", "myopic", "conservative"),
            model=ModelKind.ISEF,
            rho=0.9,
            grid=DESK_GRID,
            seed=seed,
            keep_trials=False,
        )
        batches.append(run_experiment(cfg, workers=WORKERS))
    elapsed = time.time() - started
    print(f"desk-scale battery: {len(DESK_SEEDS)} batches of N=30 in {elapsed:.0f}s")
    assert elapsed < 1800.0, f"desk-scale battery exceeded its 30-minute budget: {elapsed:.0f}s"
    return {"batches": batches, "elapsed": elapsed}


def test_desk_scale_learned_counts_beat_baseline(desk_runs: dict) -> None:
    wins = 0
    details = []
    for seed, batch in zip(DESK_SEEDS, desk_runs["batches"]):
        baseline = [m.n_learned for m in batch["leitner"]]
        batch_ok = True
        for kind in ("myopic", "conservative"):
            learned = [m.n_learned for m in batch[kind]]
            u, p = mann_whitney_u(learned, baseline)
            corrected = bonferroni(p, 2)
            direction = median(learned) > median(baseline)
            batch_ok &= direction and corrected < 0.05
            details.append(f"seed {seed} {kind}: med {median(learned):.1f} vs"
                           f" {median(baseline):.1f}, corrected p={corrected:.2g}")
        wins += batch_ok
    for line in details:
        print("  " + line)
    check(
        "median items learned: model teachers beat the baseline",
        wins >= 4,
        f"significant in {wins}/{len(DESK_SEEDS)} seed batches",
    )


def test_desk_scale_myopic_precision_below_baseline(desk_runs: dict) -> None:
    wins = 0
    for batch in desk_runs["batches"]:
        myopic = [m.ratio for m in batch["myopic"] if m.ratio is not None]
        baseline = [m.ratio for m in batch["leitner"] if m.ratio is not None]
        wins += median(myopic) < median(baseline)
    check(
        "learned/seen ratio: myopic below the baseline",
        wins >= 4,
        f"median ordering held in {wins}/{len(DESK_SEEDS)} seed batches",
    )


def test_desk_scale_prediction_error_decreases(desk_runs: dict) -> None:
    for kind in ("myopic", "conservative"):
        early, late = [], []
        for batch in desk_runs["batches"]:
            for m in batch[kind]:
                series = m.per_session_error
                early.append((series[0] + series[1]) / 2.0)
                late.append((series[4] + series[5]) / 2.0)
        early_mean = sum(early) / len(early)
        late_mean = sum(late) / len(late)
        check(
            f"prediction error decreases over sessions ({kind})",
            late_mean < early_mean,
            f"first two sessions {early_mean:.4f}, last two {late_mean:.4f}",
        )


# -- omniscient runs -------------------------------------------------------------


def test_omniscient_runs_have_zero_prediction_error() -> None:
    cfg = ExperimentConfig(
        population_size=6,
        item_count=40,
        schedule=build_daily_schedule(3, 20, 4.0),
        teachers=("myopic", "conservative"),
        model=ModelKind.ISEF,
        omniscient=True,
        grid=DESK_GRID,
        seed=7,
        keep_trials=False,
    )
    results = run_experiment(cfg, workers=WORKERS)
    worst = 0.0
    for runs in results.values():
        for m in runs:
            assert m.per_session_error is not None
            for err in m.per_session_error.values():
                worst = max(worst, abs(err))
    check("omniscient prediction error identically zero", worst == 0.0, f"max |error| {worst}")


# -- parameter recovery ------------------------------------------------------------


def test_parameter_recovery_after_hundred_observations() -> None:
    grid = grid_for(DESK_GRID)
    alphas = np.unique(grid.alpha)
    betas = np.unique(grid.beta)
    hits = 0
    errors = []
    for case in range(20):
        rng = np.random.default_rng(8800 + case)
        # Mid-range truth, snapped onto the inference grid.
        raw_alpha = 10.0 ** rng.uniform(-5.5, -2.5)
        raw_beta = rng.uniform(0.3, 0.7)
        truth = ParamPoint(
            float(alphas[np.argmin(np.abs(np.log(alphas) - math.log(raw_alpha)))]),
            float(betas[np.argmin(np.abs(betas - raw_beta))]),
        )
        bank = BeliefBank(ModelKind.ISEF, DESK_GRID)
        state = ItemState(1, 0.0)
        now = 0.0
        for k in range(100):
            # Probe where the current posterior expects informative recall;
            # a few early low-recall probes pin the base forgetting rate.
            mean = posterior_mean(bank.belief_for("item"))
            rate = mean.alpha * (1.0 - mean.beta) ** (state.n_presentations - 1)
            target = 0.2 if k < 15 else float(rng.uniform(0.3, 0.9))
            now += max(-math.log(target) / max(rate, 1e-15), 4.0)
            p = recall_probability(state, truth, now)
            outcome = int(rng.random() < p)
            bank.observe("item", state, outcome, now)
            state = record_presentation(state, now)
        estimate = posterior_mean(bank.per_item_beliefs["item"])
        error = abs(math.log10(estimate.alpha) - math.log10(truth.alpha))
        errors.append(error)
        hits += error < 0.5
    check(
        "posterior mean recovers the forgetting rate",
        hits >= 16,
        f"{hits}/20 within 0.5 of true log10(alpha); median error"
        f" {median(errors):.2f}",
    )


# -- service replay ------------------------------------------------------------------


def _service_config() -> ServiceConfig:
    return ServiceConfig(
        data_dir=Path("unused"),
        items_per_arm=40,
        model_teacher="myopic",
        sessions=2,
        questions_per_session=100,
        grid=GridSpec(20, (2e-7, 2.5e-2), 20, (0.0001, 0.9999)),
        seed=12,
    )


def _scripted_answers(
    engine: TutorEngine, user: str, arm: str, start: float, count: int, seed: int
) -> list[str]:
    rng = np.random.default_rng(seed)
    sequence = []
    now = start
    for _ in range(count):
        question = engine.next_question(user, arm, now=now)
        sequence.append(question["item_id"])
        answer = engine._item(question["item_id"]).answer
        chosen = answer if rng.random() < 0.75 else next(
            c for c in question["choices"] if c != answer
        )
        engine.submit_answer(user, arm, question["item_id"], chosen, now=now + 1.0)
        now += 4.0
    return sequence


def test_service_replay_and_restart_sequence(tmp_path) -> None:
    cfg = _service_config()
    db = tmp_path / "service.sqlite3"
    engine = TutorEngine(cfg, Store(db))
    user = engine.create_user(daily_time="00:00", start_epoch=0.0, now=10.0)["user_id"]
    first_arm = engine.schedule_payload(user)["days"][0]["arm_order"][0]
    second_arm = engine.schedule_payload(user)["days"][0]["arm_order"][1]

    # 200-trial fixture: a full first-arm session plus one for the second.
    _scripted_answers(engine, user, first_arm, start=100.0, count=100, seed=21)
    _scripted_answers(engine, user, second_arm, start=600.0, count=60, seed=22)
    engine.store.close()
    snapshot = tmp_path / "snapshot.sqlite3"
    shutil.copy(db, snapshot)

    survivor = TutorEngine(cfg, Store(db))
    continued = _scripted_answers(survivor, user, second_arm, start=900.0, count=40, seed=23)
    restarted = TutorEngine(cfg, Store(snapshot))
    replayed = _scripted_answers(restarted, user, second_arm, start=900.0, count=40, seed=23)
    check(
        "restart reproduces the remaining question sequence",
        continued == replayed,
        f"{len(continued)} post-restart selections identical",
    )

    # Replay-from-log equality on the 200-trial store.
    total = survivor.store.trial_count(user, first_arm) + survivor.store.trial_count(
        user, second_arm
    )
    live = survivor.runtime(user, "model")
    rebuilt = survivor.rebuild_runtime(user, "model")
    states_equal = (
        rebuilt.introduced == live.introduced and rebuilt.item_states == live.item_states
    )
    beliefs_equal = set(rebuilt.bank.per_item_beliefs) == set(live.bank.per_item_beliefs) and all(
        np.array_equal(rebuilt.bank.per_item_beliefs[i].weights, b.weights)
        for i, b in live.bank.per_item_beliefs.items()
    )
    check(
        "teacher state rebuilds exactly from the trial log",
        total == 200 and states_equal and beliefs_equal,
        f"{total} trials; histories and posterior weights identical",
    )
