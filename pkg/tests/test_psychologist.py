from __future__ import annotations

import math

import numpy as np
import pytest

from adaptutor.errors import ConfigurationError, DegeneratePosteriorError, ModeError, UnseenItemError
from adaptutor.memory import ItemState, ModelKind, ParamPoint, record_presentation
from adaptutor.psychologist import (
    Belief,
    BeliefBank,
    GridSpec,
    OmniscientBank,
    belief_table,
    grid_for,
    init_belief,
    posterior_mean,
    predict_recall,
    prior_for_new_item,
    update_belief,
)

from oracles import bayes_update

# A 2x2 grid whose recall at n=1 depends only on alpha: with one
# presentation the repetition effect has no influence, so the two beta rows
# inside each alpha column behave identically and hand calculations over
# "two points" carry over exactly.
TWO_ALPHA_GRID = GridSpec(2, (math.log(1.25) / 1.0, math.log(2.5) / 1.0), 2, (0.2, 0.8))
# alpha_low = ln(1.25) gives recall 0.8 at dt=1; alpha_high = ln(2.5) gives 0.4.


def alpha_group_weights(belief: Belief) -> tuple[float, float]:
    w = belief.weights
    return float(w[0] + w[1]), float(w[2] + w[3])


class TestGridSpec:
    def test_paper_scale_uniform_init(self) -> None:
        belief = init_belief(GridSpec(100, (2e-7, 2.5e-2), 100, (0.0001, 0.9999)))
        assert belief.weights.size == 10_000
        assert np.allclose(belief.weights, 1e-4, atol=1e-15)

    def test_tiny_uniform_init(self) -> None:
        belief = init_belief(GridSpec(2, (1e-4, 1e-2), 2, (0.2, 0.8)))
        assert np.allclose(belief.weights, 0.25, atol=1e-15)

    def test_zero_alpha_bound_rejected(self) -> None:
        with pytest.raises(ConfigurationError):
            GridSpec(2, (0.0, 1e-2), 2, (0.2, 0.8))

    def test_degenerate_bounds_rejected(self) -> None:
        with pytest.raises(ConfigurationError):
            GridSpec(2, (1e-2, 1e-4), 2, (0.2, 0.8))
        with pytest.raises(ConfigurationError):
            GridSpec(2, (1e-4, 1e-2), 2, (0.2, 1.0))
        with pytest.raises(ConfigurationError):
            GridSpec(1, (1e-4, 1e-2), 2, (0.2, 0.8))

    def test_grid_layout(self) -> None:
        grid = grid_for(GridSpec(3, (1e-4, 1e-2), 2, (0.2, 0.8)))
        # log-spaced alphas, linear betas, alpha-major ordering
        assert np.allclose(np.unique(grid.alpha), [1e-4, 1e-3, 1e-2])
        assert np.allclose(grid.beta[:2], [0.2, 0.8])
        assert grid.size == 6


class TestUpdateBelief:
    def test_constant_likelihood_keeps_prior(self) -> None:
        belief = init_belief(TWO_ALPHA_GRID)
        out = update_belief(belief, ItemState(1, 100.0), 1, 100.0)  # dt=0, p=1 everywhere
        assert np.allclose(out.weights, belief.weights, atol=1e-15)

    def test_success_reweights_like_hand_bayes(self) -> None:
        # Likelihoods (0.8, 0.4) on the two alpha groups, prior (0.5, 0.5),
        # success: posterior (2/3, 1/3).
        belief = init_belief(TWO_ALPHA_GRID)
        out = update_belief(belief, ItemState(1, 0.0), 1, 1.0)
        lo, hi = alpha_group_weights(out)
        assert lo == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert hi == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_failure_reweights_like_hand_bayes(self) -> None:
        # Failure flips the likelihoods to (0.2, 0.6): posterior (0.25, 0.75).
        belief = init_belief(TWO_ALPHA_GRID)
        out = update_belief(belief, ItemState(1, 0.0), 0, 1.0)
        lo, hi = alpha_group_weights(out)
        assert lo == pytest.approx(0.25, abs=1e-12)
        assert hi == pytest.approx(0.75, abs=1e-12)

    def test_weights_normalized_after_every_update(self) -> None:
        rng = np.random.default_rng(3)
        belief = init_belief(GridSpec(10, (1e-5, 1e-1), 10, (0.05, 0.95)))
        state = ItemState(1, 0.0)
        now = 0.0
        for _ in range(200):
            now += float(10.0 ** rng.uniform(0, 4))
            belief = update_belief(belief, state, int(rng.integers(0, 2)), now)
            assert abs(belief.weights.sum() - 1.0) < 1e-9
            state = record_presentation(state, now)

    def test_matches_bruteforce_normalization(self) -> None:
        rng = np.random.default_rng(4)
        for _ in range(100):
            spec = GridSpec(
                int(rng.integers(2, 6)),
                (10.0 ** rng.uniform(-6, -4), 10.0 ** rng.uniform(-3, -1)),
                int(rng.integers(2, 6)),
                (rng.uniform(0.01, 0.4), rng.uniform(0.5, 0.99)),
            )
            belief = init_belief(spec)
            grid = belief.grid
            oracle = list(belief.weights)
            state = ItemState(1, 0.0)
            now = 0.0
            for _ in range(int(rng.integers(1, 10))):
                now += float(10.0 ** rng.uniform(0, 4))
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
                assert np.allclose(belief.weights, oracle, atol=1e-12)
                state = record_presentation(state, now)

    def test_prior_rescaling_commutes(self) -> None:
        spec = GridSpec(4, (1e-5, 1e-2), 4, (0.1, 0.9))
        base = init_belief(spec)
        skewed = update_belief(base, ItemState(1, 0.0), 1, 300.0)
        shifted = Belief(skewed.grid, skewed.log_weights + 3.7)  # unnormalized prior
        state = ItemState(2, 300.0)
        a = update_belief(skewed, state, 0, 900.0)
        b = update_belief(shifted, state, 0, 900.0)
        assert np.allclose(a.weights, b.weights, atol=1e-13)

    def test_unseen_state_rejected(self) -> None:
        with pytest.raises(UnseenItemError):
            update_belief(init_belief(TWO_ALPHA_GRID), ItemState(), 1, 1.0)

    def test_degenerate_posterior_detected(self) -> None:
        # dt=0 makes every point certain; observing a failure leaves no mass.
        belief = init_belief(TWO_ALPHA_GRID)
        with pytest.raises(DegeneratePosteriorError):
            update_belief(belief, ItemState(1, 50.0), 0, 50.0)

    def test_order_insensitive_given_same_triples(self) -> None:
        # Two observation sequences producing identical (n, dt, outcome)
        # triples produce identical posteriors.
        spec = GridSpec(5, (1e-5, 1e-2), 5, (0.1, 0.9))
        triples = [(1, 40.0, 1), (2, 700.0, 0), (3, 90.0, 1)]
        for start in (0.0, 1234.5):
            belief = init_belief(spec)
            now = start
            for n, dt, outcome in triples:
                now += dt
                belief = update_belief(belief, ItemState(n, now - dt), outcome, now)
            if start == 0.0:
                reference = belief.weights
        assert np.allclose(belief.weights, reference, atol=0.0)


class TestPredictRecall:
    def test_point_mass_matches_curve(self) -> None:
        spec = GridSpec(3, (1e-4, 1e-2), 3, (0.2, 0.8))
        belief = init_belief(spec)
        log_w = np.full(belief.grid.size, -np.inf)
        log_w[4] = 0.0  # point mass on the middle grid point
        bank = BeliefBank(ModelKind.EF, spec)
        bank.global_belief = Belief(belief.grid, log_w)
        theta = ParamPoint(float(belief.grid.alpha[4]), float(belief.grid.beta[4]))
        state = ItemState(3, 0.0)
        from adaptutor.memory import recall_probability

        assert predict_recall(bank, "x", state, 500.0) == pytest.approx(
            recall_probability(state, theta, 500.0), abs=1e-12
        )

    def test_two_group_mixture_hand_value(self) -> None:
        # Posterior (2/3, 1/3) on alpha groups with component recalls
        # (0.9, 0.3) mixes to 0.7.
        dt = 1.0
        spec = GridSpec(2, (-math.log(0.9) / dt, -math.log(0.3) / dt), 2, (0.2, 0.8))
        bank = BeliefBank(ModelKind.EF, spec)
        grid = grid_for(spec)
        weights = np.array([2 / 3, 2 / 3, 1 / 3, 1 / 3]) / 2.0
        bank.global_belief = Belief(grid, np.log(weights))
        got = predict_recall(bank, "x", ItemState(1, 0.0), dt)
        assert got == pytest.approx(0.7, abs=1e-12)

    def test_zero_lag_certain_regardless_of_posterior(self) -> None:
        bank = BeliefBank(ModelKind.EF, TWO_ALPHA_GRID)
        assert predict_recall(bank, "x", ItemState(4, 77.0), 77.0) == pytest.approx(1.0, abs=1e-15)

    def test_unseen_item_rejected(self) -> None:
        bank = BeliefBank(ModelKind.EF, TWO_ALPHA_GRID)
        with pytest.raises(UnseenItemError):
            predict_recall(bank, "x", ItemState(), 1.0)


class TestBeliefBank:
    def test_ef_and_isef_agree_on_shared_history(self) -> None:
        spec = GridSpec(6, (1e-5, 1e-2), 6, (0.1, 0.9))
        ef = BeliefBank(ModelKind.EF, spec)
        isef = BeliefBank(ModelKind.ISEF, spec)
        state = ItemState(1, 0.0)
        now = 0.0
        for outcome in (1, 0, 1, 1):
            now += 250.0
            ef.observe("w", state, outcome, now)
            isef.observe("w", state, outcome, now)
            state = record_presentation(state, now)
        assert np.allclose(
            ef.global_belief.weights, isef.per_item_beliefs["w"].weights, atol=0.0
        )

    def test_reviewed_items_tracks_informative_observations(self) -> None:
        bank = BeliefBank(ModelKind.ISEF, TWO_ALPHA_GRID)
        assert bank.reviewed_items == frozenset()
        bank.observe("a", ItemState(1, 0.0), 1, 5.0)
        assert bank.reviewed_items == frozenset({"a"})


class TestPriorForNewItem:
    def test_uniform_when_nothing_reviewed(self) -> None:
        bank = BeliefBank(ModelKind.ISEF, TWO_ALPHA_GRID)
        prior = prior_for_new_item(bank)
        assert np.allclose(prior.weights, 0.25, atol=1e-15)

    def test_single_reviewed_item_copied(self) -> None:
        bank = BeliefBank(ModelKind.ISEF, TWO_ALPHA_GRID)
        bank.observe("a", ItemState(1, 0.0), 1, 1.0)
        prior = prior_for_new_item(bank)
        assert np.allclose(prior.weights, bank.per_item_beliefs["a"].weights, atol=1e-15)

    def test_two_reviewed_items_pointwise_mean(self) -> None:
        bank = BeliefBank(ModelKind.ISEF, TWO_ALPHA_GRID)
        grid = grid_for(TWO_ALPHA_GRID)
        bank.per_item_beliefs["a"] = Belief(grid, np.log([0.3, 0.3, 0.2, 0.2]))
        bank.per_item_beliefs["b"] = Belief(grid, np.log([0.1, 0.1, 0.4, 0.4]))
        lo, hi = alpha_group_weights(prior_for_new_item(bank))
        assert lo == pytest.approx(0.4, abs=1e-12)
        assert hi == pytest.approx(0.6, abs=1e-12)

    def test_recomputed_after_each_review(self) -> None:
        bank = BeliefBank(ModelKind.ISEF, TWO_ALPHA_GRID)
        bank.observe("a", ItemState(1, 0.0), 1, 1.0)
        first = prior_for_new_item(bank)
        bank.observe("a", ItemState(2, 1.0), 0, 4.0)  # informative lag
        second = prior_for_new_item(bank)
        assert not np.allclose(first.weights, second.weights)

    def test_mode_error_in_per_learner_mode(self) -> None:
        with pytest.raises(ModeError):
            prior_for_new_item(BeliefBank(ModelKind.EF, TWO_ALPHA_GRID))


class TestPosteriorMean:
    def test_point_mass(self) -> None:
        spec = GridSpec(3, (1e-4, 1e-2), 3, (0.2, 0.8))
        grid = grid_for(spec)
        log_w = np.full(grid.size, -np.inf)
        log_w[7] = 0.0
        mean = posterior_mean(Belief(grid, log_w))
        assert mean.alpha == pytest.approx(float(grid.alpha[7]), rel=1e-12)
        assert mean.beta == pytest.approx(float(grid.beta[7]), rel=1e-12)

    def test_alpha_averaged_in_log_space(self) -> None:
        belief = init_belief(GridSpec(2, (1e-4, 1e-2), 2, (0.4, 0.6)))
        mean = posterior_mean(belief)
        assert mean.alpha == pytest.approx(1e-3, rel=1e-9)
        assert mean.beta == pytest.approx(0.5, abs=1e-12)

    def test_beta_midpoint(self) -> None:
        belief = init_belief(GridSpec(2, (1e-4, 1e-2), 2, (0.2, 0.6)))
        assert posterior_mean(belief).beta == pytest.approx(0.4, abs=1e-12)


class TestOmniscientBank:
    def test_reports_true_recall(self) -> None:
        from adaptutor.memory import recall_probability

        theta = ParamPoint(3e-4, 0.42)
        bank = OmniscientBank(theta)
        state = ItemState(2, 10.0)
        assert bank.recall("q", state, 500.0) == recall_probability(state, theta, 500.0)

    def test_per_item_parameters(self) -> None:
        bank = OmniscientBank({"a": ParamPoint(1e-3, 0.5), "b": ParamPoint(1e-5, 0.5)})
        state = ItemState(1, 0.0)
        assert bank.recall("a", state, 1000.0) < bank.recall("b", state, 1000.0)

    def test_observations_ignored(self) -> None:
        bank = OmniscientBank(ParamPoint(1e-3, 0.5))
        state = ItemState(1, 0.0)
        before = bank.recall("a", state, 100.0)
        bank.observe("a", state, 0, 50.0)
        assert bank.recall("a", state, 100.0) == before


class TestSerialization:
    def test_belief_table_round_trip(self) -> None:
        belief = init_belief(TWO_ALPHA_GRID)
        rows = belief_table(belief)
        assert len(rows) == 4
        assert sum(w for _, _, w in rows) == pytest.approx(1.0, abs=1e-12)
        alphas = {a for a, _, _ in rows}
        assert len(alphas) == 2


class TestParameterRecovery:
    def test_posterior_concentrates_on_truth(self) -> None:
        # Light version of the recovery acceptance check: one mid-range
        # learner, one item, 60 informative observations at varied lags.
        spec = GridSpec(30, (2e-7, 2.5e-2), 30, (0.0001, 0.9999))
        grid = grid_for(spec)
        truth = ParamPoint(1e-4, 0.4)
        rng = np.random.default_rng(42)
        bank = BeliefBank(ModelKind.ISEF, spec)
        state = ItemState(1, 0.0)
        now = 0.0
        from adaptutor.memory import recall_probability

        for _ in range(60):
            now += float(10.0 ** rng.uniform(1, 5))
            p = recall_probability(state, truth, now)
            outcome = int(rng.random() < p)
            bank.observe("k", state, outcome, now)
            state = record_presentation(state, now)
        est = posterior_mean(bank.per_item_beliefs["k"])
        assert abs(math.log10(est.alpha) - math.log10(truth.alpha)) < 1.0
