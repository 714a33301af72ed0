"""Grid-Bayesian inference of memory-curve parameters.

The teacher never observes a learner's true (alpha, beta); it maintains a
discrete posterior over a fixed grid of candidate parameter points and
updates it after every informative observation.  The grid is logarithmic in
alpha (forgetting rates span several orders of magnitude) and linear in
beta.  All weight bookkeeping happens in log space: likelihoods of long
histories underflow doubles long before they stop carrying information.

Two granularities exist.  In per-learner mode one belief covers every item;
in per-item mode each item carries its own belief, and an item that has
never been quizzed borrows a synthesized prior: the pointwise average of
the posteriors of the items quizzed so far (uniform when there are none).
The synthesized prior is recomputed at each query so that it always
reflects the latest posteriors; it becomes the item's own belief only at
the item's first informative observation.

An omniscient variant (simulation only) skips inference entirely and
answers recall queries from the learner's true parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterator, Mapping

import numpy as np

from .errors import (
    ConfigurationError,
    DegeneratePosteriorError,
    ModeError,
    UnseenItemError,
)
from .memory import ItemState, ModelKind, ParamPoint, recall_probability

# Planner rollouts evaluate beliefs through a compressed support: the
# smallest set of grid points (taken in decreasing-weight order) carrying
# all but this much posterior mass.  Dropping the tail can only lower a
# predicted recall, and by no more than the dropped mass.
SUPPORT_TAIL_MASS = 1e-13


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Layout of the (alpha, beta) inference grid.

    Alpha points are log-spaced (so ``alpha_bounds[0]`` must be positive),
    beta points are linearly spaced inside (0, 1).
    """

    alpha_points: int
    alpha_bounds: tuple[float, float]
    beta_points: int
    beta_bounds: tuple[float, float]

    def __post_init__(self) -> None:
        if self.alpha_points < 2 or self.beta_points < 2:
            raise ConfigurationError("grid needs at least 2 points per axis")
        a_lo, a_hi = self.alpha_bounds
        b_lo, b_hi = self.beta_bounds
        if not 0.0 < a_lo < a_hi:
            raise ConfigurationError(
                f"alpha bounds must satisfy 0 < low < high, got {self.alpha_bounds}"
            )
        if not 0.0 < b_lo < b_hi < 1.0:
            raise ConfigurationError(
                f"beta bounds must lie in (0, 1) and be ordered, got {self.beta_bounds}"
            )

    @property
    def size(self) -> int:
        return self.alpha_points * self.beta_points


# Grid used throughout the original experiments: 100x100, alpha log-spaced
# in [2e-7, 2.5e-2] 1/s, beta linear in [0.0001, 0.9999].
DEFAULT_GRID = GridSpec(
    alpha_points=100,
    alpha_bounds=(2e-7, 2.5e-2),
    beta_points=100,
    beta_bounds=(0.0001, 0.9999),
)


class ParamGrid:
    """Materialized grid points, shared by every belief over the same spec."""

    def __init__(self, spec: GridSpec) -> None:
        self.spec = spec
        alphas = np.geomspace(spec.alpha_bounds[0], spec.alpha_bounds[1], spec.alpha_points)
        betas = np.linspace(spec.beta_bounds[0], spec.beta_bounds[1], spec.beta_points)
        aa, bb = np.meshgrid(alphas, betas, indexing="ij")
        self.alpha = aa.ravel()
        self.beta = bb.ravel()
        self.log_alpha = np.log(self.alpha)
        self.one_minus_beta = 1.0 - self.beta
        self._rate_cache: dict[int, np.ndarray] = {}

    @property
    def size(self) -> int:
        return self.alpha.size

    def rates(self, n_presentations: int) -> np.ndarray:
        """Effective decay rate of every grid point after n presentations."""
        cached = self._rate_cache.get(n_presentations)
        if cached is None:
            cached = self.alpha * self.one_minus_beta ** (n_presentations - 1)
            self._rate_cache[n_presentations] = cached
        return cached

    def points(self) -> Iterator[ParamPoint]:
        for a, b in zip(self.alpha, self.beta):
            yield ParamPoint(float(a), float(b))


_GRID_CACHE: dict[GridSpec, ParamGrid] = {}


def grid_for(spec: GridSpec) -> ParamGrid:
    grid = _GRID_CACHE.get(spec)
    if grid is None:
        grid = ParamGrid(spec)
        _GRID_CACHE[spec] = grid
    return grid


class Belief:
    """A normalized discrete posterior over one parameter grid.

    Instances are value-like: updates return a new Belief sharing the grid.
    """

    __slots__ = ("grid", "log_weights", "weights", "_support", "_support_rates")

    def __init__(self, grid: ParamGrid, log_weights: np.ndarray) -> None:
        self.grid = grid
        self.log_weights = log_weights
        self.weights = np.exp(log_weights)
        self._support: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._support_rates: dict[int, np.ndarray] = {}

    def _support_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(weights, alpha, 1-beta) restricted to the high-mass support."""
        if self._support is None:
            order = np.argsort(self.weights)[::-1]
            covered = np.cumsum(self.weights[order])
            keep = int(np.searchsorted(covered, 1.0 - SUPPORT_TAIL_MASS)) + 1
            if keep >= self.weights.size:
                self._support = (self.weights, self.grid.alpha, self.grid.one_minus_beta)
            else:
                idx = np.sort(order[:keep])
                self._support = (
                    self.weights[idx],
                    self.grid.alpha[idx],
                    self.grid.one_minus_beta[idx],
                )
        return self._support

    def support_profile(self, n_presentations: int) -> tuple[np.ndarray, np.ndarray]:
        """(weights, decay rates) over the compressed support.

        Recall at lag dt is ``weights @ exp(-rates * dt)`` up to the dropped
        mass (see SUPPORT_EPS); planner rollouts use this cheaper mixture.
        """
        rates = self._support_rates.get(n_presentations)
        w, alpha, omb = self._support_arrays()
        if rates is None:
            rates = alpha * omb ** (n_presentations - 1)
            self._support_rates[n_presentations] = rates
        return w, rates

    def expected_recall(self, n_presentations: int, dt: float) -> float:
        """Posterior-expected recall: exact, over the full grid."""
        rates = self.grid.rates(n_presentations)
        return float(np.exp(-rates * dt) @ self.weights)


def _normalize_log(log_w: np.ndarray) -> np.ndarray:
    m = log_w.max()
    if not np.isfinite(m):
        raise DegeneratePosteriorError("no probability mass left on the grid")
    return log_w - (m + np.log(np.exp(log_w - m).sum()))


def init_belief(spec: GridSpec) -> Belief:
    """Uniform belief over the grid defined by ``spec``."""
    grid = grid_for(spec)
    log_w = np.full(grid.size, -np.log(grid.size))
    return Belief(grid, log_w)


def update_belief(belief: Belief, state: ItemState, outcome: int, now: float) -> Belief:
    """Posterior after observing ``outcome`` for an item in ``state``.

    The likelihood of each grid point is the recall probability it assigns
    to the observation (its complement for a failure); the normalizing
    integral is realized as the discrete sum over grid points.  Only
    informative observations belong here: first presentations reveal the
    answer and carry no memory signal, so callers skip them.
    """
    if not state.seen:
        raise UnseenItemError("cannot update a belief from a never-presented item")
    assert state.last_presentation is not None
    dt = now - state.last_presentation
    if dt < 0:
        raise ValueError(f"observation at {now} precedes last presentation")
    exponent = belief.grid.rates(state.n_presentations) * dt
    if outcome:
        log_like = -exponent  # log of exp(-rate*dt), computed without the round trip
    else:
        # log(1 - exp(-x)) via expm1 so that tiny x does not underflow to log(0)
        with np.errstate(divide="ignore"):
            log_like = np.log(-np.expm1(-exponent))
    return Belief(belief.grid, _normalize_log(belief.log_weights + log_like))


def posterior_mean(belief: Belief) -> ParamPoint:
    """Weight-averaged parameters; alpha is averaged on its log scale."""
    log_alpha = float(belief.weights @ belief.grid.log_alpha)
    beta = float(belief.weights @ belief.grid.beta)
    return ParamPoint(float(np.exp(log_alpha)), beta)


def belief_table(belief: Belief) -> list[tuple[float, float, float]]:
    """(alpha, beta, weight) rows, the serialization consumed by the CLI."""
    return [
        (float(a), float(b), float(w))
        for a, b, w in zip(belief.grid.alpha, belief.grid.beta, belief.weights)
    ]


class BeliefBank:
    """Per-learner collection of beliefs, one per item or one shared.

    Owned by a single learner's teaching loop; updates are serialized there.
    ``reviewed_items`` holds the items with at least one informative
    (quizzed) observation -- exactly the items carrying their own belief.
    """

    def __init__(self, mode: ModelKind, spec: GridSpec) -> None:
        self.mode = mode
        self.spec = spec
        self.grid = grid_for(spec)
        self.global_belief: Belief | None = init_belief(spec) if mode is ModelKind.EF else None
        self.per_item_beliefs: dict[Hashable, Belief] = {}
        # Synthesized prior for never-quizzed items, valid until the next
        # update anywhere in the bank (it averages the current posteriors).
        self._synth_prior: Belief | None = None

    @property
    def reviewed_items(self) -> frozenset[Hashable]:
        return frozenset(self.per_item_beliefs)

    def belief_for(self, item: Hashable) -> Belief:
        if self.mode is ModelKind.EF:
            assert self.global_belief is not None
            return self.global_belief
        own = self.per_item_beliefs.get(item)
        if own is not None:
            return own
        return prior_for_new_item(self)

    def observe(self, item: Hashable, state: ItemState, outcome: int, now: float) -> None:
        """Fold one informative observation into the appropriate belief."""
        if self.mode is ModelKind.EF:
            assert self.global_belief is not None
            self.global_belief = update_belief(self.global_belief, state, outcome, now)
        else:
            base = self.per_item_beliefs.get(item)
            if base is None:
                base = prior_for_new_item(self)
            self.per_item_beliefs[item] = update_belief(base, state, outcome, now)
            self._synth_prior = None

    def recall(self, item: Hashable, state: ItemState, now: float) -> float:
        if not state.seen:
            raise UnseenItemError(f"item {item!r} has never been presented")
        assert state.last_presentation is not None
        return self.belief_for(item).expected_recall(
            state.n_presentations, now - state.last_presentation
        )

    def recall_profile(self, item: Hashable, n_presentations: int) -> tuple[np.ndarray, np.ndarray]:
        """Compressed (weights, rates) mixture for planner rollouts."""
        return self.belief_for(item).support_profile(n_presentations)

    def estimates(self) -> dict[Hashable, ParamPoint]:
        """Posterior-mean parameters for every item with its own belief."""
        return {item: posterior_mean(b) for item, b in self.per_item_beliefs.items()}


def predict_recall(bank: BeliefBank, item: Hashable, state: ItemState, now: float) -> float:
    """Posterior-expected recall probability of ``item`` at time ``now``."""
    return bank.recall(item, state, now)


def prior_for_new_item(bank: BeliefBank) -> Belief:
    """Synthesized prior for an item that has never been quizzed.

    Pointwise arithmetic mean of the posteriors of the items quizzed at
    least once, renormalized; uniform when no item has been quizzed yet.
    Valid only in per-item mode.
    """
    if bank.mode is not ModelKind.ISEF:
        raise ModeError("synthesized priors only exist in item-specific mode")
    if bank._synth_prior is not None:
        return bank._synth_prior
    if not bank.per_item_beliefs:
        prior = init_belief(bank.spec)
    else:
        mean_w = np.mean([b.weights for b in bank.per_item_beliefs.values()], axis=0)
        with np.errstate(divide="ignore"):
            log_w = np.log(mean_w)
        prior = Belief(bank.grid, _normalize_log(log_w))
    bank._synth_prior = prior
    return prior


class OmniscientBank:
    """Simulation-only stand-in that answers from the true parameters.

    Quacks like :class:`BeliefBank` where the planner is concerned but
    bypasses inference entirely: predictions are the learner's actual
    recall probabilities and observations are discarded.
    """

    def __init__(self, params: ParamPoint | Mapping[Hashable, ParamPoint]) -> None:
        self._params = params

    def theta_for(self, item: Hashable) -> ParamPoint:
        if isinstance(self._params, ParamPoint):
            return self._params
        return self._params[item]

    def observe(self, item: Hashable, state: ItemState, outcome: int, now: float) -> None:
        pass

    def recall(self, item: Hashable, state: ItemState, now: float) -> float:
        return recall_probability(state, self.theta_for(item), now)

    def recall_profile(self, item: Hashable, n_presentations: int) -> tuple[np.ndarray, np.ndarray]:
        theta = self.theta_for(item)
        return np.array([1.0]), np.array([theta.decay_rate(n_presentations)])

    def estimates(self) -> dict[Hashable, ParamPoint]:
        return {}


RecallBank = BeliefBank | OmniscientBank
