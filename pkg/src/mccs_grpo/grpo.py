"""Group Relative Policy Optimization over the tabular report policy.

One training step snapshots the sampling policy, draws a group of ``G``
candidates per study, scores them, normalizes rewards within each group,
and takes one gradient-ascent step on the clipped surrogate minus a KL
penalty toward the frozen reference policy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Mapping, Sequence

import numpy as np

from .corpus import Study
from .errors import ConfigurationError, NumericalFault, RewardError
from .labeler import Lexicon, default_lexicon
from .policy import (
    Candidate,
    PolicyParams,
    candidate_logprob,
    kl_gradient,
    logprob_gradient,
    observe,
    policy_kl,
    sample_candidate,
)
from .rewards import ARMS, RewardBreakdown, arm_weights, score_candidate

log = logging.getLogger(__name__)

HISTORY_FIELDS = ("step", "mean_reward", "mean_mccs", "format_rate", "kl")


@dataclass(frozen=True)
class GRPOConfig:
    group_size: int = 4
    clip_eps: float = 0.2
    kl_beta: float = 0.04
    adv_eps: float = 1e-6
    learning_rate: float = 0.5
    steps: int = 1500
    batch_size: int = 8
    w_clinical: float = 0.75
    w_format: float = 0.25
    margin: float = 0.2
    noise: float = 0.1
    seed: int = 0
    reward_arm: str = "mccs+format"

    def __post_init__(self):
        if self.group_size < 2:
            raise ConfigurationError("group_size must be at least 2")
        if self.clip_eps <= 0:
            raise ConfigurationError("clip_eps must be positive")
        if self.kl_beta < 0:
            raise ConfigurationError("kl_beta must be non-negative")
        if self.adv_eps <= 0:
            raise ConfigurationError("adv_eps must be positive")
        if self.learning_rate < 0 or self.steps < 0 or self.batch_size < 1:
            raise ConfigurationError("learning_rate and steps must be >= 0, batch_size >= 1")
        if not -1 < self.margin < 1:
            raise ConfigurationError("margin must lie in (-1, 1)")
        if not 0 <= self.noise < 1:
            raise ConfigurationError("noise must lie in [0, 1)")
        if self.reward_arm not in ARMS:
            raise ConfigurationError(f"unknown reward arm {self.reward_arm!r}; expected one of {ARMS}")
        arm_weights(self.reward_arm, self.weights)
        if min(self.weights) < 0 or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ConfigurationError("w_clinical and w_format must be non-negative and sum to 1")

    @property
    def weights(self) -> tuple[float, float]:
        return (self.w_clinical, self.w_format)

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any]) -> "GRPOConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(doc) - set(known)
        if unknown:
            raise ConfigurationError(f"unknown GRPO config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class GroupRollout:
    study_id: str
    observation: np.ndarray
    candidates: tuple[Candidate, ...]
    rewards: tuple[RewardBreakdown, ...]
    advantages: np.ndarray

    def __post_init__(self):
        g = len(self.candidates)
        if g < 2 or len(self.rewards) != g or len(self.advantages) != g:
            raise ConfigurationError("group arrays must share one length G >= 2")


@dataclass
class TrainState:
    params: PolicyParams
    old_params: PolicyParams
    ref_params: PolicyParams
    step: int = 0
    history: list[dict] = field(default_factory=list)

    @classmethod
    def initial(cls, params: PolicyParams | None = None) -> "TrainState":
        params = params or PolicyParams.zeros()
        return cls(params, params, params)


def group_advantages(rewards: Sequence[float], adv_eps: float = 1e-6) -> np.ndarray:
    """Within-group normalized advantages with the stabilizer inside the square root."""
    r = np.asarray(rewards, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise ConfigurationError("a group needs at least two rewards")
    if adv_eps <= 0:
        raise ConfigurationError("adv_eps must be positive")
    centered = r - r.mean()
    return centered / math.sqrt(float(np.mean(centered**2)) + adv_eps)


def surrogate_term(ratio: float, advantage: float, clip_eps: float) -> float:
    clipped = min(max(ratio, 1 - clip_eps), 1 + clip_eps)
    return min(ratio * advantage, clipped * advantage)


def _surrogate_slope(ratio: float, advantage: float, clip_eps: float) -> float:
    """d/d(ratio) of :func:`surrogate_term`; zero where the clipped branch binds."""
    if advantage > 0 and ratio > 1 + clip_eps:
        return 0.0
    if advantage < 0 and ratio < 1 - clip_eps:
        return 0.0
    return advantage


def grpo_loss_and_grad(
    state: TrainState, rollouts: Sequence[GroupRollout], cfg: GRPOConfig
) -> tuple[float, PolicyParams]:
    """Objective to maximize and its exact gradient at ``state.params``.

    Old log-probabilities come from the candidates themselves, so the ratio
    is measured against whatever policy sampled them.
    """
    if not rollouts:
        raise ConfigurationError("need at least one rollout")
    params = state.params
    surrogate = 0.0
    content = np.zeros_like(params.content)
    fmt = np.zeros_like(params.format)
    for ro in rollouts:
        g = len(ro.candidates)
        for cand, adv in zip(ro.candidates, ro.advantages):
            lp_new = candidate_logprob(params, ro.observation, cand.actions, cand.variant)
            if not (math.isfinite(lp_new) and math.isfinite(cand.logprob)):
                raise NumericalFault(f"non-finite log-probability in study {ro.study_id}")
            ratio = math.exp(lp_new - cand.logprob)
            surrogate += surrogate_term(ratio, adv, cfg.clip_eps) / g
            slope = _surrogate_slope(ratio, adv, cfg.clip_eps)
            if slope:
                grad = logprob_gradient(params, ro.observation, cand.actions, cand.variant)
                w = slope * ratio / g
                content += w * grad.content
                fmt += w * grad.format
    n = len(rollouts)
    objective = surrogate / n
    content /= n
    fmt /= n
    if cfg.kl_beta:
        obs_batch = [ro.observation for ro in rollouts]
        objective -= cfg.kl_beta * policy_kl(params, state.ref_params, obs_batch)
        kl_grad = kl_gradient(params, state.ref_params, obs_batch)
        content -= cfg.kl_beta * kl_grad.content
        fmt -= cfg.kl_beta * kl_grad.format
    if not (np.isfinite(content).all() and np.isfinite(fmt).all() and math.isfinite(objective)):
        raise NumericalFault("non-finite GRPO objective or gradient")
    return objective, PolicyParams(content, fmt)


def collect_rollouts(
    params: PolicyParams,
    studies: Sequence[Study],
    cfg: GRPOConfig,
    rng: np.random.Generator,
    lex: Lexicon | None = None,
) -> list[GroupRollout]:
    """Observe each study, sample a group from ``params``, score and normalize it."""
    lex = lex or default_lexicon()
    rollouts = []
    for study in studies:
        obs = observe(study.signed_truth, cfg.noise, rng)
        cands = tuple(sample_candidate(params, obs, rng, lex) for _ in range(cfg.group_size))
        try:
            rewards = tuple(
                score_candidate(c.text, study.truth, study.reference_text, cfg.reward_arm, cfg.margin, cfg.weights, lex)
                for c in cands
            )
        except Exception as exc:
            raise RewardError(f"reward arm {cfg.reward_arm!r} failed on study {study.id}: {exc}") from exc
        adv = group_advantages([r.total for r in rewards], cfg.adv_eps)
        rollouts.append(GroupRollout(study.id, obs, cands, rewards, adv))
    return rollouts


def step_rng(cfg: GRPOConfig, step: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, 1, step])


def train_step(
    state: TrainState, study_batch: Sequence[Study], cfg: GRPOConfig, lex: Lexicon | None = None
) -> TrainState:
    if not study_batch:
        raise ConfigurationError("study batch is empty")
    old = state.params
    sampling = replace(state, old_params=old)
    rollouts = collect_rollouts(old, study_batch, cfg, step_rng(cfg, state.step), lex)
    objective, grad = grpo_loss_and_grad(sampling, rollouts, cfg)
    new_params = old + grad.scale(cfg.learning_rate)
    rewards = [r for ro in rollouts for r in ro.rewards]
    record = {
        "step": state.step,
        "mean_reward": float(np.mean([r.total for r in rewards])),
        "mean_mccs": float(np.mean([r.components["mccs"] for r in rewards])),
        "format_rate": float(np.mean([r.components["format"] == 1.0 for r in rewards])),
        "kl": policy_kl(old, state.ref_params, [ro.observation for ro in rollouts]),
    }
    return TrainState(new_params, old, state.ref_params, state.step + 1, state.history + [record])


def train_run(
    cfg: GRPOConfig,
    corpus: Sequence[Study],
    init: PolicyParams | None = None,
    lex: Lexicon | None = None,
) -> tuple[PolicyParams, list[dict]]:
    """Run ``cfg.steps`` GRPO steps over shuffled mini-batches of ``corpus``."""
    if not corpus:
        raise ConfigurationError("training corpus is empty")
    lex = lex or default_lexicon()
    state = TrainState.initial(init)
    shuffle_rng = np.random.default_rng([cfg.seed, 2])
    order: list[int] = []
    for step in range(cfg.steps):
        batch = []
        while len(batch) < min(cfg.batch_size, len(corpus)):
            if not order:
                order = list(shuffle_rng.permutation(len(corpus)))
            batch.append(corpus[order.pop()])
        state = train_step(state, batch, cfg, lex)
        if step % 500 == 0:
            log.debug("step %d mean reward %.4f", step, state.history[-1]["mean_reward"])
    return state.params, state.history
