"""Best deterministic per-finding action map, found by exhaustive enumeration.

Findings are i.i.d. under the synthetic generator and the observation
channel, and both MCCS and report-level CE-F1 depend on a report only
through a handful of per-finding cell counts. The expected reward of a map
``observed state -> action`` is therefore an exact finite sum over the
multinomial distribution of those counts, and the best map is found by
trying every one.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .corpus import DEFAULT_PREVALENCE
from .errors import ConfigurationError
from .labels import N_DISEASES
from .policy import ACTION_INDEX, N_ACTIONS, N_STATES, N_VARIANTS, STATE_VALUES, VARIANT_INDEX, Action, FormatVariant, PolicyParams
from .rewards import CCS_EPS, DEFAULT_WEIGHTS, Margin, arm_weights

_SIGNED_ACTION = {Action.AFFIRM: 1, Action.HEDGE: 1, Action.NEGATE: -1, Action.OMIT: 0}
# One representative per signed value; hedge scores identically to affirm.
_CHOICES = (Action.AFFIRM, Action.NEGATE, Action.OMIT)
IDENTITY_MAP = {1: Action.AFFIRM, -1: Action.NEGATE, 0: Action.OMIT}


@dataclass(frozen=True)
class OracleResult:
    action_map: Mapping[int, Action]
    variant: FormatVariant
    expected_clinical: float
    expected_reward: float

    def per_finding(self) -> list[dict[int, Action]]:
        return [dict(self.action_map) for _ in range(N_DISEASES)]


@lru_cache(maxsize=None)
def _compositions(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """All k-cell count vectors summing to n, with their log multinomial coefficients."""
    rows = []
    for bars in itertools.combinations(range(n + k - 1), k - 1):
        edges = (-1,) + bars + (n + k - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    counts = np.array(rows)
    log_coef = math.lgamma(n + 1) - np.vectorize(lambda c: math.lgamma(c + 1))(counts).sum(axis=1)
    return counts, log_coef


def _joint(noise: float, prevalence: float, action_map: Mapping[int, Action]) -> dict[tuple[int, int], float]:
    """P(truth value, generated value) for a single finding."""
    prior = {1: prevalence, -1: (1 - prevalence) / 2, 0: (1 - prevalence) / 2}
    cells: dict[tuple[int, int], float] = {}
    for t, pt in prior.items():
        for o in STATE_VALUES:
            po = 1 - noise if o == t else noise / 2
            g = _SIGNED_ACTION[Action(action_map[o])]
            cells[(t, g)] = cells.get((t, g), 0.0) + pt * po
    return cells


def _expectation(cell_probs: list[float], score) -> float:
    counts, log_coef = _compositions(N_DISEASES, len(cell_probs))
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = np.log(np.asarray(cell_probs))
        logw = log_coef + np.where(counts > 0, counts * log_p, 0.0).sum(axis=1)
    return float(np.exp(logw) @ score(counts.T))


def _expected_mccs(cells, margin: float) -> float:
    same = sum(p for (t, g), p in cells.items() if t != 0 and g == t)
    opp = sum(p for (t, g), p in cells.items() if t != 0 and g == -t)
    g_only = sum(p for (t, g), p in cells.items() if t == 0 and g != 0)
    t_only = sum(p for (t, g), p in cells.items() if t != 0 and g == 0)
    none = cells.get((0, 0), 0.0)

    def score(c):
        s, o, go, to, _ = c
        cos = (s - o) / ((np.sqrt(s + o + go) + CCS_EPS) * (np.sqrt(s + o + to) + CCS_EPS))
        return np.maximum((cos - margin) / (1 - margin), 0.0)

    return _expectation([same, opp, g_only, t_only, none], score)


def _expected_ce_f1(cells) -> float:
    tp = sum(p for (t, g), p in cells.items() if t == 1 and g == 1)
    fp = sum(p for (t, g), p in cells.items() if t != 1 and g == 1)
    fn = sum(p for (t, g), p in cells.items() if t == 1 and g != 1)
    tn = 1.0 - tp - fp - fn

    def score(c):
        a, b, d, _ = c
        truth_any, gen_any = (a + d) > 0, (a + b) > 0
        tp_all = a + (~truth_any & ~gen_any)
        fp_all = b + (~gen_any & truth_any)
        fn_all = d + (gen_any & ~truth_any)
        denom = 2 * tp_all + fp_all + fn_all
        return np.where(tp_all > 0, 2 * tp_all / np.maximum(denom, 1), 0.0)

    return _expectation([tp, fp, fn, max(tn, 0.0)], score)


def expected_reward(
    action_map: Mapping[int, Action],
    noise: float,
    margin: float,
    reward_arm: str,
    prevalence: float = DEFAULT_PREVALENCE,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    variant: FormatVariant = FormatVariant.COMPLIANT,
) -> tuple[float, float]:
    """(expected clinical term, expected total reward) of a deterministic map."""
    if not 0 <= noise < 1:
        raise ConfigurationError("noise must lie in [0, 1)")
    margin = Margin(margin).m
    w_clin, w_fmt = arm_weights(reward_arm, weights)
    cells = _joint(noise, prevalence, action_map)
    if reward_arm.startswith("mccs"):
        clinical = _expected_mccs(cells, margin)
    elif reward_arm.startswith("ce_f1"):
        clinical = _expected_ce_f1(cells)
    elif reward_arm == "format_only":
        clinical = 0.0
    else:
        raise ConfigurationError(f"reward arm {reward_arm!r} has no count-sufficient oracle")
    fmt = 1.0 if FormatVariant(variant) is FormatVariant.COMPLIANT else {
        FormatVariant.EMPTY_THINK: 0.5
    }.get(FormatVariant(variant), 0.0)
    return clinical, w_clin * clinical + w_fmt * fmt


def oracle_policy(
    noise: float,
    margin: float,
    reward_arm: str,
    prevalence: float = DEFAULT_PREVALENCE,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
) -> OracleResult:
    """Exhaustively search the 27 signed maps; ties keep the earliest (identity first)."""
    best = None
    candidates = [IDENTITY_MAP] + [
        dict(zip(STATE_VALUES, combo)) for combo in itertools.product(_CHOICES, repeat=N_STATES)
    ]
    for action_map in candidates:
        clinical, total = expected_reward(action_map, noise, margin, reward_arm, prevalence, weights)
        if best is None or total > best.expected_reward + 1e-12:
            best = OracleResult(dict(action_map), FormatVariant.COMPLIANT, clinical, total)
    return best


def oracle_params(result: OracleResult, scale: float = 50.0) -> PolicyParams:
    """Near-deterministic logits (+scale on the chosen cell, -scale elsewhere)."""
    content = np.full((N_DISEASES, N_STATES, N_ACTIONS), -scale)
    for row, value in enumerate(STATE_VALUES):
        content[:, row, ACTION_INDEX[Action(result.action_map[value])]] = scale
    fmt = np.full(N_VARIANTS, -scale)
    fmt[VARIANT_INDEX[result.variant]] = scale
    return PolicyParams(content, fmt)
