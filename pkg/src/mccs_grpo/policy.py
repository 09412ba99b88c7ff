"""Tabular report-generation policy.

For each of the 13 diseases the policy sees a noisy observation (present,
absent, unseen) and picks an assertion action from a softmax over four
logits indexed by ``(finding, observed state)``. A separate four-way head
picks the output layout. Actions are rendered to text through fixed
sentence templates, so every probability, KL and gradient is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, NumericalFault, StructuralError
from .labeler import Lexicon, default_lexicon
from .labels import N_DISEASES

PARAMS_VERSION = 1
N_STATES = 3
N_ACTIONS = 4
N_VARIANTS = 4
# Observed-state rows: present (+1), absent (-1), unseen (0).
STATE_VALUES = (1, -1, 0)
_STATE_ROW = {1: 0, -1: 1, 0: 2}


class Action(str, Enum):
    AFFIRM = "affirm"
    NEGATE = "negate"
    HEDGE = "hedge"
    OMIT = "omit"


class FormatVariant(str, Enum):
    COMPLIANT = "compliant"
    EMPTY_THINK = "empty_think"
    MISSING_THINK = "missing_think"
    SWAPPED_ORDER = "swapped_order"


ACTIONS: tuple[Action, ...] = tuple(Action)
VARIANTS: tuple[FormatVariant, ...] = tuple(FormatVariant)
ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}
VARIANT_INDEX = {v: i for i, v in enumerate(VARIANTS)}
NO_FINDINGS_SENTENCE = "No acute cardiopulmonary process."

_TEMPLATES = {
    Action.AFFIRM: "There is {}.",
    Action.NEGATE: "No {}.",
    Action.HEDGE: "Possible {}.",
}


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(_log_softmax(np.asarray(logits, dtype=float)))


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """Content logits of shape (13, 3, 4) and format logits of shape (4,)."""

    content: np.ndarray
    format: np.ndarray

    def __post_init__(self):
        content = np.array(self.content, dtype=float)
        fmt = np.array(self.format, dtype=float)
        if content.shape != (N_DISEASES, N_STATES, N_ACTIONS) or fmt.shape != (N_VARIANTS,):
            raise StructuralError(
                f"bad parameter shapes {content.shape} and {fmt.shape}"
            )
        if not (np.isfinite(content).all() and np.isfinite(fmt).all()):
            raise NumericalFault("policy parameters must be finite")
        content.setflags(write=False)
        fmt.setflags(write=False)
        object.__setattr__(self, "content", content)
        object.__setattr__(self, "format", fmt)

    @classmethod
    def zeros(cls) -> "PolicyParams":
        return cls(np.zeros((N_DISEASES, N_STATES, N_ACTIONS)), np.zeros(N_VARIANTS))

    @property
    def size(self) -> int:
        return self.content.size + self.format.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.content.ravel(), self.format])

    @classmethod
    def from_flat(cls, vec: np.ndarray) -> "PolicyParams":
        vec = np.asarray(vec, dtype=float)
        n = N_DISEASES * N_STATES * N_ACTIONS
        return cls(vec[:n].reshape(N_DISEASES, N_STATES, N_ACTIONS), vec[n:])

    def __add__(self, other: "PolicyParams") -> "PolicyParams":
        return PolicyParams(self.content + other.content, self.format + other.format)

    def __sub__(self, other: "PolicyParams") -> "PolicyParams":
        return PolicyParams(self.content - other.content, self.format - other.format)

    def scale(self, c: float) -> "PolicyParams":
        return PolicyParams(self.content * c, self.format * c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolicyParams):
            return NotImplemented
        return np.array_equal(self.content, other.content) and np.array_equal(self.format, other.format)

    def to_json(self) -> dict:
        return {
            "version": PARAMS_VERSION,
            "content_logits": self.content.tolist(),
            "format_logits": self.format.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PolicyParams":
        if doc.get("version") != PARAMS_VERSION:
            raise StructuralError(f"unsupported params version {doc.get('version')!r}")
        return cls(np.array(doc["content_logits"]), np.array(doc["format_logits"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PolicyParams":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class Candidate:
    actions: tuple[Action, ...]
    variant: FormatVariant
    text: str
    logprob: float


def state_rows(obs: Sequence[int]) -> np.ndarray:
    """Map observed values (+1, -1, 0) to their row index in the content table."""
    try:
        rows = np.array([_STATE_ROW[int(v)] for v in obs])
    except KeyError:
        raise StructuralError(f"observation entries must be in {{+1, -1, 0}}: {list(obs)}") from None
    if rows.shape != (N_DISEASES,):
        raise StructuralError(f"observation must have {N_DISEASES} entries")
    return rows


def observe(truth: Sequence[float], noise_rate: float, rng_seed=None) -> np.ndarray:
    """Noisy view of the signed truth: each entry is replaced, with probability
    ``noise_rate``, by one of the two other values chosen uniformly."""
    if not 0.0 <= noise_rate < 1.0:
        raise ConfigurationError(f"noise rate must lie in [0, 1), got {noise_rate}")
    truth = np.asarray(truth, dtype=int)
    state_rows(truth)
    rng = _as_rng(rng_seed)
    flip = rng.random(truth.shape) < noise_rate
    shift = rng.integers(1, 3, size=truth.shape)
    # Values -1, 0, +1 sit on a 3-cycle; a shift of 1 or 2 lands on one of the others.
    corrupted = (truth + 1 + shift) % 3 - 1
    return np.where(flip, corrupted, truth)


def content_logprobs(params: PolicyParams, obs: Sequence[int]) -> np.ndarray:
    """(13, 4) array of log action probabilities at each finding's observed state."""
    rows = state_rows(obs)
    return _log_softmax(params.content[np.arange(N_DISEASES), rows])


def policy_distribution(params: PolicyParams, obs: Sequence[int], finding: int) -> np.ndarray:
    if not 0 <= finding < N_DISEASES:
        raise ConfigurationError(f"finding index must be in [0, {N_DISEASES - 1}]")
    row = state_rows(obs)[finding]
    return softmax(params.content[finding, row])


def format_distribution(params: PolicyParams) -> np.ndarray:
    return softmax(params.format)


def render_findings(actions: Sequence[Action], lex: Lexicon | None = None) -> str:
    """Report sentences in finding order; empty when every action is omit."""
    lex = lex or default_lexicon()
    return " ".join(
        _TEMPLATES[a].format(lex.phrase(f)) for f, a in enumerate(map(Action, actions)) if a is not Action.OMIT
    )


def render_candidate(
    actions: Sequence[Action], variant: FormatVariant, lex: Lexicon | None = None
) -> str:
    lex = lex or default_lexicon()
    actions = tuple(Action(a) for a in actions)
    if len(actions) != N_DISEASES:
        raise StructuralError(f"expected {N_DISEASES} actions, got {len(actions)}")
    body = render_findings(actions, lex) or NO_FINDINGS_SENTENCE
    asserted = [lex.phrase(f) for f, a in enumerate(actions) if a is not Action.OMIT]
    stub = "Findings considered: " + (", ".join(asserted) if asserted else "none") + "."
    report = f"<report>{body}</report>"
    variant = FormatVariant(variant)
    if variant is FormatVariant.COMPLIANT:
        return f"<think>{stub}</think>\n{report}"
    if variant is FormatVariant.EMPTY_THINK:
        return f"<think></think>\n{report}"
    if variant is FormatVariant.MISSING_THINK:
        return report
    return f"{report}\n<think>{stub}</think>"


def _indices(actions: Sequence[Action], variant: FormatVariant) -> tuple[np.ndarray, int]:
    idx = np.array([ACTION_INDEX[Action(a)] for a in actions])
    if idx.shape != (N_DISEASES,):
        raise StructuralError(f"expected {N_DISEASES} actions")
    return idx, VARIANT_INDEX[FormatVariant(variant)]


def candidate_logprob(
    params: PolicyParams, obs: Sequence[int], actions: Sequence[Action], variant: FormatVariant
) -> float:
    a_idx, v_idx = _indices(actions, variant)
    lp = content_logprobs(params, obs)[np.arange(N_DISEASES), a_idx].sum()
    return float(lp + _log_softmax(params.format)[v_idx])


def _categorical(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws, one per row of ``probs``."""
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1] + (1,))
    return np.minimum((cdf < u * cdf[..., -1:]).sum(axis=-1), probs.shape[-1] - 1)


def sample_candidate(
    params: PolicyParams, obs: Sequence[int], rng_seed=None, lex: Lexicon | None = None
) -> Candidate:
    rng = _as_rng(rng_seed)
    logp = content_logprobs(params, obs)
    log_fmt = _log_softmax(params.format)
    a_idx = _categorical(rng, np.exp(logp))
    v_idx = int(_categorical(rng, np.exp(log_fmt)))
    actions = tuple(ACTIONS[i] for i in a_idx)
    variant = VARIANTS[v_idx]
    lp = float(logp[np.arange(N_DISEASES), a_idx].sum() + log_fmt[v_idx])
    return Candidate(actions, variant, render_candidate(actions, variant, lex), lp)


def _categorical_kl(log_p: np.ndarray, log_q: np.ndarray) -> np.ndarray:
    return (np.exp(log_p) * (log_p - log_q)).sum(axis=-1)


def policy_kl(params_new: PolicyParams, params_ref: PolicyParams, obs_batch: Sequence[Sequence[int]]) -> float:
    """Exact KL(new || ref) between candidate distributions, averaged over observations."""
    if len(obs_batch) == 0:
        raise ConfigurationError("policy_kl needs at least one observation")
    fmt_kl = _categorical_kl(_log_softmax(params_new.format), _log_softmax(params_ref.format))
    total = 0.0
    for obs in obs_batch:
        total += _categorical_kl(content_logprobs(params_new, obs), content_logprobs(params_ref, obs)).sum()
    return max(float(total / len(obs_batch) + fmt_kl), 0.0)


def kl_gradient(params_new: PolicyParams, params_ref: PolicyParams, obs_batch: Sequence[Sequence[int]]) -> PolicyParams:
    """Gradient of :func:`policy_kl` with respect to ``params_new``."""
    if len(obs_batch) == 0:
        raise ConfigurationError("kl_gradient needs at least one observation")

    def row_grad(log_p, log_q):
        diff = log_p - log_q
        p = np.exp(log_p)
        return p * (diff - (p * diff).sum(axis=-1, keepdims=True))

    content = np.zeros_like(params_new.content)
    findings = np.arange(N_DISEASES)
    for obs in obs_batch:
        rows = state_rows(obs)
        g = row_grad(
            _log_softmax(params_new.content[findings, rows]),
            _log_softmax(params_ref.content[findings, rows]),
        )
        content[findings, rows] += g / len(obs_batch)
    fmt = row_grad(_log_softmax(params_new.format), _log_softmax(params_ref.format))
    return PolicyParams(content, fmt)


def logprob_gradient(
    params: PolicyParams, obs: Sequence[int], actions: Sequence[Action], variant: FormatVariant
) -> PolicyParams:
    """Exact gradient of :func:`candidate_logprob` with respect to all logits."""
    a_idx, v_idx = _indices(actions, variant)
    rows = state_rows(obs)
    findings = np.arange(N_DISEASES)
    content = np.zeros_like(params.content)
    content[findings, rows] = -np.exp(content_logprobs(params, obs))
    content[findings, rows, a_idx] += 1.0
    fmt = -softmax(params.format)
    fmt[v_idx] += 1.0
    return PolicyParams(content, fmt)
