"""Report-level rewards: margin cosine agreement, format, CE-F1, NLG, and their weighted sum."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError
from .labeler import Lexicon, label_report
from .labels import LabelState, LabelVector, label_vector, to_signed_vector
from .nlg import nlg_score
from .sections import FormatCheck, extract_sections

__all__ = [
    "ARMS",
    "DEFAULT_MARGIN",
    "FormatCheck",
    "Margin",
    "RewardBreakdown",
    "arm_weights",
    "ccs",
    "ce_f1_reward",
    "extract_sections",
    "format_reward",
    "mccs",
    "nlg_reward",
    "score_candidate",
    "total_reward",
]

CCS_EPS = 1e-8
DEFAULT_MARGIN = 0.2
DEFAULT_WEIGHTS = (0.75, 0.25)
ARMS = ("mccs", "mccs+format", "ce_f1", "ce_f1+format", "format_only", "nlg")
_POSITIVE = (LabelState.POSITIVE, LabelState.UNCERTAIN)


@dataclass(frozen=True)
class Margin:
    m: float = DEFAULT_MARGIN

    def __post_init__(self):
        if not -1.0 < self.m < 1.0:
            raise ConfigurationError(f"margin must lie in (-1, 1), got {self.m}")


@dataclass(frozen=True)
class RewardBreakdown:
    clinical: float
    format: float
    total: float
    components: Mapping[str, float] = field(default_factory=dict)


def ccs(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (13,) or b.shape != (13,):
        raise ConfigurationError("signed vectors must have length 13")
    return float(a @ b) / ((math.sqrt(a @ a) + CCS_EPS) * (math.sqrt(b @ b) + CCS_EPS))


def mccs(a: Sequence[float], b: Sequence[float], m: Margin | float = DEFAULT_MARGIN) -> float:
    m = m.m if isinstance(m, Margin) else Margin(m).m
    return max((ccs(a, b) - m) / (1 - m), 0.0)


def format_reward(text: str | FormatCheck) -> float:
    check = text if isinstance(text, FormatCheck) else extract_sections(text)[0]
    if all(check.flags()):
        return 1.0
    structural = (check.has_think, check.has_report, check.ordered, check.balanced, check.report_nonempty)
    minor_failures = (not check.think_nonempty) + (not check.no_stray_text)
    if all(structural) and minor_failures == 1:
        return 0.5
    return 0.0


def ce_f1_reward(gen: Sequence[LabelState | str], ref: Sequence[LabelState | str]) -> float:
    """Per-report F1 over the 14 labels, uncertain counted as positive."""
    gen, ref = label_vector(gen), label_vector(ref)
    tp = fp = fn = 0
    for g, r in zip(gen, ref):
        gp, rp = g in _POSITIVE, r in _POSITIVE
        tp += gp and rp
        fp += gp and not rp
        fn += rp and not gp
    if tp == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def nlg_reward(candidate: str, reference: str) -> float:
    """Mean of BLEU-4 and ROUGE-L between the report bodies of two texts."""
    return nlg_score(extract_sections(candidate)[2], extract_sections(reference)[2])[0]


def total_reward(
    clinical: float,
    format: float,
    w_clinical: float = DEFAULT_WEIGHTS[0],
    w_format: float = DEFAULT_WEIGHTS[1],
    components: Mapping[str, float] | None = None,
) -> RewardBreakdown:
    if w_clinical < 0 or w_format < 0 or abs(w_clinical + w_format - 1.0) > 1e-12:
        raise ConfigurationError(
            f"reward weights must be non-negative and sum to 1, got {w_clinical}, {w_format}"
        )
    return RewardBreakdown(
        clinical=clinical,
        format=format,
        total=w_clinical * clinical + w_format * format,
        components=dict(components or {}),
    )


def arm_weights(arm: str, weights: tuple[float, float] = DEFAULT_WEIGHTS) -> tuple[float, float]:
    """(w_clinical, w_format) actually applied by a reward arm."""
    if arm not in ARMS:
        raise ConfigurationError(f"unknown reward arm {arm!r}; expected one of {ARMS}")
    if arm.endswith("+format"):
        return weights
    if arm == "format_only":
        return 0.0, 1.0
    return 1.0, 0.0


def score_candidate(
    text: str,
    ref_labels: LabelVector,
    reference_text: str,
    arm: str = "mccs+format",
    margin: float = DEFAULT_MARGIN,
    weights: tuple[float, float] = DEFAULT_WEIGHTS,
    lex: Lexicon | None = None,
) -> RewardBreakdown:
    """Score one generated text against a reference under ``arm``.

    ``components`` always carries ccs, mccs, ce_f1 and format so training
    metrics are comparable across arms; nlg is only computed when needed.
    """
    w_clin, w_fmt = arm_weights(arm, weights)
    check, _, body = extract_sections(text)
    gen_labels = label_report(text, lex)
    z_gen, z_ref = to_signed_vector(gen_labels), to_signed_vector(ref_labels)
    c = ccs(z_gen, z_ref)
    m = Margin(margin).m
    shaped = max((c - m) / (1 - m), 0.0)
    f1 = ce_f1_reward(gen_labels, ref_labels)
    fmt = format_reward(check)
    components = {"ccs": c, "mccs": shaped, "ce_f1": f1, "format": fmt}
    if arm.startswith("mccs"):
        clinical = shaped
    elif arm.startswith("ce_f1"):
        clinical = f1
    elif arm == "nlg":
        clinical, bleu, rouge = nlg_score(body, extract_sections(reference_text)[2])
        components.update(nlg=clinical, bleu4=bleu, rouge_l=rouge)
    else:
        clinical = 0.0
    return total_reward(clinical, fmt, w_clin, w_fmt, components)
