"""The 14-observation chest X-ray label space and its signed encoding.

Observation order follows the CheXbert label list, with "No Finding" last.
Every other module indexes observations through :data:`OBSERVATIONS`.
"""

from __future__ import annotations

from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import StructuralError

OBSERVATIONS: tuple[str, ...] = (
    "Enlarged Cardiomediastinum",
    "Cardiomegaly",
    "Lung Opacity",
    "Lung Lesion",
    "Edema",
    "Consolidation",
    "Pneumonia",
    "Atelectasis",
    "Pneumothorax",
    "Pleural Effusion",
    "Pleural Other",
    "Fracture",
    "Support Devices",
    "No Finding",
)
N_OBSERVATIONS = len(OBSERVATIONS)
N_DISEASES = N_OBSERVATIONS - 1
NO_FINDING = N_OBSERVATIONS - 1
DISEASES: tuple[str, ...] = OBSERVATIONS[:NO_FINDING]
OBSERVATION_INDEX: dict[str, int] = {name: i for i, name in enumerate(OBSERVATIONS)}


class LabelState(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNCERTAIN = "uncertain"
    BLANK = "blank"


# Uncertain maps to +1: a hedged mention counts as a suspected abnormality.
_SIGNED = {
    LabelState.POSITIVE: 1,
    LabelState.NEGATIVE: -1,
    LabelState.UNCERTAIN: 1,
    LabelState.BLANK: 0,
}

LabelVector = tuple[LabelState, ...]


def signed_value(state: LabelState) -> int:
    return _SIGNED[LabelState(state)]


def label_vector(states: Iterable[LabelState | str]) -> LabelVector:
    """Validate and normalize a sequence of 14 states (enum members or their strings)."""
    try:
        out = tuple(LabelState(s) for s in states)
    except ValueError as exc:
        raise StructuralError(str(exc)) from None
    if len(out) != N_OBSERVATIONS:
        raise StructuralError(
            f"label vector must have {N_OBSERVATIONS} entries, got {len(out)}"
        )
    return out


def to_signed_vector(labels: Sequence[LabelState | str]) -> np.ndarray:
    """Signed 13-vector over the disease observations; No Finding is dropped."""
    labels = label_vector(labels)
    return np.array([_SIGNED[s] for s in labels[:NO_FINDING]], dtype=float)


def derive_no_finding(disease_states: Sequence[LabelState | str]) -> LabelState:
    """Positive when no disease is asserted or suspected, blank otherwise.

    Negative entries count as "no finding" just like blank ones.
    """
    if len(disease_states) != N_DISEASES:
        raise StructuralError(
            f"expected {N_DISEASES} disease states, got {len(disease_states)}"
        )
    quiet = (LabelState.BLANK, LabelState.NEGATIVE)
    if all(LabelState(s) in quiet for s in disease_states):
        return LabelState.POSITIVE
    return LabelState.BLANK


def with_no_finding(disease_states: Sequence[LabelState | str]) -> LabelVector:
    """Complete 13 disease states into a 14-vector with the derived No Finding entry."""
    diseases = tuple(LabelState(s) for s in disease_states)
    return diseases + (derive_no_finding(diseases),)


def dump_labels(labels: Sequence[LabelState]) -> list[str]:
    return [LabelState(s).value for s in labels]
