"""Synthetic studies: ground-truth labels plus a rendered reference report."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, StructuralError
from .labeler import Lexicon, label_report
from .labels import N_DISEASES, LabelState, LabelVector, dump_labels, label_vector, to_signed_vector, with_no_finding
from .policy import Action, render_findings

GENERATOR_VERSION = 1
DEFAULT_PREVALENCE = 0.3
DEFAULT_UNCERTAIN_FRAC = 0.15

_STATE_TO_ACTION = {
    LabelState.POSITIVE: Action.AFFIRM,
    LabelState.NEGATIVE: Action.NEGATE,
    LabelState.UNCERTAIN: Action.HEDGE,
    LabelState.BLANK: Action.OMIT,
}


@dataclass(frozen=True)
class Study:
    id: str
    truth: LabelVector
    reference_text: str
    signed_truth: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        truth = label_vector(self.truth)
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "signed_truth", to_signed_vector(truth))

    def to_json(self) -> dict:
        return {"id": self.id, "truth": dump_labels(self.truth), "reference": self.reference_text}

    @classmethod
    def from_json(cls, doc: dict) -> "Study":
        try:
            return cls(doc["id"], doc["truth"], doc["reference"])
        except KeyError as exc:
            raise StructuralError(f"study record is missing {exc.args[0]!r}") from None

    @property
    def seed_key(self) -> int:
        """Stable integer derived from the id, used to seed per-study randomness."""
        return zlib.crc32(self.id.encode("utf-8"))


def render_reference(truth: Sequence[LabelState | str], lex: Lexicon | None = None) -> str:
    """Plain-prose reference report using the policy's sentence templates."""
    truth = label_vector(truth)
    return render_findings([_STATE_TO_ACTION[s] for s in truth[:N_DISEASES]], lex)


def _check_rates(prevalence: float, uncertain_frac: float) -> None:
    if not 0.0 < prevalence < 1.0:
        raise ConfigurationError(f"prevalence must lie in (0, 1), got {prevalence}")
    if not 0.0 <= uncertain_frac < 1.0:
        raise ConfigurationError(f"uncertain_frac must lie in [0, 1), got {uncertain_frac}")


def sample_study(
    rng_seed,
    prevalence: float = DEFAULT_PREVALENCE,
    uncertain_frac: float = DEFAULT_UNCERTAIN_FRAC,
    study_id: str = "study",
    lex: Lexicon | None = None,
) -> Study:
    _check_rates(prevalence, uncertain_frac)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    p_pos = prevalence * (1 - uncertain_frac)
    p_unc = prevalence * uncertain_frac
    half = (1 - prevalence) / 2
    draws = rng.choice(4, size=N_DISEASES, p=[p_pos, p_unc, half, half])
    order = (LabelState.POSITIVE, LabelState.UNCERTAIN, LabelState.NEGATIVE, LabelState.BLANK)
    truth = with_no_finding([order[d] for d in draws])
    return Study(study_id, truth, render_reference(truth, lex))


def check_study(study: Study, lex: Lexicon | None = None) -> None:
    """Raise unless the reference text re-labels to the study's truth."""
    if label_report(study.reference_text, lex) != study.truth:
        raise StructuralError(f"study {study.id!r}: reference text does not reproduce its labels")


def make_corpus(
    n: int,
    seed: int = 0,
    prevalence: float = DEFAULT_PREVALENCE,
    uncertain_frac: float = DEFAULT_UNCERTAIN_FRAC,
    prefix: str = "study",
    lex: Lexicon | None = None,
) -> list[Study]:
    if n < 1:
        raise ConfigurationError("corpus size must be at least 1")
    stream = zlib.crc32(prefix.encode("utf-8"))
    studies = []
    for i in range(n):
        study = sample_study(
            np.random.default_rng([seed, stream, i]), prevalence, uncertain_frac, f"{prefix}-{i:05d}", lex
        )
        check_study(study, lex)
        studies.append(study)
    return studies


def write_corpus(path: str | Path, studies: Iterable[Study], manifest: dict) -> None:
    lines = [json.dumps({"manifest": manifest})]
    lines += [json.dumps(s.to_json()) for s in studies]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def generate_corpus(
    n: int,
    path: str | Path,
    seed: int = 0,
    prevalence: float = DEFAULT_PREVALENCE,
    uncertain_frac: float = DEFAULT_UNCERTAIN_FRAC,
    prefix: str = "study",
) -> list[Study]:
    studies = make_corpus(n, seed, prevalence, uncertain_frac, prefix)
    manifest = {
        "generator": "mccs_grpo.corpus",
        "version": GENERATOR_VERSION,
        "seed": seed,
        "n": n,
        "prevalence": prevalence,
        "uncertain_frac": uncertain_frac,
    }
    write_corpus(path, studies, manifest)
    return studies


def load_corpus(path: str | Path, lex: Lexicon | None = None) -> tuple[dict, list[Study]]:
    """Read a JSONL corpus; returns (manifest, studies). Every study is re-validated."""
    manifest: dict = {}
    studies = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StructuralError(f"{path}:{lineno}: {exc}") from None
            if "manifest" in doc:
                manifest = doc["manifest"]
                continue
            study = Study.from_json(doc)
            check_study(study, lex)
            studies.append(study)
    if not studies:
        raise StructuralError(f"{path}: corpus has no studies")
    return manifest, studies
