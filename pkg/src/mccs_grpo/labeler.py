"""Rule-based report labeler standing in for CheXbert.

Trigger phrases identify observations; a negation cue earlier in the same
statement marks the mention negative, otherwise any hedging cue in the
statement marks it uncertain. Mentions across statements are merged with
priority positive > uncertain > negative.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigurationError
from .labels import DISEASES, NO_FINDING, OBSERVATION_INDEX, LabelState, LabelVector, with_no_finding
from .sections import extract_sections

_TERMINATORS = re.compile(r"[.!?\n]")
_PRIORITY = {LabelState.POSITIVE: 3, LabelState.UNCERTAIN: 2, LabelState.NEGATIVE: 1}


def _phrase_pattern(phrases: Sequence[str]) -> re.Pattern:
    ordered = sorted(phrases, key=len, reverse=True)
    body = "|".join(r"\s+".join(map(re.escape, p.split())) for p in ordered)
    return re.compile(rf"\b(?:{body})\b")


@dataclass(frozen=True)
class Statement:
    text: str
    index: int


@dataclass(frozen=True)
class Lexicon:
    triggers: Mapping[str, tuple[str, ...]]
    negation_cues: tuple[str, ...]
    hedging_cues: tuple[str, ...]
    _trigger_re: re.Pattern = field(init=False, repr=False, compare=False)
    _trigger_owner: dict = field(init=False, repr=False, compare=False)
    _negation_re: re.Pattern = field(init=False, repr=False, compare=False)
    _hedging_re: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        triggers = {name: tuple(p.lower() for p in phrases) for name, phrases in self.triggers.items()}
        unknown = set(triggers) - set(DISEASES)
        if unknown:
            raise ConfigurationError(f"unknown observations in lexicon: {sorted(unknown)}")
        owner: dict[str, int] = {}
        for name in DISEASES:
            phrases = triggers.get(name, ())
            if not phrases:
                raise ConfigurationError(f"observation {name!r} has no trigger phrase")
            for phrase in phrases:
                key = " ".join(phrase.split())
                if key in owner:
                    raise ConfigurationError(f"trigger {phrase!r} is used more than once")
                owner[key] = OBSERVATION_INDEX[name]
        if not self.negation_cues or not self.hedging_cues:
            raise ConfigurationError("lexicon needs negation and hedging cues")
        object.__setattr__(self, "triggers", triggers)
        object.__setattr__(self, "negation_cues", tuple(c.lower() for c in self.negation_cues))
        object.__setattr__(self, "hedging_cues", tuple(c.lower() for c in self.hedging_cues))
        object.__setattr__(self, "_trigger_owner", owner)
        object.__setattr__(self, "_trigger_re", _phrase_pattern(list(owner)))
        object.__setattr__(self, "_negation_re", _phrase_pattern(self.negation_cues))
        object.__setattr__(self, "_hedging_re", _phrase_pattern(self.hedging_cues))

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Lexicon":
        doc = dict(doc)
        try:
            negation = tuple(doc.pop("negation_cues"))
            hedging = tuple(doc.pop("hedging_cues"))
        except KeyError as exc:
            raise ConfigurationError(f"lexicon is missing {exc.args[0]!r}") from None
        return cls({k: tuple(v) for k, v in doc.items()}, negation, hedging)

    @classmethod
    def from_json(cls, path: str | Path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        doc = {name: list(self.triggers[name]) for name in DISEASES}
        doc["negation_cues"] = list(self.negation_cues)
        doc["hedging_cues"] = list(self.hedging_cues)
        return doc

    def phrase(self, index: int) -> str:
        """Surface phrase used when rendering observation ``index``."""
        return self.triggers[DISEASES[index]][0]


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    text = resources.files("mccs_grpo").joinpath("data/lexicon.json").read_text(encoding="utf-8")
    return Lexicon.from_dict(json.loads(text))


def split_statements(report_text: str) -> list[Statement]:
    """Split the report body (think sections excluded) into trimmed sentences."""
    _, _, body = extract_sections(report_text)
    pieces = (p.strip() for p in _TERMINATORS.split(body))
    return [Statement(p, i) for i, p in enumerate(p for p in pieces if p)]


def classify_statement(s: Statement, lex: Lexicon | None = None) -> list[tuple[int, LabelState]]:
    """Return (observation index, state) for each observation mentioned in ``s``."""
    lex = lex or default_lexicon()
    text = s.text.lower()
    hits = list(lex._trigger_re.finditer(text))
    if not hits:
        return []
    neg = lex._negation_re.search(text)
    neg_at = neg.start() if neg else len(text) + 1
    hedged = lex._hedging_re.search(text) is not None
    found: dict[int, LabelState] = {}
    for m in hits:
        obs = lex._trigger_owner[" ".join(m.group(0).split())]
        if neg_at < m.start():
            state = LabelState.NEGATIVE
        elif hedged:
            state = LabelState.UNCERTAIN
        else:
            state = LabelState.POSITIVE
        prev = found.get(obs)
        if prev is None or _PRIORITY[state] > _PRIORITY[prev]:
            found[obs] = state
    return list(found.items())


def label_report(report_text: str, lex: Lexicon | None = None) -> LabelVector:
    lex = lex or default_lexicon()
    states = [LabelState.BLANK] * NO_FINDING
    for statement in split_statements(report_text):
        for obs, state in classify_statement(statement, lex):
            current = states[obs]
            if current is LabelState.BLANK or _PRIORITY[state] > _PRIORITY[current]:
                states[obs] = state
    return with_no_finding(states)
