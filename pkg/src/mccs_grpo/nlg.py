"""Sentence-level BLEU-4 and ROUGE-L on whitespace tokens."""

from __future__ import annotations

import math
from collections import Counter


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidate: list[str], reference: list[str]) -> float:
    """BLEU-4 with add-one smoothing on the 2- to 4-gram precisions (BLEU+1).

    Unigram precision is left unsmoothed, so a candidate sharing no token
    with its reference scores exactly 0.
    """
    if not candidate or not reference:
        return 0.0
    log_p = 0.0
    for n in range(1, 5):
        cand, ref = _ngrams(candidate, n), _ngrams(reference, n)
        matches = sum(min(c, ref[g]) for g, c in cand.items())
        total = max(len(candidate) - n + 1, 0)
        if n > 1:
            matches, total = matches + 1, total + 1
        if matches == 0:
            return 0.0
        log_p += math.log(matches / total) / 4
    c, r = len(candidate), len(reference)
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return bp * math.exp(log_p)


def lcs_length(a: list[str], b: list[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, 1):
            cur = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = cur
    return row[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> float:
    """ROUGE-L F-measure with beta = 1."""
    if not candidate or not reference:
        return 0.0
    lcs = lcs_length(candidate, reference)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(candidate), lcs / len(reference)
    return 2 * p * r / (p + r)


def nlg_score(candidate: str, reference: str) -> tuple[float, float, float]:
    """Return (mean, bleu4, rouge_l) for two plain-text report bodies."""
    cand, ref = tokenize(candidate), tokenize(reference)
    if not cand and not ref:
        return 1.0, 1.0, 1.0
    b, r = bleu4(cand, ref), rouge_l(cand, ref)
    return (b + r) / 2, b, r
