"""Corpus-level 4-gram BLEU.

Geometric mean of modified n-gram precisions (n = 1..4) times the
brevity penalty, scaled to [0, 100].  Without smoothing the score is
zero as soon as any precision is zero; the add-one flag smooths the
n >= 2 precisions so short-corpus scores stay informative.

Scoring happens on word-level tokens: callers rejoin subwords first.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from .errors import DataError

__all__ = ["MAX_ORDER", "bleu", "bleu_report"]

MAX_ORDER = 4

Sentence = Sequence[str]


def _ngrams(tokens: Sentence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_report(hypotheses: Sequence[Sentence], references: Sequence[Sentence],
                smooth: bool = False) -> dict:
    """Full scoring breakdown.

    Returns {"bleu", "brevity_penalty", "precisions", "n_sentences"};
    precisions are the values the geometric mean actually used, so with
    smoothing on they are the smoothed ones.
    """
    if not hypotheses:
        raise DataError("need at least one hypothesis to score")
    if len(hypotheses) != len(references):
        raise DataError(
            f"hypothesis/reference count mismatch: "
            f"{len(hypotheses)} vs {len(references)}"
        )

    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, MAX_ORDER + 1):
            got = _ngrams(hyp, n)
            if not got:
                continue
            want = _ngrams(ref, n)
            matches[n - 1] += sum(min(c, want[g]) for g, c in got.items())
            totals[n - 1] += sum(got.values())

    precisions = []
    for n in range(1, MAX_ORDER + 1):
        m, t = matches[n - 1], totals[n - 1]
        if smooth and n > 1:
            m, t = m + 1, t + 1
        precisions.append(m / t if t > 0 else 0.0)

    if hyp_len == 0:
        bp = 0.0
    elif hyp_len > ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / hyp_len)

    if min(precisions) > 0.0:
        mean = math.exp(sum(math.log(p) for p in precisions) / MAX_ORDER)
        score = 100.0 * bp * mean
    else:
        score = 0.0

    return {
        "bleu": score,
        "brevity_penalty": bp,
        "precisions": precisions,
        "n_sentences": len(hypotheses),
    }


def bleu(hypotheses: Sequence[Sentence], references: Sequence[Sentence],
         smooth: bool = False) -> float:
    return bleu_report(hypotheses, references, smooth)["bleu"]
