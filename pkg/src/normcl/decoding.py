"""Greedy and beam decoding with length-normalized scoring.

Hypotheses are ranked by cumulative log-probability divided by the
length penalty lp(n) = ((5 + n) / 6)^alpha.  Within one expansion step
every candidate has the same length, so the raw cumulative score gives
the same ranking; the penalty only matters when hypotheses of different
lengths compete, i.e. between the finished pool and the active beams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import BOS_ID, EOS_ID
from .errors import ConfigError, DataError
from .model import Transformer
from .tensor import Tensor

__all__ = ["BeamConfig", "DecodedHypothesis", "length_penalty",
           "beam_decode", "decode_corpus"]


@dataclass(frozen=True)
class BeamConfig:
    beam_size: int = 6
    alpha: float = 0.6
    max_decode_len: int = 64

    def __post_init__(self):
        if self.beam_size < 1:
            raise ConfigError(f"beam_size must be >= 1, got {self.beam_size}")
        if self.max_decode_len < 1:
            raise ConfigError(
                f"max_decode_len must be >= 1, got {self.max_decode_len}"
            )


def length_penalty(length: int, alpha: float) -> float:
    return ((5.0 + length) / 6.0) ** alpha


@dataclass(frozen=True)
class DecodedHypothesis:
    tokens: tuple[int, ...]  # generated ids, end marker stripped
    score: float             # cumulative log-prob / lp(generated length)
    truncated: bool          # True when no end marker appeared in time


def _log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def beam_decode(model: Transformer, source: Sequence[int],
                cfg: BeamConfig) -> DecodedHypothesis:
    """Decode one source sentence.

    A hypothesis leaves the active set the moment it emits the end
    marker and joins the finished pool at its normalized score; the
    generated length counts that marker.  The search stops once the
    pool holds beam_size entries, or earlier when no active beam can
    still beat the pool: log-probabilities only accumulate downward,
    so cum / lp(max_decode_len) bounds anything an active beam may
    reach.  beam_size=1 therefore stops on the first end marker, which
    makes it exactly the greedy argmax rollout.
    """
    if len(source) == 0:
        raise DataError("cannot decode an empty source sentence")
    k = cfg.beam_size
    src = np.array([list(source) + [EOS_ID]], dtype=np.int64)
    src_mask = np.zeros((1, 1, 1, src.shape[1]))
    memory = model.encode(src, src_mask).data

    prefixes = np.full((1, 1), BOS_ID, dtype=np.int64)
    cum = np.zeros(1)
    # (normalized score, generated tokens without the end marker)
    finished: list[tuple[float, tuple[int, ...]]] = []
    # cum stays <= 0, so cum / lp(max_decode_len) bounds every score an
    # active beam can still finish with (lp grows with length)
    lp_cap = length_penalty(cfg.max_decode_len, cfg.alpha)

    for step in range(cfg.max_decode_len):
        n = prefixes.shape[0]
        mem = Tensor(np.repeat(memory, n, axis=0))
        mask = np.repeat(src_mask, n, axis=0)
        logits = model.decode(mem, mask, prefixes).data[:, -1, :]
        logp = _log_softmax_rows(logits)
        flat = (cum[:, None] + logp).ravel()

        # 2k candidates guarantee k survivors: each beam contributes at
        # most one end-marker candidate
        take = min(2 * k, flat.size)
        top = np.argpartition(-flat, take - 1)[:take]
        top = top[np.argsort(-flat[top], kind="stable")]

        survivors: list[np.ndarray] = []
        surv_cum: list[float] = []
        for rank, idx in enumerate(top):
            beam, tok = divmod(int(idx), logp.shape[1])
            score = float(flat[idx])
            if tok == EOS_ID:
                # only end markers that made the beam proper finish; a
                # lower-ranked one would stop beam_size=1 where greedy
                # keeps going
                if rank < k:
                    norm = score / length_penalty(step + 1, cfg.alpha)
                    finished.append((norm, tuple(prefixes[beam, 1:].tolist())))
            elif len(survivors) < k:
                survivors.append(np.append(prefixes[beam], tok))
                surv_cum.append(score)
        if not survivors or len(finished) >= k:
            break
        prefixes = np.stack(survivors)
        cum = np.array(surv_cum)
        if finished:
            best = max(norm for norm, _ in finished)
            if float(cum.max()) / lp_cap <= best:
                break

    if finished:
        norm, tokens = max(finished, key=lambda f: f[0])
        return DecodedHypothesis(tokens, norm, False)
    lp = length_penalty(prefixes.shape[1] - 1, cfg.alpha)
    best = int(np.argmax(cum / lp))
    return DecodedHypothesis(tuple(prefixes[best, 1:].tolist()),
                             float(cum[best]) / lp, True)


def decode_corpus(model: Transformer, sources: Sequence[Sequence[int]],
                  cfg: BeamConfig) -> list[DecodedHypothesis]:
    return [beam_decode(model, src, cfg) for src in sources]
