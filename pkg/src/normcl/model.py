"""Compact transformer encoder-decoder over the local tensor kernels.

Pre-layer-norm residual blocks by default (post-norm behind a config
knob), sinusoidal positions, no affine parameters in layer norm.  The
target input embedding doubles as the output projection when tying is
on, with no output bias in either mode.  Loss is weighted per-token
cross-entropy: sum_s(w_s * NLL_s) / sum_s(w_s * len_s), which reduces
to plain per-token cross-entropy at all-ones weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import BOS_ID, EOS_ID, PAD_ID, SentencePair
from .errors import ConfigError, DataError
from .tensor import (
    Tensor, add, cross_entropy_with_log_softmax, dropout, embedding_lookup,
    layer_norm, matmul, mul, relu, reshape, scale, softmax, tensor_sum,
    transpose,
)

__all__ = ["ModelConfig", "EncodedBatch", "build_batch", "Transformer"]

NEG_INF = -1e9


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 128
    dropout: float = 0.1
    max_positions: int = 512
    tie_target_embeddings: bool = True
    label_smoothing: float = 0.0
    pre_norm: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("d_model", "n_heads", "n_layers", "d_ff", "max_positions"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError(
                f"label_smoothing must be in [0, 1), got {self.label_smoothing}"
            )


# ---------------------------------------------------------------------------
# Batch construction
# ---------------------------------------------------------------------------

@dataclass
class EncodedBatch:
    ids: list[int]
    src: np.ndarray        # (B, Ts) source ids, eos-terminated, padded
    tgt_in: np.ndarray     # (B, Tt) bos + target
    tgt_out: np.ndarray    # (B, Tt) target + eos
    src_mask: np.ndarray   # (B, 1, 1, Ts) additive, NEG_INF on padding
    loss_mask: np.ndarray  # (B, Tt) 1.0 on real target positions
    tgt_lens: np.ndarray   # (B,) real target lengths incl. eos

    @property
    def size(self) -> int:
        return len(self.ids)


def build_batch(pairs: Sequence[SentencePair]) -> EncodedBatch:
    """Pad a list of sentence pairs into dense arrays.

    The source gets an end-of-sentence terminator; target input/output
    are the usual one-step-shifted pair around bos/eos.
    """
    if not pairs:
        raise DataError("cannot build an empty batch")
    b = len(pairs)
    ts = max(len(p.src) for p in pairs) + 1
    tt = max(len(p.tgt) for p in pairs) + 1
    src = np.full((b, ts), PAD_ID, dtype=np.int64)
    tgt_in = np.full((b, tt), PAD_ID, dtype=np.int64)
    tgt_out = np.full((b, tt), PAD_ID, dtype=np.int64)
    src_pad = np.zeros((b, ts), dtype=bool)
    loss_mask = np.zeros((b, tt), dtype=np.float64)
    tgt_lens = np.zeros(b, dtype=np.int64)
    for i, p in enumerate(pairs):
        ns, nt = len(p.src), len(p.tgt)
        src[i, :ns] = p.src
        src[i, ns] = EOS_ID
        src_pad[i, ns + 1:] = True
        tgt_in[i, 0] = BOS_ID
        tgt_in[i, 1:nt + 1] = p.tgt
        tgt_out[i, :nt] = p.tgt
        tgt_out[i, nt] = EOS_ID
        loss_mask[i, :nt + 1] = 1.0
        tgt_lens[i] = nt + 1
    src_mask = np.where(src_pad, NEG_INF, 0.0)[:, None, None, :]
    return EncodedBatch([p.id for p in pairs], src, tgt_in, tgt_out,
                        src_mask, loss_mask, tgt_lens)


def _causal_mask(t: int) -> np.ndarray:
    m = np.triu(np.full((t, t), NEG_INF), k=1)
    return m[None, None, :, :]


def _positional_encoding(max_positions: int, d_model: int) -> np.ndarray:
    pos = np.arange(max_positions, dtype=np.float64)[:, None]
    i = np.arange(0, d_model, 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, i / d_model)
    pe = np.zeros((max_positions, d_model))
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles[:, : d_model // 2])
    return pe


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

class Transformer:
    def __init__(self, config: ModelConfig, src_vocab_size: int,
                 tgt_vocab_size: int):
        if src_vocab_size < 5 or tgt_vocab_size < 5:
            raise ConfigError("vocabularies must include the four specials")
        self.config = config
        self.src_vocab_size = src_vocab_size
        self.tgt_vocab_size = tgt_vocab_size
        self.rng = np.random.default_rng((config.seed, 1))
        init = np.random.default_rng((config.seed, 0))
        d, ff = config.d_model, config.d_ff

        self.params: dict[str, Tensor] = {}

        def embed(name, rows):
            self.params[name] = Tensor(
                init.normal(0.0, 1.0 / math.sqrt(d), size=(rows, d)),
                requires_grad=True)

        def proj(name, fan_in, fan_out):
            bound = 1.0 / math.sqrt(fan_in)
            self.params[name + ".w"] = Tensor(
                init.uniform(-bound, bound, size=(fan_in, fan_out)),
                requires_grad=True)
            self.params[name + ".b"] = Tensor(
                np.zeros(fan_out), requires_grad=True)

        embed("src_embed", src_vocab_size)
        embed("tgt_embed", tgt_vocab_size)
        if not config.tie_target_embeddings:
            bound = 1.0 / math.sqrt(d)
            self.params["out_proj"] = Tensor(
                init.uniform(-bound, bound, size=(tgt_vocab_size, d)),
                requires_grad=True)
        for l in range(config.n_layers):
            for name in (f"enc{l}.self", f"dec{l}.self", f"dec{l}.cross"):
                for part in ("wq", "wk", "wv", "wo"):
                    proj(f"{name}.{part}", d, d)
            for side in (f"enc{l}", f"dec{l}"):
                proj(f"{side}.ff1", d, ff)
                proj(f"{side}.ff2", ff, d)

        self.pe = _positional_encoding(config.max_positions, d)

    # -- building blocks ---------------------------------------------------

    def _drop(self, x: Tensor, train: bool) -> Tensor:
        p = self.config.dropout if train else 0.0
        return dropout(x, p, self.rng)

    def _linear(self, name: str, x: Tensor) -> Tensor:
        return add(matmul(x, self.params[name + ".w"]), self.params[name + ".b"])

    def _attention(self, name: str, q_in: Tensor, kv_in: Tensor,
                   mask: np.ndarray | None, train: bool) -> Tensor:
        cfg = self.config
        h, dh = cfg.n_heads, cfg.d_model // cfg.n_heads

        def heads(t: Tensor) -> Tensor:
            b, n, _ = t.shape
            return transpose(reshape(t, (b, n, h, dh)), (0, 2, 1, 3))

        q = heads(self._linear(name + ".wq", q_in))
        k = heads(self._linear(name + ".wk", kv_in))
        v = heads(self._linear(name + ".wv", kv_in))
        scores = scale(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
        if mask is not None:
            scores = add(scores, Tensor(mask))
        probs = self._drop(softmax(scores, axis=-1), train)
        ctx = matmul(probs, v)
        b, _, n, _ = ctx.shape
        merged = reshape(transpose(ctx, (0, 2, 1, 3)), (b, n, cfg.d_model))
        return self._linear(name + ".wo", merged)

    def _ff(self, name: str, x: Tensor, train: bool) -> Tensor:
        inner = self._drop(relu(self._linear(name + ".ff1", x)), train)
        return self._linear(name + ".ff2", inner)

    def _sublayer(self, x: Tensor, fn, train: bool) -> Tensor:
        if self.config.pre_norm:
            return add(x, self._drop(fn(layer_norm(x)), train))
        return layer_norm(add(x, self._drop(fn(x), train)))

    def _embed_in(self, name: str, ids: np.ndarray, train: bool) -> Tensor:
        if ids.shape[1] > self.config.max_positions:
            raise ConfigError(
                f"sequence length {ids.shape[1]} exceeds max_positions "
                f"{self.config.max_positions}"
            )
        # no sqrt(d_model) lookup scaling: rows start small against the
        # positional signal, and training grows them as they take on
        # lexical content — the live norm is a meaningful progress signal
        x = embedding_lookup(self.params[name], ids)
        x = add(x, Tensor(self.pe[: ids.shape[1]]))
        return self._drop(x, train)

    # -- forward -----------------------------------------------------------

    def encode(self, src: np.ndarray, src_mask: np.ndarray,
               train: bool = False) -> Tensor:
        x = self._embed_in("src_embed", src, train)
        for l in range(self.config.n_layers):
            x = self._sublayer(
                x, lambda y, l=l: self._attention(f"enc{l}.self", y, y,
                                                  src_mask, train), train)
            x = self._sublayer(x, lambda y, l=l: self._ff(f"enc{l}", y, train),
                               train)
        return layer_norm(x) if self.config.pre_norm else x

    def decode(self, memory: Tensor, src_mask: np.ndarray,
               tgt_in: np.ndarray, train: bool = False) -> Tensor:
        """Logits (B, Tt, V) for every target position."""
        x = self._embed_in("tgt_embed", tgt_in, train)
        causal = _causal_mask(tgt_in.shape[1])
        for l in range(self.config.n_layers):
            x = self._sublayer(
                x, lambda y, l=l: self._attention(f"dec{l}.self", y, y,
                                                  causal, train), train)
            x = self._sublayer(
                x, lambda y, l=l: self._attention(f"dec{l}.cross", y, memory,
                                                  src_mask, train), train)
            x = self._sublayer(x, lambda y, l=l: self._ff(f"dec{l}", y, train),
                               train)
        if self.config.pre_norm:
            x = layer_norm(x)
        out_table = self.output_table()
        b, n, d = x.shape
        flat = matmul(reshape(x, (b * n, d)), transpose(out_table))
        return reshape(flat, (b, n, self.tgt_vocab_size))

    def forward(self, batch: EncodedBatch, train: bool = False) -> Tensor:
        memory = self.encode(batch.src, batch.src_mask, train)
        return self.decode(memory, batch.src_mask, batch.tgt_in, train)

    def forward_loss(self, batch: EncodedBatch,
                     weights: Sequence[float] | None = None,
                     train: bool = False) -> tuple[Tensor, np.ndarray]:
        """Weighted scalar loss plus detached per-sentence NLL sums."""
        b, tt = batch.tgt_out.shape
        if weights is None:
            weights = np.ones(b)
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (b,):
            raise ConfigError(
                f"need one weight per sentence: got {weights.shape} for batch {b}"
            )
        if (weights <= 0).any():
            raise ConfigError("sentence weights must be positive")
        total_tokens = batch.loss_mask.sum()
        if total_tokens == 0:
            raise DataError("batch has no unmasked target tokens")

        logits = self.forward(batch, train)
        flat = reshape(logits, (b * tt, self.tgt_vocab_size))
        nll = cross_entropy_with_log_softmax(
            flat, batch.tgt_out.reshape(-1), self.config.label_smoothing)
        masked = mul(nll, Tensor(batch.loss_mask.reshape(-1)))
        per_sentence = (masked.data.reshape(b, tt)).sum(axis=1)

        pos_weight = (weights[:, None] * batch.loss_mask).reshape(-1)
        weighted = tensor_sum(mul(masked, Tensor(pos_weight)))
        denom = float((weights * batch.tgt_lens).sum())
        loss = scale(weighted, 1.0 / denom)
        return loss, per_sentence

    # -- parameter plumbing --------------------------------------------------

    def output_table(self) -> Tensor:
        """The (V, d) table projected against before the softmax; the
        very same tensor as the target embedding when tying is on."""
        if self.config.tie_target_embeddings:
            return self.params["tgt_embed"]
        return self.params["out_proj"]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def source_embedding(self) -> np.ndarray:
        return self.params["src_embed"].data
