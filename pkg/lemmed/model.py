"""
model.py
Character-level attentional encoder-decoder written against numpy

Encoder: stacked bidirectional LSTM over source symbol embeddings.
Bridge: final forward/backward states of each encoder layer, concatenated
and projected to the decoder width.
Decoder: stacked LSTM fed the previous target symbol, global attention with
a bilinear score on the top decoder output, tanh combination of context and
decoder output, projection to target logits. No input feeding.

Gate layout of every LSTM weight matrix is [input, forget, output, cell],
rows are [layer input; previous hidden state].
"""

import hashlib
import json
import logging
import os
import struct
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .errors import CheckpointError, NonFiniteError, VocabMismatchError
from .snippets import Vocab

logger = logging.getLogger(__name__)

MAGIC = b"LEMMEDCK"
FORMAT_VERSION = 1
CHECKSUM_SIZE = 32
_HEADER = struct.Struct("<8sII")
DTYPES = ("float32", "float64")


@dataclass(frozen=True)
class ModelConfig:
    source_vocab_size: int
    target_vocab_size: int
    embedding_size: int = 700
    hidden_units: int = 500
    layers: int = 2
    dropout_p: float = 0.3
    attention: str = "general"
    rng_seed: int = 0
    init_scale: float = 0.1
    forget_bias: float = 1.0
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("source_vocab_size", "target_vocab_size", "embedding_size", "hidden_units", "layers"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p!r}")
        if self.attention != "general":
            raise ValueError(f"only the general (bilinear) attention score is implemented, got {self.attention!r}")
        if self.dtype not in DTYPES:
            raise ValueError(f"dtype must be one of {DTYPES}, got {self.dtype!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        return cls(**values)


def parameter_shapes(cfg):
    """Names and shapes of all tensors, in checkpoint order."""
    E, H = cfg.embedding_size, cfg.hidden_units
    shapes = [("src_embedding", (cfg.source_vocab_size, E)), ("tgt_embedding", (cfg.target_vocab_size, E))]
    for layer in range(cfg.layers):
        in_dim = E if layer == 0 else 2 * H
        for direction in ("fwd", "bwd"):
            shapes.append((f"enc{layer}_{direction}_W", (in_dim + H, 4 * H)))
            shapes.append((f"enc{layer}_{direction}_b", (4 * H,)))
    for layer in range(cfg.layers):
        for part in ("h", "c"):
            shapes.append((f"bridge{layer}_{part}_W", (2 * H, H)))
            shapes.append((f"bridge{layer}_{part}_b", (H,)))
    for layer in range(cfg.layers):
        in_dim = E if layer == 0 else H
        shapes.append((f"dec{layer}_W", (in_dim + H, 4 * H)))
        shapes.append((f"dec{layer}_b", (4 * H,)))
    shapes += [
        ("attn_W", (H, 2 * H)),
        ("combine_W", (3 * H, H)),
        ("out_W", (H, cfg.target_vocab_size)),
        ("out_b", (cfg.target_vocab_size,)),
    ]
    return shapes


@dataclass
class Model:
    config: ModelConfig
    params: Dict[str, np.ndarray]

    def __getitem__(self, name):
        return self.params[name]

    def copy(self):
        return Model(self.config, {name: value.copy() for name, value in self.params.items()})

    @property
    def parameter_count(self):
        return int(sum(value.size for value in self.params.values()))


class Gradients:
    """Tensor-for-tensor mirror of a model's parameters."""

    def __init__(self, tensors):
        self.tensors = dict(tensors)

    @classmethod
    def zeros_like(cls, model):
        return cls({name: np.zeros_like(value) for name, value in model.params.items()})

    def __getitem__(self, name):
        return self.tensors[name]

    def __iter__(self):
        return iter(self.tensors)

    def items(self):
        return self.tensors.items()

    def __add__(self, other):
        if set(self.tensors) != set(other.tensors):
            raise ValueError("cannot add gradients of different models")
        return Gradients({name: value + other.tensors[name] for name, value in self.tensors.items()})

    def scaled(self, factor):
        return Gradients({name: value * factor for name, value in self.tensors.items()})

    def global_norm(self):
        total = sum(float(np.sum(np.square(value, dtype=np.float64))) for value in self.tensors.values())
        return float(np.sqrt(total))


@dataclass
class Batch:
    """
    Padded id matrices. `loss_mask[b, t]` is 1 when target position t + 1 of
    row b is a real symbol to be predicted.
    """
    source_ids: np.ndarray
    source_lengths: np.ndarray
    target_ids: Optional[np.ndarray] = None
    target_lengths: Optional[np.ndarray] = None
    loss_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if np.any(self.source_lengths > self.source_ids.shape[1]) or np.any(self.source_lengths < 1):
            raise ValueError("source lengths must lie in [1, padded width]")
        if self.target_ids is not None:
            if np.any(self.target_lengths > self.target_ids.shape[1]) or np.any(self.target_lengths < 2):
                raise ValueError("target lengths must lie in [2, padded width]")
            if self.loss_mask is None:
                positions = np.arange(self.target_ids.shape[1] - 1)
                self.loss_mask = (positions[None, :] < (self.target_lengths[:, None] - 1)).astype(np.float64)

    @property
    def size(self):
        return self.source_ids.shape[0]

    @property
    def source_mask(self):
        return np.arange(self.source_ids.shape[1])[None, :] < self.source_lengths[:, None]


def make_batch(pairs, pad_id=0):
    """
    Pad encoded examples into a `Batch`.

    Parameters
    ----------
    pairs : sequence of (source ids, target ids or None)
    pad_id : int

    """
    if not pairs:
        raise ValueError("cannot build an empty batch")
    sources = [np.asarray(source, dtype=np.int64) for source, _ in pairs]
    source_lengths = np.array([len(s) for s in sources], dtype=np.int64)
    source_ids = np.full((len(pairs), int(source_lengths.max())), pad_id, dtype=np.int64)
    for row, source in enumerate(sources):
        source_ids[row, :len(source)] = source

    if any(target is None for _, target in pairs):
        return Batch(source_ids, source_lengths)
    targets = [np.asarray(target, dtype=np.int64) for _, target in pairs]
    target_lengths = np.array([len(t) for t in targets], dtype=np.int64)
    target_ids = np.full((len(pairs), int(target_lengths.max())), pad_id, dtype=np.int64)
    for row, target in enumerate(targets):
        target_ids[row, :len(target)] = target
    return Batch(source_ids, source_lengths, target_ids, target_lengths)


@dataclass
class EncoderOutput:
    states: np.ndarray
    mask: np.ndarray
    final_h: List[np.ndarray]
    final_c: List[np.ndarray]


@dataclass
class DecoderState:
    h: List[np.ndarray]
    c: List[np.ndarray]
    attention: Optional[np.ndarray] = None

    def select(self, rows):
        """State restricted (or repeated) to the given batch rows."""
        attention = self.attention[rows] if self.attention is not None else None
        return DecoderState([h[rows] for h in self.h], [c[rows] for c in self.c], attention)


def init_model(cfg):
    """
    Fresh model with weights uniform in [-init_scale, init_scale] and the
    forget-gate biases set to `forget_bias`. Deterministic in `rng_seed`.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    H = cfg.hidden_units
    params = {}
    for name, shape in parameter_shapes(cfg):
        value = rng.uniform(-cfg.init_scale, cfg.init_scale, size=shape).astype(cfg.dtype)
        if (name.startswith("enc") or name.startswith("dec")) and name.endswith("_b"):
            value[H:2 * H] = cfg.forget_bias
        params[name] = value
    model = Model(cfg, params)
    logger.info("initialized model with %d parameters (seed %d)", model.parameter_count, cfg.rng_seed)
    return model


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _dropout_mask(rng, shape, p, dtype):
    if p <= 0.0:
        return None
    keep = 1.0 - p
    return ((rng.random(shape) < keep) / keep).astype(dtype)


def _apply(mask, x):
    return x if mask is None else x * mask


def _check_ids(ids, size, side):
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= size):
        raise ValueError(f"{side} id out of range [0, {size})")


def _lstm_step(x, h_prev, c_prev, W, b):
    H = h_prev.shape[1]
    xh = np.concatenate([x, h_prev], axis=1)
    z = xh @ W + b
    i = _sigmoid(z[:, :H])
    f = _sigmoid(z[:, H:2 * H])
    o = _sigmoid(z[:, 2 * H:3 * H])
    g = np.tanh(z[:, 3 * H:])
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return h, c, (xh, i, f, o, g, c_prev, tanh_c)


def _lstm_step_backward(dh, dc, cache, W):
    xh, i, f, o, g, c_prev, tanh_c = cache
    H = dh.shape[1]
    do = dh * tanh_c
    dc = dc + dh * o * (1.0 - tanh_c**2)
    dz = np.concatenate([dc * g * i * (1.0 - i), dc * c_prev * f * (1.0 - f), do * o * (1.0 - o),
                         dc * i * (1.0 - g**2)], axis=1)
    dxh = dz @ W.T
    in_dim = W.shape[0] - H
    return dxh[:, :in_dim], dxh[:, in_dim:], dc * f, xh.T @ dz, dz.sum(axis=0)


def _run_direction(x, mask, W, b, reverse):
    # padded positions carry the previous state through unchanged
    batch, steps, _ = x.shape
    H = W.shape[1] // 4
    h = np.zeros((batch, H), dtype=x.dtype)
    c = np.zeros((batch, H), dtype=x.dtype)
    outputs = np.zeros((batch, steps, H), dtype=x.dtype)
    caches = [None] * steps
    order = range(steps - 1, -1, -1) if reverse else range(steps)
    for t in order:
        m = mask[:, t:t + 1]
        h_new, c_new, caches[t] = _lstm_step(x[:, t], h, c, W, b)
        h = m * h_new + (1.0 - m) * h
        c = m * c_new + (1.0 - m) * c
        outputs[:, t] = h
    return outputs, h, c, caches


def _run_direction_backward(d_outputs, dh, dc, mask, W, caches, reverse, dW_total, db_total):
    batch, steps, _ = d_outputs.shape
    in_dim = W.shape[0] - W.shape[1] // 4
    dx = np.zeros((batch, steps, in_dim), dtype=d_outputs.dtype)
    order = range(steps) if reverse else range(steps - 1, -1, -1)
    for t in order:
        m = mask[:, t:t + 1]
        dh_total = dh + d_outputs[:, t]
        dx[:, t], dh_prev, dc_prev, dW, db = _lstm_step_backward(m * dh_total, m * dc, caches[t], W)
        dh = dh_prev + (1.0 - m) * dh_total
        dc = dc_prev + (1.0 - m) * dc
        dW_total += dW
        db_total += db
    return dx


def _encode(m, source_ids, source_mask, dropout, rng):
    p = m.params
    maskf = source_mask.astype(m.config.dtype)
    x = p["src_embedding"][source_ids]
    layer_caches = []
    final_h, final_c = [], []
    for layer in range(m.config.layers):
        fwd_out, fh, fc, fwd_cache = _run_direction(x, maskf, p[f"enc{layer}_fwd_W"], p[f"enc{layer}_fwd_b"], False)
        bwd_out, bh, bc, bwd_cache = _run_direction(x, maskf, p[f"enc{layer}_bwd_W"], p[f"enc{layer}_bwd_b"], True)
        out = np.concatenate([fwd_out, bwd_out], axis=2)
        final_h.append(np.concatenate([fh, bh], axis=1))
        final_c.append(np.concatenate([fc, bc], axis=1))
        drop = None
        if layer < m.config.layers - 1:
            drop = _dropout_mask(rng, out.shape, dropout, out.dtype)
            x = _apply(drop, out)
        layer_caches.append((fwd_cache, bwd_cache, drop))
    return EncoderOutput(out, source_mask, final_h, final_c), (source_ids, maskf, layer_caches)


def _encode_backward(m, cache, d_states, d_final_h, d_final_c, grads):
    source_ids, maskf, layer_caches = cache
    p, g = m.params, grads.tensors
    H = m.config.hidden_units
    d_out = d_states
    for layer in reversed(range(m.config.layers)):
        fwd_cache, bwd_cache, _ = layer_caches[layer]
        dx = _run_direction_backward(d_out[:, :, :H], d_final_h[layer][:, :H], d_final_c[layer][:, :H], maskf,
                                     p[f"enc{layer}_fwd_W"], fwd_cache, False, g[f"enc{layer}_fwd_W"],
                                     g[f"enc{layer}_fwd_b"])
        dx += _run_direction_backward(d_out[:, :, H:], d_final_h[layer][:, H:], d_final_c[layer][:, H:], maskf,
                                      p[f"enc{layer}_bwd_W"], bwd_cache, True, g[f"enc{layer}_bwd_W"],
                                      g[f"enc{layer}_bwd_b"])
        if layer > 0:
            d_out = _apply(layer_caches[layer - 1][2], dx)
        else:
            np.add.at(g["src_embedding"], source_ids, dx)


def encode_source(m, batch, train_mode=False, rng=None):
    """
    Run the bidirectional encoder.

    Parameters
    ----------
    m : Model
    batch : Batch
    train_mode : bool
        Dropout between layers is applied only in train mode.
    rng : numpy.random.Generator, optional
        Source of dropout masks; defaults to one seeded with the model seed.

    Returns
    -------
    EncoderOutput
        `states` has shape (batch, source length, 2 * hidden_units).

    """
    _check_ids(batch.source_ids, m.config.source_vocab_size, "source")
    dropout = m.config.dropout_p if train_mode else 0.0
    if dropout and rng is None:
        rng = np.random.default_rng(m.config.rng_seed)
    encoded, _ = _encode(m, batch.source_ids, batch.source_mask, dropout, rng)
    return encoded


def init_decoder_state(m, encoder_output):
    p = m.params
    h = [encoder_output.final_h[l] @ p[f"bridge{l}_h_W"] + p[f"bridge{l}_h_b"] for l in range(m.config.layers)]
    c = [encoder_output.final_c[l] @ p[f"bridge{l}_c_W"] + p[f"bridge{l}_c_b"] for l in range(m.config.layers)]
    return DecoderState(h, c)


def _bridge_backward(m, encoder_output, dh0, dc0, grads):
    p, g = m.params, grads.tensors
    d_final_h, d_final_c = [], []
    for l in range(m.config.layers):
        g[f"bridge{l}_h_W"] += encoder_output.final_h[l].T @ dh0[l]
        g[f"bridge{l}_h_b"] += dh0[l].sum(axis=0)
        g[f"bridge{l}_c_W"] += encoder_output.final_c[l].T @ dc0[l]
        g[f"bridge{l}_c_b"] += dc0[l].sum(axis=0)
        d_final_h.append(dh0[l] @ p[f"bridge{l}_h_W"].T)
        d_final_c.append(dc0[l] @ p[f"bridge{l}_c_W"].T)
    return d_final_h, d_final_c


def _attend(query, states, mask, W):
    if not np.all(mask.any(axis=1)):
        raise ValueError("attention over a fully masked source")
    projected = query @ W
    scores = np.einsum("btk,bk->bt", states, projected)
    scores = np.where(mask, scores, -np.inf)
    scores = scores - scores.max(axis=1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=1, keepdims=True)
    context = np.einsum("bt,btk->bk", weights, states)
    return context, weights, projected


def attend(decoder_state, encoder_states, source_mask, weight):
    """
    Global attention with the bilinear score ``h^T W s``.

    Parameters
    ----------
    decoder_state : numpy.ndarray
        Query, shape (hidden,) or (batch, hidden).
    encoder_states : numpy.ndarray
        Shape (T, 2 * hidden) or (batch, T, 2 * hidden).
    source_mask : numpy.ndarray of bool
        True on real source positions.
    weight : numpy.ndarray
        Bilinear matrix of shape (hidden, 2 * hidden).

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        Context vector and attention weights; the weights of each row are a
        probability distribution over the unmasked positions.

    """
    single = np.ndim(decoder_state) == 1
    if single:
        decoder_state = decoder_state[None, :]
        encoder_states = encoder_states[None, :, :]
        source_mask = np.asarray(source_mask)[None, :]
    context, weights, _ = _attend(decoder_state, encoder_states, np.asarray(source_mask, dtype=bool), weight)
    if single:
        return context[0], weights[0]
    return context, weights


def _decoder_step(m, prev_ids, state, encoded, dropout, rng):
    p = m.params
    layers = m.config.layers
    x = p["tgt_embedding"][prev_ids]
    new_h, new_c, layer_caches, drops = [], [], [], []
    for layer in range(layers):
        h, c, cache = _lstm_step(x, state.h[layer], state.c[layer], p[f"dec{layer}_W"], p[f"dec{layer}_b"])
        new_h.append(h)
        new_c.append(c)
        layer_caches.append(cache)
        if layer < layers - 1:
            drop = _dropout_mask(rng, h.shape, dropout, h.dtype)
            drops.append(drop)
            x = _apply(drop, h)
    top = new_h[-1]
    context, weights, query = _attend(top, encoded.states, encoded.mask, p["attn_W"])
    combined = np.concatenate([context, top], axis=1)
    attentional = np.tanh(combined @ p["combine_W"])
    out_drop = _dropout_mask(rng, attentional.shape, dropout, attentional.dtype)
    projected = _apply(out_drop, attentional)
    logits = projected @ p["out_W"] + p["out_b"]
    cache = (prev_ids, layer_caches, drops, top, weights, query, combined, attentional, out_drop, projected)
    return logits, DecoderState(new_h, new_c, weights), cache


def _decoder_step_backward(m, dlogits, cache, encoded, dh_next, dc_next, d_states, grads):
    prev_ids, layer_caches, drops, top, weights, query, combined, attentional, out_drop, projected = cache
    p, g = m.params, grads.tensors
    g["out_W"] += projected.T @ dlogits
    g["out_b"] += dlogits.sum(axis=0)
    d_pre = _apply(out_drop, dlogits @ p["out_W"].T) * (1.0 - attentional**2)
    g["combine_W"] += combined.T @ d_pre
    d_combined = d_pre @ p["combine_W"].T
    width = encoded.states.shape[2]
    d_context, d_top = d_combined[:, :width], d_combined[:, width:]

    d_states += weights[:, :, None] * d_context[:, None, :]
    d_weights = np.einsum("btk,bk->bt", encoded.states, d_context)
    d_scores = weights * (d_weights - (weights * d_weights).sum(axis=1, keepdims=True))
    d_states += d_scores[:, :, None] * query[:, None, :]
    d_query = np.einsum("bt,btk->bk", d_scores, encoded.states)
    g["attn_W"] += top.T @ d_query
    d_in = d_top + d_query @ p["attn_W"].T

    for layer in reversed(range(m.config.layers)):
        dx, dh_prev, dc_prev, dW, db = _lstm_step_backward(d_in + dh_next[layer], dc_next[layer], layer_caches[layer],
                                                           p[f"dec{layer}_W"])
        g[f"dec{layer}_W"] += dW
        g[f"dec{layer}_b"] += db
        dh_next[layer] = dh_prev
        dc_next[layer] = dc_prev
        if layer > 0:
            d_in = _apply(drops[layer - 1], dx)
        else:
            np.add.at(g["tgt_embedding"], prev_ids, dx)


def decode_step(m, prev_ids, state, encoder_output, train_mode=False, rng=None):
    """
    One decoder step.

    Parameters
    ----------
    m : Model
    prev_ids : numpy.ndarray
        Previous target symbol per batch row.
    state : DecoderState
        From `init_decoder_state` or a previous step.
    encoder_output : EncoderOutput
    train_mode : bool
    rng : numpy.random.Generator, optional

    Returns
    -------
    (numpy.ndarray, DecoderState)
        Logits of shape (batch, target_vocab_size) and the new state, whose
        `attention` holds this step's attention weights.

    """
    prev_ids = np.asarray(prev_ids, dtype=np.int64)
    _check_ids(prev_ids, m.config.target_vocab_size, "target")
    dropout = m.config.dropout_p if train_mode else 0.0
    if dropout and rng is None:
        rng = np.random.default_rng(m.config.rng_seed)
    logits, new_state, _ = _decoder_step(m, prev_ids, state, encoder_output, dropout, rng)
    return logits, new_state


def _forward(m, batch, train_mode, rng):
    if batch.target_ids is None:
        raise ValueError("the batch has no targets")
    _check_ids(batch.source_ids, m.config.source_vocab_size, "source")
    _check_ids(batch.target_ids, m.config.target_vocab_size, "target")
    loss_mask = batch.loss_mask.astype(m.config.dtype)
    count = float(loss_mask.sum())
    if count == 0:
        raise ValueError("the loss mask is empty")
    dropout = m.config.dropout_p if train_mode else 0.0
    if dropout and rng is None:
        rng = np.random.default_rng(m.config.rng_seed)

    encoded, encoder_cache = _encode(m, batch.source_ids, batch.source_mask, dropout, rng)
    state = init_decoder_state(m, encoded)
    rows = np.arange(batch.size)
    total = 0.0
    steps = []
    for t in range(batch.target_ids.shape[1] - 1):
        logits, state, cache = _decoder_step(m, batch.target_ids[:, t], state, encoded, dropout, rng)
        log_probs = _log_softmax(logits)
        gold = batch.target_ids[:, t + 1]
        total -= float(np.sum(log_probs[rows, gold] * loss_mask[:, t], dtype=np.float64))
        steps.append((cache, log_probs))
    return total / count, (encoded, encoder_cache, steps, loss_mask, count)


def forward_loss(m, batch, train_mode=False, rng=None):
    """
    Mean masked token cross-entropy (nats) under teacher forcing.
    """
    loss, _ = _forward(m, batch, train_mode, rng)
    return loss


def backward(m, batch, rng=None, train_mode=True):
    """
    Loss and exact gradients for one batch.

    Dropout masks are drawn once per call, so the gradients are exact for the
    realized masks.

    Returns
    -------
    (float, Gradients)

    """
    loss, (encoded, encoder_cache, steps, loss_mask, count) = _forward(m, batch, train_mode, rng)
    grads = Gradients.zeros_like(m)
    layers, H = m.config.layers, m.config.hidden_units
    dtype = m.config.dtype
    d_states = np.zeros_like(encoded.states)
    dh_next = [np.zeros((batch.size, H), dtype=dtype) for _ in range(layers)]
    dc_next = [np.zeros((batch.size, H), dtype=dtype) for _ in range(layers)]
    rows = np.arange(batch.size)

    for t in reversed(range(len(steps))):
        cache, log_probs = steps[t]
        dlogits = np.exp(log_probs)
        dlogits[rows, batch.target_ids[:, t + 1]] -= 1.0
        dlogits *= (loss_mask[:, t] / count)[:, None]
        _decoder_step_backward(m, dlogits, cache, encoded, dh_next, dc_next, d_states, grads)

    d_final_h, d_final_c = _bridge_backward(m, encoded, dh_next, dc_next, grads)
    _encode_backward(m, encoder_cache, d_states, d_final_h, d_final_c, grads)
    return loss, grads


def sgd_update(m, g, lr, clip_norm=5.0):
    """
    Plain SGD step with global-norm clipping, applied in place.

    Parameters
    ----------
    m : Model
    g : Gradients
    lr : float
    clip_norm : float or None
        Gradients whose global norm exceeds it are rescaled to it first.
        None or a non-positive value disables clipping.

    Returns
    -------
    Model

    """
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr!r}")
    norm = g.global_norm()
    scale = 1.0
    if clip_norm is not None and clip_norm > 0 and norm > clip_norm:
        scale = clip_norm / norm
    updates = {}
    for name, value in m.params.items():
        update = g[name] * scale
        if not np.all(np.isfinite(update)):
            raise NonFiniteError(f"non-finite gradient for {name}")
        updates[name] = (lr * update).astype(value.dtype)
    for name, update in updates.items():
        m.params[name] -= update
    return m


@dataclass
class Checkpoint:
    model: Model
    vocab: Vocab
    metadata: Dict = field(default_factory=dict)


def _little_endian(dtype):
    return np.dtype(dtype).newbyteorder("<")


def save_model(m, path, vocab, metadata=None):
    """
    Write a checkpoint: header (magic, version, length-prefixed JSON with the
    config, both vocabularies, metadata and tensor layout), the tensors as
    little-endian floats in declared order, then a SHA-256 of everything
    before it.
    """
    if vocab.source_size != m.config.source_vocab_size or vocab.target_size != m.config.target_vocab_size:
        raise VocabMismatchError("vocabulary sizes do not match the model configuration")
    layout = parameter_shapes(m.config)
    header = {
        "config": m.config.to_dict(),
        "vocab": vocab.to_dict(),
        "metadata": metadata or {},
        "tensors": [[name, list(shape)] for name, shape in layout],
    }
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    dtype = _little_endian(m.config.dtype)
    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, len(header_bytes)), header_bytes]
    for name, shape in layout:
        value = m.params[name]
        if value.shape != tuple(shape):
            raise ValueError(f"tensor {name} has shape {value.shape}, expected {tuple(shape)}")
        chunks.append(np.ascontiguousarray(value, dtype=dtype).tobytes())
    payload = b"".join(chunks)
    digest = hashlib.sha256(payload).digest()

    tmp_path = f"{path}.tmp"
    with open(tmp_path, "wb") as handle:
        handle.write(payload)
        handle.write(digest)
    os.replace(tmp_path, path)
    logger.debug("saved checkpoint %s (%d bytes)", path, len(payload) + len(digest))


def load_checkpoint(path):
    with open(path, "rb") as handle:
        data = handle.read()
    if len(data) < _HEADER.size + CHECKSUM_SIZE:
        raise CheckpointError(f"{path}: file too short to be a checkpoint")
    magic, version, header_len = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a lemmed checkpoint")
    payload, digest = data[:-CHECKSUM_SIZE], data[-CHECKSUM_SIZE:]
    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointError(f"{path}: checksum mismatch, the file is truncated or corrupt")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: checkpoint format version {version}, expected {FORMAT_VERSION}")

    offset = _HEADER.size
    try:
        header = json.loads(payload[offset:offset + header_len].decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
        vocab = Vocab.from_dict(header["vocab"])
    except (ValueError, KeyError, TypeError) as err:
        raise CheckpointError(f"{path}: unreadable header ({err})") from err
    if vocab.source_size != config.source_vocab_size or vocab.target_size != config.target_vocab_size:
        raise CheckpointError(f"{path}: stored vocabularies do not match the stored configuration")
    offset += header_len

    dtype = _little_endian(config.dtype)
    params = {}
    for name, shape in header["tensors"]:
        count = int(np.prod(shape))
        nbytes = count * dtype.itemsize
        if offset + nbytes > len(payload):
            raise CheckpointError(f"{path}: tensor {name} runs past the end of the file")
        params[name] = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(shape).astype(
            config.dtype)
        offset += nbytes
    if offset != len(payload):
        raise CheckpointError(f"{path}: {len(payload) - offset} trailing bytes after the tensors")
    expected = [name for name, _ in parameter_shapes(config)]
    if list(params) != expected:
        raise CheckpointError(f"{path}: tensor layout does not match the configuration")
    return Checkpoint(Model(config, params), vocab, header.get("metadata", {}))


def load_model(path, vocab=None):
    """
    Load the model stored at `path`.

    When `vocab` is given it must be the vocabulary the checkpoint was saved
    with; otherwise `VocabMismatchError` is raised.
    """
    checkpoint = load_checkpoint(path)
    if vocab is not None:
        stored = checkpoint.vocab
        if (vocab.source_size, vocab.target_size) != (stored.source_size, stored.target_size):
            raise VocabMismatchError(f"{path}: vocabulary sizes {vocab.source_size}/{vocab.target_size} do not "
                                     f"match the checkpoint's {stored.source_size}/{stored.target_size}")
        if vocab.source_symbols != stored.source_symbols or vocab.target_symbols != stored.target_symbols:
            raise VocabMismatchError(f"{path}: vocabulary symbols differ from the checkpoint's")
    return checkpoint.model
