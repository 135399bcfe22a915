"""Utterance-level style/speaker embedding encoder (forward pass only).

Mel-cepstra run through a 2-layer LSTM; the hidden sequence is pooled by
QKV self-attention (row-softmax scores, columnwise max over the attended
values to pick the most activated frames); the pooled context is
concatenated with the final hidden state and mapped through an affine
layer to a unit-norm embedding vector.

There is no training here. Weights are either randomly initialized from a
seed or loaded from a descriptor + float32 blob file pair.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import FormatError, NumericError
from .validation import as_float_matrix

STYLES = ("normal", "lombard", "whisper")

GATES = 4  # input, forget, cell, output; stacked in this order


@dataclass(frozen=True)
class EncoderDims:
    """Layer sizes. Desk-scale defaults; paper scale is hidden=512, embed=128."""

    input_dim: int
    hidden: int = 64
    embed: int = 32
    layers: int = 2

    def __post_init__(self):
        for name in ("input_dim", "hidden", "embed", "layers"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")


def expected_shapes(dims: EncoderDims) -> dict:
    """Tensor name -> shape for a weight set of the given dims.

    LSTM matrices multiply column vectors from the left (wx: 4H x D_in);
    attention and embedding matrices multiply row-matrices from the right
    (H @ wq, z @ w), matching Q = H * W_Q with W_Q square.
    """
    shapes = {}
    d_in = dims.input_dim
    for layer in range(dims.layers):
        shapes[f"lstm{layer}.wx"] = (GATES * dims.hidden, d_in)
        shapes[f"lstm{layer}.wh"] = (GATES * dims.hidden, dims.hidden)
        shapes[f"lstm{layer}.b"] = (GATES * dims.hidden,)
        d_in = dims.hidden
    for name in ("attn.wq", "attn.wk", "attn.wv"):
        shapes[name] = (dims.hidden, dims.hidden)
    shapes["embed.w"] = (2 * dims.hidden, dims.embed)
    shapes["embed.b"] = (dims.embed,)
    return shapes


@dataclass(frozen=True)
class EncoderWeights:
    """Named float32 tensors validated against the declared dims."""

    dims: EncoderDims
    tensors: dict = field(repr=False)

    def __post_init__(self):
        shapes = expected_shapes(self.dims)
        for name, shape in shapes.items():
            if name not in self.tensors:
                raise ValueError(f"missing tensor '{name}'")
            t = self.tensors[name]
            if t.shape != shape:
                raise ValueError(
                    f"tensor '{name}' has shape {t.shape}, expected {shape}")
            if t.dtype != np.float32:
                raise ValueError(f"tensor '{name}' must be float32, got {t.dtype}")
            if not np.all(np.isfinite(t)):
                raise ValueError(f"tensor '{name}' contains non-finite values")
        extra = set(self.tensors) - set(shapes)
        if extra:
            raise ValueError(f"unexpected tensor '{sorted(extra)[0]}'")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


def init_random(dims: EncoderDims, seed: int = 0) -> EncoderWeights:
    """Deterministic scaled-uniform init: each tensor ~ U(-1/sqrt(fan_in), ...)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    tensors = {}
    for name, shape in expected_shapes(dims).items():
        # fan_in is the dimension the matrix contracts over: the last axis
        # for left-multiplied LSTM weights, the first for right-multiplied
        # attention/embedding weights, the hidden size for biases.
        if name.startswith("lstm"):
            fan_in = shape[-1] if len(shape) > 1 else dims.hidden
        else:
            fan_in = shape[0] if len(shape) > 1 else 2 * dims.hidden
        scale = 1.0 / np.sqrt(fan_in)
        tensors[name] = rng.uniform(-scale, scale, size=shape).astype(np.float32)
    return EncoderWeights(dims=dims, tensors=tensors)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lstm_forward(features: np.ndarray, weights: EncoderWeights) -> np.ndarray:
    """Run the stacked LSTM; returns the last layer's hidden states (L x D).

    Zero initial state. Gate pre-activations are wx @ x_t + wh @ h_{t-1} + b
    with the four gates stacked (input, forget, cell, output); compute is
    float64 over the float32 parameters.
    """
    x = as_float_matrix(features, "features")
    dims = weights.dims
    if x.shape[1] != dims.input_dim:
        raise ValueError(
            f"feature dim {x.shape[1]} does not match encoder input dim {dims.input_dim}")
    h_size = dims.hidden
    for layer in range(dims.layers):
        wx = weights[f"lstm{layer}.wx"].astype(np.float64)
        wh = weights[f"lstm{layer}.wh"].astype(np.float64)
        b = weights[f"lstm{layer}.b"].astype(np.float64)
        pre_x = x @ wx.T + b
        h = np.zeros(h_size)
        c = np.zeros(h_size)
        outs = np.empty((len(x), h_size))
        for t in range(len(x)):
            z = pre_x[t] + wh @ h
            i = _sigmoid(z[:h_size])
            f = _sigmoid(z[h_size: 2 * h_size])
            g = np.tanh(z[2 * h_size: 3 * h_size])
            o = _sigmoid(z[3 * h_size:])
            c = f * c + i * g
            h = o * np.tanh(c)
            outs[t] = h
        x = outs
    return x


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def attention_pool(hidden: np.ndarray, weights: EncoderWeights,
                   scale: bool = True) -> np.ndarray:
    """Self-attention pooling: softmax(Q Kᵀ [/√D]) V, then columnwise max.

    The 1/sqrt(D) score scaling is a stability knob, on by default and
    switchable off since the combination is otherwise underdetermined.
    """
    h = as_float_matrix(hidden, "hidden")
    d = weights.dims.hidden
    if h.shape[1] != d:
        raise ValueError(f"hidden dim {h.shape[1]} does not match encoder dim {d}")
    q = h @ weights["attn.wq"].astype(np.float64)
    k = h @ weights["attn.wk"].astype(np.float64)
    v = h @ weights["attn.wv"].astype(np.float64)
    scores = q @ k.T
    if scale:
        scores = scores / np.sqrt(d)
    attended = softmax_rows(scores) @ v
    return attended.max(axis=0)


@dataclass(frozen=True)
class StyleEmbedding:
    """Unit-norm embedding vector with optional speaker/style labels."""

    vector: np.ndarray
    speaker: str | None = None
    style: str | None = None

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        object.__setattr__(self, "vector", v)
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"embedding norm {norm} is not 1 within 1e-6")
        if self.style is not None and self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}, expected one of {STYLES}")


def embed(features: np.ndarray, weights: EncoderWeights, combine: str = "last",
          scale: bool = True, speaker: str | None = None,
          style: str | None = None) -> StyleEmbedding:
    """Full forward pass: LSTM, attention pooling, combine, affine, L2 norm.

    combine selects the LSTM summary concatenated with the context vector:
    "last" (final hidden state, default) or "mean" (time average).
    """
    if combine not in ("last", "mean"):
        raise ValueError(f"combine must be 'last' or 'mean', got {combine!r}")
    hidden = lstm_forward(features, weights)
    context = attention_pool(hidden, weights, scale=scale)
    summary = hidden[-1] if combine == "last" else hidden.mean(axis=0)
    z = np.concatenate([context, summary])
    raw = z @ weights["embed.w"].astype(np.float64) + weights["embed.b"].astype(np.float64)
    norm = np.linalg.norm(raw)
    if norm == 0.0:
        raise NumericError("embedding collapsed to the zero vector")
    return StyleEmbedding(vector=raw / norm, speaker=speaker, style=style)


def style_centroid(embeddings) -> StyleEmbedding:
    """Renormalized mean of embeddings sharing one style label."""
    items = list(embeddings)
    if not items:
        raise ValueError("cannot take the centroid of an empty set")
    styles = {e.style for e in items}
    if len(styles) > 1:
        raise ValueError(f"mixed style labels in centroid input: {sorted(map(str, styles))}")
    speakers = {e.speaker for e in items}
    mean = np.mean([e.vector for e in items], axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        raise NumericError("centroid collapsed to the zero vector")
    return StyleEmbedding(vector=mean / norm, style=items[0].style,
                          speaker=speakers.pop() if len(speakers) == 1 else None)


def cosine_similarity(a, b) -> float:
    va = a.vector if isinstance(a, StyleEmbedding) else np.asarray(a, dtype=np.float64)
    vb = b.vector if isinstance(b, StyleEmbedding) else np.asarray(b, dtype=np.float64)
    return float(np.clip(np.dot(va, vb), -1.0, 1.0))


def save_weights(weights: EncoderWeights, path) -> None:
    """Write a UTF-8 descriptor (name, shape, byte offset per line) at `path`
    and the concatenated little-endian float32 blob at `path`.bin."""
    lines = ["voxstyle-weights 1"]
    blob = bytearray()
    for name in expected_shapes(weights.dims):
        t = weights[name]
        shape = "x".join(str(s) for s in t.shape)
        lines.append(f"{name} {shape} {len(blob)}")
        blob.extend(np.ascontiguousarray(t, dtype="<f4").tobytes())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(str(path) + ".bin", "wb") as fh:
        fh.write(bytes(blob))


def _dims_from_shapes(shapes: dict) -> EncoderDims:
    try:
        input_dim = shapes["lstm0.wx"][1]
        hidden = shapes["attn.wq"][0]
        emb = shapes["embed.b"][0]
    except KeyError as exc:
        raise FormatError(f"weight file is missing tensor {exc.args[0]!r}") from exc
    layers = sum(1 for name in shapes if name.endswith(".wx"))
    return EncoderDims(input_dim=int(input_dim), hidden=int(hidden),
                       embed=int(emb), layers=layers)


def load_weights(path) -> EncoderWeights:
    """Inverse of save_weights; round trip is bit-exact."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "voxstyle-weights 1":
        raise FormatError(f"{path}: not a weight descriptor file")
    with open(str(path) + ".bin", "rb") as fh:
        blob = fh.read()

    records = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{path}:{i}: malformed descriptor line {line!r}")
        name, shape_s, offset_s = parts
        try:
            shape = tuple(int(s) for s in shape_s.split("x"))
            offset = int(offset_s)
        except ValueError as exc:
            raise FormatError(f"{path}:{i}: bad shape/offset for tensor '{name}'") from exc
        records.append((name, shape, offset))

    tensors = {}
    for name, shape, offset in records:
        count = int(np.prod(shape))
        end = offset + 4 * count
        if offset < 0 or end > len(blob):
            raise FormatError(f"weight blob too short for tensor '{name}'")
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        tensors[name] = flat.reshape(shape).astype(np.float32)

    dims = _dims_from_shapes({name: shape for name, shape, _ in records})
    try:
        return EncoderWeights(dims=dims, tensors=tensors)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def embeddings_to_csv(records, path) -> None:
    """records: iterable of (utterance_id, speaker, style, vector)."""
    rows = list(records)
    if not rows:
        raise ValueError("no embedding records to write")
    k = len(np.asarray(rows[0][3]))
    header = "utterance_id,speaker,style," + ",".join(f"e{i}" for i in range(k))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for utt, speaker, style, vec in rows:
            vals = ",".join(repr(float(v)) for v in np.asarray(vec))
            fh.write(f"{utt},{speaker},{style},{vals}\n")


def embeddings_from_csv(path):
    """Yields (utterance_id, speaker, style, vector) parsed from the CSV."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if cols[:3] != ["utterance_id", "speaker", "style"]:
            raise FormatError(f"{path}: unexpected embeddings CSV header {header!r}")
        out = []
        for i, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(cols):
                raise FormatError(f"{path}:{i}: expected {len(cols)} fields, got {len(parts)}")
            vec = np.array([float(v) for v in parts[3:]])
            out.append((parts[0], parts[1], parts[2], vec))
    return out


class StyleEncoder(BaseEstimator, TransformerMixin):
    """Estimator facade: fit() materializes weights, transform() embeds.

    X is a sequence of (L x input_dim) feature matrices; transform returns
    an (n x embed) array of unit-norm rows. embed_one() gives the labeled
    StyleEmbedding for a single utterance.
    """

    def __init__(self, dims=None, weights=None, seed=0, combine="last", scale=True):
        self.dims = dims
        self.weights = weights
        self.seed = seed
        self.combine = combine
        self.scale = scale

    def fit(self, X=None, y=None):
        if self.weights is not None:
            self.weights_ = self.weights
        else:
            dims = self.dims
            if dims is None:
                if not X:
                    raise ValueError("cannot infer dims without data or explicit dims")
                dims = EncoderDims(input_dim=int(np.asarray(X[0]).shape[1]))
            self.weights_ = init_random(dims, self.seed)
        return self

    def embed_one(self, features, speaker=None, style=None) -> StyleEmbedding:
        if not hasattr(self, "weights_"):
            raise ValueError("StyleEncoder is not fitted; call fit() first")
        return embed(features, self.weights_, combine=self.combine,
                     scale=self.scale, speaker=speaker, style=style)

    def transform(self, X):
        if not hasattr(self, "weights_"):
            raise ValueError("StyleEncoder is not fitted; call fit() first")
        return np.array([self.embed_one(x).vector for x in X])
