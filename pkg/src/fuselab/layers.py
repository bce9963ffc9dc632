"""Neural building blocks and the two modality encoders.

Both encoders emit a latent vector of the same dimension d, asserted at
construction and per forward pass, so any fusion mechanism can consume
their outputs interchangeably.

Encoders are immutable during inference and safe to share read-only
across threads; training mutates parameters and must be serialized by
the caller.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import numcore as nc
from .exceptions import ConfigError, InputError, ShapeError
from .numcore import Tensor

INIT_SCALE = 0.08  # uniform init half-width for the recurrent gates

ACTIVATIONS = ("identity", "sigmoid", "tanh", "relu", "softmax")


def _glorot(rng: np.random.Generator, shape: Tuple[int, ...],
            fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _apply_activation(x: Tensor, activation: str) -> Tensor:
    if activation == "identity":
        return x
    if activation == "sigmoid":
        return nc.sigmoid(x)
    if activation == "tanh":
        return nc.tanh(x)
    if activation == "relu":
        return nc.relu(x)
    if activation == "softmax":
        return nc.softmax(x, axis=-1)
    raise ConfigError(f"unknown activation '{activation}', expected one of {ACTIVATIONS}")


class DenseLayer:
    """Fully connected layer y = activation(W x + b)."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "identity",
                 rng: Optional[np.random.Generator] = None, name: str = "dense"):
        if out_dim < 1 or in_dim < 1:
            raise ConfigError(f"dense layer dims must be positive, got {in_dim}x{out_dim}")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation '{activation}'")
        rng = rng or np.random.default_rng(0)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.name = name
        self.weights = Tensor(_glorot(rng, (out_dim, in_dim), in_dim, out_dim),
                              requires_grad=True, name=f"{name}.weights")
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True, name=f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return dense_forward(x, self)

    def parameters(self) -> List[Tensor]:
        return [self.weights, self.bias]


def dense_forward(x: Tensor, layer: DenseLayer) -> Tensor:
    """Apply a dense layer to a vector (in,) or a batch (n, in)."""
    if x.shape[-1] != layer.in_dim:
        raise ShapeError(f"dense_forward: input {x.shape} does not match weights "
                         f"{layer.weights.shape}")
    return _apply_activation(nc.linear(x, layer.weights, layer.bias), layer.activation)


class EmbeddingTable:
    """Token-id to vector lookup with an out-of-vocabulary fallback row."""

    def __init__(self, vocab_size: int, dim: int, oov_index: int = 0,
                 rng: Optional[np.random.Generator] = None, name: str = "embed"):
        if vocab_size < 1 or dim < 1:
            raise ConfigError(f"embedding table dims must be positive, got {vocab_size}x{dim}")
        if not 0 <= oov_index < vocab_size:
            raise ConfigError(f"oov index {oov_index} outside vocabulary of {vocab_size}")
        rng = rng or np.random.default_rng(0)
        self.vocab_size = vocab_size
        self.dim = dim
        self.oov_index = oov_index
        self.matrix = Tensor(rng.uniform(-INIT_SCALE, INIT_SCALE, size=(vocab_size, dim)),
                             requires_grad=True, name=f"{name}.matrix")

    def lookup(self, ids: Sequence[int]) -> Tensor:
        mapped = np.array([i if 0 <= i < self.vocab_size else self.oov_index for i in ids],
                          dtype=np.intp)
        return nc.take_rows(self.matrix, mapped)

    def parameters(self) -> List[Tensor]:
        return [self.matrix]


class RecurrentTextEncoder:
    """Bidirectional gated recurrence with additive word attention.

    Each direction runs a standard input/forget/output/candidate cell over
    the embedded token sequence; per-step hidden states from the two
    directions are concatenated, scored against a learned query vector,
    softmax-normalized, and the attention-weighted sum is projected to the
    latent dimension d.
    """

    def __init__(self, vocab_size: int, embed_dim: int, hidden_dim: int, latent_dim: int,
                 rng: Optional[np.random.Generator] = None, tied_directions: bool = False):
        if latent_dim < 1 or hidden_dim < 1:
            raise ConfigError("encoder dims must be positive")
        rng = rng or np.random.default_rng(0)
        self.latent_dim = latent_dim
        self.hidden_dim = hidden_dim
        self.embedding = EmbeddingTable(vocab_size, embed_dim, rng=rng, name="text.embed")
        self.fwd = self._make_cell(embed_dim, hidden_dim, rng, "text.fwd")
        if tied_directions:
            self.bwd = self.fwd
        else:
            self.bwd = self._make_cell(embed_dim, hidden_dim, rng, "text.bwd")
        self.query = Tensor(rng.uniform(-INIT_SCALE, INIT_SCALE, size=2 * hidden_dim),
                            requires_grad=True, name="text.attn_query")
        self.proj = DenseLayer(2 * hidden_dim, latent_dim, "identity", rng, name="text.proj")

    @staticmethod
    def _make_cell(embed_dim: int, hidden_dim: int, rng, name: str) -> Dict[str, Tensor]:
        # one stacked weight for the four gates; forget-gate bias starts at 1
        w = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(4 * hidden_dim, embed_dim + hidden_dim))
        b = np.zeros(4 * hidden_dim)
        b[hidden_dim : 2 * hidden_dim] = 1.0
        return {
            "w": Tensor(w, requires_grad=True, name=f"{name}.w"),
            "b": Tensor(b, requires_grad=True, name=f"{name}.b"),
        }

    def parameters(self) -> List[Tensor]:
        params = self.embedding.parameters() + [self.fwd["w"], self.fwd["b"]]
        if self.bwd is not self.fwd:
            params += [self.bwd["w"], self.bwd["b"]]
        params += [self.query] + self.proj.parameters()
        return params

    def recurrent_parameters(self) -> List[Tensor]:
        params = [self.fwd["w"], self.fwd["b"]]
        if self.bwd is not self.fwd:
            params += [self.bwd["w"], self.bwd["b"]]
        return params

    def _run_cell(self, cell: Dict[str, Tensor], embedded: Tensor, length: int,
                  batch: int) -> List[Tensor]:
        h = Tensor(np.zeros((batch, self.hidden_dim)))
        c = Tensor(np.zeros((batch, self.hidden_dim)))
        hd = self.hidden_dim
        states = []
        for t in range(length):
            x_t = embedded[:, t, :]
            gates = nc.linear(nc.concat([x_t, h], axis=1), cell["w"], cell["b"])
            i = nc.sigmoid(gates[:, 0:hd])
            f = nc.sigmoid(gates[:, hd : 2 * hd])
            o = nc.sigmoid(gates[:, 2 * hd : 3 * hd])
            g = nc.tanh(gates[:, 3 * hd : 4 * hd])
            c = nc.add(nc.mul(f, c), nc.mul(i, g))
            h = nc.mul(o, nc.tanh(c))
            states.append(h)
        return states

    def hidden_states(self, ids_batch: np.ndarray) -> Tuple[List[Tensor], List[Tensor]]:
        """Per-timestep forward and backward hidden states, for inspection."""
        batch, length = ids_batch.shape
        flat = self.embedding.lookup(ids_batch.reshape(-1))
        embedded = flat.reshape(batch, length, self.embedding.dim)
        fwd_states = self._run_cell(self.fwd, embedded, length, batch)
        rev = embedded[:, ::-1, :] if length > 1 else embedded
        bwd_states = self._run_cell(self.bwd, rev, length, batch)
        bwd_states = bwd_states[::-1]
        return fwd_states, bwd_states

    def encode_batch(self, ids_batch: np.ndarray) -> Tuple[Tensor, Tensor]:
        """Encode a (batch, length) id matrix to (batch, d) latents.

        Returns (latents, attention weights of shape (batch, length)).
        """
        ids_batch = np.asarray(ids_batch)
        if ids_batch.ndim != 2 or ids_batch.shape[1] < 1:
            raise InputError(f"encode_batch: need a (batch, length>=1) id matrix, "
                             f"got {ids_batch.shape}")
        batch, length = ids_batch.shape
        fwd_states, bwd_states = self.hidden_states(ids_batch)
        # (batch, length, 2h) stack of bidirectional states
        per_step = [nc.concat([f, b], axis=1) for f, b in zip(fwd_states, bwd_states)]
        stacked = nc.concat([s.reshape(batch, 1, 2 * self.hidden_dim) for s in per_step], axis=1)
        flat = stacked.reshape(batch * length, 2 * self.hidden_dim)
        scores = nc.matmul(flat, self.query).reshape(batch, length)
        weights = nc.softmax(scores, axis=-1)
        context = nc.tsum(nc.row_scale(flat, weights.reshape(batch * length))
                          .reshape(batch, length, 2 * self.hidden_dim), axis=1)
        latent = self.proj(context)
        if latent.shape != (batch, self.latent_dim):
            raise ShapeError(f"text encoder emitted {latent.shape}, "
                             f"expected ({batch}, {self.latent_dim})")
        return latent, weights


def encode_text(tokens: Sequence[int], encoder: RecurrentTextEncoder) -> Tuple[Tensor, Tensor]:
    """Encode one token-id sequence to (latent of length d, attention weights)."""
    if len(tokens) < 1:
        raise InputError("encode_text: empty sequence; substitute the empty-text sentinel token")
    latents, weights = encoder.encode_batch(np.asarray(tokens, dtype=np.intp).reshape(1, -1))
    return latents.reshape(encoder.latent_dim), weights.reshape(len(tokens))


class ConvVisualEncoder:
    """Two stride-1 3x3 convolutions with max pooling, then a projection.

    The feature maps are average-pooled onto a fixed 2x2 spatial grid
    before the projection, so the latent size is independent of the
    admissible input grid size while coarse position (which quadrant a
    feature sits in) survives.
    """

    KERNEL = 3
    POOL = 2
    SUMMARY_GRID = 2

    def __init__(self, in_channels: int, latent_dim: int, channels: Tuple[int, int] = (8, 16),
                 rng: Optional[np.random.Generator] = None):
        if latent_dim < 1 or in_channels < 1:
            raise ConfigError("encoder dims must be positive")
        rng = rng or np.random.default_rng(0)
        self.latent_dim = latent_dim
        self.in_channels = in_channels
        c1, c2 = channels
        k = self.KERNEL
        fan1 = k * k * in_channels
        fan2 = k * k * c1
        self.kernel1 = Tensor(_glorot(rng, (k, k, in_channels, c1), fan1, c1),
                              requires_grad=True, name="visual.kernel1")
        self.bias1 = Tensor(np.zeros(c1), requires_grad=True, name="visual.bias1")
        self.kernel2 = Tensor(_glorot(rng, (k, k, c1, c2), fan2, c2),
                              requires_grad=True, name="visual.kernel2")
        self.bias2 = Tensor(np.zeros(c2), requires_grad=True, name="visual.bias2")
        s = self.SUMMARY_GRID
        self.proj = DenseLayer(s * s * c2, latent_dim, "identity", rng, name="visual.proj")

    def parameters(self) -> List[Tensor]:
        return [self.kernel1, self.bias1, self.kernel2, self.bias2] + self.proj.parameters()

    def _summary_cells(self, h: Tensor) -> Tensor:
        """Average-pool (batch, H, W, C) onto the fixed summary grid and
        flatten to (batch, grid*grid*C)."""
        _, height, width, _ = h.shape
        s = self.SUMMARY_GRID
        if height < s or width < s:
            raise ShapeError(f"visual encoder: feature map {h.shape} smaller than "
                             f"the {s}x{s} summary grid (input grid too small)")
        h_cuts = [round(i * height / s) for i in range(s + 1)]
        w_cuts = [round(j * width / s) for j in range(s + 1)]
        cells = []
        for i in range(s):
            for j in range(s):
                cell = h[:, h_cuts[i] : h_cuts[i + 1], w_cuts[j] : w_cuts[j + 1], :]
                cells.append(nc.tmean(cell, axis=(1, 2)))
        return nc.concat(cells, axis=1)

    def encode_batch(self, grids: Tensor) -> Tensor:
        """Encode (batch, H, W, C) grids to (batch, d) latents."""
        if grids.ndim != 4:
            raise ShapeError(f"encode_batch: need (batch, H, W, C), got {grids.shape}")
        h = nc.relu(nc.conv2d(grids, self.kernel1, self.bias1))
        h = nc.maxpool2d(h, self.POOL)
        h = nc.relu(nc.conv2d(h, self.kernel2, self.bias2))
        latent = self.proj(self._summary_cells(h))
        if latent.shape[-1] != self.latent_dim:
            raise ShapeError(f"visual encoder emitted {latent.shape}")
        return latent


def encode_visual(grid: Tensor, encoder: ConvVisualEncoder) -> Tensor:
    """Encode one H x W x C grid to a latent of length d."""
    if grid.ndim != 3:
        raise ShapeError(f"encode_visual: need (H, W, C), got {grid.shape}")
    if not np.isfinite(grid.data).all():
        raise InputError("encode_visual: grid contains non-finite values")
    latent = encoder.encode_batch(grid.reshape(1, *grid.shape))
    return latent.reshape(encoder.latent_dim)
