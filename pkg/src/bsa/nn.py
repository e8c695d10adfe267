"""16-100-10 ReLU network inference over interchangeable stream arithmetic backends.

Per layer, quantized inputs and weight magnitudes are multiplied by the
backend's multiplier and summed pairwise by its scaled adders in a balanced
tree. Positive- and negative-weight products form separate trees whose
counts are converted back to binary and subtracted. Bias and ReLU are then
applied in the binary domain.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import stochastic
from .stream import Accuracy, StreamValue, UnitKind, canonical_stream, value
from .sync_units import scsm_product_table
from .units import UNITS

log = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_WEIGHTS = DATA_DIR / "weights.json"
DEFAULT_TRAIN = DATA_DIR / "digits16.tra"
DEFAULT_TEST = DATA_DIR / "digits16.tes"
N_LEVELS = (8, 16, 32, 64, 128, 256)


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray  # (N, 16) ints in [0, 100]
    labels: np.ndarray  # (N,)

    def __len__(self) -> int:
        return len(self.labels)

    def head(self, count: int | None) -> "Dataset":
        if count is None:
            return self
        return Dataset(self.features[:count], self.labels[:count])


def load_pendigits(path) -> Dataset:
    """Parse a UCI pendigits file: 16 integer features in [0, 100], then the label."""
    feats, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 17:
                raise DatasetError(f"{path}:{lineno}: expected 17 fields, got {len(parts)}")
            try:
                vals = [int(p) for p in parts]
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-integer field") from None
            if any(not 0 <= v <= 100 for v in vals[:16]):
                raise DatasetError(f"{path}:{lineno}: feature outside [0, 100]")
            if not 0 <= vals[16] <= 9:
                raise DatasetError(f"{path}:{lineno}: label outside [0, 9]")
            feats.append(vals[:16])
            labels.append(vals[16])
    if not labels:
        log.warning("%s: empty dataset", path)
        return Dataset(np.zeros((0, 16), dtype=np.int64), np.zeros(0, dtype=np.int64))
    return Dataset(np.array(feats, dtype=np.int64), np.array(labels, dtype=np.int64))


def save_pendigits(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for f, y in zip(ds.features, ds.labels):
            fh.write(",".join(str(int(v)) for v in f) + f",{int(y)}\n")


def quantize(x: float, n: int) -> StreamValue:
    """Nearest ``k/n`` to ``x`` (ties round up); out-of-range input is clamped."""
    if not 0.0 <= x <= 1.0:
        log.warning("quantize: %r outside [0, 1], clamped", x)
        x = min(1.0, max(0.0, x))
    return StreamValue(int(math.floor(x * n + 0.5)), n)


def quantize_array(x: np.ndarray, n: int) -> np.ndarray:
    return np.floor(np.clip(x, 0.0, 1.0) * n + 0.5).astype(np.int64)


# ---------------------------------------------------------------------------
# network model


@dataclass
class NetworkModel:
    weights: list[np.ndarray]  # (out, in) per layer
    biases: list[np.ndarray]
    input_scales: list[float]  # layer inputs are divided by these before quantization
    # (features enter layer 0 already divided by 100)
    metadata: dict = field(default_factory=dict)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def __post_init__(self):
        for a, b in zip(self.weights, self.weights[1:]):
            if a.shape[0] != b.shape[1]:
                raise ValueError("layer dimensions do not chain")
        for w, b in zip(self.weights, self.biases):
            if b.shape != (w.shape[0],):
                raise ValueError("bias length does not match layer width")

    def to_json(self) -> str:
        return json.dumps(
            {
                "dims": self.dims,
                "layers": [
                    {"weights": w.tolist(), "bias": b.tolist(), "input_scale": s}
                    for w, b, s in zip(self.weights, self.biases, self.input_scales)
                ],
                "metadata": self.metadata,
            }
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "NetworkModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        layers = doc["layers"]
        net = cls(
            [np.array(l["weights"], dtype=float) for l in layers],
            [np.array(l["bias"], dtype=float) for l in layers],
            [float(l["input_scale"]) for l in layers],
            doc.get("metadata", {}),
        )
        if net.dims != doc["dims"]:
            raise ValueError(f"dims header {doc['dims']} disagrees with matrices {net.dims}")
        return net


def _relu(x):
    return np.maximum(x, 0.0)


def train(
    ds: Dataset,
    hidden: int = 100,
    epochs: int = 400,
    lr: float = 0.1,
    batch: int = 32,
    seed: int = 0,
    clip_quantile: float = 1.0,
) -> NetworkModel:
    """Mini-batch gradient descent on softmax cross-entropy, exact float arithmetic."""
    rng = np.random.default_rng(seed)
    x = ds.features / 100.0
    y = ds.labels
    w1 = rng.normal(0, math.sqrt(2 / 16), (hidden, 16))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0, math.sqrt(2 / hidden), (10, hidden))
    b2 = np.zeros(10)
    onehot = np.eye(10)[y]
    for _ in range(epochs):
        order = rng.permutation(len(y))
        for lo in range(0, len(y), batch):
            idx = order[lo : lo + batch]
            xb, tb = x[idx], onehot[idx]
            z1 = xb @ w1.T + b1
            h = _relu(z1)
            z2 = h @ w2.T + b2
            p = np.exp(z2 - z2.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            g2 = (p - tb) / len(idx)
            gh = (g2 @ w2) * (z1 > 0)
            w2 -= lr * g2.T @ h
            b2 -= lr * g2.sum(0)
            w1 -= lr * gh.T @ xb
            b1 -= lr * gh.sum(0)
    hid = _relu(x @ w1.T + b1)
    act_scale = float(np.quantile(hid, clip_quantile)) or 1.0
    meta = {"trainer": "minibatch-sgd", "epochs": epochs, "lr": lr, "batch": batch,
            "seed": seed, "hidden": hidden, "train_samples": len(y),
            "hidden_scale_quantile": clip_quantile}
    return NetworkModel([w1, w2], [b1, b2], [1.0, act_scale], meta)


# ---------------------------------------------------------------------------
# backends


@dataclass
class NumOp:
    """Stream counts ``k`` (any shape) sharing one stream length ``m``."""

    k: np.ndarray
    m: int


class Backend:
    """Arithmetic backend: a multiplier and a scaled adder, combined into trees.

    The scalar methods work on :class:`StreamValue` and, with ``bitlevel``,
    run the actual stream units. The ``vec_*`` methods evaluate whole layers
    through the units' verified value transfer functions.
    """

    name = "abstract"
    accuracy = Accuracy.FULLY_ACCURATE
    quantized = True
    mul_kind: UnitKind | None = None
    add_kind: UnitKind | None = None

    def __init__(self, bitlevel: bool = False, seed: int = 0):
        self.bitlevel = bitlevel
        self.seed = seed

    # scalar interface
    def multiply(self, a: StreamValue, b: StreamValue) -> StreamValue:
        if self.bitlevel:
            return value(UNITS[self.mul_kind](canonical_stream(a), canonical_stream(b)))
        op = self.vec_multiply(np.array(a.k), np.array(b.k), a.n)
        return StreamValue(int(op.k), op.m)

    def add(self, a: StreamValue, b: StreamValue) -> StreamValue:
        if a.n != b.n:
            raise ValueError("adder operands must share a stream length")
        if self.bitlevel:
            return value(UNITS[self.add_kind](canonical_stream(a), canonical_stream(b)))
        op = self.vec_add(NumOp(np.array(a.k), a.n), NumOp(np.array(b.k), b.n))
        return StreamValue(int(op.k), op.m)

    def adder_tree(self, values: Sequence[StreamValue]) -> tuple[StreamValue, int]:
        """Balanced pairwise reduction, zero-padded to a power of two.

        Returns the root value and the scale ``2**depth`` such that the sum of
        the leaves is ``root * scale``.
        """
        if not values:
            raise ValueError("adder_tree needs at least one operand")
        level = list(values)
        size = 1 << math.ceil(math.log2(len(level))) if len(level) > 1 else 1
        level += [StreamValue(0, level[0].n)] * (size - len(level))
        while len(level) > 1:
            level = [self.add(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        return level[0], size

    # vectorized interface
    def vec_multiply(self, xk, wk, n, x_ids=None, w_ids=None) -> NumOp:
        raise NotImplementedError

    def vec_add(self, a, b):
        raise NotImplementedError

    def vec_real(self, op) -> np.ndarray:
        return op.k / op.m

    def vec_zero(self, shape, n):
        raise NotImplementedError

    def start_layer(self, layer: int, n: int, shape=(1, 1)) -> None:
        pass


class FloatReference(Backend):
    """Conventional binary arithmetic on the quantized values."""

    name = "float-ref"

    def multiply(self, a, b):
        return StreamValue(a.k * b.k, a.n * b.n)

    def add(self, a, b):
        if a.n != b.n:
            raise ValueError("adder operands must share a stream length")
        return StreamValue(a.k + b.k, 2 * a.n)

    def vec_multiply(self, xk, wk, n, x_ids=None, w_ids=None):
        return NumOp((xk / n) * (wk / n), 1)

    def vec_add(self, a, b):
        return NumOp((a.k + b.k) / 2.0, 1)

    def vec_zero(self, shape, n):
        return NumOp(np.zeros(shape), 1)


class FloatRaw(FloatReference):
    """The trained network evaluated in float64 with no quantization."""

    name = "float-raw"
    quantized = False


class ExactBackend(Backend):
    """Fully-accurate units: products of length ``n**2``, adders doubling the length."""

    def vec_multiply(self, xk, wk, n, x_ids=None, w_ids=None):
        return NumOp(np.asarray(xk, dtype=np.int64) * wk, n * n)

    def vec_add(self, a, b):
        return NumOp(a.k + b.k, 2 * a.m)

    def vec_zero(self, shape, n):
        return NumOp(np.zeros(shape, dtype=np.int64), n * n)


class AsyncBackend(ExactBackend):
    name = "aisa-aism"
    mul_kind, add_kind = UnitKind.AISM, UnitKind.AISA


class SyncIncreasingBackend(ExactBackend):
    name = "sisa-sism"
    mul_kind, add_kind = UnitKind.SISM, UnitKind.SISA


class SemiAccurateBackend(Backend):
    """Constant-length SCSM products and SCSA adders (odd sums round up)."""

    name = "scsa-scsm"
    accuracy = Accuracy.SEMI_ACCURATE
    mul_kind, add_kind = UnitKind.SCSM, UnitKind.SCSA

    def __init__(self, bitlevel=False, seed=0):
        super().__init__(bitlevel, seed)
        self._tables: dict[int, np.ndarray] = {}

    def _table(self, n):
        if n not in self._tables:
            self._tables[n] = scsm_product_table(n)
        return self._tables[n]

    def vec_multiply(self, xk, wk, n, x_ids=None, w_ids=None):
        return NumOp(self._table(n)[xk, wk], n)

    def vec_add(self, a, b):
        return NumOp((a.k + b.k + 1) // 2, a.m)

    def vec_zero(self, shape, n):
        return NumOp(np.zeros(shape, dtype=np.int64), n)


class StochasticBackend(Backend):
    """AND multipliers and 2:1 MUX adders fed by one shared LFSR per layer.

    Every stream is the LFSR sequence read from its own phase offset and
    compared against the value; offsets are drawn from ``seed``.
    """

    name = "stochastic"
    accuracy = Accuracy.STOCHASTIC
    mul_kind, add_kind = UnitKind.STOCH_AND, UnitKind.STOCH_MUX

    def __init__(self, bitlevel=True, seed=0):
        super().__init__(True, seed)

    def start_layer(self, layer, n, shape=(1, 1)):
        self.n = n
        lf = stochastic.Lfsr.for_length(n, seed=self.seed + 7919 * layer)
        self.period = lf.period_bound
        cycle = np.array(stochastic.lfsr_stream(lf, self.period), dtype=np.int64)
        idx = (np.arange(self.period)[:, None] + np.arange(n)[None, :]) % self.period
        self._windows = cycle[idx]  # (period, n): the sequence read from each phase
        rng = np.random.default_rng([self.seed, layer, n])
        self._x_phase = rng.integers(0, self.period, size=shape[1])
        self._w_phase = rng.integers(0, self.period, size=shape[0] * shape[1])
        self._level = 0

    def _streams(self, k, phase):
        r = self._windows[phase]  # (..., n)
        return (r * self.n <= np.asarray(k)[..., None] * self.period).astype(np.uint8)

    def vec_multiply(self, xk, wk, n, x_ids=None, w_ids=None):
        xs = self._streams(xk, self._x_phase[x_ids])
        ws = self._streams(wk, self._w_phase[w_ids])
        return xs & ws

    def select_stream(self, level):
        phase = (self.seed * 31 + 17 * level) % self.period
        return (self._windows[phase] * 2 <= self.period).astype(np.uint8)

    def vec_add(self, a, b):
        return np.where(self.select_stream(self._level) == 1, b, a)

    def vec_real(self, op):
        return op.mean(axis=-1)

    def vec_zero(self, shape, n):
        return np.zeros(tuple(shape) + (n,), dtype=np.uint8)

    # the scalar interface treats each call as one freshly wired unit
    def multiply(self, a, b):
        self.start_layer(self._calls(), a.n, (1, 1))
        out = self.vec_multiply(np.array(a.k), np.array(b.k), a.n, 0, 0)
        return StreamValue(int(out.sum()), a.n)

    def add(self, a, b):
        self.start_layer(self._calls(), a.n, (1, 2))
        sa = self._streams(np.array(a.k), self._x_phase[0])
        sb = self._streams(np.array(b.k), self._x_phase[1])
        return StreamValue(int(self.vec_add(sa, sb).sum()), a.n)

    def _calls(self):
        self._ncalls = getattr(self, "_ncalls", 0) + 1
        return 1000 + self._ncalls


class LeeStyleBackend(StochasticBackend):
    """Stochastic AND multipliers with the two-input carry adder."""

    name = "scsa-and"
    add_kind = UnitKind.SCSA

    def vec_add(self, a, b):
        ones = a.astype(np.int8) + b
        carry = np.ones(ones.shape[:-1], dtype=np.uint8)
        out = np.empty_like(a)
        for t in range(ones.shape[-1]):
            o = ones[..., t]
            out[..., t] = np.where(o == 2, 1, np.where(o == 0, 0, carry))
            carry = np.where(o == 1, 1 - carry, carry).astype(np.uint8)
        return out


BACKENDS = {
    b.name: b
    for b in (FloatReference, FloatRaw, AsyncBackend, SyncIncreasingBackend,
              SemiAccurateBackend, LeeStyleBackend, StochasticBackend)
}
FULLY_ACCURATE_BACKENDS = ("float-ref", "aisa-aism", "sisa-sism")


def make_backend(name: str, seed: int = 0, bitlevel: bool = False) -> Backend:
    try:
        cls = BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; valid: {', '.join(BACKENDS)}") from None
    return cls(bitlevel=bitlevel, seed=seed)


# ---------------------------------------------------------------------------
# forward passes


def layer_forward(
    inputs: Sequence[StreamValue],
    weights: np.ndarray,
    backend: Backend,
    n: int,
    bias: np.ndarray | None = None,
    weight_scale: float | None = None,
    input_scale: float = 1.0,
    relu: bool = True,
) -> list[float]:
    """One layer for a single sample through the backend's scalar units.

    Real inputs are ``input_scale * k/n``. Weights are quantized as
    ``|w| / weight_scale``; by default each neuron uses its largest magnitude.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[1] != len(inputs):
        raise ValueError(f"weights shape {w.shape} does not match {len(inputs)} inputs")
    if any(x.n != n for x in inputs):
        raise ValueError("inputs must be quantized to the layer's n")
    scales = neuron_scales(w) if weight_scale is None else np.full(w.shape[0], weight_scale)
    wq = quantize_array(np.abs(w) / scales[:, None], n)
    out = []
    for o in range(w.shape[0]):
        scale = scales[o]
        total = 0.0
        for sign in (1, -1):
            members = [i for i in range(w.shape[1]) if np.sign(w[o, i]) == sign]
            if not members:
                continue
            prods = [backend.multiply(inputs[i], StreamValue(int(wq[o, i]), n)) for i in members]
            root, size = backend.adder_tree(prods)
            total += sign * float(root.fraction) * size
        y = total * scale * input_scale + (0.0 if bias is None else float(bias[o]))
        out.append(max(y, 0.0) if relu else y)
    return out


def neuron_scales(w: np.ndarray) -> np.ndarray:
    s = np.abs(w).max(axis=1)
    return np.where(s > 0, s, 1.0)


def _groups(w: np.ndarray):
    """Bucket each neuron's positive/negative members by padded tree size."""
    out = []
    for sign in (1, -1):
        mask = np.sign(w) == sign
        counts = mask.sum(axis=1)
        sizes = np.where(counts > 1, 1 << np.ceil(np.log2(np.maximum(counts, 1))).astype(int), counts)
        for size in np.unique(sizes[sizes > 0]):
            neurons = np.flatnonzero(sizes == size)
            idx = np.full((len(neurons), size), -1, dtype=np.int64)
            for r, o in enumerate(neurons):
                m = np.flatnonzero(mask[o])
                idx[r, : len(m)] = m
            out.append((sign, int(size), neurons, idx))
    return out


def _tree(backend: Backend, op):
    level = 0
    while True:
        width = (op.k if isinstance(op, NumOp) else op).shape[2]
        if width == 1:
            break
        backend._level = level
        if isinstance(op, NumOp):
            a, b = NumOp(op.k[:, :, 0::2], op.m), NumOp(op.k[:, :, 1::2], op.m)
        else:
            a, b = op[:, :, 0::2], op[:, :, 1::2]
        op = backend.vec_add(a, b)
        level += 1
    return backend.vec_real(op)[:, :, 0]


def layer_forward_batch(
    xk: np.ndarray,
    w: np.ndarray,
    backend: Backend,
    n: int,
    layer: int = 0,
    chunk: int = 32,
) -> np.ndarray:
    """Per-neuron dot products of ``xk/n`` with ``w`` as the backend computes them.

    Each neuron's weight magnitudes are quantized relative to that neuron's
    largest one; the scale is reapplied after conversion back to binary.
    Returns shape ``(B, O)``.
    """
    scale = neuron_scales(w)
    wq = quantize_array(np.abs(w) / scale[:, None], n)
    backend.start_layer(layer, n, w.shape)
    B, O = xk.shape[0], w.shape[0]
    out = np.zeros((B, O))
    w_ids_full = np.arange(w.size).reshape(w.shape)
    for sign, size, neurons, idx in _groups(w):
        valid = idx >= 0
        safe = np.where(valid, idx, 0)
        wk = np.where(valid, wq[neurons[:, None], safe], 0)
        w_ids = np.where(valid, w_ids_full[neurons[:, None], safe], -1)
        for lo in range(0, B, chunk):
            xb = xk[lo : lo + chunk][:, safe] * valid  # (b, O_b, size)
            x_ids = np.broadcast_to(safe, xb.shape)
            op = backend.vec_multiply(xb, np.broadcast_to(wk, xb.shape), n, x_ids,
                                      np.broadcast_to(w_ids, xb.shape))
            out[lo : lo + chunk, neurons] += sign * _tree(backend, op) * size
    return out * scale[None, :]


def forward_batch(net: NetworkModel, features: np.ndarray, backend: Backend, n: int) -> np.ndarray:
    """Output-layer pre-activations for a batch of raw features (0..100)."""
    x = np.asarray(features, dtype=float) / 100.0
    nl = len(net.weights)
    for li, (w, b, s) in enumerate(zip(net.weights, net.biases, net.input_scales)):
        if backend.quantized:
            xk = quantize_array(x / s, n)
            z = layer_forward_batch(xk, w, backend, n, layer=li) * s + b
        else:
            z = x @ w.T + b
        x = _relu(z) if li < nl - 1 else z
    return x


def infer(net: NetworkModel, sample: np.ndarray, backend: Backend, n: int) -> int:
    """Predicted label; ties go to the lowest index."""
    return int(np.argmax(forward_batch(net, np.asarray(sample)[None, :], backend, n)[0]))


def predict(net: NetworkModel, ds: Dataset, backend: Backend, n: int) -> np.ndarray:
    return np.argmax(forward_batch(net, ds.features, backend, n), axis=1)


def misclassification_rate(net: NetworkModel, ds: Dataset, backend: Backend, n: int) -> float:
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    return 100.0 * float(np.mean(predict(net, ds, backend, n) != ds.labels))
