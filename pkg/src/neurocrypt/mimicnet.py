"""Dense mimic networks with one two-class softmax head per output bit.

Three layouts are supported:

* ``fat_shallow``: one hidden layer of 1000 units,
* ``deep_thin``: four hidden layers of 128 units,
* ``cascade``: hidden layers of 128, 256, 256 and 128 units where every layer
  (and the head block) also sees the layer two steps back. Hidden layer ``l``
  consumes ``concat(a[l-1], a[l-2])`` with ``a[-1]`` the input; the heads
  consume ``concat(a[L-1], a[L-2])``.

Hidden widths may be overridden for scaled-down experiments and gradient
checks; the layout constraints of each kind still apply.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from neurocrypt.ciphers.base import ConfigurationError

ARCH_KINDS = ("fat_shallow", "deep_thin", "cascade")
ACTIVATIONS = ("sigmoid", "tanh", "relu")
PRESET_HIDDEN = {
    "fat_shallow": (1000,),
    "deep_thin": (128, 128, 128, 128),
    "cascade": (128, 256, 256, 128),
}
PROB_CLAMP = 1e-12


class NumericError(ArithmeticError):
    """Training produced a non-finite loss."""


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ArchitectureSpec:
    kind: str
    input_width: int
    output_bit_count: int
    hidden_sizes: tuple[int, ...] | None = None
    activation: str = "sigmoid"
    cascade_skip: bool | None = None

    def __post_init__(self) -> None:
        if self.kind not in ARCH_KINDS:
            raise ConfigurationError(f"unknown architecture {self.kind!r}; expected one of {ARCH_KINDS}")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")
        if self.input_width < 1 or self.output_bit_count < 1:
            raise ConfigurationError("input_width and output_bit_count must be positive")
        hidden = PRESET_HIDDEN[self.kind] if self.hidden_sizes is None else tuple(int(h) for h in self.hidden_sizes)
        object.__setattr__(self, "hidden_sizes", hidden)
        if self.cascade_skip is None:
            object.__setattr__(self, "cascade_skip", self.kind == "cascade")
        if not hidden or any(h < 1 for h in hidden):
            raise ConfigurationError("hidden sizes must be positive")
        if self.kind == "fat_shallow" and len(hidden) != 1:
            raise ConfigurationError("fat_shallow has exactly one hidden layer")
        if self.kind == "deep_thin" and (len(hidden) != 4 or len(set(hidden)) != 1):
            raise ConfigurationError("deep_thin has four hidden layers of equal width")
        if self.kind == "cascade" and len(hidden) != 4:
            raise ConfigurationError("cascade has four hidden layers")
        if self.kind != "cascade" and self.cascade_skip:
            raise ConfigurationError("skip connections are only defined for the cascade layout")

    @classmethod
    def preset(cls, kind: str, input_width: int, output_bit_count: int, activation: str = "sigmoid") -> "ArchitectureSpec":
        return cls(kind, input_width, output_bit_count, None, activation)

    @property
    def is_preset(self) -> bool:
        return self.hidden_sizes == PRESET_HIDDEN[self.kind]

    @property
    def name(self) -> str:
        label = f"{self.kind}-{self.activation}"
        if not self.is_preset:
            label += "-" + "x".join(map(str, self.hidden_sizes))
        if self.kind == "cascade" and not self.cascade_skip:
            label += "-noskip"
        return label

    def layer_sources(self, layer: int) -> tuple[int, ...]:
        """Activation indices feeding hidden layer ``layer``; index 0 is the input."""
        if self.cascade_skip and layer >= 1:
            return (layer, layer - 1)
        return (layer,)

    def head_sources(self) -> tuple[int, ...]:
        last = len(self.hidden_sizes)
        return (last, last - 1) if self.cascade_skip else (last,)

    def activation_width(self, index: int) -> int:
        return self.input_width if index == 0 else self.hidden_sizes[index - 1]

    def fan_in(self, layer: int) -> int:
        return sum(self.activation_width(i) for i in self.layer_sources(layer))

    def head_fan_in(self) -> int:
        return sum(self.activation_width(i) for i in self.head_sources())

    def param_shapes(self) -> list[tuple[int, ...]]:
        shapes: list[tuple[int, ...]] = []
        for layer, width in enumerate(self.hidden_sizes):
            shapes += [(self.fan_in(layer), width), (width,)]
        n2 = 2 * self.output_bit_count
        shapes += [(self.head_fan_in(), n2), (n2,)]
        return shapes

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "input_width": self.input_width,
            "output_bit_count": self.output_bit_count,
            "hidden_sizes": list(self.hidden_sizes),
            "activation": self.activation,
            "cascade_skip": bool(self.cascade_skip),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitectureSpec":
        return cls(
            d["kind"], int(d["input_width"]), int(d["output_bit_count"]),
            tuple(d["hidden_sizes"]), d.get("activation", "sigmoid"), bool(d.get("cascade_skip")),
        )


# -- activations: value and derivative expressed through the output ----------

def _sigmoid(z):
    # in place; the tanh form never overflows
    z *= 0.5
    np.tanh(z, out=z)
    z *= 0.5
    z += 0.5
    return z


def _sigmoid_grad(a):
    return a * (1 - a)


def _tanh_grad(a):
    return 1 - a * a


def _relu(z):
    return np.maximum(z, 0, out=z)


def _relu_grad(a):
    return (a > 0).astype(a.dtype)


_ACT = {
    "sigmoid": (_sigmoid, _sigmoid_grad),
    "tanh": (lambda z: np.tanh(z, out=z), _tanh_grad),
    "relu": (_relu, _relu_grad),
}


@dataclass
class PredictionBatch:
    """``probs[i, j] = (p0, p1)`` for example ``i``, output bit ``j`` (float64)."""

    probs: np.ndarray

    @property
    def p1(self) -> np.ndarray:
        return self.probs[..., 1]

    def __len__(self) -> int:
        return len(self.probs)

    def bits(self) -> np.ndarray:
        # strict comparison: an exact tie predicts 0
        return (self.probs[..., 1] > self.probs[..., 0]).astype(np.uint8)


@dataclass
class MimicNetwork:
    spec: ArchitectureSpec
    params: list[np.ndarray]
    parameter_seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dtype(self):
        return self.params[0].dtype

    @property
    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.params[2 * i], self.params[2 * i + 1]) for i in range(len(self.spec.hidden_sizes))]

    @property
    def heads(self) -> tuple[np.ndarray, np.ndarray]:
        """Head weights ``(fan_in, n, 2)`` and biases ``(n, 2)`` (views)."""
        w, b = self.params[-2], self.params[-1]
        return w.reshape(w.shape[0], -1, 2), b.reshape(-1, 2)

    def n_parameters(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "MimicNetwork":
        return MimicNetwork(self.spec, [p.copy() for p in self.params], self.parameter_seed)

    def astype(self, dtype) -> "MimicNetwork":
        return MimicNetwork(self.spec, [p.astype(dtype) for p in self.params], self.parameter_seed)

    # -- passes ------------------------------------------------------------

    def logits(self, x: np.ndarray, keep: bool = False) -> np.ndarray:
        """Head logits ``(B, n, 2)``. ``keep`` stores activations for :meth:`backward`."""
        spec = self.spec
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != spec.input_width:
            raise ValueError(f"expected (batch, {spec.input_width}) features, got {x.shape}")
        act, _ = _ACT[spec.activation]
        acts = [x]
        for layer, (w, b) in enumerate(self.layers):
            inp = _gather(acts, spec.layer_sources(layer))
            z = inp @ w
            z += b
            acts.append(act(z))
        head_in = _gather(acts, spec.head_sources())
        z = head_in @ self.params[-2]
        z += self.params[-1]
        if keep:
            self._cache = {"acts": acts}
        return z.reshape(len(x), spec.output_bit_count, 2)

    def forward(self, x: np.ndarray) -> PredictionBatch:
        return PredictionBatch(pair_softmax(self.logits(x).astype(np.float64)))

    def backward(self, dlogits: np.ndarray) -> list[np.ndarray]:
        """Parameter gradients given ``dL/dlogits`` of the last ``logits(keep=True)`` call."""
        spec = self.spec
        acts = self._cache.pop("acts")
        _, act_grad = _ACT[spec.activation]
        dz = dlogits.reshape(len(dlogits), -1)
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        dacts: list[np.ndarray | None] = [None] * len(acts)

        head_src = spec.head_sources()
        head_in = _gather(acts, head_src)
        grads[-2] = head_in.T @ dz
        grads[-1] = dz.sum(axis=0)
        _scatter(dz @ self.params[-2].T, head_src, acts, dacts)

        for layer in range(len(spec.hidden_sizes) - 1, -1, -1):
            a = acts[layer + 1]
            delta = dacts[layer + 1] * act_grad(a)
            src = spec.layer_sources(layer)
            w = self.params[2 * layer]
            grads[2 * layer] = _gather(acts, src).T @ delta
            grads[2 * layer + 1] = delta.sum(axis=0)
            if layer > 0:
                _scatter(delta @ w.T, src, acts, dacts)
        return grads

    def loss_and_gradients(self, x: np.ndarray, targets: np.ndarray) -> tuple[float, list[np.ndarray]]:
        """Mean over examples of the summed per-bit cross-entropy, and its gradients."""
        targets = np.asarray(targets)
        if targets.shape != (len(x), self.spec.output_bit_count):
            raise ValueError(f"targets shape {targets.shape} != ({len(x)}, {self.spec.output_bit_count})")
        z = self.logits(x, keep=True)
        loss, dz = cross_entropy(z, targets)
        if not np.isfinite(loss):
            self._cache.clear()
            raise NumericError(f"non-finite training loss {loss}")
        return loss, self.backward(dz)

    def loss(self, x: np.ndarray, targets: np.ndarray) -> float:
        return cross_entropy(self.logits(x), np.asarray(targets))[0]

    def predict_bits(self, x: np.ndarray, chunk: int = 8192) -> np.ndarray:
        out = [self.forward(x[i:i + chunk]).bits() for i in range(0, len(x), chunk)]
        if not out:
            return np.zeros((0, self.spec.output_bit_count), dtype=np.uint8)
        return np.concatenate(out)

    # -- persistence -------------------------------------------------------

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(dumps(self))

    @classmethod
    def load(cls, path: str | Path) -> "MimicNetwork":
        return loads(Path(path).read_bytes())


def _gather(acts, sources):
    if len(sources) == 1:
        return acts[sources[0]]
    return np.concatenate([acts[i] for i in sources], axis=1)


def _scatter(grad, sources, acts, dacts):
    start = 0
    for i in sources:
        width = acts[i].shape[1]
        if i > 0:
            part = grad[:, start:start + width]
            dacts[i] = part if dacts[i] is None else dacts[i] + part
        start += width


def pair_softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis (size 2) with max-logit subtraction."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and ``dL/dlogits`` for per-bit two-class softmax heads.

    The loss clamps probabilities to ``[1e-12, 1 - 1e-12]``; the gradient is
    the exact softmax gradient ``(p - onehot) / B``.
    """
    batch = len(logits)
    p = pair_softmax(logits)
    t = targets.astype(bool)
    p_true = np.where(t, p[..., 1], p[..., 0])
    loss = -np.log(np.clip(p_true, PROB_CLAMP, 1 - PROB_CLAMP)).sum() / batch
    grad = p
    grad[..., 1] -= t
    grad[..., 0] -= ~t
    grad /= batch
    return float(loss), grad


def build(spec: ArchitectureSpec, seed: int, dtype=np.float32) -> MimicNetwork:
    """Glorot-uniform weights drawn from PCG64(seed), zero biases.

    Each head is its own ``fan_in -> 2`` affine map, so head weights use a
    fan-out of 2.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    params = []
    shapes = spec.param_shapes()
    for i in range(0, len(shapes), 2):
        w_shape, b_shape = shapes[i], shapes[i + 1]
        fan_out = 2 if i == len(shapes) - 2 else w_shape[1]
        limit = np.sqrt(6.0 / (w_shape[0] + fan_out))
        params.append(rng.uniform(-limit, limit, size=w_shape).astype(dtype))
        params.append(np.zeros(b_shape, dtype=dtype))
    return MimicNetwork(spec, params, seed)


def zeros_like_network(spec: ArchitectureSpec, dtype=np.float64) -> MimicNetwork:
    return MimicNetwork(spec, [np.zeros(s, dtype=dtype) for s in spec.param_shapes()], 0)


def forward(net: MimicNetwork, batch: np.ndarray) -> PredictionBatch:
    return net.forward(batch)


def loss_and_gradients(net: MimicNetwork, batch: np.ndarray, targets: np.ndarray):
    return net.loss_and_gradients(batch, targets)


def predict_bits(net: MimicNetwork, batch: np.ndarray) -> np.ndarray:
    return net.predict_bits(batch)


# -- optimizers ----------------------------------------------------------------

class SGD:
    name = "sgd"

    def __init__(self, lr: float = 0.1):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    """Adaptive moment estimation with bias-corrected first and second moments."""

    name = "adam"

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1 - b1 ** self.t
        c2 = 1 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            denom = np.sqrt(v / c2)
            denom += self.eps
            p -= self.lr * (m / c1) / denom


def make_optimizer(name: str = "adam", lr: float | None = None):
    if name == "adam":
        return Adam(1e-3 if lr is None else lr)
    if name == "sgd":
        return SGD(0.1 if lr is None else lr)
    raise ConfigurationError(f"unknown optimizer {name!r}; expected 'adam' or 'sgd'")


def optimizer_step(net: MimicNetwork, gradients: list[np.ndarray], optimizer) -> tuple[MimicNetwork, object]:
    """Apply one update in place; returns the same network and optimizer for chaining."""
    if len(gradients) != len(net.params) or any(g.shape != p.shape for g, p in zip(gradients, net.params)):
        raise ValueError("gradients are not shaped like the network parameters")
    optimizer.step(net.params, gradients)
    return net, optimizer


# -- checkpoint format -----------------------------------------------------------
#
#   b"NCMN" | version u8 = 1 | kind u8 | activation u8 | cascade_skip u8
#   input_width u16 | output_bit_count u16 | n_hidden u16 | hidden sizes u32 each
#   parameter_seed i64 | parameters as float32 LE, layer order (W then b), heads last
#
# W is stored row-major with shape (fan_in, fan_out).

CKPT_MAGIC = b"NCMN"
CKPT_VERSION = 1
_CKPT_HEAD = struct.Struct("<4sBBBBHHH")


def dumps(net: MimicNetwork) -> bytes:
    spec = net.spec
    buf = io.BytesIO()
    buf.write(_CKPT_HEAD.pack(
        CKPT_MAGIC, CKPT_VERSION, ARCH_KINDS.index(spec.kind), ACTIVATIONS.index(spec.activation),
        int(bool(spec.cascade_skip)), spec.input_width, spec.output_bit_count, len(spec.hidden_sizes),
    ))
    buf.write(struct.pack(f"<{len(spec.hidden_sizes)}I", *spec.hidden_sizes))
    buf.write(struct.pack("<q", int(net.parameter_seed)))
    for p in net.params:
        buf.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
    return buf.getvalue()


def loads(data: bytes) -> MimicNetwork:
    if len(data) < _CKPT_HEAD.size:
        raise CheckpointError("checkpoint shorter than its header")
    magic, version, kind, act, skip, m, n, n_hidden = _CKPT_HEAD.unpack_from(data)
    if magic != CKPT_MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != CKPT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    off = _CKPT_HEAD.size
    try:
        hidden = struct.unpack_from(f"<{n_hidden}I", data, off)
        off += 4 * n_hidden
        (seed,) = struct.unpack_from("<q", data, off)
        off += 8
        spec = ArchitectureSpec(ARCH_KINDS[kind], m, n, hidden, ACTIVATIONS[act], bool(skip))
    except (struct.error, IndexError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
    params = []
    for shape in spec.param_shapes():
        count = int(np.prod(shape))
        if off + 4 * count > len(data):
            raise CheckpointError("checkpoint truncated")
        params.append(np.frombuffer(data, dtype="<f4", count=count, offset=off).astype(np.float32).reshape(shape))
        off += 4 * count
    if off != len(data):
        raise CheckpointError("trailing bytes after checkpoint parameters")
    return MimicNetwork(spec, params, seed)


def with_skip(spec: ArchitectureSpec, skip: bool) -> ArchitectureSpec:
    """Same spec with cascade skip connections forced on or off."""
    return replace(spec, cascade_skip=skip)
