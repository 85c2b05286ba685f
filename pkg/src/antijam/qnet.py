"""Convolutional Q-function with hand-written forward and backward passes.

Layout: conv(16 filters, 8x8, stride 4) -> ReLU -> conv(32, 4x4, stride 2)
-> ReLU -> flatten -> dense(256) -> ReLU -> dense(K). Everything is float64
numpy; convolutions are valid (no padding) and simply ignore trailing rows or
columns that do not fill a whole window, so the default 50x50 input loses a
2-pixel fringe at conv1 and a 1-pixel fringe at conv2 while a 200x200 input
tiles conv1 exactly.

Gradients are exact reverse-mode derivatives of the mean-squared TD loss, and
``gradient_check`` compares them against central finite differences on a
reduced copy of the architecture.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .spectrum import DISPLAY_DBM_HI, DISPLAY_DBM_LO

PARAM_FIELDS = ("w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4")

_CHECKPOINT_MAGIC = "QNET1"


def _conv_out(size: int, kernel: int, stride: int) -> int:
    return (size - kernel) // stride + 1


@dataclass(frozen=True)
class ConvLayer:
    filters: int
    kernel: int
    stride: int


@dataclass(frozen=True)
class Architecture:
    """Network dimensions; the defaults fit a 4x-decimated 200x200 waterfall."""

    input_rows: int = 50
    input_cols: int = 50
    conv1: ConvLayer = ConvLayer(16, 8, 4)
    conv2: ConvLayer = ConvLayer(32, 4, 2)
    hidden: int = 256
    n_actions: int = 9

    def __post_init__(self) -> None:
        h, w = self.conv2_shape[1:]
        if h < 1 or w < 1:
            raise ConfigError("input too small for the convolution stack")

    @property
    def conv1_shape(self) -> tuple[int, int, int]:
        c = self.conv1
        return (c.filters, _conv_out(self.input_rows, c.kernel, c.stride),
                _conv_out(self.input_cols, c.kernel, c.stride))

    @property
    def conv2_shape(self) -> tuple[int, int, int]:
        c = self.conv2
        _, h, w = self.conv1_shape
        return (c.filters, _conv_out(h, c.kernel, c.stride), _conv_out(w, c.kernel, c.stride))

    @property
    def flat_size(self) -> int:
        f, h, w = self.conv2_shape
        return f * h * w


# Small instance used by gradient verification: same stack, desk-toy sizes.
REDUCED_ARCH = Architecture(
    input_rows=10,
    input_cols=10,
    conv1=ConvLayer(3, 4, 2),
    conv2=ConvLayer(4, 2, 1),
    hidden=8,
    n_actions=9,
)


@dataclass
class QNetworkParams:
    """All learnable tensors; conv weights (F, C, k, k), dense weights (in, out)."""

    arch: Architecture
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    w4: np.ndarray
    b4: np.ndarray

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_FIELDS}

    def copy(self) -> "QNetworkParams":
        return QNetworkParams(self.arch, **{k: v.copy() for k, v in self.tensors().items()})

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.tensors().values())


def init_params(arch: Architecture, seed) -> QNetworkParams:
    """Zero-mean uniform weights with half-width sqrt(2 / fan_in); zero biases."""
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        half = np.sqrt(2.0 / fan_in)
        return rng.uniform(-half, half, size=shape)

    c1, c2 = arch.conv1, arch.conv2
    return QNetworkParams(
        arch=arch,
        w1=uniform((c1.filters, 1, c1.kernel, c1.kernel), c1.kernel ** 2),
        b1=np.zeros(c1.filters),
        w2=uniform((c2.filters, c1.filters, c2.kernel, c2.kernel), c1.filters * c2.kernel ** 2),
        b2=np.zeros(c2.filters),
        w3=uniform((arch.flat_size, arch.hidden), arch.flat_size),
        b3=np.zeros(arch.hidden),
        w4=uniform((arch.hidden, arch.n_actions), arch.hidden),
        b4=np.zeros(arch.n_actions),
    )


def preprocess(waterfall_dbm: np.ndarray, decimation: int) -> np.ndarray:
    """Average-pool dBm blocks and scale onto [0, 1] for the network input."""
    m = np.asarray(waterfall_dbm, dtype=np.float64)
    rows, cols = m.shape
    if decimation < 1 or rows % decimation or cols % decimation:
        raise ConfigError(f"decimation {decimation} must divide the state shape {m.shape}")
    d = decimation
    pooled = m.reshape(rows // d, d, cols // d, d).mean(axis=(1, 3))
    return np.clip((pooled - DISPLAY_DBM_LO) / (DISPLAY_DBM_HI - DISPLAY_DBM_LO), 0.0, 1.0)


def _windows(x: np.ndarray, kernel: int, stride: int):
    """Strided (B, oh, ow, C, k, k) view of all convolution windows."""
    b, c, h, w = x.shape
    oh = _conv_out(h, kernel, stride)
    ow = _conv_out(w, kernel, stride)
    sb, sc, sh, sw = x.strides
    view = np.lib.stride_tricks.as_strided(
        x,
        shape=(b, oh, ow, c, kernel, kernel),
        strides=(sb, stride * sh, stride * sw, sc, sh, sw),
        writeable=False,
    )
    return view, oh, ow


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    f, _, kernel, _ = w.shape
    view, oh, ow = _windows(x, kernel, stride)
    batch = x.shape[0]
    col = view.reshape(batch * oh * ow, -1)
    z = col @ w.reshape(f, -1).T + b
    return z.reshape(batch, oh, ow, f).transpose(0, 3, 1, 2), col


def _conv_backward(col, dz, w, x_shape, stride, need_dx):
    """Weight/bias/input gradients for one conv layer from upstream dz."""
    batch, f, oh, ow = dz.shape
    dflat = dz.transpose(0, 2, 3, 1).reshape(batch * oh * ow, f)
    dw = (dflat.T @ col).reshape(w.shape)
    db = dflat.sum(axis=0)
    if not need_dx:
        return dw, db, None
    kernel = w.shape[2]
    dwin = (dflat @ w.reshape(f, -1)).reshape(batch, oh, ow, w.shape[1], kernel, kernel)
    dx = np.zeros(x_shape)
    for ki in range(kernel):
        for kj in range(kernel):
            dx[:, :, ki: ki + stride * oh: stride, kj: kj + stride * ow: stride] += (
                dwin[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
            )
    return dw, db, dx


def _as_batch(x: np.ndarray, arch: Architecture) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (arch.input_rows, arch.input_cols):
        raise ValueError(
            f"state shape {x.shape} incompatible with {arch.input_rows}x{arch.input_cols} input"
        )
    return x[:, None, :, :], single


def _forward_cache(params: QNetworkParams, x4: np.ndarray):
    arch = params.arch
    z1, col1 = _conv_forward(x4, params.w1, params.b1, arch.conv1.stride)
    a1 = np.maximum(z1, 0.0)
    z2, col2 = _conv_forward(a1, params.w2, params.b2, arch.conv2.stride)
    a2 = np.maximum(z2, 0.0)
    flat = a2.reshape(a2.shape[0], -1)
    z3 = flat @ params.w3 + params.b3
    a3 = np.maximum(z3, 0.0)
    q = a3 @ params.w4 + params.b4
    return q, (x4, col1, z1, a1, col2, z2, flat, z3, a3)


def forward(params: QNetworkParams, x: np.ndarray) -> np.ndarray:
    """Q values for one state (H, W) -> (K,) or a batch (B, H, W) -> (B, K)."""
    x4, single = _as_batch(x, params.arch)
    q, _ = _forward_cache(params, x4)
    return q[0] if single else q


def loss(params: QNetworkParams, states, actions, targets) -> float:
    """Mean squared error between targets and the selected actions' Q values."""
    q = _selected_q(params, states, actions)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size == 0:
        raise ValueError("empty batch")
    return float(np.mean((targets - q) ** 2))


def _selected_q(params, states, actions) -> np.ndarray:
    x4, _ = _as_batch(states, params.arch)
    actions = np.asarray(actions, dtype=np.intp)
    q, _ = _forward_cache(params, x4)
    return q[np.arange(q.shape[0]), actions]


def loss_and_gradients(params: QNetworkParams, states, actions, targets):
    """Loss plus its exact gradient, sharing a single forward pass."""
    arch = params.arch
    x4, _ = _as_batch(states, params.arch)
    actions = np.asarray(actions, dtype=np.intp)
    targets = np.asarray(targets, dtype=np.float64)
    batch = x4.shape[0]
    if batch == 0:
        raise ValueError("empty batch")

    q, (_, col1, z1, a1, col2, z2, flat, z3, a3) = _forward_cache(params, x4)
    dq = np.zeros_like(q)
    residual = targets - q[np.arange(batch), actions]
    dq[np.arange(batch), actions] = -2.0 * residual / batch

    dw4 = a3.T @ dq
    db4 = dq.sum(axis=0)
    dz3 = (dq @ params.w4.T) * (z3 > 0.0)
    dw3 = flat.T @ dz3
    db3 = dz3.sum(axis=0)
    da2 = (dz3 @ params.w3.T).reshape(z2.shape)
    dz2 = da2 * (z2 > 0.0)
    dw2, db2, da1 = _conv_backward(col2, dz2, params.w2, a1.shape, arch.conv2.stride, True)
    dz1 = da1 * (z1 > 0.0)
    dw1, db1, _ = _conv_backward(col1, dz1, params.w1, x4.shape, arch.conv1.stride, False)

    grads = {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2,
             "w3": dw3, "b3": db3, "w4": dw4, "b4": db4}
    return float(np.mean(residual ** 2)), grads


def backward(params: QNetworkParams, states, actions, targets) -> dict[str, np.ndarray]:
    """Exact gradient of ``loss`` with respect to every parameter tensor."""
    return loss_and_gradients(params, states, actions, targets)[1]


def sgd_step(params: QNetworkParams, grads: dict[str, np.ndarray], learning_rate: float) -> QNetworkParams:
    """Plain gradient descent, in place: theta <- theta - lr * grad."""
    for name in PARAM_FIELDS:
        tensor = getattr(params, name)
        grad = grads[name]
        if tensor.shape != grad.shape:
            raise ValueError(f"gradient shape {grad.shape} does not match {name} {tensor.shape}")
        tensor -= learning_rate * grad
    return params


# gradient verification


def numeric_gradients(params: QNetworkParams, states, actions, targets, eps: float = 1e-5):
    """Central-difference gradient of ``loss`` over every scalar parameter."""
    grads: dict[str, np.ndarray] = {}
    for name in PARAM_FIELDS:
        tensor = getattr(params, name)
        grad = np.zeros_like(tensor)
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            saved = tensor[idx]
            tensor[idx] = saved + eps
            hi = loss(params, states, actions, targets)
            tensor[idx] = saved - eps
            lo = loss(params, states, actions, targets)
            tensor[idx] = saved
            grad[idx] = (hi - lo) / (2.0 * eps)
        grads[name] = grad
    return grads


def max_relative_error(a: dict[str, np.ndarray], b: dict[str, np.ndarray]) -> float:
    worst = 0.0
    for name in PARAM_FIELDS:
        denom = np.maximum(np.maximum(np.abs(a[name]), np.abs(b[name])), 1e-8)
        worst = max(worst, float(np.max(np.abs(a[name] - b[name]) / denom)))
    return worst


def make_check_batch(arch: Architecture, seed, batch_size: int = 3, margin: float = 1e-3):
    """Random params and batch whose pre-activations stay clear of ReLU kinks.

    Inputs are redrawn (deterministically) until every pre-activation is at
    least ``margin`` from zero, so finite differences never straddle a kink.
    """
    rng = np.random.default_rng(seed)
    params = init_params(arch, rng)
    actions = rng.integers(arch.n_actions, size=batch_size)
    targets = rng.normal(0.0, 1.0, size=batch_size)
    for _ in range(50):
        states = rng.random((batch_size, arch.input_rows, arch.input_cols))
        x4, _ = _as_batch(states, arch)
        _, (_, _, z1, _, _, z2, _, z3, _) = _forward_cache(params, x4)
        if min(np.min(np.abs(z1)), np.min(np.abs(z2)), np.min(np.abs(z3))) > margin:
            return params, states, actions, targets
    raise RuntimeError("could not find a kink-free batch; margin too strict")


def gradient_check(seed, arch: Architecture = REDUCED_ARCH, batch_size: int = 3,
                   eps: float = 1e-5) -> float:
    """Max relative mismatch between analytic and numeric gradients."""
    params, states, actions, targets = make_check_batch(arch, seed, batch_size)
    analytic = backward(params, states, actions, targets)
    numeric = numeric_gradients(params, states, actions, targets, eps)
    return max_relative_error(analytic, numeric)


# checkpoint serialization


def save_params(params: QNetworkParams, path) -> None:
    """Write a checkpoint: ASCII shape header, then little-endian float64 data."""
    arch = params.arch
    header = io.StringIO()
    header.write(f"{_CHECKPOINT_MAGIC}\n")
    header.write(
        "arch {} {} {} {} {} {} {} {} {} {}\n".format(
            arch.input_rows, arch.input_cols,
            arch.conv1.filters, arch.conv1.kernel, arch.conv1.stride,
            arch.conv2.filters, arch.conv2.kernel, arch.conv2.stride,
            arch.hidden, arch.n_actions,
        )
    )
    for name, tensor in params.tensors().items():
        dims = "x".join(str(d) for d in tensor.shape)
        header.write(f"{name} {dims}\n")
    header.write("\n")
    with open(path, "wb") as fh:
        fh.write(header.getvalue().encode("ascii"))
        for tensor in params.tensors().values():
            fh.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


def load_params(path) -> QNetworkParams:
    """Read a checkpoint written by ``save_params``; bit-exact round trip."""
    with open(path, "rb") as fh:
        blob = fh.read()
    head_end = blob.index(b"\n\n")
    lines = blob[:head_end].decode("ascii").splitlines()
    if not lines or lines[0] != _CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a {_CHECKPOINT_MAGIC} checkpoint")
    arch_parts = lines[1].split()
    if len(arch_parts) != 11 or arch_parts[0] != "arch":
        raise ValueError(f"{path}: malformed architecture line")
    vals = [int(v) for v in arch_parts[1:]]
    arch = Architecture(
        input_rows=vals[0], input_cols=vals[1],
        conv1=ConvLayer(*vals[2:5]), conv2=ConvLayer(*vals[5:8]),
        hidden=vals[8], n_actions=vals[9],
    )
    shapes: dict[str, tuple[int, ...]] = {}
    for line in lines[2:]:
        name, dims = line.split()
        shapes[name] = tuple(int(d) for d in dims.split("x"))
    if tuple(shapes) != PARAM_FIELDS:
        raise ValueError(f"{path}: unexpected tensor list {tuple(shapes)}")
    tensors: dict[str, np.ndarray] = {}
    offset = head_end + 2
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        raw = blob[offset: offset + 8 * count]
        if len(raw) != 8 * count:
            raise ValueError(f"{path}: truncated data for {name}")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
        offset += 8 * count
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes after tensor data")
    return QNetworkParams(arch=arch, **tensors)
