"""Small fully connected networks with hand-written reverse-mode gradients.

Three linear layers (two tanh hidden activations), an identity or sigmoid
output head, Adam updates and Polyak target blending.  No autodiff; the
backward pass is exact for this fixed architecture and is verified against
finite differences in the test suite.

Checkpoint format (plain text, stable across runs):

    stackfed-net v1
    hidden tanh
    head <identity|sigmoid>
    layers <n>
    W <i> <rows> <cols>
    <row-major float repr values, space separated, one line>
    b <i> <n>
    <values>
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HIDDEN_ACTIVATION = "tanh"
HEADS = ("identity", "sigmoid")


@dataclass
class NetworkParams:
    """Per-layer weight matrices (out x in) and bias vectors."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head: str = "identity"

    def __post_init__(self) -> None:
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if len(self.weights) != len(self.biases):
            raise ValueError("weights/biases length mismatch")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: W rows {w.shape[0]} != b size {b.shape[0]}")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input dim does not chain")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.head
        )


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_network(
    sizes: list[int], rng: np.random.Generator, head: str = "identity"
) -> NetworkParams:
    """Symmetric uniform fan-in initialization, seeded for reproducibility."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return NetworkParams(weights, biases, head)


def _head_forward(z: np.ndarray, head: str) -> np.ndarray:
    if head == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def forward(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Evaluate the network; accepts a single vector or a batch (B, in)."""
    h = np.asarray(x, dtype=float)
    if h.shape[-1] != params.input_dim:
        raise ValueError(f"input dim {h.shape[-1]} != expected {params.input_dim}")
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        h = np.tanh(z) if i < last else _head_forward(z, params.head)
    return h


def backward(
    params: NetworkParams, x: np.ndarray, output_gradient: np.ndarray
) -> tuple[Gradients, np.ndarray]:
    """Exact gradients of sum(output * output_gradient-weights) wrt params.

    Returns (parameter gradients, gradient wrt the input).  Batched inputs
    accumulate parameter gradients over the leading dimension; the caller
    owns any 1/B scaling.
    """
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    h = x[None, :] if squeeze else x
    g_out = np.asarray(output_gradient, dtype=float)
    g_out = g_out[None, :] if squeeze else g_out
    if g_out.shape[-1] != params.output_dim:
        raise ValueError("output_gradient dim mismatch")

    last = len(params.weights) - 1
    activations = [h]
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = activations[-1] @ w.T + b
        activations.append(np.tanh(z) if i < last else _head_forward(z, params.head))

    if params.head == "sigmoid":
        y = activations[-1]
        delta = g_out * y * (1.0 - y)
    else:
        delta = g_out

    d_w = [np.empty(0)] * len(params.weights)
    d_b = [np.empty(0)] * len(params.weights)
    for i in range(last, -1, -1):
        d_w[i] = delta.T @ activations[i]
        d_b[i] = delta.sum(axis=0)
        if i > 0:
            upstream = delta @ params.weights[i]
            delta = upstream * (1.0 - activations[i] ** 2)
    d_x = delta @ params.weights[0]
    if squeeze:
        d_x = d_x[0]
    return Gradients(d_w, d_b), d_x


@dataclass
class OptimizerState:
    """Adam accumulators matching a NetworkParams layout."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)


def init_optimizer(params: NetworkParams, lr: float) -> OptimizerState:
    state = OptimizerState(lr=lr)
    for w, b in zip(params.weights, params.biases):
        state.m_w.append(np.zeros_like(w))
        state.v_w.append(np.zeros_like(w))
        state.m_b.append(np.zeros_like(b))
        state.v_b.append(np.zeros_like(b))
    return state


def optimizer_step(
    state: OptimizerState, params: NetworkParams, grads: Gradients
) -> tuple[NetworkParams, OptimizerState]:
    """One Adam step in the negative gradient direction (descent)."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    new_w, new_b = [], []
    for i in range(len(params.weights)):
        for m, v, g, p, out in (
            (state.m_w, state.v_w, grads.weights[i], params.weights[i], new_w),
            (state.m_b, state.v_b, grads.biases[i], params.biases[i], new_b),
        ):
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g**2
            m_hat = m[i] / bc1
            v_hat = v[i] / bc2
            out.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return NetworkParams(new_w, new_b, params.head), state


def soft_update(target: NetworkParams, main: NetworkParams, rate: float) -> NetworkParams:
    """Polyak blend: rate * main + (1 - rate) * target, element-wise."""
    if not (0.0 <= rate <= 1.0):
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    if target.head != main.head:
        raise ValueError("head mismatch")
    weights = [rate * wm + (1.0 - rate) * wt for wt, wm in zip(target.weights, main.weights)]
    biases = [rate * bm + (1.0 - rate) * bt for bt, bm in zip(target.biases, main.biases)]
    return NetworkParams(weights, biases, target.head)


def save_params(path: str, params: NetworkParams) -> None:
    lines = ["stackfed-net v1", f"hidden {HIDDEN_ACTIVATION}", f"head {params.head}", f"layers {len(params.weights)}"]
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        lines.append(f"W {i} {w.shape[0]} {w.shape[1]}")
        lines.append(" ".join(repr(float(v)) for v in w.ravel()))
        lines.append(f"b {i} {b.shape[0]}")
        lines.append(" ".join(repr(float(v)) for v in b.ravel()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_params(path: str) -> NetworkParams:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if lines[0] != "stackfed-net v1":
        raise ValueError(f"unrecognized checkpoint header: {lines[0]!r}")
    head = lines[2].split()[1]
    n_layers = int(lines[3].split()[1])
    weights, biases = [], []
    pos = 4
    for _ in range(n_layers):
        _, _, rows, cols = lines[pos].split()
        w = np.array([float(v) for v in lines[pos + 1].split()]).reshape(int(rows), int(cols))
        _, _, size = lines[pos + 2].split()
        b = np.array([float(v) for v in lines[pos + 3].split()])[: int(size)]
        weights.append(w)
        biases.append(b)
        pos += 4
    return NetworkParams(weights, biases, head)
