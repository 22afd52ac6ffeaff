"""Desk-scale federated averaging on synthetic data.

A multinomial linear classifier is trained by full-batch gradient descent
on per-node shards and combined by data-share weighted averaging.  Shard
sizes come from the incentive outcome (samples collected per period), so
the equilibrium feeds directly into training.  Round time is modeled, not
measured: the slowest selected node bounds each synchronous round, plus a
fixed communication overhead.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class DatasetConfig:
    classes: int = 4
    dim: int = 8
    separation: float = 4.0
    n_train: int = 600
    n_test: int = 300
    seed: int = 0


@dataclass
class FLConfig:
    shard_sizes: tuple[int, ...]
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    local_epochs: int = 2
    local_lr: float = 0.4
    rounds: int = 30
    compute_rates: tuple[float, ...] | None = None  # samples per time unit
    comm_overhead: float = 1.0

    def __post_init__(self) -> None:
        if any(s < 0 for s in self.shard_sizes):
            raise ValueError("shard sizes must be >= 0")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.compute_rates is not None and len(self.compute_rates) != len(self.shard_sizes):
            raise ValueError("one compute rate per shard")


@dataclass
class LabeledData:
    x: np.ndarray  # (n, dim)
    y: np.ndarray  # (n,) integer labels


@dataclass
class RoundRecord:
    round: int
    global_loss: float
    test_accuracy: float
    modeled_time_cumulative: float


def generate_dataset(config: DatasetConfig, seed: int | None = None) -> tuple[LabeledData, LabeledData]:
    """Gaussian class clusters with balanced labels; returns (train, test).

    Class means sit at separation * random unit directions, features carry
    unit noise.  Counts per class are balanced within one sample.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    means = rng.normal(size=(config.classes, config.dim))
    means *= config.separation / np.linalg.norm(means, axis=1, keepdims=True)

    def make(n: int) -> LabeledData:
        base, extra = divmod(n, config.classes)
        labels = np.concatenate(
            [np.full(base + (1 if c < extra else 0), c, dtype=int) for c in range(config.classes)]
        )
        x = means[labels] + rng.normal(size=(n, config.dim))
        perm = rng.permutation(n)
        return LabeledData(x=x[perm], y=labels[perm])

    return make(config.n_train), make(config.n_test)


def partition_data(data: LabeledData, shard_sizes: tuple[int, ...], seed: int = 0) -> list[LabeledData]:
    """Disjoint shards of the requested sizes (seeded assignment)."""
    total = sum(shard_sizes)
    if total > len(data.y):
        raise ValueError(f"shards need {total} samples but only {len(data.y)} available")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(data.y))
    shards, pos = [], 0
    for size in shard_sizes:
        idx = order[pos : pos + size]
        shards.append(LabeledData(x=data.x[idx], y=data.y[idx]))
        pos += size
    return shards


# -- multinomial linear classifier ------------------------------------------


def init_model(classes: int, dim: int) -> np.ndarray:
    """Zero-initialized weights, one row per class, bias column last."""
    return np.zeros((classes, dim + 1))


def _logits(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x @ w[:, :-1].T + w[:, -1]


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def model_loss(w: np.ndarray, data: LabeledData) -> float:
    """Mean cross-entropy over the sample set."""
    if len(data.y) == 0:
        raise ValueError("empty sample set")
    p = _softmax(_logits(w, data.x))
    return float(-np.mean(np.log(p[np.arange(len(data.y)), data.y] + 1e-300)))


def model_accuracy(w: np.ndarray, data: LabeledData) -> float:
    pred = np.argmax(_logits(w, data.x), axis=1)
    return float(np.mean(pred == data.y))


def _loss_gradient(w: np.ndarray, data: LabeledData) -> np.ndarray:
    n = len(data.y)
    p = _softmax(_logits(w, data.x))
    p[np.arange(n), data.y] -= 1.0
    gw = p.T @ data.x / n
    gb = p.mean(axis=0)
    return np.concatenate([gw, gb[:, None]], axis=1)


def local_train(w: np.ndarray, shard: LabeledData, epochs: int, rate: float) -> np.ndarray:
    """Full-batch gradient descent on the shard's mean loss."""
    if len(shard.y) == 0:
        raise ValueError("cannot train on an empty shard")
    out = w.copy()
    for _ in range(epochs):
        out = out - rate * _loss_gradient(out, shard)
    return out


def centralized_descent(w: np.ndarray, data: LabeledData, steps: int, rate: float) -> np.ndarray:
    """Plain gradient descent on the full set; oracle for the one-node case."""
    out = w.copy()
    for _ in range(steps):
        out = out - rate * _loss_gradient(out, data)
    return out


def aggregate(locals_: list[tuple[np.ndarray, float]]) -> np.ndarray:
    """Data-share weighted average of local parameters."""
    total = float(sum(wgt for _, wgt in locals_))
    if total <= 0:
        raise ValueError("aggregation weights sum to zero")
    out = np.zeros_like(locals_[0][0])
    for w, wgt in locals_:
        out += (wgt / total) * w
    return out


def run_federated(config: FLConfig, seed: int | None = None) -> tuple[list[RoundRecord], np.ndarray]:
    """K rounds of local descent plus weighted aggregation.

    Returns the per-round records and the final global parameters.  Nodes
    with empty shards are skipped in aggregation.
    """
    ds_seed = config.dataset.seed if seed is None else seed
    train, test = generate_dataset(config.dataset, seed=ds_seed)
    shards = partition_data(train, config.shard_sizes, seed=ds_seed)
    active = [i for i, s in enumerate(config.shard_sizes) if s > 0]
    if not active:
        raise ValueError("all shards are empty")
    union_idx = [i for i in active]
    union = LabeledData(
        x=np.concatenate([shards[i].x for i in union_idx]),
        y=np.concatenate([shards[i].y for i in union_idx]),
    )
    rates = config.compute_rates or tuple(60.0 for _ in config.shard_sizes)

    w = init_model(config.dataset.classes, config.dataset.dim)
    records: list[RoundRecord] = []
    elapsed = 0.0
    round_time = max(config.shard_sizes[i] / rates[i] for i in active) + config.comm_overhead
    for k in range(1, config.rounds + 1):
        locals_ = [
            (local_train(w, shards[i], config.local_epochs, config.local_lr), float(config.shard_sizes[i]))
            for i in active
        ]
        w = aggregate(locals_)
        elapsed += round_time
        records.append(
            RoundRecord(
                round=k,
                global_loss=model_loss(w, union),
                test_accuracy=model_accuracy(w, test),
                modeled_time_cumulative=elapsed,
            )
        )
    return records, w


def write_rounds(path: str, records: list[RoundRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "global_loss", "test_accuracy", "modeled_time_cumulative"])
        for rec in records:
            writer.writerow(
                [rec.round, f"{rec.global_loss:.6g}", f"{rec.test_accuracy:.6g}", f"{rec.modeled_time_cumulative:.6g}"]
            )


def load_external_dataset(path: str) -> LabeledData:
    """Plain delimited numeric rows, trailing integer label per row."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            rows.append([float(v) for v in parts])
    arr = np.array(rows)
    return LabeledData(x=arr[:, :-1], y=arr[:, -1].astype(int))
