"""Mini-batch training with Adam, rank-based metrics, and deterministic
experiment logging."""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from . import ndgrad as nd


class NumericError(RuntimeError):
    """Raised when training hits non-finite numbers."""


class MetricError(ValueError):
    """Raised when a metric is undefined for the given inputs."""


@dataclass
class TrainConfig:
    epochs: int = 20
    seed: int = 42
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    kind: str = "dspn"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        for name in ("beta1", "beta2"):
            rate = getattr(self, name)
            if not 0.0 < rate < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        for name in ("learning_rate", "eps", "clip_norm"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.kind not in ("dspn", "baseline"):
            raise ValueError(f"unknown model kind {self.kind!r}")

    def to_obj(self):
        return {k: getattr(self, k) for k in (
            "epochs", "seed", "batch_size", "learning_rate", "beta1",
            "beta2", "eps", "clip_norm", "kind")}

    @classmethod
    def from_obj(cls, obj):
        return cls(**obj)


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def init(cls, params):
        return cls(m={n: np.zeros_like(p.value) for n, p in params.items()},
                   v={n: np.zeros_like(p.value) for n, p in params.items()})


def clip_gradients(params, max_norm):
    """Scale all gradients so their global norm is at most max_norm."""
    total = 0.0
    for p in params.values():
        total += float(np.sum(p.grad * p.grad))
    norm = math.sqrt(total)
    if norm > max_norm:
        factor = max_norm / norm
        for p in params.values():
            p.grad *= factor
    return norm


def adam_step(params, state, config):
    for name, p in params.items():
        if not np.isfinite(p.grad).all():
            raise NumericError(f"non-finite gradient in parameter {name}")
    clip_gradients(params, config.clip_norm)
    state.t += 1
    t = state.t
    for name, p in params.items():
        g = p.grad
        state.m[name] = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        state.v[name] = config.beta2 * state.v[name] + (1.0 - config.beta2) * g * g
        m_hat = state.m[name] / (1.0 - config.beta1 ** t)
        v_hat = state.v[name] / (1.0 - config.beta2 ** t)
        p.value -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    return state


def auc(scores, labels):
    """Mann-Whitney AUC via average ranks; ties get half credit."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n = scores.shape[0]
    n_pos = int(np.sum(labels == 1))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("auc needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def acc(scores, labels, threshold=0.5):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape[0] == 0:
        raise MetricError("acc needs at least one sample")
    return float(np.mean((scores > threshold).astype(int) == labels))


@dataclass
class MetricsReport:
    auc: float
    acc: float
    mean_loss: float
    n_samples: int
    history: list = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 <= self.auc <= 1.0 and 0.0 <= self.acc <= 1.0):
            raise ValueError("auc and acc must lie in [0, 1]")

    def to_obj(self):
        return {"auc": self.auc, "acc": self.acc, "mean_loss": self.mean_loss,
                "n_samples": self.n_samples, "history": self.history}


def _predict(leaves, enc, model_config, kind):
    if kind == "dspn":
        p, _ = model.dspn_forward(leaves, enc, model_config)
        return p
    return model.mlp_baseline_forward(leaves, enc, model_config)


def scores_of(params, samples, model_config, kind="dspn"):
    """Forward every sample in index order, no gradients."""
    out = np.empty(len(samples))
    for i, enc in enumerate(samples):
        tape = nd.Tape()
        leaves = model.watch_all(tape, params)
        out[i] = _predict(leaves, enc, model_config, kind).item()
    return out


def evaluate(params, samples, model_config, kind="dspn"):
    if not samples:
        raise ValueError("evaluate needs a non-empty dataset")
    scores = scores_of(params, samples, model_config, kind)
    labels = np.array([enc.label for enc in samples])
    losses = [model.bce_loss(nd.tensor(np.array([[s]])), int(y)).item()
              for s, y in zip(scores, labels)]
    return MetricsReport(auc=auc(scores, labels), acc=acc(scores, labels),
                         mean_loss=float(np.mean(losses)),
                         n_samples=len(samples))


def train(train_set, test_set, config, model_config, vocab_sizes,
          metrics_csv=None, log=None):
    """Run the full loop and return (params, history).

    Deterministic for a fixed (config, dataset) pair: parameter init and
    the per-epoch shuffle derive from config.seed, batches run in shuffle
    order, and evaluation scores in index order.
    """
    if not train_set:
        raise ValueError("train needs a non-empty training set")
    labels = {enc.label for enc in train_set}
    if labels != {0, 1}:
        raise ValueError("training set must contain both classes")

    if config.kind == "dspn":
        params = model.init_dspn_params(model_config, vocab_sizes, config.seed)
    else:
        params = model.init_baseline_params(model_config, vocab_sizes,
                                            config.seed)
    state = AdamState.init(params)
    history = []
    writer = None
    csv_file = None
    if metrics_csv is not None:
        csv_file = open(metrics_csv, "w", newline="")
        writer = csv.writer(csv_file)
        writer.writerow(["epoch", "train_loss", "test_auc", "test_acc"])
    try:
        for epoch in range(1, config.epochs + 1):
            rng = np.random.default_rng([config.seed, epoch])
            perm = rng.permutation(len(train_set))
            epoch_loss = 0.0
            for start in range(0, len(perm), config.batch_size):
                batch = perm[start:start + config.batch_size]
                params.zero_grads()
                for idx in batch:
                    enc = train_set[idx]
                    tape = nd.Tape()
                    leaves = model.watch_all(tape, params)
                    p = _predict(leaves, enc, model_config, config.kind)
                    loss = model.bce_loss(p, enc.label)
                    # mean-of-batch gradient without building a batch graph
                    nd.backward(tape, loss, seed=1.0 / len(batch))
                    epoch_loss += loss.item()
                adam_step(params, state, config)
            epoch_loss /= len(train_set)
            row = {"epoch": epoch, "train_loss": epoch_loss}
            if test_set:
                report = evaluate(params, test_set, model_config, config.kind)
                row["test_auc"] = report.auc
                row["test_acc"] = report.acc
            else:
                row["test_auc"] = float("nan")
                row["test_acc"] = float("nan")
            history.append(row)
            if writer is not None:
                writer.writerow([row["epoch"], repr(row["train_loss"]),
                                 repr(row["test_auc"]), repr(row["test_acc"])])
                csv_file.flush()
            if log is not None:
                log(f"epoch {epoch}: loss={epoch_loss:.4f} "
                    f"auc={row['test_auc']:.4f} acc={row['test_acc']:.4f}")
    finally:
        if csv_file is not None:
            csv_file.close()
    return params, history


def write_summary_json(path, config, model_config, report, history):
    obj = {"train_config": config.to_obj(),
           "model_config": model_config.to_obj(),
           "metrics": {"auc": report.auc, "acc": report.acc,
                       "mean_loss": report.mean_loss,
                       "n_samples": report.n_samples},
           "history": history}
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")
