"""Training loop, evaluation and metric export."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .generator import Dataset
from .graph import BipartiteGraph, RniConfig, apply_rni, batch, to_graph
from .milp import encode
from .nn.gnn import AdamState, GnnConfig, GnnModel, adam_step, backward, classify, forward

log = logging.getLogger(__name__)


class TrainError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 150
    batch_size: int = 64
    learning_rate: float = 1e-4
    d: int = 32
    rounds: int = 2
    rni_fraction: float = 0.0
    loss: str = "bce"
    seed: int = 0
    deterministic: bool = True
    freeze_rni: bool = False  # draw RNI features once instead of every epoch
    eval_redraws: int = 1

    def model_config(self) -> GnnConfig:
        return GnnConfig(self.d, self.rounds, self.rni_fraction, self.loss)


@dataclass
class EvalResult:
    accuracy: float
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class Metrics:
    train_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    valid_acc: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    best_epoch: int | None = None
    valid: EvalResult | None = None
    test: EvalResult | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "train_acc", "valid_acc"])
            for e, row in enumerate(zip(self.train_loss, self.train_acc, self.valid_acc), start=1):
                w.writerow([e, *(f"{x:.6f}" if x == x else "" for x in row)])

    def summary(self, cfg: TrainConfig | None = None) -> dict:
        return {
            "config": asdict(cfg) if cfg is not None else None,
            "best_epoch": self.best_epoch,
            "valid": asdict(self.valid) if self.valid else None,
            "test": asdict(self.test) if self.test else None,
            "test_accuracy": self.test.accuracy if self.test else None,
            "runtime_seconds": float(sum(self.epoch_seconds)),
        }


def graphs_of(entries) -> list[BipartiteGraph]:
    return [to_graph(encode(e.formula)) for e in entries]


def _with_rni(graphs: Sequence[BipartiteGraph], fraction: float, rng: np.random.Generator):
    if fraction == 0.0:
        return list(graphs)
    cfg = RniConfig(fraction)
    return [apply_rni(g, cfg, rng) for g in graphs]


def evaluate(model: GnnModel, graphs: Sequence[BipartiteGraph], labels, redraws: int = 1,
             seed: int = 0, batch_size: int = 256) -> EvalResult:
    """Accuracy of ``classify(ŷ)``; with RNI, ŷ is averaged over ``redraws`` feature draws."""
    labels = np.asarray(labels, dtype=np.int64)
    frac = model.config.rni_fraction
    draws = redraws if frac > 0 else 1
    rng = np.random.default_rng([seed, 0xE7A1])
    acc = np.zeros(len(graphs))
    for _ in range(draws):
        gs = _with_rni(graphs, frac, rng)
        for s in range(0, len(gs), batch_size):
            acc[s : s + batch_size] += forward(model, batch(gs[s : s + batch_size])).data
    pred = classify(acc / draws)
    return _confusion(np.atleast_1d(pred), labels)


def _confusion(pred: np.ndarray, labels: np.ndarray) -> EvalResult:
    tp = int(((pred == 1) & (labels == 1)).sum())
    tn = int(((pred == 0) & (labels == 0)).sum())
    fp = int(((pred == 1) & (labels == 0)).sum())
    fn = int(((pred == 0) & (labels == 1)).sum())
    total = max(1, len(labels))
    return EvalResult((tp + tn) / total, tp, tn, fp, fn)


def fit(train_graphs: Sequence[BipartiteGraph], train_labels, cfg: TrainConfig,
        valid_graphs: Sequence[BipartiteGraph] = (), valid_labels=(),
        callback: Callable[[int, Metrics], bool | None] | None = None,
        model: GnnModel | None = None) -> tuple[GnnModel, Metrics]:
    """Adam over shuffled mini-batches; keeps the parameters with the best validation accuracy.

    Without a validation set the final parameters are returned.  ``train_acc``
    is the running accuracy of the predictions made during the epoch, before
    each batch's update.  ``callback(epoch, metrics)`` returning True stops
    training early.
    """
    if len(train_graphs) == 0:
        raise TrainError("empty training split")
    labels = np.asarray(train_labels, dtype=np.float64)
    model = model or GnnModel(cfg.model_config(), seed=cfg.seed)
    want = model.config.feature_dims
    if train_graphs[0].feature_dims != (1, 0):
        raise TrainError("training graphs must carry base features only; RNI is added per epoch")
    state = AdamState(lr=cfg.learning_rate)
    metrics = Metrics()
    best_state, best_acc = None, -1.0
    frozen = None
    if cfg.freeze_rni:
        frozen = _with_rni(train_graphs, cfg.rni_fraction, np.random.default_rng([cfg.seed, 0, 2]))
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = np.random.default_rng([cfg.seed, epoch, 1]).permutation(len(train_graphs))
        gs = frozen if frozen is not None else _with_rni(
            train_graphs, cfg.rni_fraction, np.random.default_rng([cfg.seed, epoch, 2]))
        if gs[0].feature_dims != want:
            raise TrainError(f"graph feature dims {gs[0].feature_dims} != model dims {want}")
        loss_sum, correct = 0.0, 0
        for s in range(0, len(order), cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            y = labels[idx]
            L, grads, out = backward(model, batch([gs[i] for i in idx]), y, cfg.loss)
            adam_step(model.params, grads, state)
            loss_sum += L * len(idx)
            correct += int((classify(out) == y).sum())
        metrics.train_loss.append(loss_sum / len(order))
        metrics.train_acc.append(correct / len(order))
        if len(valid_graphs):
            res = evaluate(model, valid_graphs, valid_labels, cfg.eval_redraws, seed=cfg.seed + epoch)
            metrics.valid_acc.append(res.accuracy)
            if res.accuracy > best_acc:
                best_acc, best_state = res.accuracy, model.get_state()
                metrics.best_epoch, metrics.valid = epoch + 1, res
        else:
            metrics.valid_acc.append(float("nan"))
        metrics.epoch_seconds.append(time.perf_counter() - t0)
        log.debug("epoch %d loss %.4f train_acc %.3f valid_acc %s", epoch + 1,
                  metrics.train_loss[-1], metrics.train_acc[-1], metrics.valid_acc[-1])
        if callback is not None and callback(epoch, metrics):
            break
    if best_state is not None:
        model.set_state(best_state)
    return model, metrics


def train(dataset: Dataset, cfg: TrainConfig, callback=None) -> tuple[GnnModel, Metrics]:
    """Train on the dataset's train split, select on valid, report on test."""
    splits = {s: dataset.split(s) for s in ("train", "valid", "test")}
    for s, es in splits.items():
        if not es:
            raise TrainError(f"empty {s} split")
    g = {s: graphs_of(es) for s, es in splits.items()}
    y = {s: [e.label for e in es] for s, es in splits.items()}
    model, metrics = fit(g["train"], y["train"], cfg, g["valid"], y["valid"], callback)
    metrics.test = evaluate(model, g["test"], y["test"], cfg.eval_redraws, seed=cfg.seed + 10_000)
    return model, metrics


def write_metrics(metrics: Metrics, cfg: TrainConfig, out_dir, extra: dict | None = None) -> None:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics.to_csv(out / "metrics.csv")
    summary = metrics.summary(cfg)
    if extra:
        summary.update(extra)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
