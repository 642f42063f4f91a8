"""Mini-batch training with an epoch budget and a training-loss plateau stop.

Each epoch walks a fresh permutation of the training set drawn from
``PCG64(shuffle_seed + epoch)``; the final partial batch is kept. Training
stops after ``max_epochs`` or once the epoch loss has failed to improve on the
best loss so far by a relative ``min_rel_improvement`` for
``patience_epochs`` consecutive epochs. The test set only feeds the logged
cipher-match-rate curve and never the stopping rule.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from neurocrypt.bitcore import encode_features
from neurocrypt.ciphers.base import ConfigurationError
from neurocrypt.dataset import PairSet
from neurocrypt.mimicnet import MimicNetwork, make_optimizer

log = logging.getLogger(__name__)


class DataLeakError(ValueError):
    """Training and test sets share inputs."""


@dataclass
class TrainConfig:
    max_epochs: int = 350
    batch_size: int = 1000
    shuffle_seed: int = 0
    patience_epochs: int = 10
    min_rel_improvement: float = 1e-4
    eval_every: int = 1
    optimizer: str = "adam"
    learning_rate: float | None = None
    signed_features: bool = False

    def __post_init__(self) -> None:
        if self.max_epochs < 1 or self.batch_size < 1 or self.patience_epochs < 1 or self.eval_every < 1:
            raise ConfigurationError("max_epochs, batch_size, patience_epochs and eval_every must be >= 1")


@dataclass
class TrainReport:
    epochs_run: int = 0
    iterations: int = 0
    loss_curve: list[float] = field(default_factory=list)
    cmr_curve: list[tuple[int, float]] = field(default_factory=list)
    wall_time: float = 0.0
    stop_reason: str = ""

    @property
    def final_cmr(self) -> float | None:
        return self.cmr_curve[-1][1] if self.cmr_curve else None

    @property
    def best_cmr(self) -> float | None:
        return max(c for _, c in self.cmr_curve) if self.cmr_curve else None

    def epochs_to_reach(self, cmr: float) -> int | None:
        for epoch, value in self.cmr_curve:
            if value >= cmr:
                return epoch
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cmr_curve"] = [list(p) for p in self.cmr_curve]
        d["final_cmr"] = self.final_cmr
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainReport":
        return cls(
            int(d["epochs_run"]), int(d["iterations"]), list(d["loss_curve"]),
            [(int(e), float(c)) for e, c in d["cmr_curve"]], float(d["wall_time"]), d.get("stop_reason", ""),
        )

    def write_csv(self, path: str | Path) -> None:
        """Columns epoch, loss, cmr; cmr is blank on epochs without an evaluation."""
        cmr = dict(self.cmr_curve)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "loss", "cmr"])
            for epoch, loss in enumerate(self.loss_curve, start=1):
                w.writerow([epoch, repr(loss), "" if epoch not in cmr else repr(cmr[epoch])])


def cipher_match_rate(predicted: np.ndarray, truth: np.ndarray) -> float:
    predicted, truth = np.asarray(predicted), np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(f"shape mismatch {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise ValueError("cipher match rate of an empty prediction is undefined")
    return float(np.count_nonzero(predicted == truth)) / predicted.size


def evaluate_cmr(net: MimicNetwork, pairs: PairSet, signed: bool = False) -> float:
    x = encode_features(pairs.inputs, signed=signed, dtype=net.dtype)
    return cipher_match_rate(net.predict_bits(x), pairs.outputs)


def batches_per_epoch(n: int, batch_size: int) -> int:
    return math.ceil(n / batch_size)


def check_compatible(net: MimicNetwork, train_set: PairSet, test_set: PairSet | None) -> None:
    spec = net.spec
    for name, s in (("training", train_set), ("test", test_set)):
        if s is None:
            continue
        if s.input_bits != spec.input_width or s.output_bits != spec.output_bit_count:
            raise ConfigurationError(
                f"{name} set is {s.input_bits}->{s.output_bits} bits, network is "
                f"{spec.input_width}->{spec.output_bit_count}"
            )
    if len(train_set) == 0:
        raise ConfigurationError("training set is empty")
    if test_set is not None and len(test_set) and not train_set.is_disjoint(test_set):
        raise DataLeakError("training and test sets share inputs")


def train(
    net: MimicNetwork, train_set: PairSet, test_set: PairSet | None, cfg: TrainConfig
) -> tuple[MimicNetwork, TrainReport]:
    """Train ``net`` in place and return it with its report."""
    check_compatible(net, train_set, test_set)
    opt = make_optimizer(cfg.optimizer, cfg.learning_rate)
    x_all = encode_features(train_set.inputs, signed=cfg.signed_features, dtype=net.dtype)
    y_all = train_set.outputs
    n = len(x_all)
    report = TrainReport()
    start = time.perf_counter()
    best = math.inf
    stale = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = np.random.Generator(np.random.PCG64(cfg.shuffle_seed + epoch)).permutation(n)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            loss, grads = net.loss_and_gradients(x_all[idx], y_all[idx])
            opt.step(net.params, grads)
            total += loss * len(idx)
            report.iterations += 1
        epoch_loss = total / n
        report.loss_curve.append(epoch_loss)
        report.epochs_run = epoch

        if test_set is not None and len(test_set) and (epoch % cfg.eval_every == 0 or epoch == cfg.max_epochs):
            report.cmr_curve.append((epoch, evaluate_cmr(net, test_set, cfg.signed_features)))
            log.debug("epoch %d loss %.6f cmr %.4f", epoch, epoch_loss, report.cmr_curve[-1][1])

        if best - epoch_loss > cfg.min_rel_improvement * abs(best) or math.isinf(best):
            best = epoch_loss
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience_epochs:
                report.stop_reason = "converged"
                break
    else:
        report.stop_reason = "max_epochs"

    if test_set is not None and len(test_set) and (not report.cmr_curve or report.cmr_curve[-1][0] != report.epochs_run):
        report.cmr_curve.append((report.epochs_run, evaluate_cmr(net, test_set, cfg.signed_features)))
    report.wall_time = time.perf_counter() - start
    return net, report
