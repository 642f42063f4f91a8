"""Security indicators from data-doubling mimic experiments.

The loop in :func:`run_evaluation` keeps one test set for the whole run and,
at each training-set size ``2^k``, trains every suite network from scratch on
a fresh training set disjoint from the test set. It continues while the best
test match rate is still at or below the base rate or the last size improved
it, bounded by ``k < input_bits - log2(test size)`` and ``max_comp_data``.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from neurocrypt.ciphers.base import CipherOracle, ConfigurationError
from neurocrypt.ciphers.des import DesReducedOracle
from neurocrypt.dataset import CapacityError, PairSet, generate_pairs
from neurocrypt.mimicnet import ARCH_KINDS, ArchitectureSpec, build
from neurocrypt.trainer import TrainConfig, cipher_match_rate, train

log = logging.getLogger(__name__)

__all__ = [
    "EvalConfig",
    "SecurityIndicator",
    "SuiteResult",
    "base_match_rate",
    "cipher_match_rate",
    "compare",
    "default_suite",
    "ranking_csv",
    "ranking_text",
    "run_evaluation",
]


def base_match_rate(oracle: CipherOracle) -> float:
    """Match rate reachable without learning anything about the round function.

    One DES round leaves half the block as a key-independent permutation of
    the plaintext, so those 32 bits are free: 0.75. Everything else: 0.5.
    """
    if isinstance(oracle, DesReducedOracle) and oracle.rounds == 1:
        return 0.75
    return 0.5


def derive_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, tags)]).generate_state(1, np.uint64)[0] >> 1)


def default_suite(oracle: CipherOracle, kinds: Sequence[str] = ARCH_KINDS, activation: str = "sigmoid"):
    return [ArchitectureSpec.preset(k, oracle.input_bits, oracle.output_bits, activation) for k in kinds]


@dataclass
class EvalConfig:
    m1_start: int
    m2: int
    suite: list[ArchitectureSpec]
    cmr_base: float | None = None
    max_comp_data: int = 20
    train: TrainConfig = field(default_factory=TrainConfig)
    data_seed: int = 0
    param_seed: int = 0
    grow: bool = False
    improve_tol: float = 1e-4
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.m1_start < 1:
            raise ConfigurationError("m1_start must be >= 1")
        if self.m2 < 0:
            raise ConfigurationError("m2 must be >= 0")
        if not self.suite:
            raise ConfigurationError("network suite is empty")
        if self.cmr_base is not None and not 0.0 <= self.cmr_base < 1.0:
            raise ConfigurationError("cmr_base must lie in [0, 1)")
        if self.max_comp_data < self.m1_start:
            raise ConfigurationError("max_comp_data must be >= m1_start")


@dataclass
class SuiteResult:
    comp_data: int
    architecture: str
    cmr: float
    iterations: int
    epochs: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SecurityIndicator:
    cipher: str
    cmr: float
    comp_data: int
    comp_time: int
    best_architecture: str
    base_match_rate: float
    history: list[SuiteResult] = field(default_factory=list)
    cumulative_iterations: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.cmr <= 1.0:
            raise ValueError(f"cmr {self.cmr} outside [0, 1]")
        if self.comp_data < 0:
            raise ValueError("comp_data must be non-negative")

    @property
    def successful(self) -> bool:
        return self.cmr > self.base_match_rate

    def as_tuple(self) -> tuple[float, int, int]:
        return self.cmr, self.comp_data, self.comp_time

    def to_dict(self) -> dict:
        return {
            "cipher": self.cipher,
            "cmr": self.cmr,
            "comp_data": self.comp_data,
            "comp_time": self.comp_time,
            "best_architecture": self.best_architecture,
            "base_match_rate": self.base_match_rate,
            "history": [h.to_dict() for h in self.history],
            "cumulative_iterations": self.cumulative_iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SecurityIndicator":
        try:
            return cls(
                str(d["cipher"]), float(d["cmr"]), int(d["comp_data"]), int(d["comp_time"]),
                str(d["best_architecture"]), float(d["base_match_rate"]),
                [SuiteResult(**h) for h in d.get("history", [])], int(d.get("cumulative_iterations", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed security indicator: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SecurityIndicator":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not JSON: {exc}") from exc
        return cls.from_dict(data)


def describe_oracle(oracle: CipherOracle) -> str:
    if isinstance(oracle, DesReducedOracle):
        return f"des-{oracle.rounds}r"
    return oracle.name


# -- the doubling loop -------------------------------------------------------

TrainFn = Callable[[ArchitectureSpec, PairSet, PairSet, int, TrainConfig], tuple[float, int, int]]


def train_and_score(spec, train_set, test_set, param_seed, train_cfg) -> tuple[float, int, int]:
    """Default suite trainer: fresh network, train, test match rate of the final model."""
    net = build(spec, param_seed)
    _, report = train(net, train_set, test_set, train_cfg)
    return report.final_cmr, report.iterations, report.epochs_run


def run_evaluation(
    oracle: CipherOracle, cfg: EvalConfig, trainer: TrainFn | None = None, cipher_label: str | None = None
) -> SecurityIndicator:
    trainer = trainer or train_and_score
    m = oracle.input_bits
    base = base_match_rate(oracle) if cfg.cmr_base is None else cfg.cmr_base
    for spec in cfg.suite:
        if spec.input_width != m or spec.output_bit_count != oracle.output_bits:
            raise ConfigurationError(f"suite network {spec.name} does not match the oracle widths")
    cap = min(cfg.max_comp_data, m - cfg.m2)
    if cfg.m1_start > cap:
        raise ConfigurationError(f"m1_start {cfg.m1_start} leaves no room below the data cap {cap}")
    if m < 63 and (1 << cap) + (1 << cfg.m2) > (1 << m):
        raise CapacityError(f"2^{cap} + 2^{cfg.m2} pairs exceed the 2^{m} input space")

    test_set = generate_pairs(oracle, 1 << cfg.m2, derive_seed(cfg.data_seed, 0))
    cmr = 0.0
    improve = 0.0
    comp_data = cfg.m1_start - 1
    history: list[SuiteResult] = []
    train_set: PairSet | None = None
    cumulative = 0

    while (cmr <= base or improve > cfg.improve_tol) and comp_data < m - cfg.m2 and comp_data < cfg.max_comp_data:
        comp_data += 1
        improve = 0.0
        train_set = _next_training_set(oracle, cfg, comp_data, test_set, train_set)
        if not train_set.is_disjoint(test_set):
            raise AssertionError("training set overlaps the test set")
        seeds = [derive_seed(cfg.param_seed, comp_data, i) for i in range(len(cfg.suite))]
        results = _train_suite(trainer, cfg, train_set, test_set, seeds)
        for spec, (cmr_i, iters, epochs) in zip(cfg.suite, results):
            history.append(SuiteResult(comp_data, spec.name, float(cmr_i), int(iters), int(epochs)))
            cumulative += int(iters)
            log.info("2^%d pairs  %-24s cmr %.4f  iterations %d", comp_data, spec.name, cmr_i, iters)
            if cmr_i > cmr:
                improve += cmr_i - cmr
                cmr = cmr_i

    best = max(history, key=lambda h: h.cmr)
    first = min((h for h in history if h.cmr == best.cmr), key=lambda h: h.comp_data)
    return SecurityIndicator(
        cipher=cipher_label or describe_oracle(oracle),
        cmr=first.cmr,
        comp_data=first.comp_data,
        comp_time=first.iterations,
        best_architecture=first.architecture,
        base_match_rate=base,
        history=history,
        cumulative_iterations=cumulative,
    )


def _next_training_set(oracle, cfg, comp_data, test_set, previous):
    seed = derive_seed(cfg.data_seed, 1, comp_data)
    if cfg.grow and previous is not None:
        exclude = test_set.concat(previous)
        extra = generate_pairs(oracle, (1 << comp_data) - len(previous), seed, exclude=exclude)
        return previous.concat(extra)
    return generate_pairs(oracle, 1 << comp_data, seed, exclude=test_set)


def _train_suite(trainer, cfg, train_set, test_set, seeds):
    jobs = [(spec, train_set, test_set, seed, cfg.train) for spec, seed in zip(cfg.suite, seeds)]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(jobs))) as pool:
            return list(pool.map(trainer, *zip(*jobs)))
    return [trainer(*job) for job in jobs]


# -- comparison --------------------------------------------------------------

def _strength_key(ind: SecurityIndicator, tol: float):
    bucket = math.floor(ind.cmr / tol + 0.5) if tol > 0 else ind.cmr
    return (ind.successful, bucket, -ind.comp_data, -ind.comp_time)


def compare(indicators: Sequence[SecurityIndicator], tol: float = 0.01) -> list[SecurityIndicator]:
    """Strongest cipher first.

    Failed attacks (match rate at or below base) rank strongest. Otherwise a
    lower match rate is stronger; match rates are compared on a ``tol`` grid,
    and ties go to the larger data and then time complexity. The sort is
    stable, so full ties keep their input order.
    """
    if not indicators:
        raise ValueError("nothing to compare")
    return sorted(indicators, key=lambda ind: _strength_key(ind, tol))


_COLUMNS = ("rank", "cipher", "cmr", "comp_data", "comp_time", "base_match_rate", "successful", "best_architecture")


def _rows(ranked):
    for i, ind in enumerate(ranked, start=1):
        yield (i, ind.cipher, f"{ind.cmr:.4f}", ind.comp_data, ind.comp_time, f"{ind.base_match_rate:.2f}",
               "yes" if ind.successful else "no", ind.best_architecture)


def ranking_csv(ranked: Sequence[SecurityIndicator]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS)
    w.writerows(_rows(ranked))
    return buf.getvalue()


def ranking_text(ranked: Sequence[SecurityIndicator]) -> str:
    rows = [tuple(map(str, _COLUMNS))] + [tuple(map(str, r)) for r in _rows(ranked)]
    widths = [max(len(r[c]) for r in rows) for c in range(len(_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    lines.append("(rank 1 = strongest cipher; Cmr = test bitwise match rate, comp_data = log2 training pairs,"
                 " comp_time = training iterations)")
    return "\n".join(lines) + "\n"
