"""``neurocrypt`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

import neurocrypt
from neurocrypt.bitcore import BitFormatError, BitLengthError
from neurocrypt.ciphers.base import ConfigurationError
from neurocrypt.config import ExperimentConfig, parse_count
from neurocrypt.dataset import (
    CapacityError,
    DatasetFormatError,
    PairSet,
    generate_pairs,
    read_pairs,
    write_pairs,
)
from neurocrypt.evaluator import (
    EvalConfig,
    SecurityIndicator,
    compare,
    describe_oracle,
    ranking_csv,
    ranking_text,
    run_evaluation,
)
from neurocrypt.mimicnet import ArchitectureSpec, CheckpointError, NumericError, build
from neurocrypt.trainer import DataLeakError, TrainReport, train

log = logging.getLogger("neurocrypt")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

# figure -> which runs reproduce it
FIGURE_MAP = {
    "fig3": "1-round DES, all three architectures (train --arch each, or eval with the full suite)",
    "fig4": "1-round DES, fat_shallow, activation sweep sigmoid/tanh/relu",
    "fig5": "fat_shallow on DES with rounds 1, 2, 3",
    "fig6": "Hitag2, fat_shallow and deep_thin",
    "fig7": "Hitag2 training-size sweep (eval) plus compare of the DES and Hitag2 indicators",
}

_USAGE_ERRORS = (ConfigurationError, CapacityError, DatasetFormatError, CheckpointError, DataLeakError,
                 BitFormatError, BitLengthError, FileNotFoundError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict:
    return {
        "neurocrypt": neurocrypt.__version__,
        "kernel_backend": neurocrypt.BACKEND,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "platform": platform.platform(),
    }


def write_manifest(out_dir: Path, command: str, cfg: ExperimentConfig, outputs: list[Path], extra=None) -> Path:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": cfg.to_dict(),
        "versions": _versions(),
        "outputs": {p.name: _sha256(p) for p in outputs if p.exists()},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / f"{command}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _apply_shorthand(args) -> None:
    """Fold positional ``name`` and ``key=value`` words into the flag namespace.

    ``gen des rounds=1 count=2^10 seed=1`` is the same as
    ``gen --cipher des --rounds 1 --count 2^10 --seed 1``; for ``train`` a bare
    word names an architecture.
    """
    for word in getattr(args, "words", None) or []:
        if "=" not in word:
            if args.command == "train":
                args.arch = (args.arch or []) + [word]
            elif getattr(args, "cipher", None) in (None, word):
                args.cipher = word
            else:
                raise UsageError(f"unexpected argument {word!r}")
            continue
        key, value = word.split("=", 1)
        attr = key.strip().replace("-", "_")
        if attr in ("words", "command", "config") or not hasattr(args, attr):
            raise UsageError(f"unknown setting {key!r}")
        current = getattr(args, attr)
        if isinstance(current, bool):
            value = value.lower() in ("1", "true", "yes", "on")
        elif attr in ("rounds", "seed", "param_seed", "epochs", "batch_size", "shuffle_seed", "patience",
                      "eval_every", "bits", "m1_start", "m2", "max_comp_data", "jobs"):
            try:
                value = int(value)
            except ValueError as exc:
                raise UsageError(f"{key} expects an integer") from exc
        elif attr in ("lr", "min_rel_improvement", "cmr_base", "tol"):
            try:
                value = float(value)
            except ValueError as exc:
                raise UsageError(f"{key} expects a number") from exc
        elif attr == "arch":
            value = value.split(",")
        setattr(args, attr, value)


def _apply_overrides(cfg: ExperimentConfig, args) -> None:
    table = {
        ("cipher", "name"): "cipher", ("cipher", "rounds"): "rounds", ("cipher", "key"): "key",
        ("cipher", "mode"): "mode", ("cipher", "bits"): "bits",
        ("dataset", "train_count"): "count", ("dataset", "test_count"): "test_count",
        ("dataset", "seed"): "seed", ("dataset", "format"): "format", ("suite", "activation"): "activation",
        ("suite", "seed"): "param_seed", ("train", "max_epochs"): "epochs", ("train", "batch_size"): "batch_size",
        ("train", "shuffle_seed"): "shuffle_seed", ("train", "patience_epochs"): "patience",
        ("train", "min_rel_improvement"): "min_rel_improvement", ("train", "eval_every"): "eval_every",
        ("train", "optimizer"): "optimizer", ("train", "learning_rate"): "lr",
        ("eval", "m1_start"): "m1_start", ("eval", "m2"): "m2", ("eval", "max_comp_data"): "max_comp_data",
        ("eval", "cmr_base"): "cmr_base",
    }
    for (section, key), attr in table.items():
        cfg.set(section, key, getattr(args, attr, None))
    if getattr(args, "arch", None):
        cfg.set("suite", "architectures", ",".join(args.arch))
    if getattr(args, "grow", False):
        cfg.set("eval", "grow", "true")
    cfg.set("output", "dir", getattr(args, "out", None))


# -- commands ----------------------------------------------------------------

def cmd_gen(cfg: ExperimentConfig, args) -> int:
    oracle = cfg.oracle()
    out = cfg.output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmt = cfg.get("dataset", "format", "binary")
    suffix = ".jsonl" if fmt == "jsonl" else ".ncps"
    train_count = cfg.count("dataset", "train_count")
    test_count = cfg.count("dataset", "test_count")
    seed = cfg.int("dataset", "seed")

    exclude = read_pairs(args.exclude) if args.exclude else None
    test = generate_pairs(oracle, test_count, 2 * seed, exclude=exclude)
    held_out = test if exclude is None else test.concat(exclude)
    train_set = generate_pairs(oracle, train_count, 2 * seed + 1, exclude=held_out)

    train_path, test_path = out / f"train{suffix}", out / f"test{suffix}"
    write_pairs(train_set, train_path, fmt)
    write_pairs(test, test_path, fmt)
    cfg.set("dataset", "train_path", train_path)
    cfg.set("dataset", "test_path", test_path)
    write_manifest(out, "gen", cfg, [train_path, test_path], {
        "oracle": {"name": oracle.name, "params": oracle.params(),
                   "input_bits": oracle.input_bits, "output_bits": oracle.output_bits},
        "seeds": {"dataset": seed, "test_stream": 2 * seed, "train_stream": 2 * seed + 1},
        "counts": {"train": len(train_set), "test": len(test)},
    })
    print(f"wrote {len(train_set)} training and {len(test)} test pairs "
          f"({oracle.input_bits} -> {oracle.output_bits} bits) to {out}")
    return EXIT_OK


def _load_set(cfg: ExperimentConfig, flag: str | None, key: str) -> PairSet:
    path = flag or cfg.get("dataset", key)
    if not path:
        raise ConfigurationError(f"no {key.replace('_', ' ')} given (--{key.split('_')[0]} or [dataset] {key})")
    if not Path(path).exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    return read_pairs(path)


def cmd_train(cfg: ExperimentConfig, args) -> int:
    train_set = _load_set(cfg, args.train, "train_path")
    test_set = _load_set(cfg, args.test, "test_path")
    if (train_set.input_bits, train_set.output_bits) != (test_set.input_bits, test_set.output_bits):
        raise ConfigurationError(
            f"training set is {train_set.input_bits}->{train_set.output_bits} bits but test set is "
            f"{test_set.input_bits}->{test_set.output_bits}"
        )
    out = cfg.output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tcfg = cfg.train_config()
    param_seed = cfg.int("suite", "seed")
    activation = cfg.get("suite", "activation", "sigmoid")
    written = []
    for kind in cfg.architectures():
        spec = ArchitectureSpec.preset(kind, train_set.input_bits, train_set.output_bits, activation)
        run_id = args.run_id or f"{spec.name}-s{param_seed}"
        if args.run_id and len(cfg.architectures()) > 1:
            run_id = f"{args.run_id}-{spec.name}"
        net = build(spec, param_seed)
        net, report = train(net, train_set, test_set, tcfg)
        ckpt, rep_path, csv_path = out / f"{run_id}.ncmn", out / f"{run_id}.report.json", out / f"{run_id}.csv"
        net.save(ckpt)
        rep_path.write_text(json.dumps({"run_id": run_id, "architecture": spec.to_dict(),
                                        **report.to_dict()}, indent=2) + "\n")
        report.write_csv(csv_path)
        written += [ckpt, rep_path, csv_path]
        print(f"{run_id}: cmr {report.final_cmr:.4f} after {report.epochs_run} epochs "
              f"({report.iterations} iterations, {report.stop_reason})")
    write_manifest(out, "train", cfg, written)
    return EXIT_OK


def cmd_eval(cfg: ExperimentConfig, args) -> int:
    oracle = cfg.oracle()
    out = cfg.output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = cfg.get("eval", "cmr_base")
    ecfg = EvalConfig(
        m1_start=cfg.int("eval", "m1_start"),
        m2=cfg.int("eval", "m2"),
        suite=cfg.suite(oracle),
        cmr_base=float(base) if base not in (None, "") else None,
        max_comp_data=cfg.int("eval", "max_comp_data"),
        train=cfg.train_config(),
        data_seed=cfg.int("dataset", "seed"),
        param_seed=cfg.int("suite", "seed"),
        grow=cfg.flag("eval", "grow"),
        improve_tol=float(cfg.get("eval", "improve_tol", "1e-4")),
        jobs=args.jobs,
    )
    label = args.label or describe_oracle(oracle)
    indicator = run_evaluation(oracle, ecfg, cipher_label=label)
    path = out / f"{label}.indicator.json"
    indicator.save(path)
    hist = out / f"{label}.history.csv"
    with open(hist, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["comp_data", "architecture", "cmr", "iterations", "epochs"])
        for h in indicator.history:
            w.writerow([h.comp_data, h.architecture, h.cmr, h.iterations, h.epochs])
    write_manifest(out, "eval", cfg, [path, hist])
    print(f"{label}: S = (Cmr {indicator.cmr:.4f}, Comp_data 2^{indicator.comp_data}, "
          f"Comp_time {indicator.comp_time}) best {indicator.best_architecture}; "
          f"{'successful' if indicator.successful else 'unsuccessful'} against base {indicator.base_match_rate}")
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, args) -> int:
    if not args.indicators:
        raise UsageError("compare needs at least one indicator file")
    indicators = []
    for p in args.indicators:
        path = Path(p)
        if not path.exists():
            raise FileNotFoundError(f"indicator file not found: {p}")
        try:
            indicators.append(SecurityIndicator.load(path))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
    ranked = compare(indicators, tol=args.tol)
    sys.stdout.write(ranking_text(ranked))
    if args.csv:
        Path(args.csv).write_text(ranking_csv(ranked))
    return EXIT_OK


def cmd_report(cfg: ExperimentConfig, args) -> int:
    """Summarise every training report and indicator found under a run directory."""
    root = Path(args.directory or cfg.output_dir(args.out))
    if not root.is_dir():
        raise FileNotFoundError(f"no run directory {root}")
    rows = []
    for path in sorted(root.rglob("*.report.json")):
        d = json.loads(path.read_text())
        rep = TrainReport.from_dict(d)
        rows.append(("train", d.get("run_id", path.stem), f"{rep.final_cmr:.4f}", rep.epochs_run, rep.iterations,
                     str(path.relative_to(root))))
    for path in sorted(root.rglob("*.indicator.json")):
        ind = SecurityIndicator.load(path)
        rows.append(("eval", ind.cipher, f"{ind.cmr:.4f}", f"2^{ind.comp_data}", ind.comp_time,
                     str(path.relative_to(root))))
    summary = root / "summary.csv"
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "run", "cmr", "epochs_or_data", "iterations", "file"])
        w.writerows(rows)
    for r in rows:
        print("  ".join(map(str, r)))
    print("\nfigure map:")
    for fig, what in FIGURE_MAP.items():
        print(f"  {fig}: {what}")
    print(f"\nsummary written to {summary}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file or a run manifest (.json)")
    p.add_argument("--out", help=f"output directory (overrides $NEUROCRYPT_OUT and [output] dir)")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _cipher_flags(p):
    p.add_argument("--cipher", help="des | hitag2 | identity | constant | permutation | random")
    p.add_argument("--rounds", type=int)
    p.add_argument("--key", help="DES key as 16 hex digits")
    p.add_argument("--mode", help="Hitag2 input mode: filter | keystream-step")
    p.add_argument("--bits", type=int, help="block width of the identity and permutation toy ciphers")


def _train_flags(p):
    p.add_argument("--arch", action="append", help="architecture (repeatable): fat_shallow, deep_thin, cascade")
    p.add_argument("--activation", help="sigmoid | tanh | relu")
    p.add_argument("--param-seed", type=int, dest="param_seed")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--shuffle-seed", type=int, dest="shuffle_seed")
    p.add_argument("--patience", type=int)
    p.add_argument("--min-rel-improvement", type=float, dest="min_rel_improvement")
    p.add_argument("--eval-every", type=int, dest="eval_every")
    p.add_argument("--optimizer")
    p.add_argument("--lr", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neurocrypt", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen", help="generate disjoint training and test pair sets")
    _common(p)
    _cipher_flags(p)
    p.add_argument("--count", help="training pairs, e.g. 65536 or 2^16")
    p.add_argument("--test-count", dest="test_count", help="test pairs (default from config)")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["binary", "jsonl"])
    p.add_argument("--exclude", help="pair-set file whose inputs must not be drawn")
    p.add_argument("words", nargs="*", help="optional cipher name and key=value settings")

    p = sub.add_parser("train", help="train suite networks on existing pair sets")
    _common(p)
    p.add_argument("--train", help="training pair-set file")
    p.add_argument("--test", help="test pair-set file")
    p.add_argument("--run-id", dest="run_id")
    _train_flags(p)
    p.add_argument("words", nargs="*", help="optional architecture names and key=value settings")

    p = sub.add_parser("eval", help="run the data-doubling evaluation and write a security indicator")
    _common(p)
    _cipher_flags(p)
    _train_flags(p)
    p.add_argument("--seed", type=int, help="dataset seed")
    p.add_argument("--m1-start", type=int, dest="m1_start")
    p.add_argument("--m2", type=int)
    p.add_argument("--max-comp-data", type=int, dest="max_comp_data")
    p.add_argument("--cmr-base", type=float, dest="cmr_base")
    p.add_argument("--grow", action="store_true", help="extend the previous training set instead of resampling")
    p.add_argument("--jobs", type=int, default=1, help="train suite members in parallel worker processes")
    p.add_argument("--label", help="cipher label in the indicator (default derived from the cipher)")
    p.add_argument("words", nargs="*", help="optional cipher name and key=value settings")

    p = sub.add_parser("compare", help="rank security indicators, strongest cipher first")
    _common(p)
    p.add_argument("indicators", nargs="*", help="indicator JSON files")
    p.add_argument("--tol", type=float, default=0.01, help="match-rate tie tolerance")
    p.add_argument("--csv", help="also write the ranking as CSV")

    p = sub.add_parser("report", help="summarise a run directory and print the figure map")
    _common(p)
    p.add_argument("directory", nargs="?")
    return parser


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "compare": cmd_compare, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    stray = [w for w in extra if w.startswith("-")]
    if stray or (extra and not hasattr(args, "words")):
        parser.error(f"unrecognized arguments: {' '.join(stray or extra)}")
    if extra:
        args.words = list(args.words or []) + extra
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(asctime)s %(name)s %(message)s"
    )
    try:
        _apply_shorthand(args)
        if getattr(args, "count", None) is not None:
            parse_count(args.count)
        cfg = ExperimentConfig.load(args.config)
        _apply_overrides(cfg, args)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"neurocrypt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _USAGE_ERRORS as exc:
        print(f"neurocrypt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"neurocrypt: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
