"""Command-line pipeline: generate data, extract features, train, evaluate.

One JSON config file drives every stage; each field has a default, so the
whole pipeline runs with no config at all. Stages communicate only through
files in the output directory, which makes every stage independently
rerunnable and the full run byte-reproducible. Timestamped extraction log
lines go to a separate extract.log so the data artifacts stay deterministic.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from .errors import (
    BackendError,
    ConfigError,
    DataError,
    RedflagError,
    SingleClassData,
)
from .extract import BackendConfig, BackendKind, FeatureVector, batch_extract
from .figures import save_feature_separation, save_roc_curves
from .model import (
    Example,
    ModelParams,
    TrainConfig,
    evaluate,
    predict_proba,
    train_logreg,
)
from .promptkit import FEATURE_NAMES, TEMPLATE_VERSION, default_fanout_pattern
from .quantify import QuantizationSpec, fit_spec, quantify
from .synthgen import (
    FanOutSpec,
    GeneratorConfig,
    generate_background,
    inject_fanout,
)
from .txmodel import (
    Dataset,
    Transaction,
    TransactionWindow,
    TxnType,
    format_timestamp,
    parse_amount,
    parse_timestamp,
    serialize_transactions_csv,
)

BASELINE_FEATURES = ("linked_transaction_count", "window_span_seconds")

TRANSACTIONS_FILE = "transactions.csv"
WINDOWS_FILE = "windows.json"
FEATURES_FILE = "features.json"
QUANTIZER_FILE = "quantizer.json"
MODEL_FILE = "model.json"
REPORT_FILE = "report.json"
EXTRACT_LOG_FILE = "extract.log"
ROC_FIGURE = "roc.png"
SEPARATION_FIGURE = "feature_separation.png"


@dataclass(frozen=True)
class PipelineConfig:
    generator: GeneratorConfig
    fanout: FanOutSpec
    backend: BackendConfig
    train: TrainConfig
    window_duration_seconds: int = 86400
    window_stride_seconds: int = 86400
    split_fraction: float = 0.8
    output_dir: str = "out"

    def __post_init__(self) -> None:
        if self.window_duration_seconds < 1 or self.window_stride_seconds < 1:
            raise ValueError("window duration and stride must be >= 1 second")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split_fraction must lie strictly between 0 and 1")
        if not self.output_dir:
            raise ValueError("output_dir must be non-empty")


def default_config() -> PipelineConfig:
    return PipelineConfig(
        generator=GeneratorConfig(
            seed=42,
            n_accounts=50,
            n_background_txns=5000,
            background_amount_range=(Decimal("10.00"), Decimal("5000.00")),
            background_span_seconds=30 * 86400,
            currencies=("USD", "EUR", "GBP"),
        ),
        fanout=FanOutSpec(
            n_destinations=8,
            total_amount=Decimal("80000.00"),
            dispersal_span_seconds=3600,
            amount_jitter_fraction=Decimal("0.1"),
            n_instances=40,
        ),
        backend=BackendConfig(kind=BackendKind.RULES),
        train=TrainConfig(),
    )


def _take_section(data: dict, key: str) -> dict:
    section = data.pop(key, {})
    if not isinstance(section, dict):
        raise ConfigError(f"config section {key!r} must be an object")
    return section


def _reject_unknown(section: dict, allowed: tuple[str, ...], where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} in {where}")


def _decimal(value: object, where: str) -> Decimal:
    try:
        return Decimal(str(value))
    except InvalidOperation as exc:
        raise ConfigError(f"{where}: {value!r} is not a number") from exc


def load_config(path: str | None) -> PipelineConfig:
    """Merge a (possibly partial) JSON config file over the defaults."""
    base = default_config()
    if path is None:
        return base
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")

    gen = _take_section(data, "generator")
    fan = _take_section(data, "fanout")
    back = _take_section(data, "backend")
    train = _take_section(data, "train")
    _reject_unknown(
        data,
        ("window_duration_seconds", "window_stride_seconds", "split_fraction", "output_dir"),
        "top level",
    )
    _reject_unknown(
        gen,
        (
            "seed",
            "n_accounts",
            "n_background_txns",
            "background_amount_range",
            "background_span_seconds",
            "currencies",
        ),
        "generator",
    )
    _reject_unknown(
        fan,
        (
            "n_destinations",
            "total_amount",
            "dispersal_span_seconds",
            "amount_jitter_fraction",
            "n_instances",
        ),
        "fanout",
    )
    _reject_unknown(
        back,
        (
            "kind",
            "endpoint_url",
            "model_name",
            "api_key_env_var",
            "max_retries",
            "replay_dir",
        ),
        "backend",
    )
    _reject_unknown(train, ("learning_rate", "epochs", "l2_lambda", "seed"), "train")

    if "background_amount_range" in gen:
        pair = gen["background_amount_range"]
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError("background_amount_range must be a [min, max] pair")
        gen["background_amount_range"] = tuple(
            _decimal(v, "background_amount_range") for v in pair
        )
    if "currencies" in gen:
        gen["currencies"] = tuple(gen["currencies"])
    if "total_amount" in fan:
        fan["total_amount"] = _decimal(fan["total_amount"], "total_amount")
    if "amount_jitter_fraction" in fan:
        fan["amount_jitter_fraction"] = _decimal(
            fan["amount_jitter_fraction"], "amount_jitter_fraction"
        )
    if "kind" in back:
        try:
            back["kind"] = BackendKind(back["kind"])
        except ValueError as exc:
            raise ConfigError(f"unknown backend kind {back['kind']!r}") from exc

    try:
        return PipelineConfig(
            generator=dataclasses.replace(base.generator, **gen),
            fanout=dataclasses.replace(base.fanout, **fan),
            backend=dataclasses.replace(base.backend, **back),
            train=dataclasses.replace(base.train, **train),
            window_duration_seconds=data.get(
                "window_duration_seconds", base.window_duration_seconds
            ),
            window_stride_seconds=data.get(
                "window_stride_seconds", base.window_stride_seconds
            ),
            split_fraction=data.get("split_fraction", base.split_fraction),
            output_dir=data.get("output_dir", base.output_dir),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _write_json(path: Path, payload: object) -> None:
    path.write_bytes(
        (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
    )


def _read_json(path: Path, produced_by: str) -> object:
    try:
        raw = path.read_bytes()
    except FileNotFoundError as exc:
        raise DataError(
            f"missing artifact {path.name}; run `redflag {produced_by}` first"
        ) from exc
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DataError(f"artifact {path.name} is not valid JSON: {exc}") from exc


def _txn_to_json(txn: Transaction) -> dict:
    return {
        "txn_id": txn.txn_id,
        "timestamp": format_timestamp(txn.timestamp),
        "src_account": txn.src_account,
        "dst_account": txn.dst_account,
        "amount": str(txn.amount),
        "currency": txn.currency,
        "txn_type": txn.txn_type.value,
    }


def _txn_from_json(entry: dict) -> Transaction:
    try:
        return Transaction(
            txn_id=entry["txn_id"],
            timestamp=parse_timestamp(entry["timestamp"]),
            src_account=entry["src_account"],
            dst_account=entry["dst_account"],
            amount=parse_amount(entry["amount"]),
            currency=entry["currency"],
            txn_type=TxnType(entry["txn_type"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed transaction record: {exc}") from exc


def _load_windows(out_dir: Path) -> Dataset:
    data = _read_json(out_dir / WINDOWS_FILE, "gen")
    if not isinstance(data, dict) or "windows" not in data:
        raise DataError(f"artifact {WINDOWS_FILE} lacks a windows list")
    labeled = []
    for entry in data["windows"]:
        try:
            window = TransactionWindow(
                focal_account=entry["focal_account"],
                window_start=parse_timestamp(entry["window_start"]),
                window_duration_seconds=entry["window_duration_seconds"],
                transactions=tuple(_txn_from_json(t) for t in entry["transactions"]),
            )
            labeled.append((window, int(entry["label"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed window record: {exc}") from exc
    return Dataset(windows=labeled, meta=data.get("meta", {}))


def split_indices(
    n_examples: int, fraction: float, seed: int
) -> tuple[list[int], list[int]]:
    """Deterministic shuffled split; train size is floor(n * fraction)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    order = rng.permutation(n_examples)
    n_train = int(n_examples * fraction)
    if n_train < 1 or n_examples - n_train < 1:
        raise DataError(
            f"cannot split {n_examples} examples at fraction {fraction}: "
            "both partitions need at least one example"
        )
    return sorted(int(i) for i in order[:n_train]), sorted(
        int(i) for i in order[n_train:]
    )


def _check_both_classes(labels: list[int], partition: str) -> None:
    if len(set(labels)) < 2:
        raise SingleClassData(
            f"{partition} partition holds a single class; "
            "regenerate with more flagged instances or adjust split_fraction"
        )


def cmd_gen(config: PipelineConfig) -> None:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    background = generate_background(config.generator)
    dataset = inject_fanout(
        background,
        config.fanout,
        config.generator,
        duration_seconds=config.window_duration_seconds,
        stride_seconds=config.window_stride_seconds,
    )
    background_ids = {txn.txn_id for txn in background}
    injected = {
        txn.txn_id: txn
        for window, _label in dataset.windows
        for txn in window.transactions
        if txn.txn_id not in background_ids
    }
    stream = background + [injected[key] for key in sorted(injected)]
    (out_dir / TRANSACTIONS_FILE).write_bytes(serialize_transactions_csv(stream))
    payload = {
        "meta": dict(
            dataset.meta,
            window_duration_seconds=config.window_duration_seconds,
            window_stride_seconds=config.window_stride_seconds,
        ),
        "windows": [
            {
                "focal_account": window.focal_account,
                "window_start": format_timestamp(window.window_start),
                "window_duration_seconds": window.window_duration_seconds,
                "label": label,
                "transactions": [_txn_to_json(t) for t in window.transactions],
            }
            for window, label in dataset.windows
        ],
    }
    _write_json(out_dir / WINDOWS_FILE, payload)
    n_flagged = sum(label for _, label in dataset.windows)
    print(
        f"[gen] wrote {len(stream)} transactions and "
        f"{len(dataset.windows)} windows ({n_flagged} flagged) to {out_dir}"
    )


def cmd_extract(config: PipelineConfig) -> None:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if config.backend.kind is BackendKind.LLM and not os.environ.get(
        config.backend.api_key_env_var, ""
    ):
        raise ConfigError(
            f"environment variable {config.backend.api_key_env_var} is not set"
        )
    dataset = _load_windows(out_dir)
    extract_logger = logging.getLogger("redflag.extract")
    handler = logging.FileHandler(out_dir / EXTRACT_LOG_FILE, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    previous_level = extract_logger.level
    extract_logger.addHandler(handler)
    extract_logger.setLevel(logging.INFO)
    try:
        results = batch_extract(dataset, default_fanout_pattern(), config.backend)
    finally:
        extract_logger.removeHandler(handler)
        extract_logger.setLevel(previous_level)
        handler.close()
    template_version = (
        "" if config.backend.kind is BackendKind.RULES else TEMPLATE_VERSION
    )
    rows = []
    n_failed = 0
    for index, outcome in results:
        if isinstance(outcome, RedflagError):
            n_failed += 1
            print(f"[extract] window {index} failed: {outcome}", file=sys.stderr)
            continue
        rows.append(
            {
                "window_index": index,
                "label": dataset.windows[index][1],
                "features": outcome.as_dict(),
                "backend": config.backend.kind.value,
                "template_version": template_version,
            }
        )
    if not rows:
        raise BackendError(
            f"no windows could be featurized ({n_failed} failures)"
        )
    _write_json(out_dir / FEATURES_FILE, rows)
    suffix = f", {n_failed} failed" if n_failed else ""
    print(
        f"[extract] featurized {len(rows)} windows via "
        f"{config.backend.kind.value} backend{suffix}"
    )


def _load_features(out_dir: Path) -> tuple[list[FeatureVector], list[int]]:
    data = _read_json(out_dir / FEATURES_FILE, "extract")
    if not isinstance(data, list) or not data:
        raise DataError(f"artifact {FEATURES_FILE} holds no feature rows")
    vectors, labels = [], []
    for entry in data:
        try:
            features = entry["features"]
            vectors.append(
                FeatureVector(**{name: features[name] for name in FEATURE_NAMES})
            )
            labels.append(int(entry["label"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed feature record: {exc}") from exc
    return vectors, labels


def _quantizer_digest(out_dir: Path) -> str:
    return hashlib.sha256((out_dir / QUANTIZER_FILE).read_bytes()).hexdigest()


def _quantified_examples(
    vectors: list[FeatureVector],
    labels: list[int],
    indices: list[int],
    spec: QuantizationSpec,
) -> list[Example]:
    return [
        (list(quantify(vectors[i], spec).as_tuple()), labels[i]) for i in indices
    ]


def _split_dataset(
    config: PipelineConfig, vectors: list[FeatureVector], labels: list[int]
) -> tuple[list[int], list[int]]:
    train_idx, test_idx = split_indices(
        len(vectors), config.split_fraction, config.train.seed
    )
    _check_both_classes([labels[i] for i in train_idx], "train")
    _check_both_classes([labels[i] for i in test_idx], "test")
    return train_idx, test_idx


def cmd_train(config: PipelineConfig) -> None:
    out_dir = Path(config.output_dir)
    vectors, labels = _load_features(out_dir)
    train_idx, _test_idx = _split_dataset(config, vectors, labels)
    spec = fit_spec([vectors[i] for i in train_idx])
    _write_json(out_dir / QUANTIZER_FILE, spec.as_dict())
    examples = _quantified_examples(vectors, labels, train_idx, spec)
    params = train_logreg(examples, config.train)
    _write_json(
        out_dir / MODEL_FILE,
        {
            "weights": list(params.weights),
            "bias": params.bias,
            "feature_names": list(FEATURE_NAMES),
            "quantizer_digest": _quantizer_digest(out_dir),
        },
    )
    print(
        f"[train] fitted quantizer and model on {len(examples)} of "
        f"{len(vectors)} feature rows"
    )


def _load_model(out_dir: Path) -> tuple[ModelParams, str]:
    data = _read_json(out_dir / MODEL_FILE, "train")
    try:
        if list(data["feature_names"]) != list(FEATURE_NAMES):
            raise DataError(f"artifact {MODEL_FILE} names unexpected features")
        params = ModelParams(
            weights=tuple(float(w) for w in data["weights"]),
            bias=float(data["bias"]),
        )
        return params, str(data["quantizer_digest"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model artifact: {exc}") from exc


def _baseline_examples(enriched: list[Example]) -> list[Example]:
    keep = [FEATURE_NAMES.index(name) for name in BASELINE_FEATURES]
    return [([features[k] for k in keep], label) for features, label in enriched]


def cmd_eval(config: PipelineConfig) -> None:
    out_dir = Path(config.output_dir)
    vectors, labels = _load_features(out_dir)
    spec = QuantizationSpec.from_dict(_read_json(out_dir / QUANTIZER_FILE, "train"))
    persisted, stored_digest = _load_model(out_dir)
    if stored_digest != _quantizer_digest(out_dir):
        raise DataError(
            f"artifact {MODEL_FILE} references a different quantizer; "
            "rerun `redflag train`"
        )
    train_idx, test_idx = _split_dataset(config, vectors, labels)
    enriched_train = _quantified_examples(vectors, labels, train_idx, spec)
    enriched_test = _quantified_examples(vectors, labels, test_idx, spec)
    retrained = train_logreg(enriched_train, config.train)
    if retrained != persisted:
        raise DataError(
            f"artifact {MODEL_FILE} is stale for the current features and "
            "config; rerun `redflag train`"
        )
    baseline_train = _baseline_examples(enriched_train)
    baseline_test = _baseline_examples(enriched_test)
    baseline_params = train_logreg(baseline_train, config.train)
    baseline_report = evaluate(baseline_params, baseline_test)
    enriched_report = evaluate(persisted, enriched_test)
    delta = enriched_report.auc - baseline_report.auc
    summary = (
        f"baseline AUC {baseline_report.auc:.4f}, "
        f"enriched AUC {enriched_report.auc:.4f}, delta {delta:+.4f}"
    )
    _write_json(
        out_dir / REPORT_FILE,
        {
            "baseline": baseline_report.as_dict(),
            "enriched": enriched_report.as_dict(),
            "auc_delta": delta,
            "summary": summary,
        },
    )
    baseline_scored = [
        (predict_proba(baseline_params, features), label)
        for features, label in baseline_test
    ]
    enriched_scored = [
        (predict_proba(persisted, features), label)
        for features, label in enriched_test
    ]
    save_roc_curves(
        out_dir / ROC_FIGURE,
        baseline_scored,
        enriched_scored,
        baseline_report.auc,
        enriched_report.auc,
    )
    save_feature_separation(
        out_dir / SEPARATION_FIGURE,
        [(tuple(features), label) for features, label in enriched_test],
    )
    print(f"[eval] {summary}")


_STAGES = (
    ("gen", cmd_gen),
    ("extract", cmd_extract),
    ("train", cmd_train),
    ("eval", cmd_eval),
)


def cmd_pipeline(config: PipelineConfig) -> None:
    for stage, command in _STAGES:
        try:
            command(config)
        except RedflagError as exc:
            exc.stage = stage
            raise


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="redflag",
        description=(
            "Synthesize transaction data, extract structured risk features, "
            "and measure the detection lift they add over volume-only scoring."
        ),
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "gen": "synthesize transactions and labeled account windows",
        "extract": "turn each window into a six-feature vector",
        "train": "fit the quantizer and classifier on the train split",
        "eval": "score the held-out split and write report plus figures",
        "pipeline": "run gen, extract, train, and eval in sequence",
    }
    for name, text in descriptions.items():
        sub = subparsers.add_parser(name, help=text)
        sub.add_argument("--config", default=None, help="JSON config file")
        sub.add_argument(
            "--backend",
            default=None,
            choices=[kind.value for kind in BackendKind],
            help="feature extraction backend override",
        )
        sub.add_argument("--out", default=None, help="output directory override")
    args = parser.parse_args(argv)

    commands = dict(_STAGES, pipeline=cmd_pipeline)
    try:
        config = load_config(args.config)
        try:
            if args.backend is not None:
                config = dataclasses.replace(
                    config,
                    backend=dataclasses.replace(
                        config.backend, kind=BackendKind(args.backend)
                    ),
                )
            if args.out is not None:
                config = dataclasses.replace(config, output_dir=args.out)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        commands[args.command](config)
        return 0
    except RedflagError as exc:
        stage = getattr(exc, "stage", None)
        tag = f"[{stage}] " if stage else ""
        print(f"error: {tag}{exc}", file=sys.stderr)
        if isinstance(exc, ConfigError):
            return 2
        if isinstance(exc, BackendError):
            return 4
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
