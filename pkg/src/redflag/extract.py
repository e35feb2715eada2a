"""Feature extraction backends sharing one output contract.

The rules backend is the normative oracle: it computes each feature exactly
from the window. The llm backend obtains the same six numbers from a chat
completion (live HTTP, or replayed from disk fixtures keyed by window digest)
and is validated against the checkable invariants. Batches run serially;
results are always emitted in window order.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import time
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from pathlib import Path

import requests

from .errors import (
    ConfigError,
    ContractViolation,
    EmptyWindow,
    ExtraKey,
    FractionalCount,
    MissingKey,
    NoJsonFound,
    NonNumericValue,
    RedflagError,
    ReplayMiss,
    TransportError,
)
from .promptkit import FEATURE_NAMES, PatternDescription, render_prompt
from .txmodel import Dataset, TransactionWindow

logger = logging.getLogger("redflag.extract")

_sleep = time.sleep

_REQUEST_TIMEOUT_SECONDS = 60


@dataclass(frozen=True)
class FeatureVector:
    """Raw window features; intervals are exact rationals, dispersion a float."""

    linked_transaction_count: int
    amount_dispersion: float
    currency_variety: int
    mean_interval_seconds: Fraction
    min_interval_seconds: Fraction
    window_span_seconds: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "linked_transaction_count", int(self.linked_transaction_count)
        )
        object.__setattr__(self, "amount_dispersion", float(self.amount_dispersion))
        object.__setattr__(self, "currency_variety", int(self.currency_variety))
        for name in (
            "mean_interval_seconds",
            "min_interval_seconds",
            "window_span_seconds",
        ):
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    def as_dict(self) -> dict[str, int | float]:
        """JSON-ready mapping; integral rationals collapse to ints."""
        out: dict[str, int | float] = {}
        for name in FEATURE_NAMES:
            value = getattr(self, name)
            if isinstance(value, Fraction):
                out[name] = int(value) if value.denominator == 1 else float(value)
            else:
                out[name] = value
        return out


assert tuple(f.name for f in dataclasses.fields(FeatureVector)) == FEATURE_NAMES


class BackendKind(Enum):
    RULES = "rules"
    LLM = "llm"
    REPLAY = "replay"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind
    endpoint_url: str = ""
    model_name: str = ""
    api_key_env_var: str = ""
    temperature: Decimal = Decimal(0)
    max_retries: int = 3
    replay_dir: str = ""

    def __post_init__(self) -> None:
        if self.temperature != 0:
            raise ValueError("temperature must be 0 for reproducible extraction")
        if not 0 <= self.max_retries <= 5:
            raise ValueError("max_retries must be in [0, 5]")
        if self.kind is BackendKind.LLM:
            for field_name in ("endpoint_url", "model_name", "api_key_env_var"):
                if not getattr(self, field_name):
                    raise ValueError(f"llm backend requires {field_name}")
        if self.kind is BackendKind.REPLAY and not self.replay_dir:
            raise ValueError("replay backend requires replay_dir")


def _seconds_between(earlier: datetime, later: datetime) -> int:
    delta = later - earlier
    return delta.days * 86400 + delta.seconds


def extract_rules(window: TransactionWindow) -> FeatureVector:
    """Compute the feature vector exactly from the window's transactions."""
    txns = window.transactions
    if not txns:
        raise EmptyWindow(f"window for {window.focal_account} has no transactions")
    n = len(txns)

    amounts = [float(t.amount) for t in txns]
    mean = math.fsum(amounts) / n
    if n < 2 or mean == 0:
        dispersion = 0.0
    else:
        variance = math.fsum((a - mean) ** 2 for a in amounts) / n
        dispersion = math.sqrt(variance) / mean

    span = _seconds_between(txns[0].timestamp, txns[-1].timestamp)
    if n < 2:
        mean_interval = Fraction(0)
        min_interval = Fraction(0)
    else:
        gaps = [
            _seconds_between(txns[i].timestamp, txns[i + 1].timestamp)
            for i in range(n - 1)
        ]
        mean_interval = Fraction(span, n - 1)
        min_interval = Fraction(min(gaps))

    return FeatureVector(
        linked_transaction_count=n,
        amount_dispersion=dispersion,
        currency_variety=len({t.currency for t in txns}),
        mean_interval_seconds=mean_interval,
        min_interval_seconds=min_interval,
        window_span_seconds=Fraction(span),
    )


def _balanced_object(text: str, start: int) -> str | None:
    """Slice one brace-balanced candidate object starting at text[start] == '{'."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def parse_llm_response(text: str) -> FeatureVector:
    """Parse the first JSON object in a completion into a feature vector.

    The object must carry exactly the six feature keys with finite numeric
    values; count-like features must be whole numbers. Fenced blocks and
    surrounding prose are tolerated.
    """
    data = None
    pos = text.find("{")
    while pos != -1:
        candidate = _balanced_object(text, pos)
        if candidate is not None:
            try:
                data = json.loads(candidate)
                break
            except json.JSONDecodeError:
                pass
        pos = text.find("{", pos + 1)
    if not isinstance(data, dict):
        raise NoJsonFound("completion contains no JSON object")

    for name in FEATURE_NAMES:
        if name not in data:
            raise MissingKey(name)
    for name in data:
        if name not in FEATURE_NAMES:
            raise ExtraKey(name)

    values: dict[str, int | float] = {}
    for name in FEATURE_NAMES:
        value = data[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise NonNumericValue(name)
        if not math.isfinite(value):
            raise NonNumericValue(name)
        values[name] = value
    for name in ("linked_transaction_count", "currency_variety"):
        value = values[name]
        if isinstance(value, float):
            if value != int(value):
                raise FractionalCount(name)
            values[name] = int(value)
    return FeatureVector(**values)


def _check_contract(vector: FeatureVector) -> None:
    for name in FEATURE_NAMES:
        if getattr(vector, name) < 0:
            raise ContractViolation(f"{name} is negative")
    if not (
        vector.min_interval_seconds
        <= vector.mean_interval_seconds
        <= vector.window_span_seconds
    ):
        raise ContractViolation("interval ordering violated: need min <= mean <= span")


def _chat_completion(cfg: BackendConfig, prompt_text: str) -> str:
    """POST the prompt to the chat endpoint with bounded exponential backoff."""
    api_key = os.environ.get(cfg.api_key_env_var, "")
    if not api_key:
        raise ConfigError(
            f"environment variable {cfg.api_key_env_var} is not set"
        )
    body = {
        "model": cfg.model_name,
        "temperature": 0,
        "messages": [{"role": "user", "content": prompt_text}],
    }
    headers = {"Authorization": f"Bearer {api_key}"}
    last_error = "no attempt made"
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            _sleep(min(2.0 ** (attempt - 1), 30.0))
        try:
            response = requests.post(
                cfg.endpoint_url,
                json=body,
                headers=headers,
                timeout=_REQUEST_TIMEOUT_SECONDS,
            )
        except requests.RequestException as exc:
            last_error = str(exc)
            continue
        if response.status_code == 429 or response.status_code >= 500:
            last_error = f"HTTP {response.status_code}"
            continue
        if response.status_code != 200:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise TransportError("response is not a chat completion") from None
    raise TransportError(
        f"giving up after {cfg.max_retries + 1} attempts: {last_error}"
    )


def _replay_completion(cfg: BackendConfig, digest: str) -> str:
    path = Path(cfg.replay_dir) / f"{digest}.txt"
    if not path.is_file():
        raise ReplayMiss(digest)
    return path.read_text(encoding="utf-8")


def extract_llm(
    window: TransactionWindow, pattern: PatternDescription, cfg: BackendConfig
) -> FeatureVector:
    """Extract features through the prompt/completion path.

    Works for both the live llm backend and the replay backend; every call is
    logged with the window digest, template version, and raw completion.
    """
    if cfg.kind not in (BackendKind.LLM, BackendKind.REPLAY):
        raise ValueError(f"extract_llm cannot serve backend kind {cfg.kind.value!r}")
    prompt = render_prompt(window, pattern)
    if cfg.kind is BackendKind.LLM:
        completion = _chat_completion(cfg, prompt.text)
    else:
        completion = _replay_completion(cfg, prompt.window_digest)
    logger.info(
        "llm_call digest=%s template=%s completion=%s",
        prompt.window_digest,
        prompt.template_version,
        json.dumps(completion),
    )
    vector = parse_llm_response(completion)
    _check_contract(vector)
    return vector


def batch_extract(
    dataset: Dataset, pattern: PatternDescription, cfg: BackendConfig
) -> list[tuple[int, FeatureVector | RedflagError]]:
    """Extract every window; per-window failures never abort the batch."""
    results: list[tuple[int, FeatureVector | RedflagError]] = []
    for index, (window, _label) in enumerate(dataset.windows):
        try:
            if cfg.kind is BackendKind.RULES:
                vector: FeatureVector | RedflagError = extract_rules(window)
            else:
                vector = extract_llm(window, pattern, cfg)
        except RedflagError as exc:
            vector = exc
        results.append((index, vector))
    return results
