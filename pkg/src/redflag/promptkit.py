"""Render transaction windows plus pattern narratives into extraction prompts.

The prompt embeds the window as the exact CSV bytes the rules backend sees and
pins a strict reply contract: one JSON object, exact keys, numeric values.
Templates are versioned so extracted features stay traceable to the prompt
that produced them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import EmptyWindow, UnknownFeature
from .txmodel import TransactionWindow, format_timestamp, serialize_transactions_csv

TEMPLATE_VERSION = "fanout_v1"

# Field order of the feature vector produced by every extraction backend.
FEATURE_NAMES = (
    "linked_transaction_count",
    "amount_dispersion",
    "currency_variety",
    "mean_interval_seconds",
    "min_interval_seconds",
    "window_span_seconds",
)

_FEATURE_DEFINITIONS = {
    "linked_transaction_count": "number of transactions in the window",
    "amount_dispersion": (
        "population standard deviation of the amounts divided by their mean "
        "(0 if fewer than 2 transactions or the mean is 0)"
    ),
    "currency_variety": "number of distinct currency codes",
    "mean_interval_seconds": (
        "window_span_seconds divided by (count - 1); 0 if fewer than 2 transactions"
    ),
    "min_interval_seconds": (
        "smallest gap in seconds between consecutive transactions sorted by "
        "time; 0 if fewer than 2 transactions"
    ),
    "window_span_seconds": "seconds between the earliest and latest transaction",
}

_TEMPLATE = """\
You are reviewing bank transactions for a financial-crime investigation.

Pattern under review: {name}
{narrative}

All outgoing transactions of account {focal} in the review window starting
{start} (duration {duration} seconds), as CSV:

{csv}
Compute the following quantities from the CSV above:
{definitions}

Reply with a single JSON object and nothing else. Its keys must be exactly
{keys} and every value must be a plain finite number. Counts must be whole
numbers. Do not add explanations, units, or extra keys.
"""


@dataclass(frozen=True)
class PatternDescription:
    """An investigator red flag: a narrative plus the features it maps to."""

    name: str
    narrative: str
    requested_features: tuple[str, ...]


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    window_digest: str
    template_version: str


def window_digest(window: TransactionWindow) -> str:
    """Content hash of a window's canonical serialization."""
    head = (
        f"{window.focal_account}\n"
        f"{format_timestamp(window.window_start)}\n"
        f"{window.window_duration_seconds}\n"
    )
    payload = head.encode() + serialize_transactions_csv(list(window.transactions))
    return hashlib.sha256(payload).hexdigest()


def default_fanout_pattern() -> PatternDescription:
    return PatternDescription(
        name="fan-out",
        narrative=(
            "One source account splits a large total into many outgoing "
            "transfers, sent to distinct destination accounts in one short "
            "burst. Typical signs: an unusually high number of outgoing "
            "transactions, near-equal split amounts, few distinct currencies, "
            "and very short gaps between consecutive transfers."
        ),
        requested_features=FEATURE_NAMES,
    )


def render_prompt(
    window: TransactionWindow, pattern: PatternDescription
) -> RenderedPrompt:
    """Produce the deterministic prompt text for one window.

    The pattern must request every known feature exactly once; the reply
    contract downstream requires the full key set.
    """
    if not window.transactions:
        raise EmptyWindow(f"window for {window.focal_account} has no transactions")
    for name in pattern.requested_features:
        if name not in FEATURE_NAMES:
            raise UnknownFeature(name)
    if len(set(pattern.requested_features)) != len(pattern.requested_features):
        raise ValueError("requested_features contains duplicates")
    if set(pattern.requested_features) != set(FEATURE_NAMES):
        raise ValueError("requested_features must cover every feature")

    definitions = "\n".join(
        f"- {name}: {_FEATURE_DEFINITIONS[name]}"
        for name in pattern.requested_features
    )
    text = _TEMPLATE.format(
        name=pattern.name,
        narrative=pattern.narrative,
        focal=window.focal_account,
        start=format_timestamp(window.window_start),
        duration=window.window_duration_seconds,
        csv=serialize_transactions_csv(list(window.transactions)).decode(),
        definitions=definitions,
        keys=", ".join(pattern.requested_features),
    )
    return RenderedPrompt(
        text=text,
        window_digest=window_digest(window),
        template_version=TEMPLATE_VERSION,
    )
