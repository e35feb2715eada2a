#!/usr/bin/env python3
"""Regenerate the shipped replay fixtures from the test window corpus.

Feature values are computed here with the statistics module, independently of
the package's rules backend, so the fixtures genuinely cross-check it. Each
completion is wrapped in a different text style to exercise the parser.
"""

from __future__ import annotations

import json
import statistics
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from redflag.promptkit import window_digest
from redflag.txmodel import TransactionWindow

from replay_corpus import corpus_windows

STORE = ROOT / "tests" / "fixtures" / "replay_store"


def reference_features(window: TransactionWindow) -> dict:
    txns = window.transactions
    n = len(txns)
    amounts = [float(t.amount) for t in txns]
    seconds = [
        int((t.timestamp - window.window_start).total_seconds()) for t in txns
    ]
    span = max(seconds) - min(seconds)
    if n >= 2:
        dispersion = statistics.pstdev(amounts) / statistics.mean(amounts)
        gaps = [b - a for a, b in zip(seconds, seconds[1:])]
        mean_interval = span / (n - 1)
        min_interval = min(gaps)
    else:
        dispersion = 0.0
        mean_interval = 0
        min_interval = 0
    return {
        "linked_transaction_count": n,
        "amount_dispersion": dispersion,
        "currency_variety": len({t.currency for t in txns}),
        "mean_interval_seconds": mean_interval,
        "min_interval_seconds": min_interval,
        "window_span_seconds": span,
    }


def styled_completion(features: dict, style: int) -> str:
    body = json.dumps(features)
    if style == 0:
        return body
    if style == 1:
        return (
            "Here is the extraction for the requested window.\n\n"
            f"```json\n{json.dumps(features, indent=2)}\n```\n\n"
            "All values were computed from the CSV rows."
        )
    if style == 2:
        return (
            "Based on the transactions shown, the pattern metrics are:\n"
            f"{json.dumps(features, indent=4)}\n"
        )
    if style == 3:
        shuffled = dict(reversed(list(features.items())))
        return f"```\n{json.dumps(shuffled)}\n```"
    floaty = {
        key: float(value) if key.endswith(("count", "variety")) else value
        for key, value in features.items()
    }
    return f"  {json.dumps(floaty)}  \nNothing else to report."


def main() -> None:
    STORE.mkdir(parents=True, exist_ok=True)
    for stale in STORE.glob("*.txt"):
        stale.unlink()
    windows = corpus_windows()
    for i, window in enumerate(windows):
        digest = window_digest(window)
        completion = styled_completion(reference_features(window), i % 5)
        (STORE / f"{digest}.txt").write_text(completion, encoding="utf-8")
    print(f"wrote {len(windows)} fixtures to {STORE}")


if __name__ == "__main__":
    main()
