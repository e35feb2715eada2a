"""Deterministic window corpus answered by the shipped replay fixtures.

Four shapes: degenerate single-transaction windows, uniform equal-split
bursts, multi-currency mixes, and jittered fan-outs. The fixture files in
fixtures/replay_store are keyed by these windows' digests; regenerate them
with scripts/make_replay_fixtures.py after changing anything here.
"""

from __future__ import annotations

import random
from datetime import timedelta
from decimal import Decimal

from redflag.txmodel import Transaction, TransactionWindow, TxnType

from conftest import EPOCH

CURRENCY_WHEEL = ("USD", "EUR", "GBP", "JPY", "CHF")


def _window(focal: str, offsets: list[int], amounts: list[str], currencies: list[str]) -> TransactionWindow:
    txns = tuple(
        Transaction(
            txn_id=f"{focal}t{i:03d}",
            timestamp=EPOCH + timedelta(seconds=offset),
            src_account=focal,
            dst_account=f"sink{i:03d}",
            amount=Decimal(amount),
            currency=currency,
            txn_type=TxnType.TRANSFER,
        )
        for i, (offset, amount, currency) in enumerate(
            zip(offsets, amounts, currencies)
        )
    )
    return TransactionWindow(
        focal_account=focal,
        window_start=EPOCH,
        window_duration_seconds=86400,
        transactions=txns,
    )


def corpus_windows() -> list[TransactionWindow]:
    rng = random.Random(20240817)
    windows: list[TransactionWindow] = []

    # Degenerate: single transaction, every interval feature 0.
    for i in range(4):
        windows.append(
            _window(
                f"deg{i}",
                offsets=[rng.randrange(86400)],
                amounts=[f"{rng.randrange(100, 10**6)}.{rng.randrange(100):02d}"],
                currencies=[rng.choice(CURRENCY_WHEEL)],
            )
        )

    # Uniform: equal amounts on an even time grid, one currency.
    for i in range(6):
        n = rng.randrange(3, 9)
        gap = rng.randrange(60, 3600)
        amount = f"{rng.randrange(1000, 50000)}.00"
        windows.append(
            _window(
                f"uni{i}",
                offsets=[k * gap for k in range(n)],
                amounts=[amount] * n,
                currencies=[rng.choice(CURRENCY_WHEEL)] * n,
            )
        )

    # Multi-currency: varied amounts across several currency codes.
    for i in range(6):
        n = rng.randrange(4, 10)
        k = rng.randrange(2, min(n, len(CURRENCY_WHEEL)) + 1)
        chosen = rng.sample(CURRENCY_WHEEL, k)
        currencies = [chosen[j % k] for j in range(n)]
        windows.append(
            _window(
                f"mix{i}",
                offsets=sorted(rng.sample(range(86400), n)),
                amounts=[
                    f"{rng.randrange(10, 10**5)}.{rng.randrange(10000):04d}"
                    for _ in range(n)
                ],
                currencies=currencies,
            )
        )

    # Jittered fan-out: near-equal splits inside a tight burst.
    for i in range(8):
        n = rng.randrange(5, 12)
        span = rng.randrange(600, 7200)
        base = rng.randrange(5000, 20000)
        offsets = sorted(rng.randrange(span + 1) for _ in range(n))
        amounts = [
            str(
                (Decimal(base) * (1 + Decimal(rng.randrange(-100, 101)) / 1000))
                .quantize(Decimal("0.01"))
            )
            for _ in range(n)
        ]
        windows.append(
            _window(
                f"fan{i}",
                offsets=offsets,
                amounts=amounts,
                currencies=[rng.choice(CURRENCY_WHEEL)] * n,
            )
        )
    return windows
