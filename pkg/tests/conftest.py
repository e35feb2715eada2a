"""Shared builders for randomized test data."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone
from decimal import Decimal

from redflag.txmodel import Transaction, TransactionWindow, TxnType

EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)

CURRENCIES = ("USD", "EUR", "GBP", "JPY")


def make_txn(
    txn_id: str = "t1",
    ts: str | datetime = "2024-01-01T00:00:00+00:00",
    src: str = "A",
    dst: str = "B",
    amount: str = "100.00",
    currency: str = "USD",
    txn_type: TxnType = TxnType.TRANSFER,
) -> Transaction:
    if isinstance(ts, str):
        ts = datetime.fromisoformat(ts)
    return Transaction(
        txn_id=txn_id,
        timestamp=ts,
        src_account=src,
        dst_account=dst,
        amount=Decimal(amount),
        currency=currency,
        txn_type=txn_type,
    )


def random_amount(rng: random.Random) -> Decimal:
    digits = rng.randint(1, 999999)
    places = rng.randint(0, 4)
    return Decimal(f"{digits}E{-places}")


def random_transactions(
    rng: random.Random,
    n: int,
    n_accounts: int = 8,
    span_seconds: int = 10 * 86400,
    prefix: str = "r",
) -> list[Transaction]:
    accounts = [f"acct{i:03d}" for i in range(n_accounts)]
    txns = []
    for i in range(n):
        src = rng.choice(accounts)
        dst = rng.choice([a for a in accounts if a != src])
        txns.append(
            Transaction(
                txn_id=f"{prefix}{i:05d}",
                timestamp=EPOCH + timedelta(seconds=rng.randint(0, span_seconds)),
                src_account=src,
                dst_account=dst,
                amount=random_amount(rng),
                currency=rng.choice(CURRENCIES),
                txn_type=rng.choice(list(TxnType)),
            )
        )
    return txns


def random_window(
    rng: random.Random,
    n_txns: int,
    duration_seconds: int = 86400,
    n_currencies: int = 1,
    prefix: str = "w",
) -> TransactionWindow:
    """One focal account's window with n_txns outgoing transactions."""
    focal = f"focal{rng.randint(0, 999):03d}"
    start = EPOCH + timedelta(seconds=rng.randint(0, 365 * 86400))
    currencies = rng.sample(CURRENCIES, k=min(n_currencies, len(CURRENCIES)))
    txns = []
    for i in range(n_txns):
        txns.append(
            Transaction(
                txn_id=f"{prefix}{i:04d}",
                timestamp=start + timedelta(seconds=rng.randint(0, duration_seconds - 1)),
                src_account=focal,
                dst_account=f"dest{rng.randint(0, 999):03d}x",
                amount=random_amount(rng),
                currency=rng.choice(currencies),
                txn_type=rng.choice(list(TxnType)),
            )
        )
    return TransactionWindow(
        focal_account=focal,
        window_start=start,
        window_duration_seconds=duration_seconds,
        transactions=tuple(txns),
    )
