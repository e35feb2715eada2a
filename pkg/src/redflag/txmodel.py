"""Transaction domain types, CSV ingestion, and per-account windowing.

Amounts are string-backed decimals (at most 4 fractional digits) so money
arithmetic and CSV round-trips are exact. Timestamps carry second precision
and are normalized to UTC on the way in.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from decimal import Decimal, InvalidOperation
from enum import Enum

from .errors import DuplicateId, EmptyInput, InvalidWindowing, MalformedRow

CSV_HEADER = "txn_id,timestamp,src_account,dst_account,amount,currency,txn_type"

_CURRENCY_RE = re.compile(r"[A-Z]{3}\Z")
_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class TxnType(Enum):
    TRANSFER = "transfer"
    DEPOSIT = "deposit"
    WITHDRAWAL = "withdrawal"
    PAYMENT = "payment"


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 instant, converting any UTC offset to UTC.

    Sub-second precision is rejected: the transaction model is defined at
    second resolution.
    """
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"bad timestamp {text!r}: {exc}") from None
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    if ts.microsecond != 0:
        raise ValueError(f"timestamp {text!r} has sub-second precision")
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(_TS_FORMAT)


def parse_amount(text: str) -> Decimal:
    """Parse a positive decimal amount with at most 4 fractional digits."""
    try:
        amount = Decimal(text)
    except InvalidOperation:
        raise ValueError(f"bad amount {text!r}") from None
    return _check_amount(amount)


def _check_amount(amount: Decimal) -> Decimal:
    if not amount.is_finite():
        raise ValueError(f"amount {amount} is not finite")
    if amount <= 0:
        raise ValueError("amount must be > 0")
    exponent = amount.as_tuple().exponent
    # Exponent in [-4, 0] keeps str() in plain notation, so serialization
    # never emits scientific form and round-trips digit-for-digit.
    if not -4 <= exponent <= 0:
        raise ValueError(f"amount {amount} must have 0 to 4 fractional digits")
    return amount


@dataclass(frozen=True)
class Transaction:
    """One money movement between two distinct accounts."""

    txn_id: str
    timestamp: datetime
    src_account: str
    dst_account: str
    amount: Decimal
    currency: str
    txn_type: TxnType

    def __post_init__(self) -> None:
        if not self.txn_id:
            raise ValueError("txn_id must be non-empty")
        if self.timestamp.tzinfo is None or self.timestamp.utcoffset() != timedelta(0):
            raise ValueError("timestamp must be UTC-aware")
        if self.timestamp.microsecond != 0:
            raise ValueError("timestamp must have second precision")
        if not self.src_account or not self.dst_account:
            raise ValueError("account identifiers must be non-empty")
        if self.src_account == self.dst_account:
            raise ValueError("src_account and dst_account must differ")
        _check_amount(self.amount)
        if not _CURRENCY_RE.match(self.currency):
            raise ValueError(f"currency {self.currency!r} must match [A-Z]{{3}}")

    def as_row(self) -> list[str]:
        return [
            self.txn_id,
            format_timestamp(self.timestamp),
            self.src_account,
            self.dst_account,
            str(self.amount),
            self.currency,
            self.txn_type.value,
        ]


@dataclass(frozen=True)
class TransactionWindow:
    """All outgoing transactions of one focal account in one time interval.

    The constructor sorts transactions by (timestamp, txn_id), so two windows
    built from permutations of the same list compare equal.
    """

    focal_account: str
    window_start: datetime
    window_duration_seconds: int
    transactions: tuple[Transaction, ...]

    def __post_init__(self) -> None:
        if self.window_duration_seconds <= 0:
            raise ValueError("window_duration_seconds must be positive")
        ordered = tuple(
            sorted(self.transactions, key=lambda t: (t.timestamp, t.txn_id))
        )
        object.__setattr__(self, "transactions", ordered)
        end = self.window_start + timedelta(seconds=self.window_duration_seconds)
        for txn in ordered:
            if txn.src_account != self.focal_account:
                raise ValueError(
                    f"transaction {txn.txn_id} is not outgoing from {self.focal_account}"
                )
            if not self.window_start <= txn.timestamp < end:
                raise ValueError(f"transaction {txn.txn_id} lies outside the window")


@dataclass
class Dataset:
    """Labeled windows plus the generation provenance needed to rerun them."""

    windows: list[tuple[TransactionWindow, int]]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for _, label in self.windows:
            if label not in (0, 1):
                raise ValueError(f"label must be 0 or 1, got {label!r}")


def parse_transactions_csv(data: bytes) -> list[Transaction]:
    """Parse the canonical transaction CSV into validated Transactions.

    Raises MalformedRow with the 1-based line number on any bad field,
    DuplicateId on a repeated txn_id, and EmptyInput when there is no header.
    """
    text = data.decode("utf-8")
    if not text.strip():
        raise EmptyInput("no CSV content")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInput("no CSV content") from None
    if header != CSV_HEADER.split(","):
        raise MalformedRow(1, f"expected header {CSV_HEADER!r}")
    txns: list[Transaction] = []
    seen: set[str] = set()
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 7:
            raise MalformedRow(line_no, f"expected 7 fields, got {len(row)}")
        txn_id, ts_text, src, dst, amount_text, currency, type_text = row
        try:
            txn = Transaction(
                txn_id=txn_id,
                timestamp=parse_timestamp(ts_text),
                src_account=src,
                dst_account=dst,
                amount=parse_amount(amount_text),
                currency=currency,
                txn_type=_parse_txn_type(type_text),
            )
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc)) from None
        if txn.txn_id in seen:
            raise DuplicateId(txn.txn_id)
        seen.add(txn.txn_id)
        txns.append(txn)
    return txns


def _parse_txn_type(text: str) -> TxnType:
    try:
        return TxnType(text)
    except ValueError:
        allowed = ", ".join(t.value for t in TxnType)
        raise ValueError(f"txn_type {text!r} not one of: {allowed}") from None


def serialize_transactions_csv(txns: list[Transaction]) -> bytes:
    """Render transactions to CSV bytes; parse(serialize(x)) == x."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for txn in txns:
        writer.writerow(txn.as_row())
    return out.getvalue().encode("utf-8")


def build_windows(
    txns: list[Transaction], duration_seconds: int, stride_seconds: int
) -> list[TransactionWindow]:
    """Slice each account's outgoing transactions into grid-aligned windows.

    The grid for an account starts at its earliest transaction and steps by
    stride_seconds; each window spans duration_seconds. Windows holding zero
    transactions are dropped. Output is sorted by (account, window_start) and
    is invariant under permutation of the input list.
    """
    if stride_seconds < 1 or duration_seconds < 1 or stride_seconds > duration_seconds:
        raise InvalidWindowing(
            f"need duration >= stride >= 1, got duration={duration_seconds} "
            f"stride={stride_seconds}"
        )
    by_account: dict[str, list[Transaction]] = {}
    for txn in txns:
        by_account.setdefault(txn.src_account, []).append(txn)

    windows: list[TransactionWindow] = []
    for account in sorted(by_account):
        outgoing = sorted(by_account[account], key=lambda t: (t.timestamp, t.txn_id))
        anchor = outgoing[0].timestamp
        last = outgoing[-1].timestamp
        stride = timedelta(seconds=stride_seconds)
        duration = timedelta(seconds=duration_seconds)
        start = anchor
        while start <= last:
            end = start + duration
            inside = tuple(t for t in outgoing if start <= t.timestamp < end)
            if inside:
                windows.append(
                    TransactionWindow(
                        focal_account=account,
                        window_start=start,
                        window_duration_seconds=duration_seconds,
                        transactions=inside,
                    )
                )
            start = start + stride
    return windows
