"""Seeded synthetic transaction generator with fan-out pattern injection.

Randomness comes from numpy's PCG64 behind per-purpose SeedSequence children:
child 0 drives background traffic, child 1 is the injection root, and each
injected instance draws from its own grandchild stream. That split keeps
output bit-stable across platforms and lets instances generate independently.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from decimal import Decimal

import numpy as np

from .errors import SpecInfeasible
from .txmodel import Dataset, Transaction, TxnType, build_windows

GENESIS = datetime(2024, 1, 1, tzinfo=timezone.utc)

DEFAULT_WINDOW_SECONDS = 86400

_TYPE_ORDER = (TxnType.TRANSFER, TxnType.DEPOSIT, TxnType.WITHDRAWAL, TxnType.PAYMENT)


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    n_accounts: int
    n_background_txns: int
    background_amount_range: tuple[Decimal, Decimal]
    background_span_seconds: int
    currencies: tuple[str, ...]

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.n_accounts < 2:
            raise ValueError("n_accounts must be >= 2")
        if self.n_background_txns < 0:
            raise ValueError("n_background_txns must be >= 0")
        lo, hi = self.background_amount_range
        if lo <= 0 or lo > hi:
            raise ValueError("need 0 < min <= max in background_amount_range")
        if self.background_span_seconds <= 0:
            raise ValueError("background_span_seconds must be positive")
        if not self.currencies:
            raise ValueError("currencies must be non-empty")


@dataclass(frozen=True)
class FanOutSpec:
    """One source rapidly dispersing a large total across many destinations."""

    n_destinations: int
    total_amount: Decimal
    dispersal_span_seconds: int
    amount_jitter_fraction: Decimal
    n_instances: int

    def __post_init__(self) -> None:
        if self.n_destinations < 2:
            raise ValueError("n_destinations must be >= 2")
        if self.total_amount <= 0:
            raise ValueError("total_amount must be positive")
        if self.dispersal_span_seconds <= 0:
            raise ValueError("dispersal_span_seconds must be positive")
        if not Decimal(0) <= self.amount_jitter_fraction <= Decimal("0.5"):
            raise ValueError("amount_jitter_fraction must be in [0, 0.5]")
        if self.n_instances < 0:
            raise ValueError("n_instances must be >= 0")


def _streams(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    background, injection = np.random.SeedSequence(seed).spawn(2)
    return background, injection


def _minor_units(amount: Decimal) -> tuple[int, int]:
    """Return (value in minor units, exponent) for an exact decimal."""
    exponent = amount.as_tuple().exponent
    return int(amount.scaleb(-exponent)), exponent


def account_id(index: int) -> str:
    return f"acct{index:04d}"


def generate_background(config: GeneratorConfig) -> list[Transaction]:
    """Emit exactly n_background_txns uniform transactions among the pool."""
    n = config.n_background_txns
    if n == 0:
        return []
    rng = np.random.Generator(np.random.PCG64(_streams(config.seed)[0]))

    src = rng.integers(0, config.n_accounts, size=n)
    dst = rng.integers(0, config.n_accounts, size=n)
    # Self-loops are re-drawn until every pair is distinct.
    loop = src == dst
    while loop.any():
        dst[loop] = rng.integers(0, config.n_accounts, size=int(loop.sum()))
        loop = src == dst
    offsets = rng.integers(0, config.background_span_seconds, size=n)

    lo, hi = config.background_amount_range
    exponent = min(lo.as_tuple().exponent, hi.as_tuple().exponent)
    lo_units = int(lo.scaleb(-exponent))
    hi_units = int(hi.scaleb(-exponent))
    units = rng.integers(lo_units, hi_units + 1, size=n)

    currency_idx = rng.integers(0, len(config.currencies), size=n)
    type_idx = rng.integers(0, len(_TYPE_ORDER), size=n)

    txns = []
    for i in range(n):
        txns.append(
            Transaction(
                txn_id=f"bg{i:06d}",
                timestamp=GENESIS + timedelta(seconds=int(offsets[i])),
                src_account=account_id(int(src[i])),
                dst_account=account_id(int(dst[i])),
                amount=Decimal(int(units[i])).scaleb(exponent),
                currency=config.currencies[int(currency_idx[i])],
                txn_type=_TYPE_ORDER[int(type_idx[i])],
            )
        )
    return txns


def _split_amounts(
    rng: np.random.Generator, spec: FanOutSpec
) -> list[Decimal]:
    """Jitter the equal split, rescale to the exact total, round to minor units.

    The rounding residue (at most a few minor units) lands on the largest
    split, so the instance total is exact.
    """
    total_units, exponent = _minor_units(spec.total_amount)
    n = spec.n_destinations
    jitter = float(spec.amount_jitter_fraction)
    factors = 1.0 + rng.uniform(-jitter, jitter, size=n)
    scaled = factors * (total_units / factors.sum())
    units = [int(round(x)) for x in scaled]
    units[units.index(max(units))] += total_units - sum(units)
    if min(units) <= 0:
        raise SpecInfeasible(
            "jitter and destination count leave a non-positive split amount"
        )
    return [Decimal(u).scaleb(exponent) for u in units]


def inject_fanout(
    background: list[Transaction],
    spec: FanOutSpec,
    config: GeneratorConfig,
    duration_seconds: int = DEFAULT_WINDOW_SECONDS,
    stride_seconds: int | None = None,
) -> Dataset:
    """Add n_instances fan-out bursts, window everything, and label windows.

    Each instance gets a dedicated source account outside the background pool
    and a private PRNG stream. A window is labeled 1 iff it contains at least
    one injected transaction. Window duration is dispersal span rounded up to
    a whole multiple of duration_seconds.
    """
    if spec.n_destinations >= config.n_accounts:
        raise SpecInfeasible(
            f"{spec.n_destinations} destinations need more than "
            f"{config.n_accounts} pool accounts"
        )
    if spec.dispersal_span_seconds > config.background_span_seconds:
        raise SpecInfeasible("dispersal span exceeds the background span")

    duration = duration_seconds * math.ceil(
        spec.dispersal_span_seconds / duration_seconds
    )
    stride = duration if stride_seconds is None else min(stride_seconds, duration)

    children = _streams(config.seed)[1].spawn(spec.n_instances)
    injected: list[Transaction] = []
    for i in range(spec.n_instances):
        rng = np.random.Generator(np.random.PCG64(children[i]))
        source = f"mule{i:04d}"
        dest_idx = rng.choice(config.n_accounts, size=spec.n_destinations, replace=False)
        start = int(
            rng.integers(
                0, config.background_span_seconds - spec.dispersal_span_seconds + 1
            )
        )
        offsets = rng.integers(0, spec.dispersal_span_seconds + 1, size=spec.n_destinations)
        currency = config.currencies[int(rng.integers(0, len(config.currencies)))]
        amounts = _split_amounts(rng, spec)
        for k in range(spec.n_destinations):
            injected.append(
                Transaction(
                    txn_id=f"fo{i:04d}d{k:02d}",
                    timestamp=GENESIS + timedelta(seconds=start + int(offsets[k])),
                    src_account=source,
                    dst_account=account_id(int(dest_idx[k])),
                    amount=amounts[k],
                    currency=currency,
                    txn_type=TxnType.TRANSFER,
                )
            )

    all_txns = list(background) + injected
    windows = build_windows(all_txns, duration, stride)
    injected_ids = {t.txn_id for t in injected}
    labeled = [
        (w, int(any(t.txn_id in injected_ids for t in w.transactions)))
        for w in windows
    ]
    return Dataset(windows=labeled, meta=generation_meta(config, spec))


def generation_meta(config: GeneratorConfig, spec: FanOutSpec) -> dict:
    payload = {
        "seed": config.seed,
        "n_accounts": config.n_accounts,
        "n_background_txns": config.n_background_txns,
        "background_amount_range": [str(a) for a in config.background_amount_range],
        "background_span_seconds": config.background_span_seconds,
        "currencies": list(config.currencies),
        "n_destinations": spec.n_destinations,
        "total_amount": str(spec.total_amount),
        "dispersal_span_seconds": spec.dispersal_span_seconds,
        "amount_jitter_fraction": str(spec.amount_jitter_fraction),
        "n_instances": spec.n_instances,
    }
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()
    ).hexdigest()
    return {"seed": config.seed, "config_digest": digest}
