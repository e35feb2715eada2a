"""Min-max feature quantization with suspicion-direction inversion.

Bounds are fitted on training data only. Interval features are inverted
because shorter gaps and tighter spans mean faster dispersal, which is the
suspicious direction; after mapping, 1 is always "more suspicious".
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EmptyInput
from .extract import FeatureVector
from .promptkit import FEATURE_NAMES

INVERTED_FEATURES = frozenset(
    {"mean_interval_seconds", "min_interval_seconds", "window_span_seconds"}
)


@dataclass(frozen=True)
class FeatureScale:
    lo: float
    hi: float
    invert: bool

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class QuantizationSpec:
    scales: dict[str, FeatureScale]

    def __post_init__(self) -> None:
        if set(self.scales) != set(FEATURE_NAMES):
            raise ValueError("scales must cover exactly the known features")

    def as_dict(self) -> dict:
        return {
            name: {
                "lo": scale.lo,
                "hi": scale.hi,
                "invert": scale.invert,
            }
            for name, scale in self.scales.items()
        }

    @classmethod
    def from_dict(cls, data: dict) -> QuantizationSpec:
        return cls(
            scales={
                name: FeatureScale(
                    lo=float(entry["lo"]),
                    hi=float(entry["hi"]),
                    invert=bool(entry["invert"]),
                )
                for name, entry in data.items()
            }
        )


@dataclass(frozen=True)
class QuantifiedVector:
    """The six features mapped into [0, 1], ready for the classifier."""

    linked_transaction_count: float
    amount_dispersion: float
    currency_variety: float
    mean_interval_seconds: float
    min_interval_seconds: float
    window_span_seconds: float

    def __post_init__(self) -> None:
        for name in FEATURE_NAMES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)


def fit_spec(vectors: list[FeatureVector]) -> QuantizationSpec:
    """Fit per-feature min-max bounds; a constant feature gets hi = lo + 1."""
    if not vectors:
        raise EmptyInput("cannot fit quantization bounds on zero vectors")
    scales = {}
    for name in FEATURE_NAMES:
        observed = [float(getattr(v, name)) for v in vectors]
        lo, hi = min(observed), max(observed)
        if lo == hi:
            hi = lo + 1.0
        scales[name] = FeatureScale(lo=lo, hi=hi, invert=name in INVERTED_FEATURES)
    return QuantizationSpec(scales=scales)


def quantify(vector: FeatureVector, spec: QuantizationSpec) -> QuantifiedVector:
    """Clamp-scale one vector into [0, 1] per the fitted bounds."""
    values = {}
    for name in FEATURE_NAMES:
        scale = spec.scales[name]
        x = (float(getattr(vector, name)) - scale.lo) / (scale.hi - scale.lo)
        x = min(1.0, max(0.0, x))
        values[name] = 1.0 - x if scale.invert else x
    return QuantifiedVector(**values)
