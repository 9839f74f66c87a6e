"""Analysis configuration shared by the speed, topics and stats stages."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from datetime import timedelta

from .errors import InputError

SUMMATION_MODES = ("multiset", "support")
SMOOTHING_MODES = ("none", "add_one")


@dataclass(frozen=True)
class AnalysisConfig:
    bin_width: timedelta = field(default=timedelta(days=14))
    min_retweets: int = 50
    fallback_distance: float = 1.0
    summation_mode: str = "multiset"
    include_first_bin: bool = True
    smoothing: str = "none"
    monotonicity_threshold: float = 0.3
    slow_speed_threshold: float = 1.5

    def __post_init__(self) -> None:
        if self.bin_width <= timedelta(0):
            raise InputError("bin_width must be positive")
        if self.min_retweets < 1:
            raise InputError("min_retweets must be >= 1")
        if not self.fallback_distance >= 1:
            raise InputError("fallback_distance must be >= 1")
        if self.summation_mode not in SUMMATION_MODES:
            raise InputError(f"unknown summation_mode {self.summation_mode!r}")
        if self.smoothing not in SMOOTHING_MODES:
            raise InputError(f"unknown smoothing {self.smoothing!r}")
        if not (self.monotonicity_threshold > 0 and self.slow_speed_threshold > 0):
            raise InputError("thresholds must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["bin_width"]
        return {"bin_width_seconds": self.bin_width.total_seconds(), **d}
