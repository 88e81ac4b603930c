"""Temporal exposure risk: grace-window decay, multi-event combination and
profile-dependent level mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

from venuetrace.records import RiskCategory, RiskProfile

GRACE_MINUTES = 2880  # two days; decay starts after the earliest plausible incubation
DEFAULT_LAMBDA = 0.0001  # per minute
LAMBDA_RANGE = (5e-5, 5e-4)
DEFAULT_PRUNE_HORIZON = 28 * 1440  # minutes; weight below ~0.024 at default lambda


class NegativeGap(ValueError):
    pass


class FutureEvent(ValueError):
    pass


@dataclass(frozen=True)
class ExposureEvent:
    """One scan with its per-exposure contamination probability."""

    t: int  # minutes since epoch
    p: float


@dataclass(frozen=True)
class DecayParams:
    lam: float = DEFAULT_LAMBDA
    grace: int = GRACE_MINUTES

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("decay constant must be positive")
        if self.grace < 0:
            raise ValueError("grace window must be non-negative")


def delta(x: int, y: int, grace: int = GRACE_MINUTES) -> int:
    """Effective decay time between two minute timestamps.

    Zero throughout the grace window, then the exceedance beyond it.
    """
    if x < y:
        raise NegativeGap(f"x={x} precedes y={y}")
    gap = x - y
    return 0 if gap <= grace else gap - grace


def decay_weight(gap: int, params: DecayParams = DecayParams()) -> float:
    """exp(-lambda * delta) for a non-negative gap; 1.0 within the grace window."""
    if gap < 0:
        raise NegativeGap(f"gap={gap} is negative")
    return math.exp(-params.lam * delta(gap, 0, params.grace))


def combined_risk(
    events: Iterable[ExposureEvent], t: int, params: DecayParams = DecayParams()
) -> float:
    """Probability of at least one effective exposure by time ``t``.

    1 - prod(1 - p_n * w_n) over the events; order-independent, empty
    input scores zero, and each p_n must already lie in [0, 1].
    """
    not_exposed = 1.0
    for event in events:
        if event.t > t:
            raise FutureEvent(f"event at {event.t} is after query time {t}")
        if not 0.0 <= event.p <= 1.0:
            raise ValueError(f"event probability {event.p} outside [0, 1]")
        not_exposed *= 1.0 - event.p * decay_weight(t - event.t, params)
    return 1.0 - not_exposed


def prune_events(
    events: Iterable[ExposureEvent], t: int, horizon: int = DEFAULT_PRUNE_HORIZON
) -> list[ExposureEvent]:
    """Drop events older than the horizon; bounds state at a documented cost.

    At the default lambda the discarded weight is below exp(-3.744) ~ 0.024
    per event, so the score understates by at most that per pruned event.
    """
    return [e for e in events if t - e.t <= horizon]


class RiskLevel(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    VERY_HIGH = "very high"


class Palette(Enum):
    STANDARD = "standard"
    COLOUR_BLIND = "colour_blind"


_LEVEL_ORDER = (RiskLevel.LOW, RiskLevel.MEDIUM, RiskLevel.HIGH, RiskLevel.VERY_HIGH)

PALETTE_COLOURS: dict[Palette, dict[RiskLevel, str]] = {
    Palette.STANDARD: {
        RiskLevel.LOW: "green",
        RiskLevel.MEDIUM: "yellow",
        RiskLevel.HIGH: "orange",
        RiskLevel.VERY_HIGH: "red",
    },
    Palette.COLOUR_BLIND: {
        RiskLevel.LOW: "blue",
        RiskLevel.MEDIUM: "light-blue",
        RiskLevel.HIGH: "light-orange",
        RiskLevel.VERY_HIGH: "orange",
    },
}


def _default_thresholds() -> dict[RiskCategory, tuple[float, float, float]]:
    # More vulnerable profiles get componentwise lower thresholds.
    return {
        RiskCategory.LOW: (0.25, 0.50, 0.75),
        RiskCategory.MODERATE: (0.15, 0.35, 0.60),
        RiskCategory.HIGH: (0.10, 0.25, 0.45),
    }


@dataclass(frozen=True)
class ThresholdTable:
    thresholds: dict[RiskCategory, tuple[float, float, float]] = field(
        default_factory=_default_thresholds
    )

    def __post_init__(self):
        for category in RiskCategory:
            if category not in self.thresholds:
                raise ValueError(f"missing thresholds for {category.value} profile")
            t1, t2, t3 = self.thresholds[category]
            if not 0.0 < t1 < t2 < t3 < 1.0:
                raise ValueError(f"thresholds for {category.value} must be strictly increasing in (0, 1)")
        for vulnerable, safer in ((RiskCategory.HIGH, RiskCategory.MODERATE), (RiskCategory.MODERATE, RiskCategory.LOW)):
            if any(a > b for a, b in zip(self.thresholds[vulnerable], self.thresholds[safer])):
                raise ValueError("more vulnerable profiles need componentwise lower thresholds")


def risk_level(
    score: float, profile: RiskProfile, table: ThresholdTable = ThresholdTable()
) -> RiskLevel:
    """Map a score in [0, 1] to the four-level scale for the user profile."""
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    t1, t2, t3 = table.thresholds[profile.category]
    if score < t1:
        return RiskLevel.LOW
    if score < t2:
        return RiskLevel.MEDIUM
    if score < t3:
        return RiskLevel.HIGH
    return RiskLevel.VERY_HIGH


def level_colour(level: RiskLevel, palette: Palette = Palette.STANDARD) -> str:
    return PALETTE_COLOURS[palette][level]


def level_rank(level: RiskLevel) -> int:
    return _LEVEL_ORDER.index(level)


def format_score(score: float) -> str:
    """Scores are reported at 4 decimal places."""
    return f"{score:.4f}"


def lambda_grid() -> list[float]:
    """Shipped decay-constant candidates spanning [5e-5, 5e-4].

    Steps of 1e-4 starting at 1e-4, plus the lower endpoint, so the grid
    covers the searched range and contains the default 1e-4.
    """
    return [5e-5, 1e-4, 2e-4, 3e-4, 4e-4, 5e-4]


def select_lambda(candidates: Sequence[float], objective: Callable[[float], float]) -> float:
    """Pick the candidate maximizing the objective; first candidate wins ties."""
    if not candidates:
        raise ValueError("candidate list is empty")
    lo, hi = LAMBDA_RANGE
    for lam in candidates:
        if not lo <= lam <= hi:
            raise ValueError(f"candidate {lam} outside searched range [{lo}, {hi}]")
    best_lam = candidates[0]
    best_score = objective(best_lam)
    for lam in candidates[1:]:
        score = objective(lam)
        if score > best_score:
            best_lam, best_score = lam, score
    return best_lam
