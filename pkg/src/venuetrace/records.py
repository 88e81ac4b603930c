"""Canonical data model: venue taxonomy, questionnaire record, validation,
one-hot feature encoding and privacy timestamp coarsening."""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone
from enum import Enum

import numpy as np

MINUTES_PER_DAY = 1440
WINDOW_MINUTES = 240  # six 4-hour bins per day

_EPOCH = date(1970, 1, 1)


class IndoorClass(Enum):
    ALWAYS_INDOOR = "always_indoor"
    INDOOR_OR_OUTDOOR = "indoor_or_outdoor"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class VenueType:
    code: int
    name: str
    indoor_class: IndoorClass


_ALWAYS_INDOOR = {1, 2, 3, 5, 6, 8, 9, 10, 11, 12, 14, 16, 18}
_INDOOR_OR_OUTDOOR = {7, 13, 15, 17, 19}

_VENUE_NAMES = {
    1: "Accommodation",
    2: "Childcare",
    3: "Education",
    4: "Events and conference space",
    5: "Finance and professional service",
    6: "Medical facility",
    7: "Non-residential institution",
    8: "Office location and workspace",
    9: "Personal care",
    10: "Place of worship",
    11: "Private event",
    12: "Recreation and leisure",
    13: "Rental / hire locations",
    14: "Residential care",
    15: "Restaurant, cafe, pub or bar",
    16: "Retail shops",
    17: "Sports and fitness facilities",
    18: "Transport",
    19: "Other",
}


def _indoor_class(code: int) -> IndoorClass:
    if code in _ALWAYS_INDOOR:
        return IndoorClass.ALWAYS_INDOOR
    if code in _INDOOR_OR_OUTDOOR:
        return IndoorClass.INDOOR_OR_OUTDOOR
    return IndoorClass.UNCLASSIFIED


VENUE_TYPES: dict[int, VenueType] = {
    code: VenueType(code, name, _indoor_class(code)) for code, name in _VENUE_NAMES.items()
}

# Venue codes where the surface-cleaning question applies.
CLEANING_VENUES = {1, 4, 5, 8, 10, 15, 17, 18}


class Setting(Enum):
    INDOOR = "Indoor"
    OUTDOOR = "Outdoor"


class PeoplePresent(Enum):
    NONE = "0"
    ONE_TO_FIVE = "1-5"
    FIVE_TO_TEN = "5-10"
    ELEVEN_PLUS = "11+"


class TimeSpent(Enum):
    MIN_5 = "5"
    MIN_10 = "10"
    MIN_15 = "15"
    MIN_20 = "20"
    MIN_30 = "30"
    MIN_45 = "45"
    HOUR_1 = "1h"
    HOUR_2 = "2h"
    OVER_2H = "2h+"


class YesNo(Enum):
    YES = "Yes"
    NO = "No"


class YesNoNA(Enum):
    YES = "Yes"
    NO = "No"
    NA = "NA"


class CleanedAfterUse(Enum):
    YES = "Yes"
    NO = "No"
    OFTEN = "Often"
    NA = "NA"


class PartySize(Enum):
    JUST_ME = "Just me"
    TWO = "2"
    TWO_TO_FOUR = "2-4"
    FOUR_PLUS = "4+"


class Airflow(Enum):
    WELL_VENTILATED = "Well ventilated"
    MECHANICAL_ONLY = "Mechanical only"
    UNKNOWN_CIRCULATION = "Unknown circulation"
    CONFINED = "Confined"


class Temperature(Enum):
    WARM = "Warm"
    NORMAL = "Normal"
    COLD = "Cold"


class Humidity(Enum):
    SAME_AS_OUTSIDE = "Same as outside"
    DRYER = "Dryer"
    MORE_HUMID = "More humid"


class Outcome(Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"


class RiskCategory(Enum):
    HIGH = "High"
    MODERATE = "Moderate"
    LOW = "Low"


@dataclass(frozen=True)
class RiskProfile:
    category: RiskCategory


def derive_risk_profile(high_gate: YesNo, moderate_gate: YesNo) -> RiskProfile:
    """Collapse the two vulnerability gate answers into a risk category."""
    if high_gate is YesNo.YES:
        return RiskProfile(RiskCategory.HIGH)
    if moderate_gate is YesNo.YES:
        return RiskProfile(RiskCategory.MODERATE)
    return RiskProfile(RiskCategory.LOW)


@dataclass(frozen=True)
class ExposureRecord:
    """One venue check-in with its questionnaire answers and outcome.

    ``timestamp`` is minutes since epoch; coarsening happens only at the
    research-query boundary, never in storage.
    """

    timestamp: int
    user_id: str
    location_type: VenueType
    indoor: Setting
    people_present: PeoplePresent
    time_spent: TimeSpent
    masks_worn: YesNo
    staff_ppe_correct: YesNoNA
    people_ppe_correct: YesNoNA
    social_distancing: YesNo
    additional_measures: YesNo
    party_size: PartySize
    all_household: YesNo
    all_support_bubble: YesNoNA
    airflow_quality: Airflow
    temperature: Temperature
    humidity: Humidity
    cleaned_after_use: CleanedAfterUse
    contact_between_members: YesNoNA
    physical_activity: YesNoNA
    led_to_contamination: Outcome
    risk_of_contamination: float | None = None


def validate_record(record: ExposureRecord) -> list[str]:
    """Return every violated record invariant; an empty list means valid."""
    violations = []
    if record.timestamp < 0:
        violations.append("timestamp must be non-negative minutes since epoch")
    if not record.user_id:
        violations.append("user_id must be non-empty")
    if record.location_type.code not in VENUE_TYPES:
        violations.append(f"unknown venue type code {record.location_type.code}")
    if (
        record.location_type.indoor_class is IndoorClass.ALWAYS_INDOOR
        and record.indoor is not Setting.INDOOR
    ):
        violations.append(
            f"venue type {record.location_type.code} is indoor-only; setting forced indoor"
        )
    applicable = record.location_type.code in CLEANING_VENUES
    if applicable and record.cleaned_after_use is CleanedAfterUse.NA:
        violations.append("cleaning question applies to this venue; answer required")
    if not applicable and record.cleaned_after_use is not CleanedAfterUse.NA:
        violations.append("cleaning question not applicable to this venue")
    outdoor = record.indoor is Setting.OUTDOOR
    if outdoor and record.contact_between_members is YesNoNA.NA:
        violations.append("contact question applies outdoors; answer required")
    if not outdoor and record.contact_between_members is not YesNoNA.NA:
        violations.append("contact question only applies outdoors")
    if outdoor and record.physical_activity is YesNoNA.NA:
        violations.append("physical activity question applies outdoors; answer required")
    if not outdoor and record.physical_activity is not YesNoNA.NA:
        violations.append("physical activity question only applies outdoors")
    if record.all_household is YesNo.NO and record.all_support_bubble is YesNoNA.NA:
        violations.append("support bubble question applies when not all household")
    if record.all_household is YesNo.YES and record.all_support_bubble is not YesNoNA.NA:
        violations.append("support bubble question only applies when not all household")
    risk = record.risk_of_contamination
    if risk is not None and not (0.0 <= risk <= 1.0):
        violations.append("risk_of_contamination must be within [0, 1]")
    return violations


# -- one-hot feature encoding -------------------------------------------

# Ordered schema of the encoded categorical groups: (record attribute,
# serialized field name, level strings). Timestamp, user id and both
# outcome fields are deliberately excluded.
FEATURE_SCHEMA: tuple[tuple[str, str, tuple[str, ...]], ...] = (
    ("location_type", "Location_Type", tuple(str(c) for c in range(1, 20))),
    ("indoor", "Location_Inside_or_Outside", tuple(v.value for v in Setting)),
    ("people_present", "Number_of_People_Present", tuple(v.value for v in PeoplePresent)),
    ("time_spent", "Time_Spent_on_Location", tuple(v.value for v in TimeSpent)),
    ("masks_worn", "Wearing_Masks", tuple(v.value for v in YesNo)),
    ("staff_ppe_correct", "Staff_Properly_Wearing_PPE", tuple(v.value for v in YesNoNA)),
    ("people_ppe_correct", "People_Properly_Wearing_PPE", tuple(v.value for v in YesNoNA)),
    ("social_distancing", "Social_Distancing", tuple(v.value for v in YesNo)),
    ("additional_measures", "Additional_Measures_in_Place", tuple(v.value for v in YesNo)),
    ("party_size", "Number_of_People_in_the_Party", tuple(v.value for v in PartySize)),
    ("all_household", "All_Members_of_Household", tuple(v.value for v in YesNo)),
    ("all_support_bubble", "All_Members_of_Support_Bubble", tuple(v.value for v in YesNoNA)),
    ("airflow_quality", "Quality_of_the_Airflow", tuple(v.value for v in Airflow)),
    ("temperature", "Temperature_in_Venue", tuple(v.value for v in Temperature)),
    ("humidity", "Humidity_in_Venue", tuple(v.value for v in Humidity)),
    ("cleaned_after_use", "Clean_after_Every_Usage", tuple(v.value for v in CleanedAfterUse)),
    ("contact_between_members", "Any_Contact_Between_Members", tuple(v.value for v in YesNoNA)),
    ("physical_activity", "Physical_Activity", tuple(v.value for v in YesNoNA)),
)

GROUP_OFFSETS: dict[str, int] = {}
_offset = 0
for _attr, _field, _levels in FEATURE_SCHEMA:
    GROUP_OFFSETS[_attr] = _offset
    _offset += len(_levels)
FEATURE_LENGTH = _offset

LEVEL_INDEX: dict[str, dict[str, int]] = {
    attr: {level: i for i, level in enumerate(levels)} for attr, _field, levels in FEATURE_SCHEMA
}

SCHEMA_LEVELS: dict[str, tuple[str, ...]] = {attr: levels for attr, _field, levels in FEATURE_SCHEMA}


def _level_string(record: ExposureRecord, attr: str) -> str:
    value = getattr(record, attr)
    if attr == "location_type":
        return str(value.code)
    return value.value


def encode_features(record: ExposureRecord) -> np.ndarray:
    """Deterministic one-hot vector over the questionnaire groups.

    Rejects invalid records; identical records always encode identically.
    """
    violations = validate_record(record)
    if violations:
        raise ValueError(f"cannot encode invalid record: {violations}")
    vec = np.zeros(FEATURE_LENGTH, dtype=np.float64)
    for attr, _field, levels in FEATURE_SCHEMA:
        idx = LEVEL_INDEX[attr][_level_string(record, attr)]
        vec[GROUP_OFFSETS[attr] + idx] = 1.0
    return vec


def decode_features(vec: np.ndarray) -> dict[str, str]:
    """Recover the serialized level of every encoded group from a one-hot vector."""
    if vec.shape != (FEATURE_LENGTH,):
        raise ValueError(f"expected vector of length {FEATURE_LENGTH}, got {vec.shape}")
    decoded = {}
    for attr, field, levels in FEATURE_SCHEMA:
        group = vec[GROUP_OFFSETS[attr] : GROUP_OFFSETS[attr] + len(levels)]
        hot = np.flatnonzero(group == 1.0)
        if hot.size != 1:
            raise ValueError(f"group {field} is not one-hot")
        decoded[field] = levels[int(hot[0])]
    return decoded


def encode_level_columns(columns: dict[str, np.ndarray]) -> np.ndarray:
    """Build the (n, FEATURE_LENGTH) one-hot matrix from integer level columns.

    ``columns`` maps each schema attribute to an int array of level indices;
    the bulk path used by the dataset pipeline, consistent with
    :func:`encode_features` by construction.
    """
    n = len(next(iter(columns.values())))
    matrix = np.zeros((n, FEATURE_LENGTH), dtype=np.uint8)
    rows = np.arange(n)
    for attr, _field, levels in FEATURE_SCHEMA:
        col = columns[attr]
        if col.min() < 0 or col.max() >= len(levels):
            raise ValueError(f"level index out of range for group {attr}")
        matrix[rows, GROUP_OFFSETS[attr] + col] = 1.0
    return matrix


# -- timestamp coarsening ------------------------------------------------

WINDOW_LABELS = ("0-4", "4-8", "8-12", "12-16", "16-20", "20-24")


@dataclass(frozen=True)
class CoarseWindow:
    day: date
    window: int  # 0..5, half-open 4-hour bins

    @property
    def label(self) -> str:
        return WINDOW_LABELS[self.window]

    def as_dict(self) -> dict[str, str]:
        return {"date": self.day.isoformat(), "window": self.label}


def coarsen_timestamp(t: int) -> CoarseWindow:
    """Map a minute timestamp to its calendar day and 4-hour bin (half-open)."""
    if t < 0:
        raise ValueError("timestamp must be non-negative")
    day = _EPOCH + timedelta(days=t // MINUTES_PER_DAY)
    return CoarseWindow(day=day, window=(t % MINUTES_PER_DAY) // WINDOW_MINUTES)


def window_bounds(day: date, window: int) -> tuple[int, int]:
    """Minute range [from, to) covered by a coarse window."""
    if not 0 <= window <= 5:
        raise ValueError("window index must be within 0..5")
    start = (day - _EPOCH).days * MINUTES_PER_DAY + window * WINDOW_MINUTES
    return start, start + WINDOW_MINUTES


def minutes_to_iso(t: int) -> str:
    """Render a minute timestamp as ISO-8601 at minute resolution (UTC)."""
    dt = datetime.fromtimestamp(t * 60, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%MZ")


def iso_to_minutes(text: str) -> int:
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%MZ").replace(tzinfo=timezone.utc)
    return int(dt.timestamp()) // 60


# -- canonical flat serialization ---------------------------------------

FIELD_NAMES = (
    "TIMESTAMP",
    "UserID",
    "Location_Type",
    "Location_Inside_or_Outside",
    "Number_of_People_Present",
    "Time_Spent_on_Location",
    "Wearing_Masks",
    "Staff_Properly_Wearing_PPE",
    "People_Properly_Wearing_PPE",
    "Social_Distancing",
    "Additional_Measures_in_Place",
    "Number_of_People_in_the_Party",
    "All_Members_of_Household",
    "All_Members_of_Support_Bubble",
    "Quality_of_the_Airflow",
    "Temperature_in_Venue",
    "Humidity_in_Venue",
    "Clean_after_Every_Usage",
    "Any_Contact_Between_Members",
    "Physical_Activity",
    "Exposure_Led_to_Contamination",
    "Risk_of_Contamination",
)

_ENUM_FIELDS: dict[str, tuple[str, type]] = {
    "Location_Inside_or_Outside": ("indoor", Setting),
    "Number_of_People_Present": ("people_present", PeoplePresent),
    "Time_Spent_on_Location": ("time_spent", TimeSpent),
    "Wearing_Masks": ("masks_worn", YesNo),
    "Staff_Properly_Wearing_PPE": ("staff_ppe_correct", YesNoNA),
    "People_Properly_Wearing_PPE": ("people_ppe_correct", YesNoNA),
    "Social_Distancing": ("social_distancing", YesNo),
    "Additional_Measures_in_Place": ("additional_measures", YesNo),
    "Number_of_People_in_the_Party": ("party_size", PartySize),
    "All_Members_of_Household": ("all_household", YesNo),
    "All_Members_of_Support_Bubble": ("all_support_bubble", YesNoNA),
    "Quality_of_the_Airflow": ("airflow_quality", Airflow),
    "Temperature_in_Venue": ("temperature", Temperature),
    "Humidity_in_Venue": ("humidity", Humidity),
    "Clean_after_Every_Usage": ("cleaned_after_use", CleanedAfterUse),
    "Any_Contact_Between_Members": ("contact_between_members", YesNoNA),
    "Physical_Activity": ("physical_activity", YesNoNA),
    "Exposure_Led_to_Contamination": ("led_to_contamination", Outcome),
}


ATTR_ENUMS: dict[str, type] = {attr: enum_cls for attr, enum_cls in _ENUM_FIELDS.values()}


def record_to_flat(record: ExposureRecord) -> dict[str, str]:
    """Serialize as flat key/value text using the canonical field names."""
    flat = {
        "TIMESTAMP": minutes_to_iso(record.timestamp),
        "UserID": record.user_id,
        "Location_Type": str(record.location_type.code),
    }
    for field, (attr, _enum) in _ENUM_FIELDS.items():
        flat[field] = getattr(record, attr).value
    risk = record.risk_of_contamination
    flat["Risk_of_Contamination"] = "" if risk is None else f"{risk:.6f}"
    return flat


def record_from_flat(flat: dict[str, str]) -> ExposureRecord:
    """Parse the flat serialization back into a record; raises on bad values."""
    code = int(flat["Location_Type"])
    if code not in VENUE_TYPES:
        raise ValueError(f"unknown venue type code {code}")
    kwargs = {
        "timestamp": iso_to_minutes(flat["TIMESTAMP"]),
        "user_id": flat["UserID"],
        "location_type": VENUE_TYPES[code],
    }
    for field, (attr, enum_cls) in _ENUM_FIELDS.items():
        try:
            kwargs[attr] = enum_cls(flat[field])
        except ValueError:
            raise ValueError(f"{field}: {flat[field]!r} is not a valid answer") from None
    risk_text = flat.get("Risk_of_Contamination", "")
    kwargs["risk_of_contamination"] = float(risk_text) if risk_text else None
    return ExposureRecord(**kwargs)


def force_conditional_answers(record: ExposureRecord) -> ExposureRecord:
    """Normalize conditional questions to NA where they do not apply."""
    fixes: dict[str, object] = {}
    if record.location_type.indoor_class is IndoorClass.ALWAYS_INDOOR:
        fixes["indoor"] = Setting.INDOOR
    indoor = fixes.get("indoor", record.indoor)
    if record.location_type.code not in CLEANING_VENUES:
        fixes["cleaned_after_use"] = CleanedAfterUse.NA
    if indoor is not Setting.OUTDOOR:
        fixes["contact_between_members"] = YesNoNA.NA
        fixes["physical_activity"] = YesNoNA.NA
    if record.all_household is YesNo.YES:
        fixes["all_support_bubble"] = YesNoNA.NA
    return replace(record, **fixes) if fixes else record
