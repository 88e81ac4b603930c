"""Cross-silo queries: investigator contact search and research aggregates.

The investigator path returns pseudonymous user ids only; the research path
returns suppressed counts with every timestamp coarsened to a 4-hour bin.
Neither ever emits a (user id, venue id, minute timestamp) triple.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

from venuetrace.ledger import SiloDeployment
from venuetrace.records import (
    FIELD_NAMES,
    LEVEL_INDEX,
    SCHEMA_LEVELS,
    coarsen_timestamp,
    window_bounds,
)

DEFAULT_K_MIN = 5

_PROHIBITED_GROUPS = {"TIMESTAMP", "UserID", "Risk_of_Contamination"}

_ATTR_BY_FIELD = {
    "Location_Type": "location_type",
    "Location_Inside_or_Outside": "indoor",
    "Number_of_People_Present": "people_present",
    "Time_Spent_on_Location": "time_spent",
    "Wearing_Masks": "masks_worn",
    "Staff_Properly_Wearing_PPE": "staff_ppe_correct",
    "People_Properly_Wearing_PPE": "people_ppe_correct",
    "Social_Distancing": "social_distancing",
    "Additional_Measures_in_Place": "additional_measures",
    "Number_of_People_in_the_Party": "party_size",
    "All_Members_of_Household": "all_household",
    "All_Members_of_Support_Bubble": "all_support_bubble",
    "Quality_of_the_Airflow": "airflow_quality",
    "Temperature_in_Venue": "temperature",
    "Humidity_in_Venue": "humidity",
    "Clean_after_Every_Usage": "cleaned_after_use",
    "Any_Contact_Between_Members": "contact_between_members",
    "Physical_Activity": "physical_activity",
    "Exposure_Led_to_Contamination": "led_to_contamination",
}


class UnknownVenue(LookupError):
    pass


class InvalidGroupField(ValueError):
    pass


@dataclass(frozen=True)
class ContactQuery:
    venue_id: str
    day: date | None = None
    window: int | None = None  # 0..5 coarse bin
    start: int | None = None  # explicit minute range [start, stop)
    stop: int | None = None

    def bounds(self) -> tuple[int, int]:
        if self.start is not None and self.stop is not None:
            if self.start >= self.stop:
                raise ValueError("query window is empty")
            return self.start, self.stop
        if self.day is None or self.window is None:
            raise ValueError("query needs either a day+window or an explicit range")
        return window_bounds(self.day, self.window)


@dataclass(frozen=True)
class SearchResult:
    user_ids: tuple[str, ...]
    empty_window: bool  # venue known, nothing in the window


def search_contacts(deployment: SiloDeployment, query: ContactQuery) -> SearchResult:
    """Distinct user ids that scanned the venue inside the window.

    Routes to the venue's silo; the result is independent of the silo count
    and equals a brute-force scan over all silos.
    """
    start, stop = query.bounds()
    silo_id = deployment.silo_for(query.venue_id)
    venue_scans = [
        e
        for e in deployment.entries(silo_id)
        if e.payload.get("kind") == "scan" and e.payload.get("venue_id") == query.venue_id
    ]
    if not venue_scans:
        raise UnknownVenue(f"no scans ever recorded for venue {query.venue_id!r}")
    seen: dict[str, None] = {}
    for entry in venue_scans:
        if start <= entry.payload["t"] < stop:
            seen.setdefault(entry.payload["user_id"])
    return SearchResult(tuple(seen), empty_window=not seen)


@dataclass(frozen=True)
class AggregateQuery:
    group_by: str  # one canonical categorical field name
    filters: tuple[tuple[str, str], ...] = ()
    outcome_split: bool = False


def _questionnaire_records(deployment: SiloDeployment) -> list[dict]:
    """Latest committed questionnaire per handle (submissions are last-write-wins)."""
    latest: dict[str, dict] = {}
    for entry in deployment.all_entries():
        if entry.payload.get("kind") == "questionnaire":
            latest[entry.payload["handle"]] = entry.payload
    return list(latest.values())


def _validate_field(field: str) -> None:
    if field in _PROHIBITED_GROUPS or field not in FIELD_NAMES:
        raise InvalidGroupField(f"{field!r} is not a queryable categorical field")


def research_aggregate(
    deployment: SiloDeployment, query: AggregateQuery, k_min: int = DEFAULT_K_MIN
) -> list[dict]:
    """Counts per (level, 4-hour window); small cells suppressed.

    Output rows carry only the grouped level, the coarse window and the
    count, never identifiers or minute-resolution times.
    """
    _validate_field(query.group_by)
    for field, level in query.filters:
        _validate_field(field)
        attr = _ATTR_BY_FIELD[field]
        if attr in SCHEMA_LEVELS and level not in LEVEL_INDEX[attr]:
            raise InvalidGroupField(f"{level!r} is not a level of {field}")
    counts: dict[tuple, int] = {}
    for record in _questionnaire_records(deployment):
        answers = record["answers"]
        if any(answers.get(field) != level for field, level in query.filters):
            continue
        window = coarsen_timestamp(record["t"])
        key = [answers.get(query.group_by, ""), window.day.isoformat(), window.label]
        if query.outcome_split:
            key.append(answers.get("Exposure_Led_to_Contamination", "Unknown"))
        counts[tuple(key)] = counts.get(tuple(key), 0) + 1
    rows = []
    for key in sorted(counts):
        if counts[key] < k_min:
            continue  # suppression floor
        row = {"level": key[0], "date": key[1], "window": key[2], "count": counts[key]}
        if query.outcome_split:
            row["outcome"] = key[3]
        rows.append(row)
    return rows
