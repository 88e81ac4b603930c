from __future__ import annotations

import pytest

from venuetrace.records import (
    VENUE_TYPES,
    Airflow,
    CleanedAfterUse,
    ExposureRecord,
    Humidity,
    Outcome,
    PartySize,
    PeoplePresent,
    Setting,
    Temperature,
    TimeSpent,
    YesNo,
    YesNoNA,
)


def make_record(**overrides) -> ExposureRecord:
    """A valid indoor restaurant check-in; override fields per test."""
    base = dict(
        timestamp=26_736_480,  # 2020-11-01T00:00Z
        user_id="2f305b2f-3e63-4fb6-98ce-0d2a3ba7f168",
        location_type=VENUE_TYPES[15],
        indoor=Setting.INDOOR,
        people_present=PeoplePresent.FIVE_TO_TEN,
        time_spent=TimeSpent.HOUR_1,
        masks_worn=YesNo.NO,
        staff_ppe_correct=YesNoNA.NO,
        people_ppe_correct=YesNoNA.NO,
        social_distancing=YesNo.NO,
        additional_measures=YesNo.NO,
        party_size=PartySize.TWO_TO_FOUR,
        all_household=YesNo.NO,
        all_support_bubble=YesNoNA.NO,
        airflow_quality=Airflow.CONFINED,
        temperature=Temperature.WARM,
        humidity=Humidity.DRYER,
        cleaned_after_use=CleanedAfterUse.NO,
        contact_between_members=YesNoNA.NA,
        physical_activity=YesNoNA.NA,
        led_to_contamination=Outcome.UNKNOWN,
        risk_of_contamination=None,
    )
    base.update(overrides)
    return ExposureRecord(**base)


@pytest.fixture
def restaurant_record() -> ExposureRecord:
    return make_record()
