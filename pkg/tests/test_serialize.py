import json

import pytest

from energytt.errors import ModelError
from energytt.fitting import generate_oracle_samples
from energytt.serialize import (dumps_events, dumps_instance, dumps_timetable, fits_from_dict,
                                fits_to_dict, loads_events, loads_instance, loads_timetable,
                                samples_from_dict, samples_to_dict)


def test_instance_round_trip(small_case):
    text = dumps_instance(small_case.instance)
    back = loads_instance(text)
    assert back == small_case.instance
    assert dumps_instance(back) == text


def test_timetable_round_trip_is_exact(small_case):
    text = dumps_timetable(small_case.baseline, small_case.instance)
    assert loads_timetable(text) == small_case.baseline
    assert text.splitlines()[0] == "train,platform,arrival_s,departure_s"


def test_events_round_trip(small_case):
    assert loads_events(dumps_events(small_case.events)) == small_case.events


def test_samples_and_fits_round_trip(small_case):
    s = generate_oracle_samples(small_case.instance, small_case.baseline, small_case.flat[:5])
    d = samples_to_dict(s)
    assert samples_to_dict(samples_from_dict(json.loads(json.dumps(d)))) == d
    f = fits_to_dict(small_case.fits)
    back = fits_from_dict(json.loads(json.dumps(f)))
    assert back == small_case.fits


def test_bad_inputs_rejected(small_case):
    with pytest.raises(ModelError):
        loads_timetable("train,stop,a,d\n")
    with pytest.raises(ModelError):
        loads_events("a,b\n")
    d = json.loads(dumps_instance(small_case.instance))
    d["schema_version"] = 99
    with pytest.raises(ModelError):
        loads_instance(json.dumps(d))
