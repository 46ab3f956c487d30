import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimosum.errors import ConfigurationError
from bimosum.series import ChangeConfig, Normal
from bimosum.studies import (
    Cell,
    Scenario,
    StudySpec,
    level_cells,
    match_estimates,
    run_level_study,
    run_performance_study,
    run_quantile_sweep,
    run_study,
    thin,
    window_sweep,
)


def test_window_sweep():
    assert window_sweep(0) == (10, 30, 50, 70, 90, 110)
    assert window_sweep(4) == (50, 70, 90, 110, 130, 150)


def test_thin():
    assert thin(range(11), 3) == [0, 5, 10]
    assert thin([1, 2], 5) == [1, 2]


def test_match_nearest_first():
    assert match_estimates([248, 260], [250]) == {250: 248}
    # one estimate between two truths goes to the nearer one
    assert match_estimates([452], [440, 470]) == {440: 452}
    assert match_estimates([452, 445], [440, 470]) == {440: 445, 470: 452}
    assert match_estimates([300], [250], radius=25) == {}
    assert match_estimates([], [250]) == {}


@settings(max_examples=100, deadline=None)
@given(
    est=st.lists(st.integers(0, 1000), max_size=8, unique=True),
    truth=st.lists(st.integers(0, 1000), max_size=4, unique=True),
    radius=st.integers(1, 60),
)
def test_property_matching_is_order_free(est, truth, radius):
    a = match_estimates(est, truth, radius)
    b = match_estimates(est[::-1], truth[::-1], radius)
    assert a == b
    assert len(set(a.values())) == len(a)
    assert all(abs(a[c] - c) <= radius for c in a)


def test_spec_validation():
    cell = level_cells([Normal(0, 1)], (50,), T=300)[0]
    with pytest.raises(ConfigurationError):
        StudySpec(Scenario.LEVEL_GRID, (cell,), replicas=49)
    with pytest.raises(ConfigurationError):
        StudySpec(Scenario.LEVEL_GRID, (cell,), match_radius=0)
    cp = Cell("x", (50,), ChangeConfig(300, (150,), (Normal(0, 1), Normal(1, 1))))
    with pytest.raises(ConfigurationError):
        StudySpec(Scenario.LEVEL_GRID, (cp,))
    with pytest.raises(ConfigurationError):
        StudySpec.from_dict({"scenario": "nope", "cells": []})


def _tiny_level():
    cells = level_cells([Normal(0, 1), Normal(5, 2)], (30, 60), T=300)
    return StudySpec(Scenario.LEVEL_GRID, cells, replicas=60, seed=3, q_replicas=2000)


def test_level_study_reproducible():
    spec = _tiny_level()
    a = run_level_study(spec)
    b = run_level_study(StudySpec.from_dict(json.loads(json.dumps(spec.to_dict()))))
    assert a.to_json() == b.to_json()
    row = a.cells[0]
    assert row["replicas"] == 60 and 0 <= row["f_R"] <= 1
    assert a.pooled["replicas"] == 120
    rows = list(csv.DictReader(io.StringIO(a.to_csv())))
    assert len(rows) == 2 and rows[0]["cell"] == "cell0"


def test_performance_counts_add_up():
    cfg = ChangeConfig(600, (200, 400), (Normal(0, 1), Normal(3, 1), Normal(3, 3)))
    spec = StudySpec(Scenario.PERFORMANCE, (Cell("p", (50,), cfg),), replicas=50, seed=1, q_replicas=2000)
    rep = run_performance_study(spec)
    row = rep.cells[0]
    assert row["correct_total"] + row["incorrect"] == row["total"]
    assert set(row["correct"]) == {"200", "400"}
    assert row["correct_rate"]["200"] > 0.9


def test_zero_effect_with_labels():
    cfg = ChangeConfig(1000, (), (Normal(0, 1),))
    cell = Cell("null", (100,), cfg, labels=(500,))
    spec = StudySpec(Scenario.PERFORMANCE, (cell,), replicas=100, seed=2, q_replicas=5000)
    row = run_performance_study(spec).cells[0]
    # only chance detections can be "correct"; they are bounded by the rejections
    assert row["correct"]["500"] <= row["rejections"] <= 15


def test_quantile_sweep_monotone():
    cells = [Cell("a", (50,), T=1000), Cell("b", (50, 100), T=1000), Cell("c", (50, 100), T=2000)]
    spec = StudySpec(Scenario.QUANTILE_SWEEP, cells, q_replicas=5000)
    rep = run_quantile_sweep(spec)
    Q = [r["Q"] for r in rep.cells]
    assert Q[0] < Q[1] < Q[2]
    assert run_study(spec).to_json() == rep.to_json()


def test_cell_round_trip():
    cfg = ChangeConfig(300, (150,), (Normal(0, 1), Normal(1, 1)))
    c = Cell.from_dict(Cell("x", (20, 40), cfg, labels=(100,), variant="square").to_dict())
    assert c.truth == (100,) and c.windows == (20, 40)
    assert c.variant.value == "square"
