import csv
import io

import pytest

from teamcontracts.experiments import (
    SUITES,
    hidden_team_checks,
    run_experiment,
    run_suite,
    summary_rows,
)


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_suite_rows_pass(suite):
    rows = run_suite(suite, 3, seed=5)
    assert [r["trial"] for r in rows] == [0, 1, 2]
    assert all(r["passed"] for r in rows)


def test_trials_independent_of_count():
    few = run_suite("gap", 2, seed=1)
    many = run_suite("gap", 4, seed=1)
    assert many[:2] == few


def test_workers_do_not_change_output():
    assert run_experiment("doubling", 4, 2, workers=1) == run_experiment("doubling", 4, 2, workers=2)


def test_summary_rows():
    rows = [{"trial": 0, "seed": 1, "x": 1.0, "passed": True},
            {"trial": 1, "seed": 2, "x": 3.0, "passed": False}]
    lo, med = summary_rows(rows, ["trial", "seed", "x", "passed"])
    assert (lo["x"], med["x"]) == (1.0, 2.0)
    assert lo["passed"] == 1
    assert summary_rows([], ["x"]) == []


def test_csv_layout():
    text = run_experiment("ratio", 2, 0)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][:3] == ["suite", "trial", "seed"]
    assert rows[-1][1] == "summary-median"
    assert {r[0] for r in rows[1:]} == {"ratio"}


def test_hidden_team_checks_k4():
    row = hidden_team_checks(4, 8, 0, prices=5)
    assert row["passed"]
    assert row["g_team"] > row["g_team_bound"]


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("bogus", 1)
