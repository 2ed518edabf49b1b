import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from teamcontracts.cli import main
from teamcontracts.instances import (
    example_one,
    hidden_team_instance,
    max_singleton_gap_instance,
    random_coverage_instance,
    uniform_additive_instance,
)
from teamcontracts.io import (
    InstanceFormatError,
    dumps_instance,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    loads_instance,
)


def _same(a, b):
    assert (a.n, a.owner, a.costs, a.r) == (b.n, b.owner, b.costs, b.r)
    assert np.allclose(a.reward.table(), b.reward.table(), atol=0, rtol=0)


@pytest.mark.parametrize("make", [
    example_one,
    lambda: hidden_team_instance(4, 8, seed=1),
    lambda: uniform_additive_instance(3),
    lambda: max_singleton_gap_instance(4),
])
def test_round_trip(make):
    inst = make()
    back = loads_instance(dumps_instance(inst))
    _same(inst, back)
    assert dumps_instance(back) == dumps_instance(inst)


@given(seed=st.integers(0, 2 ** 31 - 1))
def test_round_trip_coverage(seed):
    inst = random_coverage_instance(2, 2, 8, seed)
    _same(inst, loads_instance(dumps_instance(inst)))


def test_bad_documents():
    doc = instance_to_dict(example_one())
    with pytest.raises(InstanceFormatError):
        loads_instance("{not json")
    bad = json.loads(json.dumps(doc))
    bad["agents"][0]["id"] = 5
    with pytest.raises(InstanceFormatError):
        instance_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    bad["agents"][1]["actions"][0]["id"] = 0
    with pytest.raises(InstanceFormatError):
        instance_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    bad["reward"] = {"kind": "cubic"}
    with pytest.raises(InstanceFormatError):
        instance_from_dict(bad)
    bad = json.loads(json.dumps(doc))
    bad["agents"][0]["actions"][0]["cost"] = -1
    with pytest.raises(InstanceFormatError):
        instance_from_dict(bad)


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def ex1_file(tmp_path):
    p = tmp_path / "ex1.json"
    p.write_text(dumps_instance(example_one()))
    return str(p)


def test_cli_gen_and_solve(capsys, tmp_path, ex1_file):
    code, out, _ = _run(capsys, "solve", ex1_file, "--verify")
    assert code == 0
    doc = json.loads(out)
    assert doc["verified"] is True
    assert doc["optimum"] == pytest.approx(0.64)
    assert doc["worst_equilibrium_utility"] >= doc["lambda"] - 1e-9


def test_cli_exact(capsys, ex1_file):
    code, out, _ = _run(capsys, "exact", ex1_file)
    assert code == 0
    doc = json.loads(out)
    assert doc["profile"] == [1, 2]
    assert doc["utility"] == pytest.approx(0.64)


def test_cli_exact_single_agent(capsys, tmp_path):
    p = tmp_path / "ms.json"
    assert main(["gen", "max-singleton", "--m", "4", "--out", str(p)]) == 0
    code, out, _ = _run(capsys, "exact", str(p))
    assert code == 0
    doc = json.loads(out)
    assert [c["alpha"] for c in doc["critical_points"]] == pytest.approx([0, .5, .75, .875, .9375])


def test_cli_fptas(capsys, tmp_path):
    p = tmp_path / "ms.json"
    main(["gen", "max-singleton", "--m", "4", "--out", str(p)])
    code, out, _ = _run(capsys, "solve", str(p), "--algorithm", "fptas", "--verify")
    assert code == 0 and json.loads(out)["verified"]


def test_cli_equilibria(capsys, ex1_file):
    code, out, _ = _run(capsys, "equilibria", ex1_file, "--alpha", "0.32", "0.04")
    assert code == 0
    profiles = [e["profile"] for e in json.loads(out)["equilibria"]]
    assert sorted(profiles) == [[0], [1, 2], [2]]


def test_exit_codes(capsys, tmp_path, ex1_file):
    bad = tmp_path / "bad.json"
    bad.write_text('{"agents": []}')
    assert _run(capsys, "solve", str(bad))[0] == 2
    assert _run(capsys, "solve", str(tmp_path / "missing.json"))[0] == 2
    assert _run(capsys, "solve", ex1_file, "--eps", "0.5")[0] == 3
    assert _run(capsys, "solve", ex1_file, "--algorithm", "fptas")[0] == 3
    assert _run(capsys, "gen", "hidden-team", "--k", "3", "--m", "8")[0] == 3
    assert _run(capsys, "equilibria", ex1_file, "--alpha", "0.2")[0] == 3
    assert _run(capsys, "--tolerance", "0", "exact", ex1_file)[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["gen", "nonexistent-family"])
    assert exc.value.code == 3
    big = tmp_path / "big.json"
    big.write_text(dumps_instance(hidden_team_instance(4, 18, seed=0)))
    assert _run(capsys, "exact", str(big))[0] == 5


def test_gen_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["gen", "coverage", "--n", "3", "--seed", "11", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert load_instance(a).m == 6


def test_experiment_csv(capsys, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["experiment", "--suite", "doubling", "--trials", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("suite,trial,seed")
    assert len(lines) == 1 + 3 + 2
    assert _run(capsys, "experiment", "--suite", "doubling", "--trials", "-1")[0] == 3
