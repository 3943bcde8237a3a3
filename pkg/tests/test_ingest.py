import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasepat import ingest
from phasepat.calibrate import calibrate
from phasepat.errors import InputError
from phasepat.model import ActionPhase, PhaseLibrary
from phasepat.synth import GeneratorSpec, default_specs, generate, inject_outliers
from phasepat.interpret import Motion


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_csv_two_phases(tmp_path):
    rows = ["phase_id,t,v,a,d,dv"]
    for pid in ("p1", "p2"):
        for t in range(3):
            rows.append(f"{pid},{t},{10 + t},0.5,{20 - t},-1")
    lib = ingest.read_library(write(tmp_path / "lib.csv", "\n".join(rows) + "\n"))
    assert lib.ids == ["p1", "p2"]
    assert lib.lengths() == [3, 3]
    assert lib.phases[0].series[0].tolist() == [10, 11, 12]


def test_csv_contiguity_error_names_phase(tmp_path):
    text = "phase_id,t,v,a,d,dv\np1,0,1,0,5,0\np1,1,1,0,5,0\np2,0,1,0,5,0\np2,1,1,0,5,0\np2,3,1,0,5,0\n"
    with pytest.raises(InputError, match=r"lib\.csv:6: phase p2"):
        ingest.read_library(write(tmp_path / "lib.csv", text))


def test_csv_interleaved_rows(tmp_path):
    text = "phase_id,t,v,a,d,dv\np1,0,1,0,5,0\np2,0,1,0,5,0\np1,1,1,0,5,0\n"
    with pytest.raises(InputError, match="not contiguous"):
        ingest.read_library(write(tmp_path / "lib.csv", text))


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty"),
        ("phase_id,t,v,a,d\n", "header"),
        ("phase_id,t,v,a,d,dv\np1,0,x,0,5,0\n", ":2: v is not a number"),
        ("phase_id,t,v,a,d,dv\np1,0,1,0,5\n", ":2: expected 6 fields"),
        ("phase_id,t,v,a,d,dv\np1,0,1,0,5,0\n", "at least 2"),
        ("phase_id,t,v,a,d,dv\np1,0,1,0,nan,0\np1,1,1,0,5,0\n", "non-finite"),
    ],
)
def test_csv_errors(tmp_path, text, fragment):
    with pytest.raises(InputError, match=fragment):
        ingest.read_library(write(tmp_path / "lib.csv", text))


def test_jsonl_single_phase(tmp_path):
    obj = {"id": "a", "sample_period": 0.04, "v": list(range(10)), "a": [0] * 10, "d": [5.5] * 10, "dv": [1] * 10}
    lib = ingest.read_library(write(tmp_path / "lib.jsonl", json.dumps(obj) + "\n"))
    assert len(lib) == 1 and lib.phases[0].length == 10
    assert lib.phases[0].sample_period == 0.04


def test_jsonl_ragged_is_reported(tmp_path):
    obj = {"id": "a", "v": [1, 2, 3], "a": [0, 0, 0], "d": [5, 5], "dv": [0, 0, 0]}
    with pytest.raises(InputError, match="length mismatch"):
        ingest.read_library(write(tmp_path / "lib.jsonl", json.dumps(obj) + "\n"))


def test_jsonl_errors_carry_line(tmp_path):
    good = json.dumps({"id": "a", "v": [1, 2], "a": [0, 0], "d": [5, 5], "dv": [0, 0]})
    with pytest.raises(InputError, match=r"lib\.jsonl:2: invalid JSON"):
        ingest.read_library(write(tmp_path / "lib.jsonl", good + "\n{oops\n"))
    with pytest.raises(InputError, match="missing key"):
        ingest.read_library(write(tmp_path / "lib2.jsonl", '{"id": "a"}\n'))


def test_unknown_suffix(tmp_path):
    with pytest.raises(InputError, match="suffix"):
        ingest.read_library(write(tmp_path / "lib.txt", "x"))


@settings(max_examples=20)
@given(st.integers(0, 2**16), st.sampled_from(["lib.csv", "lib.jsonl"]))
def test_round_trip_is_exact(tmp_path_factory, seed, name):
    lib, _ = generate(default_specs(count=3, seed=seed))
    path = tmp_path_factory.mktemp("rt") / name
    ingest.write_library(lib, path)
    back = ingest.read_library(path, source_tag=lib.source_tag)
    assert back.ids == lib.ids
    assert all(np.array_equal(a.series, b.series) for a, b in zip(lib, back))


def test_awkward_floats_round_trip(tmp_path):
    series = np.array([[0.1, 1 / 3, 1e-300, -2.5e17], [np.pi, -0.0, 5e-324, 7.0], [1, 2, 3, 4], [0, 0, 0, 0]], dtype=float)
    lib = PhaseLibrary((ActionPhase("z", series),))
    ingest.write_library(lib, tmp_path / "z.csv")
    back = ingest.read_library(tmp_path / "z.csv")
    assert np.array_equal(back.phases[0].series, series)


def test_truth_file(tmp_path):
    lib, truth = generate(default_specs(count=2))
    ingest.write_truth(truth, tmp_path / "truth.csv")
    back = ingest.read_truth(tmp_path / "truth.csv")
    assert back[lib.ids[0]] == (truth[lib.ids[0]].motion.value, truth[lib.ids[0]].state.value)


def test_json_handles_infinity():
    text = ingest.dumps({"df": float("inf"), "b": [np.float64(1.5), np.int64(2)]})
    assert json.loads(text) == {"b": [1.5, 2], "df": "Infinity"}


@pytest.fixture(scope="module")
def one_round_run(tmp_path_factory):
    base = np.random.default_rng(0).normal(size=(4, 12))
    lib = PhaseLibrary(tuple(ActionPhase(f"c{i}", base) for i in range(6)))
    report = calibrate(lib)
    out = tmp_path_factory.mktemp("run1")
    return report, out, ingest.write_report(report, out)


def test_one_round_manifest(one_round_run):
    report, out, written = one_round_run
    assert len(report.rounds) == 1
    assert sorted(p.name for p in written) == sorted(
        ["report.json", "assignments.csv", "dendrogram_round1.json", "dsi_round1.csv", "importance_round1.json"]
    )
    assert all(p.exists() for p in written)


def test_empty_unresolved_is_empty_list(one_round_run):
    _, out, _ = one_round_run
    data = json.loads((out / "report.json").read_text())
    assert data["unresolved"] == []
    assert data["rounds"][0]["inter_cluster_df"] == "Infinity"


@pytest.fixture(scope="module")
def two_round_run(tmp_path_factory):
    lib, _ = generate([GeneratorSpec(Motion.CATCH_UP, count=60, seed=1), GeneratorSpec(Motion.KEEP_AWAY, count=60, seed=2)])
    lib, _ = inject_outliers(lib, 5)
    report = calibrate(lib)
    out = tmp_path_factory.mktemp("run2")
    return lib, report, out, ingest.write_report(report, out)


def test_two_round_run_has_dendrograms_for_both_rounds(two_round_run):
    _, report, out, written = two_round_run
    assert len(report.rounds) == 2
    names = {p.name for p in written}
    assert {"dendrogram_round1.json", "dendrogram_round2.json"} <= names
    tree = json.loads((out / "dendrogram_round2.json").read_text())
    assert len(tree["merges"]) == len(tree["leaves"]) - 1
    assert {"left", "right", "height", "size", "node"} == set(tree["merges"][0])


def test_dsi_values_non_negative_and_consistent(two_round_run):
    _, report, out, _ = two_round_run
    rows = list(csv.DictReader(open(out / "dsi_round1.csv", encoding="utf-8")))
    assert rows
    assert all(float(r["dsi"]) >= 0 for r in rows)
    parsed = ingest.read_dsi(out / "dsi_round1.csv")
    flagged = {pid for pid, _, _, _, trig in parsed if trig}
    assert flagged == set(report.rounds[0].re_extracted)
    # a wholesale-accepted round writes only the header
    assert (out / "dsi_round2.csv").read_text().strip() == ",".join(ingest.DSI_HEADER)


def test_assignments_cover_every_phase(two_round_run):
    lib, report, out, _ = two_round_run
    mapping = ingest.read_assignments(out / "assignments.csv")
    assert mapping == report.pattern_of()
    rows = list(csv.DictReader(open(out / "assignments.csv", encoding="utf-8")))
    assert [r["phase_id"] for r in rows] == lib.ids
    outlier = next(r for r in rows if r["phase_id"] == "outlier-00")
    assert outlier["round1"] == "re-extracted" and outlier["round2"] != ""


def test_importance_artifact(two_round_run):
    _, report, out, _ = two_round_run
    data = json.loads((out / "importance_round1.json").read_text())
    assert data["ballots"]["counts"] == report.rounds[0].ballots.counts.tolist()
    assert data["importance"]["IS"] == list(report.rounds[0].importance.scores)
    second = json.loads((out / "importance_round2.json").read_text())
    assert second["importance_defined"] is False


def test_negative_dsi_rejected(tmp_path):
    path = write(tmp_path / "dsi.csv", "phase_id,cluster,variable,dsi,epsilon,triggered\np,0,v,-1,2,0\n")
    with pytest.raises(InputError, match="non-negative"):
        ingest.read_dsi(path)
