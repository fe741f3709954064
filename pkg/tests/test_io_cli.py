import csv
import json

import numpy as np
import pytest

from ccqid import io
from ccqid.cli import EXIT_BUDGET, EXIT_INVARIANT, EXIT_OK, EXIT_PARSE, EXIT_SAMPLING, main
from ccqid.coding import id_error_1, transmission_as_id_code
from ccqid.linalg import matrix_to_json
from ccqid.randomness import make_rng, random_channel, random_code
from ccqid.regions import compute_region
from ccqid.transforms import concatenate, transformator_build


@pytest.fixture
def files(tmp_path, noiseless, perfect_code):
    ch, code = tmp_path / "noiseless.json", tmp_path / "perfect.json"
    io.write_json(ch, io.channel_to_json(noiseless))
    io.save_code(code, perfect_code)
    outer = tmp_path / "outer.json"
    io.save_code(outer, concatenate(perfect_code, perfect_code, noiseless))
    return {"channel": ch, "code": code, "outer": outer, "dir": tmp_path}


def test_channel_roundtrip(tmp_path):
    w = random_channel(make_rng(0), 2, 3, 2)
    path = tmp_path / "w.json"
    io.write_json(path, io.channel_to_json(w))
    back = io.load_channel(path)
    assert back.x_alphabet == w.x_alphabet and back.y_alphabet == w.y_alphabet
    assert np.array_equal(back.base, w.base)
    text = path.read_text()
    assert '"schema": 1' in text and '"0,2"' in text


def test_code_roundtrips(tmp_path, noiseless, perfect_code):
    w = random_channel(make_rng(1), 2, 2, 2)
    code = random_code(make_rng(2), w, 2, 3, failure=True)
    io.save_code(tmp_path / "c.json", code)
    back = io.load_code(tmp_path / "c.json")
    assert back.codewords_x == code.codewords_x
    assert np.array_equal(back.decoders, code.decoders) and np.array_equal(back.failure, code.failure)
    res = transformator_build(perfect_code, perfect_code, 2, 3, rng_seed=5)
    io.save_code(tmp_path / "id.json", res.id_code)
    idc = io.load_code(tmp_path / "id.json")
    assert np.array_equal(idc.identifiers, res.id_code.identifiers)
    assert idc.structure.subsets_a == res.structure.subsets_a
    assert idc.structure.refinement.labels == res.structure.refinement.labels
    assert id_error_1(idc, extend2(noiseless)) == id_error_1(res.id_code, extend2(noiseless))
    plain = transmission_as_id_code(perfect_code)
    plain.structure = None
    io.save_code(tmp_path / "plain.json", plain)
    assert io.load_code(tmp_path / "plain.json").structure is None


def extend2(w):
    from ccqid.channels import extend_memoryless

    return extend_memoryless(w, 2)


def test_parse_errors(tmp_path, noiseless):
    data = io.channel_to_json(noiseless)
    bad = tmp_path / "bad.json"
    for mutate in (lambda d: d.update(schema=2), lambda d: d["outputs"].pop("0,1"),
                   lambda d: d.update(kind="id"), lambda d: d["outputs"].update({"0,9": d["outputs"]["0,0"]})):
        d = json.loads(json.dumps(data))
        mutate(d)
        bad.write_text(json.dumps(d))
        with pytest.raises(io.ParseError):
            io.load_channel(bad)
    bad.write_text("{not json")
    with pytest.raises(io.ParseError):
        io.read_json(bad)
    with pytest.raises(io.ParseError):
        io.read_json(tmp_path / "missing.json")


def test_region_files(tmp_path, noiseless):
    region = compute_region(noiseless, resolution=0.25)
    io.write_region_csv(tmp_path / "r.csv", region)
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert list(rows[0]) == ["kind", "k", "p1", "p2", "b1", "b2", "b3", "frontier"]
    assert sum(int(r["frontier"]) for r in rows) == len(region.frontier)
    data = io.region_to_json(region)
    assert data["frontier"][0]["bounds"] == pytest.approx([1, 1, 2])


# -- CLI ------------------------------------------------------------------------------


def test_validate(files, capsys, noiseless):
    assert main(["validate", str(files["channel"])]) == EXIT_OK
    data = io.channel_to_json(noiseless)
    data["outputs"]["0,0"] = matrix_to_json(np.diag([0.9, 0, 0, 0]))
    bad = files["dir"] / "trace.json"
    io.write_json(bad, data)
    capsys.readouterr()
    assert main(["validate", str(bad)]) == EXIT_INVARIANT
    assert "unit trace" in capsys.readouterr().err
    data["outputs"]["0,0"] = matrix_to_json(np.array([[0.5, 0.3, 0, 0], [0.1, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]))
    io.write_json(bad, data)
    assert main(["validate", str(bad)]) == EXIT_INVARIANT
    assert "hermitian" in capsys.readouterr().err.lower()
    (files["dir"] / "junk.json").write_text("[1, 2")
    assert main(["validate", str(files["dir"] / "junk.json")]) == EXIT_PARSE


def test_eval_code(files, capsys):
    report = files["dir"] / "rep.json"
    assert main(["eval-code", str(files["channel"]), str(files["code"]), "--extract", "1",
                 "--report", str(report)]) == EXIT_OK
    rep = json.loads(report.read_text())
    assert rep["kind"] == "run_report" and rep["exit_code"] == 0 and rep["schema"] == 1
    assert rep["results"]["avg_error"] == 0.0 and rep["results"]["extraction"]["lambda"] == 0.0
    assert rep["passed"]["lambda_le_2eps"] is True
    assert set(rep["inputs"]) == {str(files["channel"]), str(files["code"])}
    assert main(["eval-code", str(files["channel"]), str(files["code"]), "--k", "2"]) == EXIT_INVARIANT


def test_build_id_is_byte_identical(files):
    outs = []
    for run in ("a", "b"):
        d = files["dir"] / run
        assert main(["build-id", str(files["channel"]), str(files["outer"]), str(files["code"]),
                     "--m", "3", "--n", "3", "--seed", "7", "--lambda", "0.9", "--out-dir", str(d)]) == EXIT_OK
        outs.append(((d / "id_code.json").read_bytes(), (d / "overlaps.json").read_bytes()))
    assert outs[0] == outs[1]
    idc = io.load_code(files["dir"] / "a" / "id_code.json")
    assert (idc.M, idc.N, idc.k) == (3, 3, 3)
    ov = json.loads((files["dir"] / "a" / "overlaps.json").read_text())
    assert ov["verify"]["ok"] is True and ov["seed"] == 7


def test_build_id_exhaustion(files, capsys):
    code = main(["build-id", str(files["channel"]), str(files["code"]), str(files["code"]),
                 "--m", "4", "--n", "2", "--seed", "1", "--lambda", "0.3", "--max-attempts", "4",
                 "--out-dir", str(files["dir"] / "x")])
    assert code == EXIT_SAMPLING
    assert "union bound" in capsys.readouterr().err


def test_region_command(files, capsys):
    prefix = files["dir"] / "out" / "rk"
    rep = files["dir"] / "region.json"
    assert main(["region", str(files["channel"]), "--resolution", "0.1", "--out", str(prefix),
                 "--containment", "--report", str(rep)]) == EXIT_OK
    r = json.loads(rep.read_text())
    assert abs(r["results"]["max_sum"] - 2) <= 0.01
    assert r["passed"]["containment"] is True
    assert (prefix.with_suffix(".csv")).exists() and (prefix.with_suffix(".json")).exists()
    assert main(["region", str(files["channel"]), "--tol", "grid_budget=10", "--out", str(prefix)]) == EXIT_BUDGET


def test_bad_tolerance_is_a_parse_error(files):
    assert main(["validate", str(files["channel"]), "--tol", "nonsense=1"]) == EXIT_PARSE
    assert main(["validate", str(files["channel"]), "--tol", "psd=abc"]) == EXIT_PARSE


def test_tolerance_override_is_echoed_and_restored(files):
    from ccqid.config import get_tolerances

    before = get_tolerances()
    rep = files["dir"] / "v.json"
    assert main(["validate", str(files["channel"]), "--tol", "psd=1e-7", "--report", str(rep)]) == EXIT_OK
    data = json.loads(rep.read_text())
    assert data["config"]["tolerance_overrides"] == {"psd": "1e-7"}
    assert data["results"]["tolerances"]["psd"] == 1e-7
    assert get_tolerances() == before


def test_check_command(files, capsys):
    rep = files["dir"] / "check.json"
    assert main(["check", "--suite", "d1", "--seed", "3", "--count", "20", "--report", str(rep)]) == EXIT_OK
    assert json.loads(rep.read_text())["passed"] == {"d1": True}
    assert main(["check", str(files["channel"]), "--suite", "subadd", "--seed", "3", "--count", "4"]) == EXIT_OK
