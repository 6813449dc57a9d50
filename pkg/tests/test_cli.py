import json
import math

import pytest

from confspace.cli import EXIT_NUMERIC, EXIT_OK, EXIT_SUITE, EXIT_USAGE, main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    return {
        "a": write(tmp_path / "a.json", {"dim": 1, "points": [[0.0], [3.0]]}),
        "b": write(tmp_path / "b.json", {"dim": 1, "points": [[1.0], [2.0]]}),
        "one": write(tmp_path / "one.json", {"dim": 1, "points": [[0.0]]}),
        "lg": write(tmp_path / "lg.json", {"dim": 1, "points": [[0.5], [1.5]]}),
        "dir": tmp_path,
    }


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dist(capsys, files):
    code, out, _ = run(capsys, "dist", files["a"], files["a"])
    assert code == EXIT_OK and json.loads(out)["distance"] == 0
    code, out, _ = run(capsys, "dist", files["a"], files["one"])
    assert json.loads(out)["distance"] == "inf"
    code, out, _ = run(capsys, "dist", files["a"], files["b"])
    assert json.loads(out)["distance"] == pytest.approx(math.sqrt(2))


def test_localdist(capsys, files):
    _, big, _ = run(capsys, "localdist", files["a"], files["b"], "--radius", "100")
    _, full, _ = run(capsys, "dist", files["a"], files["b"])
    assert json.loads(big)["distance"] == pytest.approx(json.loads(full)["distance"], abs=1e-12)
    _, out, _ = run(capsys, "localdist", files["one"], files["a"], "--radius", "5")
    assert json.loads(out)["distance"] == "inf"
    _, out, _ = run(capsys, "localdist", files["lg"], files["one"], "--radius", "2")
    assert json.loads(out)["distance"] == pytest.approx(math.sqrt(0.5))


def test_geodesic(capsys, files, tmp_path):
    src = write(tmp_path / "s.json", {"dim": 1, "points": [[0.0]]})
    dst = write(tmp_path / "d.json", {"dim": 1, "points": [[2.0]]})
    _, out, _ = run(capsys, "geodesic", src, dst, "--times", "0,0.5,1")
    frames = json.loads(out)["configurations"]
    assert frames[0]["points"] == [[0.0]] and frames[1]["points"] == [[1.0]]
    assert frames[2]["points"] == [[2.0]]
    code, _, err = run(capsys, "geodesic", files["a"], files["one"])
    assert code == EXIT_NUMERIC and "cardinalities" in err


def test_csv_output(capsys, files):
    code, out, _ = run(capsys, "dist", files["a"], files["b"], "--format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "gamma_index,omega_index,distance" and len(lines) == 3


def test_sample_reproducible_with_manifest(capsys, tmp_path):
    spec = write(tmp_path / "spec.json", {
        "dim": 2, "window": [[0, 1], [0, 1]], "z": 3,
        "potential": {"kind": "hardcore", "radius": 0.15},
        "seed": 11, "steps": 3000, "burn_in": 500, "thin": 50})
    out1, out2 = tmp_path / "c1.jsonl", tmp_path / "c2.jsonl"
    assert main(["sample", spec, "--out", str(out1)]) == EXIT_OK
    assert main(["sample", spec, "--out", str(out2)]) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert len(lines) == 50
    for line in lines:
        pts = json.loads(line)["points"]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                assert math.dist(pts[i], pts[j]) >= 0.15
    manifest = json.loads((tmp_path / "c1.jsonl.manifest.json").read_text())
    assert manifest["command"] == "sample" and manifest["seed"] == 11
    assert manifest["inputs"] == [spec]


def test_sample_zero_potential_moments(capsys, tmp_path):
    spec = write(tmp_path / "spec.json", {
        "dim": 1, "window": [[0, 2]], "z": 1, "potential": {"kind": "zero"},
        "sampler": "poisson", "n_samples": 4000, "seed": 1})
    out = tmp_path / "p.jsonl"
    assert main(["sample", spec, "--out", str(out)]) == EXIT_OK
    counts = [len(json.loads(line)["points"]) for line in out.read_text().splitlines()]
    assert abs(sum(counts) / len(counts) - 2.0) <= 3 * math.sqrt(2.0 / 4000)


def test_energy(capsys, tmp_path):
    spec = write(tmp_path / "spec.json", {
        "dim": 1, "window": [[0, 2]], "z": 1, "potential": {"kind": "hardcore", "radius": 0.2}})
    cfg = write(tmp_path / "c.json", {"dim": 1, "points": [[0.5], [0.6]]})
    code, out, _ = run(capsys, "energy", cfg, "--spec", spec)
    assert code == EXIT_OK and json.loads(out)["energy"] == "inf"


def test_intrinsic_and_ergodic_csv(capsys, files):
    code, out, _ = run(capsys, "intrinsic", files["a"], files["b"], "--radii", "1,2,10",
                       "--c", "5", "--format", "csv")
    assert code == EXIT_OK and out.splitlines()[0] == "r,value,audited_lipschitz"
    code, out, _ = run(capsys, "ergodic", "--sizes", "2,4", "--replications", "2",
                       "--format", "csv")
    assert code == EXIT_OK and len(out.strip().splitlines()) == 3


def test_usage_errors(capsys, files, tmp_path):
    assert run(capsys, "bogus")[0] == EXIT_USAGE
    assert run(capsys, "dist", str(tmp_path / "missing.json"), files["a"])[0] == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "dist", str(bad), files["a"])[0] == EXIT_USAGE
    assert run(capsys, "verify", "nope")[0] == EXIT_USAGE
    assert run(capsys, "localdist", files["a"], files["b"])[0] == EXIT_USAGE


def test_verify_suite_exit_codes(capsys, monkeypatch):
    from confspace import verify

    code, out, _ = run(capsys, "verify", "metric")
    report = json.loads(out)
    assert code == EXIT_OK and report["passed"]
    failing = verify.CheckResult("X", "forced failure", False)
    monkeypatch.setitem(verify.SUITES, "metric", (lambda seed=0: failing,))
    assert run(capsys, "verify", "metric")[0] == EXIT_SUITE
