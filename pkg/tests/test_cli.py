import csv
import json
import math

import numpy as np
import pytest
import yaml

from circuit_dmrg.cli import main
from circuit_dmrg.config import ConfigError, RunConfig, load_config, parse_override, validate
from circuit_dmrg.exact import evolve
from circuit_dmrg.mps import read_checkpoint_header
from circuit_dmrg.sampling import read_samples

BASE = {
    "circuit": {"family": "sequence_I", "n_b": 2, "n_c": 4, "staggered": False, "depth": 6},
    "grouping": "V1",
    "chi": [2, 16],
    "K": 2,
    "n_s": 2,
    "seeds": {"circuit": 1, "init": 0, "sampler": 3},
    "oracle": True,
}


@pytest.fixture
def cfg_file(tmp_path):
    def write(**changes):
        doc = {**BASE, **changes}
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump(doc))
        return path
    return write


def test_open_run_writes_csv_and_json(cfg_file, tmp_path, capsys):
    path = cfg_file(outputs={"traces": str(tmp_path / "tr.csv"), "checkpoint": str(tmp_path / "m.npz")})
    out_csv, out_json = tmp_path / "r.csv", tmp_path / "r.json"
    assert main(["run", str(path), "--csv", str(out_csv), "--json", str(out_json)]) == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert list(rows[0]) == ["circuit_id", "mode", "chi", "K", "n_s", "grouping", "D", "N_2g",
                             "F", "F_tilde", "F_B", "eps", "eps_tilde"]
    assert [r["chi"] for r in rows] == ["2", "16"]
    exact = rows[1]
    assert float(exact["F"]) == pytest.approx(1) and float(exact["F_tilde"]) == pytest.approx(1)
    assert float(rows[0]["F_tilde"]) <= 1
    doc = json.loads(out_json.read_text())
    assert doc["schema_version"] == 1 and len(doc["results"]) == 2
    assert list(csv.DictReader((tmp_path / "tr.csv").open()))[0].keys() >= {"step", "sweep", "f"}
    assert read_checkpoint_header(tmp_path / "m.npz")["extra"]["chi"] == 16
    assert "F_tilde" in capsys.readouterr().out


def test_csv_appends_across_runs(cfg_file, tmp_path):
    path = cfg_file(chi=4)
    out_csv = tmp_path / "r.csv"
    for _ in range(2):
        assert main(["run", str(path), "--csv", str(out_csv)]) == 0
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("circuit_id")


def test_overrides(cfg_file, tmp_path):
    path = cfg_file()
    out_json = tmp_path / "r.json"
    assert main(["run", str(path), "--set", "chi=3", "--set", "circuit.depth=4",
                 "--json", str(out_json)]) == 0
    res = json.loads(out_json.read_text())["results"]
    assert [r["chi"] for r in res] == [3] and res[0]["D"] == 4


def test_compare_sweep(cfg_file, tmp_path):
    path = cfg_file(chi=4)
    out_json = tmp_path / "r.json"
    assert main(["compare", str(path), "--json", str(out_json)]) == 0
    rows = json.loads(out_json.read_text())["results"]
    assert [r["D"] for r in rows] == [0, 2, 4, 6]
    assert rows[0]["F_B"] == 2 ** 8 - 1
    for r in rows:
        assert r["sqrt_F"] == pytest.approx(math.sqrt(r["F"]))


def test_closed_mode_with_checkpoint_reuse(cfg_file, tmp_path):
    ck = tmp_path / "fwd.npz"
    path = cfg_file(mode="closed", chi=[16], bitstrings=["00000000", 7],
                    outputs={"checkpoint": str(ck)})
    out_json = tmp_path / "r.json"
    assert main(["run", str(path), "--json", str(out_json)]) == 0
    first = json.loads(out_json.read_text())
    assert read_checkpoint_header(ck)["extra"]["kind"] == "closed-forward"
    assert main(["run", str(path), "--json", str(out_json)]) == 0
    second = json.loads(out_json.read_text())
    c = RunConfig.from_dict({**BASE}).build_circuit()
    psi = evolve(c).amplitudes
    assert len(first["amplitudes"]) == 2
    for a, b in zip(first["amplitudes"], second["amplitudes"]):
        amp = complex(a["amplitude"]["re"], a["amplitude"]["im"])
        assert amp == pytest.approx(psi[int(a["bitstring"], 2)], abs=1e-10)
        assert a["amplitude"] == pytest.approx(b["amplitude"])
    assert first["results"][0]["F"] == pytest.approx(1)
    assert second["results"][0]["F"] is None


def test_sample_command(cfg_file, tmp_path):
    out = tmp_path / "s.txt"
    path = cfg_file(sampling={"method": "conditional", "n_samples": 500}, outputs={"samples": str(out)})
    assert main(["sample", str(path)]) == 0
    samples, header = read_samples(out)
    assert len(samples) == 500 and header["method"] == "conditional"
    path = cfg_file(sampling={"method": "metropolis", "n_samples": 200, "L": 2},
                    outputs={"samples": str(out)})
    assert main(["sample", str(path)]) == 0
    samples, header = read_samples(out)
    assert len(samples) == 200 and 0 < float(header["acceptance"]) <= 1


def test_validate_reports_every_problem(cfg_file, capsys):
    path = cfg_file(grouping="V7", chi=0, D1=1, D2=1, D3=1, extra_key=1)
    assert main(["validate", str(path)]) == 1
    err = capsys.readouterr().err
    assert "unknown grouping 'V7'" in err and "V1" in err
    assert "chi must be" in err
    assert "must cover the circuit exactly" in err
    assert "unknown keys ['extra_key']" in err


def test_validate_ok(cfg_file, capsys):
    assert main(["validate", str(cfg_file())]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_missing_config_is_config_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.yaml")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_runtime_error_names_module(cfg_file, capsys):
    path = cfg_file(max_qubits=4)
    assert main(["run", str(path)]) == 2
    assert "runtime error in circuit_dmrg" in capsys.readouterr().err


def test_seeds_must_be_explicit_ints():
    problems = validate({**BASE, "seeds": {"circuit": "random"}})
    assert any("explicit integers" in p for p in problems)


def test_parse_override():
    assert parse_override("circuit.depth=12") == (["circuit", "depth"], 12)
    assert parse_override("chi=[4, 8]") == (["chi"], [4, 8])
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_load_config_applies_overrides(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(BASE))
    doc = load_config(p, ["K=1", "seeds.init=9"])
    assert doc["K"] == 1 and doc["seeds"]["init"] == 9


def test_workers_give_same_rows(cfg_file, tmp_path):
    path = cfg_file(oracle=False)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", str(path), "--json", str(a)]) == 0
    assert main(["run", str(path), "--json", str(b), "--workers", "2"]) == 0
    ra, rb = (json.loads(p.read_text())["results"] for p in (a, b))
    assert [r["F_tilde"] for r in ra] == [r["F_tilde"] for r in rb]


def test_sequence_III_config_builds():
    cfg = RunConfig.from_dict({"circuit": {"family": "sequence_III", "n_qubits": 8, "edge_prob": 0.4,
                                           "compile": True, "n_b": 2, "n_c": 4,
                                           "staggered": False},
                               "chi": 4, "seeds": {"circuit": 2}})
    c = cfg.build_circuit()
    assert c.n_qubits == 8 and c.meta["family"] == "sequence_III"
    assert np.isclose(evolve(c).norm2(), 1)
