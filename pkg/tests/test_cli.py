import json

import pytest

from vlir.cli import main

SOURCE = {"kind": "iid", "K": 2, "symbols": {"0": 0.75, "1": 0.25}}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_quantities_table(tmp_path, capsys):
    cfg = write(tmp_path, {"source": SOURCE, "eps": 0.3, "tau": [0.0], "n": [1, 2]})
    code, out, _ = run(["quantities", "--config", cfg], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,tau,g_upper_per_n,g_lower_per_n,h_quantile"
    assert lines[2].startswith("2,0.0,inf,")


def test_quantities_delta_zero_is_entropy(tmp_path, capsys):
    cfg = write(tmp_path, {"source": {"kind": "iid", "symbols": {"0": 0.5, "1": 0.5}},
                           "n": [3], "tau": [0.0]})
    code, out, _ = run(["quantities", "--config", cfg], capsys)
    row = out.splitlines()[1].split(",")
    assert code == 0 and float(row[2]) == pytest.approx(1.0) and float(row[3]) == pytest.approx(1.0)


def test_quantities_deterministic_and_parallel(tmp_path, capsys):
    cfg = write(tmp_path, {"source": SOURCE, "eps": 0.05, "tau": [0.0, 0.1], "n": [1, 3, 6]})
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["quantities", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["quantities", "--config", cfg, "--out", str(out2), "--jobs", "2"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert b"\r" not in out1.read_bytes()


def test_capacity_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, {"source": SOURCE, "eps": 0.3, "n": [20], "g_lower_mode": "exact"})
    code, _, err = run(["quantities", "--config", cfg], capsys)
    assert code == 3 and "capacity" in err


def test_config_errors(tmp_path, capsys):
    assert run(["quantities", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["quantities", "--config", str(bad)], capsys)[0] == 2
    cfg = write(tmp_path, {"source": SOURCE, "eps": 0.6, "tau": [0.5]})
    assert run(["quantities", "--config", cfg], capsys)[0] == 2
    cfg = write(tmp_path, {"source": SOURCE, "n": []})
    assert run(["quantities", "--config", cfg], capsys)[0] == 2
    cfg = write(tmp_path, {"source": SOURCE, "colour": "blue"})
    assert run(["quantities", "--config", cfg], capsys)[0] == 2


def test_overrides(tmp_path, capsys):
    cfg = write(tmp_path, {"source": SOURCE, "n": [1]})
    code, out, _ = run(["quantities", "--config", cfg, "--set", "n=[1,2]", "--set", "eps=0.1"],
                       capsys)
    assert code == 0 and len(out.splitlines()) == 3


def test_construct_holds(tmp_path, capsys):
    maps = tmp_path / "maps.json"
    cfg = write(tmp_path, {"source": {"kind": "iid", "symbols": {"0": 0.7, "1": 0.3}},
                           "eps": 0.1, "tau": [0.0], "n": [16], "gamma": 0.25,
                           "map_out": str(maps)})
    code, out, _ = run(["construct", "--config", cfg], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["holds"] is True
    assert rep["reports"][0]["holds"] == [True, True]
    assert set(rep["reports"][0]) >= {"measured_d_bar", "distance_bound",
                                      "measured_mean_length", "length_bound", "holds"}
    assert "n=16,tau=0.0" in json.loads(maps.read_text())


def test_construct_single_atom(tmp_path, capsys):
    cfg = write(tmp_path, {"source": {"kind": "iid", "symbols": {"0": 1.0}}, "eps": 0.1,
                           "n": [4], "gamma": 0.25})
    code, out, _ = run(["construct", "--config", cfg], capsys)
    rep = json.loads(out)["reports"][0]
    assert code == 0 and rep["measured_d_bar"] == 0.0 and rep["measured_mean_length"] == 0.0


def test_construct_threshold_error(tmp_path, capsys):
    cfg = write(tmp_path, {"source": SOURCE, "eps": 0.1, "n": [2], "gamma": 0.25})
    code, _, err = run(["construct", "--config", cfg], capsys)
    assert code == 2 and "minimal n is 3" in err


SMALL_VERIFY = {"verify": {"closed_form": {"n_dists": 20}, "sampler": {"n_dists": 5, "trials": 200},
                           "restricted": {"n_dists": 5},
                           "converse": {"supports": [1, 2], "dists_per_support": 1,
                                        "random_maps": 100},
                           "packing": {"n_instances": 10}}}


def test_verify(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_VERIFY)
    code, out, _ = run(["verify", "--config", cfg, "--seed", "4"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["agreed"] and rep["seed"] == 4
    assert all(r["trials"] > 0 for r in rep["reports"])


def test_verify_corrupted(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_VERIFY)
    code, out, _ = run(["verify", "--config", cfg, "--corrupt-closed-form"], capsys)
    assert code == 1 and not json.loads(out)["agreed"]


def test_second_order(tmp_path, capsys):
    fair = {"kind": "iid", "symbols": {"0": 0.5, "1": 0.5}}
    cfg = write(tmp_path, {"source": fair, "n": [1, 4, 9], "R": 1.0})
    code, out, _ = run(["second-order", "--config", cfg], capsys)
    assert code == 0
    assert [float(r.split(",")[2]) for r in out.splitlines()[1:]] == pytest.approx([0, 0, 0],
                                                                                   abs=1e-12)
    cfg = write(tmp_path, {"source": SOURCE, "eps": 0.3, "n": [2], "R": 0.5})
    assert run(["second-order", "--config", cfg], capsys)[1].splitlines()[1] == "2,0.0,inf"


def test_duality(tmp_path, capsys):
    cfg = write(tmp_path, {"source": SOURCE, "eps": 0.1, "n": [1, 2]})
    code, out, _ = run(["duality", "--config", cfg], capsys)
    assert code == 0 and out.splitlines()[0] == "n,tau,g_lower_per_n,g_upper_per_n"


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "vlir", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "quantities" in res.stdout
