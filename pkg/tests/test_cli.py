import io
import json

import pytest

from walkbsde.cli import RunConfig, main, parse_config
from walkbsde.errors import WalkBSDEError
from walkbsde.problem import PROBLEMS


def run(argv, tmp_path, capsys=None):
    out = io.StringIO()
    code = main(list(argv) + ["--out", str(tmp_path)], stdout=out)
    return code, out.getvalue()


def test_parse_example_invocation():
    cfg = parse_config("rates --problem holder-g --eps 0.5 --n 16,64,256,1024 "
                       "--time 0.5 --r 1".split())
    assert cfg.command == "rates"
    assert cfg.problem == "holder-g"
    assert cfg.params == {"eps": 0.5}
    assert cfg.n == [16, 64, 256, 1024]
    assert cfg.time == [0.5]
    assert cfg.r == [1.0]


def test_unknown_problem_lists_ids(tmp_path, capsys):
    code, _ = run(["rates", "--problem", "nope"], tmp_path)
    assert code == 2
    err = capsys.readouterr().err
    for pid in PROBLEMS:
        assert pid in err


def test_unknown_config_key_is_named(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "holder-g", "nn": [4]}))
    code, _ = run(["rates", "--config", str(cfg)], tmp_path)
    assert code == 2
    assert "'nn'" in capsys.readouterr().err


def test_malformed_numeric_flag():
    with pytest.raises(SystemExit):
        parse_config(["rates", "--n", "16,abc"])


def test_malformed_config_value(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"M": "lots"}))
    with pytest.raises(WalkBSDEError):
        parse_config(["rates", "--config", str(cfg)])


def test_unstable_step_count_reports_minimum(tmp_path, capsys):
    code, _ = run(["solve", "--problem", "linear", "--lambda", "10", "--n", "2"], tmp_path)
    assert code == 2
    assert "n >= 20" in capsys.readouterr().err


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "linear", "params": {"lambda": 2.0}, "n": [8, 16]}))
    merged = parse_config(["rates", "--config", str(cfg), "--n", "32,64"])
    assert merged.problem == "linear"
    assert merged.params == {"lambda": 2.0}
    assert merged.n == [32, 64]


def test_config_round_trip(tmp_path):
    cfg = parse_config("rates --problem holder-g --eps 0.25 --n 16,64 --M 1000".split())
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.canonical()))
    again = parse_config(["rates", "--config", str(path)])
    assert again.canonical() == cfg.canonical()
    assert again.digest() == cfg.digest()


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("WALKBSDE_OUT", str(tmp_path / "env"))
    cfg = RunConfig("solve", problem="affine")
    assert cfg.run_dir().parent == tmp_path / "env"


def test_list_command(capsys):
    assert main(["list"], stdout=io.StringIO()) == 0


def test_solve_writes_outputs(tmp_path):
    code, text = run(["solve", "--problem", "linear", "--lambda", "1", "--n", "4,8"], tmp_path)
    assert code == 0
    run_dir = next(tmp_path.iterdir())
    lines = (run_dir / "results.csv").read_text().splitlines()
    assert len(lines) == 3
    err4 = float(lines[1].split(",")[5])
    assert err4 == pytest.approx(0.442212, abs=1e-6)
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["passed"] is True


def test_failing_study_exits_one(tmp_path):
    # three tiny step counts sit in the pre-asymptotic regime: the fit is too noisy
    code, text = run(["rates", "--problem", "holder-g", "--eps", "0.5", "--n", "2,3,4",
                      "--targets", "law_Y", "--M", "100000"], tmp_path)
    assert code == 1
    assert text.startswith("FAIL law_Y")


def test_rerun_is_byte_identical(tmp_path):
    argv = ["rates", "--problem", "holder-g", "--eps", "0.5", "--n", "16,64,256",
            "--M", "100000", "--plot"]
    assert run(argv, tmp_path / "a")[0] == 0
    assert run(argv, tmp_path / "b")[0] == 0
    (da,), (db,) = list((tmp_path / "a").iterdir()), list((tmp_path / "b").iterdir())
    assert da.name == db.name
    names = sorted(p.name for p in da.iterdir())
    assert "results.csv" in names and any(n.endswith(".svg") for n in names)
    for name in names:
        assert (da / name).read_bytes() == (db / name).read_bytes()
