import json
import os

import pytest

from niwrs.cli import main, parse_args

RUN = ["run", "--k", "3", "--steps", "20", "--reps", "3", "--pilot", "5", "--threads", "1"]


def test_run_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "res.csv"
    assert main(RUN + ["--out", str(out), "--raw", str(tmp_path / "raw.csv")]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "rule,step,mean_cost,stderr" and len(lines) == 1 + 3 * 20
    manifest = json.loads((tmp_path / "res.manifest.json").read_text())
    assert manifest["config"]["problem"]["k"] == 3
    assert manifest["aborted_replications"] == 0
    assert (tmp_path / "raw.csv").read_text().startswith("rule,replication,step,cost")
    assert "final mean cost" in capsys.readouterr().out


def test_manifest_rerun_is_byte_identical(tmp_path):
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert main(RUN + ["--seed", "4", "--out", str(first)]) == 0
    assert main(["run", "--manifest", str(tmp_path / "a.manifest.json"), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_figure(tmp_path):
    out = tmp_path / "res.csv"
    assert main(RUN + ["--out", str(out), "--figure"]) == 0
    assert (tmp_path / "res.png").read_bytes()[:4] == b"\x89PNG"


def test_bad_rho_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--rho", "1.5", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2
    assert "rho" in capsys.readouterr().err


def test_empirical_needs_data(tmp_path):
    with pytest.raises(SystemExit) as exc:
        parse_args(["run", "--problem", "empirical", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_unknown_rule(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--rules", "kl,bisect", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0, reason="root ignores permissions")
def test_unwritable_output_readonly_dir(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    assert main(RUN + ["--out", str(ro / "x.csv")]) == 1


def test_output_is_directory(tmp_path):
    assert main(RUN + ["--out", str(tmp_path)]) == 1


def test_unwritable_output_missing_dir(tmp_path, capsys):
    assert main(RUN + ["--out", str(tmp_path / "nope" / "x.csv")]) == 1
    assert "cannot write" in capsys.readouterr().err


def test_empirical_run(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("a,b,c\n" + "\n".join(f"{i % 3},{i % 5},{(i * 7) % 4}" for i in range(30)) + "\n")
    out = tmp_path / "e.csv"
    assert main(["run", "--problem", "empirical", "--data", str(data), "--steps", "10", "--reps", "2",
                 "--pilot", "4", "--threads", "1", "--out", str(out)]) == 0
    assert out.exists()


def test_describe(capsys):
    assert main(["describe", "--k", "3", "--rho", "0.5"]) == 0
    text = capsys.readouterr().out
    assert "K: 3" in text and "alt3: 1.000000" in text and "best: alt3" in text


def test_describe_borehole(capsys):
    assert main(["describe", "--problem", "borehole"]) == 0
    assert "K: 30" in capsys.readouterr().out


def test_verify_small(capsys):
    code = main(["verify", "--draws", "20000", "--seed", "3"])
    text = capsys.readouterr().out
    assert code == 0 and text.count("PASS") == 5


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert "0.1.0" in capsys.readouterr().out
