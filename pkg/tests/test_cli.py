import json
import subprocess
import sys

import pytest

from fiid_forest import __version__
from fiid_forest.cli import main


def run(args, tmp_path, name="r.csv"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out.read_text()


def test_header_and_config_echo(tmp_path):
    code, text = run(["mtp-check", "--seeds", "2"], tmp_path)
    assert code == 0
    head = text.splitlines()[0]
    assert head.startswith(f"# fiid-forest v{__version__} config=")
    cfg = json.loads(head.split("config=", 1)[1])
    assert cfg["command"] == "mtp-check" and cfg["seeds"] == 2


def test_rows_name_their_invariant(tmp_path):
    _, text = run(["build-tree", "--side", "8", "--seeds", "2"], tmp_path)
    lines = text.splitlines()
    assert lines[1].startswith("invariant,")
    names = {ln.split(",")[0] for ln in lines[2:]}
    assert {"stage_connectivity", "spanning_tree", "recursive_bound", "closure_edges"} <= names


@pytest.mark.parametrize(
    "args",
    [
        ["build-tree", "--side", "16", "--seeds", "2"],
        ["distance-profile", "--side", "32", "--seeds", "3"],
        ["trunk-demo", "--side", "16", "--seeds", "2", "--max-stage", "2"],
        ["mtp-check", "--seeds", "2"],
        ["verify-lemma2", "--max-intervals", "3", "--top", "6"],
    ],
)
def test_reruns_are_identical(tmp_path, args):
    c1, a = run(args, tmp_path, "a.csv")
    c2, b = run(args, tmp_path, "b.csv")
    assert c1 == c2 == 0
    assert a == b


def test_verify_lemma2_summary(tmp_path, capsys):
    code, _ = run(["verify-lemma2", "--max-intervals", "3", "--top", "6"], tmp_path)
    assert code == 0
    assert "failures: 0" in capsys.readouterr().out


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    assert main(["build-tree", "--side", "7", "--out", str(tmp_path / "x.csv")]) != 0
    err = capsys.readouterr().err
    assert "usage" in err and "invalid substrate" in err
    assert not (tmp_path / "x.csv").exists()
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code != 0


def test_env_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FIID_FOREST_OUT", str(tmp_path / "reports"))
    assert main(["mtp-check", "--seeds", "1"]) == 0
    assert (tmp_path / "reports" / "mtp-check.csv").exists()


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    r = subprocess.run(
        [sys.executable, "-m", "fiid_forest", "mtp-check", "--seeds", "1", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0, r.stderr
    assert out.read_text().startswith("# fiid-forest")


def test_violation_names_invariant(tmp_path, capsys, monkeypatch):
    import fiid_forest.cli as cli

    real = cli.is_spanning_tree
    monkeypatch.setattr(cli, "is_spanning_tree", lambda w, m: False)
    code = main(["build-tree", "--side", "8", "--out", str(tmp_path / "v.csv")])
    monkeypatch.setattr(cli, "is_spanning_tree", real)
    assert code == 1
    assert "invariant violated: spanning_tree" in capsys.readouterr().err
