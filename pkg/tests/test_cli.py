import csv
import io
import json
import subprocess
import sys

import pytest

from radiofs.cli import main
from radiofs.dataset import write_csv
from radiofs.synthetic import demo_cohorts


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    train, test = demo_cohorts(0)
    write_csv(train, root / "train.csv")
    write_csv(test, root / "test.csv")
    (root / "sweep.cfg").write_text("train_csv = train.csv\ntest_csv = test.csv\n"
                                    "k_list = 2, 4\nclassifiers = nb\n")
    return root


def test_run_json(workspace, capsys):
    out = workspace / "report.json"
    assert main(["run", "--config", str(workspace / "sweep.cfg"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["entries"]) == 4
    assert capsys.readouterr().out == ""


def test_run_csv_to_stdout(workspace, capsys):
    assert main(["run", "--config", str(workspace / "sweep.cfg"), "--format", "csv"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 5


def test_seed_override(workspace, capsys):
    main(["run", "--config", str(workspace / "sweep.cfg"), "--seed", "5"])
    assert json.loads(capsys.readouterr().out)["config"]["seed"] == 5


def test_rank(workspace, capsys):
    assert main(["rank", "--train", str(workspace / "train.csv"), "--family", "supervised"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "rank,feature,fisher,relieff,nca,average"
    assert {lines[1].split(",")[1], lines[2].split(",")[1]} == {"feature_00", "feature_01"}


def test_rank_to_file_without_filter(workspace):
    out = workspace / "ranking.csv"
    assert main(["rank", "--train", str(workspace / "train.csv"), "--family", "unsupervised",
                 "--no-filter", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 41


def test_missing_config(workspace, capsys):
    assert main(["run", "--config", str(workspace / "absent.cfg")]) == 1
    assert capsys.readouterr().err.startswith("radiofs: error [config]")


def test_bad_config_value(workspace, capsys):
    cfg = workspace / "bad.cfg"
    cfg.write_text("k_list = 4, 2\n")
    assert main(["run", "--config", str(cfg)]) == 1
    assert "[config]" in capsys.readouterr().err


def test_missing_training_file(workspace, capsys):
    assert main(["rank", "--train", str(workspace / "nope.csv"), "--family", "supervised"]) == 1
    assert "[load]" in capsys.readouterr().err


def test_module_entry_point(workspace):
    proc = subprocess.run([sys.executable, "-m", "radiofs", "run", "--config",
                           str(workspace / "absent.cfg")], capture_output=True, text=True)
    assert proc.returncode == 1
    assert "[config]" in proc.stderr
