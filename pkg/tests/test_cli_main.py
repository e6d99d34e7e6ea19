import pytest

from cli.cache import read_frame_lines
from cli.main import build_parser, main
from segment.io import load_segmentations
from trajcore.dataset import load_dataset


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.strip() == "0.1.0"


def test_grad_check_command(tmp_path):
    out = tmp_path / "grad.jsonl"
    assert main(["grad-check", "--draws", "1", "--targets", "mse", "relu", "--out",
                 str(out), "-q"]) == 0
    table = read_frame_lines(out)
    assert set(table["target"]) == {"mse", "relu"}


def test_bad_override_exits_with_config_code():
    assert main(["run", "--dry-run", "--set", "train.nope=1", "-q"]) == 2


def test_dry_run_prints_the_plan(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("GAP_CACHE_DIR", str(tmp_path / "cache"))
    assert main(["run", "--dry-run", "--set", "run.seeds=0", "--set", "run.modes=concat",
                 "-q"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    assert "demos" in lines[0] and "run" in lines[0]
    assert not (tmp_path / "cache").exists()


def test_demo_and_segment_commands(tmp_path):
    demos = tmp_path / "demos.jsonl"
    segs = tmp_path / "segs.jsonl"
    assert main(["gen-demos", "--out", str(demos), "--n", "3", "--seed", "1", "-q"]) == 0
    assert len(load_dataset(demos)) == 3
    assert main(["segment", "--data", str(demos), "--out", str(segs), "-q"]) == 0
    assert len(load_segmentations(segs)) == 3


def test_missing_input_file_is_an_error(tmp_path):
    code = main(["segment", "--data", str(tmp_path / "absent.jsonl"),
                 "--out", str(tmp_path / "s.jsonl"), "-q"])
    assert code == 1


def test_report_command_on_an_empty_directory(tmp_path):
    assert main(["report", "--dir", str(tmp_path), "-q"]) == 0
    assert (tmp_path / "report" / "report.json").exists()
