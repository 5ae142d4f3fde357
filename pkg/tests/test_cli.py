import json

import pytest

from espnetv2.cli import main


def test_requires_a_subcommand(capsys):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_unknown_profile_is_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["profile", "--profile", "c999"])
    assert info.value.code == 2


def test_summary_json(capsys):
    assert main(["summary", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema_version"] == 1
    assert {r["profile"] for r in doc["profiles"]} == {
        "c28", "c86", "c123", "c169", "c224", "c284"}


def test_profile_text_and_csv(capsys):
    assert main(["profile", "--profile", "c28"]) == 0
    out = capsys.readouterr().out
    assert "stage1" in out and "reference" in out
    assert main(["profile", "--profile", "c28", "--format", "csv"]) == 0
    header = capsys.readouterr().out.splitlines()[0]
    assert header.startswith("name,kind,in_channels,out_channels")
    assert main(["profile", "--profile", "c28", "--full"]) == 0
    assert "stem.bn" in capsys.readouterr().out


def test_profile_conventions_flag(capsys):
    main(["profile", "--profile", "c28", "--format", "json"])
    base = json.loads(capsys.readouterr().out)["totals"]["macs"]
    main(["profile", "--profile", "c28", "--format", "json",
          "--count-classifier"])
    with_fc = json.loads(capsys.readouterr().out)["totals"]["macs"]
    assert with_fc - base == 1024 * 1000


def test_compare_convs(capsys):
    assert main(["compare-convs", "--profile", "c28"]) == 0
    out = capsys.readouterr().out
    assert "dilated-vs-separable mac factor" in out
    assert main(["compare-convs", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert 3.3 <= doc["macs_ratio_dilated_vs_separable"] <= 4.5


def test_schedule_formats(capsys):
    assert main(["schedule", "--epochs", "6"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6 and lines[0].endswith("0.500000")
    assert main(["schedule", "--epochs", "3", "--format", "csv"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "epoch,lr"
    assert main(["schedule", "--epochs", "3", "--format", "json",
                 "--mode", "fixed"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rates"] == [0.5, 0.5, 0.5]


def test_schedule_rejects_bad_combination(capsys):
    # eta_max - (period - 1) * eta_min would cross zero
    assert main(["schedule", "--eta-min", "0.2", "--period", "10"]) == 2
    assert "error" in capsys.readouterr().err


def test_probe_gridding(capsys):
    assert main(["probe-gridding", "--rates", "1,2,3,4", "--format",
                 "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["coverage"] == pytest.approx(33 / 81)
    assert main(["probe-gridding", "--rates", "4", "--no-hff"]) == 0
    assert "0.1111" in capsys.readouterr().out


def test_train_toy_json(capsys):
    assert main(["train-toy", "--epochs", "1", "--train-size", "32",
                 "--eval-size", "16", "--batch-size", "16",
                 "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema_version"] == 1
    assert len(doc["history"]) == 1
    assert set(doc["history"][0]) == {"epoch", "lr", "loss", "accuracy"}


def test_train_toy_csv(capsys):
    assert main(["train-toy", "--epochs", "1", "--train-size", "32",
                 "--eval-size", "16", "--batch-size", "16",
                 "--format", "csv"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "epoch,lr,loss,accuracy"


def test_verify_single_suite(capsys):
    assert main(["verify", "--suite", "schedule"]) == 0
    out = capsys.readouterr().out
    assert "schedule:" in out and "checks passed" in out
