"""Module containing the tests of the command line entry point and its exit codes"""
import json
import pytest
import pipeline
from pipeline import main, parse_arguments, EXIT_SUCCESS, EXIT_USAGE


def test_usage_errors_exit_with_code_2():
    for argv in (["train", "--aggregator", "gated"], ["compare", "--aggregators", "co,gated"],
                 ["compare", "--seeds", "1,x"], ["eval"], ["verify", "--inject-fault", "x"],
                 []):
        with pytest.raises(SystemExit) as error:
            parse_arguments(argv)
        assert error.value.code == 2


def test_command_line_overrides():
    arguments = parse_arguments(["train", "--seed", "4", "--aggregator", "merged", "--data",
                                 "a", "b", "--out", "run"])
    assert pipeline._overrides(arguments, seed="seed", aggregator="aggregator",
                               data_path="data", output_path="out", task="task") == \
        {"seed": 4, "aggregator": "merged", "data_path": ["a", "b"], "output_path": "run"}
    arguments = parse_arguments(["compare", "--aggregators", "co,vision_self", "--seeds", "0,2"])
    assert arguments.aggregators == ["co", "vision_self"] and arguments.seeds == [0, 2]


def test_missing_checkpoint_exits_with_code_2(tmp_path):
    assert main(["eval", "--checkpoint", str(tmp_path / "missing.npz")]) == EXIT_USAGE


def test_missing_dataset_exits_with_code_2(tmp_path):
    assert main(["train", "--data", str(tmp_path / "nowhere"), "--out",
                 str(tmp_path / "run")]) == EXIT_USAGE


def test_unknown_configuration_key_exits_with_code_2(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"learning_rate": 0.1}))
    assert main(["train", "--config", str(config)]) == EXIT_USAGE


def test_synth_data_writes_a_dataset(tmp_path):
    config = tmp_path / "synth.json"
    config.write_text(json.dumps({"n_samples": 24, "image_size": 16, "oracle_samples": 10000}))
    assert main(["synth-data", "--config", str(config), "--seed", "2", "--task",
                 "calcification", "--out", str(tmp_path / "data")]) == EXIT_SUCCESS
    descriptor = json.loads((tmp_path / "data" / "images.json").read_text())
    assert descriptor["count"] == 24 and descriptor["task"] == "calcification"
    assert (tmp_path / "data" / "oracle.json").is_file()
