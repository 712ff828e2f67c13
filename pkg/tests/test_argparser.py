import json

import pytest
import yaml

from data.run_config import EstimationConfig, InputConfig, MeasureConfig
from geogrowth import create_parser
from util.errors import ConfigError
from util.hf_argparser import HfArgumentParser, load_config_file, string_to_bool


def parse(*argv):
    return create_parser().parse_args_into_dataclasses(list(argv))


def write_yaml(tmp_path, document, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(document))
    return str(path)


def test_defaults_apply_without_flags():
    input_conf, measure_conf, est_conf, boot_conf, acc_conf, sim_conf, args = parse("lp")
    assert args.command == "lp"
    assert est_conf == EstimationConfig()
    assert measure_conf.delta == 0.3
    assert len(measure_conf.majors) == 24
    assert input_conf.strict is True


def test_command_line_values():
    _, measure_conf, est_conf, boot_conf, _, sim_conf, _ = parse(
        "bootstrap", "--shocks", "geo", "unga", "--horizon_max", "5", "--delta", "0.5",
        "--scheme", "WildRademacher", "--measure_ar", "0.5", "0.2", "--hac_bandwidth", "3")
    assert est_conf.shocks == ["geo", "unga"]
    assert est_conf.horizon_max == 5
    assert est_conf.bandwidth == 3
    assert measure_conf.delta == 0.5
    assert boot_conf.scheme == "WildRademacher"
    assert sim_conf.measure_ar == [0.5, 0.2]


def test_boolean_flags():
    input_conf, *_ = parse("scores", "--no_strict", "--show_timing")
    assert input_conf.strict is False
    assert input_conf.show_timing is True
    input_conf, *_ = parse("scores", "--strict", "false")
    assert input_conf.strict is False


def test_command_line_beats_file_beats_default(tmp_path):
    config = write_yaml(tmp_path, {"EstimationConfig": {"outcome": "rgdp", "horizon_max": 3}, "delta": 0.7})
    _, measure_conf, est_conf, *_ = parse("lp", "--config", config, "--horizon_max", "8")
    assert est_conf.outcome == "rgdp"
    assert est_conf.horizon_max == 8
    assert est_conf.horizon_min == 0
    assert measure_conf.delta == 0.7


def test_flat_json_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"lags": 2, "hac_bandwidth": 4, "decades": 1990, "strict": "no"}))
    input_conf, _, est_conf, _, acc_conf, _, _ = parse("account", "--config", str(path))
    assert est_conf.lags == 2
    assert est_conf.hac_bandwidth == "4"
    assert acc_conf.decades == [1990]
    assert input_conf.strict is False


@pytest.mark.parametrize("document", [
    {"horizon": 3},
    {"EstimationConfig": {"delta": 0.5}},
    {"scheme": "Pairs"},
    {"lags": "four"},
])
def test_bad_config_documents(tmp_path, document):
    with pytest.raises(ConfigError):
        parse("lp", "--config", write_yaml(tmp_path, document))


@pytest.mark.parametrize("argv", [
    [],
    ["regress"],
    ["lp", "--scheme", "Pairs"],
    ["lp", "--lags", "four"],
    ["lp", "--config", "/nonexistent/run.yaml"],
])
def test_bad_command_lines(argv):
    with pytest.raises(ConfigError):
        parse(*argv)


def test_config_must_be_a_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config_file(str(path))
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert load_config_file(str(empty)) == {}


def test_parse_dict():
    parser = HfArgumentParser((InputConfig, MeasureConfig))
    input_conf, measure_conf = parser.parse_dict({"InputConfig": {"threads": 4}, "partner_split": "us"})
    assert input_conf.threads == 4
    assert measure_conf.partner_split == "us"
    with pytest.raises(ConfigError):
        parser.parse_dict({"partner_split": "eastern"})


def test_config_checks():
    with pytest.raises(ConfigError):
        MeasureConfig(delta=0.0).check()
    with pytest.raises(ConfigError):
        EstimationConfig(horizon_min=3, horizon_max=1).check()
    with pytest.raises(ConfigError):
        EstimationConfig(hac_bandwidth="wide").check()
    with pytest.raises(ConfigError):
        InputConfig(threads=0).check()


@pytest.mark.parametrize("text, value", [("yes", True), ("T", True), ("0", False), ("no", False)])
def test_string_to_bool(text, value):
    assert string_to_bool(text) is value
