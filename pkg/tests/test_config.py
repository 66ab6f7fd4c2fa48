import json

import pytest

from cfspot.config import DEFAULT_CONFIG, SpotConfig
from cfspot.errors import ConfigError


def test_defaults():
    c = DEFAULT_CONFIG
    assert (c.box_threshold, c.min_area, c.stride, c.long_side) == (0.35, 10, 4, 2880)
    assert (c.spot_threshold, c.char_threshold, c.size_threshold) == (0.3, 0.4, 28.0)
    assert (c.confidence, c.reject_threshold) == (0.3, 0.5)


@pytest.mark.parametrize(
    "field, value",
    [
        ("box_threshold", 1.5),
        ("char_threshold", -0.1),
        ("confidence", 2.0),
        ("stride", 0),
        ("long_side", 0),
        ("min_area", -1),
        ("box_expand", -0.1),
    ],
)
def test_out_of_range_rejected(field, value):
    with pytest.raises(ConfigError):
        SpotConfig(**{field: value})


def test_load_with_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"box_threshold": 0.5, "stride": 2}))
    cfg = SpotConfig.load(path, stride=8, char_threshold=None)
    assert cfg.box_threshold == 0.5 and cfg.stride == 8 and cfg.char_threshold == 0.4


def test_unknown_key_and_bad_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"box_treshold": 0.5}))
    with pytest.raises(ConfigError, match="box_treshold"):
        SpotConfig.load(bad)
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    with pytest.raises(ConfigError):
        SpotConfig.load(junk)
    with pytest.raises(ConfigError):
        SpotConfig.load(tmp_path / "missing.json")


def test_to_dict_round_trip():
    cfg = DEFAULT_CONFIG.replace(spot_threshold=0.25)
    assert SpotConfig.from_mapping(cfg.to_dict()) == cfg
