from pathlib import Path

import pytest

from llnroute.errors import ConfigError
from llnroute.netsim.engine import Protocol
from llnroute.netsim.topology import Placement
from llnroute.scenario import (
    ScenarioConfig,
    SweepAxis,
    dump_config,
    parse_config,
    validate_config,
    with_seed_override,
)

FULL = """\
# distance sweep, both protocols
protocol = [loadng, aodv]
n_nodes = 50
seeds = [1, 2, 3]
duration_s = 900

radio.range_m = 150
radio.alpha = 2.5
traffic.config_enabled = false   # reports and acks only
timers.rreq_retries = 2

sweep.axis = distance
sweep.values = [50, 100, 150]
"""


def test_minimal_scenario_uses_defaults() -> None:
    cfg = validate_config("protocol = loadng\n")
    assert cfg.protocol == (Protocol.LOADNG,)
    assert cfg.n_nodes == 50
    assert cfg.field_m == (1000.0, 1000.0)
    assert cfg.duration_s == 8 * 3600.0
    assert cfg.seeds == (1,)
    assert cfg.placement is Placement.INCREMENTAL
    assert cfg.radio.range_m == 150.0
    assert cfg.mac.retries == 3
    assert cfg.traffic.meter_report_period_s == 60.0
    assert cfg.timers.route_hold_s == 100.0
    assert cfg.sweep is None


def test_full_scenario() -> None:
    cfg = validate_config(FULL)
    assert cfg.protocol == (Protocol.LOADNG, Protocol.AODV)
    assert cfg.seeds == (1, 2, 3)
    assert cfg.radio.alpha == 2.5
    assert not cfg.traffic.config_enabled
    assert cfg.timers.rreq_retries == 2
    assert cfg.sweep is not None
    assert cfg.sweep.axis is SweepAxis.DISTANCE
    assert cfg.sweep.values == (50.0, 100.0, 150.0)


def test_out_of_range_value_names_key_and_line() -> None:
    with pytest.raises(ConfigError) as excinfo:
        validate_config("protocol = aodv\nradio.alpha = -1\n")
    assert excinfo.value.key == "radio.alpha"
    assert excinfo.value.line == 2


def test_distance_beyond_field_half_extent_is_rejected() -> None:
    with pytest.raises(ConfigError) as excinfo:
        validate_config("protocol = aodv\nfield_m = [200, 200]\ndist_to_sink = 150\n")
    assert excinfo.value.key == "dist_to_sink"
    assert excinfo.value.line == 3
    assert "half-extent 100 m" in excinfo.value.message


def test_distance_sweep_must_fit_the_field() -> None:
    text = "protocol = aodv\nfield_m = [400, 300]\nsweep.axis = distance\nsweep.values = [50, 200]\n"
    with pytest.raises(ConfigError) as excinfo:
        validate_config(text)
    assert excinfo.value.key == "sweep"
    assert excinfo.value.line == 3

    cfg = validate_config(text.replace("200]", "150]"))
    assert cfg.sweep is not None
    assert max(cfg.sweep.values) == 150.0


def test_duplicate_key() -> None:
    with pytest.raises(ConfigError) as excinfo:
        validate_config("protocol = aodv\nn_nodes = 10\nn_nodes = 20\n")
    assert excinfo.value.key == "n_nodes"
    assert excinfo.value.line == 3
    assert "line 2" in excinfo.value.message


@pytest.mark.parametrize("key", ["colour", "radio.colour"])
def test_unknown_key(key: str) -> None:
    with pytest.raises(ConfigError) as excinfo:
        validate_config(f"protocol = aodv\n\n{key} = blue\n")
    assert excinfo.value.key == key
    assert excinfo.value.line == 3
    assert excinfo.value.message == "unknown key"


def test_missing_protocol() -> None:
    with pytest.raises(ConfigError) as excinfo:
        validate_config("n_nodes = 10\n")
    assert excinfo.value.key == "protocol"
    assert excinfo.value.line is None
    assert "missing" in str(excinfo.value)


@pytest.mark.parametrize(
    "text",
    [
        "protocol = rpl\n",
        "protocol = aodv\nseeds = [1, 1]\n",
        "protocol = aodv\nn_nodes = 1\n",
        "protocol = aodv\nsweep.values = []\n",
        "protocol = aodv\nsweep.values = [0, 10]\n",
        "protocol = aodv\nmac.jitter_ms = -1\n",
    ],
)
def test_invalid_values_are_config_errors(text: str) -> None:
    with pytest.raises(ConfigError):
        validate_config(text)


@pytest.mark.parametrize("line", ["protocol aodv", "= aodv", "a.b.c = 1"])
def test_malformed_lines(line: str) -> None:
    with pytest.raises(ConfigError) as excinfo:
        validate_config(line + "\n")
    assert excinfo.value.line == 1


def test_dump_parses_back_to_the_same_config() -> None:
    cfg = validate_config(FULL)
    text = dump_config(cfg)
    assert text.startswith("# resolved scenario\n# schema=1\n")
    assert validate_config(text) == cfg


def test_parse_config_reads_files(tmp_path: Path) -> None:
    path = tmp_path / "scenario.conf"
    path.write_text(FULL, encoding="utf-8")
    assert parse_config(path) == validate_config(FULL)


def test_parse_config_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config(tmp_path / "absent.conf")
    assert excinfo.value.line is None


def test_seed_override() -> None:
    cfg = validate_config(FULL)
    assert with_seed_override(cfg, None) is cfg
    assert with_seed_override(cfg, 9).seeds == (9,)


def test_config_is_immutable() -> None:
    cfg = ScenarioConfig(protocol=(Protocol.AODV,))
    with pytest.raises(ValueError):
        cfg.n_nodes = 10  # type: ignore[misc]


@pytest.mark.parametrize(
    "path", sorted(Path(__file__).resolve().parent.parent.joinpath("scenarios").glob("*.conf"))
)
def test_shipped_scenarios_parse(path: Path) -> None:
    cfg = parse_config(path)
    assert set(cfg.protocol) == {Protocol.LOADNG, Protocol.AODV}
