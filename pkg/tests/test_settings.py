import pytest
from pydantic import ValidationError

from config import load_settings


def test_yaml_settings_load() -> None:
    settings = load_settings()
    assert settings.yaml.logging.level == "INFO"
    assert settings.yaml.reference.rpl_pdr == 1.0
    assert settings.yaml.acceptance.radio_check_tolerance == 0.02


def test_environment_overrides(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("LLNROUTE_SEED", "5")
    monkeypatch.setenv("LLNROUTE_LOG_LEVEL", "debug")
    monkeypatch.setenv("LLNROUTE_JOBS", "3")
    env = load_settings().env
    assert (env.seed, env.log_level, env.jobs) == (5, "debug", 3)


def test_invalid_job_count_is_rejected(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("LLNROUTE_JOBS", "0")
    with pytest.raises(ValidationError):
        load_settings()
