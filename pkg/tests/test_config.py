import json

import pytest
import structlog

from app.core.config import Settings, get_settings
from app.core.csh_solver import SolverOptions
from app.core.logging_config import configure_logging


@pytest.fixture
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def test_defaults():
    settings = Settings(_env_file=None)
    assert settings.solver_tol == 1e-8
    assert settings.lambda_tol == 1e-3
    assert settings.critical_tol == 1e-6
    assert settings.floor_scale == 1e6
    assert settings.workers is None


def test_environment_override(monkeypatch, fresh_settings):
    monkeypatch.setenv("CSH_MAX_ITER", "123")
    monkeypatch.setenv("CSH_SOLVER_TOL", "1e-9")
    settings = get_settings()
    assert settings.max_iter == 123
    assert settings.solver_tol == 1e-9
    options = SolverOptions.from_settings()
    assert options.max_iter == 123
    assert options.tol == 1e-9


def test_dotenv_file(monkeypatch, tmp_path, fresh_settings):
    (tmp_path / ".env").write_text("CSH_LAMBDA_TOL=0.05\nCSH_WORKERS=3\n")
    monkeypatch.chdir(tmp_path)
    settings = get_settings()
    assert settings.lambda_tol == 0.05
    assert settings.workers == 3


def test_overrides_ignore_none(fresh_settings):
    options = SolverOptions.from_settings(tol=None, max_iter=7)
    assert options.tol == get_settings().solver_tol
    assert options.max_iter == 7


def test_unknown_log_level():
    with pytest.raises(ValueError, match="verbose"):
        configure_logging("verbose")


def test_json_logs_go_to_stderr(capsys):
    configure_logging("info", "json")
    structlog.get_logger("test").info("trial finished", lam=2.5)
    captured = capsys.readouterr()
    assert captured.out == ""
    event = json.loads(captured.err.strip().splitlines()[-1])
    assert event["event"] == "trial finished"
    assert event["lam"] == 2.5
    assert event["level"] == "info"


def test_level_filtering(capsys):
    configure_logging("error")
    structlog.get_logger("test").warning("hidden")
    assert "hidden" not in capsys.readouterr().err
