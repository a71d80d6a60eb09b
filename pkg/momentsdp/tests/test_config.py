"""
Tests for the shared settings and logging set-up.
"""

import logging
from pathlib import Path

import pytest

from shared.config import DEFAULTS, Settings, get_env_var, validate_required_vars
from shared.utils import configure_logging


@pytest.mark.parametrize('raw, expected', [
    ('1', 1),
    ('0', 0),
    ('1e-8', 1e-8),
    ('true', True),
    ('Off', False),
    ('cvxpy', 'cvxpy'),
])
def test_get_env_var_conversion(monkeypatch, raw, expected):
    monkeypatch.setenv('MOMENTSDP_EXAMPLE_VAR', raw)
    value = get_env_var('MOMENTSDP_EXAMPLE_VAR')
    assert value == expected
    assert type(value) is type(expected)


def test_get_env_var_default(monkeypatch):
    monkeypatch.delenv('MOMENTSDP_EXAMPLE_VAR', raising=False)
    assert get_env_var('MOMENTSDP_EXAMPLE_VAR') is None
    assert get_env_var('MOMENTSDP_EXAMPLE_VAR', '200') == 200


def test_validate_required_vars(monkeypatch):
    monkeypatch.delenv('MOMENTSDP_EXAMPLE_VAR', raising=False)
    validate_required_vars(DEFAULTS)
    with pytest.raises(ValueError, match='MOMENTSDP_EXAMPLE_VAR'):
        validate_required_vars({'MOMENTSDP_EXAMPLE_VAR': None})


def test_settings_defaults(monkeypatch):
    for key in DEFAULTS:
        monkeypatch.delenv(key, raising=False)
    settings = Settings()
    assert settings.SOLVER_TOLERANCE == pytest.approx(1e-8)
    assert settings.SOLVER_MAX_ITERATIONS == 200
    assert settings.SOLVER_BACKEND == 'embedded'
    assert settings.SIM_PATHS == 5000
    assert settings.THREADS == 1
    assert settings.DEBUG is False
    assert settings.OUTPUT_DIR == Path('out')
    assert (settings.DATA_DIR / 'lqr.model').exists()


def test_settings_read_the_environment(monkeypatch):
    monkeypatch.setenv('MOMENTSDP_THREADS', '4')
    monkeypatch.setenv('MOMENTSDP_SIM_DT', '0.005')
    monkeypatch.setenv('MOMENTSDP_SOLVER_BACKEND', 'cvxpy')
    settings = Settings()
    assert settings.THREADS == 4
    assert settings.SIM_DT == pytest.approx(0.005)
    assert settings.SOLVER_BACKEND == 'cvxpy'


def test_settings_reject_invalid_values(monkeypatch):
    monkeypatch.setenv('MOMENTSDP_SIM_PATHS', '0')
    with pytest.raises(ValueError):
        Settings()


def test_configure_logging_levels():
    root = logging.getLogger()
    previous = root.level
    try:
        configure_logging(debug=True)
        assert root.level == logging.DEBUG
        configure_logging(level='warning')
        assert root.level == logging.WARNING
        configure_logging(level='nonsense')
        assert root.level == logging.INFO
    finally:
        root.setLevel(previous)
