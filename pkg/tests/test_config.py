import pytest

from pwexpand import config
from pwexpand.config import TOL, get_tolerances, override, use


def test_profiles():
    assert get_tolerances("strict").breakpoint < get_tolerances("default").breakpoint
    with pytest.raises(ValueError):
        get_tolerances("sloppy")


def test_env_var(monkeypatch):
    monkeypatch.setenv(config.ENV_VAR, "loose")
    assert get_tolerances() is config.PROFILES["loose"]


def test_use_is_scoped_and_read_only():
    before = TOL.breakpoint
    with use("loose", max_cells=10) as t:
        assert TOL.breakpoint == t.breakpoint == 1e-10 and TOL.max_cells == 10
    assert TOL.breakpoint == before
    with pytest.raises(AttributeError):
        TOL.breakpoint = 1.0
    assert override(merge=0.5).merge == 0.5 and TOL.merge != 0.5
