"""Numerical tolerances.

The active profile is chosen by the ``PWEXPAND_TOLERANCES`` environment
variable (``default``, ``strict`` or ``loose``).
"""

import os
from contextlib import contextmanager
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    breakpoint: float = 1e-12
    inverse_width: float = 1e-13
    merge: float = 1e-12
    containment: float = 1e-12
    case_band: float = 1e-10
    nested_slack: float = 1e-10
    short_cylinder: float = 1e-10
    residual_length: float = 1e-9
    residual_piece: float = 1e-6
    density_l1: float = 1e-12
    deriv_grid: int = 1024
    family_grid: int = 17
    assumption2_grid: int = 4096
    assumption2_safety: float = 0.01
    qsplit_samples: int = 512
    log2_cell_guard: float = 60.0
    max_cells: int = 1 << 22
    scale_ceiling: float = 1e6


PROFILES = {
    "default": Tolerances(),
    "strict": Tolerances(breakpoint=1e-14, merge=1e-14, containment=1e-14,
                         nested_slack=1e-12, residual_length=1e-11),
    "loose": Tolerances(breakpoint=1e-10, merge=1e-10, containment=1e-10,
                        nested_slack=1e-8, residual_length=1e-7,
                        residual_piece=1e-5),
}

ENV_VAR = "PWEXPAND_TOLERANCES"


def get_tolerances(profile=None):
    name = profile or os.environ.get(ENV_VAR, "default")
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(
            f"unknown tolerance profile {name!r}; choose from {sorted(PROFILES)}"
        ) from None


class _Active:
    """The tolerances in force; attribute reads go to the current profile."""

    def __init__(self, tol):
        object.__setattr__(self, "_tol", tol)

    def __getattr__(self, name):
        return getattr(self._tol, name)

    def __setattr__(self, name, value):
        raise AttributeError("tolerances are read-only; use config.use()")

    def __repr__(self):
        return f"TOL({self._tol!r})"

    @property
    def current(self):
        return self._tol


TOL = _Active(get_tolerances())


def set_tolerances(tol):
    """Make ``tol`` (a profile name or :class:`Tolerances`) active."""
    if isinstance(tol, str):
        tol = get_tolerances(tol)
    object.__setattr__(TOL, "_tol", tol)


@contextmanager
def use(tol=None, **changes):
    """Temporarily activate a profile and/or override single fields."""
    previous = TOL.current
    base = previous if tol is None else (
        get_tolerances(tol) if isinstance(tol, str) else tol)
    set_tolerances(replace(base, **changes))
    try:
        yield TOL.current
    finally:
        set_tolerances(previous)


def override(**changes):
    """Return a copy of the active profile with some fields replaced."""
    return replace(TOL.current, **changes)
