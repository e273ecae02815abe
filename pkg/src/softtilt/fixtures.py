"""Canonical example tables used by the test suite and the CLI docs."""

from __future__ import annotations

from fractions import Fraction
from importlib import resources
from pathlib import Path

from .dist import JointTable, VariableSpec, iter_group_assignments

_BITS = ("0", "1")


def _binary_specs() -> tuple[VariableSpec, ...]:
    return (
        VariableSpec("X", _BITS),
        VariableSpec("Y", _BITS),
        VariableSpec("Z", _BITS),
    )


def joint_f1() -> JointTable:
    """Three independent fair bits; every cell has mass 1/8."""
    specs = _binary_specs()
    eighth = Fraction(1, 8)
    return JointTable(specs, [(cell, eighth) for cell in iter_group_assignments(specs)])


def joint_f3() -> JointTable:
    """Noisy copy: Y is a fair bit; given y, the (x, z) pair has mass 0.4 when
    x equals z and 0.1 otherwise. Jointly that is 0.2 per agreeing cell and
    0.05 per disagreeing cell."""
    specs = _binary_specs()
    pairs = []
    for cell in iter_group_assignments(specs):
        p = Fraction(1, 5) if cell["X"] == cell["Z"] else Fraction(1, 20)
        pairs.append((cell, p))
    return JointTable(specs, pairs)


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled fixture file such as 'f3.json'."""
    return Path(str(resources.files("softtilt").joinpath("data").joinpath(name)))
