"""Shared builders for the test suite."""

from __future__ import annotations

import math

import pytest

from ks2d.solver import GaussianBump, InitialData, State


def gaussian_state(
    nx: int,
    L: float,
    mass1: float,
    width1: float,
    mass2: float = 0.0,
    width2: float = 1.0,
    center1: tuple[float, float] = (0.0, 0.0),
    center2: tuple[float, float] = (0.0, 0.0),
) -> State:
    """Realize a two-Gaussian initial state on an nx-square grid."""
    species1 = (GaussianBump(mass=mass1, center=center1, width=width1),) if mass1 > 0 else ()
    species2 = (GaussianBump(mass=mass2, center=center2, width=width2),) if mass2 > 0 else ()
    return InitialData(nx, nx, L, species1, species2).realize()


TWO_PI = 2.0 * math.pi


@pytest.fixture
def tmp_cfg(tmp_path):
    """Write a config file from a dict of dotted keys and return its path."""

    def write(values, name="case.cfg"):
        path = tmp_path / name
        path.write_text("".join(f"{k} = {v}\n" for k, v in values.items()), encoding="utf-8")
        return path

    return write
