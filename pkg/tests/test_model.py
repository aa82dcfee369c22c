"""Mass-plane geometry: classifier, moment rate, and the swap symmetry.

The classifier oracle is the raw inequality set itself, re-evaluated
independently here; the intersection predicate is checked against a
quadratic-root oracle on the threshold parabola.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ks2d.model import (
    MassPair,
    Parameters,
    RegionLabel,
    classify,
    intersects_lines,
    moment_rate,
    parabola_value,
    predict_blowup_deadline,
    swap_species,
)

PI = math.pi
EIGHT_PI = 8.0 * PI

UNIT = Parameters(1.0, 1.0, 1.0)

positive = st.floats(min_value=0.05, max_value=20.0, allow_nan=False)
mass = st.floats(min_value=0.0, max_value=120.0, allow_nan=False)


def test_parabola_value_instances():
    assert parabola_value(MassPair(0.0, 0.0), Parameters(3.0, 0.2, 7.0)) == 0.0
    assert parabola_value(MassPair(PI, PI), UNIT) == pytest.approx(12.0 * PI**2, rel=1e-14)
    assert parabola_value(MassPair(10 * PI, 10 * PI), UNIT) == pytest.approx(-240.0 * PI**2, rel=1e-14)


def test_classify_instances():
    assert classify(MassPair(PI, PI), UNIT) is RegionLabel.GLOBAL_EXISTENCE
    assert classify(MassPair(6 * PI, 6 * PI), UNIT) is RegionLabel.BLOWUP_RADIAL
    assert classify(MassPair(10 * PI, 10 * PI), UNIT) is RegionLabel.BLOWUP_GENERAL


def test_classify_boundary_on_parabola():
    # (2pi, 6pi) sits exactly on the parabola while strictly below both lines.
    m = MassPair(2 * PI, 6 * PI)
    assert parabola_value(m, UNIT) == 0.0
    assert classify(m, UNIT) is RegionLabel.BOUNDARY


def test_classify_boundary_takes_precedence():
    # Exactly on line 1 while theta2 is far past line 2: Boundary still wins.
    m = MassPair(EIGHT_PI, 20 * PI)
    assert classify(m, UNIT) is RegionLabel.BOUNDARY


def test_classify_relative_tolerance():
    m = MassPair(EIGHT_PI * (1.0 + 5e-4), PI)
    assert classify(m, UNIT, tol=1e-3) is RegionLabel.BOUNDARY
    assert classify(m, UNIT, tol=1e-5) is RegionLabel.BLOWUP_GENERAL


def test_classify_rejects_negative_tolerance():
    with pytest.raises(ValueError):
        classify(MassPair(PI, PI), UNIT, tol=-1e-6)


def test_intersects_lines_instances():
    assert not intersects_lines(Parameters(1.0, 1.0, 1.0))
    assert intersects_lines(Parameters(1.0, 3.0, 1.0))
    assert intersects_lines(Parameters(2.0, 0.5, 1.0))


@given(mu=positive, chi1=positive, chi2=positive)
@settings(max_examples=300, deadline=None)
def test_intersects_lines_root_oracle(mu, chi1, chi2):
    # Substituting a line into parabola_value = 0 leaves a linear factor whose
    # root is the other intersection ordinate; the lines meet the parabola at
    # positive mass exactly when one of those roots is strictly positive.
    p = Parameters(mu, chi1, chi2)
    root_on_line2 = EIGHT_PI * mu / chi1 - 16.0 * PI / chi2
    root_on_line1 = EIGHT_PI / chi2 - 16.0 * PI * mu / chi1
    assert intersects_lines(p) == (root_on_line2 > 0.0 or root_on_line1 > 0.0)


def test_swap_species_instances():
    m, p = swap_species(MassPair(PI, 2 * PI), Parameters(1.0, 1.0, 1.0))
    assert (m.theta1, m.theta2) == (2 * PI, PI)
    assert (p.mu, p.chi1, p.chi2) == (1.0, 1.0, 1.0)

    m, p = swap_species(MassPair(PI, 2 * PI), Parameters(4.0, 2.0, 1.0))
    assert (m.theta1, m.theta2) == (2 * PI, PI)
    assert (p.mu, p.chi1, p.chi2) == (0.25, 0.25, 0.5)


@given(theta1=mass, theta2=mass, mu=positive, chi1=positive, chi2=positive)
@settings(max_examples=300, deadline=None)
def test_swap_species_is_involution_and_preserves_label(theta1, theta2, mu, chi1, chi2):
    m, p = MassPair(theta1, theta2), Parameters(mu, chi1, chi2)
    ms, ps = swap_species(m, p)
    mss, pss = swap_species(ms, ps)
    assert mss.theta1 == pytest.approx(m.theta1, rel=1e-12)
    assert mss.theta2 == pytest.approx(m.theta2, rel=1e-12)
    assert pss.mu == pytest.approx(p.mu, rel=1e-12)
    assert classify(m, p) is classify(ms, ps)


def test_moment_rate_instances():
    assert moment_rate(MassPair(0.0, 0.0), Parameters(2.0, 3.0, 4.0)) == 0.0
    assert moment_rate(MassPair(2 * PI, 2 * PI), UNIT) == pytest.approx(EIGHT_PI, rel=1e-14)
    assert moment_rate(MassPair(EIGHT_PI, EIGHT_PI), UNIT) == pytest.approx(-64.0 * PI, rel=1e-14)


@given(theta1=mass, theta2=mass, mu=positive, chi1=positive, chi2=positive)
@settings(max_examples=200, deadline=None)
def test_moment_rate_matches_parabola(theta1, theta2, mu, chi1, chi2):
    m, p = MassPair(theta1, theta2), Parameters(mu, chi1, chi2)
    assert moment_rate(m, p) * 2.0 * PI == pytest.approx(parabola_value(m, p), rel=1e-12, abs=1e-9)


def test_predict_blowup_deadline():
    assert predict_blowup_deadline(1.0, -2.0) == 0.5
    assert predict_blowup_deadline(5.0, 0.0) is None
    assert predict_blowup_deadline(5.0, 3.0) is None
    assert predict_blowup_deadline(0.0, -1.0) == 0.0
    with pytest.raises(ValueError):
        predict_blowup_deadline(-1.0, -1.0)


def test_parameters_and_masses_validate():
    for bad in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            Parameters(bad, 1.0, 1.0)
        with pytest.raises(ValueError):
            Parameters(1.0, bad, 1.0)
        with pytest.raises(ValueError):
            Parameters(1.0, 1.0, bad)
    with pytest.raises(ValueError):
        MassPair(-0.1, 1.0)
    with pytest.raises(ValueError):
        MassPair(1.0, math.nan)
    MassPair(0.0, 0.0)  # zero masses are legitimate


def test_classifier_against_inequality_oracle():
    # Independent re-evaluation of the defining inequalities, 10^4 samples.
    rng = np.random.default_rng(20_240_817)
    for _ in range(10_000):
        m = MassPair(float(rng.uniform(0.0, 40.0)), float(rng.uniform(0.0, 40.0)))
        p = Parameters(*(float(v) for v in rng.uniform(0.1, 5.0, 3)))
        pv = 8.0 * math.pi * (p.mu * m.theta1 / p.chi1 + m.theta2 / p.chi2) - (m.theta1 + m.theta2) ** 2
        line1, line2 = EIGHT_PI * p.mu / p.chi1, EIGHT_PI / p.chi2
        if pv == 0.0 or m.theta1 == line1 or m.theta2 == line2:
            expected = RegionLabel.BOUNDARY  # tol=0: only exact coincidences
        elif m.theta1 > line1 or m.theta2 > line2:
            expected = RegionLabel.BLOWUP_GENERAL
        elif pv > 0.0:
            expected = RegionLabel.GLOBAL_EXISTENCE
        else:
            expected = RegionLabel.BLOWUP_RADIAL
        assert classify(m, p) is expected, (m, p)
