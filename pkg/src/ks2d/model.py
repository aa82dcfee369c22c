"""Physical parameters, mass-plane geometry, and the region classifier.

The mass plane (theta1, theta2) splits into a global-existence region and two
blow-up regions, separated by a parabola and two straight lines.  Everything
here is exact arithmetic on scalars; no grids are involved.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

EIGHT_PI = 8.0 * math.pi
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Parameters:
    """Physical constants of the two-species system.

    Attributes
    ----------
    mu:
        Diffusivity of species 1 (species 2 has diffusivity 1).
    chi1, chi2:
        Chemotactic sensitivities of the two species.
    """

    mu: float
    chi1: float
    chi2: float

    def __post_init__(self) -> None:
        for name in ("mu", "chi1", "chi2"):
            value = getattr(self, name)
            if not (value > 0.0) or not math.isfinite(value):
                raise ValueError(f"{name} must be a positive finite real, got {value!r}")


@dataclass(frozen=True)
class MassPair:
    """Total masses (theta1, theta2) of the two species."""

    theta1: float
    theta2: float

    def __post_init__(self) -> None:
        for name in ("theta1", "theta2"):
            value = getattr(self, name)
            if value < 0.0 or not math.isfinite(value):
                raise ValueError(f"{name} must be a nonnegative finite real, got {value!r}")


class RegionLabel(enum.Enum):
    """Mutually exclusive classification of a point in the mass plane."""

    GLOBAL_EXISTENCE = "GlobalExistence"
    BLOWUP_RADIAL = "BlowupRadial"
    BLOWUP_GENERAL = "BlowupGeneral"
    BOUNDARY = "Boundary"


def parabola_value(m: MassPair, p: Parameters) -> float:
    """Evaluate 8*pi*(mu*theta1/chi1 + theta2/chi2) - (theta1 + theta2)^2.

    Positive inside the parabolic global-existence region, negative outside.
    """
    linear = EIGHT_PI * (p.mu * m.theta1 / p.chi1 + m.theta2 / p.chi2)
    quadratic = (m.theta1 + m.theta2) ** 2
    return linear - quadratic


def _within_tolerance(value: float, scale: float, tol: float) -> bool:
    # Relative zero test: |value| <= tol * (1 + |scale|), scale being the
    # largest term entering the expression.  Masses span orders of magnitude
    # in sweeps, so an absolute test would misfire at both extremes.
    return abs(value) <= tol * (1.0 + abs(scale))


def classify(m: MassPair, p: Parameters, tol: float = 0.0) -> RegionLabel:
    """Assign the region label for masses ``m`` under parameters ``p``.

    Parameters
    ----------
    m, p:
        Point in the mass plane and physical constants.
    tol:
        Relative tolerance for deciding that a defining expression vanishes.
        Any expression within tolerance of zero yields ``BOUNDARY``, which
        takes precedence over every open-region label.

    Returns
    -------
    RegionLabel
        ``GLOBAL_EXISTENCE`` when the parabola value is positive and both
        masses sit strictly below their critical lines; ``BLOWUP_GENERAL``
        when either mass exceeds its line; ``BLOWUP_RADIAL`` in the lens
        where the parabola fails but both line conditions hold.
    """
    if tol < 0.0:
        raise ValueError(f"tol must be nonnegative, got {tol!r}")

    linear = EIGHT_PI * (p.mu * m.theta1 / p.chi1 + m.theta2 / p.chi2)
    quadratic = (m.theta1 + m.theta2) ** 2
    parab = linear - quadratic

    line1_threshold = EIGHT_PI * p.mu / p.chi1
    line2_threshold = EIGHT_PI / p.chi2
    line1 = m.theta1 - line1_threshold
    line2 = m.theta2 - line2_threshold

    on_parabola = _within_tolerance(parab, max(linear, quadratic), tol)
    on_line1 = _within_tolerance(line1, max(m.theta1, line1_threshold), tol)
    on_line2 = _within_tolerance(line2, max(m.theta2, line2_threshold), tol)
    if on_parabola or on_line1 or on_line2:
        return RegionLabel.BOUNDARY

    if line1 > 0.0 or line2 > 0.0:
        return RegionLabel.BLOWUP_GENERAL
    if parab > 0.0:
        return RegionLabel.GLOBAL_EXISTENCE
    return RegionLabel.BLOWUP_RADIAL


def intersects_lines(p: Parameters) -> bool:
    """Whether the threshold parabola meets the critical lines at positive masses.

    True exactly when chi1 < mu*chi2/2 or chi1 > 2*mu*chi2.
    """
    return p.chi1 < p.mu * p.chi2 / 2.0 or p.chi1 > 2.0 * p.mu * p.chi2


def swap_species(m: MassPair, p: Parameters) -> tuple[MassPair, Parameters]:
    """Relabel the species (time-rescaled), leaving the classification invariant.

    Maps (theta1, theta2) to (theta2, theta1) and (mu, chi1, chi2) to
    (1/mu, chi2/mu, chi1/mu).  Applying the map twice restores the input.
    """
    swapped_m = MassPair(m.theta2, m.theta1)
    swapped_p = Parameters(mu=1.0 / p.mu, chi1=p.chi2 / p.mu, chi2=p.chi1 / p.mu)
    return swapped_m, swapped_p


def moment_rate(m: MassPair, p: Parameters) -> float:
    """Exact growth rate of the weighted second moment.

    Returns 4*theta1*mu/chi1 + 4*theta2/chi2 - (theta1 + theta2)^2/(2*pi),
    which equals parabola_value / (2*pi).  The moment it governs weights
    species 1 by mu/chi1 and species 2 by 1/chi2; the identity is exact for
    the unregularized free-space dynamics.
    """
    return (
        4.0 * m.theta1 * p.mu / p.chi1
        + 4.0 * m.theta2 / p.chi2
        - (m.theta1 + m.theta2) ** 2 / TWO_PI
    )


def predict_blowup_deadline(m0: float, rate: float) -> float | None:
    """Time at which a linearly decaying nonnegative moment would vanish.

    Parameters
    ----------
    m0:
        Initial value of the weighted second moment (must be nonnegative).
    rate:
        Its constant growth rate, typically ``moment_rate(m, p)``.

    Returns
    -------
    float or None
        ``m0 / (-rate)`` when the rate is negative, else ``None`` (the
        moment never hits zero, so no finite deadline is implied).
    """
    if m0 < 0.0:
        raise ValueError(f"initial moment must be nonnegative, got {m0!r}")
    if rate < 0.0:
        return m0 / (-rate)
    return None
