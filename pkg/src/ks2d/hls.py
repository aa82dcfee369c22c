"""Condition machinery for the logarithmic HLS inequality for systems.

For a symmetric nonnegative interaction matrix A and positive masses M the
subset polynomials

    P_J(M) = 8*pi * sum_{i in J} M_i  -  sum_{i,j in J} a_ij M_i M_j

decide whether the associated interaction functional is bounded below on the
constraint set and whether a minimizer exists.  This module also hosts the
auxiliary-parameter search that converts the two-species global-existence
condition into exactly this machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import EIGHT_PI, MassPair, Parameters

#: Relative tolerance for equality tests on subset polynomials.  The linear
#: and quadratic terms are of comparable scale whenever a polynomial is near
#: zero, so a relative test is the right notion of "vanishes".
REL_TOL = 1e-12


@dataclass(frozen=True)
class AuxiliaryParams:
    """Auxiliary pair (a, b) with a > chi1 and b > chi2."""

    a: float
    b: float


def entropy_coefficients(aux: AuxiliaryParams, p: Parameters) -> tuple[float, float]:
    """Coefficients mu*(1/chi1 - 1/a) and (1/chi2 - 1/b) of the entropy bound.

    Both are strictly positive for every admissible pair; they multiply the
    species entropies in the a-priori estimate that closes the existence
    argument.
    """
    return (p.mu * (1.0 / p.chi1 - 1.0 / aux.a), 1.0 / p.chi2 - 1.0 / aux.b)


def _validated_matrix(matrix: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"interaction matrix must be square, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ValueError("interaction matrix must be symmetric")
    if np.any(a < 0.0):
        raise ValueError("interaction matrix entries must be nonnegative")
    return a


def _validated_masses(masses: Sequence[float] | np.ndarray, n: int) -> np.ndarray:
    m = np.asarray(masses, dtype=float)
    if m.ndim != 1 or m.shape[0] != n:
        raise ValueError(f"mass vector must have length {n}, got shape {m.shape}")
    if np.any(m < 0.0) or not np.all(np.isfinite(m)):
        raise ValueError("masses must be finite and nonnegative")
    return m


def subset_polynomial(
    matrix: Sequence[Sequence[float]] | np.ndarray,
    masses: Sequence[float] | np.ndarray,
    subset: Iterable[int],
) -> float:
    """Evaluate the subset polynomial P_J on the index subset ``subset``.

    The empty subset evaluates to zero.  Indices are 0-based.
    """
    a = _validated_matrix(matrix)
    m = _validated_masses(masses, a.shape[0])
    idx = sorted(set(subset))
    if not idx:
        return 0.0
    if idx[0] < 0 or idx[-1] >= a.shape[0]:
        raise ValueError(f"subset {idx} out of range for {a.shape[0]} species")
    sub_m = m[idx]
    sub_a = a[np.ix_(idx, idx)]
    linear = EIGHT_PI * float(np.sum(sub_m))
    quadratic = float(sub_m @ sub_a @ sub_m)
    return linear - quadratic


def _polynomial_terms(a: np.ndarray, m: np.ndarray, idx: tuple[int, ...]) -> tuple[float, float]:
    if not idx:
        return 0.0, 0.0
    sub_m = m[list(idx)]
    sub_a = a[np.ix_(list(idx), list(idx))]
    return EIGHT_PI * float(np.sum(sub_m)), float(sub_m @ sub_a @ sub_m)


def _is_zero(value: float, scale: float) -> bool:
    return abs(value) <= REL_TOL * (1.0 + abs(scale))


def _drop_zero_masses(
    matrix: Sequence[Sequence[float]] | np.ndarray,
    masses: Sequence[float] | np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    a = _validated_matrix(matrix)
    m = _validated_masses(masses, a.shape[0])
    keep = np.flatnonzero(m > 0.0)
    return a[np.ix_(keep, keep)], m[keep]


def _all_subsets(n: int) -> Iterable[tuple[int, ...]]:
    for size in range(n + 1):
        yield from combinations(range(n), size)


def check_bounded_below(
    matrix: Sequence[Sequence[float]] | np.ndarray,
    masses: Sequence[float] | np.ndarray,
) -> bool:
    """Necessary and sufficient boundedness test for the interaction functional.

    Requires the full-index polynomial to vanish, every subset polynomial to
    be nonnegative, and for each subset where the polynomial vanishes that
    a_ii plus the polynomial of the subset minus {i} stays strictly positive.
    Zero-mass indices are dropped before evaluation.
    """
    a, m = _drop_zero_masses(matrix, masses)
    n = m.shape[0]

    full_linear, full_quadratic = _polynomial_terms(a, m, tuple(range(n)))
    if not _is_zero(full_linear - full_quadratic, max(full_linear, full_quadratic)):
        return False

    for idx in _all_subsets(n):
        linear, quadratic = _polynomial_terms(a, m, idx)
        value = linear - quadratic
        scale = max(linear, quadratic)
        if value < 0.0 and not _is_zero(value, scale):
            return False
        if _is_zero(value, scale):
            for i in idx:
                rest = tuple(j for j in idx if j != i)
                r_linear, r_quadratic = _polynomial_terms(a, m, rest)
                pivot = a[i, i] + (r_linear - r_quadratic)
                pivot_scale = max(a[i, i], r_linear, r_quadratic)
                if pivot <= 0.0 or _is_zero(pivot, pivot_scale):
                    return False
    return True


def check_minimizer_exists(
    matrix: Sequence[Sequence[float]] | np.ndarray,
    masses: Sequence[float] | np.ndarray,
) -> bool:
    """Whether the interaction functional attains its infimum.

    Requires the full-index polynomial to vanish and every proper nonempty
    subset polynomial to be strictly positive.
    """
    a, m = _drop_zero_masses(matrix, masses)
    n = m.shape[0]

    full_linear, full_quadratic = _polynomial_terms(a, m, tuple(range(n)))
    if not _is_zero(full_linear - full_quadratic, max(full_linear, full_quadratic)):
        return False

    for idx in _all_subsets(n):
        if len(idx) == 0 or len(idx) == n:
            continue
        linear, quadratic = _polynomial_terms(a, m, idx)
        value = linear - quadratic
        if value <= 0.0 or _is_zero(value, max(linear, quadratic)):
            return False
    return True


def two_species_embedding(
    p: Parameters, aux: AuxiliaryParams
) -> tuple[np.ndarray, Callable[[MassPair], np.ndarray]]:
    """Interaction matrix and mass map that recast the two-species problem.

    Returns the 2x2 matrix [[a^2/mu^2, a*b/mu], [a*b/mu, b^2]] together with
    the map (theta1, theta2) -> (mu*theta1/a, theta2/b).  Feeding both into
    :func:`subset_polynomial` reproduces the existence-proof conditions:

        P_{0}   = 8*pi*mu*theta1/a - theta1^2
        P_{1}   = 8*pi*theta2/b    - theta2^2
        P_{0,1} = 8*pi*(mu*theta1/a + theta2/b) - (theta1 + theta2)^2
    """
    a, b = aux.a, aux.b
    matrix = np.array(
        [
            [a * a / (p.mu * p.mu), a * b / p.mu],
            [a * b / p.mu, b * b],
        ]
    )

    def mass_map(m: MassPair) -> np.ndarray:
        return np.array([p.mu * m.theta1 / a, m.theta2 / b])

    return matrix, mass_map


def _is_admissible(aux: AuxiliaryParams, m: MassPair, p: Parameters) -> bool:
    if not (aux.a > p.chi1 and aux.b > p.chi2):
        return False
    if m.theta1 > EIGHT_PI * p.mu / aux.a or m.theta2 > EIGHT_PI / aux.b:
        return False
    total_sq = (m.theta1 + m.theta2) ** 2
    residual = EIGHT_PI * (p.mu * m.theta1 / aux.a + m.theta2 / aux.b) - total_sq
    return abs(residual) <= REL_TOL * (1.0 + total_sq)


def find_admissible_params(m: MassPair, p: Parameters) -> AuxiliaryParams | None:
    """Search for an auxiliary pair (a, b) satisfying the existence conditions.

    The constraints are a > chi1, b > chi2, theta1 <= 8*pi*mu/a,
    theta2 <= 8*pi/b, and the mass identity
    8*pi*(mu*theta1/a + theta2/b) = (theta1 + theta2)^2.

    In the variables x = 1/a, y = 1/b the identity is a straight line and
    every other constraint is a half-plane, so feasibility reduces to a 1-D
    interval intersection solved in closed form.  The returned point is the
    midpoint of the feasible segment, maximizing margin from the strict
    inequalities.  A pair exists exactly when the masses classify as
    GlobalExistence; ``None`` is returned otherwise.

    Raises
    ------
    ValueError
        If both masses vanish (degenerate input).
    """
    if m.theta1 + m.theta2 <= 0.0:
        raise ValueError("at least one mass must be positive")

    if m.theta1 == 0.0:
        # The identity collapses to b = 8*pi/theta2; any a > chi1 works.
        candidate = AuxiliaryParams(a=p.chi1 + 1.0, b=EIGHT_PI / m.theta2)
        return candidate if _is_admissible(candidate, m, p) else None
    if m.theta2 == 0.0:
        candidate = AuxiliaryParams(a=EIGHT_PI * p.mu / m.theta1, b=p.chi2 + 1.0)
        return candidate if _is_admissible(candidate, m, p) else None

    total_sq = (m.theta1 + m.theta2) ** 2
    cx = EIGHT_PI * p.mu * m.theta1  # line: cx * x + cy * y = total_sq
    cy = EIGHT_PI * m.theta2

    # Closed bounds come from the mass caps, open bounds from (a, b) strictness.
    x_lo_closed = m.theta1 / (EIGHT_PI * p.mu)
    x_lo_open = (total_sq - cy / p.chi2) / cx
    x_hi_closed = (total_sq - m.theta2**2) / cx
    x_hi_open = 1.0 / p.chi1

    x_lo = max(x_lo_closed, x_lo_open)
    x_hi = min(x_hi_closed, x_hi_open)
    if x_lo > x_hi:
        return None

    x = 0.5 * (x_lo + x_hi)
    y = (total_sq - cx * x) / cy
    if x <= 0.0 or y <= 0.0:
        return None
    candidate = AuxiliaryParams(a=1.0 / x, b=1.0 / y)
    return candidate if _is_admissible(candidate, m, p) else None
