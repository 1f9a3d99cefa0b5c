"""
Design of the encryption flip probabilities.

For small tolerances the best encryption flips only one kind of bit: it sits
at one of the two axis caps, the largest psi0 (resp. psi1) whose LFC delay
stays within tolerance when the other flip probability is zero. Algorithm 1
computes both caps, checks the conditions under which that holds and keeps
the better corner. grid_search is the brute-force cross-check and fallback.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import bisect

from modules.analytic import (
    ErrorTargets,
    _lambda_kernel,
    gap_gradients_grid,
    lambda_hat_grid,
    objective,
    objective_grid,
)
from modules.core import NoFeasiblePointError, NoRootError
from modules.model import (
    BitChannelModel,
    EncryptionParams,
    Priors,
    ToleranceSpec,
    admissible_axis_limits,
)

logger = logging.getLogger(__name__)

CAP_XTOL = 1e-10
DIAGONAL_BAND = 1e-6
TIE_TOL = 1e-12
DEFAULT_CONDITION_RESOLUTION = 200


class Axis(str, Enum):
    PSI0 = 'psi0'
    PSI1 = 'psi1'


class Binding(str, Enum):
    LAMBDA0 = 'lambda0'
    LAMBDA1 = 'lambda1'


class Method(str, Enum):
    ALGORITHM1 = 'algorithm1'
    GRID_SEARCH = 'grid_search'


@dataclass(frozen=True)
class AxisCaps:
    psi0_cap: float
    psi1_cap: float
    binding_psi0: Binding
    binding_psi1: Binding

    @property
    def corner_psi0(self) -> EncryptionParams:
        return EncryptionParams(psi0=self.psi0_cap, psi1=0.0)

    @property
    def corner_psi1(self) -> EncryptionParams:
        return EncryptionParams(psi0=0.0, psi1=self.psi1_cap)


@dataclass(frozen=True)
class ConditionReport:
    c1_holds: bool
    c2_holds: bool
    c1_margins: Tuple[float, float]
    c2_violations: List[Tuple[float, float]] = field(default_factory=list)
    points_checked: int = 0

    @property
    def holds(self) -> bool:
        return self.c1_holds and self.c2_holds


@dataclass(frozen=True)
class OptResult:
    psi_star: Optional[EncryptionParams]
    objective_value: Optional[float]
    candidate_values: Optional[Tuple[float, float]]
    conditions: Optional[ConditionReport]
    method: Method
    caps: Optional[AxisCaps] = None
    heuristic: bool = False

    @property
    def succeeded(self) -> bool:
        return self.psi_star is not None


def _axis_point(axis: Axis, value: float) -> Tuple[float, float]:
    return (value, 0.0) if axis is Axis.PSI0 else (0.0, value)


def _axis_lambda(model: BitChannelModel, axis: Axis, value: float, i: int) -> float:
    return float(_lambda_kernel(model.p, model.q, *_axis_point(axis, value))[i])


def axis_cap(model: BitChannelModel, tol: ToleranceSpec, axis) -> Tuple[float, Binding]:
    """
    Largest flip probability on `axis` keeping lambda0 <= kappa0 and
    lambda1 <= kappa1, with the constraint that binds.

    Each lambda_i increases along the axis, so its root is bracketed by
    [0, admissibility limit] and found by bisection; the cap is the smaller root.
    """
    axis = Axis(axis)
    psi0_limit, psi1_limit = admissible_axis_limits(model)
    limit = psi0_limit if axis is Axis.PSI0 else psi1_limit

    roots = {}
    suprema = {}
    for i, binding in enumerate((Binding.LAMBDA0, Binding.LAMBDA1)):
        kappa = tol.for_hypothesis(i)
        if kappa == 0.0:
            roots[binding] = 0.0
            continue
        supremum = _axis_lambda(model, axis, limit, i)
        suprema[binding] = supremum
        if kappa >= supremum:
            logger.debug("%s: %s never reaches %.6g on [0, %.6g] (sup %.6g)",
                         axis.value, binding.value, kappa, limit, supremum)
            continue
        roots[binding] = bisect(
            lambda x: _axis_lambda(model, axis, x, i) - kappa, 0.0, limit, xtol=CAP_XTOL)

    if not roots:
        raise NoRootError(
            f"no tolerance is reached on the admissible {axis.value} axis segment [0, {limit:.6g})",
            supremum=min(suprema.values()))

    binding = min(roots, key=lambda b: (roots[b], b is Binding.LAMBDA1))
    logger.debug("%s cap %.10f bound by %s", axis.value, roots[binding], binding.value)
    return roots[binding], binding


def axis_caps(model: BitChannelModel, tol: ToleranceSpec) -> AxisCaps:
    cap0, bind0 = axis_cap(model, tol, Axis.PSI0)
    cap1, bind1 = axis_cap(model, tol, Axis.PSI1)
    return AxisCaps(psi0_cap=cap0, psi1_cap=cap1, binding_psi0=bind0, binding_psi1=bind1)


def check_conditions(model: BitChannelModel, caps: AxisCaps,
                     grid_resolution: int = DEFAULT_CONDITION_RESOLUTION,
                     tol: Optional[ToleranceSpec] = None) -> ConditionReport:
    """
    (C1): each cap stays below the point where the admissible region meets its axis.
    (C2): on the grid over [0, psi0_cap] x [0, psi1_cap], restricted to admissible
    points (and to lambda_i <= kappa_i when tol is given), both per-hypothesis gaps
    decrease in psi0 and increase in psi1 above the diagonal, and the reverse below.
    Points within DIAGONAL_BAND of the diagonal are skipped.
    """
    psi0_limit, psi1_limit = admissible_axis_limits(model)
    margins = (psi0_limit - caps.psi0_cap, psi1_limit - caps.psi1_cap)
    c1 = margins[0] >= 0.0 and margins[1] >= 0.0

    psi0, psi1 = np.meshgrid(np.linspace(0.0, caps.psi0_cap, grid_resolution),
                             np.linspace(0.0, caps.psi1_cap, grid_resolution), indexing='ij')
    lam0, lam1 = lambda_hat_grid(model, psi0, psi1)
    inside = ~np.isnan(lam0)
    if tol is not None:
        inside &= (lam0 <= tol.kappa0 + 1e-12) & (lam1 <= tol.kappa1 + 1e-12)
    above = inside & (psi1 - psi0 > DIAGONAL_BAND)
    below = inside & (psi0 - psi1 > DIAGONAL_BAND)

    bad = np.zeros_like(inside)
    for d0, d1 in gap_gradients_grid(model, psi0, psi1):
        bad |= above & ~((d0 < 0.0) & (d1 > 0.0))
        bad |= below & ~((d0 > 0.0) & (d1 < 0.0))

    violations = [(float(a), float(b)) for a, b in zip(psi0[bad], psi1[bad])]
    if violations:
        logger.warning("(C2) fails at %d of %d grid points", len(violations),
                       int(np.count_nonzero(above | below)))
    if not c1:
        logger.warning("(C1) fails: margins %.6g, %.6g", *margins)
    return ConditionReport(c1_holds=c1, c2_holds=not violations, c1_margins=margins,
                           c2_violations=violations,
                           points_checked=int(np.count_nonzero(above | below)))


def algorithm1(model: BitChannelModel, tol: ToleranceSpec, targets: ErrorTargets,
               priors: Priors, grid_resolution: int = DEFAULT_CONDITION_RESOLUTION) -> OptResult:
    """
    Compute both axis caps, check (C1)/(C2) and return the corner with the larger
    objective. When a condition fails the result carries no psi_star.
    """
    if min(tol.kappa0, tol.kappa1) == 0.0:
        origin = EncryptionParams(0.0, 0.0)
        conditions = ConditionReport(True, True, admissible_axis_limits(model))
        caps = AxisCaps(0.0, 0.0, Binding.LAMBDA0, Binding.LAMBDA0)
        return OptResult(origin, 0.0, (0.0, 0.0), conditions, Method.ALGORITHM1, caps)

    caps = axis_caps(model, tol)
    conditions = check_conditions(model, caps, grid_resolution, tol)
    if not conditions.holds:
        return OptResult(None, None, None, conditions, Method.ALGORITHM1, caps)

    value0 = objective(model, caps.corner_psi0, targets, priors)
    value1 = objective(model, caps.corner_psi1, targets, priors)
    if value0 > value1 + TIE_TOL:
        psi_star, best = caps.corner_psi0, value0
    else:
        psi_star, best = caps.corner_psi1, value1
    logger.info("corner objectives: [%.4f, 0] -> %.6g, [0, %.4f] -> %.6g",
                caps.psi0_cap, value0, caps.psi1_cap, value1)
    return OptResult(psi_star, best, (value0, value1), conditions, Method.ALGORITHM1, caps)


def feasible_grid(model: BitChannelModel, tol: ToleranceSpec, resolution: int):
    """Grid over [0, 1]^2 with the objective-feasibility mask."""
    axis = np.linspace(0.0, 1.0, resolution)
    psi0, psi1 = np.meshgrid(axis, axis, indexing='ij')
    lam0, lam1 = lambda_hat_grid(model, psi0, psi1)
    with np.errstate(invalid='ignore'):
        feasible = (lam0 <= tol.kappa0 + 1e-12) & (lam1 <= tol.kappa1 + 1e-12)
    return psi0, psi1, feasible


def grid_search(model: BitChannelModel, tol: ToleranceSpec, targets: ErrorTargets,
                priors: Priors, resolution: int = 400) -> OptResult:
    """
    Best feasible point of a resolution x resolution grid over [0, 1]^2. Ties go
    to the smaller psi0, then the smaller psi1.
    """
    psi0, psi1, feasible = feasible_grid(model, tol, resolution)
    if not feasible.any():
        raise NoFeasiblePointError(f"no feasible point on a {resolution}x{resolution} grid")
    values = objective_grid(model, psi0, psi1, targets, priors)
    values = np.where(feasible, values, -np.inf)
    best = float(values.max())
    # indexing='ij' with C order puts smaller psi0, then smaller psi1, first
    flat = int(np.flatnonzero(values >= best - TIE_TOL)[0])
    i, j = np.unravel_index(flat, values.shape)
    psi_star = EncryptionParams(float(psi0[i, j]), float(psi1[i, j]))
    return OptResult(psi_star, float(values[i, j]), None, None, Method.GRID_SEARCH)
