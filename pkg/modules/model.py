"""
Channel and encryption domain types.

A quantized sensor emits i.i.d. bits with P{1|H1} = p and P{1|H0} = q. The
encryption channel flips a 0 to 1 with probability psi0 and a 1 to 0 with
probability psi1 before the bits reach the fusion centers.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

from scipy.stats import norm

from modules.core import InvalidArgumentError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
ADMISSIBLE_MARGIN = 1e-12


def _check_probability(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class BitChannelModel:
    """Bernoulli bit probabilities under H1 (p) and H0 (q)."""
    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.q < 0.5 < self.p < 1.0):
            raise InvalidArgumentError(
                f"bit model requires 0 < q < 0.5 < p < 1, got p={self.p}, q={self.q}")
        if abs(self.p + self.q - 1.0) > SYMMETRY_TOL:
            raise InvalidArgumentError(
                f"bit model requires p + q = 1, got p + q = {self.p + self.q}")

    @classmethod
    def from_p(cls, p: float) -> 'BitChannelModel':
        return cls(p=p, q=1.0 - p)


@dataclass(frozen=True)
class EncryptionParams:
    """Flip probabilities: psi0 for 0 -> 1, psi1 for 1 -> 0."""
    psi0: float = 0.0
    psi1: float = 0.0

    def __post_init__(self):
        _check_probability('psi0', self.psi0)
        _check_probability('psi1', self.psi1)

    @property
    def is_symmetric(self) -> bool:
        return self.psi0 == self.psi1

    def as_tuple(self) -> Tuple[float, float]:
        return (self.psi0, self.psi1)


@dataclass(frozen=True)
class EffectiveModel:
    """Post-encryption bit probabilities and the constants derived from them."""
    p_tilde: float
    q_tilde: float
    eta: float
    eta_tilde: float
    mu: float
    nu: float

    @property
    def admissible(self) -> bool:
        return (self.p_tilde > 0.5 + ADMISSIBLE_MARGIN
                and self.q_tilde < 0.5 - ADMISSIBLE_MARGIN)


@dataclass(frozen=True)
class Priors:
    pi0: float = 0.5
    pi1: float = 0.5

    def __post_init__(self):
        _check_probability('pi0', self.pi0)
        _check_probability('pi1', self.pi1)
        if abs(self.pi0 + self.pi1 - 1.0) > 1e-12:
            raise InvalidArgumentError(
                f"priors must sum to 1, got {self.pi0} + {self.pi1}")

    @classmethod
    def from_pi0(cls, pi0: float) -> 'Priors':
        return cls(pi0=pi0, pi1=1.0 - pi0)


@dataclass(frozen=True)
class ToleranceSpec:
    """Tolerated relative ESS inflation at the legitimate center, per hypothesis."""
    kappa0: float
    kappa1: float

    def __post_init__(self):
        for name, value in (('kappa0', self.kappa0), ('kappa1', self.kappa1)):
            if not value >= 0.0:
                raise InvalidArgumentError(f"{name} must be >= 0, got {value}")

    @property
    def kappa(self) -> float:
        return max(self.kappa0, self.kappa1)

    def for_hypothesis(self, i: int) -> float:
        return self.kappa0 if i == 0 else self.kappa1


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    violations: List[str] = field(default_factory=list)


def gaussian_shift_preset(theta: float, sigma: float) -> BitChannelModel:
    """
    Bit model of the mean-shift detector: N(0, sigma^2) under H0 against
    N(theta, sigma^2) under H1, quantized at the midpoint theta/2.
    """
    if not theta > 0.0:
        raise InvalidArgumentError(f"theta must be positive, got {theta}")
    if not sigma > 0.0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    p = float(norm.cdf(theta / (2.0 * sigma)))
    return BitChannelModel(p=p, q=1.0 - p)


def _log_odds(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return math.copysign(math.inf, x - 0.5)
    return math.log(x / (1.0 - x))


def _odds(x: float) -> float:
    return math.inf if x >= 1.0 else x / (1.0 - x)


def effective_probs(model: BitChannelModel, enc: EncryptionParams) -> EffectiveModel:
    scale = 1.0 - enc.psi0 - enc.psi1
    p_tilde = scale * model.p + enc.psi0
    q_tilde = scale * model.q + enc.psi0
    return EffectiveModel(
        p_tilde=p_tilde,
        q_tilde=q_tilde,
        eta=math.log(model.p / (1.0 - model.p)),
        eta_tilde=_log_odds(p_tilde),
        mu=_odds(p_tilde),
        nu=math.inf if q_tilde <= 0.0 else (1.0 - q_tilde) / q_tilde,
    )


def validate_admissible(model: BitChannelModel, enc: EncryptionParams) -> AdmissibilityReport:
    eff = effective_probs(model, enc)
    violations = []
    if not eff.p_tilde > 0.5 + ADMISSIBLE_MARGIN:
        violations.append(f"p_tilde = {eff.p_tilde:.12g} must exceed 1/2")
    if not eff.q_tilde < 0.5 - ADMISSIBLE_MARGIN:
        violations.append(f"q_tilde = {eff.q_tilde:.12g} must stay below 1/2")
    return AdmissibilityReport(admissible=not violations, violations=violations)


def admissible_axis_limits(model: BitChannelModel) -> Tuple[float, float]:
    """
    Where the admissible region meets each axis: q_tilde reaches 1/2 at
    psi0 = (1-2q)/(2(1-q)) when psi1 = 0, and p_tilde reaches 1/2 at
    psi1 = 1 - 1/(2p) when psi0 = 0.
    """
    psi0_limit = (1.0 - 2.0 * model.q) / (2.0 * (1.0 - model.q))
    psi1_limit = 1.0 - 1.0 / (2.0 * model.p)
    return min(1.0, psi0_limit), min(1.0, psi1_limit)


def require_admissible(model: BitChannelModel, enc: EncryptionParams) -> EffectiveModel:
    """Effective model of an admissible pair; raises otherwise."""
    report = validate_admissible(model, enc)
    if not report.admissible:
        raise InvalidArgumentError(
            f"encryption {enc.as_tuple()} is not admissible: " + "; ".join(report.violations))
    return effective_probs(model, enc)
