"""
Closed-form performance of the legitimate SPRT and the eavesdropper's
mismatched SPRT.

The legitimate center (LFC) knows the encryption and runs a matched SPRT on
the encrypted bits. The eavesdropper (EFC) runs the SPRT of the unencrypted
model, whose statistic moves by +eta / -eta per bit, so its thresholds are
counted in steps of eta and the test is a gambler's-ruin walk.

Every kernel prefixed with an underscore accepts numpy arrays so grids can be
evaluated in one call; the public functions validate their inputs and work on
scalars.
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import rel_entr

from modules.core import InvalidArgumentError, SearchFailureError
from modules.model import (
    BitChannelModel,
    EffectiveModel,
    EncryptionParams,
    Priors,
    require_admissible,
)

logger = logging.getLogger(__name__)

HALF_TOL = 1e-9
SEARCH_CAP = 10 ** 6
FD_STEP = 1e-7


@dataclass(frozen=True)
class ErrorTargets:
    """False-alarm bound alpha and miss bound beta."""
    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta < 1.0):
            raise InvalidArgumentError(
                f"error targets must lie in (0, 1), got alpha={self.alpha}, beta={self.beta}")
        if not self.alpha + self.beta < 1.0:
            raise InvalidArgumentError(
                f"error targets require alpha + beta < 1, got {self.alpha + self.beta}")

    @classmethod
    def symmetric(cls, bound: float) -> 'ErrorTargets':
        return cls(alpha=bound, beta=bound)


@dataclass(frozen=True)
class DetectorThresholds:
    """LFC log-thresholds (-a_l, b_l) and EFC step thresholds (-m_a, m_b)."""
    a_l: float
    b_l: float
    m_a: int
    m_b: int

    def __post_init__(self):
        if not (self.a_l > 0.0 and self.b_l > 0.0):
            raise InvalidArgumentError(
                f"LFC thresholds must be positive, got a_l={self.a_l}, b_l={self.b_l}")
        if self.m_a < 1 or self.m_b < 1:
            raise InvalidArgumentError(
                f"EFC step thresholds must be >= 1, got m_a={self.m_a}, m_b={self.m_b}")


@dataclass(frozen=True)
class EssPair:
    under_h0: float
    under_h1: float

    def weighted(self, priors: Priors) -> float:
        return priors.pi0 * self.under_h0 + priors.pi1 * self.under_h1


@dataclass(frozen=True)
class EfcThresholdChoice:
    """Integer EFC thresholds with the exact error probabilities they realize."""
    m_a: int
    m_b: int
    alpha_e: float
    beta_e: float


# ============================================
# BUILDING BLOCKS
# ============================================

def _kl(x, y):
    return rel_entr(x, y) + rel_entr(1.0 - x, 1.0 - y)


def kl_bernoulli(x: float, y: float) -> float:
    """H(x, y): KL divergence between Bernoulli(x) and Bernoulli(y)."""
    for name, value in (('x', x), ('y', y)):
        if not 0.0 < value < 1.0:
            raise InvalidArgumentError(f"{name} must lie in (0, 1), got {value}")
    return float(_kl(x, y))


def _require_eff_admissible(eff: EffectiveModel) -> None:
    if not eff.admissible:
        raise InvalidArgumentError(
            f"effective model is not admissible: p_tilde={eff.p_tilde}, q_tilde={eff.q_tilde}")


def _check_steps(m_a: int, m_b: int) -> None:
    if int(m_a) != m_a or int(m_b) != m_b or m_a < 1 or m_b < 1:
        raise InvalidArgumentError(f"step thresholds must be integers >= 1, got ({m_a}, {m_b})")


def _ruin_ratio(log_base: float, k: int, n: int) -> float:
    """(b^k - 1) / (b^n - 1) for b = exp(log_base) != 1 and 0 < k < n, without overflow."""
    if log_base < 0.0:
        return math.expm1(k * log_base) / math.expm1(n * log_base)
    return math.exp((k - n) * log_base) * math.expm1(-k * log_base) / math.expm1(-n * log_base)


# ============================================
# LEGITIMATE CENTER
# ============================================

def lfc_wald_thresholds(targets: ErrorTargets) -> Tuple[float, float]:
    """Wald thresholds (a_l, b_l) for the prescribed error bounds."""
    b_l = math.log((1.0 - targets.beta) / targets.alpha)
    a_l = math.log((1.0 - targets.alpha) / targets.beta)
    return a_l, b_l


def lattice_lfc_thresholds(eff: EffectiveModel, m_a: int, m_b: int) -> Tuple[float, float]:
    """
    LFC thresholds m_a*eta_tilde and m_b*eta_tilde. Under symmetric encryption the
    LFC statistic is eta_tilde/eta times the EFC one, so both tests stop together.
    """
    _check_steps(m_a, m_b)
    if abs(eff.p_tilde + eff.q_tilde - 1.0) > 1e-12:
        logger.debug("lattice thresholds on an asymmetric channel (p~ + q~ = %.12g)",
                     eff.p_tilde + eff.q_tilde)
    return m_a * eff.eta_tilde, m_b * eff.eta_tilde


def _lfc_numerators(alpha: float, beta: float) -> Tuple[float, float]:
    n0 = alpha * math.log(alpha / (1.0 - beta)) + (1.0 - alpha) * math.log((1.0 - alpha) / beta)
    n1 = beta * math.log(beta / (1.0 - alpha)) + (1.0 - beta) * math.log((1.0 - beta) / alpha)
    return n0, n1


def lfc_dominant_ess(eff: EffectiveModel, targets: ErrorTargets) -> EssPair:
    _require_eff_admissible(eff)
    n0, n1 = _lfc_numerators(targets.alpha, targets.beta)
    return EssPair(
        under_h0=n0 / kl_bernoulli(eff.q_tilde, eff.p_tilde),
        under_h1=n1 / kl_bernoulli(eff.p_tilde, eff.q_tilde),
    )


def lfc_dominant_partials(eff: EffectiveModel, targets: ErrorTargets) -> np.ndarray:
    """
    Rows i = 0, 1 hold (dM_L^(i)/dalpha, dM_L^(i)/dbeta). All four entries are
    negative whenever alpha + beta < 1.
    """
    _require_eff_admissible(eff)
    a, b = targets.alpha, targets.beta
    slack = 1.0 - a - b
    log_term = -math.log1p(slack / (a * b))
    h0 = kl_bernoulli(eff.q_tilde, eff.p_tilde)
    h1 = kl_bernoulli(eff.p_tilde, eff.q_tilde)
    return np.array([
        [log_term / h0, -slack / (b * (1.0 - b)) / h0],
        [-slack / (a * (1.0 - a)) / h1, log_term / h1],
    ])


def lfc_asymptotic_ess(eff: EffectiveModel, targets: ErrorTargets) -> EssPair:
    """Wald approximations -ln(beta)/H(q~,p~) and -ln(alpha)/H(p~,q~)."""
    _require_eff_admissible(eff)
    return EssPair(
        under_h0=-math.log(targets.beta) / kl_bernoulli(eff.q_tilde, eff.p_tilde),
        under_h1=-math.log(targets.alpha) / kl_bernoulli(eff.p_tilde, eff.q_tilde),
    )


# ============================================
# EAVESDROPPER (MISMATCHED SPRT)
# ============================================

def efc_exact_errors(eff: EffectiveModel, m_a: int, m_b: int) -> Tuple[float, float]:
    """Exact (alpha_E, beta_E) of the +-eta walk with barriers -m_a and +m_b."""
    _check_steps(m_a, m_b)
    n = m_a + m_b
    if abs(eff.q_tilde - 0.5) < HALF_TOL:
        alpha_e = m_a / n
    else:
        alpha_e = _ruin_ratio(math.log(eff.nu), m_a, n)
    if abs(eff.p_tilde - 0.5) < HALF_TOL:
        beta_e = m_b / n
    else:
        beta_e = _ruin_ratio(math.log(eff.mu), m_b, n)
    return alpha_e, beta_e


def efc_exact_ess(eff: EffectiveModel, m_a: int, m_b: int) -> EssPair:
    """Exact expected stopping times of the mismatched SPRT under H0 and H1."""
    alpha_e, beta_e = efc_exact_errors(eff, m_a, m_b)
    n = m_a + m_b
    if abs(eff.q_tilde - 0.5) < HALF_TOL:
        e0 = float(m_a * m_b)
    else:
        e0 = (alpha_e * n - m_a) / (2.0 * eff.q_tilde - 1.0)
    if abs(eff.p_tilde - 0.5) < HALF_TOL:
        e1 = float(m_a * m_b)
    else:
        e1 = ((1.0 - beta_e) * n - m_a) / (2.0 * eff.p_tilde - 1.0)
    return EssPair(under_h0=e0, under_h1=e1)


def efc_thresholds_for_targets(eff: EffectiveModel, targets: ErrorTargets) -> EfcThresholdChoice:
    """
    Smallest integer pair (m_a, m_b) meeting both error targets.

    alpha_E falls with m_b and rises with m_a, beta_E the other way round, so
    raising m_b until alpha_E fits then m_a until beta_E fits, and repeating,
    climbs monotonically to the componentwise-minimal feasible pair.
    """
    _require_eff_admissible(eff)
    m_a, m_b = 1, 1
    steps = 0
    while True:
        alpha_e, beta_e = efc_exact_errors(eff, m_a, m_b)
        if alpha_e <= targets.alpha and beta_e <= targets.beta:
            break
        while alpha_e > targets.alpha:
            m_b += 1
            steps += 1
            alpha_e, beta_e = efc_exact_errors(eff, m_a, m_b)
            if steps > SEARCH_CAP:
                raise SearchFailureError(
                    f"threshold search exceeded {SEARCH_CAP} steps at (m_a={m_a}, m_b={m_b})")
        while beta_e > targets.beta:
            m_a += 1
            steps += 1
            alpha_e, beta_e = efc_exact_errors(eff, m_a, m_b)
            if steps > SEARCH_CAP:
                raise SearchFailureError(
                    f"threshold search exceeded {SEARCH_CAP} steps at (m_a={m_a}, m_b={m_b})")
    logger.debug("EFC thresholds for %s: m_a=%d m_b=%d after %d steps", targets, m_a, m_b, steps)
    return EfcThresholdChoice(m_a=m_a, m_b=m_b, alpha_e=alpha_e, beta_e=beta_e)


def efc_asymptotic_thresholds(eff: EffectiveModel, targets: ErrorTargets) -> Tuple[int, int]:
    """Thresholds from the leading-order maps m_b ~ log_nu(1/alpha), m_a ~ log_mu(1/beta)."""
    _require_eff_admissible(eff)
    m_b = math.ceil(math.log(1.0 / targets.alpha) / math.log(eff.nu))
    m_a = math.ceil(math.log(1.0 / targets.beta) / math.log(eff.mu))
    return max(1, m_a), max(1, m_b)


def _check_error_pair(alpha_e: float, beta_e: float) -> None:
    if not (0.0 < alpha_e < 1.0 and 0.0 < beta_e < 1.0):
        raise InvalidArgumentError(
            f"error probabilities must lie in (0, 1), got ({alpha_e}, {beta_e})")


def efc_dominant_ess(eff: EffectiveModel, alpha_e: float, beta_e: float) -> EssPair:
    _require_eff_admissible(eff)
    _check_error_pair(alpha_e, beta_e)
    ln_mu, ln_nu = math.log(eff.mu), math.log(eff.nu)
    log_mu_inv_beta = math.log(1.0 / beta_e) / ln_mu
    log_nu_inv_alpha = math.log(1.0 / alpha_e) / ln_nu
    m0 = ((1.0 - alpha_e) * log_mu_inv_beta - alpha_e * log_nu_inv_alpha) / (1.0 - 2.0 * eff.q_tilde)
    m1 = ((1.0 - beta_e) * log_nu_inv_alpha - beta_e * log_mu_inv_beta) / (2.0 * eff.p_tilde - 1.0)
    return EssPair(under_h0=m0, under_h1=m1)


def efc_dominant_partials(eff: EffectiveModel, alpha_e: float, beta_e: float) -> np.ndarray:
    """Rows i = 0, 1 hold (dM_E^(i)/dalpha_E, dM_E^(i)/dbeta_E)."""
    _require_eff_admissible(eff)
    _check_error_pair(alpha_e, beta_e)
    ln_mu, ln_nu = math.log(eff.mu), math.log(eff.nu)
    d0 = 1.0 - 2.0 * eff.q_tilde
    d1 = 2.0 * eff.p_tilde - 1.0
    ln_inv_a, ln_inv_b = math.log(1.0 / alpha_e), math.log(1.0 / beta_e)
    return np.array([
        [(1.0 - (ln_nu / ln_mu) * ln_inv_b - ln_inv_a) / (d0 * ln_nu),
         -(1.0 - alpha_e) / (d0 * ln_mu * beta_e)],
        [-(1.0 - beta_e) / (d1 * ln_nu * alpha_e),
         (1.0 - (ln_mu / ln_nu) * ln_inv_a - ln_inv_b) / (d1 * ln_mu)],
    ])


def efc_asymptotic_ess(eff: EffectiveModel, targets: ErrorTargets) -> EssPair:
    _require_eff_admissible(eff)
    return EssPair(
        under_h0=math.log(1.0 / targets.beta) / math.log(eff.mu) / (1.0 - 2.0 * eff.q_tilde),
        under_h1=math.log(1.0 / targets.alpha) / math.log(eff.nu) / (2.0 * eff.p_tilde - 1.0),
    )


def weighted_dominant_terms(eff: EffectiveModel, error: float, priors: Priors) -> Tuple[float, float]:
    """Prior-weighted (M_L, M_E) with every error probability set to `error`."""
    ml = lfc_dominant_ess(eff, ErrorTargets.symmetric(error))
    me = efc_dominant_ess(eff, error, error)
    return ml.weighted(priors), me.weighted(priors)


# ============================================
# DESIGN QUANTITIES (vectorized kernels)
# ============================================

def _encrypt(p, q, psi0, psi1):
    scale = 1.0 - psi0 - psi1
    return scale * p + psi0, scale * q + psi0


def _lambda_kernel(p: float, q: float, psi0, psi1):
    pt, qt = _encrypt(p, q, psi0, psi1)
    lam0 = _kl(q, p) / _kl(qt, pt) - 1.0
    lam1 = _kl(p, q) / _kl(pt, qt) - 1.0
    return lam0, lam1


def _gap_h0_kernel(p: float, q: float, psi0, psi1):
    """[T_E^(0) - T_L^(0)] / ln(1/beta) = 1/G - 1/H with G = (1-2q~) ln(p~/(1-p~))."""
    pt, qt = _encrypt(p, q, psi0, psi1)
    g = (1.0 - 2.0 * qt) * np.log(pt / (1.0 - pt))
    return 1.0 / g - 1.0 / _kl(qt, pt)


def _gap_h1_kernel(p: float, q: float, psi0, psi1):
    """[T_E^(1) - T_L^(1)] / ln(1/alpha)."""
    pt, qt = _encrypt(p, q, psi0, psi1)
    g = (2.0 * pt - 1.0) * np.log((1.0 - qt) / qt)
    return 1.0 / g - 1.0 / _kl(pt, qt)


def _gap_h0_grad_kernel(p: float, q: float, psi0, psi1):
    pt, qt = _encrypt(p, q, psi0, psi1)
    log_mu = np.log(pt / (1.0 - pt))
    g = (1.0 - 2.0 * qt) * log_mu
    h = _kl(qt, pt)
    var_p = pt * (1.0 - pt)
    y1 = (pt - qt) / (var_p * h ** 2) - (1.0 - 2.0 * qt) / (var_p * g ** 2)
    y2 = 2.0 * log_mu / g ** 2 - np.log(pt * (1.0 - qt) / (qt * (1.0 - pt))) / h ** 2
    return (1.0 - p) * y1 + (1.0 - q) * y2, -(p * y1 + q * y2)


def _central_difference(fn: Callable, psi0, psi1, step: float = FD_STEP):
    d0 = (fn(psi0 + step, psi1) - fn(psi0 - step, psi1)) / (2.0 * step)
    d1 = (fn(psi0, psi1 + step) - fn(psi0, psi1 - step)) / (2.0 * step)
    return d0, d1


def lambda_hat(model: BitChannelModel, enc: EncryptionParams) -> Tuple[float, float]:
    """Relative ESS inflation (lambda0, lambda1) of the LFC caused by encryption."""
    require_admissible(model, enc)
    lam0, lam1 = _lambda_kernel(model.p, model.q, enc.psi0, enc.psi1)
    return float(lam0), float(lam1)


def lambda_hat_grad(model: BitChannelModel, enc: EncryptionParams) -> np.ndarray:
    """Rows i = 0, 1 hold the central-difference gradient of lambda_i."""
    require_admissible(model, enc)
    rows = []
    for i in (0, 1):
        d0, d1 = _central_difference(
            lambda a, b: _lambda_kernel(model.p, model.q, a, b)[i], enc.psi0, enc.psi1)
        rows.append([float(d0), float(d1)])
    return np.array(rows)


def lambda_hat_grid(model: BitChannelModel, psi0: np.ndarray, psi1: np.ndarray):
    """lambda0 and lambda1 on a grid; inadmissible points are NaN."""
    with np.errstate(all='ignore'):
        lam0, lam1 = _lambda_kernel(model.p, model.q, psi0, psi1)
    mask = admissible_mask(model, psi0, psi1)
    return np.where(mask, lam0, np.nan), np.where(mask, lam1, np.nan)


def admissible_mask(model: BitChannelModel, psi0: np.ndarray, psi1: np.ndarray) -> np.ndarray:
    pt, qt = _encrypt(model.p, model.q, np.asarray(psi0), np.asarray(psi1))
    return (pt > 0.5 + 1e-12) & (qt < 0.5 - 1e-12)


def objective(model: BitChannelModel, enc: EncryptionParams,
              targets: ErrorTargets, priors: Priors) -> float:
    """Prior-weighted asymptotic ESS gap between the EFC and the LFC."""
    eff = require_admissible(model, enc)
    t_e = efc_asymptotic_ess(eff, targets)
    t_l = lfc_asymptotic_ess(eff, targets)
    return (priors.pi0 * (t_e.under_h0 - t_l.under_h0)
            + priors.pi1 * (t_e.under_h1 - t_l.under_h1))


def objective_grid(model: BitChannelModel, psi0: np.ndarray, psi1: np.ndarray,
                   targets: ErrorTargets, priors: Priors) -> np.ndarray:
    """Objective on a grid; inadmissible points are NaN."""
    with np.errstate(all='ignore'):
        value = (priors.pi0 * math.log(1.0 / targets.beta) * _gap_h0_kernel(model.p, model.q, psi0, psi1)
                 + priors.pi1 * math.log(1.0 / targets.alpha) * _gap_h1_kernel(model.p, model.q, psi0, psi1))
    return np.where(admissible_mask(model, psi0, psi1), value, np.nan)


def objective_grad_h0(model: BitChannelModel, enc: EncryptionParams) -> np.ndarray:
    """Closed-form gradient of [T_E^(0) - T_L^(0)] / ln(1/beta) in (psi0, psi1)."""
    require_admissible(model, enc)
    d0, d1 = _gap_h0_grad_kernel(model.p, model.q, enc.psi0, enc.psi1)
    return np.array([float(d0), float(d1)])


def objective_grad_h0_fd(model: BitChannelModel, enc: EncryptionParams) -> np.ndarray:
    """Central differences of the H0 gap, used to validate the closed form."""
    require_admissible(model, enc)
    d0, d1 = _central_difference(
        lambda a, b: _gap_h0_kernel(model.p, model.q, a, b), enc.psi0, enc.psi1)
    return np.array([float(d0), float(d1)])


def objective_grad_h1(model: BitChannelModel, enc: EncryptionParams) -> np.ndarray:
    """Gradient of [T_E^(1) - T_L^(1)] / ln(1/alpha) by central differences."""
    require_admissible(model, enc)
    d0, d1 = _central_difference(
        lambda a, b: _gap_h1_kernel(model.p, model.q, a, b), enc.psi0, enc.psi1)
    return np.array([float(d0), float(d1)])


def objective_grad(model: BitChannelModel, enc: EncryptionParams,
                   targets: ErrorTargets, priors: Priors) -> np.ndarray:
    return (priors.pi0 * math.log(1.0 / targets.beta) * objective_grad_h0(model, enc)
            + priors.pi1 * math.log(1.0 / targets.alpha) * objective_grad_h1(model, enc))


def gap_gradients_grid(model: BitChannelModel, psi0: np.ndarray, psi1: np.ndarray):
    """
    Per-hypothesis gap gradients on a grid: ((dH0/dpsi0, dH0/dpsi1),
    (dH1/dpsi0, dH1/dpsi1)). H0 uses the closed form, H1 central differences.
    """
    with np.errstate(all='ignore'):
        h0 = _gap_h0_grad_kernel(model.p, model.q, psi0, psi1)
        h1 = _central_difference(
            lambda a, b: _gap_h1_kernel(model.p, model.q, a, b), psi0, psi1)
    return h0, h1


# ============================================
# ORACLE
# ============================================

def dp_absorption_oracle(up_prob: float, m_a: int, m_b: int) -> Tuple[float, float]:
    """
    Solve the first-step recursions of the +-1 walk on -m_a..m_b directly.

    Returns the probability of reaching +m_b before -m_a from 0 and the mean
    absorption time, from one tridiagonal solve over the interior states.
    """
    if not 0.0 < up_prob < 1.0:
        raise InvalidArgumentError(f"up_prob must lie in (0, 1), got {up_prob}")
    _check_steps(m_a, m_b)
    size = m_a + m_b - 1
    banded = np.zeros((3, size))
    banded[0, 1:] = -up_prob
    banded[1, :] = 1.0
    banded[2, :-1] = -(1.0 - up_prob)
    rhs = np.zeros((size, 2))
    rhs[-1, 0] = up_prob
    rhs[:, 1] = 1.0
    solution = solve_banded((1, 1), banded, rhs)
    origin = m_a - 1
    return float(solution[origin, 0]), float(solution[origin, 1])


def lfc_llr_values(eff: EffectiveModel) -> Tuple[float, float]:
    """Per-bit LLR of the matched test on encrypted bits."""
    return (math.log(eff.p_tilde / eff.q_tilde),
            math.log((1.0 - eff.p_tilde) / (1.0 - eff.q_tilde)))
