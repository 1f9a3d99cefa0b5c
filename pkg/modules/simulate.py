"""
Seeded Monte Carlo engine for the legitimate SPRT and the mismatched SPRT.

Replication r draws from its own PCG64 stream seeded by
SeedSequence(entropy=seed, spawn_key=stream_key + (r,)), so any replication
can be reproduced alone and results do not depend on how the replications
are spread over workers.
"""

import math
import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import partial
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from modules.analytic import (
    DetectorThresholds,
    ErrorTargets,
    efc_asymptotic_ess,
    efc_asymptotic_thresholds,
    efc_exact_errors,
    efc_thresholds_for_targets,
    lattice_lfc_thresholds,
    lfc_asymptotic_ess,
    lfc_llr_values,
    lfc_wald_thresholds,
)
from modules.core import EstimationError, InvalidArgumentError
from modules.model import BitChannelModel, EncryptionParams, Priors, effective_probs
from modules.parallel_runner import ParallelRunner, ReplicationTask, split_replications

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10 ** 7
EXIT_TOL = 1e-9
FIRST_BLOCK = 64
MAX_BLOCK = 1 << 16

LFC_RULES = ('wald', 'lattice')
EFC_RULES = ('exact', 'asymptotic')


class Hypothesis(str, Enum):
    H0 = 'h0'
    H1 = 'h1'
    PRIOR_MIXED = 'prior_mixed'


class Decision(IntEnum):
    TRUNCATED = -1
    ACCEPT_H0 = 0
    ACCEPT_H1 = 1


@dataclass(frozen=True)
class LlrSpec:
    """Two-valued LLR increment: value_if_one with probability prob_one, else value_if_zero."""
    value_if_one: float
    value_if_zero: float
    prob_one: float

    def __post_init__(self):
        if not 0.0 < self.prob_one < 1.0:
            raise InvalidArgumentError(f"prob_one must lie in (0, 1), got {self.prob_one}")


@dataclass(frozen=True)
class PathOutcome:
    decision: Decision
    steps: int


@dataclass(frozen=True)
class PairedOutcome:
    lfc: PathOutcome
    efc: PathOutcome


@dataclass(frozen=True)
class Scenario:
    model: BitChannelModel
    enc: EncryptionParams
    targets: ErrorTargets
    priors: Priors = field(default_factory=Priors)
    hypothesis: Hypothesis = Hypothesis.PRIOR_MIXED
    replications: int = 10_000
    seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    lfc_threshold_rule: str = 'wald'
    efc_threshold_rule: str = 'exact'
    efc_steps: Optional[Tuple[int, int]] = None
    stream_key: Tuple[int, ...] = ()
    workers: int = 1
    chunk_size: int = 2000

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidArgumentError(f"replications must be >= 1, got {self.replications}")
        if self.max_steps < 1:
            raise InvalidArgumentError(f"max_steps must be >= 1, got {self.max_steps}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.lfc_threshold_rule not in LFC_RULES:
            raise InvalidArgumentError(f"unknown LFC threshold rule {self.lfc_threshold_rule!r}")
        if self.efc_threshold_rule not in EFC_RULES:
            raise InvalidArgumentError(f"unknown EFC threshold rule {self.efc_threshold_rule!r}")
        if self.chunk_size < 1:
            raise InvalidArgumentError(f"chunk_size must be >= 1, got {self.chunk_size}")
        object.__setattr__(self, 'hypothesis', Hypothesis(self.hypothesis))


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    count: int


@dataclass(frozen=True)
class PerfEstimate:
    ess_h0: Optional[Estimate]
    ess_h1: Optional[Estimate]
    fa_rate: Optional[Estimate]
    miss_rate: Optional[Estimate]
    truncated_count: int
    replications: int


@dataclass(frozen=True)
class PairedEstimate:
    """Both detectors driven by the same encrypted bit streams."""
    lfc: PerfEstimate
    efc: PerfEstimate
    thresholds: DetectorThresholds
    stopping_time_mismatches: int
    decision_mismatches: int


@dataclass
class ChunkOutcome:
    hypotheses: np.ndarray
    lfc_decisions: np.ndarray
    lfc_steps: np.ndarray
    efc_decisions: np.ndarray
    efc_steps: np.ndarray


# ============================================
# SINGLE PATHS
# ============================================

def replication_stream(seed: int, r: int, stream_key: Sequence[int] = ()) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(stream_key) + (r,))
    return np.random.Generator(np.random.PCG64(sequence))


def _first_exit(path: np.ndarray, lower: float, upper: float) -> Optional[int]:
    hits = np.flatnonzero((path >= upper - EXIT_TOL) | (path <= lower + EXIT_TOL))
    return int(hits[0]) if hits.size else None


def _check_bounds(lower: float, upper: float) -> None:
    if not upper > 0.0 > lower:
        raise InvalidArgumentError(f"thresholds need upper > 0 > lower, got ({lower}, {upper})")


@dataclass
class _PathTracker:
    """One detector's running statistic; advanced block by block on shared bits."""
    value_if_one: float
    value_if_zero: float
    lower: float
    upper: float
    level: float = 0.0
    outcome: Optional[PathOutcome] = None

    def advance(self, bits: np.ndarray, steps_before: int) -> None:
        if self.outcome is not None:
            return
        path = self.level + np.cumsum(np.where(bits, self.value_if_one, self.value_if_zero))
        hit = _first_exit(path, self.lower, self.upper)
        if hit is None:
            self.level = path[-1]
            return
        decision = Decision.ACCEPT_H1 if path[hit] >= self.upper - EXIT_TOL else Decision.ACCEPT_H0
        self.outcome = PathOutcome(decision, steps_before + hit + 1)


def _drive(trackers: List[_PathTracker], prob_one: float, rng: np.random.Generator,
           max_steps: int) -> List[PathOutcome]:
    """Draw bits in doubling blocks until every tracker has exited or max_steps is reached."""
    steps, block = 0, FIRST_BLOCK
    while steps < max_steps and any(t.outcome is None for t in trackers):
        size = min(block, max_steps - steps)
        bits = rng.random(size) < prob_one
        for tracker in trackers:
            tracker.advance(bits, steps)
        steps += size
        block = min(2 * block, MAX_BLOCK)
    if any(t.outcome is None for t in trackers):
        logger.debug("path truncated after %d steps", max_steps)
    truncated = PathOutcome(Decision.TRUNCATED, max_steps)
    return [t.outcome or truncated for t in trackers]


def run_sprt_path(spec: LlrSpec, lower: float, upper: float, rng: np.random.Generator,
                  max_steps: int = DEFAULT_MAX_STEPS) -> PathOutcome:
    """Accumulate the LLR until it leaves (lower, upper) or max_steps bits are used."""
    _check_bounds(lower, upper)
    tracker = _PathTracker(spec.value_if_one, spec.value_if_zero, lower, upper)
    return _drive([tracker], spec.prob_one, rng, max_steps)[0]


def run_paired_trial(model: BitChannelModel, enc: EncryptionParams,
                     lfc_bounds: Tuple[float, float], efc_steps: Tuple[int, int],
                     rng: np.random.Generator, hypothesis: int = 0,
                     max_steps: int = DEFAULT_MAX_STEPS) -> PairedOutcome:
    """
    Feed one encrypted bit stream to both detectors.

    lfc_bounds = (a_l, b_l) bound the matched LLR in (-a_l, b_l); efc_steps =
    (m_a, m_b) bound the mismatched walk, counted in units of eta, in (-m_a, m_b).
    """
    a_l, b_l = lfc_bounds
    m_a, m_b = efc_steps
    _check_bounds(-a_l, b_l)
    if m_a < 1 or m_b < 1:
        raise InvalidArgumentError(f"step thresholds must be >= 1, got {efc_steps}")
    eff = effective_probs(model, enc)
    prob_one = eff.p_tilde if hypothesis == 1 else eff.q_tilde
    if not (0.0 < eff.q_tilde < 1.0 and 0.0 < eff.p_tilde < 1.0):
        raise InvalidArgumentError(f"encrypted bits are deterministic for {enc.as_tuple()}")
    llr_one, llr_zero = lfc_llr_values(eff)

    # the mismatched statistic is +-eta per bit, tracked in whole steps
    lfc = _PathTracker(llr_one, llr_zero, -a_l, b_l)
    efc = _PathTracker(1.0, -1.0, float(-m_a), float(m_b))
    lfc_out, efc_out = _drive([lfc, efc], prob_one, rng, max_steps)
    return PairedOutcome(lfc=lfc_out, efc=efc_out)


# ============================================
# MONTE CARLO
# ============================================

def resolve_thresholds(scenario: Scenario) -> DetectorThresholds:
    """Thresholds both detectors use for a scenario, per its threshold rules."""
    eff = effective_probs(scenario.model, scenario.enc)
    if scenario.efc_steps is not None:
        m_a, m_b = scenario.efc_steps
    elif scenario.efc_threshold_rule == 'exact':
        choice = efc_thresholds_for_targets(eff, scenario.targets)
        m_a, m_b = choice.m_a, choice.m_b
    else:
        m_a, m_b = efc_asymptotic_thresholds(eff, scenario.targets)

    if scenario.lfc_threshold_rule == 'wald':
        a_l, b_l = lfc_wald_thresholds(scenario.targets)
    else:
        a_l, b_l = lattice_lfc_thresholds(eff, m_a, m_b)
    return DetectorThresholds(a_l=a_l, b_l=b_l, m_a=m_a, m_b=m_b)


def _simulate_chunk(scenario: Scenario, thresholds: DetectorThresholds,
                    task: ReplicationTask) -> ChunkOutcome:
    size = task.size
    hyps = np.empty(size, dtype=np.int8)
    lfc_dec = np.empty(size, dtype=np.int8)
    efc_dec = np.empty(size, dtype=np.int8)
    lfc_steps = np.empty(size, dtype=np.int64)
    efc_steps = np.empty(size, dtype=np.int64)
    for k, r in enumerate(range(task.start, task.stop)):
        rng = replication_stream(scenario.seed, r, scenario.stream_key)
        if scenario.hypothesis is Hypothesis.PRIOR_MIXED:
            hyp = int(rng.random() < scenario.priors.pi1)
        else:
            hyp = 1 if scenario.hypothesis is Hypothesis.H1 else 0
        outcome = run_paired_trial(
            scenario.model, scenario.enc,
            (thresholds.a_l, thresholds.b_l), (thresholds.m_a, thresholds.m_b),
            rng, hypothesis=hyp, max_steps=scenario.max_steps)
        hyps[k] = hyp
        lfc_dec[k], lfc_steps[k] = outcome.lfc.decision, outcome.lfc.steps
        efc_dec[k], efc_steps[k] = outcome.efc.decision, outcome.efc.steps
    return ChunkOutcome(hyps, lfc_dec, lfc_steps, efc_dec, efc_steps)


def _mean_estimate(values: np.ndarray) -> Optional[Estimate]:
    n = int(values.size)
    if n == 0:
        return None
    samples = [float(v) for v in values]
    mean = math.fsum(samples) / n
    if n == 1:
        return Estimate(mean, 0.0, 1)
    variance = math.fsum((x - mean) ** 2 for x in samples) / (n - 1)
    return Estimate(mean, math.sqrt(variance / n), n)


def _rate_estimate(hits: np.ndarray) -> Optional[Estimate]:
    n = int(hits.size)
    if n == 0:
        return None
    rate = int(np.count_nonzero(hits)) / n
    return Estimate(rate, math.sqrt(rate * (1.0 - rate) / n), n)


def _summarize(label: str, hyps: np.ndarray, decisions: np.ndarray,
               steps: np.ndarray) -> PerfEstimate:
    done = decisions != Decision.TRUNCATED
    truncated = int(np.count_nonzero(~done))
    if truncated == decisions.size:
        raise EstimationError(f"all {truncated} {label} replications were truncated")
    if truncated:
        logger.warning("%s: %d replications truncated and excluded from the means", label, truncated)
    under_h0 = done & (hyps == 0)
    under_h1 = done & (hyps == 1)
    return PerfEstimate(
        ess_h0=_mean_estimate(steps[under_h0]),
        ess_h1=_mean_estimate(steps[under_h1]),
        fa_rate=_rate_estimate(decisions[under_h0] == Decision.ACCEPT_H1),
        miss_rate=_rate_estimate(decisions[under_h1] == Decision.ACCEPT_H0),
        truncated_count=truncated,
        replications=int(decisions.size),
    )


def monte_carlo(scenario: Scenario,
                progress_callback: Optional[Callable] = None) -> PairedEstimate:
    """Run every replication of a scenario and aggregate both detectors."""
    thresholds = resolve_thresholds(scenario)
    tasks = split_replications(scenario.replications, scenario.chunk_size)
    work = partial(_simulate_chunk, scenario, thresholds)
    logger.debug("monte carlo: %d replications in %d chunks, thresholds %s",
                 scenario.replications, len(tasks), thresholds)

    if scenario.workers <= 1 or len(tasks) == 1:
        payloads = []
        for i, task in enumerate(tasks):
            payloads.append(work(task))
            if progress_callback:
                progress_callback(i + 1, len(tasks), {})
    else:
        results = ParallelRunner(work, scenario.workers).run(tasks, progress_callback)
        failed = [r for r in results if not r.success]
        if failed or len(results) != len(tasks):
            reason = failed[0].error_message if failed else "missing chunk results"
            raise EstimationError(f"monte carlo chunk failed: {reason}")
        payloads = [r.payload for r in results]

    hyps = np.concatenate([c.hypotheses for c in payloads])
    lfc_dec = np.concatenate([c.lfc_decisions for c in payloads])
    lfc_steps = np.concatenate([c.lfc_steps for c in payloads])
    efc_dec = np.concatenate([c.efc_decisions for c in payloads])
    efc_steps = np.concatenate([c.efc_steps for c in payloads])

    return PairedEstimate(
        lfc=_summarize('LFC', hyps, lfc_dec, lfc_steps),
        efc=_summarize('EFC', hyps, efc_dec, efc_steps),
        thresholds=thresholds,
        stopping_time_mismatches=int(np.count_nonzero(lfc_steps != efc_steps)),
        decision_mismatches=int(np.count_nonzero(lfc_dec != efc_dec)),
    )


def _weighted(e0: Estimate, e1: Estimate, priors: Priors) -> Estimate:
    return Estimate(
        mean=priors.pi0 * e0.mean + priors.pi1 * e1.mean,
        stderr=math.sqrt((priors.pi0 * e0.stderr) ** 2 + (priors.pi1 * e1.stderr) ** 2),
        count=e0.count + e1.count,
    )


def prior_weighted_ess(estimate: PerfEstimate, priors: Priors) -> Estimate:
    """pi0 * E0{T} + pi1 * E1{T} with the standard errors combined in quadrature."""
    if estimate.ess_h0 is None or estimate.ess_h1 is None:
        raise InvalidArgumentError("prior-weighted ESS needs estimates under both hypotheses")
    return _weighted(estimate.ess_h0, estimate.ess_h1, priors)


# ============================================
# ERROR-BOUND SWEEPS
# ============================================

@dataclass(frozen=True)
class SweepRow:
    bound: float
    ess_lfc: Estimate
    ess_efc: Estimate
    fa_lfc: float
    miss_lfc: float
    fa_efc: float
    miss_efc: float
    asymptotic_lfc: float
    asymptotic_efc: float
    thresholds: DetectorThresholds
    truncated: int


def sweep_error_bounds(model: BitChannelModel, enc: EncryptionParams, bounds: Sequence[float],
                       priors: Priors, replications: int, seed: int, workers: int = 1,
                       lfc_threshold_rule: str = 'wald', efc_threshold_rule: str = 'exact',
                       max_steps: int = DEFAULT_MAX_STEPS,
                       progress_callback: Optional[Callable] = None) -> List[SweepRow]:
    """
    Prior-weighted ESS of both detectors for alpha* = beta* = bound, one row per
    bound. Each (bound, hypothesis) pair uses its own stream key.
    """
    eff = effective_probs(model, enc)
    rows = []
    for k, bound in enumerate(bounds):
        targets = ErrorTargets.symmetric(bound)
        runs = []
        for h, hypothesis in enumerate((Hypothesis.H0, Hypothesis.H1)):
            scenario = Scenario(
                model=model, enc=enc, targets=targets, priors=priors, hypothesis=hypothesis,
                replications=replications, seed=seed, max_steps=max_steps,
                lfc_threshold_rule=lfc_threshold_rule, efc_threshold_rule=efc_threshold_rule,
                stream_key=(k, h), workers=workers)
            runs.append(monte_carlo(scenario))
        under_h0, under_h1 = runs
        rows.append(SweepRow(
            bound=bound,
            ess_lfc=_weighted(under_h0.lfc.ess_h0, under_h1.lfc.ess_h1, priors),
            ess_efc=_weighted(under_h0.efc.ess_h0, under_h1.efc.ess_h1, priors),
            fa_lfc=under_h0.lfc.fa_rate.mean,
            miss_lfc=under_h1.lfc.miss_rate.mean,
            fa_efc=under_h0.efc.fa_rate.mean,
            miss_efc=under_h1.efc.miss_rate.mean,
            asymptotic_lfc=lfc_asymptotic_ess(eff, targets).weighted(priors),
            asymptotic_efc=efc_asymptotic_ess(eff, targets).weighted(priors),
            thresholds=under_h0.thresholds,
            truncated=(under_h0.lfc.truncated_count + under_h0.efc.truncated_count
                       + under_h1.lfc.truncated_count + under_h1.efc.truncated_count),
        ))
        logger.info("bound %.1e: LFC %.2f, EFC %.2f", bound, rows[-1].ess_lfc.mean, rows[-1].ess_efc.mean)
        if progress_callback:
            progress_callback(k + 1, len(bounds), {})
    return rows


def exact_efc_reference(model: BitChannelModel, enc: EncryptionParams,
                        m_a: int, m_b: int) -> Tuple[float, float]:
    """Exact (alpha_E, beta_E) for the configuration a simulation runs."""
    return efc_exact_errors(effective_probs(model, enc), m_a, m_b)
