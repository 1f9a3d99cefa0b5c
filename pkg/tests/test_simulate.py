import math

import numpy as np
import pytest

from modules.analytic import ErrorTargets, efc_exact_ess, lfc_llr_values
from modules.core import EstimationError, InvalidArgumentError
from modules.model import BitChannelModel, EncryptionParams, Priors, effective_probs
from modules.parallel_runner import ParallelRunner, split_replications
from modules.simulate import (
    Decision,
    Hypothesis,
    LlrSpec,
    Scenario,
    exact_efc_reference,
    monte_carlo,
    prior_weighted_ess,
    replication_stream,
    resolve_thresholds,
    run_paired_trial,
    run_sprt_path,
    sweep_error_bounds,
)

ETA_07 = math.log(7.0 / 3.0)
ALPHA_THREE_STEPS = 2.375 / 10.390625


def three_step_scenario(replications: int, **kwargs) -> Scenario:
    """p~ = 0.6, q~ = 0.4 with three steps to either barrier of the mismatched test."""
    return Scenario(
        model=BitChannelModel.from_p(0.7),
        enc=EncryptionParams(0.25, 0.25),
        targets=ErrorTargets.symmetric(0.2),
        hypothesis=Hypothesis.H0,
        replications=replications,
        efc_steps=(3, 3),
        **kwargs,
    )


class TestStreams:
    def test_replication_is_reproducible(self):
        a = replication_stream(42, 7).random(5)
        b = replication_stream(42, 7).random(5)
        assert np.array_equal(a, b)

    def test_streams_are_distinct(self):
        base = replication_stream(42, 7).random(5)
        assert not np.array_equal(base, replication_stream(42, 8).random(5))
        assert not np.array_equal(base, replication_stream(43, 7).random(5))
        assert not np.array_equal(base, replication_stream(42, 7, stream_key=(1,)).random(5))


class TestSinglePath:
    def test_first_step_always_exits(self):
        rng = replication_stream(0, 0)
        for _ in range(20):
            outcome = run_sprt_path(LlrSpec(1.0, -1.0, 0.5), -0.5, 0.5, rng)
            assert outcome.steps == 1
            assert outcome.decision in (Decision.ACCEPT_H0, Decision.ACCEPT_H1)

    def test_upper_exit_frequency(self):
        spec = LlrSpec(ETA_07, -ETA_07, 0.4)
        n = 20_000
        upper = sum(
            run_sprt_path(spec, -3 * ETA_07, 3 * ETA_07, replication_stream(3, r)).decision
            == Decision.ACCEPT_H1
            for r in range(n)
        )
        stderr = math.sqrt(ALPHA_THREE_STEPS * (1 - ALPHA_THREE_STEPS) / n)
        assert abs(upper / n - ALPHA_THREE_STEPS) <= 3 * stderr

    def test_truncation(self):
        outcome = run_sprt_path(LlrSpec(1.0, -1.0, 0.5), -1e9, 1e9, replication_stream(0, 0),
                                max_steps=100)
        assert outcome.decision is Decision.TRUNCATED
        assert outcome.steps == 100

    def test_bounds_must_straddle_zero(self):
        with pytest.raises(InvalidArgumentError):
            run_sprt_path(LlrSpec(1.0, -1.0, 0.5), 0.5, 1.0, replication_stream(0, 0))

    def test_llr_spec_validation(self):
        with pytest.raises(InvalidArgumentError):
            LlrSpec(1.0, -1.0, 1.0)


class TestPairedTrial:
    def test_symmetric_encryption_stops_together(self):
        model = BitChannelModel.from_p(0.7)
        enc = EncryptionParams(0.05, 0.05)
        eff = effective_probs(model, enc)
        bounds = (5 * eff.eta_tilde, 4 * eff.eta_tilde)
        for r in range(200):
            outcome = run_paired_trial(model, enc, bounds, (5, 4), replication_stream(9, r),
                                       hypothesis=r % 2)
            assert outcome.lfc == outcome.efc

    def test_each_detector_matches_its_single_path(self):
        model = BitChannelModel.from_p(0.7)
        enc = EncryptionParams(0.0, 0.1)
        eff = effective_probs(model, enc)
        lfc_spec = LlrSpec(*lfc_llr_values(eff), eff.q_tilde)
        efc_spec = LlrSpec(ETA_07, -ETA_07, eff.q_tilde)
        for r in range(100):
            paired = run_paired_trial(model, enc, (4.0, 6.0), (3, 5), replication_stream(12, r))
            assert paired.lfc == run_sprt_path(lfc_spec, -4.0, 6.0, replication_stream(12, r))
            assert paired.efc == run_sprt_path(efc_spec, -3 * ETA_07, 5 * ETA_07, replication_stream(12, r))

    def test_rejects_bad_steps(self):
        with pytest.raises(InvalidArgumentError):
            run_paired_trial(BitChannelModel.from_p(0.7), EncryptionParams(), (1.0, 1.0), (0, 2),
                             replication_stream(0, 0))

    def test_pathwise_equality_over_many_paths(self):
        scenario = Scenario(
            model=BitChannelModel.from_p(0.7),
            enc=EncryptionParams(0.05, 0.05),
            targets=ErrorTargets.symmetric(1e-3),
            replications=10_000,
            seed=1,
            lfc_threshold_rule='lattice',
        )
        estimate = monte_carlo(scenario)
        assert estimate.stopping_time_mismatches == 0
        assert estimate.decision_mismatches == 0
        assert estimate.lfc.truncated_count == 0


class TestMonteCarlo:
    def test_matches_exact_mismatched_test(self):
        estimate = monte_carlo(three_step_scenario(20_000, seed=5))
        ess = estimate.efc.ess_h0
        fa = estimate.efc.fa_rate
        assert abs(ess.mean - 8.14286) <= 3 * ess.stderr
        assert abs(fa.mean - ALPHA_THREE_STEPS) <= 3 * fa.stderr
        assert estimate.efc.ess_h1 is None
        assert estimate.efc.miss_rate is None

    @pytest.mark.slow
    def test_matches_exact_mismatched_test_deep(self):
        estimate = monte_carlo(three_step_scenario(100_000, seed=6, workers=4))
        ess = estimate.efc.ess_h0
        fa = estimate.efc.fa_rate
        exact = efc_exact_ess(effective_probs(BitChannelModel.from_p(0.7), EncryptionParams(0.25, 0.25)), 3, 3)
        assert abs(ess.mean - exact.under_h0) <= 3 * ess.stderr
        assert abs(fa.mean - ALPHA_THREE_STEPS) <= 3 * fa.stderr

    def test_independent_of_worker_count(self):
        serial = monte_carlo(three_step_scenario(2_000, seed=8, chunk_size=300))
        threaded = monte_carlo(three_step_scenario(2_000, seed=8, chunk_size=300, workers=3))
        assert serial == threaded

    def test_seed_changes_results(self):
        a = monte_carlo(three_step_scenario(1_000, seed=1))
        b = monte_carlo(three_step_scenario(1_000, seed=2))
        assert a.efc.ess_h0.mean != b.efc.ess_h0.mean

    def test_prior_mixed_covers_both_hypotheses(self):
        scenario = Scenario(
            model=BitChannelModel.from_p(0.7),
            enc=EncryptionParams(0.25, 0.25),
            targets=ErrorTargets.symmetric(0.2),
            priors=Priors(0.3, 0.7),
            replications=4_000,
            efc_steps=(3, 3),
        )
        estimate = monte_carlo(scenario)
        n0 = estimate.efc.ess_h0.count
        n1 = estimate.efc.ess_h1.count
        assert n0 + n1 == 4_000
        assert n1 / 4_000 == pytest.approx(0.7, abs=0.03)
        weighted = prior_weighted_ess(estimate.efc, scenario.priors)
        assert weighted.mean == pytest.approx(0.3 * estimate.efc.ess_h0.mean + 0.7 * estimate.efc.ess_h1.mean)

    def test_prior_weighted_needs_both_hypotheses(self):
        estimate = monte_carlo(three_step_scenario(200))
        with pytest.raises(InvalidArgumentError):
            prior_weighted_ess(estimate.efc, Priors())

    def test_all_truncated_is_an_error(self):
        scenario = Scenario(
            model=BitChannelModel.from_p(0.7),
            enc=EncryptionParams(),
            targets=ErrorTargets.symmetric(1e-6),
            replications=50,
            max_steps=1,
        )
        with pytest.raises(EstimationError):
            monte_carlo(scenario)

    def test_scenario_validation(self):
        with pytest.raises(InvalidArgumentError):
            three_step_scenario(0)
        with pytest.raises(InvalidArgumentError):
            three_step_scenario(10, lfc_threshold_rule='exact')

    def test_threshold_rules(self):
        exact = resolve_thresholds(Scenario(
            model=BitChannelModel.from_p(0.6), enc=EncryptionParams(),
            targets=ErrorTargets.symmetric(0.05)))
        assert (exact.m_a, exact.m_b) == (8, 8)
        assert exact.a_l == pytest.approx(math.log(19.0))
        lattice = resolve_thresholds(Scenario(
            model=BitChannelModel.from_p(0.6), enc=EncryptionParams(),
            targets=ErrorTargets.symmetric(0.05), lfc_threshold_rule='lattice'))
        assert lattice.b_l == pytest.approx(8 * math.log(1.5))

    @pytest.mark.parametrize("flip", [0.0, 0.1, 0.2, 0.25, 0.3])
    def test_false_alarm_rate_matches_exact_errors(self, flip):
        model = BitChannelModel.from_p(0.7)
        enc = EncryptionParams(flip, flip)
        n = 10_000
        estimate = monte_carlo(Scenario(
            model=model, enc=enc, targets=ErrorTargets.symmetric(0.2), hypothesis=Hypothesis.H0,
            replications=n, seed=21, efc_steps=(3, 4)))
        alpha_e, _ = exact_efc_reference(model, enc, 3, 4)
        stderr = math.sqrt(alpha_e * (1 - alpha_e) / n)
        assert abs(estimate.efc.fa_rate.mean - alpha_e) <= 3 * stderr

    def test_exact_reference(self):
        alpha_e, beta_e = exact_efc_reference(BitChannelModel.from_p(0.7), EncryptionParams(0.25, 0.25), 3, 3)
        assert alpha_e == pytest.approx(ALPHA_THREE_STEPS)
        assert beta_e == pytest.approx(ALPHA_THREE_STEPS)


class TestSweep:
    def test_rows_per_bound(self):
        calls = []
        rows = sweep_error_bounds(
            BitChannelModel.from_p(0.7), EncryptionParams(0.0, 0.1), [1e-1, 1e-3], Priors(),
            replications=500, seed=3, progress_callback=lambda done, total, stats: calls.append((done, total)))
        assert [row.bound for row in rows] == [1e-1, 1e-3]
        assert calls == [(1, 2), (2, 2)]
        assert rows[1].ess_efc.mean > rows[0].ess_efc.mean
        assert rows[1].ess_lfc.mean > rows[0].ess_lfc.mean
        for row in rows:
            assert row.asymptotic_efc > row.asymptotic_lfc
            assert row.truncated == 0

    def test_asymmetric_gap_widens_with_deeper_bounds(self):
        rows = sweep_error_bounds(
            BitChannelModel.from_p(0.7), EncryptionParams(0.0, 0.1), [1e-1, 1e-6], Priors(),
            replications=4_000, seed=5)
        loose, deep = rows
        assert deep.ess_efc.mean - deep.ess_lfc.mean > loose.ess_efc.mean - loose.ess_lfc.mean
        assert deep.asymptotic_efc - deep.asymptotic_lfc > loose.asymptotic_efc - loose.asymptotic_lfc

    def test_symmetric_lattice_sweep_overlaps(self):
        rows = sweep_error_bounds(
            BitChannelModel.from_p(0.7), EncryptionParams(0.05, 0.05), [1e-2], Priors(),
            replications=500, seed=4, lfc_threshold_rule='lattice')
        assert rows[0].ess_lfc == rows[0].ess_efc
        assert rows[0].asymptotic_efc == pytest.approx(rows[0].asymptotic_lfc)


class TestParallelRunner:
    def test_split(self):
        tasks = split_replications(2_500, 1_000)
        assert [t.size for t in tasks] == [1_000, 1_000, 500]
        assert [t.chunk_index for t in tasks] == [0, 1, 2]

    def test_results_sorted_and_failures_reported(self):
        def work(task):
            if task.chunk_index == 2:
                raise RuntimeError("boom")
            return task.size

        runner = ParallelRunner(work, num_workers=3)
        results = runner.run(split_replications(1_000, 100))
        assert [r.chunk_index for r in results] == list(range(10))
        assert [r.success for r in results].count(False) == 1
        assert results[2].error_message == "boom"
        stats = runner.get_statistics()
        assert stats['completed'] == 9
        assert stats['failed'] == 1
        assert stats['replications_done'] == 900

    def test_progress_callback(self):
        seen = []
        ParallelRunner(lambda task: None, num_workers=2).run(
            split_replications(10, 5), progress_callback=lambda done, total, stats: seen.append((done, total)))
        assert seen[-1] == (2, 2)
