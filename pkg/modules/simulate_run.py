"""
Simulate Module
Monte Carlo des deux détecteurs sur les mêmes bits chiffrés
"""

import math
from typing import Dict, Optional

from rich.table import Table as RichTable
from rich.progress import Progress, SpinnerColumn, BarColumn, TextColumn, TimeRemainingColumn
from rich import box

from modules.analytic import efc_exact_ess
from modules.config import RunConfig
from modules.model import effective_probs
from modules.output_writer import Table, emit_run
from modules.simulate import (
    Estimate,
    PerfEstimate,
    Scenario,
    exact_efc_reference,
    monte_carlo,
)

SIMULATE_COLUMNS = [
    'detector', 'ess_h0', 'ess_h0_stderr', 'ess_h1', 'ess_h1_stderr',
    'fa_rate', 'fa_rate_stderr', 'miss_rate', 'miss_rate_stderr', 'truncated',
]


def _cells(estimate: Optional[Estimate]):
    if estimate is None:
        return [math.nan, math.nan]
    return [estimate.mean, estimate.stderr]


def _record(detector: int, perf: PerfEstimate):
    return ([detector] + _cells(perf.ess_h0) + _cells(perf.ess_h1)
            + _cells(perf.fa_rate) + _cells(perf.miss_rate) + [perf.truncated_count])


def _fmt(estimate: Optional[Estimate], digits: int = 3) -> str:
    if estimate is None:
        return "-"
    return f"{estimate.mean:.{digits}f} ± {estimate.stderr:.{digits}f}"


class SimulateMixin:
    """Monte Carlo run of one scenario, both detectors driven pathwise together."""

    def build_scenario(self, config: RunConfig) -> Scenario:
        model = config.bit_model()
        enc = config.admissible_encryptions(model)[0]
        return Scenario(
            model=model,
            enc=enc,
            targets=config.targets(),
            priors=config.priors(),
            hypothesis=config.hypothesis,
            replications=config.replications,
            seed=config.seed,
            max_steps=config.max_steps,
            lfc_threshold_rule=config.lfc_threshold_rule,
            efc_threshold_rule=config.efc_threshold_rule,
            workers=config.workers,
        )

    def simulate(self, config: RunConfig) -> Dict:
        scenario = self.build_scenario(config)

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total} chunks"),
            TimeRemainingColumn(),
            console=self.progress_console,
        ) as progress:
            task_id = progress.add_task(f"Simulating {scenario.replications:,} paths", total=None)

            def on_progress(done, total, stats):
                progress.update(task_id, completed=done, total=total)

            estimate = monte_carlo(scenario, progress_callback=on_progress)

        th = estimate.thresholds
        alpha_e, beta_e = exact_efc_reference(scenario.model, scenario.enc, th.m_a, th.m_b)
        results = {
            'thresholds': {'a_l': th.a_l, 'b_l': th.b_l, 'm_a': th.m_a, 'm_b': th.m_b},
            'stopping_time_mismatches': estimate.stopping_time_mismatches,
            'decision_mismatches': estimate.decision_mismatches,
            'efc_exact_alpha': alpha_e,
            'efc_exact_beta': beta_e,
        }
        exact = efc_exact_ess(effective_probs(scenario.model, scenario.enc), th.m_a, th.m_b)
        results['efc_exact_ess'] = [exact.under_h0, exact.under_h1]

        self._show_simulation(estimate, results)

        table = Table.from_records(
            'simulate', SIMULATE_COLUMNS,
            [_record(0, estimate.lfc), _record(1, estimate.efc)],
            {'command': 'simulate', 'detector': '0 = LFC, 1 = EFC', 'seed': scenario.seed})
        paths, manifest = emit_run(config.output_dir, 'simulate', 'simulate',
                                   config.to_dict(), [table], results)
        self.show(f"[green]✅ Data: {paths[0]}[/green]\n[dim]Manifest: {manifest}[/dim]")
        results['estimate'] = estimate
        return results

    def _show_simulation(self, estimate, results: Dict):
        table = RichTable(title="Monte Carlo estimates", box=box.ROUNDED)
        table.add_column("Detector", style="cyan")
        table.add_column("E0{T}", justify="right")
        table.add_column("E1{T}", justify="right")
        table.add_column("False alarm", justify="right")
        table.add_column("Miss", justify="right")
        table.add_column("Truncated", justify="right")
        for label, perf in (("LFC", estimate.lfc), ("EFC", estimate.efc)):
            table.add_row(label, _fmt(perf.ess_h0), _fmt(perf.ess_h1),
                          _fmt(perf.fa_rate, 5), _fmt(perf.miss_rate, 5),
                          str(perf.truncated_count))
        self.show(table)
        self.show(f"[dim]Paths with T_L != T_E: {results['stopping_time_mismatches']}, "
                  f"exact alpha_E = {results['efc_exact_alpha']:.6g}, "
                  f"beta_E = {results['efc_exact_beta']:.6g}[/dim]")
