"""
Figure Module
Données tabulaires des figures (le tracé reste à l'outil externe)
"""

import logging
from typing import Dict, List, Tuple

import numpy as np
from rich.progress import Progress, SpinnerColumn, BarColumn, TextColumn, TimeRemainingColumn

from modules.analytic import (
    lambda_hat_grid,
    objective_grid,
    weighted_dominant_terms,
)
from modules.config import RunConfig
from modules.model import (
    BitChannelModel,
    admissible_axis_limits,
    effective_probs,
)
from modules.output_writer import Table, emit_run
from modules.simulate import sweep_error_bounds

logger = logging.getLogger(__name__)

ML_ME_P = 0.7
ML_ME_PSI_SET = [(0.0, 0.0), (0.05, 0.05), (0.0, 0.2)]
ML_ME_BOUNDS = tuple(np.logspace(-10, -3, 10))
SIM_SYMMETRIC_PSI_SET = [(0.0, 0.0), (0.05, 0.05)]
SIM_OPTIMAL_PSI_SET = [(0.0, 0.1), (0.0, 0.05)]
SIM_BOUNDS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
GRID_RESOLUTION = 101

SIM_COLUMNS = [
    'psi0', 'psi1', 'error_bound',
    'ess_lfc', 'ess_lfc_stderr', 'ess_efc', 'ess_efc_stderr',
    'fa_lfc', 'miss_lfc', 'fa_efc', 'miss_efc',
    'asymptotic_lfc', 'asymptotic_efc', 'm_a', 'm_b',
]


def admissible_box(model: BitChannelModel, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Dense grid over [0, psi0 limit] x [0, psi1 limit], flattened row-major."""
    psi0_limit, psi1_limit = admissible_axis_limits(model)
    psi0, psi1 = np.meshgrid(np.linspace(0.0, psi0_limit, resolution),
                             np.linspace(0.0, psi1_limit, resolution), indexing='ij')
    return psi0.ravel(), psi1.ravel()


class FigureMixin:
    """Une méthode par figure; chacune rend une Table"""

    FIGURE_TITLES = {
        'fig_ml_me': "Dominant terms M_L and M_E versus the error bound",
        'fig_lambda0_contour': "LFC delay lambda0 over the admissible box",
        'fig_lambda1_contour': "LFC delay lambda1 over the admissible box",
        'fig_objective_surface': "Objective over the admissible box",
        'fig_objective_contour': "Objective with the delay-feasible set",
        'fig_sim_symmetric': "Monte Carlo ESS, no and symmetric encryption",
        'fig_sim_optimal': "Monte Carlo ESS, optimal and non-optimal encryption",
    }

    def figure(self, config: RunConfig) -> Dict:
        name = config.figure_name
        builder = getattr(self, f"_{name}")
        self.show(f"[bold cyan]📈 {self.FIGURE_TITLES[name]}[/bold cyan]")
        table, results = builder(config)
        table.comments.setdefault('figure', name)
        paths, manifest = emit_run(config.output_dir, name, 'figure',
                                   config.to_dict(), [table], results)
        self.show(f"[green]✅ Data: {paths[0]} ({table.rows.shape[0]} rows)[/green]\n"
                  f"[dim]Manifest: {manifest}[/dim]")
        results['path'] = paths[0]
        results['manifest'] = manifest
        return results

    # -- analytic figures ------------------------------------------------

    def _fig_ml_me(self, config: RunConfig):
        model = config.bit_model(default_p=ML_ME_P)
        priors = config.priors()
        psi_set = [tuple(pair) for pair in config.psi_set] if config.psi_set else ML_ME_PSI_SET
        bounds = config.sweep or list(ML_ME_BOUNDS)
        records = []
        for (psi0, psi1), enc in zip(psi_set, config.admissible_encryptions(model, psi_set)):
            eff = effective_probs(model, enc)
            for bound in bounds:
                m_l, m_e = weighted_dominant_terms(eff, bound, priors)
                records.append([psi0, psi1, bound, m_l, m_e])
        table = Table.from_records('fig_ml_me', ['psi0', 'psi1', 'error_bound', 'M_L', 'M_E'],
                                   records, {'p': model.p, 'pi0': priors.pi0})
        return table, {'psi_set': [list(p) for p in psi_set], 'bounds': list(bounds)}

    def _lambda_contour(self, config: RunConfig, i: int):
        model = config.bit_model()
        psi0, psi1 = admissible_box(model, config.resolution or GRID_RESOLUTION)
        value = lambda_hat_grid(model, psi0, psi1)[i]
        name = f'fig_lambda{i}_contour'
        table = Table.from_records(name, ['psi0', 'psi1', 'value'],
                                   np.column_stack([psi0, psi1, value]), {'p': model.p})
        return table, {'grid_points': int(psi0.size)}

    def _fig_lambda0_contour(self, config: RunConfig):
        return self._lambda_contour(config, 0)

    def _fig_lambda1_contour(self, config: RunConfig):
        return self._lambda_contour(config, 1)

    def _fig_objective_surface(self, config: RunConfig):
        model = config.bit_model()
        psi0, psi1 = admissible_box(model, config.resolution or GRID_RESOLUTION)
        value = objective_grid(model, psi0, psi1, config.targets(), config.priors())
        table = Table.from_records('fig_objective_surface', ['psi0', 'psi1', 'value'],
                                   np.column_stack([psi0, psi1, value]),
                                   {'p': model.p, 'alpha': config.alpha, 'beta': config.beta})
        return table, {'grid_points': int(psi0.size)}

    def _fig_objective_contour(self, config: RunConfig):
        model = config.bit_model()
        tol = config.tolerance()
        psi0, psi1 = admissible_box(model, config.resolution or GRID_RESOLUTION)
        value = objective_grid(model, psi0, psi1, config.targets(), config.priors())
        lam0, lam1 = lambda_hat_grid(model, psi0, psi1)
        with np.errstate(invalid='ignore'):
            feasible = ((lam0 <= tol.kappa0) & (lam1 <= tol.kappa1)).astype(float)
        table = Table.from_records(
            'fig_objective_contour', ['psi0', 'psi1', 'value', 'lambda0', 'lambda1', 'feasible'],
            np.column_stack([psi0, psi1, value, lam0, lam1, feasible]),
            {'p': model.p, 'kappa0': tol.kappa0, 'kappa1': tol.kappa1})
        return table, {'grid_points': int(psi0.size), 'feasible_points': int(feasible.sum())}

    # -- Monte Carlo figures ----------------------------------------------

    def _simulated_sweep(self, config: RunConfig, name: str, default_set: List[Tuple[float, float]]):
        model = config.bit_model()
        priors = config.priors()
        psi_set = [tuple(pair) for pair in config.psi_set] if config.psi_set else default_set
        bounds = config.sweep or list(SIM_BOUNDS)
        records = []
        encryptions = config.admissible_encryptions(model, psi_set)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total} bounds"),
            TimeRemainingColumn(),
            console=self.progress_console,
        ) as progress:
            for (psi0, psi1), enc in zip(psi_set, encryptions):
                task_id = progress.add_task(f"Psi = [{psi0}, {psi1}]", total=len(bounds))
                rows = sweep_error_bounds(
                    model, enc, bounds, priors,
                    replications=config.replications, seed=config.seed, workers=config.workers,
                    lfc_threshold_rule=config.lfc_threshold_rule,
                    efc_threshold_rule=config.efc_threshold_rule, max_steps=config.max_steps,
                    progress_callback=lambda done, total, stats, t=task_id: progress.update(t, completed=done))
                for row in rows:
                    records.append([
                        psi0, psi1, row.bound,
                        row.ess_lfc.mean, row.ess_lfc.stderr, row.ess_efc.mean, row.ess_efc.stderr,
                        row.fa_lfc, row.miss_lfc, row.fa_efc, row.miss_efc,
                        row.asymptotic_lfc, row.asymptotic_efc,
                        row.thresholds.m_a, row.thresholds.m_b,
                    ])
        table = Table.from_records(name, SIM_COLUMNS, records,
                                   {'p': model.p, 'replications': config.replications,
                                    'seed': config.seed})
        return table, {'psi_set': [list(p) for p in psi_set], 'bounds': list(bounds)}

    def _fig_sim_symmetric(self, config: RunConfig):
        return self._simulated_sweep(config, 'fig_sim_symmetric', SIM_SYMMETRIC_PSI_SET)

    def _fig_sim_optimal(self, config: RunConfig):
        return self._simulated_sweep(config, 'fig_sim_optimal', SIM_OPTIMAL_PSI_SET)
