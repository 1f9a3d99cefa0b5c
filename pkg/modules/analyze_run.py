"""
Analyze Module
Toutes les quantités analytiques pour un couple (modèle, chiffrement)
"""

from typing import Dict

from rich.table import Table as RichTable
from rich.panel import Panel
from rich import box

from modules.analytic import (
    efc_asymptotic_ess,
    efc_dominant_ess,
    efc_exact_ess,
    efc_thresholds_for_targets,
    lambda_hat,
    lfc_asymptotic_ess,
    lfc_dominant_ess,
    lfc_wald_thresholds,
    objective,
    objective_grad,
)
from modules.config import RunConfig
from modules.model import effective_probs
from modules.output_writer import Table, emit_run

ANALYZE_COLUMNS = [
    'p', 'q', 'psi0', 'psi1', 'alpha', 'beta', 'pi0',
    'p_tilde', 'q_tilde', 'eta', 'eta_tilde', 'mu', 'nu',
    'a_l', 'b_l', 'm_a', 'm_b', 'alpha_e', 'beta_e',
    'M_L0', 'M_L1', 'M_E0', 'M_E1',
    'T_L0', 'T_L1', 'T_E0', 'T_E1', 'E0_T_E', 'E1_T_E',
    'lambda0', 'lambda1', 'objective', 'grad_psi0', 'grad_psi1',
]


class AnalyzeMixin:
    """
    Closed-form report: thresholds, dominant terms, Wald approximations, exact
    EFC sample sizes, LFC delay and the design objective.
    """

    def analyze(self, config: RunConfig) -> Dict:
        model = config.bit_model()
        enc = config.admissible_encryptions(model)[0]
        targets = config.targets()
        priors = config.priors()

        eff = effective_probs(model, enc)
        a_l, b_l = lfc_wald_thresholds(targets)
        choice = efc_thresholds_for_targets(eff, targets)
        m_l = lfc_dominant_ess(eff, targets)
        m_e = efc_dominant_ess(eff, choice.alpha_e, choice.beta_e)
        t_l = lfc_asymptotic_ess(eff, targets)
        t_e = efc_asymptotic_ess(eff, targets)
        exact = efc_exact_ess(eff, choice.m_a, choice.m_b)
        lam0, lam1 = lambda_hat(model, enc)
        value = objective(model, enc, targets, priors)
        grad = objective_grad(model, enc, targets, priors)

        values = {
            'p': model.p, 'q': model.q, 'psi0': enc.psi0, 'psi1': enc.psi1,
            'alpha': targets.alpha, 'beta': targets.beta, 'pi0': priors.pi0,
            'p_tilde': eff.p_tilde, 'q_tilde': eff.q_tilde, 'eta': eff.eta,
            'eta_tilde': eff.eta_tilde, 'mu': eff.mu, 'nu': eff.nu,
            'a_l': a_l, 'b_l': b_l, 'm_a': choice.m_a, 'm_b': choice.m_b,
            'alpha_e': choice.alpha_e, 'beta_e': choice.beta_e,
            'M_L0': m_l.under_h0, 'M_L1': m_l.under_h1,
            'M_E0': m_e.under_h0, 'M_E1': m_e.under_h1,
            'T_L0': t_l.under_h0, 'T_L1': t_l.under_h1,
            'T_E0': t_e.under_h0, 'T_E1': t_e.under_h1,
            'E0_T_E': exact.under_h0, 'E1_T_E': exact.under_h1,
            'lambda0': lam0, 'lambda1': lam1, 'objective': value,
            'grad_psi0': grad[0], 'grad_psi1': grad[1],
        }

        self._show_analysis(values)

        table = Table.from_records('analyze', ANALYZE_COLUMNS,
                                   [[float(values[c]) for c in ANALYZE_COLUMNS]],
                                   {'command': 'analyze'})
        paths, manifest = emit_run(config.output_dir, 'analyze', 'analyze',
                                   config.to_dict(), [table], values)
        self.show(f"[green]✅ Data: {paths[0]}[/green]\n[dim]Manifest: {manifest}[/dim]")
        return values

    def _show_analysis(self, values: Dict):
        table = RichTable(title="LFC vs EFC", box=box.ROUNDED)
        table.add_column("Quantity", style="cyan")
        table.add_column("H0", justify="right")
        table.add_column("H1", justify="right")
        table.add_row("Dominant term M_L", f"{values['M_L0']:.4f}", f"{values['M_L1']:.4f}")
        table.add_row("Dominant term M_E", f"{values['M_E0']:.4f}", f"{values['M_E1']:.4f}")
        table.add_row("Wald approx. T_L", f"{values['T_L0']:.4f}", f"{values['T_L1']:.4f}")
        table.add_row("Leading order T_E", f"{values['T_E0']:.4f}", f"{values['T_E1']:.4f}")
        table.add_row("Exact E{T_E}", f"{values['E0_T_E']:.4f}", f"{values['E1_T_E']:.4f}")
        table.add_row("LFC delay lambda", f"{values['lambda0']:.4f}", f"{values['lambda1']:.4f}")

        self.show(Panel.fit(
            f"p~ = {values['p_tilde']:.6f}   q~ = {values['q_tilde']:.6f}\n"
            f"LFC thresholds (A_L, B_L) = ({values['a_l']:.4f}, {values['b_l']:.4f})\n"
            f"EFC thresholds (m_A, m_B) = ({values['m_a']}, {values['m_b']}), "
            f"realized alpha_E = {values['alpha_e']:.3e}, beta_E = {values['beta_e']:.3e}\n"
            f"Objective = {values['objective']:.6f}",
            title="[bold cyan]Analysis[/bold cyan]"))
        self.show(table)
