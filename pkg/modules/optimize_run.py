"""
Optimize Module
Algorithm 1, avec repli sur la recherche par grille si (C1)/(C2) échouent
"""

from typing import Dict

from rich.table import Table as RichTable
from rich.panel import Panel
from rich import box

from modules.analytic import lambda_hat
from modules.config import RunConfig
from modules.optimize import OptResult, algorithm1, grid_search
from modules.output_writer import Table, emit_run

OPTIMIZE_COLUMNS = ['psi0', 'psi1', 'objective', 'lambda0', 'lambda1', 'selected']
FALLBACK_RESOLUTION = 400


class OptimizeMixin:
    """Maximin encryption design for the configured model and tolerances."""

    def optimize(self, config: RunConfig) -> Dict:
        model = config.bit_model()
        tol = config.tolerance()
        targets = config.targets()
        priors = config.priors()
        resolution = config.resolution or 200

        with self.progress_console.status("[bold cyan]Computing axis caps and checking (C1)/(C2)..."):
            result = algorithm1(model, tol, targets, priors, grid_resolution=resolution)

        records = []
        if result.candidate_values is not None and result.caps is not None:
            for enc, value in ((result.caps.corner_psi0, result.candidate_values[0]),
                               (result.caps.corner_psi1, result.candidate_values[1])):
                lam0, lam1 = lambda_hat(model, enc)
                records.append([enc.psi0, enc.psi1, value, lam0, lam1,
                                float(enc == result.psi_star)])

        final = result
        if not result.succeeded:
            self.show("[yellow]⚠️  (C1)/(C2) do not hold: falling back to grid search "
                      "(heuristic, corner optimality is not guaranteed)[/yellow]")
            with self.progress_console.status(f"[bold cyan]Grid search {FALLBACK_RESOLUTION}x{FALLBACK_RESOLUTION}..."):
                final = grid_search(model, tol, targets, priors, resolution=FALLBACK_RESOLUTION)
            lam0, lam1 = lambda_hat(model, final.psi_star)
            records.append([final.psi_star.psi0, final.psi_star.psi1, final.objective_value,
                            lam0, lam1, 1.0])

        results = self._optimize_results(result, final)
        self._show_optimum(results)

        table = Table.from_records('optimize', OPTIMIZE_COLUMNS, records,
                                   {'command': 'optimize', 'method': results['method']})
        paths, manifest = emit_run(config.output_dir, 'optimize', 'optimize',
                                   config.to_dict(), [table], results)
        self.show(f"[green]✅ Data: {paths[0]}[/green]\n[dim]Manifest: {manifest}[/dim]")
        return results

    @staticmethod
    def _optimize_results(result: OptResult, final: OptResult) -> Dict:
        conditions = result.conditions
        results = {
            'psi_star': [final.psi_star.psi0, final.psi_star.psi1],
            'objective': final.objective_value,
            'method': final.method.value,
            'heuristic': final is not result,
            'c1_holds': conditions.c1_holds,
            'c2_holds': conditions.c2_holds,
            'c1_margins': list(conditions.c1_margins),
            'c2_violations': len(conditions.c2_violations),
        }
        if result.caps is not None:
            results['caps'] = {
                'psi0': result.caps.psi0_cap,
                'psi1': result.caps.psi1_cap,
                'binding_psi0': result.caps.binding_psi0.value,
                'binding_psi1': result.caps.binding_psi1.value,
            }
        if result.candidate_values is not None:
            results['candidate_values'] = list(result.candidate_values)
            low, high = sorted(result.candidate_values)
            if low > 0.0:
                results['candidate_ratio'] = high / low
        return results

    def _show_optimum(self, results: Dict):
        table = RichTable(box=box.SIMPLE)
        table.add_column("Item", style="cyan")
        table.add_column("Value", justify="right")
        if 'caps' in results:
            caps = results['caps']
            table.add_row("psi0 cap", f"{caps['psi0']:.6f} ({caps['binding_psi0']})")
            table.add_row("psi1 cap", f"{caps['psi1']:.6f} ({caps['binding_psi1']})")
        table.add_row("(C1)", "✅" if results['c1_holds'] else "❌")
        table.add_row("(C2)", "✅" if results['c2_holds'] else f"❌ ({results['c2_violations']} points)")
        if 'candidate_ratio' in results:
            table.add_row("Corner ratio", f"{results['candidate_ratio']:.4f}")
        self.show(table)
        psi0, psi1 = results['psi_star']
        style = "yellow" if results['heuristic'] else "green"
        self.show(Panel.fit(
            f"[bold {style}]Psi* = [{psi0:.6f}, {psi1:.6f}][/bold {style}]\n"
            f"objective = {results['objective']:.6f}  ({results['method']})",
            title="[bold cyan]Optimal encryption[/bold cyan]"))

