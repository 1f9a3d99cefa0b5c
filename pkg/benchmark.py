"""
Performance Benchmark Script
Times the closed-form oracle check, the design pipeline and the Monte Carlo engine
"""

import sys
import time

import numpy as np
from rich.console import Console
from rich.table import Table

from modules.analytic import (
    ErrorTargets,
    dp_absorption_oracle,
    efc_exact_errors,
    efc_exact_ess,
)
from modules.model import (
    BitChannelModel,
    EncryptionParams,
    Priors,
    ToleranceSpec,
    effective_probs,
    gaussian_shift_preset,
)
from modules.optimize import algorithm1, grid_search
from modules.simulate import Hypothesis, Scenario, monte_carlo

console = Console()

DESIGN_TOLERANCE = ToleranceSpec(kappa0=0.265, kappa1=0.2077)
TARGETS = ErrorTargets.symmetric(1e-6)


def benchmark_oracle():
    """Closed-form gambler's-ruin quantities against the tridiagonal solve"""
    start = time.time()
    worst = 0.0
    for q_tilde in np.arange(0.05, 0.46, 0.05):
        eff = effective_probs(BitChannelModel.from_p(1.0 - q_tilde), EncryptionParams())
        for m_a in range(1, 13):
            for m_b in range(1, 13):
                alpha_e, beta_e = efc_exact_errors(eff, m_a, m_b)
                ess = efc_exact_ess(eff, m_a, m_b)
                up0, t0 = dp_absorption_oracle(eff.q_tilde, m_a, m_b)
                up1, t1 = dp_absorption_oracle(eff.p_tilde, m_a, m_b)
                worst = max(worst, abs(alpha_e - up0), abs(beta_e - (1.0 - up1)),
                            abs(ess.under_h0 - t0), abs(ess.under_h1 - t1))
    return time.time() - start, f"max |closed form - oracle| = {worst:.2e}"


def benchmark_design():
    """Axis caps, (C1)/(C2) and the corner choice for the Gaussian preset"""
    model = gaussian_shift_preset(1.0, 1.0)
    start = time.time()
    result = algorithm1(model, DESIGN_TOLERANCE, TARGETS, Priors())
    elapsed = time.time() - start
    if not result.succeeded:
        return elapsed, "conditions failed"
    psi = result.psi_star
    return elapsed, f"Psi* = ({psi.psi0:.4f}, {psi.psi1:.4f})"


def benchmark_monte_carlo(replications: int, workers: int):
    """EFC walk with q~ = 0.4 and three steps to each barrier"""
    scenario = Scenario(
        model=BitChannelModel.from_p(0.7),
        enc=EncryptionParams(0.25, 0.25),
        targets=ErrorTargets.symmetric(0.2),
        hypothesis=Hypothesis.H0,
        replications=replications,
        efc_steps=(3, 3),
        workers=workers,
    )
    start = time.time()
    estimate = monte_carlo(scenario)
    elapsed = time.time() - start
    ess = estimate.efc.ess_h0
    return elapsed, f"E0(T_E) = {ess.mean:.4f} ± {ess.stderr:.4f} (exact 8.14286)"


def benchmark_cross_check(resolution: int):
    """Algorithm 1 against the brute-force grid on the Gaussian preset"""
    model = gaussian_shift_preset(1.0, 1.0)
    start = time.time()
    grid = grid_search(model, DESIGN_TOLERANCE, TARGETS, Priors(), resolution=resolution)
    elapsed = time.time() - start
    return elapsed, f"grid maximizer ({grid.psi_star.psi0:.4f}, {grid.psi_star.psi1:.4f})"


def run_full_benchmark(replications: int = 100_000):
    console.print("\n[bold cyan]🚀 SEQCRYPT BENCHMARK[/bold cyan]\n")

    rows = [
        ("Oracle equivalence (9 x 12 x 12)", benchmark_oracle()),
        ("Algorithm 1", benchmark_design()),
        (f"Monte Carlo, {replications:,} paths, 1 worker", benchmark_monte_carlo(replications, 1)),
        (f"Monte Carlo, {replications:,} paths, 4 workers", benchmark_monte_carlo(replications, 4)),
        ("Grid search 400 x 400", benchmark_cross_check(400)),
    ]

    table = Table(title="Benchmark")
    table.add_column("Task", style="cyan")
    table.add_column("Time", style="yellow", justify="right")
    table.add_column("Result", style="green")
    for name, (elapsed, summary) in rows:
        table.add_row(name, f"{elapsed:.2f} s", summary)

    console.print(table)
    console.print()


if __name__ == "__main__":
    if len(sys.argv) > 1:
        try:
            count = int(sys.argv[1])
        except ValueError:
            console.print("[red]Error: Argument must be a number[/red]")
            console.print("Usage: python benchmark.py [replications]")
            sys.exit(1)
        run_full_benchmark(count)
    else:
        run_full_benchmark()
