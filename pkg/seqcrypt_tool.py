import logging
import sys
import argparse
from typing import List, Optional

# Import modular components
from modules.core import (
    SeqCryptCore,
    ConfigError,
    NoRootError,
    SeqCryptError,
    console,
    setup_logging,
)
from modules.config import COMMANDS, FIGURES, RunConfig, build_config
from modules.analyze_run import AnalyzeMixin
from modules.simulate_run import SimulateMixin
from modules.optimize_run import OptimizeMixin
from modules.figure_run import FigureMixin

logger = logging.getLogger(__name__)


class SeqCryptTool(SeqCryptCore, AnalyzeMixin, SimulateMixin, OptimizeMixin, FigureMixin):
    """
    Combined tool using mixins for the four commands.
    Output directory and verbosity come from SeqCryptCore.
    """

    def run(self, config: RunConfig):
        return getattr(self, config.command)(config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Stochastic encryption for quantized sequential detection',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Closed-form report for the Gaussian preset with Psi = [0, 0.1]:
  python seqcrypt_tool.py analyze --theta 1 --sigma 1 --psi1 0.1

  # Paired Monte Carlo, 4 worker threads:
  python seqcrypt_tool.py simulate --p 0.7 --psi0 0.05 --psi1 0.05 --alpha 1e-3 --beta 1e-3 --reps 10000 --workers 4

  # Optimal encryption design:
  python seqcrypt_tool.py optimize --kappa0 0.265 --kappa1 0.2077

  # Figure data, settings from a YAML file:
  python seqcrypt_tool.py figure --figure fig_ml_me --config run.yaml --out ./results
"""
    )

    parser.add_argument('command', nargs='?', default=None, choices=COMMANDS,
                        help='Command to run')
    parser.add_argument('--config', help='YAML file whose keys are RunConfig field names')

    # Model
    parser.add_argument('--p', type=float, help='P(bit = 1 | H1)')
    parser.add_argument('--q', type=float, help='P(bit = 1 | H0), default 1 - p')
    parser.add_argument('--theta', type=float, help='Gaussian shift preset: signal mean')
    parser.add_argument('--sigma', type=float, help='Gaussian shift preset: noise deviation')

    # Encryption, targets, tolerances
    parser.add_argument('--psi0', type=float, help='Flip probability of 0 bits')
    parser.add_argument('--psi1', type=float, help='Flip probability of 1 bits')
    parser.add_argument('--alpha', type=float, help='False alarm target (default: 1e-6)')
    parser.add_argument('--beta', type=float, help='Miss target (default: 1e-6)')
    parser.add_argument('--kappa0', type=float, help='LFC delay tolerance under H0 (default: 0.265)')
    parser.add_argument('--kappa1', type=float, help='LFC delay tolerance under H1 (default: 0.2077)')
    parser.add_argument('--pi0', type=float, help='Prior of H0 (default: 0.5)')

    # Monte Carlo
    parser.add_argument('--reps', dest='replications', type=int, help='Replications (default: 10000)')
    parser.add_argument('--seed', type=int, help='Root seed (default: 0)')
    parser.add_argument('--workers', type=int, help='Worker threads (default: 1)')
    parser.add_argument('--max-steps', dest='max_steps', type=int, help='Truncation length per path')
    parser.add_argument('--hypothesis', choices=['h0', 'h1', 'prior_mixed'],
                        help='Hypothesis driving simulated paths (default: prior_mixed)')
    parser.add_argument('--lfc-thresholds', dest='lfc_threshold_rule', choices=['wald', 'lattice'],
                        help='LFC threshold rule (default: wald)')
    parser.add_argument('--efc-thresholds', dest='efc_threshold_rule', choices=['exact', 'asymptotic'],
                        help='EFC threshold rule (default: exact)')

    # Output
    parser.add_argument('--out', dest='output_path', help='Output directory (default: $SEQCRYPT_OUTPUT_DIR or ./results)')
    parser.add_argument('--figure', dest='figure_name', choices=FIGURES, help='Figure to emit')
    parser.add_argument('--resolution', type=int, help='Grid resolution per axis')
    parser.add_argument('--sweep', nargs='+', type=float, help='Error bounds for the figure sweeps')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    parser.add_argument('--quiet', action='store_true', help='No console output besides errors')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None and args.config is None:
        parser.print_help()
        return 2

    overrides = {k: v for k, v in vars(args).items() if k not in ('config', 'verbose', 'quiet')}
    try:
        config = build_config(overrides, args.config)
    except ConfigError as e:
        console.print(f"[red]❌ Invalid configuration: {e}[/red]")
        return 2

    level = logging.DEBUG if args.verbose else (logging.WARNING if args.quiet else logging.INFO)
    setup_logging(config.output_dir, level)
    logger.info("Running %s (output: %s)", config.command, config.output_dir)

    tool = SeqCryptTool(output_dir=config.output_dir, quiet=args.quiet)
    try:
        tool.run(config)
    except ConfigError as e:
        logger.error("Invalid configuration: %s", e)
        console.print(f"[red]❌ Invalid configuration: {e}[/red]")
        return 2
    except NoRootError as e:
        logger.error("No root: %s (supremum %.6g)", e, e.supremum)
        console.print(f"[red]❌ {type(e).__name__}: {e} (supremum {e.supremum:.6g})[/red]")
        return 1
    except SeqCryptError as e:
        logger.error("%s: %s", type(e).__name__, e)
        console.print(f"[red]❌ {type(e).__name__}: {e}[/red]")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
