import os
import logging
from typing import Optional

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

# Load environment variables
load_dotenv()

DEFAULT_OUTPUT_DIR = './results'
TOOL_VERSION = '1.0.0'

console = Console()

_logging_configured = False


def output_dir_default() -> str:
    """Répertoire de sortie par défaut (SEQCRYPT_OUTPUT_DIR ou ./results)"""
    return os.getenv('SEQCRYPT_OUTPUT_DIR', DEFAULT_OUTPUT_DIR)


def setup_logging(output_dir: Optional[str] = None, level: int = logging.INFO) -> None:
    """
    Configure le logging Rich + fichier une seule fois par processus.

    Args:
        output_dir: Répertoire racine; le log va dans <output_dir>/logs/seqcrypt.log
        level: Niveau du logger racine
    """
    global _logging_configured
    if _logging_configured:
        logging.getLogger().setLevel(level)
        return

    log_dir = os.path.join(output_dir or output_dir_default(), 'logs')
    os.makedirs(log_dir, exist_ok=True)

    logging.basicConfig(
        level=level,
        format='%(message)s',
        datefmt="[%X]",
        handlers=[
            logging.FileHandler(os.path.join(log_dir, 'seqcrypt.log')),
            RichHandler(rich_tracebacks=True, console=console)
        ]
    )
    _logging_configured = True


# ============================================
# ERREURS
# ============================================

class SeqCryptError(Exception):
    """Base of every error raised by the seqcrypt library."""


class InvalidArgumentError(SeqCryptError, ValueError):
    """An input violates a documented precondition."""


class NoRootError(SeqCryptError):
    """A tolerance cannot be reached on the admissible segment of an axis."""

    def __init__(self, message: str, supremum: float):
        super().__init__(message)
        self.supremum = supremum


class SearchFailureError(SeqCryptError):
    """Integer threshold search hit its iteration cap."""


class EstimationError(SeqCryptError):
    """Every Monte Carlo replication was truncated."""


class NoFeasiblePointError(SeqCryptError):
    """No grid point satisfies the delay and admissibility constraints."""


class ConfigError(SeqCryptError):
    """Run configuration could not be parsed or validated."""


class SeqCryptCore:
    """
    Base de l'outil: répertoire de sortie et verbosité.
    Les mixins de commandes s'appuient sur ces attributs.
    """

    def __init__(self, output_dir: Optional[str] = None, quiet: bool = False):
        self.output_dir = output_dir or output_dir_default()
        self.quiet = quiet
        self.progress_console = Console(quiet=True) if quiet else console

    def show(self, renderable) -> None:
        if not self.quiet:
            console.print(renderable)
