"""
Run configuration: a YAML document whose keys are RunConfig field names,
overridden by whatever command-line flags were given.
"""

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Sequence

import yaml

from modules.analytic import ErrorTargets
from modules.core import ConfigError, SeqCryptError, output_dir_default
from modules.model import (
    BitChannelModel,
    EncryptionParams,
    Priors,
    ToleranceSpec,
    gaussian_shift_preset,
    validate_admissible,
)
from modules.simulate import DEFAULT_MAX_STEPS, EFC_RULES, LFC_RULES, Hypothesis

logger = logging.getLogger(__name__)

COMMANDS = ('analyze', 'simulate', 'optimize', 'figure')
FIGURES = (
    'fig_ml_me',
    'fig_lambda0_contour',
    'fig_lambda1_contour',
    'fig_objective_surface',
    'fig_objective_contour',
    'fig_sim_symmetric',
    'fig_sim_optimal',
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    p: Optional[float] = None
    q: Optional[float] = None
    theta: Optional[float] = None
    sigma: Optional[float] = None
    psi0: float = 0.0
    psi1: float = 0.0
    alpha: float = 1e-6
    beta: float = 1e-6
    kappa0: float = 0.265
    kappa1: float = 0.2077
    pi0: float = 0.5
    replications: int = 10_000
    seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    hypothesis: str = Hypothesis.PRIOR_MIXED.value
    lfc_threshold_rule: str = 'wald'
    efc_threshold_rule: str = 'exact'
    figure_name: Optional[str] = None
    output_path: Optional[str] = None
    sweep: Optional[List[float]] = None
    psi_set: Optional[List[List[float]]] = None
    resolution: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.command == 'figure' and self.figure_name is None:
            raise ConfigError("command 'figure' requires figure_name")
        if self.command != 'figure' and self.figure_name is not None:
            raise ConfigError("figure_name is only valid with command 'figure'")
        if self.figure_name is not None and self.figure_name not in FIGURES:
            raise ConfigError(f"unknown figure {self.figure_name!r}; expected one of {FIGURES}")
        if (self.p is not None or self.q is not None) and (self.theta is not None or self.sigma is not None):
            raise ConfigError("give either p/q or theta/sigma, not both")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.resolution is not None and self.resolution < 2:
            raise ConfigError(f"resolution must be >= 2, got {self.resolution}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.hypothesis not in {h.value for h in Hypothesis}:
            raise ConfigError(f"unknown hypothesis {self.hypothesis!r}")
        if self.lfc_threshold_rule not in LFC_RULES:
            raise ConfigError(f"unknown LFC threshold rule {self.lfc_threshold_rule!r}")
        if self.efc_threshold_rule not in EFC_RULES:
            raise ConfigError(f"unknown EFC threshold rule {self.efc_threshold_rule!r}")
        if self.psi_set is not None:
            if not all(len(pair) == 2 for pair in self.psi_set):
                raise ConfigError(f"psi_set entries must be [psi0, psi1] pairs, got {self.psi_set}")
            for psi0, psi1 in self.psi_set:
                self._build(EncryptionParams, psi0=psi0, psi1=psi1)
        if self.sweep is not None and not all(0.0 < b < 0.5 for b in self.sweep):
            raise ConfigError(f"sweep bounds must lie in (0, 0.5), got {self.sweep}")
        # build every domain object once so bad values surface here
        self.bit_model()
        self.encryption()
        self.targets()
        self.priors()
        self.tolerance()

    # -- domain objects ------------------------------------------------

    def bit_model(self, default_p: Optional[float] = None) -> BitChannelModel:
        """
        p/q if given, else the Gaussian preset for theta/sigma; with neither,
        p = default_p when supplied, otherwise the preset at theta = sigma = 1.
        """
        try:
            if self.p is not None or self.q is not None:
                p = self.p if self.p is not None else 1.0 - self.q
                q = self.q if self.q is not None else 1.0 - p
                return BitChannelModel(p=p, q=q)
            if self.theta is not None or self.sigma is not None:
                return gaussian_shift_preset(self.theta if self.theta is not None else 1.0,
                                             self.sigma if self.sigma is not None else 1.0)
            if default_p is not None:
                return BitChannelModel.from_p(default_p)
            return gaussian_shift_preset(1.0, 1.0)
        except SeqCryptError as e:
            raise ConfigError(str(e)) from e

    def encryption(self) -> EncryptionParams:
        return self._build(EncryptionParams, psi0=self.psi0, psi1=self.psi1)

    def targets(self) -> ErrorTargets:
        return self._build(ErrorTargets, alpha=self.alpha, beta=self.beta)

    def priors(self) -> Priors:
        return self._build(Priors, pi0=self.pi0, pi1=1.0 - self.pi0)

    def tolerance(self) -> ToleranceSpec:
        return self._build(ToleranceSpec, kappa0=self.kappa0, kappa1=self.kappa1)

    def admissible_encryptions(self, model: BitChannelModel,
                               pairs: Optional[Sequence[Sequence[float]]] = None) -> List[EncryptionParams]:
        """
        Encryptions for the given (psi0, psi1) pairs, or for psi0/psi1 when none
        are given; a pair outside the admissible region is a configuration error.
        """
        if pairs is None:
            pairs = [(self.psi0, self.psi1)]
        encryptions = []
        for psi0, psi1 in pairs:
            enc = self._build(EncryptionParams, psi0=psi0, psi1=psi1)
            report = validate_admissible(model, enc)
            if not report.admissible:
                raise ConfigError(f"encryption [{psi0}, {psi1}] is not admissible: "
                                  + "; ".join(report.violations))
            encryptions.append(enc)
        return encryptions

    @property
    def output_dir(self) -> str:
        return self.output_path or output_dir_default()

    @staticmethod
    def _build(cls, **kwargs):
        try:
            return cls(**kwargs)
        except SeqCryptError as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


FIELD_NAMES = {f.name for f in fields(RunConfig)}
FLOAT_FIELDS = {'p', 'q', 'theta', 'sigma', 'psi0', 'psi1', 'alpha', 'beta',
                'kappa0', 'kappa1', 'pi0'}
INT_FIELDS = {'replications', 'seed', 'max_steps', 'resolution', 'workers'}


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, 'r') as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping")
    unknown = sorted(set(data) - FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return data


def build_config(overrides: Dict[str, Any], config_file: Optional[str] = None) -> RunConfig:
    """File values first, then every override that is not None."""
    values = load_config_file(config_file) if config_file else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    if 'command' not in values:
        raise ConfigError("no command given")
    try:
        # PyYAML reads 1e-6 (no dot) as a string
        for key in FLOAT_FIELDS & set(values):
            if values[key] is not None:
                values[key] = float(values[key])
        for key in INT_FIELDS & set(values):
            if values[key] is not None:
                values[key] = int(values[key])
        if values.get('sweep') is not None:
            values['sweep'] = [float(b) for b in values['sweep']]
        if values.get('psi_set') is not None:
            values['psi_set'] = [[float(a), float(b)] for a, b in values['psi_set']]
        return RunConfig(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
