"""
Run configuration: a YAML file with the sections

    mode, seed, sample_sizes, dgp, missingness, nuisance, sensitivity, oracle, paths

overridden by command-line flags (flags win).

"""

import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

import yaml

from src.errors import ConfigError, MedTransportError
from src.nuisance.fit import NuisanceOptions
from src.sensitivity.bounds import SensitivityConfig
from src.simulation.missingness import MissingnessSpec
from src.simulation.params import StructuralParams

MODES = ("simulate", "analyze", "sweep", "oracle")
THREADS_VARIABLE = "MEDTRANSPORT_THREADS"
SECTIONS = ("mode", "seed", "sample_sizes", "dgp", "missingness", "nuisance", "sensitivity", "oracle", "paths")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "sweep"
    seed: int = 0
    n_source: int = 5000
    n_target: int = 5000
    dgp: StructuralParams = field(default_factory=StructuralParams)
    missingness: Optional[MissingnessSpec] = None
    missingness_grid: Optional[Tuple[float, ...]] = None
    nuisance: NuisanceOptions = field(default_factory=NuisanceOptions)
    sensitivity: SensitivityConfig = field(default_factory=SensitivityConfig)
    analysis_r2: float = 0.1
    oracle_n_mc: int = 1_000_000
    input_path: Optional[str] = None
    out_dir: str = "results"
    keep_truth: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("mode must be one of {}".format(", ".join(MODES)))
        if self.n_source < 1 or self.n_target < 1:
            raise ConfigError("sample sizes must be positive")
        if not 0.0 <= self.analysis_r2 < 1.0:
            raise ConfigError("sensitivity r2 must lie in [0, 1)")
        if self.missingness_grid is not None:
            grid = tuple(float(p) for p in self.missingness_grid)
            if not grid or any(not 0.0 <= p <= 1.0 for p in grid):
                raise ConfigError("missingness grid values must lie in [0, 1]")
            object.__setattr__(self, "missingness_grid", grid)
        if self.mode == "analyze":
            if self.input_path is None:
                raise ConfigError("analyze mode needs --input")
        if self.input_path is not None and not Path(self.input_path).is_file():
            raise ConfigError("input file not found: {}".format(self.input_path))

    @property
    def out_path(self):
        return Path(self.out_dir)

    def _missingness_section(self):
        section = self.missingness.to_dict() if self.missingness is not None else {}
        if self.missingness_grid is not None:
            section["grid"] = list(self.missingness_grid)
        return section or None

    def to_dict(self):
        return {
            "mode": self.mode,
            "seed": self.seed,
            "sample_sizes": {"n_source": self.n_source, "n_target": self.n_target},
            "dgp": self.dgp.to_dict(),
            "missingness": self._missingness_section(),
            "nuisance": asdict(self.nuisance),
            "sensitivity": dict(self.sensitivity.to_dict(), r2=self.analysis_r2),
            "oracle": {"n_mc": self.oracle_n_mc},
            "paths": {"input": self.input_path, "out_dir": self.out_dir, "keep_truth": self.keep_truth},
        }


def _section(values, name):
    section = values.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError("config section {} must be a mapping".format(name))
    return dict(section)


def _build(cls, values, name):
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError("invalid {} section: {}".format(name, e))
    except MedTransportError as e:
        raise ConfigError(e.args[0])


def config_from_dict(values):
    unknown = set(values) - set(SECTIONS)
    if unknown:
        raise ConfigError("unknown config sections: {}".format(", ".join(sorted(unknown))))

    sizes = _section(values, "sample_sizes")
    missingness = _section(values, "missingness")
    grid = missingness.pop("grid", None)
    sensitivity = _section(values, "sensitivity")
    analysis_r2 = sensitivity.pop("r2", 0.1)
    sensitivity.setdefault("seed", int(values.get("seed", 0)))
    if "lambda" in sensitivity:
        sensitivity["lam"] = sensitivity.pop("lambda")
    paths = _section(values, "paths")
    oracle = _section(values, "oracle")

    kwargs = {
        "mode": values.get("mode", "sweep"),
        "seed": int(values.get("seed", 0)),
        "n_source": int(sizes.get("n_source", 5000)),
        "n_target": int(sizes.get("n_target", 5000)),
        "dgp": _build(StructuralParams, _section(values, "dgp"), "dgp"),
        "missingness": _build(MissingnessSpec, missingness, "missingness") if missingness or grid else None,
        "missingness_grid": grid,
        "nuisance": _build(NuisanceOptions, _section(values, "nuisance"), "nuisance"),
        "sensitivity": _build(SensitivityConfig, sensitivity, "sensitivity"),
        "analysis_r2": float(analysis_r2),
        "oracle_n_mc": int(oracle.get("n_mc", 1_000_000)),
        "input_path": paths.get("input"),
        "out_dir": paths.get("out_dir", "results"),
        "keep_truth": bool(paths.get("keep_truth", False)),
    }
    return RunConfig(**kwargs)


def load_config(path):
    try:
        with open(path) as f:
            values = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError("cannot read config {}: {}".format(path, e))
    except yaml.YAMLError as e:
        raise ConfigError("config {} is not valid YAML: {}".format(path, e))
    if not isinstance(values, dict):
        raise ConfigError("config {} must contain a mapping".format(path))
    return config_from_dict(values)


def parse_grid(text, name):
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError("{} must be a comma-separated list of numbers, got {!r}".format(name, text))


def apply_overrides(config, args):
    """Returns a copy of `config` with every flag given on the command line applied."""
    top = {}
    if args.mode is not None:
        top["mode"] = args.mode
    if args.seed is not None:
        top["seed"] = args.seed
    if args.input is not None:
        top["input_path"] = args.input
    if args.out_dir is not None:
        top["out_dir"] = args.out_dir
    if args.keep_truth:
        top["keep_truth"] = True

    try:
        sensitivity = {}
        if args.r2_grid is not None:
            grid = parse_grid(args.r2_grid, "--r2-grid")
            if len(grid) == 1 and (args.mode or config.mode) == "analyze":
                top["analysis_r2"] = grid[0]
            else:
                sensitivity["r2_grid"] = grid
        if args.alpha is not None:
            sensitivity["alpha"] = args.alpha
        if args.bootstrap is not None:
            sensitivity["n_bootstrap"] = args.bootstrap
        if args.seed is not None:
            sensitivity["seed"] = args.seed
        if sensitivity:
            top["sensitivity"] = replace(config.sensitivity, **sensitivity)

        if args.n_mc is not None:
            top["nuisance"] = replace(config.nuisance, n_mc=args.n_mc)

        spec = config.missingness
        if args.target_group is not None:
            spec = replace(spec or MissingnessSpec(), target_group=args.target_group)
        if args.missingness is not None:
            grid = parse_grid(args.missingness, "--missingness")
            spec = spec or MissingnessSpec()
            if len(grid) == 1 and (args.mode or config.mode) != "sweep":
                spec = spec.with_proportion(grid[0])
            else:
                top["missingness_grid"] = grid
        if spec is not config.missingness:
            top["missingness"] = spec
    except MedTransportError as e:
        raise ConfigError(e.args[0])

    return replace(config, **top)


def thread_count(environ=None):
    """Worker count from MEDTRANSPORT_THREADS: unset means 1, 0 means every core."""
    environ = os.environ if environ is None else environ
    value = environ.get(THREADS_VARIABLE)
    if value is None or value == "":
        return 1
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError("{} must be an integer, got {!r}".format(THREADS_VARIABLE, value))
    if threads < 0:
        raise ConfigError("{} must be >= 0".format(THREADS_VARIABLE))
    return -1 if threads == 0 else threads
