"""Run configuration shared by the CLI, the service and the pipeline.

One flat RunConfig carries every knob.  Values can come from three
layers: built-in defaults, a config file of key=value lines, and
explicit CLI flags or API fields, in increasing precedence.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .cluster import MASS_FLOOR, MERGE_TOL, ScheduleParams
from .model import CONVERGENCE_TOL, MAX_SWEEPS, ModelParams


@dataclass
class RunConfig:
    """Everything a segmentation run needs.

    min_area_frac is relative to the pixel count (0.001 means speckle
    components under 0.1% of the image get absorbed); radius of None
    lets the bilateral filter derive it from sigma_spatial; max_rounds
    of None walks the epsilon ladder all the way to 1.
    """

    clusters: int = 2
    epsilon0: float = 0.1
    delta_epsilon: float = 0.01
    mu: float = 0.5
    rule: str = "basic"
    connectivity: int = 8
    minkowski_k: float = 2.0
    conv_tol: float = CONVERGENCE_TOL
    max_sweeps: int = MAX_SWEEPS
    max_rounds: int | None = None
    seed: int = 0
    merge_tol: float = MERGE_TOL
    mass_floor: float = MASS_FLOOR
    prefilter: bool = True
    sigma_spatial: float = 3.0
    sigma_range: float = 0.1
    radius: int | None = None
    postsmooth: bool = True
    min_area_frac: float = 0.001
    workers: int = 1

    def __post_init__(self):
        self.model_params()
        self.schedule_params()
        if not 0.0 <= self.min_area_frac < 1.0:
            raise ValueError(f"min_area_frac must be in [0, 1), got {self.min_area_frac}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if not self.merge_tol > 0.0:
            raise ValueError(f"merge_tol must be positive, got {self.merge_tol}")
        if not 0.0 <= self.mass_floor <= 1.0:
            raise ValueError(f"mass_floor must be in [0, 1], got {self.mass_floor}")
        if self.prefilter:
            if not self.sigma_spatial > 0.0:
                raise ValueError(f"sigma_spatial must be positive, got {self.sigma_spatial}")
            if not self.sigma_range > 0.0:
                raise ValueError(f"sigma_range must be positive, got {self.sigma_range}")
            if self.radius is not None and self.radius < 1:
                raise ValueError(f"radius must be >= 1, got {self.radius}")

    def model_params(self) -> ModelParams:
        """Model parameters with epsilon set to the ladder start."""
        return ModelParams(
            epsilon=self.epsilon0,
            mu=self.mu,
            rule=self.rule,
            minkowski_k=self.minkowski_k,
            connectivity=self.connectivity,
            conv_tol=self.conv_tol,
            max_sweeps=self.max_sweeps,
            seed=self.seed,
        )

    def schedule_params(self) -> ScheduleParams:
        return ScheduleParams(
            target_c=self.clusters,
            epsilon_0=self.epsilon0,
            delta_epsilon=self.delta_epsilon,
            max_rounds=self.max_rounds,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_int(text: str):
    if text.strip().lower() in ("none", ""):
        return None
    return int(text)


_COERCERS = {
    "clusters": int,
    "epsilon0": float,
    "delta_epsilon": float,
    "mu": float,
    "rule": str,
    "connectivity": int,
    "minkowski_k": float,
    "conv_tol": float,
    "max_sweeps": int,
    "max_rounds": _parse_optional_int,
    "seed": int,
    "merge_tol": float,
    "mass_floor": float,
    "prefilter": _parse_bool,
    "sigma_spatial": float,
    "sigma_range": float,
    "radius": _parse_optional_int,
    "postsmooth": _parse_bool,
    "min_area_frac": float,
    "workers": int,
}

assert set(_COERCERS) == {f.name for f in fields(RunConfig)}


def parse_config_file(path) -> dict:
    """Read key=value lines into typed config values.

    Blank lines and lines starting with # are skipped.  Keys may use
    dashes or underscores.  Unknown keys and unparseable values raise
    ValueError naming the offending line; on duplicate keys the last
    one wins.
    """
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip().lower().replace("-", "_")
            if key not in _COERCERS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = _COERCERS[key](text.strip())
            except ValueError as exc:
                raise ValueError(
                    f"{path}:{lineno}: bad value for {key}: {text.strip()!r}"
                ) from exc
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge defaults, config-file values and explicit overrides.

    overrides (CLI flags, API fields) win over the file, which wins over
    the defaults.  None entries in overrides mean "not given".
    """
    merged = {}
    if file_values:
        merged.update(file_values)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(merged) - set(_COERCERS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged)
