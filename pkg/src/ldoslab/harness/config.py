"""Experiment configuration: a JSON file mapped onto ExperimentConfig."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..maps import PerturbationSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    system: str = "catmap"
    N: list = field(default_factory=lambda: [300])
    k0: float = 0.0
    chi_grid: list = field(default_factory=lambda: [float(c) for c in range(0, 61, 4)])
    perturbation: dict = field(default_factory=lambda: {"kind": "momentum_shear", "window": "global"})
    bins: int = 256
    mc_samples: int = 200_000
    seed: int = 0
    threads: int = 1
    cache_dir: str | None = None
    out_dir: str = "out"
    # single-point commands (catmap-ldos, dephasing)
    chi: float = 10.0
    m_max: int = 5
    # po-uniformity
    n_max: int = 6
    # stadium
    x0: float = 1.0
    dx_grid: list = field(default_factory=lambda: list(np.linspace(0.0, 0.1, 50)))
    p_mag: float = 200.0
    mass: float = 0.5
    export_boundary: bool = False
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.system not in ("catmap", "stadium"):
            raise ConfigError(f"unknown system {self.system!r}")
        if isinstance(self.N, int):
            self.N = [self.N]
        if not self.N or any(int(n) != n or n < 2 for n in self.N):
            raise ConfigError("N must be an integer >= 2 or a list of them")
        self.N = [int(n) for n in self.N]
        grid = np.asarray(self.chi_grid, dtype=float)
        if grid.size == 0 or np.any(grid < 0) or np.any(np.diff(grid) <= 0):
            raise ConfigError("chi_grid must be non-negative and strictly increasing")
        self.chi_grid = [float(c) for c in grid]
        if self.bins < 8:
            raise ConfigError("bins must be >= 8")
        if self.mc_samples < 1 or self.threads < 1 or self.m_max < 0 or self.n_max < 1:
            raise ConfigError("mc_samples, threads and n_max must be >= 1, m_max >= 0")
        dx = np.asarray(self.dx_grid, dtype=float)
        if dx.size == 0 or np.any(np.diff(dx) <= 0):
            raise ConfigError("dx_grid must be strictly increasing")
        self.dx_grid = [float(v) for v in dx]
        if not (self.x0 > 0 and self.p_mag > 0 and self.mass > 0):
            raise ConfigError("x0, p_mag and mass must be positive")
        try:
            self.spec()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad perturbation: {exc}") from exc

    def spec(self, k: float | None = None) -> PerturbationSpec:
        p = dict(self.perturbation)
        p["k"] = self.k0 if k is None else k
        return PerturbationSpec(**p)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def load_config(path=None, **overrides) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
