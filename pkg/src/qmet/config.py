"""Flat ``key = value`` run configuration with command-line overrides."""
from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .beam import ExperimentGeometry
from .errors import QmetError
from .shotnoise import DriveSignal, ExperimentConfig

ENV_VAR = "QMET_CONFIG"


class ConfigError(QmetError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # optics and detection
    wavelength: float = 780e-9
    sigma0: float = 120e-6
    z1: float = -0.272
    z2: float = 0.64
    epsilon_deg: float = 5.0
    nu: float = 1.05e7
    tau: float = 54.53e-3
    rbw: float = 18.34
    saturation: float = 1.54e-9
    # drive
    freq: float = 2000.0
    theta_deg: float = 4.0
    d_max: float = 15.56e-9
    phi_max: float = 2.2e-6
    d_bias: float = 0.5e-6
    phi_bias: float = 1e-6
    bins_per_period: int = 50
    weak_value_model: str = "small_angle"
    # numerics
    n_list: str = "1,2,3,4,5"
    dim_buffer: int = 6
    num_points: int = 200
    y_max: float = 10.0
    g_tilde: float = 1e-2
    dg: float = 1e-4
    trials: int = 400
    seed: int = 0
    nu_scales: str = "1"
    table1_mc_trials: int = 0

    def __post_init__(self):
        positive = (
            "wavelength", "sigma0", "nu", "tau", "rbw", "saturation", "freq", "d_max", "phi_max",
            "num_points", "y_max", "g_tilde", "dg", "trials", "bins_per_period", "dim_buffer",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 0 < self.epsilon_deg < 90:
            raise ConfigError("epsilon_deg must lie in (0, 90)")
        if self.weak_value_model not in ("small_angle", "exact"):
            raise ConfigError("weak_value_model must be small_angle or exact")
        parse_int_list(self.n_list, allow_empty=True)
        parse_float_list(self.nu_scales)

    @property
    def epsilon(self) -> float:
        return float(np.radians(self.epsilon_deg))

    @property
    def modes(self) -> list[int]:
        return parse_int_list(self.n_list)

    def geometry(self) -> ExperimentGeometry:
        return ExperimentGeometry(self.wavelength, self.sigma0, self.z1, self.z2)

    def experiment(self, n: int) -> ExperimentConfig:
        drive = DriveSignal(
            0.0, self.freq, float(np.radians(self.theta_deg)), self.d_bias, self.phi_bias, self.d_max, self.phi_max
        )
        return ExperimentConfig(
            n, self.geometry(), self.epsilon, self.nu, self.tau, self.rbw, self.saturation, drive,
            self.bins_per_period, self.weak_value_model,
        )


def parse_int_list(text: str, allow_empty: bool = False) -> list[int]:
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    if not items and not allow_empty:
        raise ConfigError("empty list")
    try:
        return [int(s) for s in items]
    except ValueError:
        raise ConfigError(f"not a list of integers: {text!r}") from None


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in str(text).split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"not a list of numbers: {text!r}") from None


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(RunConfig)}
    if name not in kinds:
        raise ConfigError(f"unknown config key {name!r}")
    kind = kinds[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw.strip()


def parse_pairs(lines) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments ignored."""
    out = {}
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {num}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def load_config(path: str | None = None, overrides=()) -> RunConfig:
    """Defaults, then the file (``path`` or $QMET_CONFIG), then ``key=value`` overrides."""
    path = path or os.environ.get(ENV_VAR)
    values = {}
    if path:
        try:
            with open(path) as fh:
                values.update(parse_pairs(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    values.update(parse_pairs(overrides))
    return replace(RunConfig(), **values)
