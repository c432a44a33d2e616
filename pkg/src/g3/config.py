"""Flat ``key = value`` run configuration shared by the CLI and scripts.

Values are resolved as built-in defaults, then a config file, then explicit
overrides. Presets for the three synthetic families ship in ``g3/configs``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from .diffusion import DiffusionConfig
from .errors import ConfigError
from .nn import MlpConfig
from .trainer import TrainConfig

PRESETS = ("planar", "sbm", "dcsbm")


@dataclass(frozen=True)
class RunConfig:
    # diffusion
    T: float = 6.0
    tau: float = 0.01
    mode: str = "symmetric"
    # network
    width: int = 4096
    layer_norm: bool = True
    dtype: str = "float64"
    output_scale: float = 1.0
    zero_init_output: bool = False
    # training
    batch_size: int = 256
    epochs: int = 20
    max_iters: int = 0
    lr: float = 1e-4
    lr_decay: float = 0.99
    lr_min: float = 1e-9
    patience: int = 10
    loss_target: float = 0.0
    times_per_graph: int = 1
    representation: str = "adjacency"
    omega: float = 1.0
    # sampling
    alpha: float = 1.0
    M: int = 100
    threshold_rule: str = "value"
    base_scale: str = "literal"
    bernoulli: bool = False
    seed: int = 0

    def diffusion(self) -> DiffusionConfig:
        return DiffusionConfig(T=self.T, tau=self.tau, mode=self.mode)

    def mlp(self, n_max: int) -> MlpConfig:
        return MlpConfig(width=self.width, n_max=n_max, layer_norm=self.layer_norm,
                         full_matrix=self.mode == "asymmetric", dtype=self.dtype,
                         output_scale=self.output_scale,
                         zero_init_output=self.zero_init_output)

    def train(self) -> TrainConfig:
        return TrainConfig(batch_size_max=self.batch_size, epochs=self.epochs,
                           max_iters=self.max_iters, lr0=self.lr, lr_decay=self.lr_decay,
                           lr_min=self.lr_min, patience=self.patience,
                           loss_target=self.loss_target, seed=self.seed,
                           diffusion=self.diffusion(), representation=self.representation,
                           omega=self.omega, times_per_graph=self.times_per_graph)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "RunConfig":
        return resolve(None, {**self.to_dict(), **kw})


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _TYPES[key]
    if not isinstance(value, str):
        if kind == "float" and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        return value
    v = value.strip()
    try:
        if kind == "bool":
            if v.lower() in ("1", "true", "yes", "on"):
                return True
            if v.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(v)
        if kind == "int":
            return int(v)
        if kind == "float":
            return float(v)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None
    return v


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    return resources.files("g3").joinpath("configs", f"{name}.cfg").read_text()


def load_config(path) -> dict:
    """Values from a config file, or from a shipped preset given by name."""
    if str(path) in PRESETS and not Path(path).exists():
        return parse_config_text(preset_text(str(path)), f"preset:{path}")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def resolve(path=None, overrides: Optional[Mapping] = None) -> RunConfig:
    values = {}
    if path is not None:
        values.update(load_config(path))
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _coerce(k, v)
    try:
        cfg = RunConfig(**values)
        # surface invalid combinations now rather than mid-run
        cfg.diffusion()
        cfg.train()
        cfg.mlp(2)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    if cfg.threshold_rule not in ("value", "sparsity"):
        raise ConfigError("threshold_rule must be 'value' or 'sparsity'")
    if cfg.base_scale not in ("literal", "limit"):
        raise ConfigError("base_scale must be 'literal' or 'limit'")
    return cfg


def dumps_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.to_dict().items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
