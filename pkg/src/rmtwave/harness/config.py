"""Plain-text experiment configuration.

The file is INI-style (read with :mod:`configparser`).  All sections and keys
are optional; omitted values take the defaults shown.

.. code-block:: ini

    [experiment]
    kind = lot              ; lot | theorem | kwe | weingarten-validate | rigidity
    times = 1.0             ; comma-separated sample times (lot)
    time_unit = kinetic     ; kinetic (times in units of T_kin(N)) | absolute
    sweep = 32, 64          ; comma-separated N values (lot, theorem, rigidity)
    epsilon = 0.05          ; window exponent for the theorem experiment
    t_factor = 0.6          ; theorem time t = t_factor * T_kin^(2/3)
    delta = 0.1             ; reporting exponent in N^delta bounds

    [model]
    N = 32
    beta = 0.4              ; must lie in (1/4, 1/2)
    profile = bump          ; constant | bump | gaussian | phase-bump | tilted
    profile.width = 0.5     ; any profile.<name> key is passed to the profile
    mu_scale = 1.0
    t_end = 1.0

    [integrator]
    dt =                    ; empty for the automatic step
    rtol = 1e-8             ; Duhamel panel refinement tolerance
    panel_width = 1.0
    nodes = 12

    [ensemble]
    size = 256
    seed = 0
    threads = 1
    replicas = 8            ; random-phase replicas per GUE draw

    [kwe]
    grid = 129
    order = 32
    interpolation = cubic   ; cubic | cubic-nu | linear
    conservative = true
    initial = model         ; model (|A|^2 + floor) | rayleigh-jeans
    floor = 0.1             ; keeps the model density positive so entropy is defined
    alpha = 1.0
    rj_beta = 3.0
    t_end = 1.0
    dt = 0.05

    [output]
    dir = results
    prefix =                ; defaults to the experiment kind
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from ..dynamics import PROFILES, ModelConfig
from ..kwe import INTERPOLATION_RULES, CollisionConfig

__all__ = [
    "KINDS",
    "ConfigError",
    "IntegratorSettings",
    "EnsembleSettings",
    "KineticSettings",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]

KINDS = ("lot", "theorem", "kwe", "weingarten-validate", "rigidity")
TIME_UNITS = ("kinetic", "absolute")
SECTIONS = ("experiment", "model", "integrator", "ensemble", "kwe", "output")


class ConfigError(ValueError):
    """Schema violation; the message names the offending field."""


@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-8
    panel_width: float = 1.0
    nodes: int = 12


@dataclass(frozen=True)
class EnsembleSettings:
    size: int = 256
    seed: int = 0
    threads: int = 1
    replicas: int = 8


@dataclass(frozen=True)
class KineticSettings:
    grid: int = 129
    collision: CollisionConfig = field(default_factory=CollisionConfig)
    initial: str = "model"
    floor: float = 0.1
    alpha: float = 1.0
    rj_beta: float = 3.0
    t_end: float = 1.0
    dt: float = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment needs; see the module docstring for the file schema."""

    kind: str = "lot"
    model: ModelConfig = field(default_factory=lambda: ModelConfig(N=32))
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    ensemble: EnsembleSettings = field(default_factory=EnsembleSettings)
    kwe: KineticSettings = field(default_factory=KineticSettings)
    out_dir: Path = Path("results")
    prefix: str = ""
    times: tuple = (1.0,)
    time_unit: str = "kinetic"
    sweep: tuple = (32, 64)
    epsilon: float = 0.05
    t_factor: float = 0.6
    delta: float = 0.1
    source: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"experiment.kind={self.kind!r} must be one of {', '.join(KINDS)}")
        if self.time_unit not in TIME_UNITS:
            raise ConfigError(f"experiment.time_unit={self.time_unit!r} must be one of {', '.join(TIME_UNITS)}")

    @property
    def name(self) -> str:
        return self.prefix or self.kind

    def with_overrides(self, seed: Optional[int] = None, threads: Optional[int] = None, out_dir=None) -> "ExperimentConfig":
        ens = self.ensemble
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ConfigError("ensemble.seed must be an unsigned 64-bit integer")
            ens = replace(ens, seed=seed)
        if threads is not None:
            if threads < 1:
                raise ConfigError("ensemble.threads must be at least 1")
            ens = replace(ens, threads=threads)
        out = self.out_dir if out_dir is None else Path(out_dir)
        return replace(self, ensemble=ens, out_dir=out)


def _get(parser, section, key, conv, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    if raw == "":
        return default
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}={raw!r} is not a valid {conv.__name__}") from None


def _float_list(raw: str) -> tuple:
    return tuple(float(x) for x in raw.split(",") if x.strip())


def _int_list(raw: str) -> tuple:
    return tuple(int(x) for x in raw.split(",") if x.strip())


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


_bool.__name__ = "boolean"
_float_list.__name__ = "list of floats"
_int_list.__name__ = "list of integers"


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate a configuration string.

    Raises
    ------
    ConfigError
        On unknown sections, malformed values, or values outside their valid range.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from None
    for sec in parser.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]; expected one of {', '.join(SECTIONS)}")

    kind = _get(parser, "experiment", "kind", str, "lot")
    if kind not in KINDS:
        raise ConfigError(f"experiment.kind={kind!r} must be one of {', '.join(KINDS)}")

    beta = _get(parser, "model", "beta", float, 0.4)
    if not 0.25 < beta < 0.5:
        raise ConfigError(f"model.beta={beta} outside the valid range (1/4, 1/2)")
    N = _get(parser, "model", "N", int, 32)
    if N < 1:
        raise ConfigError(f"model.N={N} must be a positive integer")
    profile = _get(parser, "model", "profile", str, "bump")
    if profile not in PROFILES:
        raise ConfigError(f"model.profile={profile!r} must be one of {', '.join(PROFILES)}")
    params = {}
    if parser.has_section("model"):
        for key in parser.options("model"):
            if key.startswith("profile."):
                params[key.split(".", 1)[1]] = _get(parser, "model", key, float, None)
    dt = _get(parser, "integrator", "dt", float, None)
    if dt is not None and not 0 < dt <= 0.1:
        raise ConfigError(f"integrator.dt={dt} outside the valid range (0, 0.1]")
    mu_scale = _get(parser, "model", "mu_scale", float, 1.0)
    if mu_scale < 0:
        raise ConfigError("model.mu_scale must be non-negative")
    t_end = _get(parser, "model", "t_end", float, 1.0)
    if t_end < 0:
        raise ConfigError("model.t_end must be non-negative")
    try:
        model = ModelConfig(N=N, beta=beta, profile=profile, profile_params=params, t_end=t_end, dt=dt, mu_scale=mu_scale)
        model.amplitude()(0.0)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from None

    integ = IntegratorSettings(
        rtol=_get(parser, "integrator", "rtol", float, 1e-8),
        panel_width=_get(parser, "integrator", "panel_width", float, 1.0),
        nodes=_get(parser, "integrator", "nodes", int, 12),
    )
    if integ.rtol <= 0 or integ.panel_width <= 0 or integ.nodes < 2:
        raise ConfigError("integrator: rtol and panel_width must be positive and nodes at least 2")

    ens = EnsembleSettings(
        size=_get(parser, "ensemble", "size", int, 256),
        seed=_get(parser, "ensemble", "seed", int, 0),
        threads=_get(parser, "ensemble", "threads", int, 1),
        replicas=_get(parser, "ensemble", "replicas", int, 8),
    )
    if ens.size < 2:
        raise ConfigError(f"ensemble.size={ens.size} must be at least 2")
    if not 0 <= ens.seed < 2**64:
        raise ConfigError("ensemble.seed must be an unsigned 64-bit integer")
    if ens.threads < 1 or ens.replicas < 1:
        raise ConfigError("ensemble.threads and ensemble.replicas must be at least 1")

    interp = _get(parser, "kwe", "interpolation", str, "cubic")
    if interp not in INTERPOLATION_RULES:
        raise ConfigError(f"kwe.interpolation={interp!r} must be one of {', '.join(INTERPOLATION_RULES)}")
    order = _get(parser, "kwe", "order", int, 32)
    if order < 16:
        raise ConfigError(f"kwe.order={order} must be at least 16")
    initial = _get(parser, "kwe", "initial", str, "model")
    if initial not in ("model", "rayleigh-jeans"):
        raise ConfigError(f"kwe.initial={initial!r} must be 'model' or 'rayleigh-jeans'")
    kin = KineticSettings(
        grid=_get(parser, "kwe", "grid", int, 129),
        collision=CollisionConfig(order=order, interpolation=interp, conservative=_get(parser, "kwe", "conservative", _bool, True)),
        initial=initial,
        floor=_get(parser, "kwe", "floor", float, 0.1),
        alpha=_get(parser, "kwe", "alpha", float, 1.0),
        rj_beta=_get(parser, "kwe", "rj_beta", float, 3.0),
        t_end=_get(parser, "kwe", "t_end", float, 1.0),
        dt=_get(parser, "kwe", "dt", float, 0.05),
    )
    if kin.grid < 3:
        raise ConfigError(f"kwe.grid={kin.grid} must be at least 3")
    if kin.floor < 0:
        raise ConfigError(f"kwe.floor={kin.floor} must be non-negative")
    if kin.rj_beta <= 2.0:
        raise ConfigError(f"kwe.rj_beta={kin.rj_beta} must exceed 2")
    if kin.t_end < 0 or kin.dt <= 0:
        raise ConfigError("kwe: t_end must be non-negative and dt positive")

    times = _get(parser, "experiment", "times", _float_list, (1.0,))
    time_unit = _get(parser, "experiment", "time_unit", str, "kinetic")
    if time_unit not in TIME_UNITS:
        raise ConfigError(f"experiment.time_unit={time_unit!r} must be one of {', '.join(TIME_UNITS)}")
    if not times or any(t < 0 for t in times):
        raise ConfigError("experiment.times must be a non-empty list of non-negative times")
    sweep = _get(parser, "experiment", "sweep", _int_list, (32, 64))
    if not sweep or any(n < 1 for n in sweep):
        raise ConfigError("experiment.sweep must list positive integers")

    return ExperimentConfig(
        kind=kind,
        model=model,
        integrator=integ,
        ensemble=ens,
        kwe=kin,
        out_dir=Path(_get(parser, "output", "dir", str, "results")),
        prefix=_get(parser, "output", "prefix", str, ""),
        times=times,
        time_unit=time_unit,
        sweep=sweep,
        epsilon=_get(parser, "experiment", "epsilon", float, 0.05),
        t_factor=_get(parser, "experiment", "t_factor", float, 0.6),
        delta=_get(parser, "experiment", "delta", float, 0.1),
        source=text,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))
