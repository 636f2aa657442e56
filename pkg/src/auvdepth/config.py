"""Experiment configuration: a small validated schema over plain YAML.

Every key has a typed default; unknown keys are rejected with their dotted
path so a typo in a config file fails loudly instead of silently running the
defaults. parse_config works on plain mappings (YAML, JSON, literals) and
config_to_dict inverts it for manifests.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields as dataclass_fields

import yaml

from .dynamics import HydroParams
from .trainer import TrainerConfig

TASKS = ("constant", "curved", "seafloor")

SINUSOID_WAVENUMBER = 0.06283185307179587  # one full period per 100 m


@dataclass(frozen=True)
class ProfileSettings:
    """Reference terrain: an analytic sinusoid or a sampled CSV file."""

    kind: str = "sinusoid"
    depth: float = 10.0
    wavenumber: float = SINUSOID_WAVENUMBER
    path: str = ""


@dataclass(frozen=True)
class CostSettings:
    rho1: float = 1.0
    rho2: float = 2.0
    rho3: float = 0.05
    rho4: float = 0.05
    r1: float = 0.001
    r2: float = 0.001


@dataclass(frozen=True)
class EnvSettings:
    z_ref: float = 8.0
    dt: float = 0.1
    horizon_s: float = 100.0
    u0: float = 1.5
    disturbance_beta: float = 0.15
    disturbance_sigma: float = 0.3
    divergence_penalty: float = 500.0
    dz_limit: float = 50.0
    w_limit: float = 10.0
    spawn_radius: float = 6.0
    min_depth: float = 0.5
    window: int = 3
    safe_offset: float = 5.0
    cost: CostSettings = field(default_factory=CostSettings)
    profile: ProfileSettings | None = None


@dataclass(frozen=True)
class LqiSettings:
    q_diag: tuple[float, ...] = (1.0, 1.0, 10.0, 10.0, 100.0, 100.0)
    r_diag: tuple[float, ...] = (0.01, 0.01)


@dataclass(frozen=True)
class NmpcSettings:
    horizon: int = 30
    q_diag: tuple[float, ...] = (0.05, 0.05, 10.0, 2.0)
    r_diag: tuple[float, ...] = (0.001, 0.001)
    max_sweeps: int = 200
    tol: float = 1e-6
    step_size: float = 10.0
    max_halvings: int = 20


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "constant"
    out_dir: str = "runs"
    seeds: tuple[int, ...] = (0,)
    env: EnvSettings = field(default_factory=EnvSettings)
    hydro: dict = field(default_factory=dict)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    lqi: LqiSettings = field(default_factory=LqiSettings)
    nmpc: NmpcSettings = field(default_factory=NmpcSettings)


# ---------------------------------------------------------------------------
# Coercers
# ---------------------------------------------------------------------------

def _fail(path: str, msg: str):
    raise ValueError(f"{path}: {msg}" if path else msg)


def _as_mapping(node, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        _fail(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _as_float(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {v!r}")
    return float(v)


def _as_int(v, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected an integer, got {v!r}")
    return v


def _as_bool(v, path: str) -> bool:
    if not isinstance(v, bool):
        _fail(path, f"expected true/false, got {v!r}")
    return v


def _as_str(v, path: str) -> str:
    if not isinstance(v, str):
        _fail(path, f"expected a string, got {v!r}")
    return v


def _as_float_tuple(v, path: str, n: int | None = None) -> tuple[float, ...]:
    if not isinstance(v, (list, tuple)):
        _fail(path, f"expected a list of numbers, got {v!r}")
    out = tuple(_as_float(x, f"{path}[{i}]") for i, x in enumerate(v))
    if n is not None and len(out) != n:
        _fail(path, f"expected {n} entries, got {len(out)}")
    return out


def _check_keys(node: dict, allowed, path: str) -> None:
    for key in node:
        if key not in allowed:
            loc = f"{path}.{key}" if path else str(key)
            raise ValueError(f"unknown config key {loc!r}")


def _parse_typed_section(node: dict, cls, path: str) -> dict:
    """Coerce a flat mapping against a dataclass's scalar fields."""
    coercers = {"int": _as_int, "float": _as_float, "bool": _as_bool,
                "str": _as_str}
    spec = {f.name: coercers[f.type] for f in dataclass_fields(cls)
            if f.type in coercers}
    _check_keys(node, spec, path)
    return {k: spec[k](v, f"{path}.{k}") for k, v in node.items()}


# ---------------------------------------------------------------------------
# Section parsers
# ---------------------------------------------------------------------------

def _parse_profile(node, path: str) -> ProfileSettings:
    node = _as_mapping(node, path)
    _check_keys(node, ("kind", "depth", "wavenumber", "path"), path)
    kind = _as_str(node.get("kind", "sinusoid"), f"{path}.kind")
    if kind not in ("sinusoid", "csv"):
        _fail(f"{path}.kind", f"must be 'sinusoid' or 'csv', got {kind!r}")
    out = ProfileSettings(
        kind=kind,
        depth=_as_float(node.get("depth", 10.0), f"{path}.depth"),
        wavenumber=_as_float(node.get("wavenumber", SINUSOID_WAVENUMBER),
                             f"{path}.wavenumber"),
        path=_as_str(node.get("path", ""), f"{path}.path"))
    if kind == "csv" and not out.path:
        _fail(f"{path}.path", "csv profiles need a file path")
    return out


def _parse_env(node, path: str) -> EnvSettings:
    node = _as_mapping(node, path)
    scalars = {"z_ref", "dt", "horizon_s", "u0", "disturbance_beta",
               "disturbance_sigma", "divergence_penalty", "dz_limit",
               "w_limit", "spawn_radius", "min_depth", "safe_offset"}
    _check_keys(node, scalars | {"window", "cost", "profile"}, path)
    kwargs = {k: _as_float(v, f"{path}.{k}") for k, v in node.items()
              if k in scalars}
    if "window" in node:
        kwargs["window"] = _as_int(node["window"], f"{path}.window")
    if "cost" in node:
        cost_node = _as_mapping(node["cost"], f"{path}.cost")
        kwargs["cost"] = CostSettings(**_parse_typed_section(
            cost_node, CostSettings, f"{path}.cost"))
    if "profile" in node and node["profile"] is not None:
        kwargs["profile"] = _parse_profile(node["profile"], f"{path}.profile")
    return EnvSettings(**kwargs)


def _parse_hydro(node, path: str) -> dict:
    node = _as_mapping(node, path)
    known = {f.name for f in dataclass_fields(HydroParams)}
    _check_keys(node, known, path)
    return {k: _as_float(v, f"{path}.{k}") for k, v in node.items()}


def _parse_lqi(node, path: str) -> LqiSettings:
    node = _as_mapping(node, path)
    _check_keys(node, ("q_diag", "r_diag"), path)
    kwargs = {}
    if "q_diag" in node:
        kwargs["q_diag"] = _as_float_tuple(node["q_diag"], f"{path}.q_diag", 6)
    if "r_diag" in node:
        kwargs["r_diag"] = _as_float_tuple(node["r_diag"], f"{path}.r_diag", 2)
    return LqiSettings(**kwargs)


def _parse_nmpc(node, path: str) -> NmpcSettings:
    node = _as_mapping(node, path)
    _check_keys(node, ("horizon", "q_diag", "r_diag", "max_sweeps", "tol",
                       "step_size", "max_halvings"), path)
    kwargs = {}
    for key in ("horizon", "max_sweeps", "max_halvings"):
        if key in node:
            kwargs[key] = _as_int(node[key], f"{path}.{key}")
    for key in ("tol", "step_size"):
        if key in node:
            kwargs[key] = _as_float(node[key], f"{path}.{key}")
    if "q_diag" in node:
        kwargs["q_diag"] = _as_float_tuple(node["q_diag"], f"{path}.q_diag", 4)
    if "r_diag" in node:
        kwargs["r_diag"] = _as_float_tuple(node["r_diag"], f"{path}.r_diag", 2)
    return NmpcSettings(**kwargs)


def _parse_seeds(node, path: str) -> tuple[int, ...]:
    if isinstance(node, int) and not isinstance(node, bool):
        return (node,)
    if not isinstance(node, (list, tuple)):
        _fail(path, f"seeds must be an integer or a list of integers, got {node!r}")
    if not node:
        _fail(path, "seeds must not be empty")
    return tuple(_as_int(s, f"{path}[{i}]") for i, s in enumerate(node))


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a plain mapping into an ExperimentConfig."""
    data = _as_mapping(data, "")
    _check_keys(data, ("task", "out_dir", "seeds", "env", "hydro", "trainer",
                       "lqi", "nmpc"), "")
    task = _as_str(data.get("task", "constant"), "task")
    if task not in TASKS:
        _fail("task", f"must be one of {', '.join(TASKS)}; got {task!r}")
    env = _parse_env(data.get("env", {}), "env")
    if task in ("curved", "seafloor") and env.profile is None:
        env = dataclasses.replace(env, profile=ProfileSettings())
    if task == "curved" and env.profile.kind != "sinusoid":
        _fail("env.profile", "the curved task needs an analytic (sinusoid) "
                             "profile; csv profiles fit the seafloor task")
    trainer_node = _as_mapping(data.get("trainer", {}), "trainer")
    trainer = TrainerConfig(**_parse_typed_section(
        trainer_node, TrainerConfig, "trainer"))
    return ExperimentConfig(
        task=task,
        out_dir=_as_str(data.get("out_dir", "runs"), "out_dir"),
        seeds=_parse_seeds(data.get("seeds", (0,)), "seeds"),
        env=env,
        hydro=_parse_hydro(data.get("hydro", {}), "hydro"),
        trainer=trainer,
        lqi=_parse_lqi(data.get("lqi", {}), "lqi"),
        nmpc=_parse_nmpc(data.get("nmpc", {}), "nmpc"))


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def load_config(path) -> ExperimentConfig:
    """Read a YAML file into a validated ExperimentConfig."""
    with open(path) as f:
        data = yaml.safe_load(f)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config root must be a mapping")
    return parse_config(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Plain-mapping snapshot; parse_config(config_to_dict(c)) == c."""
    out = {
        "task": cfg.task,
        "out_dir": cfg.out_dir,
        "seeds": list(cfg.seeds),
        "env": dataclasses.asdict(cfg.env),
        "hydro": dict(cfg.hydro),
        "trainer": dataclasses.asdict(cfg.trainer),
        "lqi": {"q_diag": list(cfg.lqi.q_diag), "r_diag": list(cfg.lqi.r_diag)},
        "nmpc": dataclasses.asdict(cfg.nmpc),
    }
    out["env"]["cost"] = dataclasses.asdict(cfg.env.cost)
    if cfg.env.profile is None:
        del out["env"]["profile"]
    out["nmpc"]["q_diag"] = list(cfg.nmpc.q_diag)
    out["nmpc"]["r_diag"] = list(cfg.nmpc.r_diag)
    return out
