"""Run configuration: file format, defaults, and override composition.

The config file is a small TOML subset: comments, bare ``key = value``
pairs, one level of ``[section]`` headers, and values that are integers,
floats, booleans, double-quoted strings, or flat arrays of those.  That
subset is parsed and written here so runs can echo their effective
configuration without further dependencies.

Top-level keys use the training-parameter symbols (``M``, ``T``,
``gamma``, ``n``, ``N_mem``, ``e_max``, ``epsilon``, ``rho``, ``E``,
``lambda``); node roles live under ``[scenario]``, generator knobs under
``[synth]``, optimizer details under ``[training]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .marl_env import TrainConfig
from .signals import ScenarioConfig, SynthParams


class ConfigError(ValueError):
    """Raised for unparseable or semantically invalid configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one command run needs, composed from file + flag overrides."""

    train: TrainConfig
    scenario: ScenarioConfig
    synth: SynthParams
    seed: int | None = None
    output_dir: str = "runs/out"
    federated_dir: str | None = None
    checkpoint_every: int | None = None  # None: every aggregation round (E epochs)
    eval_episodes: int = 27  # 27 episodes x 380 bits/episode > 10^4 bits

    def __post_init__(self):
        if self.scenario.M != self.train.M or self.scenario.T != self.train.T:
            raise ConfigError(
                f"scenario shape (M={self.scenario.M}, T={self.scenario.T}) must match "
                f"training shape (M={self.train.M}, T={self.train.T})"
            )
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        if self.eval_episodes < 1:
            raise ConfigError("eval_episodes must be >= 1")

    @property
    def checkpoint_period(self) -> int:
        return self.train.E if self.checkpoint_every is None else self.checkpoint_every


def default_config() -> RunConfig:
    train = TrainConfig()
    return RunConfig(
        train=train,
        scenario=ScenarioConfig(
            alice_node="18", bob_node="8", eve_node="eve", M=train.M, T=train.T
        ),
        synth=SynthParams(),
    )


# TOML-subset reader/writer

_BARE_KEY = re.compile(r"^[A-Za-z0-9_-]+$")
_INT = re.compile(r"^[+-]?\d+$")


def _parse_scalar(text: str, line_no: int):
    text = text.strip()
    if not text:
        raise ConfigError(f"line {line_no}: missing value")
    if text == "true":
        return True
    if text == "false":
        return False
    if text.startswith('"'):
        if not text.endswith('"') or len(text) < 2:
            raise ConfigError(f"line {line_no}: unterminated string {text!r}")
        body = text[1:-1]
        out = []
        i = 0
        while i < len(body):
            c = body[i]
            if c == '"':
                raise ConfigError(f"line {line_no}: stray quote inside string")
            if c == "\\":
                i += 1
                escapes = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}
                if i >= len(body) or body[i] not in escapes:
                    raise ConfigError(f"line {line_no}: unsupported escape in {text!r}")
                out.append(escapes[body[i]])
            else:
                out.append(c)
            i += 1
        return "".join(out)
    if _INT.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {line_no}: cannot parse value {text!r}") from None


def _parse_value(text: str, line_no: int):
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"line {line_no}: unterminated array {text!r}")
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(part, line_no) for part in inner.split(",")]
    return _parse_scalar(text, line_no)


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    i = 0
    while i < len(line):
        c = line[i]
        if c == '"' and (i == 0 or line[i - 1] != "\\"):
            in_string = not in_string
        if c == "#" and not in_string:
            break
        out.append(c)
        i += 1
    return "".join(out)


def loads(text: str) -> dict:
    """Parse the TOML subset into ``{key: value}`` with section sub-dicts."""
    doc: dict = {}
    section = doc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {line_no}: malformed section header {line!r}")
            name = line[1:-1].strip()
            if not _BARE_KEY.match(name):
                raise ConfigError(f"line {line_no}: bad section name {name!r}")
            if name in doc and not isinstance(doc[name], dict):
                raise ConfigError(f"line {line_no}: section {name!r} collides with a key")
            section = doc.setdefault(name, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not _BARE_KEY.match(key):
            raise ConfigError(f"line {line_no}: bad key {key!r}")
        if key in section:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        section[key] = _parse_value(value, line_no)
    return doc


def _format_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        escaped = escaped.replace("\n", "\\n").replace("\t", "\\t")
        return f'"{escaped}"'
    raise ConfigError(f"cannot serialize value of type {type(value).__name__}")


def dumps(doc: dict) -> str:
    """Write a document produced by :func:`loads` (or shaped like one)."""
    lines = []
    sections = []
    for key, value in doc.items():
        if isinstance(value, dict):
            sections.append((key, value))
        elif isinstance(value, (list, tuple)):
            inner = ", ".join(_format_scalar(v) for v in value)
            lines.append(f"{key} = [{inner}]")
        else:
            lines.append(f"{key} = {_format_scalar(value)}")
    for name, body in sections:
        lines.append("")
        lines.append(f"[{name}]")
        for key, value in body.items():
            if isinstance(value, dict):
                raise ConfigError("nested sections are not supported")
            if isinstance(value, (list, tuple)):
                inner = ", ".join(_format_scalar(v) for v in value)
                lines.append(f"{key} = [{inner}]")
            else:
                lines.append(f"{key} = {_format_scalar(value)}")
    return "\n".join(lines) + "\n"


# document <-> RunConfig

_TOP_LEVEL_TRAIN = {
    "M": ("M", int),
    "T": ("T", int),
    "gamma": ("gamma", float),
    "n": ("n", int),
    "N_mem": ("N_mem", int),
    "e_max": ("e_max", int),
    "epsilon": ("epsilon", float),
    "rho": ("rho", float),
    "E": ("E", int),
    "lambda": ("lam", float),
}

_TRAINING_SECTION = {
    "actor_lr": ("actor_lr", float),
    "critic_lr": ("critic_lr", float),
    "noise_decay": ("noise_decay", float),
    "noise_min": ("noise_min", float),
    "hidden": ("hidden", "int_tuple"),
}

_SCENARIO_SECTION = {"alice_node": str, "bob_node": str, "eve_node": str}

_SYNTH_SECTION = {
    "period": float,
    "amplitude": float,
    "sigma_shared": float,
    "sigma_local": float,
    "eve_decorrelation": float,
}

_TOP_LEVEL_RUN = {"seed", "output_dir", "federated_dir", "checkpoint_every", "eval_episodes"}


def _coerce(value, kind, key: str):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key {key!r} must be an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key {key!r} must be a number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"key {key!r} must be a string, got {value!r}")
        return value
    if kind == "int_tuple":
        if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"key {key!r} must be an array of integers, got {value!r}")
        return tuple(value)
    raise AssertionError(kind)


def from_doc(doc: dict) -> RunConfig:
    """Build a RunConfig from a parsed document; unknown keys are errors."""
    base = default_config()
    train_kwargs = {}
    run_kwargs = {}
    for key, value in doc.items():
        if key in _TOP_LEVEL_TRAIN:
            field, kind = _TOP_LEVEL_TRAIN[key]
            train_kwargs[field] = _coerce(value, kind, key)
        elif key == "seed":
            run_kwargs["seed"] = None if value is None else _coerce(value, int, key)
        elif key == "output_dir":
            run_kwargs["output_dir"] = _coerce(value, str, key)
        elif key == "federated_dir":
            run_kwargs["federated_dir"] = _coerce(value, str, key)
        elif key == "checkpoint_every":
            run_kwargs["checkpoint_every"] = _coerce(value, int, key)
        elif key == "eval_episodes":
            run_kwargs["eval_episodes"] = _coerce(value, int, key)
        elif key in ("scenario", "synth", "training"):
            continue
        else:
            raise ConfigError(f"unknown configuration key {key!r}")

    for key, value in doc.get("training", {}).items():
        if key not in _TRAINING_SECTION:
            raise ConfigError(f"unknown [training] key {key!r}")
        field, kind = _TRAINING_SECTION[key]
        train_kwargs[field] = _coerce(value, kind, key)

    scenario_kwargs = {}
    for key, value in doc.get("scenario", {}).items():
        if key not in _SCENARIO_SECTION:
            raise ConfigError(f"unknown [scenario] key {key!r}")
        scenario_kwargs[key] = _coerce(value, _SCENARIO_SECTION[key], key)

    synth_kwargs = {}
    for key, value in doc.get("synth", {}).items():
        if key not in _SYNTH_SECTION:
            raise ConfigError(f"unknown [synth] key {key!r}")
        synth_kwargs[key] = _coerce(value, _SYNTH_SECTION[key], key)

    try:
        train = replace(base.train, **train_kwargs)
        scenario = replace(
            base.scenario, M=train.M, T=train.T, **scenario_kwargs
        )
        synth = replace(base.synth, **synth_kwargs)
        return RunConfig(
            train=train,
            scenario=scenario,
            synth=synth,
            seed=run_kwargs.get("seed", base.seed),
            output_dir=run_kwargs.get("output_dir", base.output_dir),
            federated_dir=run_kwargs.get("federated_dir", base.federated_dir),
            checkpoint_every=run_kwargs.get("checkpoint_every", base.checkpoint_every),
            eval_episodes=run_kwargs.get("eval_episodes", base.eval_episodes),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def to_doc(cfg: RunConfig) -> dict:
    """Flatten a RunConfig back into the document shape :func:`dumps` takes."""
    train = cfg.train
    doc: dict = {
        "M": train.M,
        "T": train.T,
        "gamma": train.gamma,
        "n": train.n,
        "N_mem": train.N_mem,
        "e_max": train.e_max,
        "epsilon": train.epsilon,
        "rho": train.rho,
        "E": train.E,
        "lambda": train.lam,
        "output_dir": cfg.output_dir,
        "eval_episodes": cfg.eval_episodes,
    }
    if cfg.seed is not None:
        doc["seed"] = cfg.seed
    if cfg.federated_dir is not None:
        doc["federated_dir"] = cfg.federated_dir
    if cfg.checkpoint_every is not None:
        doc["checkpoint_every"] = cfg.checkpoint_every
    doc["scenario"] = {
        "alice_node": cfg.scenario.alice_node,
        "bob_node": cfg.scenario.bob_node,
        "eve_node": cfg.scenario.eve_node,
    }
    doc["synth"] = {
        "period": cfg.synth.period,
        "amplitude": cfg.synth.amplitude,
        "sigma_shared": cfg.synth.sigma_shared,
        "sigma_local": cfg.synth.sigma_local,
        "eve_decorrelation": cfg.synth.eve_decorrelation,
    }
    doc["training"] = {
        "actor_lr": train.actor_lr,
        "critic_lr": train.critic_lr,
        "noise_decay": train.noise_decay,
        "noise_min": train.noise_min,
        "hidden": list(train.hidden),
    }
    return doc


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return from_doc(loads(fh.read()))


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(to_doc(cfg)))
