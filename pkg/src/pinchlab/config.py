"""Experiment configuration: schema-checked JSON in, run setup out.

A configuration either names a preset or spells out the subshift, the
Markov matrix, and the cocycle table explicitly. Validation reports the
offending field by its dotted path, so a bad tolerance or a malformed
table is caught before any stage runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import jsonschema

from .circle import CircleMap
from .cocycle import CocycleBase, TableCocycle
from .errors import PreconditionError
from .presets import Preset, get_preset
from .symbolic import markov_measure, Sft

ALL_STAGES = (
    "check-domination",
    "find-pinching",
    "holonomy-audit",
    "estimate-measure",
    "exponent",
    "su-defect",
    "perturb",
    "re-evaluate",
)


class ConfigError(PreconditionError):
    """The configuration file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class Tolerances:
    holonomy: float = 1e-10
    margin: float = 0.01
    eps: float = 0.1


@dataclass(frozen=True)
class Parameters:
    """Stage-level knobs; the defaults suit the shipped presets."""

    max_period: int = 3
    domination_threshold: float = 1.0
    audit_pairs: int = 20
    depth: int = 30
    atom_count: int = 256
    point_count: int = 6
    core_length: int = 24
    exponent_samples: int = 40
    n_max: int = 150
    defect_pairs: int = 12
    bump_outer: int = 12
    bump_inner: int = 13
    max_bridge_length: int = 4


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict = field(repr=False)
    stages: tuple[str, ...] = ALL_STAGES
    tolerances: Tolerances = Tolerances()
    parameters: Parameters = Parameters()
    seed: int = 0
    out_dir: str = "runs/experiment"

    def setup(self) -> Preset:
        return build_setup(self.raw)

    def with_stages(self, stages) -> "ExperimentConfig":
        return replace(self, stages=tuple(stages))


def _schema() -> dict:
    text = resources.files("pinchlab.data").joinpath("config_schema.json").read_text()
    return json.loads(text)


def validate_raw(raw: dict) -> None:
    """Schema check plus the preset-or-explicit consistency rule."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "(top level)"
        raise ConfigError(f"config field '{path}': {err.message}")
    if "preset" in raw:
        for key in ("sft", "markov", "cocycle"):
            if key in raw:
                raise ConfigError(
                    f"config field '{key}': not allowed together with 'preset'")
    else:
        missing = [k for k in ("sft", "markov", "cocycle") if k not in raw]
        if missing:
            raise ConfigError(
                f"config field '{missing[0]}': required when no 'preset' is named")


def _parse_word(text: str) -> tuple[int, ...]:
    return tuple(int(ch) for ch in text)


def build_setup(raw: dict) -> Preset:
    """Resolve the validated configuration into a runnable setup."""
    if "preset" in raw:
        return get_preset(raw["preset"])
    sft = Sft(raw["sft"]["transitions"])
    rho = float(raw.get("metric_base", 2.0))
    measure = markov_measure(sft, raw["markov"], rho)
    raw_cocycle = raw["cocycle"]
    table = {
        _parse_word(word): CircleMap(entry["breakpoints"], entry["values"])
        for word, entry in raw_cocycle["table"].items()
    }
    cocycle: CocycleBase = TableCocycle(
        sft, raw_cocycle["radius"], table,
        alpha=raw_cocycle.get("alpha", 1.0), beta=raw_cocycle.get("beta", 1.0))
    return Preset(
        name="custom",
        sft=sft,
        measure=measure,
        cocycle=cocycle,
        rho=rho,
        summary="explicit table cocycle from configuration",
    )


def parse_config(raw: dict) -> ExperimentConfig:
    validate_raw(raw)
    build_setup(raw)  # surface semantic errors (bad matrix, bad table) up front
    tol = Tolerances(**raw.get("tolerances", {}))
    params = Parameters(**raw.get("parameters", {}))
    return ExperimentConfig(
        raw=raw,
        stages=tuple(raw.get("stages", ALL_STAGES)),
        tolerances=tol,
        parameters=params,
        seed=int(raw.get("seed", 0)),
        out_dir=raw.get("out_dir", "runs/experiment"),
    )


def load_config(
    path: str,
    seed: int | None = None,
    out_dir: str | None = None,
    tol: float | None = None,
) -> ExperimentConfig:
    """Read, validate, and resolve a configuration file.

    The keyword overrides mirror the command line flags: seed and output
    directory replace their config values, tol replaces the holonomy
    tolerance.
    """
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a JSON object")
    cfg = parse_config(raw)
    if seed is not None:
        if seed < 0:
            raise ConfigError("config field 'seed': must be nonnegative")
        cfg = replace(cfg, seed=int(seed))
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    if tol is not None:
        if tol <= 0.0:
            raise ConfigError("config field 'tolerances.holonomy': must be positive")
        cfg = replace(cfg, tolerances=replace(cfg.tolerances, holonomy=float(tol)))
    return cfg
