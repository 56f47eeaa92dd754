import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from loguru import logger
from pydantic import ValidationError

from projects.ida_verify.src import PRESETS_DIR
from projects.ida_verify.src.analysis.rebuttal import AugmentedEnergy
from projects.ida_verify.src.core.errors import ConfigError
from projects.ida_verify.src.core.types import ControllerGains, MechanicalModel, TargetDesign
from projects.ida_verify.src.models.iwp import build_iwp, iwp_energy
from projects.ida_verify.src.models.rip import RipFields, build_rip
from projects.ida_verify.src.schemas.config import (
    IwpParams,
    ModelFile,
    ModelOverrides,
    RipFieldsConfig,
)

PRESET_ALIASES = {"iwp": "iwp-default", "rip": "rip-default"}


@dataclass(frozen=True, eq=False)
class LoadedModel:
    """Everything the analyses need for one named or file-based model."""

    kind: str
    label: str
    model: MechanicalModel
    target: TargetDesign
    gains: ControllerGains
    energy: AugmentedEnergy
    iwp: Optional[IwpParams] = None
    rip: Optional[RipFields] = None


def resolve_model_path(name: str) -> Path:
    preset = PRESETS_DIR / f"{PRESET_ALIASES.get(name, name)}.json"
    if preset.exists():
        return preset
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"Model '{name}' is neither a preset nor an existing file")
    return path


def load_model_file(name: str) -> ModelFile:
    path = resolve_model_path(name)
    try:
        with open(path) as f:
            data = json.load(f)
        return ModelFile.model_validate(data)
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"Invalid model file {path}: {e}")


def _apply(params, overrides: ModelOverrides, mapping: dict):
    updates = {
        field: getattr(overrides, source)
        for source, field in mapping.items()
        if getattr(overrides, source) is not None
    }
    if not updates:
        return params
    try:
        return type(params)(**{**params.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigError(f"Overrides violate model constraints: {e}")


def load_model(name: str = "iwp", overrides: Optional[ModelOverrides] = None) -> LoadedModel:
    """Build model, target, gains and H~ from a preset name or a JSON parameter file."""
    overrides = overrides or ModelOverrides()
    model_file = load_model_file(name)
    logger.info(f"Loading {model_file.kind} model from '{name}'")

    if model_file.kind == "iwp":
        params = _apply(
            model_file.iwp or IwpParams(),
            overrides,
            {
                "Kp_scalar": "Kp_scalar",
                "Ki_scalar": "Ki_scalar",
                "Kv_scalar": "Kv_scalar",
                "j2": "j2",
            },
        )
        model, target, gains = build_iwp(params, overrides.fully_actuated)
        return LoadedModel(
            kind="iwp",
            label=name,
            model=model,
            target=target,
            gains=gains,
            energy=iwp_energy(params, target),
            iwp=params,
        )

    config = _apply(
        model_file.rip or RipFieldsConfig(),
        overrides,
        {"Kp_scalar": "k_p", "Ki_scalar": "k_i", "Kv_scalar": "k_v", "j2": "j2"},
    )
    fields = RipFields.from_config(config)
    design = build_rip(fields, fully_actuated=overrides.fully_actuated)
    return LoadedModel(
        kind="rip",
        label=name,
        model=design.model,
        target=design.target,
        gains=design.gains,
        energy=AugmentedEnergy.from_target(design.target),
        rip=fields,
    )
