"""Pipeline configuration: defaults, file loading, and flag overrides.

Config document, JSON (all fields optional, defaults apply)::

    {
      "mask":     {"offset_px": 20.0, "side_rule": "auto_from_arm"},
      "match":    {"ratio_threshold": 0.3, "epipolar_tolerance_px": 2.0,
                   "min_disparity_px": 1.0},
      "pointing": {"scale_factor": 3.0, "z_gap_max": 0.5,
                   "tie_break": "closest_z", "require_shoulder": true}
    }

Precedence: command-line flag beats config file beats built-in default.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any

from . import docio
from .detection import MaskConfig, MatchConfig
from .errors import ParseError
from .resolver import PointingConfig


@dataclass(frozen=True)
class PipelineConfig:
    mask: MaskConfig = field(default_factory=MaskConfig)
    match: MatchConfig = field(default_factory=MatchConfig)
    pointing: PointingConfig = field(default_factory=PointingConfig)


def default_config() -> PipelineConfig:
    return PipelineConfig()


def _section(obj: dict, name: str, cls: Any, current: Any) -> Any:
    if name not in obj:
        return current
    section = docio.as_object(obj[name], name)
    known = {f.name for f in fields(cls)}
    for key in section:
        if key not in known:
            raise ParseError(f"{name}.{key}", "unknown setting")
    return replace(current, **section)


def parse_config(document: str) -> PipelineConfig:
    """Load a config document on top of the defaults.

    Raises:
        ParseError: Malformed JSON or an unknown setting name.
        ValidationError: A setting value violates its invariant.
    """
    obj = docio.parse_object(document)
    base = default_config()
    for key in obj:
        if key not in ("mask", "match", "pointing", "schema_version"):
            raise ParseError(key, "unknown section")
    return PipelineConfig(
        mask=_section(obj, "mask", MaskConfig, base.mask),
        match=_section(obj, "match", MatchConfig, base.match),
        pointing=_section(obj, "pointing", PointingConfig, base.pointing),
    )


def apply_overrides(config: PipelineConfig, overrides: dict[str, Any]) -> PipelineConfig:
    """Apply flat ``section.field -> value`` overrides (flags) on top of a
    config; ``None`` values are ignored so unset flags fall through."""
    mask, match, pointing = config.mask, config.match, config.pointing
    for key, value in overrides.items():
        if value is None:
            continue
        section, _, name = key.partition(".")
        if section == "mask":
            mask = replace(mask, **{name: value})
        elif section == "match":
            match = replace(match, **{name: value})
        elif section == "pointing":
            pointing = replace(pointing, **{name: value})
        else:
            raise ParseError(key, "unknown override")
    return PipelineConfig(mask=mask, match=match, pointing=pointing)


def serialize_config(config: PipelineConfig) -> str:
    return docio.dumps(
        {
            "schema_version": docio.SCHEMA_VERSION,
            "mask": {
                "offset_px": float(config.mask.offset_px),
                "side_rule": config.mask.side_rule,
            },
            "match": {
                "ratio_threshold": float(config.match.ratio_threshold),
                "epipolar_tolerance_px": float(config.match.epipolar_tolerance_px),
                "min_disparity_px": float(config.match.min_disparity_px),
            },
            "pointing": {
                "scale_factor": float(config.pointing.scale_factor),
                "z_gap_max": float(config.pointing.z_gap_max),
                "tie_break": config.pointing.tie_break,
                "require_shoulder": config.pointing.require_shoulder,
            },
        }
    )
