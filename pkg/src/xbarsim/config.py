"""Structured configuration files overriding technology and fabric fields.

A config file is JSON with at most two sections::

    {
      "technology": {"name": "MRAM", "r_low": 3000.0, "sigma_noise": 5e-4},
      "fabric": {"subarray_rows": 64, "subarray_cols": 64,
                 "bitcell": "1T1R", "parasitics_enabled": true}
    }

Any TechnologyProfile field may appear under "technology" and any
FabricConfig scalar field under "fabric".  Unknown keys (at either
level) are an error, as are values of the wrong type.  On the command
line, explicit flags win over config values.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .devices import BitcellType, TechnologyProfile, technology_by_name

_TECH_FIELDS = {f.name: f for f in dataclasses.fields(TechnologyProfile)}
_FABRIC_KEYS = {"subarray_rows": int, "subarray_cols": int, "bitcell": str,
                "parasitics_enabled": bool}


class ConfigError(ValueError):
    pass


def load_config(path: str | Path) -> dict:
    """Parse and validate a config file; returns the raw section dict."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    unknown = set(raw) - {"technology", "fabric"}
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")

    tech = raw.get("technology", {})
    if not isinstance(tech, dict):
        raise ConfigError("'technology' must be an object")
    bad = set(tech) - set(_TECH_FIELDS)
    if bad:
        raise ConfigError(f"unknown technology key(s): {sorted(bad)}")
    for key, value in tech.items():
        want = str if key == "name" else (int, float)
        if not isinstance(value, want) or isinstance(value, bool):
            raise ConfigError(f"technology.{key} must be "
                              f"{'a string' if key == 'name' else 'a number'}")

    fabric = raw.get("fabric", {})
    if not isinstance(fabric, dict):
        raise ConfigError("'fabric' must be an object")
    bad = set(fabric) - set(_FABRIC_KEYS)
    if bad:
        raise ConfigError(f"unknown fabric key(s): {sorted(bad)}")
    for key, value in fabric.items():
        want = _FABRIC_KEYS[key]
        if want is int and (isinstance(value, bool) or not isinstance(value, int)):
            raise ConfigError(f"fabric.{key} must be an integer")
        if want is str and not isinstance(value, str):
            raise ConfigError(f"fabric.{key} must be a string")
        if want is bool and not isinstance(value, bool):
            raise ConfigError(f"fabric.{key} must be true/false")

    return raw


def resolve_technology(config: dict, base: TechnologyProfile | None = None
                       ) -> TechnologyProfile:
    """Apply a config's technology section over a base profile.

    The base is, in order: the explicitly requested profile, the profile
    named in the config, or the builtin MRAM default.
    """
    section = dict(config.get("technology", {}))
    name = section.pop("name", None)
    if base is None:
        base = technology_by_name(name) if name else technology_by_name("MRAM")
    elif name and name.lower() != base.name.lower():
        # config names a different technology than the explicit flag; the
        # flag wins but its fields are still overridable
        pass
    if not section:
        return base
    try:
        return base.with_overrides(**{k: float(v) for k, v in section.items()})
    except ValueError as exc:
        raise ConfigError(f"invalid technology override: {exc}")


def fabric_overrides(config: dict) -> dict:
    """FabricConfig keyword overrides from a config's fabric section."""
    section = dict(config.get("fabric", {}))
    if "bitcell" in section:
        try:
            section["bitcell"] = BitcellType.parse(section["bitcell"])
        except ValueError as exc:
            raise ConfigError(str(exc))
    return section
