"""Run configuration: defaults, config files, overrides, and hashing.

Config files are flat ``key = value`` text (TOML-style scalars: ints,
floats, booleans, quoted strings; ``#`` comments). Command-line overrides
use the same keys and win over the file. The effective configuration is
hashed so a run can assert it reproduces another run's setup.
"""

import hashlib
import json
from dataclasses import dataclass

from .dropfield import FieldConfig
from .errors import ParameterError


@dataclass
class ProtoParams:
    """Parameters of the canonical droplet texture."""

    radius_px: float = 64.0
    cap_ratio: float = 0.6
    refraction_gain: float = 600.0
    resolution: int = 0   # 0 means the generator default (2 * radius + 1)

    def to_dict(self):
        return {
            "radius_px": self.radius_px,
            "cap_ratio": self.cap_ratio,
            "refraction_gain": self.refraction_gain,
            "resolution": self.resolution,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def make_texture(self):
        from .protodrop import generate_protodrop
        return generate_protodrop(
            radius_px=self.radius_px, cap_ratio=self.cap_ratio,
            refraction_gain=self.refraction_gain,
            resolution=self.resolution or None)


@dataclass
class RenderParams:
    """Rendering options applied on top of the composite map."""

    defocus_sigma: float = 0.0
    rim_darkening: bool = False
    rim_width: float = 0.1
    rim_strength: float = 0.6

    def to_dict(self):
        return {
            "defocus_sigma": self.defocus_sigma,
            "rim_darkening": self.rim_darkening,
            "rim_width": self.rim_width,
            "rim_strength": self.rim_strength,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# Keys routed to each block; the union is the config file vocabulary.
_FIELD_KEYS = {
    "p_r": float, "p_d": float,
    "scale_min": float, "scale_max": float,
    "diameter_min_mm": float, "diameter_max_mm": float,
    "pixels_per_mm": float, "metaball_threshold": float,
    "seed": int, "max_drops": int, "spawn_every_frame": bool,
}
_PROTO_KEYS = {
    "radius_px": float, "cap_ratio": float,
    "refraction_gain": float, "resolution": int,
}
_RENDER_KEYS = {
    "defocus_sigma": float, "rim_darkening": bool,
    "rim_width": float, "rim_strength": float,
}


def _parse_scalar(text, line_no):
    text = text.strip()
    if not text:
        raise ParameterError(f"config line {line_no}: missing value")
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ParameterError(f"config line {line_no}: cannot parse value {text!r}")


def parse_config_file(path):
    """Read a flat key = value config file into a dict."""
    values = {}
    with open(path) as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"config line {line_no}: expected key = value, got {raw!r}")
            key, text = line.split("=", 1)
            values[key.strip()] = _parse_scalar(text, line_no)
    return values


def parse_overrides(pairs):
    """Parse repeated key=value command-line overrides."""
    values = {}
    for i, pair in enumerate(pairs or (), start=1):
        if "=" not in pair:
            raise ParameterError(f"override {pair!r} is not key=value")
        key, text = pair.split("=", 1)
        values[key.strip()] = _parse_scalar(text, i)
    return values


def _coerce(key, value, want):
    if want is bool:
        if isinstance(value, bool):
            return value
        raise ParameterError(f"config key {key} expects true/false, got {value!r}")
    if isinstance(value, bool) or isinstance(value, str):
        raise ParameterError(f"config key {key} expects a number, got {value!r}")
    return want(value)


def build_configs(file_values=None, overrides=None, seed=None):
    """Resolve defaults + config file + overrides into the three config blocks.

    Returns (FieldConfig, ProtoParams, RenderParams). Unknown keys raise
    ParameterError so typos fail loudly.
    """
    merged = {}
    merged.update(file_values or {})
    merged.update(overrides or {})
    if seed is not None:
        merged["seed"] = int(seed)

    field_kwargs = {}
    proto = ProtoParams()
    rparams = RenderParams()
    ranges = {
        "scale_min": None, "scale_max": None,
        "diameter_min_mm": None, "diameter_max_mm": None,
    }
    for key, value in merged.items():
        if key in _FIELD_KEYS:
            coerced = _coerce(key, value, _FIELD_KEYS[key])
            if key in ranges:
                ranges[key] = coerced
            else:
                field_kwargs[key] = coerced
        elif key in _PROTO_KEYS:
            setattr(proto, key, _coerce(key, value, _PROTO_KEYS[key]))
        elif key in _RENDER_KEYS:
            setattr(rparams, key, _coerce(key, value, _RENDER_KEYS[key]))
        else:
            raise ParameterError(f"unknown config key {key!r}")

    base = FieldConfig()
    scale = (ranges["scale_min"] if ranges["scale_min"] is not None else base.scale_range[0],
             ranges["scale_max"] if ranges["scale_max"] is not None else base.scale_range[1])
    diam = (ranges["diameter_min_mm"] if ranges["diameter_min_mm"] is not None
            else base.diameter_range_mm[0],
            ranges["diameter_max_mm"] if ranges["diameter_max_mm"] is not None
            else base.diameter_range_mm[1])
    field = FieldConfig(scale_range=scale, diameter_range_mm=diam, **field_kwargs)
    return field, proto, rparams


def config_hash(field_cfg, proto_params, render_params, extra=None):
    """Stable hash of the effective configuration."""
    blob = {
        "field": field_cfg.to_dict(),
        "proto": proto_params.to_dict(),
        "render": render_params.to_dict(),
    }
    if extra:
        blob["extra"] = extra
    canon = json.dumps(blob, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
