"""Case configuration: strict TOML schema, parsing and emission.

Unknown sections or keys are hard errors (silent typos in benchmark configs
corrupt comparisons); every error carries the offending field path.  Emission
uses a fixed key order and shortest round-trip float formatting, so a config
survives emit -> parse unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError

CASE_KINDS = (
    "shear-cantilever",
    "bending-cantilever",
    "bathe-arc",
    "right-angle-frame",
    "sc-lattice",
    "custom",
)

_REQUIRED = object()

_GEOMETRY_KEYS = {
    "shear-cantilever": {"thickness": (float, 1.0), "aspect": (float, _REQUIRED)},
    "bending-cantilever": {
        "length": (float, _REQUIRED),
        "width": (float, 1.0),
        "height": (float, 1.0),
    },
    "bathe-arc": {
        "radius": (float, _REQUIRED),
        "sweep_deg": (float, 45.0),
        "width": (float, 1.0),
        "height": (float, 1.0),
    },
    "right-angle-frame": {
        "leg_length": (float, _REQUIRED),
        "width": (float, _REQUIRED),
        "thickness": (float, _REQUIRED),
    },
    "sc-lattice": {
        "strut_length": (float, _REQUIRED),
        "width": (float, 1.0),
        "height": (float, 1.0),
    },
    "custom": {
        "length": (float, _REQUIRED),
        "width": (float, _REQUIRED),
        "height": (float, _REQUIRED),
    },
}

_LOAD_KEYS = {
    "shear-cantilever": {"load_parameter": (float, 4.0)},
    "bending-cantilever": {"moment_parameter": (float, 0.5)},
    "bathe-arc": {"force": (float, 600.0)},
    "right-angle-frame": {
        "force": (float, 1.485),
        "perturbation": (float, 0.0002),
    },
    "sc-lattice": {"shear": (float, 0.1), "dirichlet_axis": (int, 1)},
    "custom": {"force": (list, _REQUIRED)},
}

_MESH_KEYS = {
    "degree": (int, 2),
    "elements": (int, _REQUIRED),
    "cross_degree": (int, 1),
    "cross_elements": (int, 1),
    "mode": (str, "single-patch"),
    "elements_leg2": (int, 0),
}

_SECTION_ORDER = ("case", "geometry", "material", "mesh", "formulation", "solver", "loads", "output")

_COMMON = {
    "case": {"kind": (str, _REQUIRED), "title": (str, "")},
    "material": {
        "model": (str, "svk"),
        "youngs_modulus": (float, _REQUIRED),
        "poissons_ratio": (float, _REQUIRED),
    },
    "formulation": {"name": (str, "ans-eas-mip")},
    "solver": {
        "load_steps": (int, 10),
        "max_iterations": (int, 30),
        "residual_tolerance": (float, 1e-8),
        "energy_tolerance": (float, 1e-12),
        "step_cutback": (bool, True),
    },
    "output": {"vtk": (bool, True), "vtk_density": (int, 1)},
}


@dataclass
class CaseConfig:
    kind: str
    title: str = ""
    geometry: dict = field(default_factory=dict)
    material: dict = field(default_factory=dict)
    mesh: dict = field(default_factory=dict)
    formulation: str = "ans-eas-mip"
    solver: dict = field(default_factory=dict)
    loads: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)


def _coerce(value, want, path):
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if want is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", path)
        return value
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    if want is list:
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", path)
        return [float(v) for v in value]
    raise ConfigError(f"unhandled schema type {want}", path)


def _apply_schema(section: dict, schema: dict, path: str) -> dict:
    out = {}
    for key, raw in section.items():
        if key not in schema:
            raise ConfigError("unknown key", f"{path}.{key}")
        out[key] = _coerce(raw, schema[key][0], f"{path}.{key}")
    for key, (_, default) in schema.items():
        if key not in out:
            if default is _REQUIRED:
                raise ConfigError("missing required key", f"{path}.{key}")
            out[key] = default
    return out


def validate_config(raw: dict) -> CaseConfig:
    for section in raw:
        if section not in _SECTION_ORDER:
            raise ConfigError("unknown section", section)
    case = _apply_schema(raw.get("case", {}), _COMMON["case"], "case")
    kind = case["kind"]
    if kind not in CASE_KINDS:
        raise ConfigError(f"unknown case kind {kind!r}; expected one of {CASE_KINDS}", "case.kind")

    geometry = _apply_schema(raw.get("geometry", {}), _GEOMETRY_KEYS[kind], "geometry")
    material = _apply_schema(raw.get("material", {}), _COMMON["material"], "material")
    mesh = _apply_schema(raw.get("mesh", {}), _MESH_KEYS, "mesh")
    formulation = _apply_schema(raw.get("formulation", {}), _COMMON["formulation"], "formulation")
    solver = _apply_schema(raw.get("solver", {}), _COMMON["solver"], "solver")
    loads = _apply_schema(raw.get("loads", {}), _LOAD_KEYS[kind], "loads")
    output = _apply_schema(raw.get("output", {}), _COMMON["output"], "output")

    if material["model"] not in ("svk", "neo-hookean"):
        raise ConfigError(f"unknown material model {material['model']!r}", "material.model")
    for key in ("youngs_modulus",):
        if material[key] <= 0.0:
            raise ConfigError("must be positive", f"material.{key}")
    for key, val in geometry.items():
        if isinstance(val, float) and val <= 0.0:
            raise ConfigError("must be positive", f"geometry.{key}")
    if mesh["degree"] < 1 or mesh["elements"] < 1:
        raise ConfigError("degree and elements must be >= 1", "mesh")
    if mesh["mode"] not in ("single-patch", "two-patch"):
        raise ConfigError(f"unknown mode {mesh['mode']!r}", "mesh.mode")

    return CaseConfig(
        kind=kind,
        title=case["title"],
        geometry=geometry,
        material=material,
        mesh=mesh,
        formulation=formulation["name"],
        solver=solver,
        loads=loads,
        output=output,
    )


def parse_config_text(text: str) -> CaseConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc
    return validate_config(raw)


def load_config(path) -> CaseConfig:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return parse_config_text(text)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        s = repr(v)
        return s if any(c in s for c in ".eE") else s + ".0"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot emit value {v!r}")


def emit_config(cfg: CaseConfig) -> str:
    sections = {
        "case": {"kind": cfg.kind, "title": cfg.title},
        "geometry": cfg.geometry,
        "material": cfg.material,
        "mesh": cfg.mesh,
        "formulation": {"name": cfg.formulation},
        "solver": cfg.solver,
        "loads": cfg.loads,
        "output": cfg.output,
    }
    lines = []
    for name in _SECTION_ORDER:
        table = sections[name]
        if not table:
            continue
        lines.append(f"[{name}]")
        for key, val in table.items():
            lines.append(f"{key} = {_toml_value(val)}")
        lines.append("")
    return "\n".join(lines)


def set_override(raw: dict, dotted_key: str, value_text: str) -> None:
    """Apply a ``section.key=value`` override onto a raw config dict."""
    parts = dotted_key.split(".")
    if len(parts) != 2:
        raise ConfigError("override keys use the form section.key", dotted_key)
    section, key = parts
    try:
        parsed = tomllib.loads(f"v = {value_text}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value_text
    raw.setdefault(section, {})[key] = parsed
