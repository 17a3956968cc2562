"""Benchmark presets, each a fully populated case configuration."""

from __future__ import annotations

from .config import CaseConfig, validate_config
from .errors import ValidationError

_PRESETS = {
    "shear-cantilever": {
        "case": {"kind": "shear-cantilever", "title": "cantilever under tip shear"},
        "geometry": {"thickness": 1.0, "aspect": 2.0},
        "material": {"model": "svk", "youngs_modulus": 12.0, "poissons_ratio": 0.0},
        "mesh": {"degree": 2, "elements": 3},
        "solver": {"load_steps": 20},
        "loads": {"load_parameter": 4.0},
    },
    "bending-cantilever": {
        "case": {"kind": "bending-cantilever", "title": "cantilever under follower end moment"},
        "geometry": {"length": 200.0, "width": 1.0, "height": 1.0},
        "material": {"model": "svk", "youngs_modulus": 12.0, "poissons_ratio": 0.0},
        "mesh": {"degree": 2, "elements": 20},
        "solver": {"load_steps": 10},
        "loads": {"moment_parameter": 0.5},
    },
    "bathe-arc": {
        "case": {"kind": "bathe-arc", "title": "45-degree arc cantilever, out-of-plane tip force"},
        "geometry": {"radius": 100.0, "sweep_deg": 45.0, "width": 1.0, "height": 1.0},
        "material": {"model": "svk", "youngs_modulus": 1.0e7, "poissons_ratio": 0.0},
        "mesh": {"degree": 2, "elements": 8},
        "solver": {"load_steps": 10},
        "loads": {"force": 600.0},
    },
    "right-angle-frame": {
        "case": {"kind": "right-angle-frame", "title": "lateral buckling of a right-angle frame"},
        "geometry": {"leg_length": 255.0, "width": 30.0, "thickness": 0.6},
        "material": {"model": "svk", "youngs_modulus": 71240.0, "poissons_ratio": 0.31},
        "mesh": {"degree": 2, "elements": 5, "elements_leg2": 5, "mode": "single-patch"},
        "solver": {"load_steps": 100},
        "loads": {"force": 1.485, "perturbation": 0.0002},
    },
    "sc-lattice": {
        "case": {"kind": "sc-lattice", "title": "simple-cubic cell under macroscopic shear"},
        "geometry": {"strut_length": 20.0, "width": 1.0, "height": 1.0},
        "material": {"model": "svk", "youngs_modulus": 80.0, "poissons_ratio": 0.22},
        "mesh": {"degree": 2, "elements": 8},
        "solver": {"load_steps": 20},
        "loads": {"shear": 0.1, "dirichlet_axis": 1},
    },
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset(name: str) -> CaseConfig:
    raw = _PRESETS.get(name)
    if raw is None:
        raise ValidationError(
            f"unknown preset {name!r}; valid presets: {', '.join(preset_names())}"
        )
    return validate_config({k: dict(v) for k, v in raw.items()})
