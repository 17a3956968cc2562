"""Command-line front end: run benchmark cases, emit presets, sweep parameters.

Exit codes: 0 converged, 2 validation error, 3 solver non-convergence (with
partial outputs written), 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
from concurrent.futures import ProcessPoolExecutor

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .cases import build_case
from .config import CaseConfig, emit_config, load_config, set_override, validate_config
from .errors import ConfigError, StepFailure, ValidationError
from .homogenize import effective_stress
from .presets import preset, preset_names
from .solver import newton_solve
from .vtkio import export_vtk

CSV_HEADER = "step,lambda,load_param,u,v,w,phi,iters,residual"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def relative_error(value: float, reference: float) -> float:
    """|(reference - value) / reference|; undefined for a zero reference."""
    if reference == 0.0:
        raise ValidationError("relative error is undefined for a zero reference")
    return abs((reference - value) / reference)


def run_case(cfg: CaseConfig, out_dir) -> int:
    """Build, solve and write response.csv plus per-step geometry files."""
    os.makedirs(out_dir, exist_ok=True)
    built = build_case(cfg)
    probe_name = next(iter(built.model.probes), None)
    write_vtk = cfg.output.get("vtk", True)
    density = cfg.output.get("vtk_density", 1)

    rows = [
        (0, 0.0, built.load_param(0.0), 0.0, 0.0, 0.0, 0.0, 0, 0.0),
    ]
    stress_rows = []

    def callback(record, asm):
        disp = (0.0, 0.0, 0.0)
        rot = 0.0
        if probe_name is not None:
            res = record.probes[probe_name]
            disp = tuple(res.displacement)
            rot = res.rotation
        rows.append(
            (
                record.step,
                record.load_factor,
                built.load_param(record.load_factor),
                disp[0],
                disp[1],
                disp[2],
                rot,
                record.iterations,
                record.residuals[-1],
            )
        )
        if built.macro is not None:
            eff = effective_stress(asm, record.displacement)
            stress_rows.append((record.step, record.load_factor, eff.p_star))
        if write_vtk:
            export_vtk(
                built.model,
                record.displacement,
                os.path.join(out_dir, f"step_{record.step:03d}.vtk"),
                density,
            )

    code = 0
    try:
        newton_solve(built.model, built.solver, callback)
    except StepFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        code = 3

    lines = [CSV_HEADER]
    for step, lam, param, u, v, w, phi, iters, res in rows:
        lines.append(
            f"{step},{_fmt(lam)},{_fmt(param)},{_fmt(u)},{_fmt(v)},{_fmt(w)},"
            f"{_fmt(phi)},{iters},{_fmt(res)}"
        )
    with open(os.path.join(out_dir, "response.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")

    if built.macro is not None:
        header = "step,lambda,shear," + ",".join(
            f"P{i + 1}{j + 1}" for i in range(3) for j in range(3)
        )
        slines = [header]
        for step, lam, p_star in stress_rows:
            comps = ",".join(_fmt(p_star[i, j]) for i in range(3) for j in range(3))
            slines.append(f"{step},{_fmt(lam)},{_fmt(built.load_param(lam))},{comps}")
        with open(os.path.join(out_dir, "effective_stress.csv"), "w") as fh:
            fh.write("\n".join(slines) + "\n")
    return code


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    return run_case(cfg, args.out)


def _cmd_preset(args) -> int:
    cfg_raw = None
    try:
        base = preset(args.name)
    except ValidationError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    if args.overrides:
        raw = tomllib.loads(emit_config(base))
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form section.key=value")
            key, _, value = item.partition("=")
            set_override(raw, key, value)
        cfg_raw = validate_config(raw)
    else:
        cfg_raw = base
    text = emit_config(cfg_raw)
    if args.emit_config:
        with open(args.emit_config, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _sweep_item(payload):
    cfg, out_dir = payload
    return run_case(cfg, out_dir)


def _cmd_sweep(args) -> int:
    with open(args.config, "rb") as fh:
        raw = tomllib.load(fh)
    key, _, values = args.param.partition("=")
    if not values:
        raise ConfigError("--param expects key=v1,v2,...")
    jobs = []
    for value in values.split(","):
        variant = copy.deepcopy(raw)
        set_override(variant, key, value)
        cfg = validate_config(variant)
        tag = f"{key.replace('.', '-')}-{value}"
        jobs.append((cfg, os.path.join(args.out, tag)))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_sweep_item, jobs))
    else:
        codes = [_sweep_item(j) for j in jobs]
    return max(codes)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isb", description="finite-strain isogeometric solid-beam benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a case from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="out")
    p_run.set_defaults(func=_cmd_run)

    p_pre = sub.add_parser("preset", help="emit a benchmark preset config")
    p_pre.add_argument("name", help=f"one of: {', '.join(preset_names())}")
    p_pre.add_argument("overrides", nargs="*", help="section.key=value overrides")
    p_pre.add_argument("--emit-config", default=None)
    p_pre.set_defaults(func=_cmd_preset)

    p_sw = sub.add_parser("sweep", help="run a config over a list of parameter values")
    p_sw.add_argument("config")
    p_sw.add_argument("--param", required=True, help="section.key=v1,v2,...")
    p_sw.add_argument("--out", default="out")
    p_sw.add_argument("--jobs", type=int, default=1)
    p_sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except StepFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
