"""Command line entry point: ``roughcanal SUBCOMMAND --config run.json --out DIR``.

Exit status: 0 on success, 1 on a domain or solver error, 2 on a usage or config error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .canal import (CrossSection, dispersion, rectangle_threshold, threshold, trace_constant_check,
                    weyl_overlap, weyl_term)
from .certify import CanalConfig, certify, find_epsilon
from .errors import ConfigError, RoughCanalError, NotFoundError
from .fem.mesh import DEFAULT_NODE_BUDGET, export_mesh
from .geometry import CellGeometry, PlateGeometry
from .homogenize import effective_tensor, effective_tensor_boundary_form, solve_correctors
from .limit import LimitProblem, separable_values, solve_limit
from .plate import admissible_eps, convergence_study, flat_plate_values, solve_plate_steklov

CONFIG_VERSION = 1
SUBCOMMANDS = ("homogenize", "limit-spectrum", "steklov", "threshold", "dispersion", "weyl",
               "convergence", "certify", "find-eps")

DEFAULT_SOLVER = {
    "cell_res": [4, 4, 4],
    "limit_res": [64, 64],
    "tol": 1e-9,
    "modes": 4,
    "section_h": None,
    "threshold_method": "auto",
    "budget_nodes": DEFAULT_NODE_BUDGET,
}


# ---------------------------------------------------------------- config handling

def _get(block, key, path, kind=float, positive=False, default=None, required=True):
    if key not in block:
        if required and default is None:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    val = block[key]
    try:
        if kind is float:
            val = float(val)
            if not math.isfinite(val):
                raise ValueError
        elif kind is int:
            if int(val) != val:
                raise ValueError
            val = int(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, got {block[key]!r}") from None
    if positive and not val > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {val!r}")
    return val


def _int_list(block, key, path, length, default):
    val = block.get(key, default)
    if not isinstance(val, (list, tuple)) or len(val) != length:
        raise ConfigError(f"{path}.{key}: expected a list of {length} integers, got {val!r}")
    out = []
    for i, v in enumerate(val):
        if not isinstance(v, (int, float)) or int(v) != v or v < 1:
            raise ConfigError(f"{path}.{key}[{i}]: expected a positive integer, got {v!r}")
        out.append(int(v))
    return out


def resolve_config(raw, base_dir=Path(".")):
    """Validate a raw JSON config and fill defaults; raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    cfg = copy.deepcopy(raw)
    version = cfg.get("version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"version: expected {CONFIG_VERSION}, got {version!r}")
    solver = dict(DEFAULT_SOLVER)
    solver.update(cfg.get("solver", {}))
    _int_list(solver, "cell_res", "solver", 3, None)
    _int_list(solver, "limit_res", "solver", 2, None)
    _get(solver, "tol", "solver", positive=True)
    _get(solver, "modes", "solver", int, positive=True)
    _get(solver, "budget_nodes", "solver", int, positive=True)
    if solver["section_h"] is not None:
        _get(solver, "section_h", "solver", positive=True)
    if solver["threshold_method"] not in ("auto", "analytic", "fem"):
        raise ConfigError(f"solver.threshold_method: unknown value {solver['threshold_method']!r}")
    cfg["solver"] = solver
    cfg.setdefault("command", {})
    if "cell" in cfg:
        _check_cell_block(cfg["cell"], base_dir)
    if "plate" in cfg:
        for key in ("A1", "A2", "eps"):
            _get(cfg["plate"], key, "plate", positive=True)
    if "section" in cfg:
        _check_section_block(cfg["section"])
    return cfg


def _check_cell_block(cell, base_dir):
    if "file" in cell:
        path = Path(cell["file"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"cell.file: {path} does not exist")
        return
    for key in ("a1", "a2"):
        _get(cell, key, "cell", positive=True, default=1.0, required=False)
    kind = cell.get("profile", "flat")
    if kind == "flat":
        _get(cell, "h", "cell", positive=True)
    elif kind == "corrugated":
        mean = _get(cell, "mean", "cell", positive=True)
        amp = _get(cell, "amplitude", "cell", default=0.0, required=False)
        if mean - abs(amp) <= 0:
            raise ConfigError("cell.amplitude: depth mean - |amplitude| must stay positive")
    elif kind == "grid":
        depth = np.asarray(cell.get("depth"), dtype=float)
        if depth.ndim != 2:
            raise ConfigError("cell.depth: expected a 2D list of depth samples")
        if depth.min() <= 0:
            raise ConfigError(f"cell.depth: samples must be positive, min is {depth.min()!r}")
    else:
        raise ConfigError(f"cell.profile: unknown profile {kind!r} (flat, corrugated, grid)")
    if "H" in cell:
        _get(cell, "H", "cell", positive=True)


def _check_section_block(sec):
    if "rectangle" in sec:
        _get(sec["rectangle"], "l", "section.rectangle", positive=True)
        _get(sec["rectangle"], "depth", "section.rectangle", positive=True)
    elif not ("vertices" in sec and "tags" in sec):
        raise ConfigError("section: give either 'rectangle' {l, depth} or 'vertices' and 'tags'")


def build_cell(cfg, base_dir=Path(".")):
    if "cell" not in cfg:
        raise ConfigError("cell: block required for this command")
    c = cfg["cell"]
    try:
        if "file" in c:
            path = Path(c["file"])
            return CellGeometry.load(path if path.is_absolute() else base_dir / path)
        a1, a2 = float(c.get("a1", 1.0)), float(c.get("a2", 1.0))
        kind = c.get("profile", "flat")
        if kind == "flat":
            return CellGeometry.flat(a1, a2, float(c["h"]), c.get("H"))
        if kind == "corrugated":
            return CellGeometry.corrugated(float(c["mean"]), float(c.get("amplitude", 0.0)), a1, a2,
                                           c.get("H"), int(c.get("n1", 5)))
        depth = np.asarray(c["depth"], dtype=float)
        return CellGeometry(a1, a2, float(c.get("H", depth.max())), depth)
    except RoughCanalError as exc:
        raise ConfigError(f"cell: {exc}") from exc


def build_plate(cfg, cell, eps=None):
    if "plate" not in cfg:
        raise ConfigError("plate: block required for this command")
    p = cfg["plate"]
    e = float(p["eps"]) if eps is None else eps
    try:
        return PlateGeometry(cell, float(p["A1"]), float(p["A2"]), e)
    except RoughCanalError as exc:
        raise ConfigError(f"plate: {exc}") from exc


def build_section(cfg, half=None):
    if "section" not in cfg:
        raise ConfigError("section: block required for this command")
    s = cfg["section"]
    h = bool(s.get("half", True)) if half is None else half
    try:
        if "rectangle" in s:
            return CrossSection.rectangle(float(s["rectangle"]["l"]), float(s["rectangle"]["depth"]), half=h)
        return CrossSection.from_vertices(s["vertices"], s["tags"], half=h)
    except RoughCanalError as exc:
        raise ConfigError(f"section: {exc}") from exc


# ---------------------------------------------------------------- serialization

def round_sig(x, digits=12):
    """Round floats to ``digits`` significant digits; non-finite values become strings."""
    if isinstance(x, dict):
        return {str(k): round_sig(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round_sig(v, digits) for v in x]
    if isinstance(x, np.ndarray):
        return round_sig(x.tolist(), digits)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{digits}g}")
    return x


def write_json(path, payload):
    Path(path).write_text(json.dumps(round_sig(payload), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- subcommands

def _eps_override(args):
    return args.eps[0] if args.eps else None


def cmd_homogenize(cfg, args, out, base):
    cell = build_cell(cfg, base)
    res = cfg["solver"]["cell_res"]
    corr = solve_correctors(cell, res)
    b = effective_tensor(cell, corr)
    b_alt = effective_tensor_boundary_form(cell, corr)
    if args.dump_mesh:
        export_mesh(corr.mesh, out / "cell_mesh.txt")
    return {
        "b": b.b, "cell_volume": b.cell_volume, "cover_area": b.cover_area,
        "b_eigenvalues": b.eigenvalues(),
        "corrector_max_abs": np.abs(corr.W).max(axis=0),
        "boundary_form_difference": float(np.abs(b.b - b_alt.b).max()),
    }


def cmd_limit(cfg, args, out, base):
    cell = build_cell(cfg, base)
    p = cfg["plate"] if "plate" in cfg else {}
    A1 = _get(p, "A1", "plate", positive=True)
    A2 = _get(p, "A2", "plate", positive=True)
    half = bool(cfg["command"].get("half", False))
    k = args.modes or cfg["solver"]["modes"]
    corr = solve_correctors(cell, cfg["solver"]["cell_res"])
    tensor = effective_tensor(cell, corr)
    spec = solve_limit(LimitProblem(tensor, A1, A2, half), k, cfg["solver"]["limit_res"],
                       tol=cfg["solver"]["tol"], seed=args.seed)
    result = {"tau": spec.values, "half": half, "b": tensor.b, "residuals": spec.residuals,
              "clusters": [list(c) for c in spec.clusters]}
    if tensor.is_diagonal():
        result["separable_tau"] = separable_values(tensor, A1, A2, k, half)
    return result


def cmd_steklov(cfg, args, out, base):
    cell = build_cell(cfg, base)
    plate = build_plate(cfg, cell, _eps_override(args))
    half = bool(cfg["command"].get("half", True))
    k = args.modes or cfg["solver"]["modes"]
    spec = solve_plate_steklov(plate, half, k, cfg["solver"]["cell_res"],
                               args.budget_nodes or cfg["solver"]["budget_nodes"], cfg["solver"]["tol"], args.seed)
    mesh = spec.meta["mesh"]
    if args.dump_mesh:
        export_mesh(mesh, out / "plate_mesh.txt")
    result = {"alpha": spec.values, "eps": plate.eps, "half": half, "nodes": mesh.n_vertices,
              "N": [plate.N1, plate.N2], "residuals": spec.residuals,
              "clusters": [list(c) for c in spec.clusters]}
    if cell.is_flat():
        result["flat_oracle"] = flat_plate_values(plate.A1, plate.A2, plate.eps * cell.depth[0, 0], k, half)
    return result


def cmd_threshold(cfg, args, out, base):
    section = build_section(cfg, half=True)
    method = cfg["command"].get("method", "fem")
    res = threshold(section, cfg["solver"]["section_h"], method=method, tol=cfg["solver"]["tol"])
    result = {"lambda_gamma0": res.lambda_gamma0, "mu_gamma0": res.mu_gamma0, "method": res.method,
              "notes": res.notes}
    if section.is_rectangle:
        result["separable_oracle"] = rectangle_threshold(section.half_width, section.depth)
    if res.forms is not None:
        chk = trace_constant_check(section, res, samples=int(cfg["command"].get("samples", 100)), seed=args.seed,
                                   fields=[res.eigenfunction])
        result["trace_check"] = {"bound": chk.bound, "worst_ratio": chk.worst_ratio, "skipped": chk.skipped}
        if args.dump_mesh:
            export_mesh(res.mesh, out / "section_mesh.txt")
    return result


def cmd_dispersion(cfg, args, out, base):
    section = build_section(cfg)
    grid = cfg["command"].get("lambda_grid", list(np.linspace(0.0, 2.0, 10)))
    k = args.modes or int(cfg["command"].get("modes", 1))
    curve = dispersion(section, grid, k, cfg["solver"]["section_h"], cfg["solver"]["tol"])
    curve.write_csv(out / "dispersion.csv")
    return {"lambda": curve.lambdas, "eta_sq": curve.eta_sq, "csv": "dispersion.csv"}


def cmd_weyl(cfg, args, out, base):
    section = build_section(cfg, half=False)
    lam = float(cfg["command"].get("lambda", 0.5))
    ms = [int(m) for m in cfg["command"].get("m", [3, 4, 5, 6, 7])]
    terms = [weyl_term(section, lam, m) for m in ms]
    res = [t.residual for t in terms]
    return {"lambda": lam, "m": ms, "residual": res, "a_m": [t.a_m for t in terms],
            "ratio": [b / a for a, b in zip(res, res[1:])],
            "overlap_next": [weyl_overlap(section, lam, m, m + 1) for m in ms if m + 1 <= 52]}


def cmd_convergence(cfg, args, out, base):
    cell = build_cell(cfg, base)
    p = cfg.get("plate", {})
    A1 = _get(p, "A1", "plate", positive=True)
    A2 = _get(p, "A2", "plate", positive=True)
    eps_list = args.eps or cfg["command"].get("eps_list")
    if not eps_list:
        raise ConfigError("command.eps_list: required for convergence (or pass --eps)")
    k = args.modes or int(cfg["command"].get("modes", 1))
    rep = convergence_study(cell, A1, A2, eps_list, k, cfg["solver"]["cell_res"], cfg["solver"]["limit_res"],
                            bool(cfg["command"].get("half", False)),
                            args.budget_nodes or cfg["solver"]["budget_nodes"], cfg["solver"]["tol"], args.seed)
    rep.write_csv(out / "convergence.csv")
    write_json(out / "convergence.json", rep.sidecar())
    return {"rows": [list(r) for r in rep.rows], "rates": rep.rates, "tau": rep.tau, "flags": rep.flags,
            "csv": "convergence.csv", "sidecar": "convergence.json"}


def _canal(cfg, base, eps=None):
    cell = build_cell(cfg, base)
    plate = build_plate(cfg, cell, eps)
    try:
        return CanalConfig(build_section(cfg, half=True), plate, cfg.get("body", {}))
    except RoughCanalError as exc:
        raise ConfigError(f"section/plate: {exc}") from exc


def _certify_kwargs(cfg, args):
    s = cfg["solver"]
    return dict(cell_res=s["cell_res"], max_nodes=args.budget_nodes or s["budget_nodes"],
                threshold_method=s["threshold_method"], threshold_h=s["section_h"], tol=s["tol"], seed=args.seed)


def cmd_certify(cfg, args, out, base):
    eps = _eps_override(args)
    canal = _canal(cfg, base)
    if eps is not None:
        p = canal.plate
        canal = canal.with_eps(admissible_eps(p.cell, p.A1, p.A2, eps))
    d = _get(cfg["command"], "d", "command", positive=True)
    n = cfg["command"].get("N")
    cert = certify(canal, d, method=cfg["command"].get("method", "direct"), n_requested=n,
                   modes=args.modes, **_certify_kwargs(cfg, args))
    return cert.to_dict()


def cmd_find_eps(cfg, args, out, base):
    canal = _canal(cfg, base)
    d = _get(cfg["command"], "d", "command", positive=True)
    N = _get(cfg["command"], "N", "command", int)
    grid = args.eps or cfg["command"].get("eps_list")
    try:
        eps, cert = find_epsilon(canal, d, N, grid, method=cfg["command"].get("method", "direct"),
                                 **_certify_kwargs(cfg, args))
    except NotFoundError as exc:
        best = exc.best.to_dict() if exc.best is not None else None
        write_json(out / "result.json", {"command": "find-eps", "config": cfg, "result": None,
                                         "error": str(exc), "best": best, "version": __version__})
        raise
    return {"eps": eps, "certificate": cert.to_dict()}


HANDLERS = {
    "homogenize": cmd_homogenize, "limit-spectrum": cmd_limit, "steklov": cmd_steklov,
    "threshold": cmd_threshold, "dispersion": cmd_dispersion, "weyl": cmd_weyl,
    "convergence": cmd_convergence, "certify": cmd_certify, "find-eps": cmd_find_eps,
}


def _eps_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("eps values must be positive")
    return vals


def build_parser():
    ap = argparse.ArgumentParser(prog="roughcanal", description="Two-scale spectral toolkit for rough thin layers.")
    ap.add_argument("command", choices=SUBCOMMANDS, metavar="SUBCOMMAND", help=", ".join(SUBCOMMANDS))
    ap.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    ap.add_argument("--modes", type=int, default=None, help="number of eigenmodes")
    ap.add_argument("--eps", type=_eps_list, default=None, help="comma-separated scale list")
    ap.add_argument("--seed", type=int, default=0, help="random seed")
    ap.add_argument("--budget-nodes", type=int, default=None, help="node cap for plate meshes")
    ap.add_argument("--dump-mesh", action="store_true", help="also write the mesh as plain text")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)  # exits with status 2 on usage errors
    try:
        raw = json.loads(args.config.read_text())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    if args.modes is not None and args.modes < 1:
        print("error: --modes must be positive", file=sys.stderr)
        return 2
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    base = args.config.parent
    try:
        cfg = resolve_config(raw, base)
        result = HANDLERS[args.command](cfg, args, out, base)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RoughCanalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    resolved = dict(cfg)
    resolved["flags"] = {"modes": args.modes, "eps": args.eps, "seed": args.seed,
                         "budget_nodes": args.budget_nodes}
    write_json(out / "result.json", {"command": args.command, "version": __version__,
                                     "config": resolved, "result": result})
    return 0


if __name__ == "__main__":
    sys.exit(main())
