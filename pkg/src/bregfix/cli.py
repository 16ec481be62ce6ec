"""Command-line entry point: ``bregfix {run,verify,reproduce,project}``.

Config files are flat ``key = value`` lines; ``#`` starts a comment and
dotted keys group related settings (``domain.lo``, ``schedule.name``). Lists
are whitespace- or comma-separated. ``--set key=value`` overrides file values.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import core, experiments, iterations, mappings
from .errors import BregfixError, ConfigError, DomainError, NumericError, ScheduleError

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3, 4

COMMON_KEYS = {"function", "mapping", "domain.lo", "domain.hi", "dim"}
RUN_KEYS = COMMON_KEYS | {
    "scheme", "x1", "u", "schedule.name", "schedule.alpha", "schedule.beta", "schedule.gamma",
    "schedule.scale", "schedule.power", "max_iter", "stop_tol", "out", "z_space", "ref",
}
VERIFY_KEYS = COMMON_KEYS | {"verify.holds", "verify.violated", "verify.alphas", "grid.points",
                             "fixed_points", "out"}
PROJECT_KEYS = {"function", "domain.lo", "domain.hi", "dim", "point"}


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path: Optional[str], overrides: List[str], allowed: set) -> Dict[str, str]:
    cfg = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = parse_config_text(text, path)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        cfg[k] = v
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return cfg


def _floats(value: str, key: str) -> List[float]:
    try:
        return [float(v) for v in value.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {value!r}") from None


def _float(cfg, key, default=None) -> float:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    vals = _floats(cfg[key], key)
    if len(vals) != 1:
        raise ConfigError(f"{key}: expected a single number")
    return vals[0]


def _int(cfg, key, default: int) -> int:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {cfg[key]!r}") from None


def _vector(cfg, key, dim) -> np.ndarray:
    if key not in cfg:
        raise ConfigError(f"missing required key {key!r}")
    vals = _floats(cfg[key], key)
    if len(vals) == 1:
        vals = vals * dim
    if len(vals) != dim:
        raise ConfigError(f"{key}: expected {dim} coordinates, got {len(vals)}")
    return np.array(vals)


def _dim(cfg) -> int:
    if "dim" in cfg:
        return _int(cfg, "dim", 1)
    if "domain.lo" in cfg:
        return len(_floats(cfg["domain.lo"], "domain.lo"))
    return 1


def build_box(cfg) -> core.Box:
    dim = _dim(cfg)
    lo, hi = _vector(cfg, "domain.lo", dim), _vector(cfg, "domain.hi", dim)
    if np.any(lo > hi):
        raise ConfigError("domain.lo exceeds domain.hi")
    return core.Box(lo, hi)


def build_function(spec: str, dim: int, domain: Optional[core.Box] = None) -> core.BregmanFunction:
    parts = spec.split()
    if not parts:
        raise ConfigError("function: empty value")
    name, args = parts[0], parts[1:]
    nums = _floats(" ".join(args), "function") if args else []
    if name in core.BUILTINS and not nums:
        return core.BUILTINS[name](dim, domain)
    if name == "quadratic" and len(nums) == 1:
        return core.quadratic(nums[0], dim, domain)
    if name in ("poly", "polynomial") and nums:
        return core.separable_polynomial(nums, dim, domain)
    raise ConfigError(f"function: unknown spec {spec!r}")


def build_mapping(spec: str, domain: core.Box) -> mappings.Mapping:
    parts = spec.split()
    if not parts:
        raise ConfigError("mapping: empty value")
    name, nums = parts[0], _floats(" ".join(parts[1:]), "mapping") if parts[1:] else []
    if name == "identity" and not nums:
        return mappings.identity(domain)
    if name == "square" and not nums:
        return mappings.square(domain)
    if name == "scale" and len(nums) == 1:
        return mappings.scaling(nums[0], domain)
    if name == "power" and len(nums) == 1:
        return mappings.power(nums[0], domain)
    if name == "affine" and len(nums) == 2:
        return mappings.affine(nums[0], nums[1], domain)
    if name == "constant" and nums:
        return mappings.constant(nums if len(nums) > 1 else nums * domain.dim, domain)
    raise ConfigError(f"mapping: unknown spec {spec!r}")


def _function_domain(c: core.Box, *points) -> core.Box:
    reach = max([2.0, float(np.max(np.abs(c.lo))), float(np.max(np.abs(c.hi)))]
                + [2.0 * float(np.max(np.abs(p))) for p in points if p is not None])
    return core.Box.cube(-reach, reach, c.dim)


def build_schedule(cfg) -> iterations.Schedule:
    name = cfg.get("schedule.name", "constant")
    if name == "section6":
        return iterations.section6_schedule()
    if name == "constant":
        return iterations.constant_schedule(_float(cfg, "schedule.alpha", 0.5),
                                            _float(cfg, "schedule.beta", 0.5),
                                            _float(cfg, "schedule.gamma", 0.5))
    if name == "harmonic":
        return iterations.harmonic_schedule(_float(cfg, "schedule.alpha", 0.5),
                                            _float(cfg, "schedule.beta", 0.5),
                                            _float(cfg, "schedule.scale", 1.0),
                                            _float(cfg, "schedule.power", 1.0))
    raise ConfigError(f"schedule.name: unknown schedule {name!r}")


def build_iteration_config(cfg) -> iterations.IterationConfig:
    for key in ("scheme", "function", "mapping", "x1"):
        if key not in cfg:
            raise ConfigError(f"missing required key {key!r}")
    c = build_box(cfg)
    x1 = _vector(cfg, "x1", c.dim)
    u = _vector(cfg, "u", c.dim) if "u" in cfg else None
    bf = build_function(cfg["function"], c.dim, _function_domain(c))
    schedule = build_schedule(cfg)
    max_iter = _int(cfg, "max_iter", 100)
    # surface schedule errors as config errors before any work starts
    for n in range(1, max_iter + 1):
        schedule.values(n)
    return iterations.IterationConfig(
        scheme=cfg["scheme"], t=build_mapping(cfg["mapping"], c), c=c, x1=x1,
        schedule=schedule, bf=bf, anchor_u=u, max_iter=max_iter,
        stop_tol=_float(cfg, "stop_tol", 0.0) if "stop_tol" in cfg else 0.0,
        ref=_vector(cfg, "ref", c.dim) if "ref" in cfg else None,
        z_space=cfg.get("z_space"),
    )


# -- commands -----------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set, RUN_KEYS)
    if args.tol is not None:
        cfg["stop_tol"] = repr(args.tol)
    icfg = build_iteration_config(cfg)
    trace = iterations.run(icfg)
    out = Path(args.out or cfg.get("out", "out/run"))
    short, full = trace.write_csv(out)
    last = trace.rows[-1]
    lines = [f"scheme={icfg.scheme} function={icfg.bf.name} mapping={icfg.t.name}",
             f"steps={len(trace)} terminated={trace.terminated_reason}",
             "final_x=" + " ".join(f"{v:.17g}" for v in last.x_next),
             f"final_step={last.step_norm:.17g} final_residual={last.residual:.17g}"]
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"wrote {short} {full} {out / 'report.txt'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config, args.set, VERIFY_KEYS)
    holds = cfg.get("verify.holds", "").replace(",", " ").split()
    violated = cfg.get("verify.violated", "").replace(",", " ").split()
    if not holds and not violated:
        raise ConfigError("no classes asserted (verify.holds / verify.violated are empty)")
    unknown = sorted(set(holds + violated) - set(mappings.CHECKS))
    if unknown:
        raise ConfigError(f"unknown classes: {', '.join(unknown)}")
    for key in ("function", "mapping"):
        if key not in cfg:
            raise ConfigError(f"missing required key {key!r}")
    c = build_box(cfg)
    bf = build_function(cfg["function"], c.dim, _function_domain(c))
    t = build_mapping(cfg["mapping"], c)
    grid = _int(cfg, "grid.points", 101)
    alphas = _floats(cfg["verify.alphas"], "verify.alphas") if "verify.alphas" in cfg \
        else list(mappings.DEFAULT_ALPHAS)
    if "fixed_points" in cfg:
        t = t.with_fixed_points(np.array(_floats(cfg["fixed_points"], "fixed_points")).reshape(-1, c.dim))
    elif any(k in mappings.CHECKS and k.endswith("quasi") for k in holds + violated) \
            and not t.known_fixed_points:
        t = t.with_fixed_points(mappings.find_fixed_points(t, grid))
    if not t.check_self_map(grid):
        raise DomainError(f"mapping {t.name} does not map {c} into itself")
    tol = mappings.VERIFIER_TOL if args.tol is None else args.tol

    ok = True
    lines = []
    for expect, classes in ((mappings.HOLDS, holds), (mappings.VIOLATED, violated)):
        for cls in classes:
            for a in (alphas if cls in mappings.ALPHA_CLASSES else [None]):
                rep = mappings.CHECKS[cls](bf, t, a, grid, tol, args.jobs)
                met = rep.verdict == expect
                ok &= met
                lines.append(f"{rep.to_line()} expected={expect} {'ok' if met else 'MISMATCH'}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    out = args.out or cfg.get("out")
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "report.txt").write_text(text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_reproduce(args) -> int:
    if args.experiment not in experiments.EXPERIMENTS:
        raise ConfigError(f"unknown experiment {args.experiment!r}; "
                          f"expected one of {', '.join(experiments.EXPERIMENTS)}")
    out = Path(args.out or "out")
    if args.experiment == "table1" and args.tol is not None:
        rep = experiments.reproduce_table1()
        ok = rep.worst_dev <= args.tol and rep.oracle_dev <= experiments.ORACLE_TOL
        (out / "table1").mkdir(parents=True, exist_ok=True)
        rep.trace.write_csv(out / "table1")
        (out / "table1" / "report.txt").write_text("\n".join(rep.lines()) + "\n")
    else:
        ok = experiments.run_experiment(args.experiment, out)
    print((out / args.experiment / "report.txt").read_text(), end="")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_project(args) -> int:
    cfg = load_config(args.config, args.set, PROJECT_KEYS)
    c = build_box(cfg)
    x = _vector(cfg, "point", c.dim)
    bf = build_function(cfg.get("function", "squared_norm"), c.dim, _function_domain(c, x))
    p = core.bregman_project(bf, c, x)
    slack = core.projection_variational_slack(bf, c, x)
    print("projection=" + " ".join(f"{v:.17g}" for v in p))
    print(f"variational_slack={slack:.6e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bregfix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("config", help="key = value config file")
        else:
            p.add_argument("config", nargs="?", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="K=V",
                       help="override a config value (repeatable)")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--tol", type=float, metavar="X")
        p.add_argument("--jobs", type=int, default=1, metavar="N")

    p = sub.add_parser("run", help="run a configured iteration and write trace CSVs")
    common(p, config_required=False)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("verify", help="check mapping classes on a grid")
    common(p, config_required=False)
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("reproduce", help="run a built-in experiment")
    p.add_argument("experiment", help="one of: " + ", ".join(experiments.EXPERIMENTS))
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--tol", type=float, metavar="X")
    p.add_argument("--jobs", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_reproduce)
    p = sub.add_parser("project", help="Bregman projection of one point onto a box")
    common(p, config_required=False)
    p.set_defaults(func=cmd_project)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (BregfixError, ValueError, FloatingPointError) as exc:
        print("error: " + " ".join(str(exc).split()), file=sys.stderr)
        return _exit_code(exc)


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    if isinstance(exc, (NumericError, FloatingPointError)):
        return EXIT_NUMERIC
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
