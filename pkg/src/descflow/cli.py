"""Command line front end: ``descflow {eigen,solve,verify,flow-trace}``.

Runs are described by an INI file with sections [problem], [flow],
[multistart], [output] and [verify]; every key has a default and can also be
overridden with ``--set section.key=value``.  Exit codes: 0 success, 1 solver
failure, 2 configuration error, 3 property failure.
"""

import argparse
import ast
import configparser
import json
import os
import sys
from dataclasses import MISSING, dataclass, field, fields, replace

import numpy as np

from .flow import FlowConfig, integrate
from .functional import Problem
from .grid import make_mesh, norm_w1p, read_gridfn_csv, write_gridfn_csv
from .multistart import MultistartConfig, SolutionRecord, count_nodes, driver_report, find_three
from .plap import ConvergenceError, eigen_first, eigen_second_1d
from .potential import KINDS, PotentialSpec
from .suites import PROPERTIES, run_properties

__all__ = ["ConfigError", "RunConfig", "load_config", "cmd_eigen", "cmd_solve", "cmd_verify",
           "cmd_flow_trace", "main", "analytic_eigenvalue"]

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_PROPERTY = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemConfig:
    p: float = 2.0
    lam: float = None
    lambda_fraction: float = 0.5
    L: float = 1.0
    n: int = 199
    potential: str = "smooth_power"
    q: float = 4.0
    mu: float = 3.0
    M: float = 1.0
    a1: float = None
    c: float = None
    b: float = None
    breakpoints: tuple = ()
    pieces: tuple = ()


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    trace_stride: int = 1
    formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class VerifyConfig:
    seed: int = 0
    properties: tuple = PROPERTIES
    samples: int = 10000
    starts: int = 100


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    multistart: MultistartConfig = field(default_factory=MultistartConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)


_SECTIONS = {"problem": ProblemConfig, "flow": FlowConfig, "multistart": MultistartConfig,
             "output": OutputConfig, "verify": VerifyConfig}
_ALIASES = {("problem", "lambda"): "lam"}


def _parse_value(raw, default, key):
    raw = raw.strip()
    if isinstance(default, str) or (default is None and key == "potential"):
        return raw
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, tuple):
        if raw == "":
            return ()
        try:
            val = ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            val = tuple(s.strip() for s in raw.split(",") if s.strip())
        if isinstance(val, str):
            val = (val,)
        return tuple(tuple(v) if isinstance(v, list) else v for v in val)
    try:
        val = ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    if isinstance(default, int) and not isinstance(default, bool):
        if not isinstance(val, int):
            if isinstance(val, float) and val.is_integer():
                return int(val)
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        return val
    if not isinstance(val, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {raw!r}")
    return float(val)


def _section(cls, items, name):
    defaults = {f.name: None if f.default is MISSING else f.default for f in fields(cls)}
    kw = {}
    for key, raw in items.items():
        key = _ALIASES.get((name, key), key)
        if key not in defaults or key == "newton":
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        val = _parse_value(raw, defaults[key], f"{name}.{key}")
        if (name, key) == ("verify", "properties") and val == ("all",):
            val = PROPERTIES
        kw[key] = val
    try:
        return cls(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[{name}]: {e}") from None


def load_config(path=None, overrides=()):
    """Parse an INI file plus ``section.key=value`` overrides into a validated RunConfig."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file {path} not found")
        try:
            cp.read(path)
        except configparser.Error as e:
            raise ConfigError(str(e)) from None
    for ov in overrides:
        if "=" not in ov or "." not in ov.split("=", 1)[0]:
            raise ConfigError(f"override {ov!r} is not of the form section.key=value")
        lhs, val = ov.split("=", 1)
        sec, key = lhs.split(".", 1)
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp.set(sec, key, val)
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
    parts = {name: _section(cls, dict(cp.items(name)) if cp.has_section(name) else {}, name)
             for name, cls in _SECTIONS.items()}
    _validate_problem(parts["problem"])
    out = parts["output"]
    if out.trace_stride < 1:
        raise ConfigError("output.trace_stride must be at least 1")
    bad = [f for f in out.formats if f not in ("csv", "json")]
    if bad:
        raise ConfigError(f"unknown output formats {bad}")
    ver = parts["verify"]
    bad = [p for p in ver.properties if p not in PROPERTIES]
    if bad:
        raise ConfigError(f"unknown properties {bad}; choose from {PROPERTIES}")
    if ver.samples < 1 or ver.starts < 1:
        raise ConfigError("verify.samples and verify.starts must be positive")
    flow = replace(parts["flow"], stride=out.trace_stride)
    return RunConfig(parts["problem"], flow, parts["multistart"], out, ver)


def _validate_problem(pc):
    if not pc.p > 1:
        raise ConfigError(f"problem.p must exceed 1, got {pc.p}")
    if not pc.L > 0:
        raise ConfigError(f"problem.L must be positive, got {pc.L}")
    if pc.n < 2:
        raise ConfigError(f"problem.n must be at least 2, got {pc.n}")
    if pc.lam is None and not 0 < pc.lambda_fraction < 1:
        raise ConfigError(f"problem.lambda_fraction must lie in (0, 1), got {pc.lambda_fraction}")
    if pc.lam is not None and not pc.lam >= 0:
        raise ConfigError(f"problem.lambda must be nonnegative, got {pc.lam}")
    if pc.potential not in KINDS:
        raise ConfigError(f"problem.potential must be one of {KINDS}, got {pc.potential!r}")
    try:
        build_spec(pc)
    except ValueError as e:
        raise ConfigError(f"[problem]: {e}") from None


def build_spec(pc):
    kw = dict(q=pc.q, mu=pc.mu, M=pc.M)
    if pc.potential == "custom_piecewise":
        return PotentialSpec("custom_piecewise", a1=1.0 if pc.a1 is None else pc.a1,
                             breakpoints=tuple(pc.breakpoints), pieces=tuple(pc.pieces), **kw)
    if pc.potential == "smooth_power":
        return PotentialSpec("smooth_power", a1=1.0 if pc.a1 is None else pc.a1, **kw)
    c = (0.5 if pc.potential == "kinked_power" else 1.0) if pc.c is None else pc.c
    b = (0.5 if pc.potential == "kinked_power" else 1.0) if pc.b is None else pc.b
    return PotentialSpec(pc.potential, a1=1.0 + c if pc.a1 is None else pc.a1, c=c, b=b, **kw)


def analytic_eigenvalue(p, L, k=1):
    """(p - 1) (k pi_p / L)^p with pi_p = 2 pi / (p sin(pi / p))."""
    pi_p = 2 * np.pi / (p * np.sin(np.pi / p))
    return (p - 1.0) * (k * pi_p / L) ** p


def build_problem(cfg, lam1=None):
    pc = cfg.problem
    mesh = make_mesh(pc.n, pc.L)
    spec = build_spec(pc)
    if pc.lam is not None:
        return Problem(mesh, pc.p, pc.lam, spec), lam1
    lam1 = lam1 if lam1 is not None else eigen_first(pc.p, mesh).lam
    return Problem(mesh, pc.p, pc.lambda_fraction * lam1, spec), lam1


def _outdir(cfg):
    os.makedirs(cfg.output.directory, exist_ok=True)
    return cfg.output.directory


def _dump(path, doc):
    text = json.dumps(doc, sort_keys=True, indent=1, default=_plain)
    with open(path, "w") as fh:
        fh.write(text + "\n")
    return text


def _plain(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


def cmd_eigen(cfg, out=None):
    out = out or sys.stdout
    pc = cfg.problem
    mesh = make_mesh(pc.n, pc.L)
    e1 = eigen_first(pc.p, mesh)
    e2 = eigen_second_1d(pc.p, mesh, first=e1)
    d = _outdir(cfg)
    write_gridfn_csv(os.path.join(d, "u1.csv"), e1.u, mesh)
    write_gridfn_csv(os.path.join(d, "u2.csv"), e2.u, mesh)
    rep = {"p": pc.p, "L": pc.L, "n": pc.n}
    for key, e, k in (("lambda1", e1, 1), ("lambda2", e2, 2)):
        exact = analytic_eigenvalue(pc.p, pc.L, k)
        rep[key] = {"value": e.lam, "residual": e.residual, "iterations": e.iterations,
                    "analytic": exact, "rel_error": abs(e.lam - exact) / exact}
    _dump(os.path.join(d, "eigen.json"), rep)
    print(f"lambda1_h = {e1.lam:.10g}  (analytic {rep['lambda1']['analytic']:.10g}, "
          f"rel err {rep['lambda1']['rel_error']:.2e})", file=out)
    print(f"lambda2_h = {e2.lam:.10g}  (analytic {rep['lambda2']['analytic']:.10g}, "
          f"rel err {rep['lambda2']['rel_error']:.2e})", file=out)
    return rep, EXIT_OK


def cmd_solve(cfg, out=None):
    out = out or sys.stdout
    prob, lam1 = build_problem(cfg)
    if lam1 is None:
        lam1 = eigen_first(prob.p, prob.mesh).lam
        if not 0 < prob.lam < lam1:
            raise ConfigError(f"problem.lambda must lie in (0, {lam1:.10g}), got {prob.lam}")
    records, stats = find_three(prob, cfg.flow, cfg.multistart)
    d = _outdir(cfg)
    worst = EXIT_OK
    rows = []
    for name in ("positive", "negative", "sign_changing"):
        rec = records[name]
        if isinstance(rec, SolutionRecord):
            ok = rec.sign == name and rec.residual <= cfg.flow.eps_crit
            if "csv" in cfg.output.formats:
                write_gridfn_csv(os.path.join(d, f"{name}.csv"), rec.u, prob.mesh)
            rows.append((name, rec.sign, rec.phi, rec.residual, count_nodes(rec.u)))
            if not ok:
                worst = EXIT_SOLVER
        else:
            rows.append((name, "failed", float("nan"), float("nan"), -1))
            worst = EXIT_SOLVER
    doc = json.loads(driver_report(prob, records, stats))
    doc["lambda1_h"] = lam1
    doc["lambda_fraction"] = None if cfg.problem.lam is not None else cfg.problem.lambda_fraction
    doc["eps_crit"] = cfg.flow.eps_crit
    if "json" in cfg.output.formats:
        _dump(os.path.join(d, "solve.json"), doc)
    print(f"{'branch':<14} {'sign':<14} {'phi':>16} {'residual':>10} {'nodes':>5}", file=out)
    for r in rows:
        print(f"{r[0]:<14} {r[1]:<14} {r[2]:>16.10g} {r[3]:>10.2e} {r[4]:>5d}", file=out)
    return doc, worst


def cmd_verify(cfg, out=None):
    out = out or sys.stdout
    vc = cfg.verify
    names = tuple(vc.properties)
    prob = None
    if any(n in names for n in ("energy_monotone", "cone_invariance", "cone_negative_control",
                                "gradient_consistency")):
        prob, _ = build_problem(cfg)
    results = run_properties(names, vc.seed, prob, n_samples=vc.samples, n_starts=vc.starts,
                             cfg=cfg.flow)
    doc = {"seed": vc.seed, "properties": results, "passed": all(r["passed"] for r in results)}
    d = _outdir(cfg)
    if "json" in cfg.output.formats:
        _dump(os.path.join(d, "verify.json"), doc)
    for r in results:
        print(f"{r['name']:<26} {'PASS' if r['passed'] else 'FAIL'}  samples={r['samples']} "
              f"violations={r['violations']}", file=out)
    return doc, EXIT_OK if doc["passed"] else EXIT_PROPERTY


def _start_vector(cfg, prob, start, scale):
    m = prob.mesh
    if start in ("u1", "u2"):
        e1 = eigen_first(prob.p, m)
        u = e1.u if start == "u1" else eigen_second_1d(prob.p, m, first=e1).u
    elif start.startswith("csv:"):
        u = read_gridfn_csv(start[4:], m)
    else:
        raise ConfigError(f"start must be u1, u2 or csv:PATH, got {start!r}")
    return scale * u / norm_w1p(u, prob.p, m)


def cmd_flow_trace(cfg, start="u1", scale=1.0, out=None):
    out = out or sys.stdout
    prob, _ = build_problem(cfg)
    u0 = _start_vector(cfg, prob, start, scale)
    tr = integrate(prob, u0, cfg.flow)
    d = _outdir(cfg)
    if "csv" in cfg.output.formats:
        tr.to_csv(os.path.join(d, "trace.csv"))
    if "json" in cfg.output.formats:
        tr.to_json(os.path.join(d, "trace.json"))
    print(f"status={tr.status} steps={tr.steps} phi={tr.final.phi:.10g} "
          f"residual={tr.final.residual:.3e}", file=out)
    return {"status": tr.status, "steps": tr.steps}, EXIT_OK if tr.status != "stalled" else EXIT_SOLVER


def _parser():
    ap = argparse.ArgumentParser(prog="descflow", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("eigen", "solve", "verify", "flow-trace"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", "-c", help="INI configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value (repeatable)")
        sp.add_argument("--out", help="output directory (overrides output.directory)")
        if name == "flow-trace":
            sp.add_argument("--start", default="u1", help="u1, u2 or csv:PATH")
            sp.add_argument("--scale", type=float, default=1.0,
                            help="W^(1,p) norm of the start")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    overrides = list(args.set)
    if args.out:
        overrides.append(f"output.directory={args.out}")
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "eigen":
            _, code = cmd_eigen(cfg)
        elif args.command == "solve":
            _, code = cmd_solve(cfg)
        elif args.command == "verify":
            _, code = cmd_verify(cfg)
        else:
            _, code = cmd_flow_trace(cfg, args.start, args.scale)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    return code


if __name__ == "__main__":
    sys.exit(main())
