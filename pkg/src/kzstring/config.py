"""Flat ``key = value`` scenario files with dotted section keys.

Numbers may be written as simple arithmetic over ``pi`` (``pi/2``,
``2*pi``); lists are comma separated.  Lines starting with ``#`` are
comments.  Unknown keys are rejected so that typos surface as config errors.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "tau": 2 * math.pi}

_DEFAULTS = {
    "dim": "2",
    "topology": "closed",
    "period": "2*pi",
    "grid.theta_nodes": "1024",
    "grid.sigma_nodes": "1024",
    "tol.quadrature": "1e-10",
    "tol.inversion": "1e-10",
    "tol.gauge": "1e-8",
    "tol.identity": "1e-10",
    "tol.order": "1.8",
    "tol.periodicity": "1e-9",
    "tol.compare": "5e-4",
    "verify.steps": "0.08, 0.04, 0.02, 0.01",
    "verify.samples": "16",
    "verify.harmonic_nodes": "64, 128, 256",
    "compare.nodes": "128, 256, 512",
    "solver.exact": "true",
    "solver.oracle": "true",
    "output.dir": "out",
    "debug.corrupt_lambda_minus": "false",
}
_CURVE_KEYS = {"curve.preset", "curve.radius", "curve.a", "curve.b", "curve.half_length", "curve.velocity"}
_INDEXED = re.compile(r"^(curve|velocity)\.(cos|sin)\.(\d+)$")
_TIME_KEYS = {"time.list", "time.t_end", "time.stride", "compare.t_end"}


def parse_number(text, key=None):
    """Evaluate a numeric literal or arithmetic expression over ``pi``."""
    try:
        node = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse number {text!r}", key) from exc

    def ev(n):
        if isinstance(n, ast.Constant) and isinstance(n.value, (int, float)):
            return float(n.value)
        if isinstance(n, ast.Name) and n.id in _NAMES:
            return _NAMES[n.id]
        if isinstance(n, ast.UnaryOp) and isinstance(n.op, (ast.USub, ast.UAdd)):
            v = ev(n.operand)
            return -v if isinstance(n.op, ast.USub) else v
        if isinstance(n, ast.BinOp) and type(n.op) in _BINOPS:
            return _BINOPS[type(n.op)](ev(n.left), ev(n.right))
        raise ConfigError(f"unsupported expression {text!r}", key)

    try:
        return ev(node)
    except ZeroDivisionError as exc:
        raise ConfigError(f"division by zero in {text!r}", key) from exc


def parse_list(text, key=None):
    parts = [p for p in (s.strip() for s in text.split(",")) if p]
    return [parse_number(p, key) for p in parts]


def parse_bool(text, key=None):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}", key)


def parse_text(text):
    """Raw ``{key: value}`` mapping; later duplicates are an error."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError("duplicate key", key)
        out[key] = value
    return out


@dataclass
class ScenarioConfig:
    curve: dict
    dim: int
    topology: str
    period: float
    theta_nodes: int
    sigma_nodes: int
    times: list
    tolerances: dict
    verify_steps: list
    verify_samples: int
    harmonic_nodes: list
    compare_nodes: list
    compare_t_end: float
    solver_exact: bool
    solver_oracle: bool
    output_dir: Path
    corrupt_lambda_minus: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    def curve_kwargs(self):
        return dict(self.curve)


def _int(raw, key, minimum=16):
    v = parse_number(raw[key], key)
    if v != int(v):
        raise ConfigError("expected an integer", key)
    if v < minimum:
        raise ConfigError(f"must be >= {minimum}", key)
    return int(v)


def _curve_section(raw, dim):
    if "curve.preset" not in raw:
        raise ConfigError("missing curve preset", "curve.preset")
    kw = {"preset": raw["curve.preset"].strip()}
    for k in ("radius", "a", "b", "half_length"):
        if f"curve.{k}" in raw:
            kw[k] = parse_number(raw[f"curve.{k}"], f"curve.{k}")
    if "curve.velocity" in raw:
        kw["velocity"] = parse_list(raw["curve.velocity"], "curve.velocity")
    coeffs = {}
    for key, value in raw.items():
        m = _INDEXED.match(key)
        if m:
            comp = int(m.group(3))
            if not 1 <= comp <= dim:
                raise ConfigError(f"component index must lie in 1..{dim}", key)
            coeffs.setdefault((m.group(1), m.group(2)), {})[comp] = parse_list(value, key)
    for (section, kind), comps in coeffs.items():
        missing = sorted(set(range(1, dim + 1)) - set(comps))
        if missing:
            raise ConfigError(f"missing components {missing}", f"{section}.{kind}")
        target = kind if section == "curve" else f"velocity_{kind}"
        kw[target] = [comps[i] for i in range(1, dim + 1)]
    return kw


def _times(raw):
    if "time.list" in raw:
        times = parse_list(raw["time.list"], "time.list")
    elif "time.t_end" in raw:
        t_end = parse_number(raw["time.t_end"], "time.t_end")
        stride = parse_number(raw.get("time.stride", raw["time.t_end"]), "time.stride")
        if not stride > 0:
            raise ConfigError("must be positive", "time.stride")
        n = int(math.floor(t_end / stride + 1e-9))
        times = [k * stride for k in range(n + 1)]
        if times[-1] < t_end - 1e-12:
            times.append(t_end)
    else:
        times = [0.0]
    if not times:
        raise ConfigError("no output times", "time.list")
    if any(t < 0 for t in times):
        raise ConfigError("times must be non-negative", "time.list")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("times must be strictly increasing", "time.list")
    return times


def load_config(source, overrides=None):
    """Parse and validate a scenario from a path or a ``{key: value}`` mapping."""
    if isinstance(source, dict):
        given = {k: str(v) for k, v in source.items()}
    else:
        try:
            given = parse_text(Path(source).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    given.update({k: str(v) for k, v in (overrides or {}).items()})
    for key in given:
        if key not in _DEFAULTS and key not in _CURVE_KEYS and key not in _TIME_KEYS and not _INDEXED.match(key):
            raise ConfigError("unknown key", key)
    raw = dict(_DEFAULTS)
    raw.update(given)

    dim = _int(raw, "dim", minimum=2)
    topology = raw["topology"].strip()
    if topology not in ("closed", "line"):
        raise ConfigError(f"unknown topology {topology!r}", "topology")
    period = parse_number(raw["period"], "period")
    if not period > 0:
        raise ConfigError(f"period must be positive, got {period}", "period")
    tolerances = {}
    for key in (k for k in _DEFAULTS if k.startswith("tol.")):
        v = parse_number(raw[key], key)
        if not v > 0:
            raise ConfigError("tolerance must be positive", key)
        tolerances[key[4:]] = v
    steps = parse_list(raw["verify.steps"], "verify.steps")
    if not steps or any(s <= 0 for s in steps):
        raise ConfigError("steps must be positive", "verify.steps")
    times = _times(raw)
    cmp_nodes = [int(v) for v in parse_list(raw["compare.nodes"], "compare.nodes")]
    harm_nodes = [int(v) for v in parse_list(raw["verify.harmonic_nodes"], "verify.harmonic_nodes")]
    for key, vals in (("compare.nodes", cmp_nodes), ("verify.harmonic_nodes", harm_nodes)):
        if not vals or min(vals) < 16:
            raise ConfigError("grid sizes must be >= 16", key)
    t_cmp = parse_number(raw.get("compare.t_end", str(times[-1])), "compare.t_end")
    if t_cmp < 0:
        raise ConfigError("must be non-negative", "compare.t_end")
    return ScenarioConfig(
        curve=_curve_section(raw, dim), dim=dim, topology=topology, period=period,
        theta_nodes=_int(raw, "grid.theta_nodes"), sigma_nodes=_int(raw, "grid.sigma_nodes"),
        times=times, tolerances=tolerances, verify_steps=sorted(steps, reverse=True),
        verify_samples=_int(raw, "verify.samples", minimum=1), harmonic_nodes=sorted(harm_nodes),
        compare_nodes=sorted(cmp_nodes), compare_t_end=t_cmp,
        solver_exact=parse_bool(raw["solver.exact"], "solver.exact"),
        solver_oracle=parse_bool(raw["solver.oracle"], "solver.oracle"),
        output_dir=Path(raw["output.dir"]),
        corrupt_lambda_minus=parse_bool(raw["debug.corrupt_lambda_minus"], "debug.corrupt_lambda_minus"),
        raw=raw)


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def dump_summary(entries):
    """Render ``{key: value}`` in the same flat format the configs use."""
    return "".join(f"{k} = {format_value(v)}\n" for k, v in entries.items())
