"""Run configuration: flat ``key = value`` lines under bracketed section
headers, chosen for diff-friendliness and zero-dependency parsing.

``parse_config`` validates everything up front and reports the first
violation with its key, line number, and the constraint that failed.
``dump`` emits the normalized form (defaults filled in), which is what the
reproducibility tests compare.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class ParseError(ValueError):
    """Config text is not syntactically valid."""


class ConstraintError(ValueError):
    """A value violates a documented constraint."""


MODELS = ("ctrw", "ks_only", "tfksns", "mild")
CHI_MODELS = ("unit", "const_beta", "reciprocal")
DIMENSION = 2

_INITIAL_RE = re.compile(r"^([a-z_]+)\s*(?:\(([^)]*)\))?$")


@dataclass(frozen=True)
class InitialSpec:
    """One field's initial data: gaussian_bump(cx, cy, width, mass),
    cosine_mode(j, k, amp), uniform(value), or from_file(path)."""

    kind: str
    params: tuple = ()

    def render(self) -> str:
        if self.kind == "from_file":
            return f"from_file({self.params[0]})"
        inner = ", ".join(repr(float(p)) for p in self.params)
        return f"{self.kind}({inner})"


def _parse_initial(text: str, key: str, line_no: int) -> InitialSpec:
    m = _INITIAL_RE.match(text.strip())
    if not m:
        raise ParseError(f"line {line_no}: cannot parse initial spec {text!r} for {key}")
    kind, inner = m.group(1), m.group(2)
    expected = {"gaussian_bump": 4, "cosine_mode": 3, "uniform": 1, "from_file": 1, "zero": 0}
    if kind not in expected:
        raise ConstraintError(
            f"line {line_no}: {key}: unknown initial kind {kind!r} "
            f"(one of {sorted(expected)})"
        )
    parts = [p.strip() for p in inner.split(",")] if inner else []
    if len(parts) != expected[kind]:
        raise ConstraintError(
            f"line {line_no}: {key}: {kind} takes {expected[kind]} arguments, got {len(parts)}"
        )
    if kind == "from_file":
        return InitialSpec(kind, (parts[0],))
    try:
        return InitialSpec(kind, tuple(float(p) for p in parts))
    except ValueError as exc:
        raise ParseError(f"line {line_no}: {key}: non-numeric argument in {text!r}") from exc


@dataclass
class SimConfig:
    # [model]
    model: str = "tfksns"
    alpha: float = 0.7
    gamma: float = 0.5
    chi_model: str = "unit"
    chi_beta: float = 1.0
    advect_scheme: str = "upwind"  # 'central' is available but may oscillate
    # [grid]
    nx: int = 64
    ny: int = 64
    lx: float = 1.0
    ly: float = 1.0
    # [time]
    dt: float = 1e-3
    t_end: float = 0.2
    cfl_safety: float = 0.25
    # [monitor]
    monitor_rho: float = 2.0
    monitor_q: float = 5.0
    monitor_threshold: float = 1e6
    # [initial]
    initial_n: InitialSpec = field(default_factory=lambda: InitialSpec("gaussian_bump", (0.5, 0.5, 0.1, 1.0)))
    initial_c: InitialSpec = field(default_factory=lambda: InitialSpec("gaussian_bump", (0.5, 0.5, 0.15, 0.5)))
    initial_u: InitialSpec = field(default_factory=lambda: InitialSpec("zero"))
    # [fluid]
    phi_expression: str = "linear_y"
    div_tol: float = 1e-8
    cg_tol: float = 1e-12
    cg_max_iter: int = 4000
    # [ctrw]
    particles: int = 100000
    tau: float = 4.0e-5
    sites: int = 50
    lattice_length: float = 1.0
    profile: str = "uniform"
    profile_rate: float = 3.0
    snapshot_times: tuple = (0.5, 1.0)
    shards: int = 4
    # [mild]
    picard_nt: int = 96
    picard_max_iters: int = 30
    picard_tol: float = 1e-10
    # [output]
    output_dir: str = "out"
    output_every: int = 10
    seed: int = 1234

    @property
    def monitor_beta(self) -> float:
        return self.alpha * DIMENSION / (2.0 * self.monitor_rho * self.monitor_q)

    def validate(self) -> "SimConfig":
        checks = [
            (self.model in MODELS, "model", f"model one of {MODELS}"),
            (0.0 < self.alpha < 1.0, "alpha", "alpha ∈ (0,1)"),
            (self.gamma >= 0.0, "gamma", "gamma >= 0"),
            (self.chi_model in CHI_MODELS, "chi_model", f"chi_model one of {CHI_MODELS}"),
            (self.advect_scheme in ("upwind", "central"), "advect_scheme",
             "advect_scheme one of ('upwind', 'central')"),
            (self.nx >= 4 and self.ny >= 4, "nx/ny", "nx, ny >= 4"),
            (self.lx > 0 and self.ly > 0, "lx/ly", "lx, ly > 0"),
            (self.dt > 0.0, "dt", "dt > 0"),
            (self.t_end > self.dt, "t_end", "t_end > dt"),
            (0.0 < self.cfl_safety <= 1.0, "cfl_safety", "cfl_safety ∈ (0,1]"),
            (self.monitor_q > 2 * DIMENSION, "monitor.q", f"q > 2d (d = {DIMENSION})"),
            (self.monitor_rho >= 2.0, "monitor.rho", "rho >= 2"),
            (self.monitor_threshold > 0.0, "monitor.threshold", "threshold > 0"),
            (self.particles > 0, "ctrw.particles", "particles > 0"),
            (self.tau > 0.0, "ctrw.tau", "tau > 0"),
            (self.sites >= 8, "ctrw.sites", "sites >= 8"),
            (self.shards >= 1, "ctrw.shards", "shards >= 1"),
            (self.output_every >= 1, "output.every", "output_every >= 1"),
            (self.picard_nt >= 4, "mild.picard_nt", "picard_nt >= 4"),
        ]
        for ok, key, constraint in checks:
            if not ok:
                raise ConstraintError(f"{key}: constraint violated: {constraint}")
        return self


_SECTIONS = {
    "model": {"kind": ("model", str), "alpha": ("alpha", float),
              "gamma": ("gamma", float), "chi_model": ("chi_model", str),
              "chi_beta": ("chi_beta", float),
              "advect_scheme": ("advect_scheme", str)},
    "grid": {"nx": ("nx", int), "ny": ("ny", int),
             "lx": ("lx", float), "ly": ("ly", float)},
    "time": {"dt": ("dt", float), "t_end": ("t_end", float),
             "cfl_safety": ("cfl_safety", float)},
    "monitor": {"rho": ("monitor_rho", float), "q": ("monitor_q", float),
                "threshold": ("monitor_threshold", float)},
    "initial": {"n": ("initial_n", "initial"), "c": ("initial_c", "initial"),
                "u": ("initial_u", "initial")},
    "fluid": {"phi_expression": ("phi_expression", str), "div_tol": ("div_tol", float),
              "cg_tol": ("cg_tol", float), "cg_max_iter": ("cg_max_iter", int)},
    "ctrw": {"particles": ("particles", int), "tau": ("tau", float),
             "sites": ("sites", int), "lattice_length": ("lattice_length", float),
             "profile": ("profile", str), "profile_rate": ("profile_rate", float),
             "snapshot_times": ("snapshot_times", "floats"),
             "shards": ("shards", int)},
    "mild": {"picard_nt": ("picard_nt", int), "picard_max_iters": ("picard_max_iters", int),
             "picard_tol": ("picard_tol", float)},
    "output": {"directory": ("output_dir", str), "every": ("output_every", int),
               "seed": ("seed", int)},
}


def parse_config(text: str) -> SimConfig:
    """Parse and validate; the first problem raises with its line number."""
    cfg = SimConfig()
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"line {line_no}: unterminated section header {raw!r}")
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ParseError(f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ParseError(f"line {line_no}: expected 'key = value', got {raw!r}")
        if section is None:
            raise ParseError(f"line {line_no}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        table = _SECTIONS[section]
        if key not in table:
            raise ParseError(f"line {line_no}: unknown key {key!r} in [{section}]")
        attr, conv = table[key]
        try:
            if conv == "initial":
                parsed = _parse_initial(value, f"{section}.{key}", line_no)
            elif conv == "floats":
                parsed = tuple(float(v) for v in value.split(","))
            elif conv is int:
                parsed = int(value)
            elif conv is float:
                parsed = float(value)
            else:
                parsed = value
        except (ValueError, TypeError) as exc:
            if isinstance(exc, (ParseError, ConstraintError)):
                raise
            raise ParseError(
                f"line {line_no}: cannot convert {value!r} for {section}.{key}"
            ) from exc
        setattr(cfg, attr, parsed)
    try:
        cfg.validate()
    except ConstraintError:
        raise
    return cfg


def dump(cfg: SimConfig) -> str:
    """Normalized config text with every key present."""
    out = []
    for section, table in _SECTIONS.items():
        out.append(f"[{section}]")
        for key, (attr, conv) in table.items():
            v = getattr(cfg, attr)
            if conv == "initial":
                out.append(f"{key} = {v.render()}")
            elif conv == "floats":
                out.append(f"{key} = {','.join(repr(float(x)) for x in v)}")
            elif conv is float:
                out.append(f"{key} = {float(v)!r}")
            else:
                out.append(f"{key} = {v}")
        out.append("")
    return "\n".join(out)
