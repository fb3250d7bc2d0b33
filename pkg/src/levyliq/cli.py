"""Batch front end: parse a key-value run configuration and emit CSV results.

Configuration format
--------------------
One ``key = value`` pair per line, ``#`` starts a comment. Keys use dotted
section prefixes::

    solvent.drift = 10          # premium rate
    solvent.sigma = 2
    solvent.claims.rate = 3
    solvent.claims.law = erlang2
    solvent.claims.law_rate = 2
    solvent.dividend.drift = 2  # subtracted from the premium rate
    solvent.dividend.rate = 2   # lump-sum dividends act as extra downward jumps
    solvent.dividend.law = exponential
    solvent.dividend.law_rate = 1
    barriers.a = 0
    grid.u = -1:2:50            # lo:hi:n

Without any ``insolvent.*`` key the insolvent regime reuses the solvent model.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .levy_model import Erlang2, Exponential, LevyModel
from .liquidation import (BarrierSystem, LiquidationProblem, joint_cdf_grid, liquidation_laplace,
                          liquidation_probability)
from .numerics import NumericalError
from .parisian import parisian_ruin_prob, parisian_ruin_prob_barrier
from .scale_functions import build_scale
from .simulator import SimConfig, estimate, simulate_parisian

__all__ = [
    "ConfigError",
    "Grid",
    "ModelBlock",
    "SimBlock",
    "RunConfig",
    "parse_config",
    "parse_text",
    "emit",
    "run",
    "main",
]

LAWS = {"exponential": Exponential, "erlang2": Erlang2}
FUNCTIONALS = ("liq_prob", "laplace", "joint_cdf", "exit_up", "creeping_mass", "parisian")


class ConfigError(ValueError):
    """Invalid configuration; the message names the file line and key."""


@dataclass(frozen=True)
class Grid:
    """``n`` equally spaced points on ``[lo, hi]``."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid needs n >= 1")
        if self.hi < self.lo or (self.n == 1 and self.hi != self.lo):
            raise ValueError("grid needs lo <= hi, and lo == hi when n == 1")

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected lo:hi:n, got {text!r}")
        return cls(float(parts[0]), float(parts[1]), int(parts[2]))

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def __str__(self) -> str:
        return f"{self.lo!r}:{self.hi!r}:{self.n}"


@dataclass(frozen=True)
class ModelBlock:
    """Drift, Gaussian part, claims and optional dividend stream of one regime."""

    drift: float
    sigma: float = 0.0
    claims_rate: float = 0.0
    claims_law: str = "exponential"
    claims_law_rate: float = 1.0
    dividend_drift: float = 0.0
    dividend_rate: float = 0.0
    dividend_law: str = "exponential"
    dividend_law_rate: float = 1.0

    def __post_init__(self):
        for name in ("sigma", "claims_rate", "dividend_drift", "dividend_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{_model_key(name)} must be >= 0")
        for name in ("claims_law_rate", "dividend_law_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{_model_key(name)} must be positive")
        for name in ("claims_law", "dividend_law"):
            if getattr(self, name) not in LAWS:
                raise ValueError(f"{_model_key(name)} must be one of {sorted(LAWS)}")
        if self.dividend_drift > 0 and not self.dividend_drift < self.drift:
            raise ValueError("dividend.drift must stay below drift")

    def to_model(self) -> LevyModel:
        comps = [(self.claims_rate, LAWS[self.claims_law](self.claims_law_rate)),
                 (self.dividend_rate, LAWS[self.dividend_law](self.dividend_law_rate))]
        return LevyModel.from_components(self.drift - self.dividend_drift, self.sigma, comps)


@dataclass(frozen=True)
class SimBlock:
    paths: int = 100_000
    step: float = 1e-3
    seed: int = 20240601
    horizon: float = 500.0
    bridge: bool = True
    functional: str = "liq_prob"
    u: float | None = None

    def __post_init__(self):
        if self.functional not in FUNCTIONALS:
            raise ValueError(f"sim.functional must be one of {FUNCTIONALS}")
        SimConfig(paths=self.paths, step=self.step, horizon=self.horizon, seed=self.seed,
                  max_step=max(0.25, self.step))

    def to_config(self) -> SimConfig:
        return SimConfig(paths=self.paths, step=self.step, horizon=self.horizon, seed=self.seed,
                         bridge_correction=self.bridge, max_step=max(0.25, self.step))


@dataclass(frozen=True)
class RunConfig:
    solvent: ModelBlock
    insolvent: ModelBlock | None = None
    a: float | None = None
    b: float | None = None
    c: float | None = None
    grace_rate: float | None = None
    discount: float = 0.0
    start: float | None = None
    upper: float | None = None
    parisian_a: float | None = None
    grid_x: Grid | None = None
    grid_u: Grid | None = None
    grid_z: Grid | None = None
    fig2_a: tuple[float, ...] = ()
    fig2_b: Grid | None = None
    fig2_c: Grid | None = None
    sweeps: tuple[tuple[str, Grid], ...] = ()
    sim: SimBlock = field(default_factory=SimBlock)
    output: str | None = None

    @property
    def barriers(self) -> BarrierSystem:
        if None in (self.a, self.b, self.c):
            raise ConfigError("barriers.a, barriers.b and barriers.c are required for this command")
        return BarrierSystem(self.a, self.b, self.c)

    def models(self) -> tuple[LevyModel, LevyModel]:
        sol = self.solvent.to_model()
        return sol, (self.insolvent.to_model() if self.insolvent is not None else sol)

    def problem(self) -> LiquidationProblem:
        for key, val in (("grace_rate", self.grace_rate), ("start", self.start)):
            if val is None:
                raise ConfigError(f"{key} is required for this command")
        sol, ins = self.models()
        return LiquidationProblem(sol, ins, self.barriers, self.grace_rate, self.discount, self.start)


# ---------------------------------------------------------------------------
# key table: config key -> (attribute path, parser, formatter)

def _model_key(attr: str) -> str:
    return attr.replace("claims_", "claims.").replace("dividend_", "dividend.")


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("none", "") else _float(text)


def _float(text: str) -> float:
    val = float(text)
    if math.isnan(val):
        raise ValueError("NaN is not allowed")
    return val


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(_float(t) for t in text.split(",") if t.strip())


def _fmt(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return repr(val)
    if isinstance(val, tuple):
        return ", ".join(repr(v) for v in val)
    return str(val)


_MODEL_FIELDS = {f.name: f for f in fields(ModelBlock)}


def _law(text: str) -> str:
    if text not in LAWS:
        raise ValueError(f"jump law must be one of {sorted(LAWS)}, got {text!r}")
    return text


_MODEL_PARSERS: dict[str, Callable[[str], object]] = {
    name: (_law if f.type == "str" else _float) for name, f in _MODEL_FIELDS.items()
}
_TOP: dict[str, tuple[str, Callable[[str], object]]] = {
    "barriers.a": ("a", _float),
    "barriers.b": ("b", _float),
    "barriers.c": ("c", _float),
    "grace_rate": ("grace_rate", _float),
    "discount": ("discount", _float),
    "start": ("start", _float),
    "upper": ("upper", _opt_float),
    "parisian.a": ("parisian_a", _opt_float),
    "grid.x": ("grid_x", Grid.parse),
    "grid.u": ("grid_u", Grid.parse),
    "grid.z": ("grid_z", Grid.parse),
    "fig2.a": ("fig2_a", _floats),
    "fig2.b": ("fig2_b", Grid.parse),
    "fig2.c": ("fig2_c", Grid.parse),
    "output": ("output", str),
}
_SIM: dict[str, Callable[[str], object]] = {
    "paths": int, "step": _float, "seed": int, "horizon": _float, "bridge": _bool,
    "functional": str, "u": _opt_float,
}


def _read_pairs(text: str, source: str) -> dict[str, tuple[str, int]]:
    pairs: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: key '{key}' repeated (first on line {pairs[key][1]})")
        pairs[key] = (val, lineno)
    return pairs


def parse_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse configuration text; see the module docstring for the format."""
    pairs = _read_pairs(text, source)

    def where(key: str) -> str:
        return f"{source}:{pairs[key][1]}: key '{key}'" if key in pairs else f"{source}: key '{key}'"

    def convert(key: str, parser: Callable[[str], object]):
        try:
            return parser(pairs[key][0])
        except ValueError as exc:
            raise ConfigError(f"{where(key)}: {exc}") from None

    used: set[str] = set()
    blocks: dict[str, ModelBlock | None] = {}
    for prefix in ("solvent", "insolvent"):
        kw, first = {}, None
        for name, parser in _MODEL_PARSERS.items():
            key = f"{prefix}.{_model_key(name)}"
            if key in pairs:
                kw[name] = convert(key, parser)
                used.add(key)
                first = first or key
        if not kw:
            blocks[prefix] = None
            continue
        if "drift" not in kw:
            raise ConfigError(f"{source}: missing key '{prefix}.drift'")
        try:
            blocks[prefix] = ModelBlock(**kw)
            blocks[prefix].to_model()
        except ValueError as exc:
            raise ConfigError(f"{where(prefix + '.drift')}: {prefix} model: {exc}") from None
    if blocks["solvent"] is None:
        raise ConfigError(f"{source}: missing key 'solvent.drift'")

    top = {}
    for key, (attr, parser) in _TOP.items():
        if key in pairs:
            top[attr] = convert(key, parser)
            used.add(key)
    sim_kw = {}
    for name, parser in _SIM.items():
        key = f"sim.{name}"
        if key in pairs:
            sim_kw[name] = convert(key, parser)
            used.add(key)
    try:
        sim = SimBlock(**sim_kw)
    except ValueError as exc:
        key = next((k for k in pairs if k.startswith("sim.")), "sim.paths")
        raise ConfigError(f"{where(key)}: {exc}") from None

    sweeps = []
    for key in pairs:
        if key.startswith("sweep."):
            target = key[len("sweep."):]
            if not _sweepable(target):
                raise ConfigError(f"{where(key)}: cannot sweep '{target}'")
            sweeps.append((target, convert(key, Grid.parse)))
            used.add(key)

    unknown = [k for k in pairs if k not in used]
    if unknown:
        raise ConfigError(f"{where(unknown[0])}: unknown key")

    cfg = RunConfig(solvent=blocks["solvent"], insolvent=blocks["insolvent"], sim=sim,
                    sweeps=tuple(sweeps), **top)
    _validate(cfg, where)
    return cfg


def _sweepable(target: str) -> bool:
    if target in ("grace_rate", "discount", "start", "upper", "barriers.a", "barriers.b",
                  "barriers.c"):
        return True
    prefix, _, rest = target.partition(".")
    names = {_model_key(n) for n, p in _MODEL_PARSERS.items() if p is _float}
    return prefix in ("solvent", "insolvent") and rest in names


def _validate(cfg: RunConfig, where: Callable[[str], str]) -> None:
    bars = (cfg.a, cfg.b, cfg.c)
    if any(v is not None for v in bars):
        if None in bars:
            missing = ["barriers.a", "barriers.b", "barriers.c"][bars.index(None)]
            raise ConfigError(f"{where(missing)}: missing (barriers need all of a, b, c)")
        if not cfg.a < cfg.b < cfg.c:
            raise ConfigError(f"{where('barriers.a')}: barriers must satisfy a < b < c")
        if not cfg.c > 0:
            raise ConfigError(f"{where('barriers.c')}: safety barrier c must be positive")
    if cfg.grace_rate is not None and not cfg.grace_rate > 0:
        raise ConfigError(f"{where('grace_rate')}: grace_rate must be positive")
    if cfg.discount < 0:
        raise ConfigError(f"{where('discount')}: discount must be >= 0")
    if cfg.start is not None and cfg.b is not None and not cfg.start > cfg.b:
        raise ConfigError(f"{where('start')}: start must exceed barriers.b")
    if cfg.upper is not None and cfg.c is not None and not cfg.upper > cfg.c:
        raise ConfigError(f"{where('upper')}: upper must exceed barriers.c")
    if cfg.parisian_a is not None and not cfg.parisian_a < 0:
        raise ConfigError(f"{where('parisian.a')}: parisian.a must be negative")


def _resolve(path: str | Path) -> Path:
    """Existing file path, else a bundled configuration with the same file name."""
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("levyliq") / "configs" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"{path}: no such file (and no bundled configuration of that name)")


def parse_config(path: str | Path) -> RunConfig:
    """Read and validate a configuration file.

    A path that does not exist but names a bundled configuration
    (``sec5_1.cfg``, ``sec5_2.cfg``, ``sec5_3.cfg``) loads the bundled copy.
    """
    p = _resolve(path)
    return parse_text(p.read_text(), str(path))


def emit(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_text(emit(cfg)) == cfg``."""
    lines = []
    defaults = ModelBlock(drift=0.0)
    for prefix, block in (("solvent", cfg.solvent), ("insolvent", cfg.insolvent)):
        if block is None:
            continue
        for name in _MODEL_FIELDS:
            val = getattr(block, name)
            if name == "drift" or val != getattr(defaults, name):
                lines.append(f"{prefix}.{_model_key(name)} = {_fmt(val)}")
    for key, (attr, _) in _TOP.items():
        val = getattr(cfg, attr)
        if val is None or val == ():
            continue
        if attr == "discount" and val == 0.0:
            continue
        lines.append(f"{key} = {_fmt(val)}")
    for target, grid in cfg.sweeps:
        lines.append(f"sweep.{target} = {grid}")
    sim_default = SimBlock()
    for name in _SIM:
        val = getattr(cfg.sim, name)
        if val != getattr(sim_default, name):
            lines.append(f"sim.{name} = {_fmt(val)}")
    return "\n".join(lines) + "\n"


def _with_value(cfg: RunConfig, target: str, value: float) -> RunConfig:
    """Copy of ``cfg`` with one sweepable key set to ``value``."""
    if target.startswith(("solvent.", "insolvent.")):
        prefix, _, rest = target.partition(".")
        block = getattr(cfg, prefix) or cfg.solvent
        attr = rest.replace(".", "_")
        return replace(cfg, **{prefix: replace(block, **{attr: float(value)})})
    attr = _TOP[target][0] if target in _TOP else target
    return replace(cfg, **{attr: float(value)})


# ---------------------------------------------------------------------------
# commands


Rows = tuple[list[str], list[list]]


def _cmd_scale_eval(cfg: RunConfig) -> Rows:
    if cfg.grid_x is None:
        raise ConfigError("scale eval needs grid.x (or --grid-u)")
    xs = cfg.grid_x.values()
    rows = []
    named = [("solvent", cfg.solvent)] + ([("insolvent", cfg.insolvent)] if cfg.insolvent else [])
    for name, block in named:
        sf = build_scale(block.to_model(), cfg.discount)
        for fname, func in (("W", sf.W), ("W_prime", sf.W_prime), ("Z", sf.Z)):
            vals = np.atleast_1d(func(xs))
            rows += [[name, fname, x, v] for x, v in zip(xs, vals)]
    return ["model", "function", "x", "value"], rows


def _cmd_liq_prob(cfg: RunConfig) -> Rows:
    prob = cfg.problem()
    br = prob.barriers
    return (["a", "b", "c", "grace_rate", "x", "value"],
            [[br.a, br.b, br.c, prob.grace_rate, prob.start, liquidation_probability(prob)]])


def _cmd_liq_laplace(cfg: RunConfig) -> Rows:
    prob = cfg.problem()
    if cfg.upper is not None:
        zs = [cfg.upper]
    elif cfg.grid_z is not None:
        zs = cfg.grid_z.values()
    else:
        raise ConfigError("liquidation laplace needs upper (or grid.z)")
    return (["q", "x", "z", "value"],
            [[prob.discount, prob.start, z, liquidation_laplace(prob, z)] for z in zs])


def _cmd_joint_cdf(cfg: RunConfig) -> Rows:
    if cfg.grid_u is None or cfg.grid_z is None:
        raise ConfigError("liquidation joint-cdf needs grid.u and grid.z")
    prob = cfg.problem()
    us, zs = cfg.grid_u.values(), cfg.grid_z.values()
    vals = joint_cdf_grid(prob, us, zs)
    rows = [[u, z, vals[i, j]] for i, u in enumerate(us) for j, z in enumerate(zs)]
    return ["u", "z", "value"], rows


def _parisian_value(model: LevyModel, lam: float, a: float | None, x: float) -> float:
    if a is None:
        return parisian_ruin_prob(model, lam, x)
    return parisian_ruin_prob_barrier(model, lam, a, x)


def _cmd_parisian_prob(cfg: RunConfig) -> Rows:
    if cfg.grace_rate is None or cfg.start is None:
        raise ConfigError("parisian prob needs grace_rate and start")
    model = cfg.solvent.to_model()
    a = cfg.parisian_a
    return (["a", "grace_rate", "x", "value"],
            [[-math.inf if a is None else a, cfg.grace_rate, cfg.start,
              _parisian_value(model, cfg.grace_rate, a, cfg.start)]])


def _cmd_fig2(cfg: RunConfig) -> Rows:
    if not cfg.fig2_a or cfg.fig2_b is None or cfg.fig2_c is None:
        raise ConfigError("compare fig2 needs fig2.a, fig2.b and fig2.c")
    if cfg.grace_rate is None or cfg.start is None:
        raise ConfigError("compare fig2 needs grace_rate and start")
    model = cfg.solvent.to_model()
    lam, x = cfg.grace_rate, cfg.start
    parisian = parisian_ruin_prob(model, lam, x)
    rows = []
    for a in cfg.fig2_a:
        for b in cfg.fig2_b.values():
            for c in cfg.fig2_c.values():
                if not (a < b < c and c > 0 and x > b):
                    continue
                prob = LiquidationProblem(model, model, BarrierSystem(a, b, c), lam, 0.0, x)
                rows.append([a, b, c, "parisian", parisian])
                rows.append([a, b, c, "liquidation", liquidation_probability(prob)])
    return ["a", "b", "c", "quantity", "value"], rows


def _cmd_fig3(cfg: RunConfig) -> Rows:
    if not cfg.sweeps:
        raise ConfigError("sweep fig3 needs at least one sweep.<key> = lo:hi:n entry")
    rows = []
    for target, grid in cfg.sweeps:
        for v in grid.values():
            rows.append([target, v, liquidation_probability(_with_value(cfg, target, v).problem())])
    return ["parameter", "setting", "value"], rows


def _cmd_simulate(cfg: RunConfig) -> Rows:
    sim = cfg.sim
    sc = sim.to_config()
    if sim.functional == "parisian":
        if cfg.grace_rate is None or cfg.start is None:
            raise ConfigError("parisian simulation needs grace_rate and start")
        est = simulate_parisian(cfg.solvent.to_model(), cfg.grace_rate, cfg.parisian_a, cfg.start,
                                sc, q=cfg.discount, z=cfg.upper)
    else:
        est = estimate(cfg.problem(), cfg.upper, sim.functional, sc, u=sim.u)
    head = ["functional", "paths", "step", "seed", "censored_fraction", "tail_bound",
            "value", "std_err", "ci_lo", "ci_hi"]
    return head, [[sim.functional, est.n, sc.step, est.seed, est.censored_fraction, est.tail_bound,
                   est.mean, est.std_err, est.ci95[0], est.ci95[1]]]


COMMANDS: dict[str, Callable[[RunConfig], Rows]] = {
    "scale eval": _cmd_scale_eval,
    "liquidation prob": _cmd_liq_prob,
    "liquidation laplace": _cmd_liq_laplace,
    "liquidation joint-cdf": _cmd_joint_cdf,
    "parisian prob": _cmd_parisian_prob,
    "compare fig2": _cmd_fig2,
    "sweep fig3": _cmd_fig3,
    "simulate": _cmd_simulate,
}


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(header: list[str], rows: list[list], stream) -> None:
    """RFC-4180 CSV with ``repr`` floats (bit-exact round trip)."""
    writer = csv.writer(stream)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])


def run(command: str, cfg: RunConfig, out: str | None = None, stream=None) -> Rows:
    """Execute one command and write its CSV to ``out`` (or ``stream``)."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}; choose from {sorted(COMMANDS)}")
    header, rows = COMMANDS[command](cfg)
    target = out or cfg.output
    if target:
        with open(target, "w", newline="") as fh:
            write_csv(header, rows, fh)
    else:
        write_csv(header, rows, stream or sys.stdout)
    return header, rows


def _apply_overrides(cfg: RunConfig, ns: argparse.Namespace) -> RunConfig:
    sim_kw = {k: v for k, v in (("paths", ns.paths), ("seed", ns.seed), ("step", ns.step))
              if v is not None}
    if sim_kw:
        cfg = replace(cfg, sim=replace(cfg.sim, **sim_kw))
    if ns.grid_u is not None:
        # an explicit u grid also serves as the evaluation grid of scale eval
        cfg = replace(cfg, grid_u=ns.grid_u, grid_x=ns.grid_u)
    if ns.grid_z is not None:
        # an explicit z grid replaces the single upper level
        cfg = replace(cfg, grid_z=ns.grid_z, upper=None)
    return cfg


def _grid_arg(text: str) -> Grid:
    try:
        return Grid.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config_path", nargs="?", metavar="CONFIG", help="configuration file")
    common.add_argument("--config", dest="config_flag", metavar="PATH", help="configuration file")
    common.add_argument("--out", metavar="PATH", help="CSV output path (default: stdout)")
    common.add_argument("--paths", type=int, metavar="N", help="Monte Carlo paths")
    common.add_argument("--seed", type=int, metavar="S", help="Monte Carlo seed")
    common.add_argument("--step", type=float, metavar="H", help="Monte Carlo time step")
    common.add_argument("--grid-u", type=_grid_arg, metavar="lo:hi:n", help="u grid")
    common.add_argument("--grid-z", type=_grid_arg, metavar="lo:hi:n", help="z grid (replaces upper)")

    parser = argparse.ArgumentParser(prog="levyliq", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)
    for group, actions in (("scale", ["eval"]), ("liquidation", ["prob", "laplace", "joint-cdf"]),
                           ("parisian", ["prob"]), ("compare", ["fig2"]), ("sweep", ["fig3"])):
        sub = groups.add_parser(group).add_subparsers(dest="action", required=True)
        for action in actions:
            sub.add_parser(action, parents=[common])
    groups.add_parser("simulate", parents=[common])
    return parser


def _attach_grid_values(argv: list[str]) -> list[str]:
    # "--grid-u -1:2:50" would read the negative grid as an option; bind it as "--grid-u=-1:2:50"
    out, it = [], iter(argv)
    for arg in it:
        if arg in ("--grid-u", "--grid-z"):
            nxt = next(it, None)
            out.append(arg if nxt is None else f"{arg}={nxt}")
        else:
            out.append(arg)
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = build_parser().parse_args(_attach_grid_values(argv))
    command = ns.group if ns.group == "simulate" else f"{ns.group} {ns.action}"
    path = ns.config_flag or ns.config_path
    if path is None:
        print("levyliq: error: a configuration file is required", file=sys.stderr)
        return 2
    try:
        cfg = _apply_overrides(parse_config(path), ns)
        header, rows = run(command, cfg, out=ns.out)
    except (ConfigError, ValueError, NumericalError) as exc:
        print(f"levyliq {command}: error: {exc}", file=sys.stderr)
        return 1
    if (ns.out or cfg.output) and len(rows) == 1:
        print(_cell(rows[0][header.index("value")]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
