"""JSON run-configuration parsing, validation, and echo.

Every field is validated before any computation; unknown keys are rejected
at every level so typos cannot silently change a run.  Defaults are filled
in and recorded: physics-critical fields (a, b, c, lam, k0, nu) that were
defaulted are listed in ``applied_defaults`` so no physical choice is ever
silent.  The echoed configuration (``RunConfig.to_dict``) is itself a valid
configuration that reproduces the run bit for bit.

Complex values are encoded as two-element [re, im] arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .adjoint import CostSpec
from .constraints import ConstraintSet, ModeMask, PenaltyConfig
from .integrate import SCHEMES, ForcingSpec, TimeGrid
from .model import ShellParams, random_state
from .optimal import OptimizeConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_file"]

PHYSICS_DEFAULTS = {"a": 1.0, "b": -0.5, "lambda": 2.0, "k0": 1.0, "nu": 0.01}


class ConfigError(ValueError):
    """A named configuration validation failure."""


def _require_mapping(obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    return dict(obj)


def _reject_unknown(obj, where):
    if obj:
        raise ConfigError(f"{where}: unknown keys {sorted(obj)}")


def _number(obj, where):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {obj!r}")
    return float(obj)


def _integer(obj, where):
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{where}: expected an integer, got {obj!r}")
    return int(obj)


def _complex_pair(obj, where):
    if not (isinstance(obj, (list, tuple)) and len(obj) == 2):
        raise ConfigError(f"{where}: expected an [re, im] pair, got {obj!r}")
    return complex(_number(obj[0], where + "[0]"), _number(obj[1], where + "[1]"))


def _complex_vector(obj, where, n):
    if not isinstance(obj, list):
        raise ConfigError(f"{where}: expected a list of [re, im] pairs")
    if n is not None and len(obj) != n:
        raise ConfigError(f"{where}: expected {n} entries, got {len(obj)}")
    return np.array([_complex_pair(x, f"{where}[{i}]") for i, x in enumerate(obj)],
                    np.complex128)


def _pair(z: complex) -> list:
    return [z.real, z.imag]


def _pairs(v: np.ndarray) -> list:
    return [_pair(complex(z)) for z in np.asarray(v).ravel()]


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "seeded-random"
    values: np.ndarray | None = None
    amplitude: float = 1.0

    def build(self, params: ShellParams, seed: int) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(params.n_shells, np.complex128)
        if self.kind == "explicit":
            return np.array(self.values, np.complex128)
        return random_state(params, seed, self.amplitude)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "explicit":
            out["values"] = _pairs(self.values)
        if self.kind == "seeded-random":
            out["amplitude"] = self.amplitude
        return out


@dataclass(frozen=True)
class DesiredSpec:
    """How the tracking target is produced: the uncontrolled flow, the flow
    under a known control (twin experiment), or a trajectory CSV file."""

    kind: str
    control: ForcingSpec | None = None
    path: str | None = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "from-control":
            out["control"] = _forcing_to_dict(self.control)
        if self.kind == "csv":
            out["path"] = self.path
        return out


@dataclass(frozen=True)
class CostConfig:
    kind: str
    beta: float = 1.0
    desired: DesiredSpec | None = None
    include_terminal: bool = True

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "J2":
            out["beta"] = self.beta
            out["desired"] = self.desired.to_dict()
            out["include_terminal"] = self.include_terminal
        return out


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    cost: CostConfig | None = None
    optimizer: OptimizeConfig | None = None
    law: str | None = None
    constraint: ConstraintSet | None = None
    mask: ModeMask | None = None
    penalty: PenaltyConfig | None = None
    band: float = 1e-3
    fast: bool = True

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "optimize":
            out["cost"] = self.cost.to_dict()
            o = self.optimizer
            out["optimizer"] = {
                "max_iters": o.max_iters, "step0": o.step0, "armijo_c": o.armijo_c,
                "shrink": o.shrink, "tol_grad": o.tol_grad,
            }
        if self.kind == "feedback":
            out["law"] = self.law
            out["constraint"] = {"kind": self.constraint.kind, "rho": self.constraint.rho}
            if self.mask is not None:
                out["mask"] = list(self.mask.indices)
            if self.penalty is not None:
                out["penalty_lambda"] = self.penalty.penalty_lambda
            if self.law == "enstrophy":
                out["band"] = self.band
        if self.kind == "check":
            out["fast"] = self.fast
        return out


@dataclass(frozen=True)
class RunConfig:
    model: ShellParams
    grid: TimeGrid
    scheme: str
    seed: int
    initial: InitialSpec
    forcing: ForcingSpec
    task: TaskSpec
    output_directory: str = "."
    output_prefix: str = "run"
    applied_defaults: tuple = ()

    def initial_state(self) -> np.ndarray:
        return self.initial.build(self.model, self.seed)

    def to_dict(self) -> dict:
        m = self.model
        return {
            "model": {
                "n_shells": m.n_shells, "k0": m.k0, "lambda": m.lam,
                "a": m.a, "b": m.b, "c": m.c, "nu": m.nu,
            },
            "grid": {"t_end": self.grid.t_end, "dt": self.grid.dt},
            "scheme": self.scheme,
            "seed": self.seed,
            "initial": self.initial.to_dict(),
            "forcing": _forcing_to_dict(self.forcing),
            "task": self.task.to_dict(),
            "output": {"directory": self.output_directory, "prefix": self.output_prefix},
        }


def _forcing_to_dict(f: ForcingSpec) -> dict:
    out = {"kind": f.mode}
    if f.mode == "constant":
        out["value"] = _pair(complex(f.values))
    elif f.mode == "per-shell-constant":
        out["values"] = _pairs(f.values)
    elif f.mode == "grid-sampled":
        arr = np.asarray(f.values)
        out["values"] = [_pairs(row) for row in arr]
    return out


def _parse_forcing(obj, where, n_shells, n_steps) -> ForcingSpec:
    obj = _require_mapping(obj, where)
    kind = obj.pop("kind", "zero")
    if kind == "zero":
        _reject_unknown(obj, where)
        return ForcingSpec("zero")
    if kind == "constant":
        value = _complex_pair(obj.pop("value", None), where + ".value")
        _reject_unknown(obj, where)
        return ForcingSpec("constant", value)
    if kind == "per-shell-constant":
        values = _complex_vector(obj.pop("values", None), where + ".values", n_shells)
        _reject_unknown(obj, where)
        return ForcingSpec("per-shell-constant", values)
    if kind == "grid-sampled":
        rows = obj.pop("values", None)
        if not isinstance(rows, list) or len(rows) != n_steps:
            raise ConfigError(f"{where}.values: expected {n_steps} per-step rows")
        grid = np.stack([
            _complex_vector(r, f"{where}.values[{i}]", n_shells) for i, r in enumerate(rows)
        ])
        _reject_unknown(obj, where)
        return ForcingSpec("grid-sampled", grid)
    raise ConfigError(f"{where}.kind: unknown forcing kind {kind!r}")


def _parse_model(obj) -> tuple[ShellParams, list]:
    obj = _require_mapping(obj, "model")
    applied = []
    n_shells = _integer(obj.pop("n_shells", None), "model.n_shells")
    if n_shells < 3:
        raise ConfigError(f"model.n_shells: must be >= 3, got {n_shells}")
    vals = {}
    for key in ("k0", "lambda", "a", "b", "nu"):
        if key in obj:
            vals[key] = _number(obj.pop(key), f"model.{key}")
        else:
            vals[key] = PHYSICS_DEFAULTS[key]
            applied.append(f"model.{key}={vals[key]}")
    if "c" in obj:
        c = _number(obj.pop("c"), "model.c")
        if abs(vals["a"] + vals["b"] + c) > 1e-12 * max(1.0, abs(vals["a"]), abs(vals["b"]), abs(c)):
            raise ConfigError(
                f"model.c: interaction coefficients must satisfy a+b+c=0, got "
                f"a={vals['a']}, b={vals['b']}, c={c}"
            )
    else:
        c = -(vals["a"] + vals["b"])
        applied.append(f"model.c={c}")
    _reject_unknown(obj, "model")
    if vals["lambda"] <= 1:
        raise ConfigError(f"model.lambda: must exceed 1, got {vals['lambda']}")
    if vals["k0"] <= 0:
        raise ConfigError(f"model.k0: must be positive, got {vals['k0']}")
    if vals["nu"] < 0:
        raise ConfigError(f"model.nu: must be nonnegative, got {vals['nu']}")
    params = ShellParams(n_shells=n_shells, k0=vals["k0"], lam=vals["lambda"],
                         a=vals["a"], b=vals["b"], c=c, nu=vals["nu"])
    return params, applied


def _parse_initial(obj, n_shells) -> InitialSpec:
    if obj is None:
        return InitialSpec()
    obj = _require_mapping(obj, "initial")
    kind = obj.pop("kind", "seeded-random")
    if kind == "zero":
        _reject_unknown(obj, "initial")
        return InitialSpec("zero")
    if kind == "explicit":
        values = _complex_vector(obj.pop("values", None), "initial.values", n_shells)
        _reject_unknown(obj, "initial")
        return InitialSpec("explicit", values=values)
    if kind == "seeded-random":
        amplitude = _number(obj.pop("amplitude", 1.0), "initial.amplitude")
        if amplitude <= 0:
            raise ConfigError(f"initial.amplitude: must be positive, got {amplitude}")
        _reject_unknown(obj, "initial")
        return InitialSpec("seeded-random", amplitude=amplitude)
    raise ConfigError(f"initial.kind: unknown kind {kind!r}")


def _parse_cost(obj, n_shells, n_steps) -> CostConfig:
    obj = _require_mapping(obj, "task.cost")
    kind = obj.pop("kind", None)
    if kind == "J1":
        _reject_unknown(obj, "task.cost")
        return CostConfig("J1")
    if kind != "J2":
        raise ConfigError(f"task.cost.kind: expected 'J1' or 'J2', got {kind!r}")
    beta = _number(obj.pop("beta", None), "task.cost.beta")
    if beta <= 0:
        raise ConfigError(f"task.cost.beta: must be positive, got {beta}")
    include_terminal = obj.pop("include_terminal", True)
    if not isinstance(include_terminal, bool):
        raise ConfigError("task.cost.include_terminal: expected a boolean")
    des = _require_mapping(obj.pop("desired", None), "task.cost.desired")
    dkind = des.pop("kind", None)
    if dkind == "uncontrolled":
        _reject_unknown(des, "task.cost.desired")
        desired = DesiredSpec("uncontrolled")
    elif dkind == "from-control":
        ctrl = _parse_forcing(des.pop("control", None), "task.cost.desired.control",
                              n_shells, n_steps)
        _reject_unknown(des, "task.cost.desired")
        desired = DesiredSpec("from-control", control=ctrl)
    elif dkind == "csv":
        path = des.pop("path", None)
        if not isinstance(path, str):
            raise ConfigError("task.cost.desired.path: expected a file path string")
        _reject_unknown(des, "task.cost.desired")
        desired = DesiredSpec("csv", path=path)
    else:
        raise ConfigError(
            f"task.cost.desired.kind: expected 'uncontrolled', 'from-control' or "
            f"'csv', got {dkind!r}"
        )
    _reject_unknown(obj, "task.cost")
    return CostConfig("J2", beta=beta, desired=desired, include_terminal=include_terminal)


def _parse_optimizer(obj) -> OptimizeConfig:
    if obj is None:
        return OptimizeConfig()
    obj = _require_mapping(obj, "task.optimizer")
    kw = {}
    for key, conv in (("max_iters", _integer), ("step0", _number), ("armijo_c", _number),
                      ("shrink", _number), ("tol_grad", _number)):
        if key in obj:
            kw[key] = conv(obj.pop(key), f"task.optimizer.{key}")
    _reject_unknown(obj, "task.optimizer")
    try:
        return OptimizeConfig(**kw)
    except ValueError as e:
        raise ConfigError(f"task.optimizer: {e}") from None


def _parse_task(obj, n_shells, n_steps) -> TaskSpec:
    obj = _require_mapping(obj, "task")
    kind = obj.pop("kind", None)
    if kind in ("simulate", "spectrum"):
        _reject_unknown(obj, "task")
        return TaskSpec(kind)
    if kind == "check":
        fast = obj.pop("fast", True)
        if not isinstance(fast, bool):
            raise ConfigError("task.fast: expected a boolean")
        _reject_unknown(obj, "task")
        return TaskSpec("check", fast=fast)
    if kind == "optimize":
        cost = _parse_cost(obj.pop("cost", None), n_shells, n_steps)
        optimizer = _parse_optimizer(obj.pop("optimizer", None))
        _reject_unknown(obj, "task")
        return TaskSpec("optimize", cost=cost, optimizer=optimizer)
    if kind == "feedback":
        law = obj.pop("law", None)
        if law not in ("enstrophy", "penalty"):
            raise ConfigError(f"task.law: expected 'enstrophy' or 'penalty', got {law!r}")
        con = _require_mapping(obj.pop("constraint", None), "task.constraint")
        ckind = con.pop("kind", None)
        rho = _number(con.pop("rho", None), "task.constraint.rho")
        _reject_unknown(con, "task.constraint")
        if rho <= 0:
            raise ConfigError(f"task.constraint.rho: must be positive, got {rho}")
        try:
            constraint = ConstraintSet(ckind, rho)
        except ValueError as e:
            raise ConfigError(f"task.constraint: {e}") from None
        mask = None
        penalty = None
        band = 1e-3
        if law == "penalty":
            idx = obj.pop("mask", None)
            if not isinstance(idx, list) or not idx:
                raise ConfigError("task.mask: expected a nonempty list of shell indices")
            bad = [i for i in idx if not isinstance(i, int) or not 1 <= i <= n_shells]
            if bad:
                raise ConfigError(f"task.mask: indices out of range 1..{n_shells}: {bad}")
            mask = ModeMask(tuple(idx))
            lam = _number(obj.pop("penalty_lambda", None), "task.penalty_lambda")
            if lam <= 0:
                raise ConfigError(f"task.penalty_lambda: must be positive, got {lam}")
            penalty = PenaltyConfig(lam)
        else:
            band = _number(obj.pop("band", 1e-3), "task.band")
            if not 0 < band < 1:
                raise ConfigError(f"task.band: must lie in (0, 1), got {band}")
        _reject_unknown(obj, "task")
        return TaskSpec("feedback", law=law, constraint=constraint, mask=mask,
                        penalty=penalty, band=band)
    raise ConfigError(
        f"task.kind: expected one of simulate/optimize/feedback/check/spectrum, "
        f"got {kind!r}"
    )


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    doc = _require_mapping(doc, "config")
    model, applied = _parse_model(doc.pop("model", None))
    grid_obj = _require_mapping(doc.pop("grid", None), "grid")
    t_end = _number(grid_obj.pop("t_end", None), "grid.t_end")
    dt = _number(grid_obj.pop("dt", None), "grid.dt")
    _reject_unknown(grid_obj, "grid")
    try:
        grid = TimeGrid(t_end=t_end, dt=dt)
    except ValueError as e:
        raise ConfigError(f"grid: {e}") from None
    scheme = doc.pop("scheme", "semi-implicit-euler")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme: expected one of {SCHEMES}, got {scheme!r}")
    seed = _integer(doc.pop("seed", 0), "seed")
    initial = _parse_initial(doc.pop("initial", None), model.n_shells)
    forcing = _parse_forcing(doc.pop("forcing", {"kind": "zero"}), "forcing",
                             model.n_shells, grid.n_steps)
    task = _parse_task(doc.pop("task", None), model.n_shells, grid.n_steps)
    out = _require_mapping(doc.pop("output", {}), "output")
    directory = out.pop("directory", ".")
    prefix = out.pop("prefix", "run")
    if not isinstance(directory, str) or not isinstance(prefix, str):
        raise ConfigError("output.directory and output.prefix must be strings")
    _reject_unknown(out, "output")
    _reject_unknown(doc, "config")
    return RunConfig(model=model, grid=grid, scheme=scheme, seed=seed, initial=initial,
                     forcing=forcing, task=task, output_directory=directory,
                     output_prefix=prefix, applied_defaults=tuple(applied))


def parse_config_file(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def cost_spec_from_config(cfg: RunConfig):
    """Materialize the CostSpec of an optimize task (simulating the target)."""
    from .integrate import simulate

    cc = cfg.task.cost
    if cc.kind == "J1":
        return CostSpec("J1")
    des = cc.desired
    u0 = cfg.initial_state()
    if des.kind == "uncontrolled":
        target = simulate(cfg.model, u0, cfg.forcing, None, cfg.grid, "semi-implicit-euler")
    elif des.kind == "from-control":
        gstar = des.control.sample(cfg.grid.n_steps, cfg.model.n_shells)
        target = simulate(cfg.model, u0, cfg.forcing, gstar, cfg.grid, "semi-implicit-euler")
    else:
        from .storage import read_trajectory_csv

        target = read_trajectory_csv(des.path)
        if target.grid.n_steps != cfg.grid.n_steps:
            raise ConfigError(
                "task.cost.desired: CSV trajectory grid does not match the run grid"
            )
    return CostSpec("J2", beta=cc.beta, desired=target, include_terminal=cc.include_terminal)
