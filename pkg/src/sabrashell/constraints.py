"""Convex constraint sets, nearest-point projections, and feedback laws.

Two constraint balls are supported, both diagonal quadratic forms:

* enstrophy ball  {u : sum k_n^2 |u_n|^2 <= rho^2}
* helicity ball   {u : sum k_n   |u_n|^2 <= rho^2}

The nearest-point projection in the plain l2 metric solves the one-
multiplier KKT system z_n = u_n / (1 + mu * d_n) with d_n the constraint
weight, the scalar mu found by safeguarded Newton/bisection.

Two feedback constructions keep a flow near its constraint set:

* a boundary normal-cone law for the enstrophy ball (the resolvent of the
  dissipation operator maps that ball into itself, which is what makes the
  construction work), cancelling enstrophy production at the boundary;
* a masked penalty law g = -(1/lambda) (x - P_K x) on a finite set of
  shells, applied by operator splitting for stability at small lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .integrate import ForcingSpec, TimeGrid, Trajectory, as_control
from .model import ShellParams, as_state, wavenumbers

__all__ = [
    "ConstraintSet",
    "ModeMask",
    "PenaltyConfig",
    "resolvent",
    "project",
    "distance",
    "enstrophy_feedback",
    "penalty_feedback",
    "simulate_closed_loop",
    "invariance_report",
    "ClosedLoopReport",
    "InvarianceReport",
]


@dataclass(frozen=True)
class ConstraintSet:
    """A closed ball of a diagonal quadratic form, radius rho > 0."""

    kind: str
    rho: float

    KINDS = ("enstrophy_ball", "helicity_ball")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"constraint kind must be one of {self.KINDS}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    def weights(self, params: ShellParams) -> np.ndarray:
        k = wavenumbers(params)
        return k ** 2 if self.kind == "enstrophy_ball" else k

    def level(self, params: ShellParams, u: np.ndarray) -> float:
        """Constraint level (sum d_n |u_n|^2)^(1/2); membership iff <= rho."""
        return float(np.sqrt(np.sum(self.weights(params) * np.abs(u) ** 2)))

    def contains(self, params: ShellParams, u: np.ndarray) -> bool:
        return self.level(params, u) <= self.rho


@dataclass(frozen=True)
class ModeMask:
    """Characteristic function of a finite shell subset (1-based indices)."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        if not idx:
            raise ValueError("mode mask must select at least one shell")
        if idx[0] < 1:
            raise ValueError("shell indices are 1-based")
        object.__setattr__(self, "indices", idx)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Zero every component outside the selected shells."""
        if self.indices[-1] > len(u):
            raise ValueError(
                f"mask selects shell {self.indices[-1]} but the state has {len(u)}"
            )
        out = np.zeros_like(u)
        ix = np.array(self.indices) - 1
        out[ix] = u[ix]
        return out


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty strength; smaller values hold the flow closer to the set."""

    penalty_lambda: float

    def __post_init__(self):
        if not self.penalty_lambda > 0:
            raise ValueError(f"penalty_lambda must be positive, got {self.penalty_lambda}")


def resolvent(params: ShellParams, u: np.ndarray, lam: float) -> np.ndarray:
    """(I + lam * A)^{-1} u with A the diagonal k^2 operator.

    Maps the enstrophy ball into itself for every lam > 0, the invariance
    hypothesis behind the boundary feedback construction.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    k = wavenumbers(params)
    return as_state(params, u) / (1.0 + lam * k ** 2)


def _projection_multiplier(y: np.ndarray, d: np.ndarray, rho2: float) -> float:
    """Root of phi(mu) = sum d y / (1 + mu d)^2 - rho2 for a point outside."""

    def phi_dphi(mu):
        q = 1.0 + mu * d
        val = np.sum(d * y / q ** 2) - rho2
        der = -2.0 * np.sum(d ** 2 * y / q ** 3)
        return val, der

    lo, flo = 0.0, phi_dphi(0.0)[0]
    if flo <= 0:  # caller only invokes for points outside the set
        return 0.0
    hi = 1.0 / float(d.max())
    for _ in range(200):
        if phi_dphi(hi)[0] < 0:
            break
        hi *= 2.0
    else:  # phi -> -rho2 < 0 as mu -> inf, so the bracket always closes
        raise AssertionError("projection bracket failed to close")

    mu = 0.5 * (lo + hi)
    for _ in range(200):
        val, der = phi_dphi(mu)
        if abs(val) <= 1e-15 * rho2:
            return mu
        if val > 0:
            lo = mu
        else:
            hi = mu
        if (hi - lo) <= 1e-15 * max(hi, 1e-300):
            return 0.5 * (lo + hi)
        nxt = mu - (val / der if der != 0 else 0.0)
        if not (lo < nxt < hi):  # Newton left the bracket: bisect
            nxt = 0.5 * (lo + hi)
        mu = nxt
    return mu


def project(params: ShellParams, u: np.ndarray, K: ConstraintSet) -> np.ndarray:
    """Nearest point of K in the plain l2 metric; identity inside the set."""
    u = as_state(params, u)
    if K.contains(params, u):
        return u.copy()
    d = K.weights(params)
    mu = _projection_multiplier(np.abs(u) ** 2, d, K.rho ** 2)
    return u / (1.0 + mu * d)


def distance(params: ShellParams, u: np.ndarray, K: ConstraintSet,
             mask: ModeMask | None = None) -> float:
    """l2 distance from (masked) u to the constraint set."""
    x = mask.apply(as_state(params, u)) if mask is not None else as_state(params, u)
    return float(np.linalg.norm(x - project(params, x, K)))


def enstrophy_feedback(
    params: ShellParams,
    u: np.ndarray,
    f_now: np.ndarray,
    rho: float,
    band: float = 1e-3,
    clip: bool = True,
    pairing: str = "real",
) -> np.ndarray:
    """Boundary feedback that cancels enstrophy production.

    Returns zero strictly inside the activation band.  Near the boundary it
    returns -(Au / |Au|^2) * <f - nu*Au - B(u,u), Au>, the multiple of the
    boundary normal that zeroes d||u||^2/dt.  With ``clip`` (default) the
    multiplier is clipped so the law only ever acts against production (the
    minimum-norm normal-cone selection); the unclipped variant also pushes
    back outward when the free flow decays, freezing the level instead.
    ``pairing`` selects the real part of the pairing (the component that
    actually drives d||u||^2/dt) or the full complex value for comparison.
    """
    u = as_state(params, u)
    k = wavenumbers(params)
    level = float(np.sqrt(np.sum(k ** 2 * np.abs(u) ** 2)))
    if level < rho * (1.0 - band):
        return np.zeros_like(u)
    au = k ** 2 * u
    au2 = float(np.sum(np.abs(au) ** 2))
    if au2 == 0.0:
        raise AssertionError("boundary branch reached with zero state")
    residual = f_now - params.nu * au - _kernels.bilinear(k, params.a, params.b, u, u)
    paired = np.sum(residual * np.conj(au))
    if pairing == "real":
        mult = paired.real / au2
        if clip:
            mult = max(mult, 0.0)
    elif pairing == "complex":
        mult = paired / au2
    else:
        raise ValueError(f"pairing must be 'real' or 'complex', got {pairing!r}")
    return -mult * au


def penalty_feedback(
    params: ShellParams,
    u: np.ndarray,
    K: ConstraintSet,
    mask: ModeMask,
    cfg: PenaltyConfig,
) -> np.ndarray:
    """g = -(1/lambda) (x - P_K x) with x the masked state; zero outside the mask.

    The projection is taken of the masked vector directly, which is well
    defined whether or not masking commutes with the projection; the
    commutation gap is reported by the closed-loop runner as a diagnostic.
    """
    x = mask.apply(as_state(params, u))
    p = project(params, x, K)
    return -(x - p) / cfg.penalty_lambda


@dataclass
class ClosedLoopReport:
    """Constraint statistics of a feedback run (stored-state based)."""

    law: str
    rho: float
    max_level: float
    max_excess: float
    fraction_inside: float
    integral_d2: float
    max_pre_excess: float = 0.0          # enstrophy law: overshoot before safeguard
    safeguard_projections: int = 0
    penalty_lambda: float | None = None
    scaled_integral_d2: float | None = None   # (1/lambda) * integral_d2
    commutation_gap: float | None = None      # max |P(mu) - m P(u)| on the run

    def as_dict(self) -> dict:
        return {km: v for km, v in self.__dict__.items()}


@dataclass
class InvarianceReport:
    max_excess: float
    fraction_inside: float
    integral_d2: float
    max_level: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def invariance_report(
    params: ShellParams,
    traj: Trajectory,
    K: ConstraintSet,
    mask: ModeMask | None = None,
) -> InvarianceReport:
    """Constraint excess, inside fraction, and integrated squared distance.

    The integral uses the left-endpoint rectangle rule over the stored
    states, the same formula the closed-loop runner reports.
    """
    m = traj.grid.n_steps
    levels = np.empty(m + 1)
    d2 = np.empty(m)
    for j in range(m + 1):
        x = mask.apply(traj.states[j]) if mask is not None else traj.states[j]
        levels[j] = K.level(params, x)
        if j < m:
            d2[j] = distance(params, traj.states[j], K, mask) ** 2
    excess = np.maximum(levels - K.rho, 0.0)
    return InvarianceReport(
        max_excess=float(excess.max()),
        fraction_inside=float(np.mean(levels <= K.rho * (1.0 + 1e-12))),
        integral_d2=float(traj.grid.dt * d2.sum()),
        max_level=float(levels.max()),
    )


def simulate_closed_loop(
    params: ShellParams,
    u0: np.ndarray,
    f: ForcingSpec,
    law: str,
    K: ConstraintSet,
    grid: TimeGrid,
    scheme: str = "semi-implicit-euler",
    mask: ModeMask | None = None,
    penalty: PenaltyConfig | None = None,
    band: float = 1e-3,
    clip: bool = True,
    safeguard: bool = True,
) -> tuple[Trajectory, np.ndarray, ClosedLoopReport]:
    """Step the dynamics with the feedback evaluated from the current state.

    ``law`` is "enstrophy" (boundary normal-cone law, post-step safeguard
    projection if a step overshoots) or "penalty" (operator splitting:
    explicit dynamics step, then relaxation of the masked part toward its
    projection with factor theta = min(dt/lambda, 1), which reproduces the
    penalty term for dt <= lambda and hard projection in the stiff limit).
    Returns the trajectory, the control actually applied per step, and the
    constraint report.
    """
    u0 = as_state(params, u0)
    k = wavenumbers(params)
    dt = grid.dt
    m = grid.n_steps
    rhs_f = f.sample(m, params.n_shells)
    step = _kernels.step_si_euler if scheme == "semi-implicit-euler" else _kernels.step_ifrk4

    if law == "enstrophy":
        if K.kind != "enstrophy_ball":
            raise ValueError("the boundary law is defined for the enstrophy ball")
        if not K.contains(params, u0):
            raise ValueError("initial state must lie in the constraint set")
    elif law == "penalty":
        if mask is None or penalty is None:
            raise ValueError("penalty law requires a mode mask and a penalty config")
        if not K.contains(params, mask.apply(u0)):
            raise ValueError("masked initial state must lie in the constraint set")
    else:
        raise ValueError(f"unknown feedback law {law!r}")

    states = np.empty((m + 1, params.n_shells), np.complex128)
    states[0] = u0
    applied = np.zeros((m, params.n_shells), np.complex128)
    max_pre_excess = 0.0
    n_safeguard = 0
    commutation_gap = 0.0

    for j in range(m):
        u = states[j]
        if law == "enstrophy":
            g = enstrophy_feedback(params, u, rhs_f[j], K.rho, band=band, clip=clip)
            u_next = step(k, params.a, params.b, params.nu, dt, u, rhs_f[j] + g)
            if not np.all(np.isfinite(u_next.view(np.float64))):
                from .integrate import BlowUpError

                raise BlowUpError(j + 1, (j + 1) * dt)
            pre_level = K.level(params, u_next)
            max_pre_excess = max(max_pre_excess, pre_level - K.rho)
            if safeguard and pre_level > K.rho:
                projected = project(params, u_next, K)
                g = g + (projected - u_next) / dt
                u_next = projected
                n_safeguard += 1
            applied[j] = g
        else:
            u_mid = step(k, params.a, params.b, params.nu, dt, u, rhs_f[j])
            if not np.all(np.isfinite(u_mid.view(np.float64))):
                from .integrate import BlowUpError

                raise BlowUpError(j + 1, (j + 1) * dt)
            x = mask.apply(u_mid)
            p = project(params, x, K)
            theta = min(dt / penalty.penalty_lambda, 1.0)
            relax = theta * (p - x)
            u_next = u_mid + relax
            applied[j] = relax / dt
            p_full = project(params, u_mid, K)
            commutation_gap = max(
                commutation_gap, float(np.linalg.norm(p - mask.apply(p_full)))
            )
        states[j + 1] = u_next

    traj = Trajectory(grid=grid, states=states, applied_control=applied)
    inv = invariance_report(params, traj, K, mask if law == "penalty" else None)
    report = ClosedLoopReport(
        law=law,
        rho=K.rho,
        max_level=inv.max_level,
        max_excess=inv.max_excess,
        fraction_inside=inv.fraction_inside,
        integral_d2=inv.integral_d2,
        max_pre_excess=max(max_pre_excess, 0.0),
        safeguard_projections=n_safeguard,
    )
    if law == "penalty":
        report.penalty_lambda = penalty.penalty_lambda
        report.scaled_integral_d2 = inv.integral_d2 / penalty.penalty_lambda
        report.commutation_gap = commutation_gap
    return traj, applied, report
