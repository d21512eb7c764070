"""Macroscale fractional chemotaxis pair on the 2D grid.

Time stepping is the L1 scheme with the semi-implicit split: diffusion is
implicit (one cosine-transform solve per field per step), while chemotaxis,
fluid transport, and the reaction -gamma*c + n are explicit at the previous
level. Explicit chemotaxis needs the step restriction
``dt^alpha <= cfl_safety * dx^2 / max|chi grad c|`` (see :func:`stable_dt`).

The tactic face flux upwinds the cell density by the sign of the drift
``chi(c_face) (grad c)_face``, which keeps the density nonnegative under
the CFL bound; fluxes vanish on the walls, so the discrete mass of n is
conserved to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import (
    Grid2D,
    ScalarField,
    VectorField,
    advect,
    divergence,
    gradient,
    solve_helmholtz_neumann,
)
from .fracops import FracHistory, implicit_l1_step


class DegenerateChi(ValueError):
    """Reciprocal sensitivity hit the attractant floor."""


class BlowupDetected(RuntimeError):
    """A field stopped being finite."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


UNIT = "unit"
CONST_BETA = "const_beta"
RECIPROCAL = "reciprocal"

C_FLOOR = 1e-8


@dataclass(frozen=True)
class ChiModel:
    """Chemotactic sensitivity menu: 1, a constant rate, or 1/c."""

    kind: str = UNIT
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in (UNIT, CONST_BETA, RECIPROCAL):
            raise ValueError(f"unknown chi model {self.kind!r}")

    def on_faces(self, c_face: np.ndarray) -> np.ndarray:
        if self.kind == UNIT:
            return np.ones_like(c_face)
        if self.kind == CONST_BETA:
            return np.full_like(c_face, self.beta)
        if np.any(c_face <= C_FLOOR):
            raise DegenerateChi(
                f"reciprocal sensitivity needs c > {C_FLOOR}; "
                f"min face value {float(c_face.min()):.3e}"
            )
        return 1.0 / c_face


@dataclass
class KSState:
    n: ScalarField
    c: ScalarField
    n_hist: FracHistory
    c_hist: FracHistory
    gamma: float = 0.0
    chi: ChiModel = ChiModel()
    diff_n: float = 1.0
    diff_c: float = 1.0
    chemo: float = 1.0
    advect_scheme: str = "upwind"

    @classmethod
    def create(cls, n: ScalarField, c: ScalarField, dt: float, t0: float = 0.0,
               gamma: float = 0.0, chi: ChiModel = ChiModel(),
               diff_n: float = 1.0, diff_c: float = 1.0, chemo: float = 1.0,
               advect_scheme: str = "upwind"):
        if gamma < 0.0:
            raise ValueError("gamma must be >= 0")
        return cls(
            n=n, c=c,
            n_hist=FracHistory(n.values, t0, dt),
            c_hist=FracHistory(c.values, t0, dt),
            gamma=gamma, chi=chi, diff_n=diff_n, diff_c=diff_c, chemo=chemo,
            advect_scheme=advect_scheme,
        )

    @property
    def grid(self) -> Grid2D:
        return self.n.grid

    @property
    def t(self) -> float:
        return self.n_hist.t_last

    def mass(self) -> float:
        return self.n.integral()


def chemotaxis_flux(n: ScalarField, c: ScalarField, chi: ChiModel) -> VectorField:
    """Face flux ``n_face * chi(c_face) * (grad c)_face`` with n upwinded by
    the drift sign and zero normal flux on the walls."""
    g = n.grid
    grad_c = gradient(c)
    gh_c = c.ghosted()
    gh_n = n.ghosted()

    cx = 0.5 * (gh_c[:-1, 1:-1] + gh_c[1:, 1:-1])   # (nx+1, ny)
    cy = 0.5 * (gh_c[1:-1, :-1] + gh_c[1:-1, 1:])   # (nx, ny+1)
    drift_x = chi.on_faces(cx) * grad_c.ux
    drift_y = chi.on_faces(cy) * grad_c.uy

    n_w, n_e = gh_n[:-1, 1:-1], gh_n[1:, 1:-1]
    n_s, n_n = gh_n[1:-1, :-1], gh_n[1:-1, 1:]
    nx_face = np.where(drift_x > 0.0, n_w, np.where(drift_x < 0.0, n_e, 0.5 * (n_w + n_e)))
    ny_face = np.where(drift_y > 0.0, n_s, np.where(drift_y < 0.0, n_n, 0.5 * (n_s + n_n)))

    # inf*0 from an already-diverged field must reach the blow-up detector
    # as NaN, not as a warning storm
    with np.errstate(invalid="ignore"):
        flux = VectorField(g, nx_face * drift_x, ny_face * drift_y)
    # walls: gradient() already zeroes boundary faces, keep it explicit
    flux.ux[0, :] = flux.ux[-1, :] = 0.0
    flux.uy[:, 0] = flux.uy[:, -1] = 0.0
    return flux


def max_drift(state: KSState) -> float:
    flux_drift = chemotaxis_flux(
        ScalarField(state.grid, np.ones_like(state.n.values)), state.c, state.chi
    )
    return state.chemo * flux_drift.max_abs()


def stable_dt(state: KSState, alpha: float, u: VectorField | None = None,
              cfl_safety: float = 0.25) -> float:
    """Largest dt keeping the explicit upwind transport positivity-safe:
    ``Gamma(2-alpha) dt^alpha * max|chi grad c| <= cfl_safety * dx`` (the L1
    prefactor is the effective explicit weight of one step), intersected
    with the plain advective bound when a velocity is given."""
    g = state.grid
    h = min(g.dx, g.dy)
    drift = max_drift(state)
    pref = math.gamma(2.0 - alpha)
    dt = (cfl_safety * h / (pref * drift)) ** (1.0 / alpha) if drift > 0.0 else np.inf
    if u is not None:
        umax = u.max_abs()
        if umax > 0.0:
            dt = min(dt, (cfl_safety * h / (pref * umax)) ** (1.0 / alpha))
    return float(dt)


def _explicit_n(state: KSState, u: VectorField) -> np.ndarray:
    tendency = -state.chemo * divergence(chemotaxis_flux(state.n, state.c, state.chi)).values
    tendency -= advect(state.n, u, scheme=state.advect_scheme).values
    return tendency


def _explicit_c(state: KSState, u: VectorField) -> np.ndarray:
    return (-advect(state.c, u, scheme=state.advect_scheme).values
            - state.gamma * state.c.values + state.n.values)


def _check_velocity(u: VectorField, div_tol: float):
    div_inf = float(np.max(np.abs(divergence(u).values))) if u.max_abs() > 0 else 0.0
    if div_inf > div_tol:
        raise ValueError(f"velocity divergence {div_inf:.2e} exceeds tolerance {div_tol:.2e}")


def step_ks(state: KSState, u: VectorField, dt: float, alpha: float,
            div_tol: float = 1e-6) -> KSState:
    """One L1 step of the coupled pair; appends both histories."""
    if abs(dt - state.n_hist.dt) > 1e-15 * dt:
        raise ValueError("dt must match the history grid")
    _check_velocity(u, div_tol)
    g = state.grid
    mu = math.gamma(2.0 - alpha) * dt ** alpha

    rhs_n = _explicit_n(state, u)
    rhs_c = _explicit_c(state, u)
    if not (np.all(np.isfinite(rhs_n)) and np.all(np.isfinite(rhs_c))):
        raise BlowupDetected(f"non-finite tendency at t={state.t}")

    n_new = implicit_l1_step(
        state.n_hist, alpha, rhs_n,
        lambda r: solve_helmholtz_neumann(r, mu * state.diff_n, g),
    )
    c_new = implicit_l1_step(
        state.c_hist, alpha, rhs_c,
        lambda r: solve_helmholtz_neumann(r, mu * state.diff_c, g),
    )
    if not (np.all(np.isfinite(n_new)) and np.all(np.isfinite(c_new))):
        raise BlowupDetected(f"non-finite field after step to t={state.n_hist.t_last}")
    state.n = ScalarField(g, n_new, state.n.bc)
    state.c = ScalarField(g, c_new, state.c.bc)
    return state


def step_n_frozen_c(state: KSState, u: VectorField, dt: float, alpha: float,
                    div_tol: float = 1e-6) -> KSState:
    """Advance only the density against a frozen attractant profile (the
    static-attractant reduction used by the micro/macro comparison)."""
    if abs(dt - state.n_hist.dt) > 1e-15 * dt:
        raise ValueError("dt must match the history grid")
    _check_velocity(u, div_tol)
    g = state.grid
    mu = math.gamma(2.0 - alpha) * dt ** alpha
    n_new = implicit_l1_step(
        state.n_hist, alpha, _explicit_n(state, u),
        lambda r: solve_helmholtz_neumann(r, mu * state.diff_n, g),
    )
    if not np.all(np.isfinite(n_new)):
        raise BlowupDetected(f"non-finite density after step to t={state.n_hist.t_last}")
    state.n = ScalarField(g, n_new, state.n.bc)
    return state


def classical_reference_step(state: KSState, u: VectorField, dt: float,
                             div_tol: float = 1e-6) -> KSState:
    """Backward-Euler-in-diffusion analogue with identical spatial operators;
    exists solely as the first-order-in-time comparison target. Histories
    are not touched."""
    _check_velocity(u, div_tol)
    g = state.grid
    n_new = solve_helmholtz_neumann(
        state.n.values + dt * _explicit_n(state, u), dt * state.diff_n, g)
    c_new = solve_helmholtz_neumann(
        state.c.values + dt * _explicit_c(state, u), dt * state.diff_c, g)
    if not (np.all(np.isfinite(n_new)) and np.all(np.isfinite(c_new))):
        raise BlowupDetected("non-finite field in classical reference step")
    state.n = ScalarField(g, n_new, state.n.bc)
    state.c = ScalarField(g, c_new, state.c.bc)
    return state
