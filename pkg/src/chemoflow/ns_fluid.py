"""Incompressible flow on the MAC grid: Chorin projection with buoyancy.

One step = predict (implicit viscous diffusion, explicit upwind convection
and forcing ``n grad(Phi)``) then project (pressure Poisson with homogeneous
Neumann walls, solved by Jacobi-preconditioned conjugate gradients, followed
by the face-gradient correction). Unit viscosity and density throughout,
matching the nondimensional momentum balance.

The pressure is only defined up to a constant under Neumann walls: the
right side is mean-centered for compatibility and the solution pinned to
the mean-zero gauge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    Grid2D,
    ScalarField,
    VectorField,
    apply_bc,
    divergence,
    gradient,
)


class PoissonNonConvergence(RuntimeError):
    """The pressure solve missed its divergence target."""


class SolverFailure(RuntimeError):
    """A viscous solve failed to converge."""


@dataclass
class FluidState:
    u: VectorField
    p: ScalarField
    phi: ScalarField

    @classmethod
    def at_rest(cls, grid: Grid2D, phi: ScalarField | None = None) -> "FluidState":
        if phi is None:
            phi = ScalarField.from_function(grid, lambda x, y: y)
        return cls(u=VectorField.zeros(grid), p=ScalarField.zeros(grid), phi=phi)

    def kinetic_energy(self) -> float:
        a = self.u.grid.cell_area
        return 0.5 * a * (float(np.sum(self.u.ux ** 2)) + float(np.sum(self.u.uy ** 2)))


def _cg(apply_a, b, x0, tol_inf, max_iter, diag=None):
    """Matrix-free CG with optional Jacobi preconditioning; infinity-norm
    stopping rule on the residual. Returns (x, achieved_residual)."""
    x = x0.copy()
    r = b - apply_a(x)
    if float(np.max(np.abs(r))) <= tol_inf:
        return x, float(np.max(np.abs(r)))
    z = r / diag if diag is not None else r
    d = z.copy()
    rz = float(np.sum(r * z))
    for _ in range(max_iter):
        ad = apply_a(d)
        dad = float(np.sum(d * ad))
        if dad == 0.0:
            break
        alpha = rz / dad
        x += alpha * d
        r -= alpha * ad
        res = float(np.max(np.abs(r)))
        if res <= tol_inf:
            return x, res
        z = r / diag if diag is not None else r
        rz_new = float(np.sum(r * z))
        d = z + (rz_new / rz) * d
        rz = rz_new
    return x, float(np.max(np.abs(r)))


# ---------------------------------------------------------------------------
# staggered-component Laplacians (no-slip: Dirichlet on normal faces, odd
# mirror ghosts for the tangential direction)
# ---------------------------------------------------------------------------

def _lap_ux(ux, grid):
    dx2, dy2 = grid.dx ** 2, grid.dy ** 2
    padded = np.empty((ux.shape[0], ux.shape[1] + 2))
    padded[:, 1:-1] = ux
    padded[:, 0] = -ux[:, 0]
    padded[:, -1] = -ux[:, -1]
    lap = np.zeros_like(ux)
    lap[1:-1, :] = (ux[2:, :] - 2.0 * ux[1:-1, :] + ux[:-2, :]) / dx2 \
        + (padded[1:-1, 2:] - 2.0 * padded[1:-1, 1:-1] + padded[1:-1, :-2]) / dy2
    return lap


def _lap_uy(uy, grid):
    dx2, dy2 = grid.dx ** 2, grid.dy ** 2
    padded = np.empty((uy.shape[0] + 2, uy.shape[1]))
    padded[1:-1, :] = uy
    padded[0, :] = -uy[0, :]
    padded[-1, :] = -uy[-1, :]
    lap = np.zeros_like(uy)
    lap[:, 1:-1] = (padded[2:, 1:-1] - 2.0 * padded[1:-1, 1:-1] + padded[:-2, 1:-1]) / dx2 \
        + (uy[:, 2:] - 2.0 * uy[:, 1:-1] + uy[:, :-2]) / dy2
    return lap



def predict(state: FluidState, n: ScalarField, dt: float,
            cg_tol: float = 1e-12, cg_max_iter: int = 500) -> VectorField:
    """Momentum predictor: implicit diffusion, explicit convection and
    buoyancy ``n grad(Phi)`` sampled on faces."""
    g = state.u.grid
    u = apply_bc(state.u)
    conv_x, conv_y = _upwind_convection(u)

    grad_phi = gradient(state.phi)
    gh_n = n.ghosted()
    n_fx = 0.5 * (gh_n[:-1, 1:-1] + gh_n[1:, 1:-1])
    n_fy = 0.5 * (gh_n[1:-1, :-1] + gh_n[1:-1, 1:])
    force_x = n_fx * grad_phi.ux
    force_y = n_fy * grad_phi.uy

    rhs_x = u.ux + dt * (-conv_x + force_x)
    rhs_y = u.uy + dt * (-conv_y + force_y)
    rhs_x[0, :] = rhs_x[-1, :] = 0.0
    rhs_y[:, 0] = rhs_y[:, -1] = 0.0

    def a_ux(v):
        out = v - dt * _lap_ux(v, g)
        out[0, :] = v[0, :]
        out[-1, :] = v[-1, :]
        return out

    def a_uy(v):
        out = v - dt * _lap_uy(v, g)
        out[:, 0] = v[:, 0]
        out[:, -1] = v[:, -1]
        return out

    scale = max(float(np.max(np.abs(rhs_x))), float(np.max(np.abs(rhs_y))), 1e-30)
    ux_star, res_x = _cg(a_ux, rhs_x, np.zeros_like(rhs_x), cg_tol * scale, cg_max_iter)
    uy_star, res_y = _cg(a_uy, rhs_y, np.zeros_like(rhs_y), cg_tol * scale, cg_max_iter)
    if res_x > cg_tol * scale or res_y > cg_tol * scale:
        raise SolverFailure(
            f"viscous solve stalled (residuals {res_x:.2e}, {res_y:.2e})"
        )
    return apply_bc(VectorField(g, ux_star, uy_star))


def _upwind_convection(u: VectorField):
    g = u.grid
    ux, uy = u.ux, u.uy
    dx, dy = g.dx, g.dy
    nx, ny = g.nx, g.ny

    # --- x-momentum at interior x-faces i=1..nx-1
    conv_x = np.zeros_like(ux)
    uxi = ux[1:-1, :]
    ddx_b = (ux[1:-1, :] - ux[:-2, :]) / dx
    ddx_f = (ux[2:, :] - ux[1:-1, :]) / dx
    ddx = np.where(uxi > 0.0, ddx_b, np.where(uxi < 0.0, ddx_f, 0.5 * (ddx_b + ddx_f)))

    # uy at interior x-faces: mean of the 4 adjacent y-face values
    uy_face = 0.25 * (uy[:-1, :-1] + uy[:-1, 1:] + uy[1:, :-1] + uy[1:, 1:])  # (nx-1, ny)
    ux_pad = np.empty((nx + 1, ny + 2))
    ux_pad[:, 1:-1] = ux
    ux_pad[:, 0] = -ux[:, 0]
    ux_pad[:, -1] = -ux[:, -1]
    ddy_b = (ux_pad[1:-1, 1:-1] - ux_pad[1:-1, :-2]) / dy
    ddy_f = (ux_pad[1:-1, 2:] - ux_pad[1:-1, 1:-1]) / dy
    ddy = np.where(uy_face > 0.0, ddy_b, np.where(uy_face < 0.0, ddy_f, 0.5 * (ddy_b + ddy_f)))
    conv_x[1:-1, :] = uxi * ddx + uy_face * ddy

    # --- y-momentum at interior y-faces j=1..ny-1
    conv_y = np.zeros_like(uy)
    uyi = uy[:, 1:-1]
    ddy_b2 = (uy[:, 1:-1] - uy[:, :-2]) / dy
    ddy_f2 = (uy[:, 2:] - uy[:, 1:-1]) / dy
    ddy2 = np.where(uyi > 0.0, ddy_b2, np.where(uyi < 0.0, ddy_f2, 0.5 * (ddy_b2 + ddy_f2)))

    ux_face = 0.25 * (ux[:-1, :-1] + ux[1:, :-1] + ux[:-1, 1:] + ux[1:, 1:])  # (nx, ny-1)
    uy_pad = np.empty((nx + 2, ny + 1))
    uy_pad[1:-1, :] = uy
    uy_pad[0, :] = -uy[0, :]
    uy_pad[-1, :] = -uy[-1, :]
    ddx_b2 = (uy_pad[1:-1, 1:-1] - uy_pad[:-2, 1:-1]) / dx
    ddx_f2 = (uy_pad[2:, 1:-1] - uy_pad[1:-1, 1:-1]) / dx
    ddx2 = np.where(ux_face > 0.0, ddx_b2, np.where(ux_face < 0.0, ddx_f2, 0.5 * (ddx_b2 + ddx_f2)))
    conv_y[:, 1:-1] = uyi * ddy2 + ux_face * ddx2

    return conv_x, conv_y


def _neumann_lap(p, grid):
    gh = np.empty((grid.nx + 2, grid.ny + 2))
    gh[1:-1, 1:-1] = p
    gh[0, 1:-1] = p[0, :]
    gh[-1, 1:-1] = p[-1, :]
    gh[1:-1, 0] = p[:, 0]
    gh[1:-1, -1] = p[:, -1]
    return (gh[2:, 1:-1] - 2.0 * p + gh[:-2, 1:-1]) / grid.dx ** 2 \
        + (gh[1:-1, 2:] - 2.0 * p + gh[1:-1, :-2]) / grid.dy ** 2


def _poisson_diag(grid):
    diag = np.full((grid.nx, grid.ny), -2.0 / grid.dx ** 2 - 2.0 / grid.dy ** 2)
    diag[0, :] += 1.0 / grid.dx ** 2
    diag[-1, :] += 1.0 / grid.dx ** 2
    diag[:, 0] += 1.0 / grid.dy ** 2
    diag[:, -1] += 1.0 / grid.dy ** 2
    return diag


def project(u_star: VectorField, dt: float, div_tol: float = 1e-8,
            cg_max_iter: int = 4000):
    """Remove the gradient part of u*: solve ``lap p = div(u*)/dt`` with
    Neumann walls (right side mean-centered), correct interior faces by
    ``-dt grad p``, and return (u, p) with mean-zero p."""
    g = u_star.grid
    rhs = divergence(u_star).values / dt
    rhs = rhs - rhs.mean()

    apply_a = lambda q: _neumann_lap(q, g)
    # the post-correction divergence equals dt * (residual of this solve)
    tol = 0.5 * div_tol / dt
    p, res = _cg(apply_a, rhs, np.zeros_like(rhs), tol, cg_max_iter, diag=_poisson_diag(g))
    if res > tol:
        raise PoissonNonConvergence(
            f"pressure CG residual {res:.2e} above target {tol:.2e}"
        )
    p = p - p.mean()

    grad_p = gradient(ScalarField(g, p))
    u = VectorField(g, u_star.ux - dt * grad_p.ux, u_star.uy - dt * grad_p.uy)
    u = apply_bc(u)
    div_after = float(np.max(np.abs(divergence(u).values)))
    if div_after > div_tol:
        raise PoissonNonConvergence(
            f"post-projection divergence {div_after:.2e} above {div_tol:.2e}"
        )
    return u, ScalarField(g, p)


def step_fluid(state: FluidState, n: ScalarField, dt: float,
               div_tol: float = 1e-8, cg_tol: float = 1e-12,
               cg_max_iter: int = 4000) -> FluidState:
    """predict then project; no-slip reasserted after the correction."""
    u_star = predict(state, n, dt, cg_tol=cg_tol, cg_max_iter=cg_max_iter)
    u, p = project(u_star, dt, div_tol=div_tol, cg_max_iter=cg_max_iter)
    return FluidState(u=u, p=p, phi=state.phi)
