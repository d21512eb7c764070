"""Spectral operator calculus and the fixed-point machinery for the
integral form of the chemotaxis pair.

The generalized heat propagators are applied exactly on the cosine
eigenbasis of the discrete Neumann Laplacian: mode (j,k) is scaled by
``E_{a,1}(t^a (lambda_jk - gamma))`` or ``E_{a,a}(t^a (lambda_jk - gamma))``.
Every multiplier lies in (0, 1] for the ``E_{a,1}`` kind (the eigenvalues
are nonpositive), so the applied operator never expands the discrete L2
norm.

The fixed-point iteration solves the integral equations for (n, c) with a
frozen divergence-free velocity; the time convolution against
``(t-s)^(a-1)`` uses product-rectangle panels (kernel integrated exactly,
integrand frozen at the left endpoint). The attractant sensitivity is
unity here, matching the regime the operator bounds cover.
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
    dct2,
    divergence,
    gradient,
    idct2,
    lq_norm,
    neumann_eigenvalues,
)
from .ks_macro import ChiModel, UNIT, chemotaxis_flux
from .specfun import DEFAULT_POLICY, DomainError, beta_fn, mittag_leffler_array


class NoContraction(RuntimeError):
    """Successive iterate distances stopped decreasing."""


E_ALPHA = "E_alpha"
E_ALPHA_ALPHA = "E_alpha_alpha"


@dataclass(frozen=True)
class NeumannSpectrum:
    """Cosine diagonalization of the cell-centered Neumann Laplacian."""

    grid: Grid2D
    eigenvalues: np.ndarray

    @classmethod
    def build(cls, grid: Grid2D) -> "NeumannSpectrum":
        return cls(grid=grid, eigenvalues=neumann_eigenvalues(grid))

    def to_modes(self, values: np.ndarray) -> np.ndarray:
        return dct2(values)

    def from_modes(self, coeffs: np.ndarray) -> np.ndarray:
        return idct2(coeffs)


def ml_multipliers(spec: NeumannSpectrum, kind: str, t: float, gamma: float,
                   alpha: float, policy=DEFAULT_POLICY) -> np.ndarray:
    """Per-mode scaling factors ``E(t^a (lambda - gamma))`` of the chosen kind."""
    if kind not in (E_ALPHA, E_ALPHA_ALPHA):
        raise ValueError(f"unknown operator kind {kind!r}")
    if t < 0.0:
        raise ValueError("t must be >= 0")
    beta = 1.0 if kind == E_ALPHA else alpha
    arg = t ** alpha * (spec.eigenvalues - gamma)
    return mittag_leffler_array(alpha, beta, arg, policy)


def ml_operator_apply(spec: NeumannSpectrum, kind: str, t: float, gamma: float,
                      f: ScalarField, alpha: float, policy=DEFAULT_POLICY) -> ScalarField:
    """Apply the spectral propagator to a Neumann scalar field."""
    mult = ml_multipliers(spec, kind, t, gamma, alpha, policy)
    out = spec.from_modes(mult * spec.to_modes(f.values))
    return ScalarField(f.grid, out, f.bc)


# ---------------------------------------------------------------------------
# Fixed-point iteration for the (n, c) integral equations with frozen u
# ---------------------------------------------------------------------------

def _grad_magnitude(f: ScalarField) -> ScalarField:
    gr = gradient(f)
    gx = 0.5 * (gr.ux[:-1, :] + gr.ux[1:, :])
    gy = 0.5 * (gr.uy[:, :-1] + gr.uy[:, 1:])
    return ScalarField(f.grid, np.hypot(gx, gy), f.bc)


def _weighted_sup(deltas, t_grid, beta, rq):
    worst = 0.0
    for i in range(1, len(t_grid)):
        worst = max(worst, t_grid[i] ** beta * lq_norm(deltas[i], rq))
    return worst


@dataclass
class PicardResult:
    n_traj: list
    c_traj: list
    iterate_distances: list
    converged: bool


def duhamel_picard(n0: ScalarField, c0: ScalarField, u_fixed: VectorField,
                   alpha: float, gamma: float, t_grid, max_iters: int = 20,
                   tol: float = 1e-10, rho: float = 2.0, q: float = 5.0,
                   div_tol: float = 1e-8) -> PicardResult:
    """Iterate the solution map for (n, c) on a uniform time grid.

    Returns trajectories at the grid times and the sup-weighted distance of
    each iterate from the previous one (the metric mixes the density, the
    attractant, and its gradient, all in L^(rho q) with t^beta weights).
    Raises NoContraction when that distance fails to decrease three times
    in a row.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid[0] != 0.0 or np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("t_grid must start at 0 and increase")
    if not np.allclose(np.diff(t_grid), t_grid[1] - t_grid[0], rtol=1e-12):
        raise ValueError("t_grid must be uniform")
    if float(np.max(np.abs(divergence(u_fixed).values))) > div_tol:
        raise ValueError("u_fixed must be discretely divergence-free")

    grid = n0.grid
    spec = NeumannSpectrum.build(grid)
    nt = len(t_grid) - 1
    dt = t_grid[1] - t_grid[0]
    d = 2
    beta = alpha * d / (2.0 * rho * q)
    rq = rho * q
    chi = ChiModel(UNIT)

    # propagator tables: free part per time, convolution kernel per lag
    free_n = [ml_multipliers(spec, E_ALPHA, t, 0.0, alpha) for t in t_grid]
    free_c = [ml_multipliers(spec, E_ALPHA, t, gamma, alpha) for t in t_grid]
    conv_n = [None] + [ml_multipliers(spec, E_ALPHA_ALPHA, m * dt, 0.0, alpha)
                       for m in range(1, nt + 1)]
    conv_c = [None] + [ml_multipliers(spec, E_ALPHA_ALPHA, m * dt, gamma, alpha)
                       for m in range(1, nt + 1)]

    n0_hat = spec.to_modes(n0.values)
    c0_hat = spec.to_modes(c0.values)

    def forcing_hats(n_traj, c_traj):
        fn, fc = [], []
        for n_f, c_f in zip(n_traj, c_traj):
            chemo = divergence(chemotaxis_flux(n_f, c_f, chi)).values
            transport_n = advect(n_f, u_fixed).values
            fn.append(spec.to_modes(transport_n + chemo))
            fc.append(spec.to_modes(advect(c_f, u_fixed).values - n_f.values))
        return fn, fc

    def apply_map(n_traj, c_traj):
        fn_hat, fc_hat = forcing_hats(n_traj, c_traj)
        new_n = [n_traj[0]]
        new_c = [c_traj[0]]
        for i in range(1, nt + 1):
            acc_n = free_n[i] * n0_hat
            acc_c = free_c[i] * c0_hat
            for l in range(i):
                w = ((t_grid[i] - t_grid[l]) ** alpha
                     - (t_grid[i] - t_grid[l + 1]) ** alpha) / alpha
                acc_n -= w * conv_n[i - l] * fn_hat[l]
                acc_c -= w * conv_c[i - l] * fc_hat[l]
            new_n.append(ScalarField(grid, spec.from_modes(acc_n), n0.bc))
            new_c.append(ScalarField(grid, spec.from_modes(acc_c), c0.bc))
        return new_n, new_c

    # seed with the freely propagated data
    n_traj = [ScalarField(grid, spec.from_modes(free_n[i] * n0_hat), n0.bc)
              for i in range(nt + 1)]
    c_traj = [ScalarField(grid, spec.from_modes(free_c[i] * c0_hat), c0.bc)
              for i in range(nt + 1)]

    distances = []
    stalls = 0
    for _ in range(max_iters):
        new_n, new_c = apply_map(n_traj, c_traj)
        dn = [ScalarField(grid, a.values - b.values) for a, b in zip(new_n, n_traj)]
        dc = [ScalarField(grid, a.values - b.values) for a, b in zip(new_c, c_traj)]
        dgc = [_grad_magnitude(f) for f in dc]
        dist = (_weighted_sup(dn, t_grid, beta, rq)
                + _weighted_sup(dc, t_grid, beta, rq)
                + _weighted_sup(dgc, t_grid, beta, rq))
        n_traj, c_traj = new_n, new_c
        if distances and dist >= distances[-1]:
            stalls += 1
            if stalls >= 3:
                raise NoContraction(
                    f"iterate distances stopped decreasing: {distances[-3:] + [dist]}"
                )
        else:
            stalls = 0
        distances.append(dist)
        if dist < tol:
            return PicardResult(n_traj, c_traj, distances, True)
    return PicardResult(n_traj, c_traj, distances, False)


def contraction_ratio(iterate_distances) -> float:
    """Largest ratio of consecutive iterate distances; < 1 certifies the
    observed geometric decay."""
    ds = [d for d in iterate_distances]
    if len(ds) < 2:
        raise ValueError("need at least 2 iterate distances")
    ratios = []
    for a, b in zip(ds[:-1], ds[1:]):
        if a == 0.0:
            ratios.append(0.0 if b == 0.0 else np.inf)
        else:
            ratios.append(b / a)
    return float(max(ratios))


# ---------------------------------------------------------------------------
# Existence-window estimator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExistenceParams:
    """Inputs of the smallness inequalities bounding the local window.

    ``sup_n0 + sup_c0 + sup_u0`` stands for the three weighted supremum
    terms of the initial-data condition, supplied as numbers rather than
    recomputed from fields.
    """

    alpha: float
    d: int
    q: float
    rho: float
    r_ball: float
    c_const: float = 1.0
    grad_c0_norm: float = 0.0
    sup_n0: float = 0.0
    sup_c0: float = 0.0
    sup_u0: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must be in (0,1)")
        if int(self.d) != self.d or self.d < 2:
            raise DomainError("d must be an integer >= 2")
        if not self.q > 2 * self.d:
            raise DomainError(f"q > 2d required, got q={self.q}, d={self.d}")
        if self.rho < 2:
            raise DomainError("rho >= 2 required")
        if self.r_ball <= 0 or self.c_const <= 0:
            raise DomainError("R and C must be positive")
        if min(self.grad_c0_norm, self.sup_n0, self.sup_c0, self.sup_u0) < 0:
            raise DomainError("norms must be nonnegative")
        for name, val in (("1-beta", 1.0 - self.beta),
                          ("1-2beta", 1.0 - 2.0 * self.beta),
                          ("alpha/2 - alpha d/(2q)", self.alpha / 2.0 * (1.0 - self.d / self.q)),
                          ("1/2 - d/(2 rho q)", 0.5 - self.d / (2.0 * self.rho * self.q))):
            if val <= 0.0:
                raise DomainError(f"exponent {name} must be positive, got {val}")

    @property
    def beta(self) -> float:
        return self.alpha * self.d / (2.0 * self.rho * self.q)


def smallness_margins(params: ExistenceParams, t: float) -> np.ndarray:
    """LHS - RHS of the five window inequalities at horizon t (<= 0 is
    satisfied). Each left side grows with t, so feasibility is an interval."""
    a, d, q, rho = params.alpha, params.d, params.q, params.rho
    bet = params.beta
    r, c = params.r_ball, params.c_const
    e3 = a / 2.0 - a * d / (2.0 * q)
    e4 = 0.5 - d / (2.0 * rho * q)
    return np.array([
        t ** bet * params.grad_c0_norm - r / (8.0 * c),
        t ** (a / 2.0) * beta_fn(1.0 - bet, a / 2.0)
        + c * t ** a * beta_fn(1.0 - bet, a) + c * t - 1.0 / 8.0,
        t ** (e3 - bet) - 1.0 / (8.0 * c * beta_fn(1.0 - 2.0 * bet, e3) * r),
        t ** (e4 - bet) - 1.0 / (8.0 * c * beta_fn(1.0 - 2.0 * bet, e4) * r),
        (params.sup_n0 + params.sup_c0 + params.sup_u0) - r / 8.0,
    ])


def existence_time(params: ExistenceParams, rel_tol: float = 1e-10) -> float:
    """Largest horizon in (0, 1] satisfying all five inequalities, by
    bisection; 0 when no positive horizon works (the t-independent
    initial-data condition fails)."""
    feasible = lambda t: bool(np.all(smallness_margins(params, t) <= 0.0))
    if feasible(1.0):
        return 1.0
    # geometric bracket first: the window can be many orders of magnitude
    # below 1, where an arithmetic bisection from [0, 1] would stall
    hi, lo = 1.0, 1.0
    while True:
        lo *= 0.25
        if lo < 1e-300:
            return 0.0
        if feasible(lo):
            break
        hi = lo
    while hi - lo > rel_tol * hi:
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def binding_condition(params: ExistenceParams, t: float) -> int:
    """Index (0-based) of the inequality with the smallest slack at t."""
    return int(np.argmax(smallness_margins(params, t)))
