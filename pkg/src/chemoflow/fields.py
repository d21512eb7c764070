"""2D rectangular MAC grid: field containers, boundary conditions, and
discrete differential operators.

Array convention: ``values[ix, iy]`` with cell centers at
``((ix + 1/2) dx, (iy + 1/2) dy)``. Velocity components are face-staggered:
``ux`` on x-faces (nx+1, ny), ``uy`` on y-faces (nx, ny+1).

Scalar boundary conditions are realized through ghost padding built on
demand: Neumann0 mirrors the first interior cell (zero normal derivative at
the wall), Dirichlet0 reflects with a sign flip (zero value at the wall).
"""

from __future__ import annotations



from dataclasses import dataclass

import numpy as np

NEUMANN0 = "Neumann0"
DIRICHLET0 = "Dirichlet0"


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid needs nx, ny >= 4")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("domain lengths must be positive")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def cell_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")


@dataclass
class ScalarField:
    grid: Grid2D
    values: np.ndarray
    bc: str = NEUMANN0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"values shape {self.values.shape} != grid ({self.grid.nx}, {self.grid.ny})"
            )
        if self.bc not in (NEUMANN0, DIRICHLET0):
            raise ValueError(f"unknown scalar bc {self.bc!r}")

    @classmethod
    def zeros(cls, grid: Grid2D, bc: str = NEUMANN0) -> "ScalarField":
        return cls(grid, np.zeros((grid.nx, grid.ny)), bc)

    @classmethod
    def from_function(cls, grid: Grid2D, fn, bc: str = NEUMANN0) -> "ScalarField":
        xc, yc = grid.cell_centers()
        return cls(grid, fn(xc, yc), bc)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.bc)

    def ghosted(self) -> np.ndarray:
        """(nx+2, ny+2) array with one layer of bc-consistent ghost cells."""
        g = np.empty((self.grid.nx + 2, self.grid.ny + 2))
        g[1:-1, 1:-1] = self.values
        sign = 1.0 if self.bc == NEUMANN0 else -1.0
        g[0, 1:-1] = sign * self.values[0, :]
        g[-1, 1:-1] = sign * self.values[-1, :]
        g[1:-1, 0] = sign * self.values[:, 0]
        g[1:-1, -1] = sign * self.values[:, -1]
        # corners, unused by the 5-point stencils but kept consistent
        g[0, 0] = sign * g[1, 0]
        g[0, -1] = sign * g[1, -1]
        g[-1, 0] = sign * g[-2, 0]
        g[-1, -1] = sign * g[-2, -1]
        return g

    def integral(self) -> float:
        return float(np.sum(self.values)) * self.grid.cell_area


@dataclass
class VectorField:
    grid: Grid2D
    ux: np.ndarray
    uy: np.ndarray
    bc: str = "NoSlip"

    def __post_init__(self):
        self.ux = np.asarray(self.ux, dtype=float)
        self.uy = np.asarray(self.uy, dtype=float)
        nx, ny = self.grid.nx, self.grid.ny
        if self.ux.shape != (nx + 1, ny) or self.uy.shape != (nx, ny + 1):
            raise ValueError("staggered component shapes do not match grid")

    @classmethod
    def zeros(cls, grid: Grid2D) -> "VectorField":
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.ux.copy(), self.uy.copy(), self.bc)

    def max_abs(self) -> float:
        m = 0.0
        if self.ux.size:
            m = max(m, float(np.max(np.abs(self.ux))))
        if self.uy.size:
            m = max(m, float(np.max(np.abs(self.uy))))
        return m


def apply_bc(f):
    """Return a field with its boundary condition enforced.

    Scalars carry implicit ghosts (see ``ScalarField.ghosted``), so they
    pass through unchanged; no-slip vectors get their boundary-face normal
    components zeroed.
    """
    if isinstance(f, ScalarField):
        return f
    out = f.copy()
    out.ux[0, :] = 0.0
    out.ux[-1, :] = 0.0
    out.uy[:, 0] = 0.0
    out.uy[:, -1] = 0.0
    return out


def divergence(u: VectorField) -> ScalarField:
    g = u.grid
    div = (u.ux[1:, :] - u.ux[:-1, :]) / g.dx + (u.uy[:, 1:] - u.uy[:, :-1]) / g.dy
    return ScalarField(g, div, NEUMANN0)


def gradient(p: ScalarField) -> VectorField:
    """Face-centered central differences; boundary faces get zero so the
    result respects no-normal-flux walls."""
    g = p.grid
    gx = np.zeros((g.nx + 1, g.ny))
    gy = np.zeros((g.nx, g.ny + 1))
    gx[1:-1, :] = (p.values[1:, :] - p.values[:-1, :]) / g.dx
    gy[:, 1:-1] = (p.values[:, 1:] - p.values[:, :-1]) / g.dy
    return VectorField(g, gx, gy)


def laplacian(p: ScalarField) -> ScalarField:
    g = p.grid
    gh = p.ghosted()
    lap = (gh[2:, 1:-1] - 2.0 * gh[1:-1, 1:-1] + gh[:-2, 1:-1]) / g.dx ** 2 \
        + (gh[1:-1, 2:] - 2.0 * gh[1:-1, 1:-1] + gh[1:-1, :-2]) / g.dy ** 2
    return ScalarField(g, lap, p.bc)


def advect(f: ScalarField, u: VectorField, scheme: str = "upwind") -> ScalarField:
    """Conservative flux form of ``div(u f)``; equals ``(u . grad) f`` for
    discretely divergence-free u. First-order upwind face values by default
    (positivity-robust); ``scheme='central'`` averages instead and may
    oscillate.
    """
    g = f.grid
    gh = f.ghosted()
    # face values of f along x: shape (nx+1, ny)
    f_w = gh[:-1, 1:-1]   # cell left of each x-face (ghost at wall)
    f_e = gh[1:, 1:-1]    # cell right of each x-face
    f_s = gh[1:-1, :-1]   # below each y-face
    f_n = gh[1:-1, 1:]    # above each y-face
    if scheme == "upwind":
        fx = np.where(u.ux > 0.0, f_w, np.where(u.ux < 0.0, f_e, 0.5 * (f_w + f_e)))
        fy = np.where(u.uy > 0.0, f_s, np.where(u.uy < 0.0, f_n, 0.5 * (f_s + f_n)))
    elif scheme == "central":
        fx = 0.5 * (f_w + f_e)
        fy = 0.5 * (f_s + f_n)
    else:
        raise ValueError(f"unknown advection scheme {scheme!r}")
    with np.errstate(invalid="ignore"):
        flux_x = u.ux * fx
        flux_y = u.uy * fy
    out = (flux_x[1:, :] - flux_x[:-1, :]) / g.dx + (flux_y[:, 1:] - flux_y[:, :-1]) / g.dy
    return ScalarField(g, out, f.bc)


def lq_norm(f: ScalarField, q: float) -> float:
    """Discrete L^q norm ``(sum |v|^q dx dy)^(1/q)``; q = inf gives max|v|."""
    if q == np.inf:
        return float(np.max(np.abs(f.values)))
    if q < 1.0:
        raise ValueError("q must be >= 1")
    return float(np.sum(np.abs(f.values) ** q) * f.grid.cell_area) ** (1.0 / q)


# ---------------------------------------------------------------------------
# Spectral helpers for the cell-centered Neumann Laplacian
# ---------------------------------------------------------------------------

def neumann_eigenvalues(grid: Grid2D) -> np.ndarray:
    """Eigenvalues of the 5-point mirror-ghost Laplacian in the DCT-II basis:
    lambda_jk = -[(2/dx^2)(1 - cos(j pi/nx)) + (2/dy^2)(1 - cos(k pi/ny))].
    """
    j = np.arange(grid.nx)
    k = np.arange(grid.ny)
    lx = -(2.0 / grid.dx ** 2) * (1.0 - np.cos(j * np.pi / grid.nx))
    ly = -(2.0 / grid.dy ** 2) * (1.0 - np.cos(k * np.pi / grid.ny))
    return lx[:, None] + ly[None, :]


def dct2(values: np.ndarray) -> np.ndarray:
    from scipy.fft import dctn
    return dctn(values, type=2, norm="ortho")


def idct2(coeffs: np.ndarray) -> np.ndarray:
    from scipy.fft import idctn
    return idctn(coeffs, type=2, norm="ortho")


def solve_helmholtz_neumann(rhs: np.ndarray, coeff: float, grid: Grid2D) -> np.ndarray:
    """Solve ``(I - coeff * Lap) y = rhs`` with the Neumann 5-point Laplacian
    via the cosine transform. Exact up to round-off; preserves the discrete
    mean (mode 0 passes through with multiplier 1).
    """
    lam = neumann_eigenvalues(grid)
    return idct2(dct2(rhs) / (1.0 - coeff * lam))


# ---------------------------------------------------------------------------
# Snapshot and checkpoint IO
# ---------------------------------------------------------------------------

def write_snapshot(path, f: ScalarField, name: str, t: float) -> None:
    """One CSV per field per output time; 2-line header (grid metadata, time),
    then the cell values row-major (one line per x-index)."""
    g = f.grid
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# field={name} kind=scalar nx={g.nx} ny={g.ny} lx={g.lx!r} ly={g.ly!r} bc={f.bc}\n")
        fh.write(f"# t={float(t)!r}\n")
        for row in f.values:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_snapshot(path):
    """Inverse of write_snapshot: returns (ScalarField, name, t)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        time_line = fh.readline()
        if not header.startswith("# field=") or not time_line.startswith("# t="):
            raise ValueError(f"{path}: malformed snapshot header")
        meta = dict(item.split("=", 1) for item in header[2:].split())
        t = float(time_line[4:])
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    grid = Grid2D(int(meta["nx"]), int(meta["ny"]), float(meta["lx"]), float(meta["ly"]))
    return ScalarField(grid, values, meta.get("bc", NEUMANN0)), meta["field"], t
