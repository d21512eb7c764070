import math

import numpy as np
import pytest

from chemoflow.fields import Grid2D, ScalarField, VectorField, divergence, gradient
from chemoflow.ns_fluid import (
    FluidState,
    PoissonNonConvergence,
    predict,
    project,
    step_fluid,
)


def grid():
    return Grid2D(32, 32, 1.0, 1.0)


def gaussian_field(g, cx, cy, width, mass):
    xc, yc = g.cell_centers()
    blob = np.exp(-((xc - cx) ** 2 + (yc - cy) ** 2) / (2.0 * width ** 2))
    blob *= mass / (np.sum(blob) * g.cell_area)
    return ScalarField(g, blob)


class TestPredict:
    def test_rest_stays_rest(self):
        g = grid()
        st = FluidState.at_rest(g)
        u_star = predict(st, ScalarField.zeros(g), 1e-3)
        assert u_star.max_abs() == 0.0

    def test_forcing_only_vertical(self):
        g = grid()
        st = FluidState.at_rest(g)  # phi = y
        n = ScalarField(g, np.ones((g.nx, g.ny)))
        dt = 1e-4
        u_star = predict(st, n, dt)
        # deep interior: wall boundary layers decay within ~sqrt(dt)
        mid = u_star.uy[g.nx // 2, g.ny // 2]
        assert mid == pytest.approx(dt, rel=1e-6)
        assert np.max(np.abs(u_star.ux)) < 1e-15

    def test_implicit_euler_mode_decay(self):
        g = grid()
        st = FluidState.at_rest(g)
        dt = 1e-3
        p_mode, q_mode = 3, 2
        lam = (2.0 - 2.0 * math.cos(p_mode * math.pi / g.nx)) / g.dx ** 2 \
            + (2.0 - 2.0 * math.cos(q_mode * math.pi / g.ny)) / g.dy ** 2
        i = np.arange(g.nx + 1)[:, None]
        j = np.arange(g.ny)[None, :]
        eps = 1e-8
        mode = np.sin(p_mode * np.pi * i / g.nx) * np.sin((j + 0.5) * q_mode * np.pi / g.ny)
        st.u.ux[:] = eps * mode
        u_star = predict(st, ScalarField.zeros(g), dt, cg_tol=1e-14)
        expected = eps * mode / (1.0 + dt * lam)
        assert np.allclose(u_star.ux, expected, atol=eps * 1e-5)


class TestProject:
    def test_divfree_passthrough(self):
        g = grid()
        xn = np.arange(g.nx + 1) * g.dx
        yn = np.arange(g.ny + 1) * g.dy
        psi = np.sin(np.pi * xn[:, None]) * np.sin(np.pi * yn[None, :])
        u = VectorField(g, (psi[:, 1:] - psi[:, :-1]) / g.dy,
                        -(psi[1:, :] - psi[:-1, :]) / g.dx)
        u2, p = project(u, 1e-2)
        assert np.max(np.abs(u2.ux - u.ux)) < 1e-9
        assert np.max(np.abs(p.values)) < 1e-7

    def test_pure_gradient_annihilated(self):
        g = grid()
        phi = ScalarField.from_function(g, lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y))
        dt = 0.05
        u_star = gradient(phi)  # boundary faces zero: compatible with walls
        u, p = project(u_star, dt, div_tol=1e-10)
        assert u.max_abs() < 1e-8
        expected = phi.values / dt
        expected -= expected.mean()
        assert np.max(np.abs(p.values - expected)) < 1e-6 * np.max(np.abs(expected))

    def test_random_field_divergence_killed(self):
        g = grid()
        rng = np.random.default_rng(21)
        u_star = VectorField(g, rng.normal(size=(g.nx + 1, g.ny)),
                             rng.normal(size=(g.nx, g.ny + 1)))
        from chemoflow.fields import apply_bc
        u_star = apply_bc(u_star)
        u, p = project(u_star, 1e-2, div_tol=1e-8)
        assert float(np.max(np.abs(divergence(u).values))) < 1e-8
        assert abs(float(p.values.mean())) < 1e-12

    def test_mean_zero_gauge(self):
        g = grid()
        rng = np.random.default_rng(2)
        from chemoflow.fields import apply_bc
        u_star = apply_bc(VectorField(g, rng.normal(size=(g.nx + 1, g.ny)),
                                      rng.normal(size=(g.nx, g.ny + 1))))
        _, p = project(u_star, 1e-2)
        assert abs(float(p.values.mean())) < 1e-12


class TestStepFluid:
    def test_zero_everything_stays_zero(self):
        g = grid()
        st = FluidState.at_rest(g, phi=ScalarField.zeros(g))
        for _ in range(3):
            st = step_fluid(st, ScalarField.zeros(g), 1e-3)
        assert st.u.max_abs() == 0.0

    def test_energy_decay_without_forcing(self):
        g = grid()
        st = FluidState.at_rest(g, phi=ScalarField.zeros(g))
        xn = np.arange(g.nx + 1) * g.dx
        yn = np.arange(g.ny + 1) * g.dy
        psi = 0.3 * np.sin(np.pi * xn[:, None]) * np.sin(np.pi * yn[None, :]) ** 2
        st.u = VectorField(g, (psi[:, 1:] - psi[:, :-1]) / g.dy,
                           -(psi[1:, :] - psi[:-1, :]) / g.dx)
        energies = [st.kinetic_energy()]
        for _ in range(20):
            st = step_fluid(st, ScalarField.zeros(g), 2e-3)
            energies.append(st.kinetic_energy())
        assert all(e1 < e0 for e0, e1 in zip(energies, energies[1:]))

    def test_constant_density_buoyancy_symmetric(self):
        g = grid()
        st = FluidState.at_rest(g)  # phi = y
        n = ScalarField(g, np.ones((g.nx, g.ny)))
        st = step_fluid(st, n, 1e-3)
        # splitting transient is O(dt) but must stay mirror-symmetric with
        # zero net horizontal momentum
        assert np.max(np.abs(st.u.ux + st.u.ux[::-1, :])) < 1e-10
        assert abs(float(np.sum(st.u.ux))) * g.cell_area < 1e-10

    def test_gaussian_buoyancy_mirror_symmetry(self):
        g = grid()
        st = FluidState.at_rest(g)
        n = gaussian_field(g, 0.5, 0.4, 0.12, 2.0)
        for _ in range(3):
            st = step_fluid(st, n, 1e-3)
        assert st.u.max_abs() > 1e-6
        # mirror symmetry about x = 1/2: ux antisymmetric, uy symmetric
        assert np.max(np.abs(st.u.ux + st.u.ux[::-1, :])) < 1e-10
        assert np.max(np.abs(st.u.uy - st.u.uy[::-1, :])) < 1e-10
        assert abs(float(np.sum(st.u.ux))) * g.cell_area < 1e-10

    def test_divergence_every_step(self):
        g = grid()
        st = FluidState.at_rest(g)
        n = gaussian_field(g, 0.45, 0.55, 0.15, 3.0)
        for _ in range(10):
            st = step_fluid(st, n, 2e-3)
            assert float(np.max(np.abs(divergence(st.u).values))) < 1e-8
