"""Microscale lattice Monte-Carlo: heavy-tailed waits, chemoattractant-biased
nearest-neighbor jumps, reflecting walls.

The lattice sites sit at cell centers ``(i + 1/2) dx`` of a 1D interval so
histograms line up exactly with the macroscale solver's cells. Waiting
times are exact Pareto draws ``tau * U^(-1/alpha)`` whose tail density is
``alpha tau^alpha / t^(1+alpha)``; the matching macroscale transport
coefficients for that amplitude are returned by
:func:`subdiffusion_coefficients`.

Reflecting walls bounce an outward jump attempt back onto its source site,
the lattice realization of a zero-flux wall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateProfile(ValueError):
    """Both neighbor attractivities vanish; jump direction undefined."""


IDENTITY = "identity"
EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class WaitingLaw:
    """Pareto waiting-time law with shape ``alpha`` and scale ``tau``."""

    alpha: float
    tau: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def sample_wait(law: WaitingLaw, uniform_draw):
    """Inverse-CDF Pareto sampler: ``tau * u^(-1/alpha)``, u in (0,1).

    The minimum wait is ``tau`` (u -> 1); the tail matches
    ``alpha tau^alpha / t^(1+alpha)``.
    """
    u = np.asarray(uniform_draw, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("uniform draw must lie strictly inside (0,1)")
    out = law.tau * u ** (-1.0 / law.alpha)
    return float(out) if np.isscalar(uniform_draw) else out


def subdiffusion_coefficients(law: WaitingLaw, dx: float):
    """Macroscale (diffusion, tactic) coefficient pair of the lattice walk.

    For lattice spacing dx and Pareto waits the generalized diffusivity is
    ``dx^2 / (2 Gamma(1-alpha) tau^alpha)`` -- equivalently
    ``D_a dx^2 / (2 tau_*^a)`` with ``D_a = a/Gamma(1-a)`` and ``tau_*``
    the nominal scale whose tail amplitude ``tau_*^a`` equals this
    sampler's ``a tau^a``. The tactic coefficient is twice the diffusive
    one.
    """
    d_alpha = dx * dx / (2.0 * math.gamma(1.0 - law.alpha) * law.tau ** law.alpha)
    return d_alpha, 2.0 * d_alpha


@dataclass
class SlimeProfile:
    """Static chemoattractant lattice values and the sensitivity model
    v = g(c): ``identity`` (chi = 1/c) or ``exponential`` with rate beta
    (chi = beta)."""

    c: np.ndarray
    model: str = IDENTITY
    beta: float = 1.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.c.ndim != 1 or self.c.size < 3:
            raise ValueError("profile needs a 1D lattice with >= 3 sites")
        if self.model not in (IDENTITY, EXPONENTIAL):
            raise ValueError(f"unknown sensitivity model {self.model!r}")
        if self.model == IDENTITY and np.any(self.c <= 0.0):
            raise ValueError("identity sensitivity needs strictly positive c")

    @property
    def n_sites(self) -> int:
        return self.c.size

    def attractivity(self) -> np.ndarray:
        if self.model == IDENTITY:
            return self.c.copy()
        return np.exp(self.beta * self.c)

    def right_jump_probability(self) -> np.ndarray:
        """P(jump right) per site, with mirrored ghost attractivity at the
        walls (the reflecting-boundary convention)."""
        v = self.attractivity()
        v_left = np.concatenate(([v[0]], v[:-1]))
        v_right = np.concatenate((v[1:], [v[-1]]))
        denom = v_left + v_right
        if np.any(denom == 0.0):
            raise DegenerateProfile("neighbor attractivities sum to zero")
        return v_right / denom


def jump_probs(profile: SlimeProfile, site: int):
    """(p_left, p_right) at an interior site: each neighbor's attractivity
    over their sum. The pair sums to 1 exactly: the left probability is the
    floating-point complement of the right one."""
    if not 1 <= site <= profile.n_sites - 2:
        raise ValueError("site must have both neighbors on the lattice")
    v = profile.attractivity()
    denom = v[site - 1] + v[site + 1]
    if denom == 0.0:
        raise DegenerateProfile(f"attractivity vanishes around site {site}")
    p_right = float(v[site + 1] / denom)
    return 1.0 - p_right, p_right


class ParticleEnsemble:
    """Lattice positions plus per-particle clocks.

    Particles are sharded into contiguous blocks, one counter-based
    (Philox) stream per shard, so trajectories are reproducible for a
    fixed (seed, n_shards) regardless of how shards are scheduled.
    """

    def __init__(self, positions, n_sites: int, seed: int = 0, n_shards: int = 1):
        positions = np.asarray(positions, dtype=np.int64)
        if positions.ndim != 1:
            raise ValueError("positions must be a 1D index array")
        if positions.min(initial=0) < 0 or positions.max(initial=0) >= n_sites:
            raise ValueError("positions outside the lattice")
        if n_shards < 1:
            raise ValueError("need at least one shard")
        self.n_sites = int(n_sites)
        self.positions = positions.copy()
        self.initial_positions = positions.copy()
        self.next_event_times = np.zeros(positions.size)
        self.waits_initialized = False
        self.seed = int(seed)
        self.n_shards = int(n_shards)
        self._streams = [
            np.random.Generator(np.random.Philox(key=[self.seed, shard]))
            for shard in range(self.n_shards)
        ]
        bounds = np.linspace(0, positions.size, self.n_shards + 1).astype(np.int64)
        self._shard_slices = [slice(bounds[i], bounds[i + 1]) for i in range(self.n_shards)]

    @classmethod
    def from_density(cls, weights, n_particles: int, seed: int = 0, n_shards: int = 1):
        """Multinomial placement of particles proportional to `weights`."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0.0) or w.sum() <= 0.0:
            raise ValueError("weights must be nonnegative with positive sum")
        rng = np.random.Generator(np.random.Philox(key=[int(seed), 0x9E3779B9]))
        counts = rng.multinomial(n_particles, w / w.sum())
        positions = np.repeat(np.arange(w.size), counts)
        return cls(positions, w.size, seed=seed, n_shards=n_shards)

    @property
    def n_particles(self) -> int:
        return self.positions.size

    def displacements(self) -> np.ndarray:
        return self.positions - self.initial_positions

    def msd(self, dx: float) -> float:
        d = self.displacements().astype(float) * dx
        return float(np.mean(d * d))


def evolve(ensemble: ParticleEnsemble, law: WaitingLaw, profile: SlimeProfile,
           t_end: float, boundary: str = "reflect") -> ParticleEnsemble:
    """Advance every particle's renewal process until its clock passes t_end.

    Each event is a wait (Pareto) followed by a biased unit jump. With
    ``boundary='reflect'`` (the zero-flux wall used by every consistency
    test) an attempt off the lattice bounces back onto its source site;
    with ``boundary='absorb'`` the particle freezes on the edge site it
    tried to leave and takes no further part in the dynamics (the count
    stays exact either way).

    Mutates and returns the ensemble, so successive calls with increasing
    t_end resume where the last stopped. Resuming consumes the shard
    streams in a different order than a single longer run would, so
    trajectories agree in law, not realization by realization; for a fixed
    call sequence the run is fully deterministic.
    """
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    if boundary not in ("reflect", "absorb"):
        raise ValueError(f"unknown boundary rule {boundary!r}")
    if profile.n_sites != ensemble.n_sites:
        raise ValueError("profile lattice does not match ensemble lattice")
    p_right = profile.right_jump_probability()

    if not ensemble.waits_initialized:
        for shard, sl in zip(ensemble._streams, ensemble._shard_slices):
            n = ensemble.next_event_times[sl].size
            ensemble.next_event_times[sl] = sample_wait(law, _open_uniform(shard, n))
        ensemble.waits_initialized = True

    for shard, sl in zip(ensemble._streams, ensemble._shard_slices):
        pos = ensemble.positions[sl]
        clock = ensemble.next_event_times[sl]
        while True:
            active = np.nonzero(clock <= t_end)[0]
            if active.size == 0:
                break
            draws = _open_uniform(shard, 2 * active.size).reshape(2, active.size)
            here = pos[active]
            step = np.where(draws[0] < p_right[here], 1, -1)
            moved = here + step
            out_of_lattice = (moved < 0) | (moved >= ensemble.n_sites)
            np.clip(moved, 0, ensemble.n_sites - 1, out=moved)
            pos[active] = moved
            waits = sample_wait(law, draws[1])
            if boundary == "absorb":
                waits = np.where(out_of_lattice, np.inf, waits)
            clock[active] += waits
        ensemble.positions[sl] = pos
        ensemble.next_event_times[sl] = clock
    return ensemble


def _open_uniform(rng, n):
    # uniforms strictly inside (0,1); random() can return exactly 0
    u = rng.random(n)
    while True:
        zero = u == 0.0
        if not zero.any():
            return u
        u[zero] = rng.random(int(zero.sum()))


def density_histogram(ensemble: ParticleEnsemble, dx: float):
    """Normalized site-occupancy histogram; integrates to 1 with bin width dx."""
    counts = np.bincount(ensemble.positions, minlength=ensemble.n_sites)
    return counts.astype(float) / (ensemble.n_particles * dx)


def msd_series(ensemble: ParticleEnsemble, law: WaitingLaw, profile: SlimeProfile,
               times, dx: float) -> np.ndarray:
    """MSD sampled at increasing times by resuming one ensemble."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0.0) or times[0] <= 0.0:
        raise ValueError("times must be positive and strictly increasing")
    out = np.empty_like(times)
    for i, t in enumerate(times):
        evolve(ensemble, law, profile, float(t))
        out[i] = ensemble.msd(dx)
    return out
