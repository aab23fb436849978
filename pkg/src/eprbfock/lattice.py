"""Exact finite-lattice oracle for first-order perturbation theory.

The two-particle problem lives on a 1-D periodic lattice with four modes per
site (species x spin).  The free Hamiltonian is the central-difference
kinetic term for every mode; the interaction is the entanglement generator
placed on each site with weight kappa_x / a, so that a site sum approximates
the continuum integral with field operators a_x / sqrt(a).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from . import eprb, fock
from .eprb import AnalyzerPair
from .errors import DomainError, PreconditionError, ResourceError
from .field import Wavepacket, correlation_from_L, entanglement_L_gaussian, FieldScenario, UniformInSpace
from .fock import FockOperator, FockSpace, FockVector, Mode
from .quadrature import adaptive_gauss_legendre

MAX_SITES = 16
MAX_SECTOR_DIM = 1024


@dataclass(frozen=True)
class LatticeConfig:
    sites: int
    spacing: float = 1.0
    mass: float = 1.0
    boundary: str = "periodic"
    dimension: int = 1

    def __post_init__(self):
        if self.sites < 2:
            raise DomainError("a lattice needs at least 2 sites")
        if not self.spacing > 0 or not self.mass > 0:
            raise PreconditionError("spacing and mass must be positive")
        if self.boundary != "periodic" or self.dimension != 1:
            raise DomainError("only 1-D periodic lattices are supported")

    @property
    def positions(self) -> np.ndarray:
        return self.spacing * np.arange(self.sites)

    @property
    def length(self) -> float:
        return self.spacing * self.sites


def hopping_matrix(config: LatticeConfig) -> np.ndarray:
    """Single-particle -(1/2m) d^2/dx^2 with the central difference."""
    n = config.sites
    h = 2.0 * np.eye(n)
    for x in range(n):
        h[x, (x + 1) % n] -= 1.0
        h[x, (x - 1) % n] -= 1.0
    return h / (2 * config.mass * config.spacing**2)


def momentum_spectrum(config: LatticeConfig) -> tuple[np.ndarray, np.ndarray]:
    """Plane-wave eigenbasis (columns) and energies of :func:`hopping_matrix`."""
    n = config.sites
    k = 2 * np.pi * np.arange(n) / n
    energies = (1 - np.cos(k)) / (config.mass * config.spacing**2)
    waves = np.exp(1j * np.outer(np.arange(n), k)) / np.sqrt(n)
    return waves, energies


def propagator(config: LatticeConfig, t: float) -> np.ndarray:
    """exp(-i h t) for the single-particle lattice Hamiltonian."""
    waves, energies = momentum_spectrum(config)
    return (waves * np.exp(-1j * energies * t)) @ waves.conj().T


def sample_packet(config: LatticeConfig, wp: Wavepacket) -> np.ndarray:
    """Site amplitudes of a 1-D packet, normalized to unit norm.

    Distances use the minimum image so the packet wraps smoothly.
    """
    if wp.dim != 1:
        raise DomainError("lattice packets must be one-dimensional")
    dx = config.positions - wp.center[0]
    dx = dx - config.length * np.round(dx / config.length)
    psi = np.exp(-0.5 * wp.alpha * dx**2 + 1j * wp.mass * wp.velocity[0] * dx)
    return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class LatticeScenario:
    """Lattice counterpart of a continuum scenario.

    ``kappa`` holds the per-site coupling strength; ``time_profile`` (if
    given) multiplies it at each instant.
    """

    config: LatticeConfig
    wp1: Wavepacket
    wp2: Wavepacket
    kappa: np.ndarray
    epsilon: float
    t0: float
    t: float
    analyzers: AnalyzerPair
    time_profile: Callable[[float], float] | None = None

    def __post_init__(self):
        kappa = np.broadcast_to(np.asarray(self.kappa, dtype=float), (self.config.sites,)).copy()
        kappa.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)
        if self.t < self.t0:
            raise PreconditionError("end time t must not precede t0")
        if self.epsilon < 0:
            raise PreconditionError("epsilon must be non-negative")

    def with_epsilon(self, epsilon: float) -> LatticeScenario:
        return LatticeScenario(self.config, self.wp1, self.wp2, self.kappa, epsilon,
                               self.t0, self.t, self.analyzers, self.time_profile)

    def coupling_at(self, t: float) -> np.ndarray:
        scale = 1.0 if self.time_profile is None else float(self.time_profile(t))
        return scale * self.kappa / self.config.spacing

    @cached_property
    def amplitudes(self) -> tuple[np.ndarray, np.ndarray]:
        return sample_packet(self.config, self.wp1), sample_packet(self.config, self.wp2)


class LatticeOperators(NamedTuple):
    space: FockSpace
    h0: FockOperator
    g_sites: list[FockOperator]
    xi: FockOperator


def lattice_space(config: LatticeConfig) -> FockSpace:
    """One particle of each species on the lattice."""
    if config.sites > MAX_SITES:
        raise ResourceError(f"{config.sites} sites exceed the exact-evolution budget of {MAX_SITES}")
    dim = (2 * config.sites) ** 2
    if dim > MAX_SECTOR_DIM:
        raise ResourceError(f"sector dimension {dim} exceeds budget {MAX_SECTOR_DIM}")
    return FockSpace(fock.spinful_modes(config.sites), sector={1: 1, 2: 1})


def build_operators(config: LatticeConfig, analyzers: AnalyzerPair) -> LatticeOperators:
    space = lattice_space(config)
    h = hopping_matrix(config)
    hop = {}
    for r, i in itertools.product((1, 2), repeat=2):
        for x, y in zip(*np.nonzero(h)):
            hop[(Mode(r, i, int(x)), Mode(r, i, int(y)))] = h[x, y]
    h0 = fock.build_one_body(space, hop, hermitian=True)
    g_sites = [fock.build_two_body(space, eprb.g_coefficients(x), hermitian=True)
               for x in range(config.sites)]
    sites = range(config.sites)
    xi = fock.build_two_body(space, eprb.xi_coefficients(analyzers, sites, sites), hermitian=True)
    return LatticeOperators(space, h0, g_sites, xi)


def initial_state(space: FockSpace, psi1: np.ndarray, psi2: np.ndarray) -> FockVector:
    """sum_xy psi1(x) psi2(y) phi^+_[1]1(x) phi^+_[2]2(y) |0>>."""
    out = space.zero_vector()
    for x, y in itertools.product(range(len(psi1)), range(len(psi2))):
        amp = psi1[x] * psi2[y]
        if amp != 0:
            out = out + amp * fock.occupied_state(space, Mode(1, 1, x), Mode(2, 2, y))
    return out


def interaction(ops: LatticeOperators, coupling: np.ndarray) -> FockOperator:
    total = FockOperator(ops.space, ops.h0.matrix * 0, hermitian=True)
    for c, g in zip(coupling, ops.g_sites):
        if c != 0:
            total = total + float(c) * g
    return total


def lattice_exact_correlation(sc: LatticeScenario, ops: LatticeOperators | None = None) -> float:
    """C(t) from exact evolution of the two-particle state under H0 + eps H1."""
    ops = ops or build_operators(sc.config, sc.analyzers)
    psi = initial_state(ops.space, *sc.amplitudes)
    if sc.t == sc.t0 or sc.epsilon == 0:
        final = fock.evolve(ops.h0, sc.t - sc.t0, psi)
    elif sc.time_profile is None:
        h = ops.h0 + sc.epsilon * interaction(ops, sc.coupling_at(sc.t0))
        final = fock.evolve(h, sc.t - sc.t0, psi)
    else:
        h0 = ops.h0.matrix
        g_stack = [g.matrix for g in ops.g_sites]

        def rhs(t, y):
            c = sc.epsilon * sc.coupling_at(t)
            out = h0 @ y
            for ck, gk in zip(c, g_stack):
                if ck != 0:
                    out = out + ck * (gk @ y)
            return -1j * out

        sol = solve_ivp(rhs, (sc.t0, sc.t), psi.amplitudes, method="DOP853",
                        rtol=1e-12, atol=1e-14)
        if not sol.success:
            raise RuntimeError(f"time integration failed: {sol.message}")
        final = FockVector(ops.space, sol.y[:, -1])
        final = final.normalized()
    return float(fock.expectation(final, ops.xi).real)


def lattice_L(sc: LatticeScenario, rtol: float = 1e-12) -> float:
    """2 int dt sum_x (kappa_x(t)/a) |psi1_x(t)|^2 |psi2_x(t)|^2 with exact
    lattice free propagation."""
    waves, energies = momentum_spectrum(sc.config)
    k1 = waves.conj().T @ sc.amplitudes[0]
    k2 = waves.conj().T @ sc.amplitudes[1]

    def integrand(ts):
        out = []
        for t in ts:
            phase = np.exp(-1j * energies * (t - sc.t0))
            p1 = np.abs(waves @ (phase * k1)) ** 2
            p2 = np.abs(waves @ (phase * k2)) ** 2
            out.append(2 * float(np.sum(sc.coupling_at(t) * p1 * p2)))
        return np.array(out)

    return adaptive_gauss_legendre(integrand, sc.t0, sc.t, rtol=rtol, atol=1e-16).value


def lattice_perturbative_correlation(sc: LatticeScenario) -> float:
    return correlation_from_L(sc.analyzers, sc.epsilon * lattice_L(sc))


class OrderFit(NamedTuple):
    epsilons: np.ndarray
    residuals: np.ndarray
    slope: float | None


def perturbation_residuals(sc: LatticeScenario, epsilons: Sequence[float]) -> OrderFit:
    """|C_exact - C_pert| per epsilon and the log-log slope through them.

    The slope is None with fewer than two positive epsilons or when a
    residual is exactly zero.
    """
    ops = build_operators(sc.config, sc.analyzers)
    eps = np.asarray(epsilons, dtype=float)
    L = lattice_L(sc)
    res = []
    for e in eps:
        s = sc.with_epsilon(float(e))
        exact = lattice_exact_correlation(s, ops)
        res.append(abs(exact - correlation_from_L(sc.analyzers, e * L)))
    res = np.array(res)
    keep = (eps > 0) & (res > 0)
    slope = None
    if keep.sum() >= 2:
        slope = float(np.polyfit(np.log(eps[keep]), np.log(res[keep]), 1)[0])
    return OrderFit(eps, res, slope)


def continuum_L(sc: LatticeScenario) -> float:
    """Continuum L for the same 1-D packets under a spatially uniform
    coupling (requires a uniform ``kappa``)."""
    if np.ptp(sc.kappa) != 0:
        raise DomainError("continuum comparison needs a spatially uniform coupling")
    k0 = float(sc.kappa[0])
    profile = sc.time_profile
    coupling = (UniformInSpace.constant(k0) if profile is None
                else UniformInSpace(lambda t: k0 * np.vectorize(profile)(t)))
    return entanglement_L_gaussian(FieldScenario(sc.wp1, sc.wp2, coupling, sc.epsilon,
                                                 sc.t0, sc.t, sc.analyzers))


def default_scenario(sites: int = 8) -> LatticeScenario:
    """Head-on packets on an 8-site ring with a Gaussian coupling bump."""
    config = LatticeConfig(sites)
    centre = 0.5 * (sites - 1)
    kappa = np.exp(-0.5 * (np.arange(sites) - centre) ** 2)
    n1 = np.array([np.sin(0.7), 0.0, np.cos(0.7)])
    n2 = np.array([np.sin(1.9) * np.cos(0.4), np.sin(1.9) * np.sin(0.4), np.cos(1.9)])
    return LatticeScenario(
        config,
        Wavepacket([1.0], [0.8], 0.5, 1.0),
        Wavepacket([sites - 2.0], [-0.8], 0.5, 1.0),
        kappa, epsilon=0.0, t0=0.0, t=4.0,
        analyzers=AnalyzerPair(n1, n2),
    )
