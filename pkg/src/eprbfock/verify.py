"""Invariant suites behind ``eprbfock verify``.

Each check measures a deviation and compares it with a tolerance; a suite
passes when every check does.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse

from . import eprb, fock, lattice, scenarios, vacuum
from .eprb import AnalyzerPair, CorrelationSample
from .field import (
    Wavepacket, entanglement_L_gaussian, entanglement_L_point,
    entanglement_L_quadrature, greens_function, propagate_gaussian, bracket_direct,
    steepest_descent_L, uniform_integrand,
)
from .fock import FockOperator, FockSpace, Mode
from .quadrature import composite_gauss_legendre_rule

SUITES = ("algebra", "eprb", "field", "vacuum-rep")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_vector(space: FockSpace, rng) -> fock.FockVector:
    amps = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return fock.FockVector(space, amps / np.linalg.norm(amps))


def random_number_conserving_two_body(space: FockSpace, rng, terms: int = 40) -> FockOperator:
    """Hermitian two-body operator with random coefficients."""
    n = space.n_modes
    coeffs = {}
    for _ in range(terms):
        pp, qq, p, q = (int(k) for k in rng.integers(0, n, size=4))
        val = complex(rng.normal(), rng.normal())
        modes = space.modes
        key = (modes[pp], modes[qq], modes[p], modes[q])
        coeffs[key] = coeffs.get(key, 0) + val
    op = fock.build_two_body(space, coeffs)
    return FockOperator(space, 0.5 * (op.matrix + op.matrix.conj().T), hermitian=True)


# -- algebra -------------------------------------------------------------------

def algebra_checks(seed: int = 0) -> list[Check]:
    out = []
    rng = _rng(seed)
    for sites in (1, 2, 3):
        space = FockSpace(fock.spinful_modes(sites))
        errs = fock.anticommutator_errors(space)
        for rel, err in errs.items():
            out.append(Check("algebra", f"anticommutator {rel} on {space.n_modes} modes", err, 1e-12))

    space = FockSpace(fock.spinful_modes(2))
    worst = 0.0
    for m in space.modes:
        cre = fock.ladder_operator(space, m, dagger=True).matrix
        worst = max(worst, fock.max_abs_entry(cre @ cre))
    out.append(Check("algebra", "double creation vanishes", worst, 0.0))

    round_trip = max(abs(space.index(space.state(k)) - k) for k in range(space.dim))
    out.append(Check("algebra", "basis index round trip", float(round_trip), 0.0))

    u, v = random_vector(space, rng), random_vector(space, rng)
    worst = 0.0
    for m in space.modes:
        lhs = u.inner(fock.apply_annihilation(m, v))
        rhs = fock.apply_creation(m, u).inner(v)
        worst = max(worst, abs(lhs - rhs))
    out.append(Check("algebra", "annihilation is adjoint of creation", worst, 1e-12))

    h = random_number_conserving_two_body(space, rng)
    n_op = fock.number_operator(space)
    out.append(Check("algebra", "two-body operator commutes with N",
                     fock.max_abs_entry(fock.commutator(h, n_op)), 1e-12))

    u2, v2 = fock.evolve(h, 0.7, u), fock.evolve(h, 0.7, v)
    out.append(Check("algebra", "evolution preserves norm", abs(u2.norm() - 1.0), 1e-12))
    out.append(Check("algebra", "evolution preserves inner products",
                     abs(u2.inner(v2) - u.inner(v)), 1e-11))

    g = eprb.build_G()
    a = eprb.fock_state(1, 1, 2, 2)
    out.append(Check("algebra", "G|[1]1[2]2>> = -i|[1]2[2]1>>",
                     (g @ a - (-1j) * eprb.fock_state(1, 2, 2, 1)).norm(), 1e-12))
    out.append(Check("algebra", "G annihilates |[1]1[2]1>>", (g @ eprb.fock_state(1, 1, 2, 1)).norm(), 1e-12))
    singlet = (eprb.fock_state(1, 1, 2, 2) - eprb.fock_state(1, 2, 2, 1)) * (1 / math.sqrt(2))
    triplet0 = (eprb.fock_state(1, 1, 2, 2) + eprb.fock_state(1, 2, 2, 1)) * (1 / math.sqrt(2))
    out.append(Check("algebra", "U_F(pi/4)|[1]1[2]2>> = |0,0>>",
                     (fock.evolve(g, math.pi / 4, a) - singlet).norm(), 1e-12))
    out.append(Check("algebra", "U_F(pi/4)|[1]2[2]1>> = |1,0>>",
                     (fock.evolve(g, math.pi / 4, eprb.fock_state(1, 2, 2, 1)) - triplet0).norm(), 1e-12))
    return out


# -- eprb ----------------------------------------------------------------------

def eprb_checks(seed: int = 0) -> list[Check]:
    out = []
    rng = _rng(seed)
    gammas = np.linspace(0, math.pi / 2, 20)
    pairs = eprb.random_analyzers(rng, 50)

    unit_err = 0.0
    for gm in gammas:
        u = eprb.build_uE(gm)
        unit_err = max(unit_err, np.abs(u.conj().T @ u - np.eye(16)).max())
    out.append(Check("eprb", "u_E unitary", unit_err, 1e-12))

    closed_err = fock_err = 0.0
    for gm, pair in itertools.product(gammas, pairs):
        c1 = eprb.correlation_1q(gm, pair)
        closed_err = max(closed_err, abs(c1 - eprb.correlation_closed_form(gm, pair)))
        fock_err = max(fock_err, abs(eprb.correlation_fock(gm, pair) - c1))
    out.append(Check("eprb", "C_1Q matches closed form (20 gammas x 50 analyzers)", closed_err, 1e-12))
    out.append(Check("eprb", "C_F matches C_1Q (20 gammas x 50 analyzers)", fock_err, 1e-12))

    singlet_err = max(abs(eprb.correlation_1q(math.pi / 4, p) + p.dot) for p in pairs)
    out.append(Check("eprb", "singlet correlation equals -n1.n2", singlet_err, 1e-12))

    values = [eprb.correlation_1q(math.pi / 4, p) for p in isotropy_pairs(0.37, 12, rng)]
    out.append(Check("eprb", "singlet isotropy at fixed n1.n2", float(np.ptp(values)), 1e-12))

    out.append(Check("eprb", "|J,Jz>> eigenvalues", angular_momentum_error(), 1e-12))

    est_err = 0.0
    grid = eprb.sphere_grid(24)
    design = [AnalyzerPair(grid[i], grid[(7 * i + 5) % len(grid)]) for i in range(len(grid))]
    for gm in np.linspace(0, math.pi / 4, 9):
        samples = [CorrelationSample(p, eprb.correlation_closed_form(gm, p)) for p in design]
        est_err = max(est_err, abs(eprb.fit_two_gamma(samples).estimate - math.sin(2 * gm)))
    out.append(Check("eprb", "estimator recovers sin(2 gamma)", est_err, 1e-10))
    return out


def isotropy_pairs(dot: float, count: int, rng) -> list[AnalyzerPair]:
    """Random analyzer pairs sharing n1.n2 = dot."""
    out = []
    for _ in range(count):
        n1 = eprb.unit(rng.normal(size=3))
        perp = eprb.unit(np.cross(n1, rng.normal(size=3)))
        n2 = dot * n1 + math.sqrt(1 - dot * dot) * perp
        out.append(AnalyzerPair(n1, eprb.unit(n2)))
    return out


def angular_momentum_error() -> float:
    jops = eprb.build_J()
    jz = jops["z"]
    j2 = jops["x"] @ jops["x"] + jops["y"] @ jops["y"] + jz @ jz
    states = {
        (1, 1): eprb.fock_state(1, 1, 2, 1),
        (1, -1): eprb.fock_state(1, 2, 2, 2),
        (1, 0): (eprb.fock_state(1, 1, 2, 2) + eprb.fock_state(1, 2, 2, 1)) * (1 / math.sqrt(2)),
        (0, 0): (eprb.fock_state(1, 1, 2, 2) - eprb.fock_state(1, 2, 2, 1)) * (1 / math.sqrt(2)),
    }
    worst = 0.0
    for (j, m), v in states.items():
        worst = max(worst, (j2 @ v - j * (j + 1) * v).norm(), (jz @ v - m * v).norm())
    return worst


# -- field ---------------------------------------------------------------------

def norm_by_quadrature(wp: Wavepacket, tau: float) -> float:
    """Total probability of the propagated packet.  The packet factorizes
    over Cartesian axes, so the volume integral is a product of 1-D ones."""
    total = 1.0
    width = math.sqrt((1 + (wp.alpha * tau / wp.mass) ** 2) / wp.alpha)
    for k in range(wp.dim):
        axis_wp = Wavepacket([wp.center[k]], [wp.velocity[k]], wp.alpha, wp.mass)
        c = wp.center[k] + wp.velocity[k] * tau
        xs, ws = composite_gauss_legendre_rule(c - 12 * width, c + 12 * width, 48)
        total *= float(ws @ np.abs(propagate_gaussian(axis_wp, xs[:, None], tau)) ** 2)
    return total


def l_pii_direct(sc, t: float) -> float:
    """The uniform-coupling integrand written out for three dimensions."""
    tau = t - sc.t0
    a = sc.wp1.alpha / (1 + (sc.wp1.alpha * tau / sc.wp1.mass) ** 2)
    sep = (sc.wp1.center + sc.wp1.velocity * tau) - (sc.wp2.center + sc.wp2.velocity * tau)
    return float(sc.coupling.kappa(np.asarray(t)) / math.sqrt(2) * (a / math.pi) ** 1.5
                 * math.exp(-0.5 * a * float(sep @ sep)))


def lattice_refinement(spacings=(1.0, 0.5, 0.25)) -> tuple[list[float], float]:
    """Lattice L at decreasing spacing on fixed 1-D packets, and the continuum L."""
    values = []
    cont = None
    for a in spacings:
        config = lattice.LatticeConfig(int(round(24 / a)), a, 1.0)
        sc = lattice.LatticeScenario(
            config, Wavepacket([8.0], [1.0], 0.5, 1.0), Wavepacket([16.0], [-1.0], 0.5, 1.0),
            np.ones(config.sites), 0.0, 0.0, 8.0, scenarios.ANALYZERS)
        values.append(lattice.lattice_L(sc))
        cont = lattice.continuum_L(sc)
    return values, cont


STATED_ORDER = 2.0
MEASURED_ORDER = 3.0
ORDER_EPSILONS = (1e-1, 3e-2, 1e-2, 3e-3)


def field_checks(seed: int = 0) -> list[Check]:
    out = []
    rng = _rng(seed)
    dxs = rng.normal(size=(5, 3))
    sym = max(abs(greens_function(-d, 0.7, 1.3) - greens_function(d, 0.7, 1.3)) for d in dxs)
    rev = max(abs(greens_function(d, -0.7, 1.3) - np.conj(greens_function(d, 0.7, 1.3))) for d in dxs)
    out.append(Check("field", "Green's function symmetric in dx", float(sym), 1e-14))
    out.append(Check("field", "Green's function time reversal", float(rev), 1e-14))

    wp = Wavepacket([0.3, -0.2, 0.1], [1.0, 0.5, -0.3], 2.0, 1.5)
    bracket = max(abs(propagate_gaussian(wp, x, tau) - bracket_direct(wp, x, tau))
                  for tau in (0.1, 0.7, 2.0) for x in rng.normal(size=(2, 3)))
    out.append(Check("field", "bracket quadrature matches propagated packet", float(bracket), 1e-6))
    norm_err = max(abs(norm_by_quadrature(wp, tau) - 1.0) for tau in (0.0, 0.5, 2.0, 5.0))
    out.append(Check("field", "free propagation conserves probability", norm_err, 1e-6))

    positivity = 0.0
    for name, sc in scenarios.path_agreement_set().items():
        g, q = entanglement_L_gaussian(sc), entanglement_L_quadrature(sc)
        out.append(Check("field", f"L paths agree ({name})", abs(g - q) / abs(g), 1e-4))
        positivity = max(positivity, -min(g, q, 0.0))
    out.append(Check("field", "L non-negative for non-negative coupling", positivity, 0.0))

    sc = scenarios.time_varying()
    ts = np.linspace(sc.t0, sc.t, 7)
    red = max(abs(float(uniform_integrand(sc, t)) - l_pii_direct(sc, t)) for t in ts)
    out.append(Check("field", "uniform coupling reduces to the 1/sqrt(2) form", red, 1e-10))

    shift = np.array([1.3, -0.7, 2.1])
    for name, sc in (("uniform", scenarios.miss_distance()), ("grid", scenarios.narrow_grid())):
        base = entanglement_L_gaussian(sc)
        moved = entanglement_L_gaussian(sc.translated(shift))
        out.append(Check("field", f"translation covariance ({name})", abs(base - moved), 1e-10))

    pi = scenarios.point_impulse()
    imp = pi.coupling
    a_t = pi.wp1.width_param(imp.time - pi.t0)
    coincident = pi.__class__(
        Wavepacket(imp.location - pi.wp1.velocity * (imp.time - pi.t0), pi.wp1.velocity, pi.wp1.alpha, pi.wp1.mass),
        Wavepacket(imp.location - pi.wp2.velocity * (imp.time - pi.t0), pi.wp2.velocity, pi.wp2.alpha, pi.wp2.mass),
        imp, pi.epsilon, pi.t0, pi.t, pi.analyzers)
    l0 = entanglement_L_point(coincident)
    out.append(Check("field", "point impulse at coincident centers",
                     abs(l0 - 2 * imp.strength * (a_t / math.pi) ** 3), 1e-12))

    for name, sc in scenarios.steepest_descent_set().items():
        sd = steepest_descent_L(sc)
        ref = entanglement_L_gaussian(sc)
        ok_ratios = max(sd.validity["kappa_rate_ratio"], sd.validity["kappa_curvature_ratio"])
        out.append(Check("field", f"steepest descent validity ratios ({name})", ok_ratios, 0.05))
        out.append(Check("field", f"steepest descent within 5% ({name})", abs(sd.L / ref - 1), 0.05))

    config = lattice.LatticeConfig(8)
    prop = lattice.propagator
    group = np.abs(prop(config, 0.4) @ prop(config, 1.1) - prop(config, 1.5)).max()
    out.append(Check("field", "lattice propagator group property", float(group), 1e-12))

    base = lattice.default_scenario()
    ops = lattice.build_operators(base.config, base.analyzers)
    out.append(Check("field", "lattice observable hermitian", ops.xi.hermiticity_error(), 1e-12))
    free = lattice.lattice_exact_correlation(base.with_epsilon(0.0), ops)
    out.append(Check("field", "lattice eps = 0 gives -n1z n2z", abs(free + base.analyzers.zz), 1e-12))
    small = base.with_epsilon(1e-3)
    diff = abs(lattice.lattice_exact_correlation(small, ops) - lattice.lattice_perturbative_correlation(small))
    out.append(Check("field", "lattice exact vs first order at eps = 1e-3", diff, 1e-5))

    fit = lattice.perturbation_residuals(base, ORDER_EPSILONS)
    slope = fit.slope if fit.slope is not None else math.nan
    out.append(Check("field", "perturbation residual slope 2.0 +/- 0.1", abs(slope - STATED_ORDER), 0.1))
    out.append(Check("field", "perturbation residual slope 3.0 +/- 0.1 (odd in eps)",
                     abs(slope - MEASURED_ORDER), 0.1))

    values, cont = lattice_refinement()
    gaps = [abs(v - cont) for v in values]
    worst_step = max(gaps[k + 1] - gaps[k] for k in range(len(gaps) - 1))
    out.append(Check("field", "lattice L approaches continuum under refinement", max(worst_step, 0.0), 0.0))
    return out


# -- vacuum representation -----------------------------------------------------

THETAS = (0.0, math.pi / 6, math.pi / 4, math.pi / 2)


def vacuum_models() -> dict[str, tuple[FockSpace, vacuum.PairAmplitude]]:
    return {
        "four-mode": (vacuum.vacuum_space(), vacuum.PairAmplitude.four_mode(1.0, np.exp(0.4j))),
        "two-site": (vacuum.vacuum_space(2),
                     vacuum.PairAmplitude.normalized([0.8, 0.6j], [0.3 - 0.1j, 0.9])),
        "four-site": (vacuum.vacuum_space(4, [(1, 1), (1, 2), (2, 2)]),
                      vacuum.PairAmplitude.normalized([0.6, 0.8j, 0, 0], [0.5, -0.3 + 0.2j, 0, 0])),
    }


def two_site_hamiltonian(space: FockSpace, epsilon: float = 0.3) -> FockOperator:
    """Hopping for every family plus the on-site entanglement generator."""
    hop = {}
    for r, i in itertools.product((1, 2), repeat=2):
        hop[(Mode(r, i, 0), Mode(r, i, 1))] = -0.5
        hop[(Mode(r, i, 1), Mode(r, i, 0))] = -0.5
    h = fock.build_one_body(space, hop, hermitian=True)
    for x in (0, 1):
        h = h + epsilon * fock.build_two_body(space, eprb.g_coefficients(x), hermitian=True)
    return h


def time_invariance_error(space: FockSpace, pair: vacuum.PairAmplitude, times=(0.0, 0.7, 1.9, 3.2)) -> float:
    """Matrix-element invariance of Heisenberg-picture observables at several times."""
    h = two_site_hamiltonian(space)
    v_op = vacuum.build_V(space, pair)
    observables = vacuum.default_observables(space, scenarios.ANALYZERS)
    worst = 0.0
    for t in times:
        u = fock.unitary(h, t)
        worst = max(worst, vacuum.invariance_error(
            space, pair, [vacuum.heisenberg(o, u) for o in observables], v_op))
    return worst


def transformed_algebra_error(space: FockSpace, pair: vacuum.PairAmplitude) -> float:
    v_op = vacuum.build_V(space, pair)
    ann = [vacuum.transform_operator(v_op, fock.ladder_operator(space, m)).matrix for m in space.modes]
    cre = [a.conj().T for a in ann]
    ident = sparse.identity(space.dim, dtype=complex, format="csr")
    worst = 0.0
    for i, j in itertools.product(range(len(ann)), repeat=2):
        aa = ann[i] @ ann[j] + ann[j] @ ann[i]
        ac = ann[i] @ cre[j] + cre[j] @ ann[i] - (ident if i == j else 0)
        worst = max(worst, fock.max_abs_entry(aa), fock.max_abs_entry(ac))
    return worst


def vacuum_checks(seed: int = 0) -> list[Check]:
    out = []
    for name, (space, pair) in vacuum_models().items():
        w = vacuum.build_W(space, pair)
        out.append(Check("vacuum-rep", f"W skew-hermitian ({name})",
                         fock.max_abs_entry(w.matrix + w.matrix.conj().T), 1e-12))
        unit = max(vacuum.unitarity_error(vacuum.build_V(space, pair, th)) for th in THETAS)
        out.append(Check("vacuum-rep", f"V unitary ({name})", unit, 1e-12))
        closed = max(fock.max_abs_entry(vacuum.build_V(space, pair, th).matrix
                                        - vacuum.build_V_closed(space, pair, th).matrix)
                     for th in THETAS)
        out.append(Check("vacuum-rep", f"V matches 1 - P + cos P + sin W ({name})", closed, 1e-12))
        powers = vacuum.w_power_errors(space, pair, 3)
        out.append(Check("vacuum-rep", f"W power identities n <= 3 ({name})",
                         max(max(p) for p in powers), 1e-10))
        report = vacuum.locality_support_check(space, pair, thetas=THETAS)
        out.append(Check("vacuum-rep", f"vacuum rotation ({name})", report.rotation_error, 1e-12))
        out.append(Check("vacuum-rep", f"matrix-element invariance ({name})", report.invariance_error, 1e-10))
        outside = [d for m, d in report.deviations.items() if not pair.in_support(m)]
        out.append(Check("vacuum-rep", f"support locality ({name})", max(outside, default=0.0), 1e-10))
        comm = max(fock.max_abs_entry(vacuum.commutator_phi_W(space, pair, m).matrix
                                      - vacuum.commutator_phi_W_direct(space, pair, m).matrix)
                   for m in space.modes)
        out.append(Check("vacuum-rep", f"[phi, W] closed form ({name})", comm, 1e-12))
        inside = [m for m in space.modes if pair.in_support(m)]
        bch = max(vacuum.bch_expansion_check(space, pair, m, 20) for m in inside[:2])
        out.append(Check("vacuum-rep", f"BCH series at order 20 ({name})", bch, 1e-9))
    space, pair = vacuum_models()["four-mode"]
    out.append(Check("vacuum-rep", "transformed ladder operators keep the algebra",
                     transformed_algebra_error(space, pair), 1e-12))
    space, pair = vacuum_models()["two-site"]
    out.append(Check("vacuum-rep", "invariance of Heisenberg observables at 4 times",
                     time_invariance_error(space, pair), 1e-10))
    return out


SUITE_FUNCTIONS: dict[str, Callable[[int], list[Check]]] = {
    "algebra": algebra_checks,
    "eprb": eprb_checks,
    "field": field_checks,
    "vacuum-rep": vacuum_checks,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name == "all":
        return [c for suite in SUITES for c in SUITE_FUNCTIONS[suite](seed)]
    if name not in SUITE_FUNCTIONS:
        raise KeyError(name)
    return SUITE_FUNCTIONS[name](seed)
