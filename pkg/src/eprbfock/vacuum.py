"""Vacuum representation: the unitary V = exp(theta W) that rotates the Fock
vacuum into the two-particle state |psi0>>, and checks that conjugating
operators by V changes no matrix element and acts only where the pair
amplitudes are nonzero.

W mixes particle-number sectors, so everything here works on the full
2^modes space and the mode count is capped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from . import eprb, fock
from .eprb import AnalyzerPair
from .errors import DomainError, PreconditionError, ResourceError
from .fock import FockOperator, FockSpace, FockVector, Mode

MAX_VACUUM_MODES = 12
SUPPORT_TOL = 1e-14
LOCALITY_TOL = 1e-10
UNITARY_TOL = 1e-10
PAIR_FAMILIES = ((1, 1), (2, 2))


@dataclass(frozen=True)
class PairAmplitude:
    """Site amplitudes of the species-1 spin-up and species-2 spin-down
    wavefunctions.  ``sites=None`` is the four-mode model with one
    amplitude (a phase) per family."""

    psi11: np.ndarray
    psi22: np.ndarray
    site_indexed: bool = True

    def __post_init__(self):
        for name in ("psi11", "psi22"):
            amp = np.atleast_1d(np.asarray(getattr(self, name), dtype=complex)).copy()
            if abs(np.linalg.norm(amp) - 1.0) > 1e-12:
                raise PreconditionError(f"{name} has norm {np.linalg.norm(amp):.15f}, expected 1")
            amp.setflags(write=False)
            object.__setattr__(self, name, amp)
        if len(self.psi11) != len(self.psi22):
            raise DomainError("pair amplitudes must cover the same sites")
        if not self.site_indexed and len(self.psi11) != 1:
            raise DomainError("the four-mode model carries a single amplitude per family")

    @classmethod
    def four_mode(cls, phase11: complex = 1.0, phase22: complex = 1.0) -> PairAmplitude:
        return cls([phase11], [phase22], site_indexed=False)

    @classmethod
    def normalized(cls, psi11, psi22) -> PairAmplitude:
        psi11 = np.asarray(psi11, dtype=complex)
        psi22 = np.asarray(psi22, dtype=complex)
        return cls(psi11 / np.linalg.norm(psi11), psi22 / np.linalg.norm(psi22))

    @property
    def sites(self) -> int | None:
        return len(self.psi11) if self.site_indexed else None

    def amplitude(self, mode: Mode) -> complex:
        """Pair amplitude of ``mode``; zero for spin families outside the pair."""
        if (mode.species, mode.spin) == (1, 1):
            return complex(self.psi11[mode.site or 0])
        if (mode.species, mode.spin) == (2, 2):
            return complex(self.psi22[mode.site or 0])
        return 0j

    def in_support(self, mode: Mode) -> bool:
        return abs(self.amplitude(mode)) > SUPPORT_TOL

    def support(self, species: int, spin: int) -> list[int]:
        if (species, spin) == (1, 1):
            return [int(x) for x in np.nonzero(np.abs(self.psi11) > SUPPORT_TOL)[0]]
        if (species, spin) == (2, 2):
            return [int(x) for x in np.nonzero(np.abs(self.psi22) > SUPPORT_TOL)[0]]
        return []


@dataclass
class VacuumRepReport:
    rotation_error: float
    invariance_error: float
    locality_violations: list[tuple[Mode, float]]
    deviations: dict[Mode, float] = field(default_factory=dict)


def vacuum_space(sites: int | None = None, families: Sequence[tuple[int, int]] | None = None) -> FockSpace:
    """Full (all particle numbers) space; the pair families are always present."""
    families = list(families) if families else [(r, i) for r in (1, 2) for i in (1, 2)]
    for fam in PAIR_FAMILIES:
        if fam not in families:
            families.append(fam)
    modes = fock.spinful_modes(sites, families)
    if len(modes) > MAX_VACUUM_MODES:
        raise ResourceError(
            f"{len(modes)} modes exceed the full-space budget of {MAX_VACUUM_MODES}")
    return FockSpace(modes)


def _check_pair(space: FockSpace, pair: PairAmplitude):
    sites = {m.site for m in space.modes}
    if pair.sites is None:
        if sites != {None}:
            raise DomainError("four-mode amplitudes used on a lattice space")
    elif sites != set(range(pair.sites)):
        raise DomainError(f"pair covers {pair.sites} sites, space has sites {sorted(sites, key=str)}")


def smeared_creation(space: FockSpace, pair: PairAmplitude, species: int) -> FockOperator:
    """sum_x psi(x) a^dagger(x) for the pair family of ``species``."""
    _check_pair(space, pair)
    spin = 1 if species == 1 else 2
    coeffs = {}
    for m in space.modes:
        if (m.species, m.spin) == (species, spin):
            amp = pair.amplitude(m)
            if amp != 0:
                coeffs[m] = amp
    total = sparse.csr_array((space.dim, space.dim), dtype=complex)
    for m, amp in coeffs.items():
        total = total + amp * fock.ladder_operator(space, m, dagger=True).matrix
    return FockOperator(space, total)


def pair_creation(space: FockSpace, pair: PairAmplitude) -> FockOperator:
    """B^dagger = b1^dagger b2^dagger, so that B^dagger |0>> = |psi0>>."""
    return smeared_creation(space, pair, 1) @ smeared_creation(space, pair, 2)


def build_W(space: FockSpace, pair: PairAmplitude) -> FockOperator:
    """W = B^dagger - B (skew-hermitian)."""
    bdag = pair_creation(space, pair)
    return bdag - bdag.adjoint()


def psi0(space: FockSpace, pair: PairAmplitude) -> FockVector:
    return pair_creation(space, pair) @ space.vacuum()


def build_V(space: FockSpace, pair: PairAmplitude, theta: float = math.pi / 2) -> FockOperator:
    """exp(theta W) = exp(-i theta (iW)) by eigendecomposition of iW."""
    generator = FockOperator(space, 1j * build_W(space, pair).matrix, hermitian=True)
    return fock.unitary(generator, theta)


def build_V_closed(space: FockSpace, pair: PairAmplitude, theta: float = math.pi / 2) -> FockOperator:
    """1 + (cos theta - 1) P + sin theta W, using W^2 = -P with P a projector."""
    w = build_W(space, pair)
    p = -(w @ w)
    ident = sparse.identity(space.dim, dtype=complex, format="csr")
    return FockOperator(space, ident + (math.cos(theta) - 1) * p.matrix + math.sin(theta) * w.matrix)


def unitarity_error(v_op: FockOperator) -> float:
    ident = sparse.identity(v_op.space.dim, dtype=complex, format="csr")
    return fock.max_abs_entry(v_op.adjoint().matrix @ v_op.matrix - ident)


def transform_operator(v_op: FockOperator, a: FockOperator) -> FockOperator:
    """V^dagger A V."""
    err = unitarity_error(v_op)
    if err > UNITARY_TOL:
        raise PreconditionError(f"transforming operator is not unitary (deviation {err:.3e})")
    out = v_op.adjoint() @ a @ v_op
    out.matrix.data[np.abs(out.matrix.data) < 1e-16] = 0
    out.matrix.eliminate_zeros()
    return FockOperator(a.space, out.matrix, a.hermitian)


def rotation_error(space: FockSpace, pair: PairAmplitude, thetas: Iterable[float]) -> float:
    """max over theta of ||V(theta)|0>> - cos theta |0>> - sin theta |psi0>>||."""
    vac, target = space.vacuum(), psi0(space, pair)
    worst = 0.0
    for th in thetas:
        got = build_V(space, pair, th) @ vac
        worst = max(worst, (got - math.cos(th) * vac - math.sin(th) * target).norm())
    return worst


def w_power_errors(space: FockSpace, pair: PairAmplitude, n_max: int = 3) -> list[tuple[float, float]]:
    """Per n: ||W^2n|0>> - (-1)^n|0>>|| and ||W^(2n+1)|0>> - (-1)^n|psi0>>||."""
    w = build_W(space, pair)
    vac, target = space.vacuum(), psi0(space, pair)
    out = []
    v = vac
    for n in range(n_max + 1):
        sign = (-1) ** n
        even_err = (v - sign * vac).norm()
        v = w @ v
        odd_err = (v - sign * target).norm()
        v = w @ v
        out.append((even_err, odd_err))
    return out


def commutator_phi_W(space: FockSpace, pair: PairAmplitude, mode: Mode) -> FockOperator:
    """[a_mode, W] from its closed form.

    Only the pair families contribute: psi11(x) b2^dagger for species 1
    spin up, -psi22(x) b1^dagger for species 2 spin down.
    """
    space.position(mode)
    amp = pair.amplitude(mode)
    if amp == 0:
        return FockOperator(space, sparse.csr_array((space.dim, space.dim), dtype=complex))
    if mode.species == 1:
        return amp * smeared_creation(space, pair, 2)
    return -amp * smeared_creation(space, pair, 1)


def commutator_phi_W_direct(space: FockSpace, pair: PairAmplitude, mode: Mode) -> FockOperator:
    """[a_mode, W] by matrix multiplication."""
    return fock.commutator(fock.ladder_operator(space, mode), build_W(space, pair))


def bch_deviations(space: FockSpace, pair: PairAmplitude, mode: Mode, max_order: int,
                   theta: float = math.pi / 2, v_op: FockOperator | None = None) -> np.ndarray:
    """Deviation of the nested-commutator partial sums from exact conjugation.

    Entry k is max|sum_{j<=k} theta^j/j! ad^j(a) - V^dagger a V| with
    ad(X) = [X, W].
    """
    if max_order < 1:
        raise DomainError("order must be at least 1")
    w = build_W(space, pair).matrix
    a = fock.ladder_operator(space, mode).matrix
    v_op = v_op or build_V(space, pair, theta)
    exact = (v_op.adjoint().matrix @ a @ v_op.matrix)
    term = a
    partial = a.copy()
    out = [fock.max_abs_entry(partial - exact)]
    for k in range(1, max_order + 1):
        term = (term @ w - w @ term) * (theta / k)
        partial = partial + term
        out.append(fock.max_abs_entry(partial - exact))
    return np.array(out)


def bch_expansion_check(space: FockSpace, pair: PairAmplitude, mode: Mode, order: int,
                        theta: float = math.pi / 2) -> float:
    return float(bch_deviations(space, pair, mode, order, theta)[order])


def locality_deviations(space: FockSpace, pair: PairAmplitude, v_op: FockOperator) -> dict[Mode, float]:
    """||V^dagger a_m V - a_m||_max for every mode."""
    out = {}
    for m in space.modes:
        a = fock.ladder_operator(space, m)
        out[m] = fock.max_abs_entry(transform_operator(v_op, a).matrix - a.matrix)
    return out


def available_xi(space: FockSpace, analyzers: AnalyzerPair) -> FockOperator:
    """The spin-correlation observable restricted to the modes in ``space``."""
    sites = sorted({m.site for m in space.modes}, key=lambda s: -1 if s is None else s)
    coeffs = {k: v for k, v in eprb.xi_coefficients(analyzers, sites, sites).items()
              if all(m in space._position for m in k)}
    return fock.build_two_body(space, coeffs, hermitian=True)


def invariance_error(space: FockSpace, pair: PairAmplitude, observables: Sequence[FockOperator],
                     v_op: FockOperator | None = None) -> float:
    """max |<<0|V^dagger O V|0>> - <<psi0|O|psi0>>| over ``observables``.

    V must be the theta = pi/2 operator for the identity to hold.
    """
    v_op = v_op or build_V(space, pair)
    vac, target = space.vacuum(), psi0(space, pair)
    worst = 0.0
    for obs in observables:
        lhs = fock.expectation(vac, transform_operator(v_op, obs))
        rhs = fock.expectation(target, obs)
        worst = max(worst, abs(lhs - rhs))
    return worst


def heisenberg(op: FockOperator, propagator: FockOperator) -> FockOperator:
    """U^dagger O U."""
    return FockOperator(op.space, propagator.adjoint().matrix @ op.matrix @ propagator.matrix,
                        op.hermitian)


def default_observables(space: FockSpace, analyzers: AnalyzerPair) -> list[FockOperator]:
    return [available_xi(space, analyzers), fock.number_operator(space)]


def locality_support_check(space: FockSpace, pair: PairAmplitude,
                           observables: Sequence[FockOperator] | None = None,
                           thetas: Sequence[float] = (0.0, math.pi / 6, math.pi / 4, math.pi / 2),
                           ) -> VacuumRepReport:
    """Rotation, invariance and support-locality checks in one report.

    A locality violation is a mode outside its pair-amplitude support whose
    ladder operator moves by more than 1e-10 under conjugation.
    """
    _check_pair(space, pair)
    v_op = build_V(space, pair)
    if observables is None:
        observables = default_observables(space, AnalyzerPair([0, 0, 1], [0, 0, 1]))
    deviations = locality_deviations(space, pair, v_op)
    violations = [(m, d) for m, d in deviations.items()
                  if not pair.in_support(m) and d > LOCALITY_TOL]
    return VacuumRepReport(
        rotation_error=rotation_error(space, pair, thetas),
        invariance_error=invariance_error(space, pair, observables, v_op),
        locality_violations=violations,
        deviations=deviations,
    )
