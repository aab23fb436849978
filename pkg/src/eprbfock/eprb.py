"""Two-particle EPRB model with species and spin, in first quantization and
in the equivalent four-mode Fock space.

First-quantized operators are 16 x 16 matrices over the product basis
``|r, i; s, j>`` (particle 1: species r, spin i; particle 2: species s,
spin j) with flat index ``4 * p(r, i) + p(s, j)`` and single-particle index
``p(r, i) = 2 * (r - 1) + (i - 1)``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import fock
from .errors import EstimationError, PreconditionError
from .fock import FockOperator, FockSpace, FockVector, Mode

ALPHA = {1: 1, 2: -1}
COMPLEMENT = {1: 2, 2: 1}
UNIT_TOL = 1e-12
AGREEMENT_TOL = 1e-12


def pauli_apply(axis: str, spin_index: int) -> tuple[complex, int]:
    """Image of |alpha_i> under a Pauli matrix, as (coefficient, index)."""
    alpha = ALPHA[spin_index]
    if axis == "x":
        return 1.0 + 0j, COMPLEMENT[spin_index]
    if axis == "y":
        return 1j * alpha, COMPLEMENT[spin_index]
    if axis == "z":
        return complex(alpha), spin_index
    raise ValueError(f"unknown axis {axis!r}")


def pauli_matrix(axis: str) -> np.ndarray:
    out = np.zeros((2, 2), dtype=complex)
    for i in (1, 2):
        coeff, j = pauli_apply(axis, i)
        out[j - 1, i - 1] = coeff
    return out


PAULI = {axis: pauli_matrix(axis) for axis in "xyz"}
SPECIES_PROJECTOR = {r: np.diag([1.0 if s == r else 0.0 for s in (1, 2)]) for r in (1, 2)}


def sp_index(r: int, i: int) -> int:
    return 2 * (r - 1) + (i - 1)


def product_state(r: int, i: int, s: int, j: int) -> np.ndarray:
    v = np.zeros(16, dtype=complex)
    v[4 * sp_index(r, i) + sp_index(s, j)] = 1.0
    return v


def physical_state(r: int, i: int, s: int, j: int) -> np.ndarray:
    """Antisymmetrized |[r], i, [s], j>; vanishes when (r, i) == (s, j)."""
    return (product_state(r, i, s, j) - product_state(s, j, r, i)) / np.sqrt(2)


def angular_momentum_states(ket=physical_state) -> dict[tuple[int, int], np.ndarray]:
    """Total-spin eigenstates |J, J_z> built from ``ket(r, i, s, j)``."""
    a, b = ket(1, 1, 2, 2), ket(1, 2, 2, 1)
    half = 1 / math.sqrt(2)
    return {
        (1, 1): ket(1, 1, 2, 1),
        (1, 0): (a + b) * half,
        (0, 0): (a - b) * half,
        (1, -1): ket(1, 2, 2, 2),
    }


@dataclass(frozen=True)
class AnalyzerPair:
    n1: np.ndarray
    n2: np.ndarray

    def __post_init__(self):
        for name in ("n1", "n2"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if vec.shape != (3,):
                raise PreconditionError(f"{name} must be a 3-vector")
            if abs(np.linalg.norm(vec) - 1.0) > UNIT_TOL:
                raise PreconditionError(f"{name} is not a unit vector (|{name}| = {np.linalg.norm(vec)})")
            vec = vec.copy()
            vec.setflags(write=False)
            object.__setattr__(self, name, vec)

    @property
    def zz(self) -> float:
        return float(self.n1[2] * self.n2[2])

    @property
    def dot(self) -> float:
        return float(self.n1 @ self.n2)


@dataclass(frozen=True)
class CorrelationSample:
    analyzers: AnalyzerPair
    value: float


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_analyzers(rng: np.random.Generator, count: int) -> list[AnalyzerPair]:
    out = []
    for _ in range(count):
        out.append(AnalyzerPair(unit(rng.normal(size=3)), unit(rng.normal(size=3))))
    return out


def sphere_grid(count: int) -> np.ndarray:
    """Deterministic near-uniform points on the unit sphere (Fibonacci lattice)."""
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    r = np.sqrt(1.0 - z * z)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def correlation_closed_form(gamma: float, analyzers: AnalyzerPair) -> float:
    s = math.sin(2 * gamma)
    return float(-(1 - s) * analyzers.zz - s * analyzers.dot)


# -- first quantization ----------------------------------------------------

_A = physical_state(1, 1, 2, 2)
_B = physical_state(1, 2, 2, 1)


def build_g() -> np.ndarray:
    """Entanglement generator i(|A><B| - |B><A|), A = |[1]1[2]2>, B = |[1]2[2]1>."""
    return 1j * (np.outer(_A, _B.conj()) - np.outer(_B, _A.conj()))


def _projector_two() -> np.ndarray:
    return np.outer(_A, _A.conj()) + np.outer(_B, _B.conj())


def build_uE_closed(gamma: float) -> np.ndarray:
    i2 = _projector_two()
    return (np.eye(16) - i2) + np.cos(gamma) * i2 - 1j * np.sin(gamma) * build_g()


def build_uE(gamma: float) -> np.ndarray:
    """exp(-i gamma g) via eigendecomposition, cross-checked against the
    projector closed form."""
    w, v = np.linalg.eigh(build_g())
    u = (v * np.exp(-1j * gamma * w)) @ v.conj().T
    err = np.abs(u - build_uE_closed(gamma)).max()
    if err > AGREEMENT_TOL:
        raise RuntimeError(f"u_E exponential and closed form disagree by {err:.3e}")
    return u


def _one_particle_sigma(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return n[0] * PAULI["x"] + n[1] * PAULI["y"] + n[2] * PAULI["z"]


def species_sigma(r: int, n) -> np.ndarray:
    """n . sigma_[r]: spin of whichever particle carries species r."""
    local = np.kron(SPECIES_PROJECTOR[r], _one_particle_sigma(n))
    eye4 = np.eye(4)
    return np.kron(local, eye4) + np.kron(eye4, local)


def build_xi(analyzers: AnalyzerPair) -> np.ndarray:
    return species_sigma(1, analyzers.n1) @ species_sigma(2, analyzers.n2)


def build_xi_two_term(analyzers: AnalyzerPair) -> np.ndarray:
    """The two species-projected cross terms written out explicitly."""
    s1 = _one_particle_sigma(analyzers.n1)
    s2 = _one_particle_sigma(analyzers.n2)
    p1, p2 = SPECIES_PROJECTOR[1], SPECIES_PROJECTOR[2]
    return (np.kron(np.kron(p1, s1), np.kron(p2, s2))
            + np.kron(np.kron(p2, s2), np.kron(p1, s1)))


def correlation_1q(gamma: float, analyzers: AnalyzerPair) -> float:
    """<A| u_E(gamma)^dagger xi u_E(gamma) |A> by explicit matrix products."""
    psi = build_uE(gamma) @ _A
    value = np.vdot(psi, build_xi(analyzers) @ psi)
    return float(value.real)


def spin_operators_1q() -> dict[str, np.ndarray]:
    """Components of the total spin j = (sigma^(1) + sigma^(2)) / 2."""
    eye4 = np.eye(4)
    return {
        axis: 0.5 * (np.kron(np.kron(np.eye(2), PAULI[axis]), eye4)
                     + np.kron(eye4, np.kron(np.eye(2), PAULI[axis])))
        for axis in "xyz"
    }


# -- Fock space ------------------------------------------------------------

FOCK_SPACE = FockSpace(fock.spinful_modes())


def fock_state(r: int, i: int, s: int, j: int, space: FockSpace = FOCK_SPACE) -> FockVector:
    """phi^dagger_[r]i phi^dagger_[s]j |0>>."""
    return fock.create(space.vacuum(), Mode(r, i), Mode(s, j))


def two_body_coefficients(op16: np.ndarray) -> dict[tuple[Mode, Mode, Mode, Mode], complex]:
    """Matrix elements <r'i' s'j'| op |r i s j> keyed by modes."""
    out = {}
    labels = [(r, i) for r in (1, 2) for i in (1, 2)]
    for a, b, c, d in itertools.product(labels, repeat=4):
        val = op16[4 * sp_index(*a) + sp_index(*b), 4 * sp_index(*c) + sp_index(*d)]
        if val != 0:
            out[(Mode(*a), Mode(*b), Mode(*c), Mode(*d))] = complex(val)
    return out


def g_components() -> np.ndarray:
    """g_{r'i's'j';risj} as a 2^8 Kronecker-delta tensor indexed [r'-1, i'-1, ...]."""
    d = lambda a, b: 1.0 if a == b else 0.0  # noqa: E731
    out = np.zeros((2,) * 8, dtype=complex)
    for rp, ip, sp, jp, r, i, s, j in itertools.product((1, 2), repeat=8):
        left_a = d(rp, 1) * d(ip, 1) * d(sp, 2) * d(jp, 2) - d(rp, 2) * d(ip, 2) * d(sp, 1) * d(jp, 1)
        right_b = d(r, 1) * d(i, 2) * d(s, 2) * d(j, 1) - d(r, 2) * d(i, 1) * d(s, 1) * d(j, 2)
        left_b = d(rp, 1) * d(ip, 2) * d(sp, 2) * d(jp, 1) - d(rp, 2) * d(ip, 1) * d(sp, 1) * d(jp, 2)
        right_a = d(r, 1) * d(i, 1) * d(s, 2) * d(j, 2) - d(r, 2) * d(i, 2) * d(s, 1) * d(j, 1)
        out[rp - 1, ip - 1, sp - 1, jp - 1, r - 1, i - 1, s - 1, j - 1] = 0.5j * (
            left_a * right_b - left_b * right_a)
    return out


def _tensor_to_mapping(tensor: np.ndarray, site=None) -> dict:
    out = {}
    for idx in zip(*np.nonzero(tensor)):
        rp, ip, sp, jp, r, i, s, j = (k + 1 for k in idx)
        key = (Mode(rp, ip, site), Mode(sp, jp, site), Mode(r, i, site), Mode(s, j, site))
        out[key] = complex(tensor[idx])
    return out


def g_coefficients(site: int | None = None) -> dict:
    """Two-body coefficients of G, optionally placed on one lattice site."""
    return _tensor_to_mapping(g_components(), site)


def build_G(space: FockSpace = FOCK_SPACE) -> FockOperator:
    return fock.build_two_body(space, g_coefficients(), hermitian=True)


def xi_tilde(analyzers: AnalyzerPair) -> np.ndarray:
    """xi~[i'-1, j'-1, i-1, j-1] for the species-1 / species-2 spin product."""
    n1, n2 = analyzers.n1, analyzers.n2
    out = np.zeros((2, 2, 2, 2), dtype=complex)
    for ip, jp, i, j in itertools.product((1, 2), repeat=4):
        f1 = ((n1[0] + 1j * n1[1] * ALPHA[i]) * (ip == COMPLEMENT[i])
              + n1[2] * ALPHA[i] * (ip == i))
        f2 = ((n2[0] + 1j * n2[1] * ALPHA[j]) * (jp == COMPLEMENT[j])
              + n2[2] * ALPHA[j] * (jp == j))
        out[ip - 1, jp - 1, i - 1, j - 1] = f1 * f2
    return out


def xi_coefficients(analyzers: AnalyzerPair, sites1=(None,), sites2=(None,)) -> dict:
    """Coefficients for sum phi^+_[2]j'(y) phi^+_[1]i'(x) xi~ phi_[1]i(x) phi_[2]j(y).

    In :func:`fock.build_two_body` conventions this is c[p', q', p, q] = 2 xi~
    with p = [1]i at x, q = [2]j at y, summed over the given site lists.
    """
    xt = xi_tilde(analyzers)
    out = {}
    for x in sites1:
        for y in sites2:
            for ip, jp, i, j in itertools.product((1, 2), repeat=4):
                val = xt[ip - 1, jp - 1, i - 1, j - 1]
                if val != 0:
                    out[(Mode(1, ip, x), Mode(2, jp, y), Mode(1, i, x), Mode(2, j, y))] = 2 * val
    return out


def build_Xi_F(analyzers: AnalyzerPair, space: FockSpace = FOCK_SPACE) -> FockOperator:
    return fock.build_two_body(space, xi_coefficients(analyzers), hermitian=True)


def build_J(space: FockSpace = FOCK_SPACE) -> dict[str, FockOperator]:
    """Fock-space spin angular momentum J = (1/2) sum phi^+ <.|sigma|.> phi."""
    out = {}
    for axis in "xyz":
        coeffs = {}
        for r, i, j in itertools.product((1, 2), repeat=3):
            val = 0.5 * PAULI[axis][i - 1, j - 1]
            if val != 0:
                coeffs[(Mode(r, i), Mode(r, j))] = val
        out[axis] = fock.build_one_body(space, coeffs, hermitian=True)
    return out


@functools.lru_cache(maxsize=None)
def _default_G() -> FockOperator:
    return build_G()


def correlation_fock(gamma: float, analyzers: AnalyzerPair) -> float:
    psi = fock.evolve(_default_G(), gamma, fock_state(1, 1, 2, 2))
    return float(fock.expectation(psi, build_Xi_F(analyzers)).real)


# -- estimator ---------------------------------------------------------------

class FitResult(NamedTuple):
    estimate: float
    residual: float
    stderr: float
    n_samples: int


def fit_two_gamma(samples: Sequence[CorrelationSample], rank_tol: float = 1e-12) -> FitResult:
    """Least-squares fit of C = -(1 - s) n1z n2z - s n1.n2 for the scalar s.

    The model is linear in ``s``: ``C + n1z n2z = s (n1z n2z - n1.n2)``.
    ``s`` reads as sin(2 gamma), or 2 gamma in the small-angle form.
    """
    if len(samples) < 2:
        raise EstimationError(f"need at least 2 samples, got {len(samples)}")
    zz = np.array([smp.analyzers.zz for smp in samples])
    dot = np.array([smp.analyzers.dot for smp in samples])
    y = np.array([smp.value for smp in samples]) + zz
    x = zz - dot
    scale = np.sqrt(len(samples))
    if np.linalg.norm(x) <= rank_tol * scale:
        raise EstimationError(
            "rank-deficient design: n1z*n2z equals n1.n2 for every sample, "
            "so the two regressors are collinear and s is unidentifiable")
    (estimate,), _, _, _ = np.linalg.lstsq(x[:, None], y, rcond=None)
    resid = y - estimate * x
    residual = float(np.linalg.norm(resid))
    dof = len(samples) - 1
    stderr = float(np.sqrt(residual**2 / dof / (x @ x)))
    return FitResult(float(estimate), residual, stderr, len(samples))
