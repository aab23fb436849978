"""Finite fermionic Fock spaces.

Basis states are integer bitmasks: bit ``k`` holds the occupation of the
``k``-th mode of the space.  Modes are ordered lexicographically by
``(species, spin, site)`` and a ladder operator on mode ``k`` picks up the
sign ``(-1)**n`` with ``n`` the number of occupied modes at positions below
``k``.  Every operator is assembled by pushing basis states through these
signed ladder operations, so one- and two-body operators never go through
products of full-space matrices and can live inside a particle-number sector.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, EmptySectorError, PreconditionError

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10
MAX_MODES = 64

Sector = Union[None, int, Mapping[int, int]]


@dataclass(frozen=True)
class Mode:
    """One fermionic mode: species and spin index in {1, 2}, optional site.

    Spin index 1 is alpha = +1 (up), spin index 2 is alpha = -1 (down).
    Species indices are labels only.
    """

    species: int
    spin: int
    site: int | None = None

    def __post_init__(self):
        if self.species not in (1, 2) or self.spin not in (1, 2):
            raise DomainError(f"species and spin must be 1 or 2, got {self}")
        if self.site is not None and self.site < 0:
            raise DomainError(f"site index must be non-negative, got {self.site}")

    def sort_key(self):
        return (self.species, self.spin, -1 if self.site is None else self.site)

    def __str__(self):
        site = "" if self.site is None else f"@{self.site}"
        return f"[{self.species}]{self.spin}{site}"


def enumerate_basis(modes: Sequence[Mode], sector: Sector = None) -> np.ndarray:
    """Sorted array of basis bitmasks over ``modes`` (in the given order).

    ``sector`` is ``None`` (whole space), a total particle number, or a
    mapping ``{species: count}``; species missing from the mapping are empty.
    """
    n = len(modes)
    if n == 0:
        raise DomainError("mode set is empty")
    if n > MAX_MODES:
        raise DomainError(f"at most {MAX_MODES} modes are supported, got {n}")
    if sector is None:
        return np.arange(2**n, dtype=np.uint64)
    if isinstance(sector, Mapping):
        groups = []
        for species, count in sorted(sector.items()):
            positions = [k for k, m in enumerate(modes) if m.species == species]
            if count < 0 or count > len(positions):
                raise EmptySectorError(
                    f"species {species} has {len(positions)} modes, cannot hold {count}")
            groups.append([sum(1 << k for k in c)
                           for c in itertools.combinations(positions, count)])
        states = [sum(parts) for parts in itertools.product(*groups)]
        return np.array(sorted(states), dtype=np.uint64)
    count = int(sector)
    if count < 0 or count > n:
        raise EmptySectorError(f"sector {count} is empty for {n} modes")
    states = sorted(sum(1 << k for k in c) for c in itertools.combinations(range(n), count))
    return np.array(states, dtype=np.uint64)


class FockSpace:
    """Ordered mode set plus the (possibly sector-restricted) occupation basis."""

    def __init__(self, modes: Iterable[Mode], sector: Sector = None):
        modes = tuple(modes)
        if len(set(modes)) != len(modes):
            raise DomainError("mode set contains duplicates")
        if modes and len({m.site is None for m in modes}) > 1:
            raise DomainError("either every mode carries a site index or none does")
        self.modes = tuple(sorted(modes, key=Mode.sort_key))
        if isinstance(sector, Mapping):
            sector = dict(sorted(sector.items()))
        self.sector = sector
        self.states = enumerate_basis(self.modes, sector)
        self.states.setflags(write=False)
        self._position = {m: k for k, m in enumerate(self.modes)}

    def __repr__(self):
        return f"FockSpace({len(self.modes)} modes, sector={self.sector}, dim={self.dim})"

    def __eq__(self, other):
        if not isinstance(other, FockSpace):
            return NotImplemented
        return self.modes == other.modes and self.sector == other.sector

    def __hash__(self):
        sector = tuple(self.sector.items()) if isinstance(self.sector, dict) else self.sector
        return hash((self.modes, sector))

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def position(self, mode: Mode) -> int:
        try:
            return self._position[mode]
        except KeyError:
            raise DomainError(f"mode {mode} is not in this space") from None

    def lookup(self, states: np.ndarray):
        """Indices of ``states`` in the basis and a mask of which were found."""
        idx = np.searchsorted(self.states, states)
        idx = np.minimum(idx, self.dim - 1)
        return idx, self.states[idx] == states

    def index(self, state: int) -> int:
        idx, found = self.lookup(np.array([state], dtype=np.uint64))
        if not found[0]:
            raise DomainError(f"state {state:#b} is not in this basis")
        return int(idx[0])

    def state(self, index: int) -> int:
        return int(self.states[index])

    def occupancy(self, state: int) -> tuple[int, ...]:
        return tuple((state >> k) & 1 for k in range(self.n_modes))

    def basis_vector(self, state: int) -> FockVector:
        amps = np.zeros(self.dim, dtype=complex)
        amps[self.index(state)] = 1.0
        return FockVector(self, amps)

    def vacuum(self) -> FockVector:
        return self.basis_vector(0)

    def zero_vector(self) -> FockVector:
        return FockVector(self, np.zeros(self.dim, dtype=complex))


@dataclass(frozen=True, eq=False)
class FockVector:
    space: FockSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise DomainError(
                f"amplitude vector of shape {amps.shape} does not match dim {self.space.dim}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: FockVector) -> complex:
        """<self|other>."""
        _check_same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def normalized(self) -> FockVector:
        nrm = self.norm()
        if nrm == 0:
            raise DomainError("cannot normalize the zero vector")
        return FockVector(self.space, self.amplitudes / nrm)

    def __add__(self, other: FockVector) -> FockVector:
        _check_same_space(self.space, other.space)
        return FockVector(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: FockVector) -> FockVector:
        _check_same_space(self.space, other.space)
        return FockVector(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar) -> FockVector:
        return FockVector(self.space, scalar * self.amplitudes)

    __rmul__ = __mul__

    def __neg__(self) -> FockVector:
        return FockVector(self.space, -self.amplitudes)


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Sparse matrix over a :class:`FockSpace` basis.

    Setting ``hermitian`` asserts that the matrix equals its conjugate
    transpose; the claim is checked on construction.
    """

    space: FockSpace
    matrix: sparse.csr_array
    hermitian: bool = False

    def __post_init__(self):
        mat = sparse.csr_array(self.matrix, dtype=complex)
        if mat.shape != (self.space.dim, self.space.dim):
            raise DomainError(
                f"matrix of shape {mat.shape} does not match dim {self.space.dim}")
        mat.eliminate_zeros()
        object.__setattr__(self, "matrix", mat)
        if self.hermitian:
            err = self.hermiticity_error()
            if err > HERMITIAN_TOL * max(1.0, self.max_abs()):
                raise PreconditionError(f"operator flagged hermitian deviates by {err:.3e}")

    def max_abs(self) -> float:
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def adjoint(self) -> FockOperator:
        return FockOperator(self.space, self.matrix.conj().T.tocsr(), self.hermitian)

    def apply(self, v: FockVector) -> FockVector:
        _check_same_space(self.space, v.space)
        return FockVector(self.space, self.matrix @ v.amplitudes)

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return self.apply(other)
        _check_same_space(self.space, other.space)
        return FockOperator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: FockOperator) -> FockOperator:
        _check_same_space(self.space, other.space)
        return FockOperator(self.space, self.matrix + other.matrix,
                            self.hermitian and other.hermitian)

    def __sub__(self, other: FockOperator) -> FockOperator:
        _check_same_space(self.space, other.space)
        return FockOperator(self.space, self.matrix - other.matrix,
                            self.hermitian and other.hermitian)

    def __mul__(self, scalar) -> FockOperator:
        keep = self.hermitian and np.isreal(scalar)
        return FockOperator(self.space, self.matrix * scalar, bool(keep))

    __rmul__ = __mul__

    def __neg__(self) -> FockOperator:
        return FockOperator(self.space, -self.matrix, self.hermitian)

    @cached_property
    def spectral_blocks(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Eigendecomposition of a hermitian matrix, one dense block per
        connected component of its sparsity graph."""
        if not self.hermitian:
            raise PreconditionError("spectral blocks need a hermitian operator")
        ncomp, labels = connected_components(abs(self.matrix), directed=False)
        order = np.argsort(labels, kind="stable")
        bounds = np.searchsorted(labels[order], np.arange(ncomp + 1))
        blocks = []
        for c in range(ncomp):
            idx = order[bounds[c]:bounds[c + 1]]
            sub = self.matrix[idx][:, idx].toarray()
            w, vecs = np.linalg.eigh(0.5 * (sub + sub.conj().T))
            blocks.append((idx, w, vecs))
        return blocks


def _check_same_space(a: FockSpace, b: FockSpace):
    if a is not b and a != b:
        raise DomainError(f"dimension/space mismatch: {a!r} vs {b!r}")


def _ladder(states: np.ndarray, k: int, dagger: bool):
    """Signed action of a_k (or a_k^dagger) on an array of basis states."""
    bit = np.uint64(1) << np.uint64(k)
    occupied = (states & bit) != 0
    ok = ~occupied if dagger else occupied
    parity = np.bitwise_count(states & (bit - 1)) & 1
    return states ^ bit, 1 - 2 * parity.astype(np.int64), ok


def _apply_string(states: np.ndarray, string: Sequence[tuple[int, bool]]):
    """Apply a product of ladder operators, rightmost factor first.

    ``string`` lists ``(position, dagger)`` in the order of application.
    """
    signs = np.ones(len(states), dtype=np.int64)
    ok = np.ones(len(states), dtype=bool)
    for k, dagger in string:
        states, s, good = _ladder(states, k, dagger)
        signs = signs * s
        ok &= good
    return states, signs, ok


def _assemble(space: FockSpace, terms, hermitian: bool | None) -> FockOperator:
    rows, cols, data = [], [], []
    src = np.arange(space.dim)
    for coeff, string in terms:
        if coeff == 0:
            continue
        new, signs, ok = _apply_string(space.states, string)
        if not ok.any():
            continue
        idx, found = space.lookup(new[ok])
        if not found.all():
            raise DomainError("operator maps basis states outside the space's sector")
        rows.append(idx)
        cols.append(src[ok])
        data.append(coeff * signs[ok])
    if rows:
        mat = sparse.coo_array(
            (np.concatenate(data).astype(complex),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(space.dim, space.dim)).tocsr()
        mat.sum_duplicates()
    else:
        mat = sparse.csr_array((space.dim, space.dim), dtype=complex)
    op = FockOperator(space, mat)
    if hermitian is None:
        hermitian = op.hermiticity_error() <= HERMITIAN_TOL * max(1.0, op.max_abs())
    return FockOperator(space, mat, hermitian)


def _position_key(space: FockSpace, key):
    return space.position(key) if isinstance(key, Mode) else int(key)


def _coefficient_items(space: FockSpace, coeffs, rank: int):
    """Yield ``(positions, value)`` from a dense tensor or a sparse mapping."""
    n = space.n_modes
    if isinstance(coeffs, Mapping):
        for key, value in coeffs.items():
            if len(key) != rank:
                raise DomainError(f"coefficient key {key} should have {rank} indices")
            yield tuple(_position_key(space, k) for k in key), complex(value)
        return
    arr = np.asarray(coeffs, dtype=complex)
    if arr.shape != (n,) * rank:
        raise DomainError(f"coefficient tensor shape {arr.shape} != {(n,) * rank}")
    for pos in zip(*np.nonzero(arr)):
        yield tuple(int(p) for p in pos), complex(arr[pos])


def build_one_body(space: FockSpace, coeffs, hermitian: bool | None = None) -> FockOperator:
    """sum_{p', p} c[p', p] a_{p'}^dagger a_p.

    ``coeffs`` is an ``(n, n)`` array in the space's mode order or a mapping
    ``{(mode', mode): value}``.
    """
    terms = (
        (c, [(p, False), (pp, True)])
        for (pp, p), c in _coefficient_items(space, coeffs, 2)
    )
    return _assemble(space, terms, hermitian)


def build_two_body(space: FockSpace, coeffs, hermitian: bool | None = None) -> FockOperator:
    """(1/2) sum c[p', q', p, q] a_{q'}^dagger a_{p'}^dagger a_p a_q.

    ``c[p', q', p, q]`` is the two-particle matrix element
    ``<p' q'| z |p q>`` in the product basis (particle 1 first), which with
    this operator ordering reproduces the first-quantized action on
    antisymmetrized states.
    """
    terms = (
        (0.5 * c, [(q, False), (p, False), (pp, True), (qq, True)])
        for (pp, qq, p, q), c in _coefficient_items(space, coeffs, 4)
    )
    return _assemble(space, terms, hermitian)


def ladder_operator(space: FockSpace, mode: Mode, dagger: bool = False) -> FockOperator:
    """Matrix of a_mode or a_mode^dagger; only closed on an unrestricted space."""
    k = space.position(mode)
    return _assemble(space, [(1.0, [(k, dagger)])], hermitian=False)


def number_operator(space: FockSpace) -> FockOperator:
    return build_one_body(space, np.eye(space.n_modes), hermitian=True)


def _apply_ladder(mode: Mode, v: FockVector, dagger: bool) -> FockVector:
    space = v.space
    k = space.position(mode)
    new, signs, ok = _ladder(space.states, k, dagger)
    ok &= v.amplitudes != 0
    out = np.zeros(space.dim, dtype=complex)
    if ok.any():
        idx, found = space.lookup(new[ok])
        if not found.all():
            raise DomainError("ladder operator leaves the space's sector")
        np.add.at(out, idx, signs[ok] * v.amplitudes[ok])
    return FockVector(space, out)


def apply_creation(mode: Mode, v: FockVector) -> FockVector:
    return _apply_ladder(mode, v, dagger=True)


def apply_annihilation(mode: Mode, v: FockVector) -> FockVector:
    return _apply_ladder(mode, v, dagger=False)


def create(v: FockVector, *modes: Mode) -> FockVector:
    """a_{m_1}^dagger ... a_{m_k}^dagger v, applied right to left."""
    for mode in reversed(modes):
        v = apply_creation(mode, v)
    return v


def occupied_state(space: FockSpace, *modes: Mode) -> FockVector:
    """a_{m_1}^dagger ... a_{m_k}^dagger |0>>, also in spaces whose sector
    excludes the vacuum."""
    string = [(space.position(m), True) for m in reversed(modes)]
    states, signs, ok = _apply_string(np.zeros(1, dtype=np.uint64), string)
    amps = np.zeros(space.dim, dtype=complex)
    if ok[0]:
        amps[space.index(int(states[0]))] = signs[0]
    return FockVector(space, amps)


def _require_hermitian(h: FockOperator):
    if not h.hermitian:
        err = h.hermiticity_error()
        if err > HERMITIAN_TOL * max(1.0, h.max_abs()):
            raise PreconditionError(f"generator is not hermitian (deviation {err:.3e})")
        h = FockOperator(h.space, h.matrix, hermitian=True)
    return h


def evolve(h: FockOperator, angle: float, v: FockVector) -> FockVector:
    """exp(-i * angle * h) v by eigendecomposition of the hermitian ``h``."""
    h = _require_hermitian(h)
    _check_same_space(h.space, v.space)
    out = np.array(v.amplitudes)
    if angle == 0:
        return FockVector(v.space, out)
    for idx, w, vecs in h.spectral_blocks:
        out[idx] = vecs @ (np.exp(-1j * angle * w) * (vecs.conj().T @ v.amplitudes[idx]))
    return FockVector(v.space, out)


def unitary(h: FockOperator, angle: float) -> FockOperator:
    """exp(-i * angle * h) as an operator, assembled block by block."""
    h = _require_hermitian(h)
    if angle == 0:
        return FockOperator(h.space, sparse.eye_array(h.space.dim, dtype=complex, format="csr"),
                            hermitian=True)
    rows, cols, data = [], [], []
    for idx, w, vecs in h.spectral_blocks:
        block = (vecs * np.exp(-1j * angle * w)) @ vecs.conj().T
        r, c = np.meshgrid(idx, idx, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(block.ravel())
    mat = sparse.coo_array(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(h.space.dim, h.space.dim)).tocsr()
    mat.data[np.abs(mat.data) < 1e-15] = 0
    return FockOperator(h.space, mat)


def expectation(v: FockVector, a: FockOperator) -> complex:
    """<v|a|v> for a normalized ``v``."""
    _check_same_space(v.space, a.space)
    if abs(v.norm() - 1.0) > NORM_TOL:
        raise PreconditionError(f"state is not normalized (norm {v.norm():.12f})")
    return complex(np.vdot(v.amplitudes, a.matrix @ v.amplitudes))


def commutator(a: FockOperator, b: FockOperator) -> FockOperator:
    return a @ b - b @ a


def anticommutator(a: FockOperator, b: FockOperator) -> FockOperator:
    return a @ b + b @ a


def max_abs_entry(op: FockOperator | sparse.sparray) -> float:
    mat = op.matrix if isinstance(op, FockOperator) else op
    return float(abs(mat).max()) if mat.nnz else 0.0


def anticommutator_errors(space: FockSpace) -> dict[str, float]:
    """Largest entrywise deviation of each canonical anticommutation relation."""
    ann = [ladder_operator(space, m) for m in space.modes]
    cre = [a.adjoint() for a in ann]
    ident = sparse.identity(space.dim, dtype=complex, format="csr")
    worst = {"{a,a}": 0.0, "{a+,a+}": 0.0, "{a,a+}": 0.0}
    for i in range(space.n_modes):
        for j in range(space.n_modes):
            aa = ann[i].matrix @ ann[j].matrix + ann[j].matrix @ ann[i].matrix
            cc = cre[i].matrix @ cre[j].matrix + cre[j].matrix @ cre[i].matrix
            ac = ann[i].matrix @ cre[j].matrix + cre[j].matrix @ ann[i].matrix
            if i == j:
                ac = ac - ident
            worst["{a,a}"] = max(worst["{a,a}"], max_abs_entry(aa))
            worst["{a+,a+}"] = max(worst["{a+,a+}"], max_abs_entry(cc))
            worst["{a,a+}"] = max(worst["{a,a+}"], max_abs_entry(ac))
    return worst


def spinful_modes(sites: int | None = None, families=None) -> list[Mode]:
    """All (species, spin) modes, optionally repeated over ``sites`` sites.

    ``families`` restricts the ``(species, spin)`` pairs included.
    """
    families = families or [(r, i) for r in (1, 2) for i in (1, 2)]
    if sites is None:
        return [Mode(r, i) for r, i in families]
    return [Mode(r, i, x) for r, i in families for x in range(sites)]
