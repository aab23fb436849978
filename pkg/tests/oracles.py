"""Independent reference implementations used only by the tests.

Nothing here imports the package's numerical routines: ladder operators are
Jordan-Wigner Kronecker products, evolutions use scipy.linalg.expm, the
two-particle models are written in first quantization, and integrals go
through scipy.integrate.quad.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm

SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |1> -> |0> in basis (0, 1)


def jw_annihilator(n_modes: int, k: int) -> np.ndarray:
    """Dense a_k on 2^n_modes with basis index = occupation bitmask.

    The highest bit is the leftmost Kronecker factor; modes below k
    contribute the parity string.
    """
    out = np.ones((1, 1), dtype=complex)
    for j in reversed(range(n_modes)):
        if j < k:
            factor = np.diag([1.0, -1.0]).astype(complex)
        elif j == k:
            factor = LOWER
        else:
            factor = np.eye(2, dtype=complex)
        out = np.kron(out, factor)
    return out


def count_one_per_species(n_per_species: int) -> int:
    n = 2 * n_per_species
    total = 0
    for b in range(2**n):
        low = bin(b & ((1 << n_per_species) - 1)).count("1")
        high = bin(b >> n_per_species).count("1")
        total += low == 1 and high == 1
    return total


# -- first-quantized EPRB, written from the defining formulas ------------------

def sp(r: int, i: int) -> int:
    return 2 * (r - 1) + (i - 1)


def ket(r, i, s, j) -> np.ndarray:
    v = np.zeros(16, dtype=complex)
    v[4 * sp(r, i) + sp(s, j)] = 1
    return v


def phys(r, i, s, j) -> np.ndarray:
    return (ket(r, i, s, j) - ket(s, j, r, i)) / math.sqrt(2)


def g_matrix() -> np.ndarray:
    a, b = phys(1, 1, 2, 2), phys(1, 2, 2, 1)
    return 1j * (np.outer(a, b.conj()) - np.outer(b, a.conj()))


def xi_matrix(n1, n2) -> np.ndarray:
    """(n1 . sigma_[1]) (n2 . sigma_[2]) with species-projected spin operators
    acting on either particle slot."""
    def nsig(n):
        return sum(n[k] * SIGMA[ax] for k, ax in enumerate("xyz"))

    proj = {1: np.diag([1.0, 0.0]), 2: np.diag([0.0, 1.0])}
    eye4 = np.eye(4)

    def species_sigma(r, n):
        one = np.kron(proj[r], nsig(n))
        return np.kron(one, eye4) + np.kron(eye4, one)

    return species_sigma(1, n1) @ species_sigma(2, n2)


def correlation_1q(gamma, n1, n2) -> float:
    u = expm(-1j * gamma * g_matrix())
    psi = u @ phys(1, 1, 2, 2)
    return float(np.vdot(psi, xi_matrix(n1, n2) @ psi).real)


# -- free Gaussian propagation --------------------------------------------------

def gaussian_density_1d(x, center, velocity, alpha, mass, tau):
    a = alpha / (1 + (alpha * tau / mass) ** 2)
    return math.sqrt(a / math.pi) * np.exp(-a * (x - center - velocity * tau) ** 2)


def L_uniform_quad(wp1, wp2, kappa, t0, t):
    """2 int dt kappa(t) prod_axis int dx rho1 rho2 by nested scipy quad."""
    def overlap(tt):
        tau = tt - t0
        total = 1.0
        for k in range(len(wp1["center"])):
            f = lambda x: (gaussian_density_1d(x, wp1["center"][k], wp1["velocity"][k], wp1["alpha"], wp1["mass"], tau)
                           * gaussian_density_1d(x, wp2["center"][k], wp2["velocity"][k], wp2["alpha"], wp2["mass"], tau))
            c = 0.5 * (wp1["center"][k] + wp2["center"][k] + (wp1["velocity"][k] + wp2["velocity"][k]) * tau)
            total *= quad(f, c - 60, c + 60, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
        return 2 * kappa(tt) * total
    return quad(overlap, t0, t, epsabs=1e-14, epsrel=1e-11, limit=400)[0]


def propagate_by_quad_1d(center, velocity, alpha, mass, x, tau):
    """int psi_g(x') G(x' - x, tau) dx' by scipy quad on real and imaginary parts."""
    pref = np.power(complex(-2 * mass * 1j / (4 * math.pi * tau)), 0.5)

    def integrand(xp):
        psi = (alpha / math.pi) ** 0.25 * np.exp(-0.5 * alpha * (xp - center) ** 2
                                                  + 1j * mass * velocity * (xp - center))
        return psi * pref * np.exp(1j * mass * (xp - x) ** 2 / (2 * tau))

    lo, hi = center - 14 / math.sqrt(alpha), center + 14 / math.sqrt(alpha)
    re = quad(lambda s: integrand(s).real, lo, hi, limit=2000, epsabs=1e-13)[0]
    im = quad(lambda s: integrand(s).imag, lo, hi, limit=2000, epsabs=1e-13)[0]
    return re + 1j * im


# -- first-quantized lattice oracle --------------------------------------------

def lattice_first_quantized(n_sites, spacing, mass, psi1, psi2, kappa, eps, t, n1, n2,
                            profile=None, steps=2000):
    """C(t) for one species-1 and one species-2 particle on a ring.

    Basis: |x (species 1), y (species 2), spin1, spin2>, spin up = index 0.
    A time ``profile`` multiplying kappa is handled by midpoint slicing into
    ``steps`` exponentials (second order in the step).
    """
    h = np.zeros((n_sites, n_sites))
    for x in range(n_sites):
        h[x, x] = 2
        h[x, (x + 1) % n_sites] -= 1
        h[x, (x - 1) % n_sites] -= 1
    h /= 2 * mass * spacing**2
    up, dn = np.array([1, 0]), np.array([0, 1])
    a_spin, b_spin = np.kron(up, dn), np.kron(dn, up)
    g = 1j * (np.outer(a_spin, b_spin) - np.outer(b_spin, a_spin))
    eye_n, eye4 = np.eye(n_sites), np.eye(4)
    h0 = np.kron(np.kron(h, eye_n), eye4) + np.kron(np.kron(eye_n, h), eye4)
    diag = np.zeros((n_sites * n_sites, n_sites * n_sites))
    for x in range(n_sites):
        diag[x * n_sites + x, x * n_sites + x] = kappa[x] / spacing
    h1 = np.kron(diag, g)
    psi0 = np.kron(np.kron(psi1, psi2), a_spin)

    def nsig(n):
        return sum(n[k] * SIGMA[ax] for k, ax in enumerate("xyz"))

    xi = np.kron(np.eye(n_sites * n_sites), np.kron(nsig(n1), nsig(n2)))
    if profile is None:
        st = expm(-1j * t * (h0 + eps * h1)) @ psi0
    else:
        dt = t / steps
        st = psi0.astype(complex)
        for k in range(steps):
            st = expm(-1j * dt * (h0 + eps * profile((k + 0.5) * dt) * h1)) @ st
    return float(np.vdot(st, xi @ st).real)


def lattice_L_quad(n_sites, spacing, mass, psi1, psi2, kappa, t):
    h = np.zeros((n_sites, n_sites))
    for x in range(n_sites):
        h[x, x] = 2
        h[x, (x + 1) % n_sites] -= 1
        h[x, (x - 1) % n_sites] -= 1
    h /= 2 * mass * spacing**2

    def integrand(tt):
        u = expm(-1j * h * tt)
        return 2 * float(np.sum(np.asarray(kappa) / spacing * np.abs(u @ psi1) ** 2 * np.abs(u @ psi2) ** 2))

    return quad(integrand, 0, t, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


# -- vacuum representation -----------------------------------------------------

def dense_W(n_modes, creators_1, creators_2):
    """W = b1^+ b2^+ - h.c. from (mode index, amplitude) lists."""
    ann = [jw_annihilator(n_modes, k) for k in range(n_modes)]
    b1d = sum(amp * ann[k].conj().T for k, amp in creators_1)
    b2d = sum(amp * ann[k].conj().T for k, amp in creators_2)
    bdag = b1d @ b2d
    return bdag - bdag.conj().T, ann


def expm_V(w: np.ndarray, theta: float) -> np.ndarray:
    return expm(theta * w)

