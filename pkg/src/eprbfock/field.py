"""Continuum first-order field theory: free propagation of Gaussian
wavepackets and the entanglement amplitude L(t) that multiplies epsilon in
the spin correlation.

All functions work in any spatial dimension ``d`` (the length of the
wavepacket center); the physical case is ``d = 3``.  Units have hbar = 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Union

import numpy as np

from .eprb import AnalyzerPair
from .errors import DegenerateKinematicsError, DomainError, PreconditionError
from .quadrature import adaptive_gauss_legendre, composite_gauss_legendre_rule

TRUNCATION_SIGMAS = 8.0
VALIDITY_THRESHOLD = 0.05


@dataclass(frozen=True)
class Wavepacket:
    """Gaussian packet (alpha/pi)^(d/4) exp(-alpha|x-c|^2/2 + i m v.(x-c))."""

    center: np.ndarray
    velocity: np.ndarray
    alpha: float
    mass: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        velocity = np.atleast_1d(np.asarray(self.velocity, dtype=float)).copy()
        if center.shape != velocity.shape or center.ndim != 1:
            raise DomainError("center and velocity must be vectors of equal length")
        if not self.alpha > 0 or not self.mass > 0:
            raise PreconditionError("width parameter alpha and mass must be positive")
        center.setflags(write=False)
        velocity.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "velocity", velocity)

    @property
    def dim(self) -> int:
        return len(self.center)

    def amplitude(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dx = x - self.center
        return ((self.alpha / np.pi) ** (self.dim / 4)
                * np.exp(-0.5 * self.alpha * np.sum(dx * dx, axis=-1)
                         + 1j * self.mass * (dx @ self.velocity)))

    def trajectory(self, tau) -> np.ndarray:
        """Center at elapsed time ``tau``; shape ``tau.shape + (d,)``."""
        tau = np.asarray(tau, dtype=float)
        return self.center + tau[..., None] * self.velocity

    def width_param(self, tau) -> np.ndarray:
        """A(tau) = alpha / (1 + alpha^2 tau^2 / m^2), the density exponent."""
        tau = np.asarray(tau, dtype=float)
        return self.alpha / (1.0 + (self.alpha * tau / self.mass) ** 2)

    def translated(self, shift) -> Wavepacket:
        return Wavepacket(self.center + np.asarray(shift, float), self.velocity, self.alpha, self.mass)


def greens_function(dx, dt: float, m: float) -> complex | np.ndarray:
    """(-2 m i / (4 pi dt))^(d/2) exp(i m |dx|^2 / (2 dt)), principal branch.

    ``dx`` may carry leading batch dimensions; ``d`` is its last axis.
    """
    if dt == 0:
        raise DomainError("dt = 0 is the delta-function limit and cannot be evaluated")
    dx = np.asarray(dx, dtype=float)
    d = dx.shape[-1]
    prefactor = np.power(complex(-2 * m * 1j / (4 * np.pi * dt)), d / 2)
    return prefactor * np.exp(1j * m * np.sum(dx * dx, axis=-1) / (2 * dt))


def greens_function_1d(dx, dt: float, m: float):
    """One Cartesian factor of :func:`greens_function`."""
    prefactor = np.power(complex(-2 * m * 1j / (4 * np.pi * dt)), 0.5)
    return prefactor * np.exp(1j * m * np.asarray(dx, float) ** 2 / (2 * dt))


def _propagate_axis(a, v, alpha, m, x, tau):
    beta = 1.0 + 1j * alpha * tau / m
    return ((alpha / np.pi) ** 0.25 / np.sqrt(beta)
            * np.exp(-alpha * (x - a - v * tau) ** 2 / (2 * beta)
                     + 1j * m * v * (x - a) - 0.5j * m * v * v * tau))


def propagate_gaussian(wp: Wavepacket, x, t_elapsed: float) -> complex | np.ndarray:
    """Freely evolved packet amplitude at ``x`` after ``t_elapsed``.

    Equals the integral of psi_g(x') G(x' - x, t_elapsed) over x'.
    """
    if t_elapsed < 0:
        raise DomainError("t_elapsed must be non-negative")
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape[:-1], dtype=complex)
    for k in range(wp.dim):
        out = out * _propagate_axis(wp.center[k], wp.velocity[k], wp.alpha, wp.mass,
                                    x[..., k], t_elapsed)
    return out


def bracket_direct(wp: Wavepacket, x, t_elapsed: float, nodes_per_width: int = 48) -> complex:
    """The propagation integral of psi_g against G evaluated by quadrature.

    The Gaussian packet and G both factor over Cartesian axes, so the
    d-dimensional integral is the product of d one-dimensional ones.
    """
    x = np.asarray(x, dtype=float)
    width = 1.0 / np.sqrt(wp.alpha)
    out = 1.0 + 0j
    for k in range(wp.dim):
        lo = wp.center[k] - 12 * width
        hi = wp.center[k] + 12 * width
        chirp = wp.mass * (abs(wp.velocity[k]) + (hi - lo + abs(x[k] - wp.center[k])) / t_elapsed)
        panels = int(np.ceil((hi - lo) * max(1.0 / width, chirp / np.pi))) + 1
        xs, ws = composite_gauss_legendre_rule(lo, hi, panels, order=nodes_per_width // 4)
        dx = xs - wp.center[k]
        psi = ((wp.alpha / np.pi) ** 0.25
               * np.exp(-0.5 * wp.alpha * dx * dx + 1j * wp.mass * wp.velocity[k] * dx))
        out *= np.sum(ws * psi * greens_function_1d(xs - x[k], t_elapsed, wp.mass))
    return complex(out)


# -- couplings ---------------------------------------------------------------

@dataclass(frozen=True)
class PointImpulse:
    """kappa delta(x - location) delta(t - time)."""

    strength: float
    location: np.ndarray
    time: float

    def __post_init__(self):
        loc = np.atleast_1d(np.asarray(self.location, dtype=float)).copy()
        loc.setflags(write=False)
        object.__setattr__(self, "location", loc)

    def translated(self, shift) -> PointImpulse:
        return PointImpulse(self.strength, self.location + np.asarray(shift, float), self.time)


def _finite_difference(f, order):
    def deriv(t, h=1e-4):
        t = np.asarray(t, dtype=float)
        if order == 1:
            return (f(t + h) - f(t - h)) / (2 * h)
        return (f(t + h) - 2 * f(t) + f(t - h)) / (h * h)
    return deriv


@dataclass(frozen=True)
class UniformInSpace:
    """kappa(x, t) = kappa(t); derivatives fall back to finite differences."""

    kappa: Callable[[np.ndarray], np.ndarray]
    dkappa: Callable[[np.ndarray], np.ndarray] | None = None
    ddkappa: Callable[[np.ndarray], np.ndarray] | None = None
    breakpoints: tuple[float, ...] = ()
    label: str = "custom"

    @classmethod
    def constant(cls, strength: float) -> UniformInSpace:
        return cls(
            kappa=lambda t: np.full(np.shape(t), float(strength)),
            dkappa=lambda t: np.zeros(np.shape(t)),
            ddkappa=lambda t: np.zeros(np.shape(t)),
            label=f"constant({strength})",
        )

    @classmethod
    def gaussian_pulse(cls, strength: float, t_center: float, duration: float) -> UniformInSpace:
        """strength * exp(-(t - t_center)^2 / (2 duration^2))."""
        def k(t):
            return strength * np.exp(-0.5 * ((np.asarray(t) - t_center) / duration) ** 2)

        def dk(t):
            return -(np.asarray(t) - t_center) / duration**2 * k(t)

        def ddk(t):
            u = (np.asarray(t) - t_center) / duration
            return (u * u - 1) / duration**2 * k(t)

        pts = tuple(t_center + s * duration for s in (-6, -3, 0, 3, 6))
        return cls(k, dk, ddk, pts, f"gaussian_pulse({strength}, {t_center}, {duration})")

    @classmethod
    def linear(cls, strength: float, slope: float, t_ref: float = 0.0) -> UniformInSpace:
        """strength + slope (t - t_ref)."""
        return cls(
            kappa=lambda t: strength + slope * (np.asarray(t, float) - t_ref),
            dkappa=lambda t: np.full(np.shape(t), float(slope)),
            ddkappa=lambda t: np.zeros(np.shape(t)),
            label=f"linear({strength}, {slope}, {t_ref})",
        )

    def rate(self, t):
        return (self.dkappa or _finite_difference(self.kappa, 1))(t)

    def curvature(self, t):
        return (self.ddkappa or _finite_difference(self.kappa, 2))(t)


@dataclass(frozen=True)
class SampledGrid:
    """kappa(x, t) tabulated on a rectilinear spatial grid.

    ``values`` is an array over the grid (static) or a callable returning one
    for a time ``t``; ``time_profile`` optionally multiplies it.  Spatial
    integrals use the tensor-product trapezoid rule on the grid.
    """

    axes: tuple[np.ndarray, ...]
    values: Union[np.ndarray, Callable[[float], np.ndarray]]
    time_profile: Callable[[np.ndarray], np.ndarray] | None = None
    breakpoints: tuple[float, ...] = ()
    label: str = "grid"

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        if not callable(self.values):
            vals = np.asarray(self.values, dtype=float)
            if vals.shape != self.shape:
                raise DomainError(f"grid values of shape {vals.shape} do not match axes {self.shape}")
            object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.ones(())
        for ax in self.axes:
            d = np.diff(ax)
            w1 = np.zeros(len(ax))
            w1[:-1] += d / 2
            w1[1:] += d / 2
            w = np.multiply.outer(w, w1)
        return w

    def at(self, t: float) -> np.ndarray:
        vals = self.values(t) if callable(self.values) else self.values
        if self.time_profile is not None:
            vals = vals * float(self.time_profile(np.asarray(t)))
        return vals

    @classmethod
    def gaussian_bump(cls, strength: float, center, width: float, half_extent: float,
                      n: int, time_profile=None, breakpoints=()) -> SampledGrid:
        """Normalized spatial Gaussian of total weight ``strength`` on an
        ``n``-point-per-axis grid spanning center +/- half_extent."""
        center = np.atleast_1d(np.asarray(center, float))
        axes = tuple(np.linspace(c - half_extent, c + half_extent, n) for c in center)
        grid = cls(axes, np.zeros((n,) * len(center)))
        r2 = np.sum((grid.points - center) ** 2, axis=-1)
        d = len(center)
        vals = strength * (2 * np.pi * width**2) ** (-d / 2) * np.exp(-0.5 * r2 / width**2)
        return cls(axes, vals, time_profile, tuple(breakpoints),
                   f"gaussian_bump({strength}, {list(center)}, {width})")

    def translated(self, shift) -> SampledGrid:
        shift = np.asarray(shift, float)
        return SampledGrid(tuple(a + s for a, s in zip(self.axes, shift)), self.values,
                           self.time_profile, self.breakpoints, self.label)


CouplingProfile = Union[PointImpulse, UniformInSpace, SampledGrid]


@dataclass(frozen=True)
class FieldScenario:
    wp1: Wavepacket
    wp2: Wavepacket
    coupling: CouplingProfile
    epsilon: float = 0.0
    t0: float = 0.0
    t: float = 1.0
    analyzers: AnalyzerPair | None = None
    tolerances: dict = field(default_factory=lambda: {"rtol": 1e-9, "atol": 1e-15})

    def __post_init__(self):
        if self.t < self.t0:
            raise PreconditionError("end time t must not precede t0")
        if self.epsilon < 0:
            raise PreconditionError("epsilon must be non-negative")
        if self.wp1.dim != self.wp2.dim:
            raise DomainError("wavepackets live in different dimensions")

    @property
    def dim(self) -> int:
        return self.wp1.dim

    def translated(self, shift) -> FieldScenario:
        coupling = self.coupling
        if isinstance(coupling, (PointImpulse, SampledGrid)):
            coupling = coupling.translated(shift)
        return FieldScenario(self.wp1.translated(shift), self.wp2.translated(shift), coupling,
                             self.epsilon, self.t0, self.t, self.analyzers, self.tolerances)


class Kinematics(NamedTuple):
    t_min: float
    d_min: float
    relative_speed: float


def closest_approach(wp1: Wavepacket, wp2: Wavepacket, t0: float) -> Kinematics:
    """Time and distance of minimum separation of the two packet centers."""
    dx = wp1.center - wp2.center
    dv = wp1.velocity - wp2.velocity
    speed2 = float(dv @ dv)
    if speed2 == 0:
        raise DegenerateKinematicsError("packets share a velocity; closest approach undefined")
    t_min = t0 - float(dv @ dx) / speed2
    d_min = float(np.linalg.norm(dx + dv * (t_min - t0)))
    return Kinematics(t_min, d_min, np.sqrt(speed2))


def _time_points(sc: FieldScenario) -> list[float]:
    pts = list(getattr(sc.coupling, "breakpoints", ()))
    try:
        kin = closest_approach(sc.wp1, sc.wp2, sc.t0)
    except DegenerateKinematicsError:
        return pts
    a_min = min(sc.wp1.width_param(kin.t_min - sc.t0), sc.wp2.width_param(kin.t_min - sc.t0))
    w = 1.0 / (np.sqrt(a_min) * kin.relative_speed)
    pts.extend(kin.t_min + s * w for s in (-12, -6, -3, -1, 0, 1, 3, 6, 12))
    return pts


def _integrate_time(sc: FieldScenario, integrand) -> float:
    res = adaptive_gauss_legendre(integrand, sc.t0, sc.t, points=_time_points(sc), **sc.tolerances)
    return res.value


def _require_matched(sc: FieldScenario):
    if sc.wp1.alpha != sc.wp2.alpha or sc.wp1.mass != sc.wp2.mass:
        raise PreconditionError("the Gaussian closed form needs equal alpha and mass")


def _overlap_gaussian(sc: FieldScenario, t: float, grid: SampledGrid) -> float:
    tau = t - sc.t0
    a = float(sc.wp1.width_param(tau))
    c1, c2 = sc.wp1.trajectory(tau), sc.wp2.trajectory(tau)
    pts = grid.points
    expo = -a * (np.sum((pts - c1) ** 2, axis=-1) + np.sum((pts - c2) ** 2, axis=-1))
    return 2 * (a / np.pi) ** sc.dim * float(np.sum(grid.weights * grid.at(t) * np.exp(expo)))


def entanglement_L_point(sc: FieldScenario) -> float:
    """Closed form of L for a point impulse in space and time."""
    imp = sc.coupling
    if not isinstance(imp, PointImpulse):
        raise DomainError("entanglement_L_point needs a PointImpulse coupling")
    _require_matched(sc)
    if not sc.t0 <= imp.time <= sc.t:
        warnings.warn(f"impulse time {imp.time} lies outside [{sc.t0}, {sc.t}]; L = 0",
                      stacklevel=2)
        return 0.0
    tau = imp.time - sc.t0
    a = float(sc.wp1.width_param(tau))
    c1, c2 = sc.wp1.trajectory(tau), sc.wp2.trajectory(tau)
    dist2 = float(np.sum((imp.location - c1) ** 2) + np.sum((imp.location - c2) ** 2))
    return float(2 * imp.strength * (a / np.pi) ** sc.dim * np.exp(-a * dist2))


def uniform_integrand(sc: FieldScenario, t) -> np.ndarray:
    """Time integrand of L for a spatially uniform coupling (the spatial
    Gaussian integral done analytically)."""
    tau = np.asarray(t, float) - sc.t0
    a = sc.wp1.width_param(tau)
    sep = sc.wp1.trajectory(tau) - sc.wp2.trajectory(tau)
    d = sc.dim
    return (sc.coupling.kappa(t) * 2 ** (1 - d / 2) * (a / np.pi) ** (d / 2)
            * np.exp(-0.5 * a * np.sum(sep * sep, axis=-1)))


def entanglement_L_gaussian(sc: FieldScenario) -> float:
    """L from the Gaussian-packet closed form of the integrand."""
    coupling = sc.coupling
    if isinstance(coupling, PointImpulse):
        return entanglement_L_point(sc)
    _require_matched(sc)
    if isinstance(coupling, UniformInSpace):
        return _integrate_time(sc, lambda t: uniform_integrand(sc, t))
    if isinstance(coupling, SampledGrid):
        return _integrate_time(
            sc, lambda ts: np.array([_overlap_gaussian(sc, t, coupling) for t in ts]))
    raise DomainError(f"unsupported coupling {type(coupling).__name__}")


def _density(wp: Wavepacket, x, tau) -> np.ndarray:
    return np.abs(propagate_gaussian(wp, x, tau)) ** 2


def _axis_overlap(sc: FieldScenario, tau: float, k: int) -> float:
    """Integral over one axis of |psi_1|^2 |psi_2|^2 built from propagated
    amplitudes, by composite Gauss-Legendre over a truncated box."""
    wps = (sc.wp1, sc.wp2)
    centers = [wp.center[k] + wp.velocity[k] * tau for wp in wps]
    sigmas = [1.0 / np.sqrt(2 * float(wp.width_param(tau))) for wp in wps]
    lo = min(centers) - TRUNCATION_SIGMAS * max(sigmas)
    hi = max(centers) + TRUNCATION_SIGMAS * max(sigmas)
    panels = int(np.ceil((hi - lo) / min(sigmas)))
    xs, ws = composite_gauss_legendre_rule(lo, hi, panels, order=8)
    prod = np.ones_like(xs)
    for wp in wps:
        prod *= np.abs(_propagate_axis(wp.center[k], wp.velocity[k], wp.alpha, wp.mass, xs, tau)) ** 2
    return float(ws @ prod)


def density_overlap(sc: FieldScenario, t: float) -> float:
    """Integral over space of |psi_1(x, t)|^2 |psi_2(x, t)|^2."""
    tau = t - sc.t0
    return float(np.prod([_axis_overlap(sc, tau, k) for k in range(sc.dim)]))


def entanglement_L_quadrature(sc: FieldScenario) -> float:
    """L by direct numerical integration of 2 kappa |psi_1|^2 |psi_2|^2.

    The four propagation brackets pair into the squared moduli of the two
    freely evolved packets; the packets come from :func:`propagate_gaussian`,
    not from the closed-form density.
    """
    coupling = sc.coupling
    if isinstance(coupling, PointImpulse):
        if not sc.t0 <= coupling.time <= sc.t:
            warnings.warn("impulse time lies outside the window; L = 0", stacklevel=2)
            return 0.0
        tau = coupling.time - sc.t0
        return float(2 * coupling.strength * _density(sc.wp1, coupling.location, tau)
                     * _density(sc.wp2, coupling.location, tau))
    if isinstance(coupling, UniformInSpace):
        def integrand(ts):
            return np.array([2 * float(coupling.kappa(t)) * density_overlap(sc, t) for t in ts])
        return _integrate_time(sc, integrand)
    if isinstance(coupling, SampledGrid):
        pts = coupling.points

        def integrand(ts):
            out = []
            for t in ts:
                tau = t - sc.t0
                dens = _density(sc.wp1, pts, tau) * _density(sc.wp2, pts, tau)
                out.append(2 * float(np.sum(coupling.weights * coupling.at(t) * dens)))
            return np.array(out)
        return _integrate_time(sc, integrand)
    raise DomainError(f"unsupported coupling {type(coupling).__name__}")


@dataclass(frozen=True)
class SteepestDescent:
    L: float
    t_c: float
    t_min: float
    d_min: float
    validity: dict

    @property
    def valid(self) -> bool:
        return (self.validity["kappa_rate_ratio"] <= VALIDITY_THRESHOLD
                and self.validity["kappa_curvature_ratio"] <= VALIDITY_THRESHOLD)


def steepest_descent_L(sc: FieldScenario) -> SteepestDescent:
    """Saddle-point estimate of L for a spatially uniform coupling.

    The saddle t_c is taken at the closest-approach time t_min; the two
    smoothness conditions on kappa are reported as ratios (small is good).
    """
    if not isinstance(sc.coupling, UniformInSpace):
        raise DomainError("steepest descent needs a UniformInSpace coupling")
    kin = closest_approach(sc.wp1, sc.wp2, sc.t0)
    alpha = sc.wp1.alpha
    dv = sc.wp1.velocity - sc.wp2.velocity
    dx = sc.wp1.center - sc.wp2.center
    t_c = kin.t_min
    k = float(sc.coupling.kappa(np.asarray(t_c)))
    kd = float(sc.coupling.rate(np.asarray(t_c)))
    kdd = float(sc.coupling.curvature(np.asarray(t_c)))
    approach = abs(alpha * float(dv @ dx))
    if k == 0:
        rate_ratio = curv_ratio = float("inf")
    else:
        rate_ratio = abs(kd / k) / approach if approach > 0 else (0.0 if kd == 0 else float("inf"))
        curv_ratio = abs(kdd / k) / (alpha * kin.relative_speed**2)
    peak_width = 1.0 / (np.sqrt(alpha) * kin.relative_speed)
    validity = {
        "kappa_rate_ratio": rate_ratio,
        "kappa_curvature_ratio": curv_ratio,
        "spreading": (alpha * (t_c - sc.t0) / sc.wp1.mass) ** 2,
        "window_margin_widths": min(t_c - sc.t0, sc.t - t_c) / peak_width,
    }
    L = alpha * k / (np.pi * kin.relative_speed) * np.exp(-0.5 * alpha * kin.d_min**2)
    return SteepestDescent(float(L), t_c, kin.t_min, kin.d_min, validity)


def correlation_from_L(analyzers: AnalyzerPair, eps_L: float) -> float:
    """-(1 - eps L) n1z n2z - eps L n1.n2."""
    if not 0.0 <= eps_L <= 1.0:
        warnings.warn(f"epsilon*L = {eps_L:.4g} lies outside [0, 1]", stacklevel=2)
    return -(1 - eps_L) * analyzers.zz - eps_L * analyzers.dot


def correlation_field(sc: FieldScenario, L: float) -> float:
    if sc.analyzers is None:
        raise DomainError("scenario carries no analyzers")
    return correlation_from_L(sc.analyzers, sc.epsilon * L)
