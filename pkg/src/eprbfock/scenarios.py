"""Reference scenarios shared by the verification suites, the tests and the
CLI defaults."""

from __future__ import annotations

import numpy as np

from .eprb import AnalyzerPair, unit
from .field import FieldScenario, PointImpulse, SampledGrid, UniformInSpace, Wavepacket

ANALYZERS = AnalyzerPair(unit([0.3, -0.4, 0.8]), unit([-0.5, 0.2, 0.6]))


def head_on() -> FieldScenario:
    return FieldScenario(
        Wavepacket([-2.0, 0.0, 0.0], [1.0, 0.0, 0.0], 4.0, 1.0),
        Wavepacket([2.0, 0.0, 0.0], [-1.0, 0.0, 0.0], 4.0, 1.0),
        UniformInSpace.constant(1.0), epsilon=0.1, t0=0.0, t=4.0, analyzers=ANALYZERS)


def miss_distance() -> FieldScenario:
    return FieldScenario(
        Wavepacket([-2.0, 0.0, 0.0], [1.0, 0.0, 0.0], 4.0, 1.0),
        Wavepacket([2.0, 0.6, -0.2], [-1.0, 0.0, 0.0], 4.0, 1.0),
        UniformInSpace.constant(1.0), epsilon=0.1, t0=0.0, t=4.0, analyzers=ANALYZERS)


def at_rest() -> FieldScenario:
    return FieldScenario(
        Wavepacket([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], 9.0, 1.0),
        Wavepacket([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], 9.0, 1.0),
        UniformInSpace.constant(0.5), epsilon=0.1, t0=0.0, t=1.5, analyzers=ANALYZERS)


def time_varying() -> FieldScenario:
    return FieldScenario(
        Wavepacket([-1.5, 0.2, 0.0], [1.0, 0.0, 0.1], 3.0, 1.0),
        Wavepacket([1.5, 0.0, 0.0], [-0.5, 0.0, 0.0], 3.0, 1.0),
        UniformInSpace.gaussian_pulse(1.0, 1.5, 0.6), epsilon=0.1, t0=0.0, t=4.0,
        analyzers=ANALYZERS)


def narrow_grid() -> FieldScenario:
    """Point-impulse limit: a narrow spatial bump switched on by a short pulse."""
    tc, dur = 1.0, 0.05
    profile = lambda t: np.exp(-0.5 * ((np.asarray(t) - tc) / dur) ** 2) / (np.sqrt(2 * np.pi) * dur)
    grid = SampledGrid.gaussian_bump(1.0, [0.0, 0.0, 0.0], 0.08, 0.4, 21, profile,
                                     tuple(tc + s * dur for s in (-8, -4, -2, 0, 2, 4, 8)))
    return FieldScenario(
        Wavepacket([-0.5, 0.0, 0.0], [0.5, 0.0, 0.0], 2.0, 1.0),
        Wavepacket([0.4, 0.1, 0.0], [-0.4, 0.0, 0.0], 2.0, 1.0),
        grid, epsilon=0.1, t0=0.0, t=2.0, analyzers=ANALYZERS)


def point_impulse() -> FieldScenario:
    return FieldScenario(
        Wavepacket([-0.5, 0.0, 0.0], [0.5, 0.0, 0.0], 2.0, 1.0),
        Wavepacket([0.4, 0.1, 0.0], [-0.4, 0.0, 0.0], 2.0, 1.0),
        PointImpulse(1.0, [0.0, 0.0, 0.0], 1.0), epsilon=0.1, t0=0.0, t=2.0, analyzers=ANALYZERS)


def path_agreement_set() -> dict[str, FieldScenario]:
    return {
        "head-on": head_on(),
        "miss-distance": miss_distance(),
        "at-rest": at_rest(),
        "time-varying": time_varying(),
        "narrow-grid": narrow_grid(),
    }


def steepest_descent_set() -> dict[str, FieldScenario]:
    """Heavy packets so spreading stays negligible across the encounter."""
    def pair(offset, coupling):
        return FieldScenario(
            Wavepacket([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 20.0, 400.0),
            Wavepacket([1.0, offset, 0.0], [-1.0, 0.0, 0.0], 20.0, 400.0),
            coupling, epsilon=0.1, t0=0.0, t=2.0, analyzers=ANALYZERS)

    return {
        "head-on": pair(0.0, UniformInSpace.constant(1.0)),
        "miss": pair(0.3, UniformInSpace.constant(1.0)),
        "slow-pulse": pair(0.2, UniformInSpace.gaussian_pulse(1.0, 0.8, 2.5)),
    }
