"""Closed-form square-well references used by several test modules."""

import math

import numpy as np
from scipy.optimize import brentq


def swave_well_eta(k, V0, r0):
    """s-wave phase for the attractive square well, defined modulo pi."""
    kp = math.sqrt(k * k + V0)
    return math.atan(k / kp * math.tan(kp * r0)) - k * r0


def swave_well_levels(V0, r0):
    """s-wave square-well levels: roots of x cos(x r0) + kappa sin(x r0) = 0.

    This is the matching condition x cot(x r0) = -kappa cleared of the cot
    poles (x = sqrt(V0+E), kappa = sqrt(-E)).
    """
    def g(E):
        x = math.sqrt(V0 + E)
        return x * math.cos(x * r0) + math.sqrt(-E) * math.sin(x * r0)

    levels = []
    grid = np.linspace(-V0 * (1 - 1e-9), -1e-9, 20000)
    vals = [g(float(E)) for E in grid]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa * fb < 0:
            levels.append(brentq(g, a, b, xtol=1e-12))
    return sorted(levels)


def circ_dist(a, b):
    """Distance between two angles defined modulo pi."""
    return abs((a - b + math.pi / 2) % math.pi - math.pi / 2)
