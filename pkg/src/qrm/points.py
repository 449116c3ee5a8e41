"""Points of the Riemann sphere.

A finite point is a plain ``complex``; the point at infinity is the singleton
``INF``.  Nothing here stands in for infinity with a large number: code that
needs to compute near infinity swaps to the chart w = 1/z.
"""

import math

import numpy as np


class _Infinity:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(z):
    return z is INF


def as_point(z):
    """Coerce user input ("inf", None, numbers) into a sphere point."""
    if z is INF:
        return INF
    if isinstance(z, str):
        if z.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        return complex(z.replace(" ", "").replace("i", "j"))
    z = complex(z)
    if math.isinf(z.real) or math.isinf(z.imag):
        return INF
    return z


def chordal(z, w):
    """Chordal distance on the unit sphere (diameter 2)."""
    if is_inf(z) and is_inf(w):
        return 0.0
    if is_inf(z):
        z, w = w, z
    if is_inf(w):
        return 2.0 / math.sqrt(1.0 + abs(z) ** 2)
    # the 1/z chart keeps large points accurate
    if abs(z) > 1 and abs(w) > 1:
        z, w = 1 / z, 1 / w
    return 2.0 * abs(z - w) / math.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))


def sphere_coords(points):
    """Stereographic embedding onto the unit sphere, one row per point."""
    out = np.empty((len(points), 3))
    for i, z in enumerate(points):
        if is_inf(z):
            out[i] = (0.0, 0.0, 1.0)
        elif abs(z) <= 1:
            r2 = abs(z) ** 2
            out[i] = (2 * z.real / (1 + r2), 2 * z.imag / (1 + r2), (r2 - 1) / (1 + r2))
        else:
            w = 1 / z
            s2 = abs(w) ** 2
            # same point written in w so that 1 - s2 does not cancel near infinity
            out[i] = (2 * w.real / (1 + s2), -2 * w.imag / (1 + s2), (1 - s2) / (1 + s2))
    return out


def point_to_json(z):
    return "inf" if is_inf(z) else [z.real, z.imag]


def point_from_json(v):
    if isinstance(v, str):
        return as_point(v)
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return as_point(v)
