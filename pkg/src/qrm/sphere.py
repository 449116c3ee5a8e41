"""Quadratic rational maps and Möbius transformations of the sphere."""

from __future__ import annotations

import json
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import polyroots
from .errors import DegenerateMap, ValidationError
from .points import INF, as_point, chordal, is_inf, point_from_json, point_to_json

__all__ = [
    "INF",
    "is_inf",
    "chordal",
    "FixedPoint",
    "MobiusTransform",
    "RationalMap2",
    "canonical_chart",
]

RESULTANT_FLOOR = 1e-12

FixedPoint = namedtuple("FixedPoint", "point multiplicity eigenvalue")


def canonical_chart(z):
    """'z' for |z| <= 1, else 'w' (the coordinate 1/z, which is 0 at INF)."""
    return "z" if not is_inf(z) and abs(z) <= 1 else "w"


def chart_coordinate(z, chart):
    if chart == "z":
        return z
    return 0j if is_inf(z) else 1 / z


def _subst(form, a, b, c, d):
    """Coefficients of form(a x + b y, c x + d y) for a binary quadratic form."""
    f2, f1, f0 = form
    return (
        f2 * a * a + f1 * a * c + f0 * c * c,
        2 * f2 * a * b + f1 * (a * d + b * c) + 2 * f0 * c * d,
        f2 * b * b + f1 * b * d + f0 * d * d,
    )


@dataclass(frozen=True)
class MobiusTransform:
    """z -> (p z + q) / (r z + s)."""

    p: complex
    q: complex
    r: complex
    s: complex

    def __post_init__(self):
        if self.det() == 0:
            raise ValidationError("Möbius transformation with ps - qr = 0")

    def det(self):
        return self.p * self.s - self.q * self.r

    def __call__(self, z):
        if is_inf(z):
            return INF if self.r == 0 else self.p / self.r
        den = self.r * z + self.s
        if den == 0:
            return INF
        return (self.p * z + self.q) / den

    def inverse(self):
        return MobiusTransform(self.s, -self.q, -self.r, self.p)

    def __matmul__(self, other):
        """Composition: (self @ other)(z) = self(other(z))."""
        a, b, c, d = self.p, self.q, self.r, self.s
        e, f, g, h = other.p, other.q, other.r, other.s
        return MobiusTransform(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def _to_zero_inf_one(cls, z1, z2, z3):
        if is_inf(z1):
            return cls(0, z3 - z2, 1, -z2)
        if is_inf(z2):
            return cls(1, -z1, 0, z3 - z1)
        if is_inf(z3):
            return cls(1, -z1, 1, -z2)
        return cls(z2 - z3, -z1 * (z2 - z3), z1 - z3, -z2 * (z1 - z3))

    @classmethod
    def from_points(cls, src, dst):
        """The unique transformation sending three distinct points src[i] to dst[i]."""
        s = cls._to_zero_inf_one(*src)
        t = cls._to_zero_inf_one(*dst)
        return t.inverse() @ s

    def normalized(self):
        scale = max((self.p, self.q, self.r, self.s), key=abs)
        return MobiusTransform(self.p / scale, self.q / scale, self.r / scale, self.s / scale)


class RationalMap2:
    """g(z) = (A2 z^2 + A1 z + A0) / (B2 z^2 + B1 z + B0), up to common scale.

    Coefficients are stored divided by the one of largest modulus.  Maps whose
    normalized resultant has modulus below 1e-12 are rejected.
    """

    __slots__ = ("coeffs", "_res")

    def __init__(self, coeffs, check=True):
        cs = [complex(c) for c in coeffs]
        if len(cs) != 6:
            raise ValidationError("a quadratic rational map needs six coefficients")
        if not all(np.isfinite(c) for c in cs):
            raise ValidationError("non-finite coefficient")
        k = int(np.argmax([abs(c) for c in cs]))
        if cs[k] == 0:
            raise DegenerateMap("all coefficients vanish")
        lead = cs[k]
        self.coeffs = tuple(c / lead for c in cs)
        self._res = None
        if check and not abs(self.resultant()) > RESULTANT_FLOOR:
            raise DegenerateMap(f"resultant {abs(self.resultant()):.3g} below {RESULTANT_FLOOR}")

    # -- construction and data -------------------------------------------
    @classmethod
    def from_numden(cls, num, den, check=True):
        """``num`` and ``den`` in descending order, each padded to length three."""
        num = [0] * (3 - len(num)) + list(num)
        den = [0] * (3 - len(den)) + list(den)
        return cls(num + den, check=check)

    @property
    def num(self):
        return self.coeffs[:3]

    @property
    def den(self):
        return self.coeffs[3:]

    def resultant(self):
        if self._res is None:
            a2, a1, a0, b2, b1, b0 = self.coeffs
            m = np.array(
                [[a2, a1, a0, 0], [0, a2, a1, a0], [b2, b1, b0, 0], [0, b2, b1, b0]], dtype=complex
            )
            self._res = complex(np.linalg.det(m))
        return self._res

    def __eq__(self, other):
        if not isinstance(other, RationalMap2):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        a2, a1, a0, b2, b1, b0 = (complex(round(c.real, 12), round(c.imag, 12)) for c in self.coeffs)
        return f"RationalMap2(({a2}, {a1}, {a0}) / ({b2}, {b1}, {b0}))"

    def close_to(self, other, tol=1e-12):
        return max(abs(a - b) for a, b in zip(self.coeffs, other.coeffs)) < tol

    def to_json(self):
        return {"coeffs": [[c.real, c.imag] for c in self.coeffs]}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        if isinstance(data, dict):
            data = data["coeffs"]
        return cls([point_from_json(c) if isinstance(c, (list, tuple)) else complex(c) for c in data])

    # -- charts ----------------------------------------------------------
    def chart_coeffs(self, src, dst):
        """Coefficients of the map read in the given source/target charts."""
        num, den = self.num, self.den
        if src == "w":
            num, den = num[::-1], den[::-1]
        if dst == "w":
            num, den = den, num
        return num, den

    def _chart_eval(self, u, src, dst, derivative=False):
        (a2, a1, a0), (b2, b1, b0) = self.chart_coeffs(src, dst)
        n = (a2 * u + a1) * u + a0
        d = (b2 * u + b1) * u + b0
        if not derivative:
            return n, d
        dn = 2 * a2 * u + a1
        dd = 2 * b2 * u + b1
        return (dn * d - n * dd) / (d * d)

    # -- evaluation --------------------------------------------------------
    def __call__(self, z):
        return self.evaluate(z)

    def evaluate(self, z):
        z = as_point(z)
        src = canonical_chart(z)
        n, d = self._chart_eval(chart_coordinate(z, src), src, "z")
        if d == 0:
            return INF
        return n / d

    def multiplier(self, z):
        """Derivative at z; at a fixed point this is the eigenvalue.

        Ordinary derivative when z and g(z) are finite, otherwise computed in
        the chart w = 1/z on whichever side is infinite.
        """
        z = as_point(z)
        gz = self.evaluate(z)
        src = "w" if is_inf(z) else "z"
        dst = "w" if is_inf(gz) else "z"
        return self._chart_eval(chart_coordinate(z, src), src, dst, derivative=True)

    def chart_step(self, z, target=None):
        """Image of z and the derivative between canonical charts.

        Products of these derivatives around a cycle telescope to the
        eigenvalue regardless of which charts the points live in.  ``target``
        fixes the chart of the image (pass the next point of a cycle).
        """
        z = as_point(z)
        gz = self.evaluate(z)
        src = canonical_chart(z)
        dst = canonical_chart(gz if target is None else target)
        return gz, self._chart_eval(chart_coordinate(z, src), src, dst, derivative=True)

    def iterate(self, z, n):
        orbit = [as_point(z)]
        for _ in range(n):
            orbit.append(self.evaluate(orbit[-1]))
        return orbit

    def iterate_derivative(self, z, n):
        """(g^n(z), derivative of g^n at z) in the canonical charts of z and g^n(z)."""
        z = as_point(z)
        orbit = self.iterate(z, n)
        deriv = 1 + 0j
        for a, b in zip(orbit[:-1], orbit[1:]):
            deriv *= self.chart_step(a, target=b)[1]
        return orbit[-1], deriv

    # -- critical and fixed points ----------------------------------------
    def critical_form(self):
        a2, a1, a0, b2, b1, b0 = self.coeffs
        return [a2 * b1 - a1 * b2, 2 * (a2 * b0 - a0 * b2), a1 * b0 - a0 * b1]

    def critical_points(self):
        return tuple(polyroots.form_roots(self.critical_form()))

    def fixed_form(self):
        """Binary cubic whose roots are the fixed points (x^3 coefficient first)."""
        a2, a1, a0, b2, b1, b0 = self.coeffs
        return [b2, b1 - a2, b0 - a1, -a0]

    def fixed_points(self):
        """Fixed points with multiplicity, summing to three."""
        roots = polyroots.form_roots(self.fixed_form())
        return [FixedPoint(pt, m, self.multiplier(pt)) for pt, m in polyroots.cluster(roots)]

    # -- conjugation -------------------------------------------------------
    def conjugate(self, m: MobiusTransform):
        """The map m ∘ g ∘ m^{-1}."""
        inv = m.inverse()
        num = _subst(self.num, inv.p, inv.q, inv.r, inv.s)
        den = _subst(self.den, inv.p, inv.q, inv.r, inv.s)
        new_num = [m.p * a + m.q * b for a, b in zip(num, den)]
        new_den = [m.r * a + m.s * b for a, b in zip(num, den)]
        return RationalMap2(new_num + new_den)

    def flipped(self):
        """The same map read in the coordinate w = 1/z on both sides."""
        num, den = self.chart_coeffs("w", "w")
        return RationalMap2(list(num) + list(den))


def quadratic_polynomial(c):
    """z^2 + c."""
    return RationalMap2([1, 0, c, 0, 0, 1])


def power_map():
    """z^2."""
    return RationalMap2([1, 0, 0, 0, 0, 1])
