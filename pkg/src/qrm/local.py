"""Topological multiplicity, holomorphic index and fixed-point classification.

Both local invariants are contour integrals around the fixed point,

    mult = (1/2πi) ∮ (1 - h'(z)) / (z - h(z)) dz,
    ind  = (1/2πi) ∮ 1 / (z - h(z)) dz,

with h an iterate of the map, evaluated by the trapezoid rule on a circle.
Fixed points at infinity are moved to 0 by the chart swap z -> 1/z first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ContourTooLarge, NeedsHigherPrecision, NonConvergent, PeriodTooLarge
from .points import is_inf, point_to_json

SUPERATTRACTING_TOL = 1e-9
INDIFFERENT_TOL = 1e-9
PARABOLIC_TOL = 1e-9
MAX_ROTATION_DENOMINATOR = 64
QUADRATURE_TOL = 1e-10
MIN_SAMPLES = 512
MAX_SAMPLES = 1 << 17
SELF_MATCH_TOL = 1e-4

KINDS = (
    "attracting",
    "repelling",
    "indifferent-irrational",
    "parabolic-attracting",
    "parabolic-indifferent",
    "parabolic-repelling",
    "superattracting",
)


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    samples: int = MIN_SAMPLES


@dataclass(frozen=True)
class FixedPointRecord:
    point: object
    eigenvalue: complex
    multiplicity: int
    index: complex
    degeneracy: int | None
    kind: str

    def to_json(self):
        return {
            "point": point_to_json(self.point),
            "eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
            "multiplicity": self.multiplicity,
            "index": [self.index.real, self.index.imag],
            "degeneracy": self.degeneracy,
            "class": self.kind,
        }


def _localize(g, zeta):
    """Chart in which zeta is finite: the map itself, or its 1/z conjugate."""
    if is_inf(zeta):
        return g.flipped(), 0j
    return g, complex(zeta)


def eval_iterate(g, z, n):
    """Vectorized (g^n(z), (g^n)'(z)) in the z-chart at both ends.

    Intermediate orbit points switch to the 1/z chart whenever they leave
    the unit disc, so orbits passing near infinity stay accurate.
    """
    z = np.asarray(z, dtype=complex)
    u = z.copy()
    in_w = np.zeros(z.shape, dtype=bool)
    deriv = np.ones(z.shape, dtype=complex)
    zz = g.chart_coeffs("z", "z")
    wz = g.chart_coeffs("w", "z")
    for step in range(n):
        (a2, a1, a0), (b2, b1, b0) = zz
        (c2, c1, c0), (e2, e1, e0) = wz
        num = np.where(in_w, (c2 * u + c1) * u + c0, (a2 * u + a1) * u + a0)
        den = np.where(in_w, (e2 * u + e1) * u + e0, (b2 * u + b1) * u + b0)
        dnum = np.where(in_w, 2 * c2 * u + c1, 2 * a2 * u + a1)
        dden = np.where(in_w, 2 * e2 * u + e1, 2 * b2 * u + b1)
        last = step == n - 1
        to_w = np.zeros(z.shape, dtype=bool) if last else np.abs(num) > np.abs(den)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = np.where(to_w, den / num, num / den)
            d = np.where(
                to_w,
                (dden * num - den * dnum) / (num * num),
                (dnum * den - num * dden) / (den * den),
            )
            deriv = deriv * d
        u, in_w = val, to_w
    return u, deriv


def _trapezoid(g, center, radius, samples, power, integrand):
    theta = 2 * np.pi * np.arange(samples) / samples
    e = np.exp(1j * theta)
    z = center + radius * e
    h, dh = eval_iterate(g, z, power)
    with np.errstate(divide="ignore", invalid="ignore"):
        if integrand == "mult":
            f = (1 - dh) / (z - h)
        else:
            f = 1 / (z - h)
    if not np.all(np.isfinite(f)):
        raise NonConvergent("integrand singular on the contour")
    return complex(radius * np.mean(f * e))


def contour_integral(g, center, radius, power=1, integrand="mult", samples=MIN_SAMPLES):
    """Trapezoid rule, doubling the sample count until two results agree to 1e-10."""
    prev = _trapezoid(g, center, radius, samples, power, integrand)
    while samples < MAX_SAMPLES:
        samples *= 2
        cur = _trapezoid(g, center, radius, samples, power, integrand)
        if abs(cur - prev) < QUADRATURE_TOL:
            return cur
        prev = cur
    return prev


def _obstacles(g, zeta, power):
    """Other fixed points and poles of g^power, in the chart where zeta is finite.

    The cluster of periodic points nearest to zeta is zeta itself; a
    degenerate point of the iterate may be resolved a little off-center, so
    it is matched by proximity rather than by a tight tolerance.
    """
    from .cycles import periodic_points, poles

    h, c = _localize(g, zeta)
    pts = [p for p, _ in periodic_points(h, power) if not is_inf(p)]
    if pts:
        k = min(range(len(pts)), key=lambda i: abs(pts[i] - c))
        if abs(pts[k] - c) < SELF_MATCH_TOL * max(1.0, abs(c)):
            pts.pop(k)
    pts += [p for p in poles(h, power) if not is_inf(p)]
    return h, c, pts


def default_contour(g, zeta, power=1):
    """ContourSpec centered at zeta with radius half the distance to the nearest obstacle."""
    h, c, obstacles = _obstacles(g, zeta, power)
    nearest = min((abs(p - c) for p in obstacles), default=2.0)
    return ContourSpec(c, 0.5 * nearest)


def _prepare(g, zeta, spec, power):
    if spec is None:
        spec = default_contour(g, zeta, power)
        h, _ = _localize(g, zeta)
        return h, spec
    h, c, obstacles = _obstacles(g, zeta, power)
    for p in obstacles:
        if abs(p - spec.center) <= spec.radius:
            raise ContourTooLarge(f"{p} lies inside the contour of radius {spec.radius}")
    return h, spec


def mult_contour(g, zeta, spec=None, power=1):
    """Topological multiplicity of zeta as a fixed point of g^power."""
    h, spec = _prepare(g, zeta, spec, power)
    val = contour_integral(h, spec.center, spec.radius, power, "mult", spec.samples)
    m = round(val.real)
    if abs(val - m) >= 0.25 or m < 1:
        raise NonConvergent(f"multiplicity integral {val} is not near a positive integer")
    return int(m)


def ind_contour(g, zeta, spec=None, power=1):
    """Holomorphic index of zeta as a fixed point of g^power."""
    h, spec = _prepare(g, zeta, spec, power)
    return contour_integral(h, spec.center, spec.radius, power, "ind", spec.samples)


def rotation_number(rho):
    """(p, q) when rho is within 1e-9 of exp(2πi p/q) with q <= 64, else None."""
    if abs(abs(rho) - 1) > PARABOLIC_TOL:
        return None
    t = (math.atan2(rho.imag, rho.real) / (2 * math.pi)) % 1.0
    frac = Fraction(t).limit_denominator(MAX_ROTATION_DENOMINATOR)
    p, q = frac.numerator % frac.denominator, frac.denominator
    root = complex(math.cos(2 * math.pi * p / q), math.sin(2 * math.pi * p / q))
    if abs(rho - root) < PARABOLIC_TOL:
        return p, q
    return None


def classify(g, zeta, rho, period=1, multiplicity=1):
    """Class tag and degeneracy of a fixed point (or a point of the given period).

    Parabolic points are resolved with the multiplicity ``l q + 1`` and the
    index of the iterate g^(period q), compared against (l q + 1) / 2.
    A multiple fixed point has eigenvalue exactly 1 whatever its numerical
    estimate says.
    """
    if multiplicity > 1:
        rho = 1 + 0j
    r = abs(rho)
    if r < SUPERATTRACTING_TOL:
        return "superattracting", None
    if r < 1 - INDIFFERENT_TOL:
        return "attracting", None
    if r > 1 + INDIFFERENT_TOL:
        return "repelling", None
    rot = rotation_number(rho)
    if rot is None:
        return "indifferent-irrational", None
    _, q = rot
    power = period * q
    if power > 12:
        raise PeriodTooLarge(f"parabolic analysis needs the {power}-th iterate")
    m = mult_contour(g, zeta, power=power)
    ell, rem = divmod(m - 1, q)
    if rem or ell < 1:
        raise NonConvergent(f"multiplicity {m} of iterate is not of the form l*{q}+1")
    ind = ind_contour(g, zeta, power=power)
    threshold = (ell * q + 1) / 2
    gap = ind.real - threshold
    if abs(gap) < 1e-10:
        raise NeedsHigherPrecision(f"Re ind - (lq+1)/2 = {gap:.2e}")
    return ("parabolic-attracting" if gap > 0 else "parabolic-repelling"), ell


def fixed_point_records(g):
    """Every fixed point with eigenvalue, multiplicity, index and class."""
    out = []
    for fp in g.fixed_points():
        kind, ell = classify(g, fp.point, fp.eigenvalue, multiplicity=fp.multiplicity)
        if fp.multiplicity == 1 and rotation_number(fp.eigenvalue) != (0, 1):
            index = 1 / (1 - fp.eigenvalue)
        else:
            index = ind_contour(g, fp.point)
        out.append(FixedPointRecord(fp.point, fp.eigenvalue, fp.multiplicity, index, ell, kind))
    return out


def index_sum_audit(g):
    """|Σ ind - 1| over Fix(g); raises if the multiplicities do not sum to 3."""
    recs = fixed_point_records(g)
    total = sum(r.multiplicity for r in recs)
    if total != 3:
        raise NonConvergent(f"fixed-point multiplicities sum to {total}, not 3")
    return abs(sum(r.index for r in recs) - 1)


def census_weight(kind, degeneracy):
    """Contribution of a nonrepelling cycle to the Fatou-Shishikura count."""
    if kind in ("parabolic-attracting", "parabolic-indifferent"):
        return (degeneracy or 1) + 1
    if kind == "parabolic-repelling":
        return degeneracy or 1
    return 1


def fs_audit(g, nmax):
    """Census of nonrepelling cycles up to period nmax with a violation flag."""
    from .cycles import nonrepelling_census

    census = nonrepelling_census(g, nmax)
    count = sum(census_weight(c.kind, c.degeneracy) for c in census)
    return {
        "cycles": [
            {
                "period": c.period,
                "eigenvalue": [c.eigenvalue.real, c.eigenvalue.imag],
                "class": c.kind,
                "index": [c.index.real, c.index.imag],
                "degeneracy": c.degeneracy,
                "points": [point_to_json(p) for p in c.points],
            }
            for c in census
        ],
        "count": count,
        "violation": count > 2,
    }
