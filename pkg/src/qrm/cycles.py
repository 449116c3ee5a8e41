"""Periodic points and cycles of quadratic rational maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polyroots
from .errors import AmbiguousPeriod, PeriodTooLarge, RootFindingStalled
from .points import INF, chordal, is_inf, point_to_json

MAX_PERIOD = 12
LOWER_PERIOD_TOL = 1e-7
AMBIGUITY_FLOOR = 1e-9
NONREPELLING_SLACK = 1e-9
MULTIPLE_ROOT_TOL = 1e-3
NEAR_PARABOLIC_TOL = 1e-2
MULTIPLE_MATCH_TOL = 1e-3
STALL_TOL = 1e-6
MULTIPLE_STALL_TOL = 1e-3


@dataclass(frozen=True)
class CycleRecord:
    period: int
    points: tuple
    eigenvalue: complex
    index: complex
    kind: str
    multiplicity: int = 1
    degeneracy: int | None = None

    def to_json(self):
        return {
            "period": self.period,
            "points": [point_to_json(p) for p in self.points],
            "eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
            "index": [self.index.real, self.index.imag],
            "class": self.kind,
            "multiplicity": self.multiplicity,
        }


def iterate_forms(g, n):
    """Binary forms (N_n, D_n) of degree 2^n with g^n = N_n / D_n.

    Both forms are divided by their largest coefficient modulus after every
    composition step to keep the coefficients inside double range.
    """
    a2, a1, a0, b2, b1, b0 = g.coeffs
    num = np.array([a2, a1, a0], dtype=complex)
    den = np.array([b2, b1, b0], dtype=complex)
    for _ in range(n - 1):
        nn = np.convolve(num, num)
        nd = np.convolve(num, den)
        dd = np.convolve(den, den)
        num, den = a2 * nn + a1 * nd + a0 * dd, b2 * nn + b1 * nd + b0 * dd
        scale = max(np.abs(num).max(), np.abs(den).max())
        num, den = num / scale, den / scale
    return num, den


def fixed_point_form(g, n):
    """Binary form y N_n - x D_n of degree 2^n + 1 whose roots are Fix(g^n)."""
    num, den = iterate_forms(g, n)
    return np.concatenate([[0], num]) - np.concatenate([den, [0]])


def _support_forms(g, n):
    """Which coefficients of N_n and D_n can be nonzero, ignoring cancellation.

    Expanded coefficients of high iterates underflow to 0.0, so exact zeros
    in the float forms cannot be trusted on their own.
    """
    a = np.array([c != 0 for c in g.coeffs], dtype=np.int64)
    num, den = a[:3].copy(), a[3:].copy()
    for _ in range(n - 1):
        nn = np.minimum(np.convolve(num, num), 1)
        nd = np.minimum(np.convolve(num, den), 1)
        dd = np.minimum(np.convolve(den, den), 1)
        num = np.minimum(a[0] * nn + a[1] * nd + a[2] * dd, 1)
        den = np.minimum(a[3] * nn + a[4] * nd + a[5] * dd, 1)
    return num.astype(bool), den.astype(bool)


GENUINE_ZERO_SCALE = 1e-250


def structural_zeros(g, n):
    """(n_inf, n_zero): exact roots of the fixed-point form of g^n at infinity and 0.

    A coefficient counts as zero when it is structurally zero, or when it is
    an exact cancellation between terms too large to have underflowed.
    """
    num, den = iterate_forms(g, n)
    snum, sden = _support_forms(g, n)
    hn = np.concatenate([[0], num])
    hd = np.concatenate([den, [0]])
    sn = np.concatenate([[False], snum])
    sd = np.concatenate([sden, [False]])

    def is_zero(i):
        if not (sn[i] or sd[i]):
            return True
        big = max(abs(hn[i]), abs(hd[i])) > GENUINE_ZERO_SCALE
        return big and hn[i] - hd[i] == 0

    size = len(hn)
    n_inf = 0
    while n_inf < size and is_zero(n_inf):
        n_inf += 1
    n_zero = 0
    while n_zero < size - n_inf and is_zero(size - 1 - n_zero):
        n_zero += 1
    return n_inf, n_zero


def _check_period(n):
    if not 1 <= n <= MAX_PERIOD:
        raise PeriodTooLarge(f"period {n} outside 1..{MAX_PERIOD}")


def _homogeneous_orbit(g, n, x, y, dx, dy):
    """Push (x, y) and its derivative through n steps of the lifted map.

    Each step divides the pair and its derivative by max(|X|, |Y|), which
    rescales the fixed-point form without moving its roots.
    """
    a2, a1, a0, b2, b1, b0 = g.coeffs
    for _ in range(n):
        xx, xy, yy = x * x, x * y, y * y
        dxx, dxy, dyy = 2 * x * dx, dx * y + x * dy, 2 * y * dy
        x, y, dx, dy = (
            a2 * xx + a1 * xy + a0 * yy,
            b2 * xx + b1 * xy + b0 * yy,
            a2 * dxx + a1 * dxy + a0 * dyy,
            b2 * dxx + b1 * dxy + b0 * dyy,
        )
        scale = np.maximum(np.abs(x), np.abs(y))
        scale = np.where(scale > 0, scale, 1.0)
        x, y, dx, dy = x / scale, y / scale, dx / scale, dy / scale
    return x, y, dx, dy


def _fixed_form_eval(g, n, z):
    """Chart-wise values of H = yX - xY and dH/dt with t the chart coordinate.

    Returns (H, H', inside, t, scale, mult) where ``scale`` is
    |(x, y)| |(X, Y)|, so that |H| / scale is half the chordal distance
    between z and g^n(z), and ``mult`` is the derivative of g^n read in the
    chart of z on both sides.
    """
    z = np.asarray(z, dtype=complex)
    inside = np.abs(z) <= 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(inside, z, 1.0 / z)
    one, zero = np.ones_like(z), np.zeros_like(z)
    x, y = np.where(inside, t, one), np.where(inside, one, t)
    dx, dy = np.where(inside, one, zero), np.where(inside, zero, one)
    X, Y, dX, dY = _homogeneous_orbit(g, n, x, y, dx, dy)
    h = y * X - x * Y
    dh = dy * X + y * dX - dx * Y - x * dY
    scale = np.hypot(np.abs(x), np.abs(y)) * np.hypot(np.abs(X), np.abs(Y))
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(inside, (dX * Y - X * dY) / (Y * Y), (dY * X - Y * dX) / (X * X))
    return h, dh, inside, t, scale, mult


def _iterate_ratio(g, n, degree, n_zero):
    """Newton correction p/p' for p(z) = H(z, 1) / z^n_zero, evaluated by iteration."""

    def ratio(z):
        z = np.asarray(z, dtype=complex)
        h, dh, inside, t, _, _ = _fixed_form_eval(g, n, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            dlog = np.where(inside, dh / h, degree * t - t * t * dh / h)
            if n_zero:
                dlog = dlog - n_zero / z
            return 1.0 / dlog

    return ratio


def newton_residual(g, n, z, ratio):
    """Chordal length of the Newton step at z, a backward error in root space.

    The image-space residual chordal(z, g^n(z)) is useless for strongly
    repelling cycles, where |(g^n)'| amplifies rounding to well above 1e-6.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r = ratio(z)
    with np.errstate(all="ignore"):
        step = np.where(np.abs(z) <= 1, np.abs(r), np.abs(r) / np.abs(z) ** 2)
        out = 2 * step / (1 + np.minimum(np.abs(z), 1 / np.abs(z)) ** 2)
    return np.where(np.isfinite(out), out, 0.0)


def _polish(g, n, ratio, z0, steps=4):
    z = complex(z0)
    res = float(chordal_residual(g, n, z)[0])
    for _ in range(steps):
        r = ratio(np.array([z]))[0]
        if not np.isfinite(r) or r == 0:
            break
        cand = z - r
        cres = float(chordal_residual(g, n, cand)[0])
        if cres <= res:
            z, res = cand, cres
        else:
            break
    return z, float(newton_residual(g, n, z, ratio)[0])


def chordal_residual(g, n, z):
    """Chordal distance between z and g^n(z)."""
    h, _, _, _, scale, _ = _fixed_form_eval(g, n, np.atleast_1d(np.asarray(z, dtype=complex)))
    return 2 * np.abs(h) / scale


def _backward_starts(g, n, count, n_inf, n_zero, seed=0):
    """Aberth starting points: the 2^n preimages under g^n of a generic point.

    Iterated preimages equidistribute on the Julia set just as periodic
    points do, which makes them far better seeds than circles.
    """
    rng = np.random.default_rng(seed)
    c0 = 0.7 * np.exp(2j * np.pi * rng.uniform()) + 0.01 * (rng.normal() + 1j * rng.normal())
    a2, a1, a0, b2, b1, b0 = g.coeffs
    pts = np.array([c0])
    with np.errstate(all="ignore"):
        for _ in range(n):
            qa, qb, qc = a2 - pts * b2, a1 - pts * b1, a0 - pts * b0
            disc = np.sqrt(qb * qb - 4 * qa * qc)
            s = np.where(np.abs(-qb - disc) >= np.abs(-qb + disc), -qb - disc, -qb + disc)
            r1 = np.where(s != 0, 2 * qc / s, 0)
            r2 = np.where(qa != 0, s / (2 * qa), 1e12)
            pts = np.concatenate([r1, r2])
    pts = np.where(np.isfinite(pts), pts, 1e12)
    pts = np.concatenate([pts, [c0]])
    order = np.argsort(np.abs(pts))
    pts = pts[order][n_zero : len(pts) - n_inf]
    pts = pts[:count]
    # jitter breaks exact coincidences between seeds
    pts = pts * (1 + 1e-6 * (rng.normal(size=len(pts)) + 1j * rng.normal(size=len(pts))))
    return np.where(pts == 0, 1e-6, pts)


def periodic_points(g, n, seed=0):
    """Fixed points of g^n as ``(point, multiplicity)``; multiplicities sum to 2^n + 1.

    The expanded fixed-point form of g^n fixes the roots at 0 and infinity
    (exact zero coefficients) and supplies Aberth starting points.  The
    refinement itself evaluates the form by iterating the map, which is far
    better conditioned than the expanded coefficients.
    """
    _check_period(n)
    if n == 1:
        return [(fp.point, fp.multiplicity) for fp in g.fixed_points()]
    form = fixed_point_form(g, n)
    n_inf, n_zero = structural_zeros(g, n)
    cs = form[n_inf : len(form) - n_zero]
    ratio = _iterate_ratio(g, n, len(form) - 1, n_zero)
    start = _backward_starts(g, n, len(cs) - 1, n_inf, n_zero, seed=seed)
    roots = polyroots.aberth(cs, seed=seed, ratio=ratio, start=start)
    finite, res = [], []
    for r in roots:
        z, e = _polish(g, n, ratio, r)
        finite.append(z)
        res.append(e)
    res = np.array(res)
    # only points where (g^n)' is near 1 can be pieces of one multiple root;
    # Newton converges linearly there, so they get a looser stall bound
    mult = _fixed_form_eval(g, n, np.array(finite, dtype=complex))[5]
    near_one = np.abs(mult - 1) < MULTIPLE_ROOT_TOL
    bound = np.where(near_one, MULTIPLE_STALL_TOL, STALL_TOL)
    if not np.all(res < bound):
        worst = float(np.max(res / bound)) * STALL_TOL
        raise RootFindingStalled(f"Newton residual {worst:.3g} after polish (period {n})")
    mergeable = [True] * (n_inf + n_zero) + list(near_one)
    pts = polyroots.cluster([INF] * n_inf + [0j] * n_zero + finite, mergeable=mergeable)
    return [(p if is_inf(p) else complex(p), m) for p, m in pts]


def preimages(g, c):
    """The two solutions of g(z) = c, with multiplicity."""
    a2, a1, a0, b2, b1, b0 = g.coeffs
    if is_inf(c):
        return polyroots.form_roots([b2, b1, b0])
    return polyroots.form_roots([a2 - c * b2, a1 - c * b1, a0 - c * b0])


def poles(g, n):
    """Points sent to infinity by g^n, with repetition (2^n of them)."""
    pts = [INF]
    for _ in range(n):
        pts = [z for c in pts for z in preimages(g, c)]
    return pts


def _divisors(n):
    return [m for m in range(1, n) if n % m == 0]


def _exact_period_points(g, n, seed=0):
    """Roots of the fixed-point form of g^n that do not have a lower period.

    Each periodic point of a proper divisor period is matched to its nearest
    root cluster, which is removed.  A remaining root close to a lower-period
    point whose eigenvalue is near a root of unity of the right order is a
    near-parabolic collision: within 1e-9 it is absorbed into that point,
    between 1e-9 and 1e-7 the period is ambiguous.
    """
    pts = list(periodic_points(g, n, seed=seed))
    lower = {}
    for m in _divisors(n):
        for q, _ in periodic_points(g, m, seed=seed):
            if not any(chordal(q, r) < LOWER_PERIOD_TOL for r in lower):
                lower[q] = m
    for q in lower:
        if not pts:
            break
        j = min(range(len(pts)), key=lambda k: chordal(q, pts[k][0]))
        # a multiple root is only resolved to about eps^(1/m)
        tol = LOWER_PERIOD_TOL if pts[j][1] == 1 else MULTIPLE_MATCH_TOL
        if chordal(q, pts[j][0]) < tol:
            pts.pop(j)
    keep = []
    for p, mult in pts:
        absorbed = False
        for q, m in lower.items():
            d = chordal(p, q)
            if d >= LOWER_PERIOD_TOL:
                continue
            _, rho = g.iterate_derivative(q, m)
            if abs(rho ** (n // m) - 1) >= NEAR_PARABOLIC_TOL:
                continue
            if d < AMBIGUITY_FLOOR:
                absorbed = True
                break
            raise AmbiguousPeriod(f"point {p} is {d:.2e} from a point of period {m}")
        if not absorbed:
            keep.append((p, mult))
    return keep


def _group_orbits(g, pts, n):
    remaining = list(pts)
    orbits = []
    while remaining:
        start, mult = remaining.pop(0)
        orbit = [start]
        for _ in range(n - 1):
            image = g(orbit[-1])
            if not remaining:
                raise RootFindingStalled("orbit does not close within the periodic points")
            j = min(range(len(remaining)), key=lambda k: chordal(image, remaining[k][0]))
            if chordal(image, remaining[j][0]) > 1e-5:
                raise RootFindingStalled(
                    f"image {image} of a period-{n} point matches no periodic point"
                )
            orbit.append(remaining.pop(j)[0])
        orbits.append((orbit, mult))
    return orbits


def cycle_eigenvalue(g, points):
    """Chain-rule product of derivatives around the cycle, chart by chart."""
    rho = 1 + 0j
    n = len(points)
    for i, p in enumerate(points):
        rho *= g.chart_step(p, target=points[(i + 1) % n])[1]
    return rho


def cycles(g, n, seed=0):
    """Cycles of exact period n, each with eigenvalue, index and class."""
    from .local import classify, ind_contour

    _check_period(n)
    if n == 1:
        from .local import fixed_point_records

        return [
            CycleRecord(1, (r.point,), r.eigenvalue, r.index, r.kind, r.multiplicity, r.degeneracy)
            for r in fixed_point_records(g)
        ]
    out = []
    for orbit, mult in _group_orbits(g, _exact_period_points(g, n, seed=seed), n):
        rho = cycle_eigenvalue(g, orbit)
        kind, ell = classify(g, orbit[0], rho, period=n, multiplicity=mult)
        if mult == 1:
            index = 1 / (1 - rho)
        else:
            index = ind_contour(g, orbit[0], power=n)
        out.append(CycleRecord(n, tuple(orbit), rho, index, kind, mult, ell))
    return out


def nonrepelling_census(g, nmax, seed=0):
    """All cycles of period <= nmax with |eigenvalue| <= 1 + 1e-9."""
    _check_period(nmax)
    out = []
    for n in range(1, nmax + 1):
        out.extend(c for c in cycles(g, n, seed=seed) if abs(c.eigenvalue) <= 1 + NONREPELLING_SLACK)
    return out
