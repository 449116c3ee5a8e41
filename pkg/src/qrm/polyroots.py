"""All-roots polynomial solving on the Riemann sphere.

Polynomials are coefficient arrays in descending order (``numpy.polyval``
convention).  A binary form of degree ``d`` uses the same array: entry ``i``
multiplies ``x**(d-i) * y**i``, so exact zeros at the front are roots at
infinity and exact zeros at the back are roots at zero.
"""

import cmath
import math

import numpy as np
from scipy.spatial import cKDTree

from .errors import RootFindingStalled
from .points import INF, chordal, is_inf, sphere_coords

_OMEGA = cmath.exp(2j * math.pi / 3)


def newton_ratio(coeffs, z):
    """Return p(z)/p'(z) for an array of points, evaluated in a stable chart.

    Points with |z| > 1 are handled via the reversed polynomial in w = 1/z,
    which keeps the evaluation free of overflow for large degree.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    n = len(coeffs) - 1
    out = np.empty_like(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        _newton_ratio_into(coeffs, z, n, out)
    return out


def _newton_ratio_into(coeffs, z, n, out):
    inside = np.abs(z) <= 1.0
    if inside.any():
        zi = z[inside]
        p = np.zeros_like(zi)
        dp = np.zeros_like(zi)
        for c in coeffs:
            dp = dp * zi + p
            p = p * zi + c
        out[inside] = p / dp
    if (~inside).any():
        w = 1.0 / z[~inside]
        rev = coeffs[::-1]
        q = np.zeros_like(w)
        dq = np.zeros_like(w)
        for c in rev:
            dq = dq * w + q
            q = q * w + c
        # p(z) = z^n q(w)  =>  p'/p = n/z - w^2 q'/q
        out[~inside] = 1.0 / (n * w - w * w * dq / q)


def relative_residual(coeffs, z):
    """|p(z)| divided by sum |a_k| |z|^k, computed in the stable chart."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if abs(z) > 1.0:
        coeffs = coeffs[::-1]
        z = 1.0 / z
    num = abs(np.polyval(coeffs, z))
    den = np.polyval(np.abs(coeffs), abs(z))
    return num / den if den > 0 else 0.0


def initial_points(coeffs, seed=0):
    """Starting points on circles with radii from the Newton polygon.

    The upper convex hull of (k, log|a_k|) gives one radius per hull edge,
    carrying as many starting points as the edge is long.  The angular offset
    is perturbed with a seeded generator to break symmetry.  Coefficients
    that are zero at either end (typically underflow) get circles just
    inside the smallest or just outside the largest hull radius.
    """
    a = np.asarray(coeffs, dtype=complex)[::-1]  # ascending
    n = len(a) - 1
    rng = np.random.default_rng(seed)
    mags = np.abs(a)
    idx = [k for k in range(n + 1) if mags[k] > 0]
    logs = {k: math.log(mags[k]) for k in idx}
    hull = []
    for k in idx:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # drop j if it lies on or below segment i-k
            if (logs[j] - logs[i]) * (k - i) <= (logs[k] - logs[i]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    rings = []
    for i, j in zip(hull[:-1], hull[1:]):
        rings.append((math.exp((logs[i] - logs[j]) / (j - i)), j - i))
    radii = [r for r, _ in rings] or [1.0]
    if hull and hull[0] > 0:
        rings.insert(0, (0.5 * min(radii), hull[0]))
    if hull and hull[-1] < n:
        rings.append((2.0 * max(radii), n - hull[-1]))
    points = []
    for r, m in rings:
        phase = rng.uniform(0, 2 * math.pi)
        for t in range(m):
            points.append(r * cmath.exp(1j * (phase + 2 * math.pi * t / m + 0.4)))
    return np.array(points, dtype=complex)


def aberth(coeffs, tol=1e-14, max_iter=800, seed=0, ratio=None, start=None):
    """Simultaneous Aberth-Ehrlich refinement of all roots.

    ``ratio`` overrides the Newton correction p/p' (it receives an array of
    points); ``start`` overrides the Newton-polygon starting points.  Both
    let callers refine roots of a polynomial they can evaluate more
    accurately than through its expanded coefficients.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    n = len(coeffs) - 1
    if n == 0:
        return np.array([], dtype=complex)
    if n == 1 and ratio is None:
        return np.array([-coeffs[1] / coeffs[0]])
    if ratio is None:
        ratio = lambda pts: newton_ratio(coeffs, pts)
    z = initial_points(coeffs, seed) if start is None else np.array(start, dtype=complex)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        r = ratio(z[idx])
        diff = z[idx, None] - z[None, :]
        diff[np.arange(idx.size), idx] = 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / diff
            inv[np.arange(idx.size), idx] = 0.0
            s = inv.sum(axis=1)
            step = r / (1.0 - r * s)
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        z[idx] = z[idx] - step
        done = np.abs(step) <= tol * np.maximum(np.abs(z[idx]), 1e-300)
        done |= step == 0.0
        active[idx[done]] = False
    return z


def polish(coeffs, z, steps=3):
    """A few individual Newton steps; never moves a root that gets worse."""
    z = complex(z)
    res = relative_residual(coeffs, z)
    for _ in range(steps):
        r = newton_ratio(coeffs, [z])[0]
        if not np.isfinite(r):
            break
        cand = z - r
        cres = relative_residual(coeffs, cand)
        if cres <= res:
            z, res = cand, cres
        else:
            break
    return complex(z)


def cubic_roots(a, b, c, d):
    """Roots of a z^3 + b z^2 + c z + d (a != 0) by Cardano's formula."""
    B, C, D = b / a, c / a, d / a
    shift = B / 3
    p = C - B * B / 3
    q = 2 * B ** 3 / 27 - B * C / 3 + D
    sq = cmath.sqrt((q / 2) ** 2 + (p / 3) ** 3)
    u3 = -q / 2 + sq
    alt = -q / 2 - sq
    if abs(alt) > abs(u3):
        u3 = alt
    if u3 == 0:
        return [-shift] * 3
    u = u3 ** (1 / 3)
    v = -p / (3 * u)
    return [u * _OMEGA ** k + v * _OMEGA ** (-k) - shift for k in range(3)]


def _strip(coeffs):
    """Split exact zero leading/trailing coefficients off a form."""
    coeffs = [complex(c) for c in coeffs]
    n_inf = 0
    while n_inf < len(coeffs) and coeffs[n_inf] == 0:
        n_inf += 1
    if n_inf == len(coeffs):
        raise ValueError("zero form has no well-defined roots")
    coeffs = coeffs[n_inf:]
    n_zero = 0
    while coeffs[-1 - n_zero] == 0:
        n_zero += 1
    if n_zero:
        coeffs = coeffs[:-n_zero]
    return coeffs, n_inf, n_zero


def _solve_small(coeffs):
    """Closed-form roots for degree <= 3, in the better-conditioned chart."""
    n = len(coeffs) - 1
    flip = abs(coeffs[0]) < abs(coeffs[-1])
    cs = coeffs[::-1] if flip else coeffs
    if n == 1:
        roots = [-cs[1] / cs[0]]
    elif n == 2:
        a, b, c = cs
        disc = cmath.sqrt(b * b - 4 * a * c)
        s = -b - disc if abs(-b - disc) >= abs(-b + disc) else -b + disc
        roots = [s / (2 * a), 2 * c / s] if s != 0 else [0j, 0j]
    else:
        roots = cubic_roots(*cs)
    roots = [complex(r) for r in roots]
    if flip:
        roots = [1 / r if r != 0 else INF for r in roots]
    return roots


def form_roots(coeffs, seed=0, check=True):
    """Roots of a binary form as sphere points, with multiplicity by repetition.

    Closed forms are used up to degree three (one Newton polish step each),
    Aberth iteration plus Newton polish beyond that.
    """
    cs, n_inf, n_zero = _strip(coeffs)
    n = len(cs) - 1
    if n == 0:
        finite = []
    elif n <= 3:
        finite = [polish(cs, r, steps=1) if not is_inf(r) else r for r in _solve_small(cs)]
    else:
        finite = [polish(cs, r) for r in aberth(cs, seed=seed)]
        if check:
            worst = max(relative_residual(cs, r) for r in finite)
            if not worst < 1e-6:
                raise RootFindingStalled(f"residual {worst:.3g} after polish (degree {n})")
    return [INF] * n_inf + [0j] * n_zero + list(finite)


def _chart_value(z, chart):
    return z if chart == "z" else (0j if is_inf(z) else 1 / z)


def cluster(points, rel=1e-5, isolation=1e-3, mergeable=None, rel_multiple=1e-2):
    """Group numerically coincident sphere points.

    Two points merge when their chordal distance is below ``rel`` times the
    local spacing, where the spacing of a point is its chordal distance to the
    nearest point farther than ``isolation`` (capped at 1).  Returns a list of
    ``(representative, multiplicity)``; the representative is the mean of the
    members in the chart of the first member.

    ``mergeable`` (a boolean per point) marks the points that may belong to
    a multiple root; only those merge, and with the wider radius
    ``rel_multiple`` times the spacing, because a root of multiplicity m is
    resolved only to about eps^(1/m) in double precision.
    """
    pts = list(points)
    m = len(pts)
    if m == 0:
        return []
    xyz = sphere_coords(pts)
    tree = cKDTree(xyz)
    k = min(m, 8)
    radius = np.full(m, rel)
    while True:
        dd, _ = tree.query(xyz, k=k)
        dd = np.asarray(dd)
        if dd.ndim == 1:
            dd = dd[:, None]
        far = np.where(dd > isolation, dd, np.inf).min(axis=1)
        unresolved = ~np.isfinite(far)
        radius = rel * np.minimum(1.0, np.where(unresolved, 1.0, far))
        if not unresolved.any() or k == m:
            break
        k = min(m, 4 * k)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if mergeable is not None:
        mergeable = np.asarray(mergeable, dtype=bool)
        radius = np.where(mergeable, radius * (rel_multiple / rel), 0.0)
    for i, j in tree.query_pairs(float(radius.max())):
        if chordal(pts[i], pts[j]) < max(radius[i], radius[j]) and (
            mergeable is None or (mergeable[i] and mergeable[j])
        ):
            parent[find(i)] = find(j)
    groups = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in sorted(groups.values(), key=lambda g: g[0]):
        mp = [pts[i] for i in members]
        if any(is_inf(p) for p in mp):
            rep = INF
        else:
            chart = "z" if abs(mp[0]) <= 1 else "w"
            mean = sum(_chart_value(p, chart) for p in mp) / len(mp)
            rep = mean if chart == "z" else (INF if mean == 0 else 1 / mean)
        out.append((rep, len(mp)))
    return out
