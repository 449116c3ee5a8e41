"""Hyperbolic-type classification of parameters and bifurcation-locus images.

Critical orbits are iterated in homogeneous coordinates [x : y], rescaled
every step, so orbits through ∞ need no special casing; many maps are
iterated at once from per-pixel coefficient arrays.

Per critical point the detector reports one of

    attracted    the orbit recurs within ``tol`` with some period p <= 16
                 and the cycle found has |ρ| < 1
    drift        ∞ is a parabolic fixed point and the orbit creeps to it
    undecided    neither happened within ``max_iter`` steps

and the two reports combine into B, C, D, E, escape, mixed or undecided.
B, C and E are told apart by a phase heuristic (see ``_same_cycle_tag``).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import QRMError, ValidationError
from .moduli import ModuliPoint, from_moduli
from .points import INF, is_inf

MAX_PERIOD = 16
MAX_RESOLUTION = 4096
CHECK_EVERY = 64
DRIFT_RADIUS = 1e4
DRIFT_STEPS = 50
DRIFT_STABILITY = 1e-2
PARABOLIC_TOL = 1e-9
SAME_CYCLE_TOL = 1e-5

TAGS = ("undecided", "escape", "mixed", "B", "C", "D", "E")
PLANES = ("gk-kappa", "per2-zero-slice")
PALETTE = np.array(
    [
        (0, 0, 0),
        (255, 255, 255),
        (200, 200, 200),
        (230, 80, 60),
        (240, 170, 40),
        (60, 120, 220),
        (90, 190, 90),
        (160, 90, 200),
        (40, 190, 190),
        (120, 70, 40),
    ],
    dtype=np.uint8,
)


# -- jobs and results -------------------------------------------------------------


@dataclass(frozen=True)
class RenderJob:
    plane: str
    center: complex = 0j
    width: float = 8.0
    resolution: int = 512
    max_iter: int = 20000
    tol: float = 1e-8
    escape: float = DRIFT_RADIUS

    def __post_init__(self):
        if self.plane not in PLANES:
            raise ValidationError(f"plane must be one of {PLANES}, not {self.plane!r}")
        if not 1 <= self.resolution <= MAX_RESOLUTION:
            raise ValidationError(f"resolution must be in [1, {MAX_RESOLUTION}]")
        if not (self.tol > 0 and self.escape > 0 and self.width > 0):
            raise ValidationError("tolerances and width must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be positive")

    @classmethod
    def default(cls, plane, **kw):
        width = 8.0 if plane == "gk-kappa" else 12.0
        return cls(plane, width=kw.pop("width", width), **kw)

    def grid(self):
        """Pixel-center parameters, row 0 at the top (largest imaginary part)."""
        n = self.resolution
        offs = ((np.arange(n) + 0.5) / n - 0.5) * self.width
        c = complex(self.center)
        return (c.real + offs[None, :]) + 1j * (c.imag - offs[:, None])

    def to_json(self):
        d = asdict(self)
        d["center"] = [complex(self.center).real, complex(self.center).imag]
        return d


@dataclass(frozen=True)
class PixelClass:
    tags: tuple  # per critical point: "attracted", "drift" or "undecided"
    periods: tuple  # per critical point, None unless attracted
    combined: str
    multipliers: tuple = ()
    heuristic: bool = False  # combined tag rests on the B/C/E phase heuristic

    def period_pair(self):
        ps = [p for p in self.periods if p is not None]
        return tuple(sorted(ps))

    def to_json(self):
        return {
            "critical": [
                {"tag": t, "period": p, "multiplier": None if m is None else [m.real, m.imag]}
                for t, p, m in zip(self.tags, self.periods, self.multipliers or (None, None))
            ],
            "combined": self.combined,
            "periods": list(self.period_pair()),
            "heuristic": self.heuristic,
        }


# -- vectorized homogeneous iteration ------------------------------------------------


def _step(C, x, y):
    a2, a1, a0, b2, b1, b0 = C
    xx, xy, yy = x * x, x * y, y * y
    nx = a2 * xx + a1 * xy + a0 * yy
    ny = b2 * xx + b1 * xy + b0 * yy
    s = np.maximum(np.abs(nx), np.abs(ny))
    s = np.where(s > 0, s, 1.0)
    return nx / s, ny / s


def _hdist(x1, y1, x2, y2):
    """Chordal distance between [x1 : y1] and [x2 : y2] (sphere of diameter 2)."""
    n1 = np.sqrt(np.abs(x1) ** 2 + np.abs(y1) ** 2)
    n2 = np.sqrt(np.abs(x2) ** 2 + np.abs(y2) ** 2)
    return 2 * np.abs(x1 * y2 - x2 * y1) / (n1 * n2)


def _chart_derivative(C, x, y):
    """Derivative of g at [x : y] between the canonical charts of the point and its image."""
    a2, a1, a0, b2, b1, b0 = C
    in_z = np.abs(y) >= np.abs(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(in_z, x / y, y / x)
        # g(1/w) has the coefficients of numerator and denominator reversed
        p2, p1, p0 = np.where(in_z, a2, a0), a1, np.where(in_z, a0, a2)
        q2, q1, q0 = np.where(in_z, b2, b0), b1, np.where(in_z, b0, b2)
        P = (p2 * u + p1) * u + p0
        Q = (q2 * u + q1) * u + q0
        dP = 2 * p2 * u + p1
        dQ = 2 * q2 * u + q1
        out_z = np.abs(Q) >= np.abs(P)
        return np.where(out_z, (dP * Q - P * dQ) / (Q * Q), (dQ * P - Q * dP) / (P * P))


def _cycle_multiplier(C, x, y, period):
    """Product of chart derivatives over ``period`` steps from [x : y]."""
    rho = np.ones(x.shape, dtype=complex)
    cx, cy = x.copy(), y.copy()
    for _ in range(period):
        rho = rho * _chart_derivative(C, cx, cy)
        cx, cy = _step(C, cx, cy)
    return rho


def _critical_orbit_scan(C, x, y, max_iter, tol, drift_ok, escape):
    """Classify the orbits starting at [x : y] for the maps with coefficients C.

    Returns arrays (status, period, rho, cx, cy, phase_step) where status is
    0 undecided, 1 attracted, 2 drift; (cx, cy) is the cycle point where the
    recurrence was seen and phase_step the step count at which it was seen.
    """
    n = x.shape[0]
    status = np.zeros(n, dtype=np.int8)
    period = np.zeros(n, dtype=np.int32)
    rho = np.zeros(n, dtype=complex)
    cx = np.zeros(n, dtype=complex)
    cy = np.zeros(n, dtype=complex)
    seen = np.zeros(n, dtype=np.int64)
    growth = np.zeros(n, dtype=np.int32)
    x, y = x.astype(complex).copy(), y.astype(complex).copy()
    prev_z = np.full(n, np.nan, dtype=complex)
    prev_dz = np.full(n, np.nan, dtype=complex)
    steps = 0
    active = np.ones(n, dtype=bool)
    while steps < max_iter and active.any():
        idx = np.nonzero(active)[0]
        Ci = tuple(c[idx] for c in C)
        xi, yi = x[idx], y[idx]
        pz, pdz, gr = prev_z[idx], prev_dz[idx], growth[idx]
        dr = drift_ok[idx]
        block = min(CHECK_EVERY, max_iter - steps)
        drifted = np.zeros(idx.size, dtype=bool)
        with np.errstate(all="ignore"):
            for _ in range(block):
                xi, yi = _step(Ci, xi, yi)
                if dr.any():
                    z = xi / yi
                    dz = z - pz
                    grow = (np.abs(z) > np.abs(pz)) & (np.abs(dz - pdz) < DRIFT_STABILITY * np.abs(dz))
                    gr = np.where(grow, gr + 1, 0)
                    far = np.abs(xi) > escape * np.abs(yi)
                    drifted |= dr & ((gr >= DRIFT_STEPS) | far)
                    pz, pdz = z, dz
        steps += block
        # recurrence check: continue the orbit MAX_PERIOD steps from a reference point
        rx, ry = xi.copy(), yi.copy()
        found = np.zeros(idx.size, dtype=np.int32)
        tx, ty = xi, yi
        with np.errstate(all="ignore"):
            for p in range(1, MAX_PERIOD + 1):
                tx, ty = _step(Ci, tx, ty)
                close = (found == 0) & (_hdist(tx, ty, rx, ry) < tol)
                found[close] = p
            hit = found > 0
            mult = np.zeros(idx.size, dtype=complex)
            for p in np.unique(found[hit]):
                sel = found == p
                mult[sel] = _cycle_multiplier(tuple(c[sel] for c in Ci), rx[sel], ry[sel], int(p))
        attracted = hit & (np.abs(mult) < 1 - PARABOLIC_TOL)
        ok_att = attracted & ~drifted
        g_att = idx[ok_att]
        status[g_att] = 1
        period[g_att] = found[ok_att]
        rho[g_att] = mult[ok_att]
        cx[g_att], cy[g_att] = rx[ok_att], ry[ok_att]
        seen[g_att] = steps
        g_drift = idx[drifted]
        status[g_drift] = 2
        x[idx], y[idx] = tx, ty
        prev_z[idx], prev_dz[idx], growth[idx] = pz, pdz, gr
        active[idx[ok_att | drifted]] = False
        steps += MAX_PERIOD
    return status, period, rho, cx, cy, seen


def _cycle_partner(C, ax, ay, bx, by, p, tol):
    """Shift s in [0, p) with g^s(a) = b, or -1 when a and b lie on different cycles."""
    shift = np.full(ax.shape, -1, dtype=np.int32)
    tx, ty = ax.copy(), ay.copy()
    with np.errstate(all="ignore"):
        for s in range(int(p.max()) if p.size else 0):
            close = (shift < 0) & (s < p) & (_hdist(tx, ty, bx, by) < tol)
            shift[close] = s
            tx, ty = _step(C, tx, ty)
    return shift


def _same_cycle_tag(period, shift, seen1, seen2):
    """E for a fixed point; otherwise B when the orbits are out of phase, C when in phase.

    Two critical points on the same component of the immediate basin of a
    cycle of period > 1 are impossible for a quadratic map, so equal phase
    indicates that one of them is outside the immediate basin.
    """
    if period == 1:
        return "E"
    phase = (seen1 + shift - seen2) % period
    return "C" if phase == 0 else "B"


def classify_arrays(C, crit, max_iter=20000, tol=1e-8, escape=DRIFT_RADIUS):
    """Vectorized classification of maps with coefficients C (six arrays).

    ``crit`` is a pair of (x, y) arrays giving the two critical points.
    Returns a list of PixelClass in input order.
    """
    C = tuple(np.asarray(c, dtype=complex) for c in C)
    n = C[0].shape[0]
    a2, a1, a0, b2, b1, b0 = C
    with np.errstate(all="ignore"):
        inf_fixed = b2 == 0
        rho_inf = np.where(inf_fixed & (a2 != 0), b1 / np.where(a2 != 0, a2, 1), np.nan)
    drift_ok = inf_fixed & (np.abs(rho_inf - 1) < PARABOLIC_TOL)
    scans = [_critical_orbit_scan(C, x, y, max_iter, tol, drift_ok, escape) for x, y in crit]
    (s1, p1, r1, x1, y1, n1), (s2, p2, r2, x2, y2, n2) = scans
    both = (s1 == 1) & (s2 == 1) & (p1 == p2)
    shift = np.full(n, -1, dtype=np.int32)
    if both.any():
        sel = np.nonzero(both)[0]
        shift[sel] = _cycle_partner(
            tuple(c[sel] for c in C), x1[sel], y1[sel], x2[sel], y2[sel], p1[sel], max(tol * 1e3, SAME_CYCLE_TOL)
        )
    names = {0: "undecided", 1: "attracted", 2: "drift"}
    out = []
    for i in range(n):
        tags = (names[int(s1[i])], names[int(s2[i])])
        periods = tuple(int(p) if s == 1 else None for s, p in ((s1[i], p1[i]), (s2[i], p2[i])))
        mults = tuple(complex(r) if s == 1 else None for s, r in ((s1[i], r1[i]), (s2[i], r2[i])))
        heuristic = False
        if "undecided" in tags:
            combined = "undecided"
        elif tags == ("drift", "drift"):
            combined = "escape"
        elif "drift" in tags:
            combined = "mixed"
        elif shift[i] < 0:
            combined = "D"
        else:
            combined = _same_cycle_tag(int(p1[i]), int(shift[i]), int(n1[i]), int(n2[i]))
            heuristic = True
        out.append(PixelClass(tags, periods, combined, mults, heuristic))
    return out


def _homogeneous(z):
    if is_inf(z):
        return 1 + 0j, 0j
    z = complex(z)
    return (z, 1 + 0j) if abs(z) <= 1 else (1 + 0j, 1 / z)


def classify_parameter(g, max_iter=20000, tol=1e-8, escape=DRIFT_RADIUS):
    """PixelClass of a single RationalMap2."""
    C = tuple(np.array([c]) for c in g.coeffs)
    crit = []
    for c in g.critical_points():
        x, y = _homogeneous(c)
        crit.append((np.array([x]), np.array([y])))
    return classify_arrays(C, crit, max_iter, tol, escape)[0]


# -- the two planes -----------------------------------------------------------------


def gk_coefficients(kappa):
    k = np.asarray(kappa, dtype=complex).ravel()
    one, zero = np.ones_like(k), np.zeros_like(k)
    return (one, k, one, zero, one, zero)


def classify_gk(kappa, max_iter=20000, tol=1e-8, escape=DRIFT_RADIUS):
    """Classifications of G_κ for an array of κ; critical point order (+1, -1)."""
    C = gk_coefficients(kappa)
    n = C[0].shape[0]
    crit = [(np.ones(n, complex), np.ones(n, complex)), (-np.ones(n, complex), np.ones(n, complex))]
    return classify_arrays(C, crit, max_iter, tol, escape)


def per2_representatives(X):
    """Coefficient arrays and critical points for (X, -2X); ok marks successful pixels."""
    X = np.asarray(X, dtype=complex).ravel()
    n = X.size
    coeffs = np.zeros((6, n), dtype=complex)
    coeffs[0] = 1
    coeffs[4] = 1  # placeholder map z^2/z for failed pixels
    crit = np.zeros((2, 2, n), dtype=complex)
    crit[:, 1, :] = 1
    ok = np.zeros(n, dtype=bool)
    for i, x in enumerate(X):
        try:
            g = from_moduli(ModuliPoint(complex(x), -2 * complex(x)))
            cps = g.critical_points()
        except QRMError:
            continue
        coeffs[:, i] = g.coeffs
        for k, c in enumerate(cps):
            crit[k, 0, i], crit[k, 1, i] = _homogeneous(c)
        ok[i] = True
    return tuple(coeffs), [(crit[0, 0], crit[0, 1]), (crit[1, 0], crit[1, 1])], ok


def classify_per2(X, max_iter=20000, tol=1e-8, escape=DRIFT_RADIUS):
    C, crit, ok = per2_representatives(X)
    classes = classify_arrays(C, crit, max_iter, tol, escape)
    return [c if good else PixelClass(("undecided", "undecided"), (None, None), "undecided") for c, good in zip(classes, ok)]


# -- images ------------------------------------------------------------------------


def color_index(pc):
    base = TAGS.index(pc.combined)
    top = max((p for p in pc.periods if p is not None), default=0)
    return (base + top % 8) % len(PALETTE)


def histogram(classes):
    """Counts per (combined tag, sorted attracting periods), in a fixed order."""
    counts = Counter((c.combined, c.period_pair()) for c in classes)
    return [
        {"tag": tag, "periods": list(periods), "count": n}
        for (tag, periods), n in sorted(counts.items(), key=lambda kv: (TAGS.index(kv[0][0]), kv[0][1]))
    ]


@dataclass
class RenderResult:
    job: RenderJob
    classes: list
    histogram: list = field(default_factory=list)

    def indices(self):
        n = self.job.resolution
        return np.array([color_index(c) for c in self.classes], dtype=np.uint8).reshape(n, n)

    def ppm(self):
        n = self.job.resolution
        rgb = PALETTE[self.indices()]
        return b"P6\n%d %d\n255\n" % (n, n) + rgb.tobytes()

    def grid_classes(self):
        n = self.job.resolution
        return [self.classes[i * n : (i + 1) * n] for i in range(n)]

    def sidecar(self):
        return {"job": self.job.to_json(), "histogram": self.histogram}

    def write(self, image_path, sidecar_path=None):
        with open(image_path, "wb") as fh:
            fh.write(self.ppm())
        sidecar_path = sidecar_path or str(image_path) + ".json"
        with open(sidecar_path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2)
        return sidecar_path


def render_gk(job):
    if job.plane != "gk-kappa":
        raise ValidationError("render_gk needs plane gk-kappa")
    classes = classify_gk(job.grid().ravel(), job.max_iter, job.tol, job.escape)
    return RenderResult(job, classes, histogram(classes))


def render_per2_slice(job):
    if job.plane != "per2-zero-slice":
        raise ValidationError("render_per2_slice needs plane per2-zero-slice")
    classes = classify_per2(job.grid().ravel(), job.max_iter, job.tol, job.escape)
    return RenderResult(job, classes, histogram(classes))


def render(job):
    return render_gk(job) if job.plane == "gk-kappa" else render_per2_slice(job)
