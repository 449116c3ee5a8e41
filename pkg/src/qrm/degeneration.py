"""Escape paths to the ideal points ∞_{p/q} and the rescaling limit G_T.

Along a path α = ω(1 + τ√ε + c ε), β = (1 - ε)/α with ω = e^{2πip/q}, the
class of f_{α,β} leaves every compact set of the moduli space, while the
q-th iterate of the conjugate normal form F converges to G_{qτ}(z) = z + qτ + 1/z.

Set QRM_PRECISION=extended to run scalar computations with mpmath at 50
digits; positions with ε <= 1e-8 use it automatically.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .cycles import cycles, periodic_points, poles
from .errors import FixedPointOnBoundary, InadmissiblePath, PoleCollision, ValidationError
from .local import contour_integral, eval_iterate, ind_contour, mult_contour
from .moduli import fNormalForm, f_to_F, FNormalForm, moduli_point, EigenTriple, ideal_limit
from .points import INF, chordal, is_inf, point_to_json
from .sphere import RationalMap2

PATH_TOL = 1e-12
MAX_EPS = 1e-2
EXTENDED_EPS = 1e-8
EXTENDED_DPS = 50
POLE_MARGIN = 0.05
INFINITY_TOL = 1e-6  # points with |z| > 1/sqrt(tol) count as converging to ∞
ZERO_RADIUS = 1e-2
BOUNDED_EIGENVALUE = 1e3


def precision(eps=None):
    """'extended' when requested by QRM_PRECISION or when ε is tiny."""
    mode = os.environ.get("QRM_PRECISION", "double").strip().lower()
    if mode not in ("double", "extended"):
        raise ValidationError(f"QRM_PRECISION must be 'double' or 'extended', not {mode!r}")
    if eps is not None and float(eps) <= EXTENDED_EPS:
        return "extended"
    return mode


def _c(v):
    v = complex(v)
    return [v.real, v.imag]


# -- the limit family ---------------------------------------------------------


@dataclass(frozen=True)
class GMap:
    """G_T(z) = z + T + 1/z.  T = INF stands for the constant map to ∞."""

    T: object

    def to_map(self):
        if is_inf(self.T):
            raise ValidationError("G_∞ is the constant map, not a quadratic map")
        return RationalMap2([1, self.T, 1, 0, 1, 0])

    def __call__(self, z):
        if is_inf(self.T) or is_inf(z) or z == 0:
            return INF
        return z + self.T + 1 / z

    @property
    def fixed_point(self):
        """The finite fixed point -1/T, or None for T = 0."""
        if is_inf(self.T) or self.T == 0:
            return None
        return -1 / complex(self.T)

    @property
    def eigenvalue(self):
        if self.fixed_point is None:
            return None
        return 1 - complex(self.T) ** 2

    def index_at_infinity(self):
        """Holomorphic index at ∞ by contour integration; 1 - 1/T² in closed form."""
        return ind_contour(self.to_map(), INF)

    def multiplicity_at_infinity(self):
        return mult_contour(self.to_map(), INF)

    def to_json(self):
        return {
            "T": "inf" if is_inf(self.T) else _c(self.T),
            "fixed_point": None if self.fixed_point is None else _c(self.fixed_point),
            "eigenvalue": None if self.eigenvalue is None else _c(self.eigenvalue),
        }


def g_map(T):
    return GMap(T if is_inf(T) else complex(T))


# -- paths ----------------------------------------------------------------------


@dataclass(frozen=True)
class DegenerationPath:
    p: int
    q: int
    tau: complex
    higher: complex = 0j  # coefficient c of the ε term of α

    def __post_init__(self):
        if self.q < 2:
            raise ValidationError("a degeneration path needs q >= 2")
        if math.gcd(self.p, self.q) != 1:
            raise ValidationError(f"{self.p}/{self.q} is not reduced")

    @property
    def omega(self):
        return cmath.exp(2j * math.pi * self.p / self.q)

    @property
    def T(self):
        return self.q * complex(self.tau)

    def limit_map(self):
        return g_map(self.T)

    def triple(self, eps):
        """(α, β, γ) at position ε, in double precision."""
        eps = float(eps)
        s = math.sqrt(eps)
        alpha = self.omega * (1 + complex(self.tau) * s + complex(self.higher) * eps)
        beta = (1 - eps) / alpha
        gamma = (2 - alpha - beta) / eps
        return alpha, beta, gamma

    def triple_mp(self, eps, dps=EXTENDED_DPS):
        """(α, β, γ) as mpmath numbers at ``dps`` digits."""
        with mpmath.workdps(dps):
            e = mpmath.mpf(eps)
            s = mpmath.sqrt(e)
            omega = mpmath.expjpi(mpmath.mpf(2 * self.p) / self.q)
            tau, c = mpmath.mpc(self.tau), mpmath.mpc(self.higher)
            alpha = omega * (1 + tau * s + c * e)
            beta = (1 - e) / alpha
            gamma = (2 - alpha - beta) / e
            return +alpha, +beta, +gamma

    def exact_triple(self, sqrt_eps):
        """Exact (α, β, γ) for q = 2 with rational τ, c and √ε."""
        if self.q != 2:
            raise ValidationError("exact mode needs ω = -1, that is q = 2")
        s = Fraction(sqrt_eps)
        tau, c = _as_fraction(self.tau), _as_fraction(self.higher)
        eps = s * s
        alpha = -(1 + tau * s + c * eps)
        beta = (1 - eps) / alpha
        gamma = (2 - alpha - beta) / eps
        return alpha, beta, gamma

    def to_json(self):
        return {"p": self.p, "q": self.q, "tau": _c(self.tau), "higher": _c(self.higher), "T": _c(self.T)}


def _as_fraction(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    z = complex(v)
    if z.imag != 0:
        raise ValidationError("exact mode needs real τ and c")
    return Fraction(z.real)


def _check_eps(eps):
    eps = float(eps)
    if not 0 < eps <= MAX_EPS:
        raise InadmissiblePath(f"ε = {eps} outside (0, {MAX_EPS}]")
    return eps


def path_maps(path, eps):
    """(fNormalForm, FNormalForm) at position ε, plus γ via the normal forms."""
    eps = _check_eps(eps)
    alpha, beta, _ = path.triple(eps)
    for v, name in ((alpha, "α"), (beta, "β"), (alpha * beta, "αβ")):
        if abs(v - 1) < PATH_TOL:
            raise InadmissiblePath(f"{name} = {v} within {PATH_TOL} of 1")
    nf = fNormalForm(alpha, beta, complex(math.sqrt(eps)), tol=PATH_TOL)
    F, _ = f_to_F(nf)
    if precision(eps) == "extended":
        return nf, _F_extended(path, eps, F)
    return nf, _F_direct(path, eps, F)


def _F_direct(path, eps, reference):
    """F from (α, γ) by a = √(1 - αγ), b = (1 - γ)/a, δ = -(a + b).

    The Möbius route through the critical points loses about 1/ε in δ; this
    one loses only |a|/|δ| ~ 1/√ε.  The sign of δ (the marking) is taken from
    ``reference``.
    """
    alpha, _, gamma = path.triple(eps)
    a = cmath.sqrt(1 - alpha * gamma)
    delta = -(a + (1 - gamma) / a)
    ref = complex(reference.delta)
    if abs(-delta - ref) < abs(delta - ref):
        delta = -delta
    return FNormalForm(gamma, delta)


def _F_mp(path, eps, reference):
    """(γ, δ) of F as mpmath numbers; the sign of δ follows the double-precision ``reference``."""
    with mpmath.workdps(EXTENDED_DPS):
        alpha, beta, gamma = path.triple_mp(eps)
        a = mpmath.sqrt(1 - alpha * gamma)
        b = (1 - gamma) / a
        delta = -(a + b)
        ref = complex(reference.delta)
        if abs(complex(-delta) - ref) < abs(complex(delta) - ref):
            delta = -delta
        return gamma, delta


def _F_extended(path, eps, reference):
    gamma, delta = _F_mp(path, eps, reference)
    return FNormalForm(complex(gamma), complex(delta))


# -- convergence of F^q to G_{qτ} --------------------------------------------------


def _test_circle(r, samples):
    return r * np.exp(2j * np.pi * (np.arange(samples) + 0.5) / samples)


def limit_error(path, eps, r=1.0, samples=256):
    """sup over |z| = r of the chordal distance between F^q(z) and G_{qτ}(z)."""
    if not 0.2 <= r <= 5:
        raise ValidationError(f"test radius {r} outside [0.2, 5]")
    eps = _check_eps(eps)
    _, F = path_maps(path, eps)
    g = F.to_map(check=False)
    zs = _test_circle(r, samples)
    for pole in poles(g, path.q):
        if not is_inf(pole) and abs(abs(pole) - r) < POLE_MARGIN:
            raise PoleCollision(f"pole {pole} of F^{path.q} within {POLE_MARGIN} of |z| = {r}")
    G = path.limit_map()
    if precision(eps) == "extended":
        gamma, delta = _F_mp(path, eps, F)
        with mpmath.workdps(EXTENDED_DPS):
            worst = 0.0
            T = mpmath.mpc(path.T)
            for z in zs:
                w = mpmath.mpc(z)
                for _ in range(path.q):
                    w = gamma * w / (w * w + delta * w + 1)
                target = mpmath.mpc(z) + T + 1 / mpmath.mpc(z)
                worst = max(worst, chordal(complex(w), complex(target)))
        return worst
    h, _ = eval_iterate(g, zs, path.q)
    return max(chordal(complex(a), G(complex(z))) for a, z in zip(h, zs))


def fit_exponent(xs, ys):
    """Slope of log y against log x."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def alpha_rate(path, eps_list):
    """Fitted exponent of |α - ω| against ε; 1/2 along any path with τ != 0."""
    errs = [abs(path.triple(e)[0] - path.omega) for e in eps_list]
    return fit_exponent(eps_list, errs)


# -- index sums -----------------------------------------------------------------


def index_limit(path, eps):
    """S = 1/(1-α^q) + 1/(1-β^q) with its printed and re-derived limits.

    The printed limit 1 - 1/T² counts only one point of the distinguished
    q-cycle; summing the index 1/T² over all q of its points gives 1 - q/T²,
    which is what S converges to.
    """
    eps = _check_eps(eps)
    q = path.q
    if precision(eps) == "extended":
        with mpmath.workdps(EXTENDED_DPS):
            alpha, beta, _ = path.triple_mp(eps)
            S = complex(1 / (1 - alpha ** q) + 1 / (1 - beta ** q))
    else:
        alpha, beta, _ = path.triple(eps)
        S = 1 / (1 - alpha ** q) + 1 / (1 - beta ** q)
    T = path.T
    if T == 0:
        printed = rederived = INF
        error = math.inf
    else:
        printed = 1 - 1 / T ** 2
        rederived = 1 - q / T ** 2
        error = abs(S - rederived)
    return {
        "eps": eps,
        "S": S,
        "printed_limit": printed,
        "rederived_limit": rederived,
        "error": error,
        "printed_error": math.inf if T == 0 else abs(S - printed),
    }


def index_limit_series(q=2, order=3):
    """Series of S in s = √ε with symbols τ and c, via sympy (for the q = 2 checks)."""
    import sympy as sp

    s, tau, c = sp.symbols("s tau c")
    omega = sp.exp(2 * sp.pi * sp.I / q)
    alpha = omega * (1 + tau * s + c * s ** 2)
    beta = (1 - s ** 2) / alpha
    S = 1 / (1 - alpha ** q) + 1 / (1 - beta ** q)
    return sp.series(sp.simplify(S), s, 0, order).removeO(), (s, tau, c)


# -- cycles along the path -------------------------------------------------------


def _where(z):
    if is_inf(z) or abs(z) > 1 / math.sqrt(INFINITY_TOL):
        return "inf"
    if abs(z) < ZERO_RADIUS:
        return "zero"
    return "finite"


def _alternative(points):
    """Which limit case a cycle's point set is heading to."""
    places = {_where(z) for z in points}
    if places == {"inf"}:
        return "infinity"
    if "zero" in places:
        return "zero-infinity"
    return "finite-cycle"


def track_cycles(path, eps_schedule, n, bound=BOUNDED_EIGENVALUE):
    """Exact-period-n cycles of F with |ρ| <= bound along the schedule.

    Each position lists the bounded cycles with their limit alternative.
    Finite points are compared with the (n/q)-cycles of G_T, and the
    eigenvalue at the last position is reported as the limit estimate.
    """
    if n % path.q:
        raise ValidationError(f"n = {n} is not a multiple of q = {path.q}")
    if n > 10:
        raise ValidationError("cycle tracking supports n <= 10")
    m = n // path.q
    G = path.limit_map()
    limit_cycles = []
    if path.T != 0:
        limit_cycles = cycles(G.to_map(), m)
    positions = []
    for eps in eps_schedule:
        _, F = path_maps(path, eps)
        g = F.to_map(check=False)
        found = []
        for c in cycles(g, n):
            if abs(c.eigenvalue) > bound:
                continue
            pts = list(c.points)
            finite = [z for z in pts if _where(z) != "inf"]
            match = _nearest_limit_cycle(finite, limit_cycles)
            found.append(
                {
                    "points": pts,
                    "eigenvalue": c.eigenvalue,
                    "alternative": _alternative(pts),
                    "finite_points": finite,
                    "limit_cycle": match,
                }
            )
        positions.append({"eps": float(eps), "cycles": found})
    return {
        "path": path.to_json(),
        "n": n,
        "m": m,
        "G_cycles": [{"points": list(c.points), "eigenvalue": c.eigenvalue} for c in limit_cycles],
        "positions": positions,
    }


def _nearest_limit_cycle(finite, limit_cycles):
    if not finite or not limit_cycles:
        return None
    best = None
    for k, c in enumerate(limit_cycles):
        lpts = [z for z in c.points if not is_inf(z)]
        if not lpts:
            continue
        d = max(min(abs(z - w) for w in lpts) for z in finite)
        if best is None or d < best[1]:
            best = (k, d, c.eigenvalue)
    if best is None:
        return None
    return {"index": best[0], "distance": best[1], "eigenvalue": best[2]}


def track_report_json(report):
    def pts(v):
        return [point_to_json(z) for z in v]

    out = dict(report)
    out["G_cycles"] = [{"points": pts(c["points"]), "eigenvalue": _c(c["eigenvalue"])} for c in report["G_cycles"]]
    out["positions"] = [
        {
            "eps": p["eps"],
            "cycles": [
                {
                    "points": pts(c["points"]),
                    "eigenvalue": _c(c["eigenvalue"]),
                    "alternative": c["alternative"],
                    "limit_cycle": None
                    if c["limit_cycle"] is None
                    else {**c["limit_cycle"], "eigenvalue": _c(c["limit_cycle"]["eigenvalue"])},
                }
                for c in p["cycles"]
            ],
        }
        for p in report["positions"]
    ]
    return out


# -- counting fixed points of f^q away from the small discs ---------------------------


def q_cycle_count(path, eps, r=10.0, m=1, report=False, center_disc=False):
    """Σ mult of the fixed points of f^{mq} outside the discs |z - ω̄^j| < r√ε.

    The discs are j = 1..q-1, or j = 0..q-1 with ``center_disc`` (the disc
    about the fixed point 1 is then excluded too).  Fixed points inside each
    disc are counted by the argument principle, ∮ (1 - h')/(z - h) dz
    counting fixed points minus poles of h = f^{mq}, with the poles inside
    added back from their computed locations.  The result is 2^{mq} + 1
    minus those counts.
    """
    eps = _check_eps(eps)
    nf, _ = path_maps(path, eps)
    f = nf.to_map(check=False)
    power = m * path.q
    R = r * math.sqrt(eps)
    centers = [path.omega.conjugate() ** j for j in range(path.q)]
    discs = centers if center_disc else centers[1:]
    fixed = [z for z, _ in periodic_points(f, power) if not is_inf(z)]
    for c in discs:
        for z in fixed:
            if abs(abs(z - c) - R) < 0.01 * R:
                raise FixedPointOnBoundary(f"fixed point {z} of f^{power} near the circle |z - {c}| = {R}")
    finite_poles = [z for z in poles(f, power) if not is_inf(z)]
    stray = [z for z in finite_poles if min(abs(z - c) for c in centers) >= R]
    if stray:
        raise ValidationError(f"{len(stray)} poles of f^{power} outside the discs; r = {r} is too small")
    inside = []
    for c in discs:
        integral = contour_integral(f, c, R, power=power, integrand="mult")
        p_in = sum(1 for z in finite_poles if abs(z - c) < R)
        inside.append(round(integral.real) + p_in)
    count = 2 ** power + 1 - sum(inside)
    if report:
        direct = sum(1 for z in fixed if all(abs(z - c) >= R for c in discs))
        return {"count": count, "inside": inside, "direct": direct + _inf_fixed(f, power), "expected": path.q + 2}
    return count


def _inf_fixed(f, power):
    return sum(k for z, k in periodic_points(f, power) if is_inf(z))


def g0_control(m=1, r=10.0):
    """∮_{|z|=r} (1 - (G_0^m)')/(z - G_0^m) dz / 2πi, which is -1 for large r."""
    return contour_integral(GMap(0j).to_map(), 0j, r, power=m, integrand="mult")


# -- basins ---------------------------------------------------------------------


def basin_extent(g, cycle, radius=0.5, resolution=64, max_iter=2000, tol=1e-6):
    """Radius of the largest disc about the cycle point nearest 0 inside the sampled basin.

    A grid of resolution x resolution points over the square of half-width
    ``radius`` is iterated; the extent is the distance to the nearest sample
    that fails to land within ``tol`` of the cycle after ``max_iter`` steps,
    capped at ``radius``.
    """
    if not abs(cycle.eigenvalue) < 1:
        raise ValidationError("basin_extent needs an attracting cycle")
    pts = list(cycle.points)
    finite = [z for z in pts if not is_inf(z)]
    if not finite:
        raise ValidationError("cycle has no finite point")
    center = min(finite, key=abs)
    xs = np.linspace(-radius, radius, resolution)
    grid = center + xs[None, :] + 1j * xs[:, None]
    z = grid.ravel()
    period = cycle.period
    steps = max(1, max_iter // period) * period
    w, _ = eval_iterate(g, z, steps)
    dist = np.full(z.shape, np.inf)
    with np.errstate(invalid="ignore", over="ignore"):
        for c in pts:
            if is_inf(c):
                d = np.where(np.isfinite(w) & (w != 0), 1 / np.abs(w), 0.0)
            else:
                d = np.abs(w - c)
            dist = np.minimum(dist, np.nan_to_num(d, nan=np.inf))
    failed = ~(dist < tol)
    if not failed.any():
        return float(radius)
    reach = np.abs(z[failed] - center).min()
    if reach > radius:
        return float(radius)
    # the sample spacing bounds the accuracy
    return float(max(0.0, reach))


def path_basin_extents(path, eps_schedule, **kw):
    """basin_extent of the attracting q-cycle of F nearest 0, along the schedule."""
    out = []
    for eps in eps_schedule:
        _, F = path_maps(path, eps)
        g = F.to_map(check=False)
        att = [c for c in cycles(g, path.q) if abs(c.eigenvalue) < 1]
        if not att:
            out.append(None)
            continue
        c = min(att, key=lambda c: min(abs(z) for z in c.points if not is_inf(z)))
        out.append(basin_extent(g, c, **kw))
    return out


# -- moduli along the path ------------------------------------------------------------


def path_moduli(path, eps_schedule):
    """ModuliPoints of the triples along the schedule."""
    return [moduli_point(EigenTriple(path.triple(e))) for e in eps_schedule]


def path_ideal_limit(path, eps_schedule):
    return ideal_limit(path_moduli(path, eps_schedule))


def degen_report(path, eps_list, r=1.0, n=None):
    """Combined report: index sums, sup-errors and optional cycle tracks."""
    out = {"path": path.to_json(), "positions": []}
    for eps in eps_list:
        il = index_limit(path, eps)
        nf, F = path_maps(path, eps)
        entry = {
            "eps": eps,
            "alpha": _c(nf.alpha),
            "beta": _c(nf.beta),
            "gamma": _c(nf.gamma),
            "F": F.to_json(),
            "S": _c(il["S"]),
            "printed_limit": "inf" if is_inf(il["printed_limit"]) else _c(il["printed_limit"]),
            "rederived_limit": "inf" if is_inf(il["rederived_limit"]) else _c(il["rederived_limit"]),
            "S_error": il["error"],
        }
        try:
            entry["sup_error"] = limit_error(path, eps, r=r)
        except PoleCollision as exc:
            entry["sup_error"] = None
            entry["sup_error_note"] = str(exc)
        out["positions"].append(entry)
    if len(eps_list) >= 2:
        errs = [p["sup_error"] for p in out["positions"] if p["sup_error"]]
        if len(errs) == len(eps_list) and all(e > 0 for e in errs):
            out["sup_error_rate"] = fit_exponent(eps_list, errs)
    if n is not None:
        out["tracks"] = track_report_json(track_cycles(path, eps_list, n))
    return out
