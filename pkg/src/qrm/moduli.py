"""Eigenvalue triples, the (X, Y) coordinates and the two normal forms.

A conjugacy class of quadratic maps is determined by the unordered triple of
fixed-point eigenvalues [α, β, γ], subject to αβγ - (α + β + γ) + 2 = 0.
The coordinates are X = σ1 and Y = σ2 of the triple (σ3 = X - 2 follows).

Two normal forms are used:

    F_{γ,δ}(z) = γ z / (z^2 + δ z + 1)            critical points ±1, F(0) = 0
    f_{α,β}(z) = z ((1-α) z + α(1-β)) / (β(1-α) z + (1-β))   fixes 0, ∞, 1
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    DegenerateFixedPoints,
    DegenerateMap,
    InadmissibleMarking,
    NoAdmissiblePair,
    NotEscaping,
    ValidationError,
)
from .points import INF, is_inf
from .polyroots import cubic_roots
from .sphere import MobiusTransform, RationalMap2

ADMISSIBLE_TOL = 1e-9
LABEL_TOL = 1e-9
LIMIT_LABEL_TOL = 1e-6
MAX_LABEL_DENOMINATOR = 64


def _c(v):
    return [v.real, v.imag]


@dataclass(frozen=True)
class EigenTriple:
    values: tuple

    def residual(self):
        a, b, c = self.values
        return abs(a * b * c - (a + b + c) + 2)

    def symmetric(self):
        a, b, c = self.values
        return a + b + c, a * b + a * c + b * c, a * b * c

    def to_json(self):
        return [_c(v) for v in self.values]


@dataclass(frozen=True)
class ModuliPoint:
    X: complex
    Y: complex

    @property
    def Z(self):
        return self.X - 2

    def to_json(self):
        return {"X": _c(self.X), "Y": _c(self.Y)}


@dataclass(frozen=True)
class FNormalForm:
    """F_{γ,δ}(z) = γz / (z^2 + δz + 1)."""

    gamma: complex
    delta: complex

    def __post_init__(self):
        if self.gamma == 0:
            raise ValidationError("F normal form needs γ != 0")

    def to_map(self, check=True):
        return RationalMap2([0, self.gamma, 0, 1, self.delta, 1], check=check)

    def fixed_pair(self):
        """The nonzero fixed points a, b: roots of z^2 + δz + (1 - γ)."""
        d = cmath.sqrt(self.delta ** 2 - 4 * (1 - self.gamma))
        return (-self.delta + d) / 2, (-self.delta - d) / 2

    def derivative(self, z):
        """γ(1 - z^2) / (z^2 + δz + 1)^2."""
        den = z * z + self.delta * z + 1
        return self.gamma * (1 - z * z) / (den * den)

    def to_json(self):
        return {"form": "F", "gamma": _c(self.gamma), "delta": _c(self.delta)}


@dataclass(frozen=True)
class fNormalForm:
    """f_{α,β}, with derived quantities and a chosen branch of √ε."""

    alpha: complex
    beta: complex
    sqrt_eps: complex | None = None
    tol: float = field(default=ADMISSIBLE_TOL, compare=False, repr=False)

    def __post_init__(self):
        a, b = self.alpha, self.beta
        for v, name in ((a, "α"), (b, "β"), (a * b, "αβ")):
            if abs(v - 1) < self.tol:
                raise ValidationError(f"f normal form needs {name} != 1")
        if self.sqrt_eps is None:
            object.__setattr__(self, "sqrt_eps", cmath.sqrt(1 - a * b))

    @property
    def gamma(self):
        return (2 - self.alpha - self.beta) / (1 - self.alpha * self.beta)

    @property
    def eps(self):
        return 1 - self.alpha * self.beta

    @property
    def mu(self):
        """Pole of f; INF when β = 0 (f is then a polynomial)."""
        if self.beta == 0:
            return INF
        return 1 - self.eps / (self.beta * (1 - self.alpha))

    @property
    def nu(self):
        return 1 - self.eps / (1 - self.alpha)

    def chi(self):
        """(χ+, χ-) = μ(1 ± √ε), the critical points in the branch order."""
        mu = self.mu
        if is_inf(mu):
            # β = 0: χ+ = ∞ for the branch with √ε near +1
            finite = -self.alpha / (2 * (1 - self.alpha))
            return (INF, finite) if self.sqrt_eps.real > 0 else (finite, INF)
        return mu * (1 + self.sqrt_eps), mu * (1 - self.sqrt_eps)

    def swapped_branch(self):
        return fNormalForm(self.alpha, self.beta, -self.sqrt_eps, self.tol)

    def to_map(self, check=True):
        a, b = self.alpha, self.beta
        return RationalMap2([1 - a, a * (1 - b), 0, 0, b * (1 - a), 1 - b], check=check)

    def to_json(self):
        return {
            "form": "f",
            "alpha": _c(self.alpha),
            "beta": _c(self.beta),
            "eps": _c(self.eps),
            "sqrt_eps": _c(self.sqrt_eps),
        }


@dataclass(frozen=True)
class IdealPoint:
    """The point [α, 1/α, ∞] on the line at infinity, recorded by s = α + 1/α."""

    s: object
    label: str | None = None

    def to_json(self):
        s = "inf" if is_inf(self.s) else _c(complex(self.s))
        return {"s": s, "label": self.label}


def f_map(alpha, beta):
    return fNormalForm(alpha, beta).to_map()


def F_map(gamma, delta):
    return FNormalForm(gamma, delta).to_map()


# -- eigenvalues and coordinates ---------------------------------------------


def eigen_triple(g):
    """Eigenvalues at the three fixed points, repeated by multiplicity.

    A multiple fixed point has eigenvalue exactly 1.
    """
    vals = []
    for fp in g.fixed_points():
        rho = 1 + 0j if fp.multiplicity > 1 else complex(fp.eigenvalue)
        vals.extend([rho] * fp.multiplicity)
    return EigenTriple(tuple(vals))


def moduli_point(g_or_triple):
    t = g_or_triple if isinstance(g_or_triple, EigenTriple) else eigen_triple(g_or_triple)
    x, y, _ = t.symmetric()
    return ModuliPoint(x, y)


def characteristic_roots(pt: ModuliPoint):
    """Roots of t^3 - X t^2 + Y t - (X - 2), polished by Newton steps."""
    coeffs = [1, -pt.X, pt.Y, -(pt.X - 2)]
    roots = cubic_roots(*coeffs)
    out = []
    for r in roots:
        for _ in range(2):
            p = np.polyval(coeffs, r)
            dp = np.polyval([3, -2 * pt.X, pt.Y], r)
            if dp == 0:
                break
            r = r - p / dp
        out.append(complex(r))
    return out


def _admissible(a, b):
    return min(abs(a - 1), abs(b - 1), abs(a * b - 1)) > ADMISSIBLE_TOL


def from_moduli(pt: ModuliPoint):
    """A map in the class with coordinates (X, Y).

    The three ways of choosing γ among the roots are tried by decreasing
    |1 - αβ|; the first admissible pair gives f_{α,β}.  Otherwise an F normal
    form is built from a nonzero eigenvalue γ.
    """
    roots = characteristic_roots(pt)
    pairs = []
    for k in range(3):
        a, b = [roots[i] for i in range(3) if i != k]
        pairs.append((abs(1 - a * b), a, b))
    pairs.sort(key=lambda t: -t[0])
    for _, a, b in pairs:
        if _admissible(a, b):
            try:
                return f_map(a, b)
            except DegenerateMap:
                continue
    return _F_from_triple(roots)


def _F_from_triple(roots):
    order = sorted(range(3), key=lambda i: -abs(roots[i]))
    for k in order:
        gamma = roots[k]
        if abs(gamma) < ADMISSIBLE_TOL:
            continue
        alpha, beta = [roots[i] for i in range(3) if i != k]
        a = cmath.sqrt(1 - alpha * gamma)
        b = cmath.sqrt(1 - beta * gamma)
        if abs(a * -b - (1 - gamma)) < abs(a * b - (1 - gamma)):
            b = -b
        try:
            return F_map(gamma, -(a + b))
        except DegenerateMap:
            continue
    raise NoAdmissiblePair("no admissible pairing and the F normal form degenerates")


# -- conversions ---------------------------------------------------------------


def phi_closed_form(nf: fNormalForm):
    """((μ²ε - μ² + μ)z + μ√ε) / ((1 - μ)z + μ√ε), when μ is finite."""
    mu, eps, r = nf.mu, nf.eps, nf.sqrt_eps
    if is_inf(mu):
        raise InadmissibleMarking("closed form needs a finite pole μ")
    return MobiusTransform(mu * mu * eps - mu * mu + mu, mu * r, 1 - mu, mu * r)


def f_to_F(nf: fNormalForm, branch=1):
    """(F normal form, φ) with F = φ^{-1} ∘ f ∘ φ.

    φ sends +1, -1, 0 to χ+, χ-, 1 and then a = φ^{-1}(0), b = φ^{-1}(∞) are
    the nonzero fixed points of F, with (γ, δ) = (1 - ab, -a - b).  A
    negative ``branch`` swaps the sign of √ε, exchanging χ+ and χ-.
    """
    if branch < 0:
        nf = nf.swapped_branch()
    chi_p, chi_m = nf.chi()
    targets = (chi_p, chi_m, 1 + 0j)
    try:
        phi = MobiusTransform.from_points((1 + 0j, -1 + 0j, 0j), targets)
    except (ValidationError, ZeroDivisionError) as exc:
        raise InadmissibleMarking(f"critical points {chi_p}, {chi_m} collide with the fixed point 1") from exc
    for t in (chi_p, chi_m):
        if not is_inf(t) and abs(t - 1) < ADMISSIBLE_TOL:
            raise InadmissibleMarking("a critical point coincides with the fixed point 1")
    inv = phi.inverse()
    a, b = inv(0j), inv(INF)
    if is_inf(a) or is_inf(b):
        raise InadmissibleMarking("fixed point of F lands at infinity")
    return FNormalForm(1 - a * b, -a - b), phi.normalized()


def F_to_f(nf: FNormalForm):
    """α = (1 - a²)/γ and β = (1 - b²)/γ, with √ε fixed so that φ(+1) = χ+."""
    a, b = nf.fixed_pair()
    if abs(a - b) < ADMISSIBLE_TOL * max(1.0, abs(a)):
        raise DegenerateFixedPoints("F has a multiple fixed point (a = b)")
    g = nf.gamma
    alpha, beta = (1 - a * a) / g, (1 - b * b) / g
    phi = MobiusTransform(b, -a * b, a, -a * b)
    try:
        plain = fNormalForm(alpha, beta)
    except ValidationError as exc:
        raise DegenerateFixedPoints(str(exc)) from exc
    chi_p = phi(1 + 0j)
    if is_inf(plain.mu) or is_inf(chi_p):
        r = plain.sqrt_eps if is_inf(chi_p) == (plain.sqrt_eps.real > 0) else -plain.sqrt_eps
        return fNormalForm(alpha, beta, r)
    return fNormalForm(alpha, beta, chi_p / plain.mu - 1)


def alpha_beta_from_chi(chi_p, chi_m):
    """(α, β) in terms of the critical points of f."""
    s, p = chi_p + chi_m, chi_p * chi_m
    alpha = (4 * p - 2 * p * s) / (s * s - 2 * p * s)
    beta = (2 * s - 4 * p) / (2 * s - s * s)
    return alpha, beta


# -- ideal points --------------------------------------------------------------


def _label(s, tol):
    if is_inf(s):
        return None
    s = complex(s)
    if abs(s.imag) > tol or abs(s.real) > 2 + tol:
        return None
    best = None
    for q in range(1, MAX_LABEL_DENOMINATOR + 1):
        for p in range(0, q // 2 + 1):
            if math.gcd(p, q) != 1:
                continue
            d = abs(s - 2 * math.cos(2 * math.pi * p / q))
            if d < tol and (best is None or d < best[0]):
                best = (d, p, q)
        if best is not None:
            break
    return None if best is None else f"{best[1]}/{best[2]}"


def ideal_point(s=None, p=None, q=None):
    """IdealPoint from s = α + 1/α, or from a rotation number p/q."""
    if p is not None:
        if q is None:
            if isinstance(p, str):
                p = Fraction(p)
            p, q = Fraction(p).numerator, Fraction(p).denominator
        frac = Fraction(p, q)
        s = 2 * math.cos(2 * math.pi * frac.numerator / frac.denominator)
        return IdealPoint(complex(s), _label(s, LABEL_TOL))
    if s is None:
        raise ValidationError("ideal_point needs s or p/q")
    if is_inf(s):
        return IdealPoint(INF, None)
    return IdealPoint(complex(s), _label(s, LABEL_TOL))


def ideal_limit(points, tail=None):
    """Limit of Y/(X - 2) along a sequence of ModuliPoints escaping to infinity.

    The tail of the sequence is fitted by s0 + s1 h + s2 h^2 with h = |X|^{-1/2}
    (the leading correction along escape paths), and s0 is reported.  The
    label tolerance is 1e-6 because s0 is an extrapolation.
    """
    pts = list(points)
    if len(pts) < 2:
        raise NotEscaping("need at least two points")
    mags = np.array([abs(p.X) for p in pts])
    if mags[-1] < 1e3 or mags[-1] <= mags[0]:
        raise NotEscaping(f"|X| reaches only {mags[-1]:.3g}")
    if tail is None:
        tail = max(3, len(pts) // 2)
    sub = pts[-tail:]
    h = np.array([abs(p.X) ** -0.5 for p in sub])
    r = np.array([p.Y / (p.X - 2) for p in sub])
    deg = min(2, len(sub) - 1)
    A = np.vander(h, deg + 1, increasing=True).astype(complex)
    coef, *_ = np.linalg.lstsq(A, r, rcond=None)
    s0 = complex(coef[0])
    return IdealPoint(s0, _label(s0, LIMIT_LABEL_TOL))


# -- boundedness -------------------------------------------------------------


def boundedness_audit(maps, threshold=1e6):
    """Compare the eigenvalue and moduli-coordinate views of boundedness.

    Both verdicts call the sequence unbounded when their measure exceeds
    ``threshold``; |X| and |Y| are compared after taking the square root of
    |Y|, which grows like the square of the eigenvalues at worst.
    """
    max_eig, max_xy, max_norm = 0.0, 0.0, 0.0
    for g in maps:
        t = g if isinstance(g, EigenTriple) else eigen_triple(g)
        pt = moduli_point(t)
        max_eig = max(max_eig, max(abs(v) for v in t.values))
        max_xy = max(max_xy, abs(pt.X), abs(pt.Y))
        max_norm = max(max_norm, abs(pt.X), math.sqrt(abs(pt.Y)))
    eig_bounded = max_eig <= threshold
    mod_bounded = max_norm <= threshold
    return {
        "max_eigenvalue": max_eig,
        "max_XY": max_xy,
        "eigen_verdict": "bounded" if eig_bounded else "unbounded",
        "moduli_verdict": "bounded" if mod_bounded else "unbounded",
        "agree": eig_bounded == mod_bounded,
    }
