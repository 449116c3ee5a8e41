"""The curves Per_n(ρ) in the projective (W : X : Y) plane, for n <= 3.

Curves are homogeneous polynomials over the Gaussian rationals (sympy's
QQ_I domain), so intersection multiplicities come out exact.  Intersections
are computed by projecting from a generic point: after a random integer
change of coordinates (W, X, Y) = M (u, v, t), the resultant in t of the two
polynomials is a binary form in (u, v) whose factor exponents are the
intersection multiplicities and whose roots are the projected points.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy as sp

from .errors import CommonComponent, ContainsInfinityLine, UnsupportedPeriod, ValidationError
from .moduli import ideal_point, moduli_point
from .points import INF, is_inf

W, X, Y = sp.symbols("W X Y")
_U, _V, _T = sp.symbols("u v t")
_R = sp.Symbol("r")
DOMAIN = "QQ_I"
NUMERIC_CLUSTER = 1e-7
MAX_PROJECTION_TRIES = 12


# -- exact coefficients ---------------------------------------------------------


def exact_number(value):
    """(sympy Gaussian rational, was_numeric) for ints, Fractions, strings or floats.

    Floats are converted by their exact binary value; callers treat the
    result as numeric and cluster the output.
    """
    if isinstance(value, sp.Basic):
        re, im = sp.re(value), sp.im(value)
        if re.is_Rational and im.is_Rational:
            return sp.nsimplify(value), False
        raise ValidationError(f"{value} is not a Gaussian rational")
    if isinstance(value, (int, Fraction)):
        return sp.Rational(Fraction(value).numerator, Fraction(value).denominator), False
    if isinstance(value, str):
        s = value.strip().replace(" ", "")
        try:
            return _parse_gaussian(s), False
        except (ValueError, ZeroDivisionError):
            return exact_number(complex(s.replace("i", "j")))
    z = complex(value)
    re, im = Fraction(z.real), Fraction(z.imag)
    exact = sp.Rational(re.numerator, re.denominator) + sp.I * sp.Rational(im.numerator, im.denominator)
    return exact, True


def _parse_gaussian(s):
    """'p/q', 'a+bi', 'a/b-c/di', 'i' and the like."""
    if s.endswith(("i", "j")):
        body = s[:-1]
        split = max(body.rfind("+"), body.rfind("-"))
        if split <= 0:
            re_s, im_s = "0", body or "1"
        else:
            re_s, im_s = body[:split], body[split:]
        if im_s in ("+", "-", ""):
            im_s = im_s + "1"
        re, im = Fraction(re_s), Fraction(im_s)
    else:
        re, im = Fraction(s), Fraction(0)
    return sp.Rational(re.numerator, re.denominator) + sp.I * sp.Rational(im.numerator, im.denominator)


def exact_str(value):
    """'p/q' text of a rational, or [re, im] texts of a Gaussian rational."""
    value = sp.nsimplify(value)
    re, im = sp.re(value), sp.im(value)
    if im == 0:
        return str(sp.Rational(re))
    return [str(sp.Rational(re)), str(sp.Rational(im))]


# -- curves ---------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectiveCurve:
    poly: sp.Poly
    label: str = ""
    numeric: bool = False  # coefficients came from floating-point input

    def __post_init__(self):
        if self.poly.is_zero:
            raise ValidationError("the zero polynomial defines no curve")
        if not self.poly.is_homogeneous:
            raise ValidationError("curve polynomial must be homogeneous")

    @classmethod
    def from_expr(cls, expr, label="", numeric=False):
        return cls(sp.Poly(sp.expand(expr), W, X, Y, domain=DOMAIN), label, numeric)

    @property
    def degree(self):
        return self.poly.total_degree()

    @property
    def expr(self):
        return self.poly.as_expr()

    def __call__(self, w, x, y):
        """Numeric value at (w, x, y)."""
        return complex(self.poly.eval({W: w, X: x, Y: y}))

    def affine_value(self, x, y):
        """|H(1, x, y)| divided by the sum of |term| over the monomials."""
        total, scale = 0j, 0.0
        for (i, j, k), c in self.poly.terms():
            term = complex(c) * x ** j * y ** k
            total += term
            scale += abs(term)
        return abs(total) / scale if scale else 0.0

    def restrict_infinity(self):
        return sp.Poly(self.poly.as_expr().subs(W, 0), X, Y, domain=DOMAIN)

    def __eq__(self, other):
        if not isinstance(other, ProjectiveCurve):
            return NotImplemented
        return same_curve(self, other)

    def __hash__(self):
        return hash(self.degree)

    def to_json(self):
        terms = []
        for (i, j, k), c in self.poly.terms():
            terms.append({"W": i, "X": j, "Y": k, "coeff": exact_str(c)})
        return {"label": self.label, "degree": self.degree, "expr": str(self.expr), "terms": terms}


def same_curve(c1, c2):
    """Equal up to a nonzero scalar."""
    if c1.degree != c2.degree:
        return False
    t1, t2 = dict(c1.poly.terms()), dict(c2.poly.terms())
    if set(t1) != set(t2):
        return False
    m = next(iter(t1))
    ratio = sp.nsimplify(t1[m] / t2[m])
    return sp.expand(c1.expr - ratio * c2.expr) == 0


def per_polynomial(n, rho):
    """The defining polynomial of Per_n(ρ) as a sympy expression (ρ may be symbolic)."""
    if n == 1:
        return rho ** 3 * W - rho ** 2 * X + rho * Y - X + 2 * W
    if n == 2:
        return rho * W - 2 * X - Y
    if n == 3:
        return (
            rho ** 2 * W ** 3
            - rho * (W * X * (2 * X + Y) + 3 * W ** 2 * X + 2 * W ** 3)
            + (X + Y) ** 2 * (2 * X + Y)
            - W * X * (X + 2 * Y)
            + 12 * W ** 2 * X
            + 28 * W ** 3
        )
    raise UnsupportedPeriod(f"explicit Per_n curves exist here only for n <= 3, not {n}")


def per_curve(n, rho):
    """Per_n(ρ) for n in {1, 2, 3}; ρ exact Gaussian rational, or numeric."""
    if n not in (1, 2, 3):
        raise UnsupportedPeriod(f"explicit Per_n curves exist here only for n <= 3, not {n}")
    r, numeric = exact_number(rho)
    return ProjectiveCurve.from_expr(per_polynomial(n, r), label=f"Per_{n}({rho})", numeric=numeric)


def d_of_n(n):
    """d(n) from Σ_{m | n} d(m) = 2^(n-1)."""
    if n < 1:
        raise ValidationError("d(n) needs n >= 1")
    cache = {}
    for k in range(1, n + 1):
        cache[k] = 2 ** (k - 1) - sum(cache[m] for m in range(1, k) if k % m == 0)
    return cache[n]


# -- divisibility -----------------------------------------------------------------


def divides(c1, c2):
    """True when the polynomial of c1 divides that of c2 exactly."""
    _, rem = sp.div(c2.poly, c1.poly)
    return rem.is_zero


def root_of_unity_product(p_over_q_den, inner):
    """Π Per_inner(ζ) over the primitive q-th roots of unity ζ, as an exact curve.

    This is the resultant in r of the cyclotomic polynomial Φ_q and
    Per_inner(r), which has rational coefficients.
    """
    q = p_over_q_den
    phi = sp.cyclotomic_poly(q, _R)
    expr = sp.resultant(phi, per_polynomial(inner, _R), _R)
    return ProjectiveCurve.from_expr(expr, label=f"prod Per_{inner}(e^(2πip/{q}))")


def decompose(n):
    """Split Per_n(1) into Per_n^#(1) and the factors Per_{n/q}(e^{2πip/q}), 1 < q | n.

    Returns a dict with the quotient curve ('sharp', or None when the
    quotient is a constant), its degree, the factors, and whether the
    division was exact.
    """
    if n not in (1, 2, 3):
        raise UnsupportedPeriod(f"decompose supports n <= 3, not {n}")
    total = per_curve(n, 1)
    factors = [root_of_unity_product(q, n // q) for q in range(2, n + 1) if n % q == 0]
    poly = total.poly
    exact = True
    for f in factors:
        quo, rem = sp.div(poly, f.poly)
        exact = exact and rem.is_zero
        poly = quo
    sharp = None if poly.total_degree() == 0 else ProjectiveCurve(poly, label=f"Per_{n}^#(1)")
    return {
        "sharp": sharp,
        "sharp_degree": poly.total_degree(),
        "constant": None if sharp is not None else poly.as_expr(),
        "factors": factors,
        "exact": exact,
    }


# -- intersection -----------------------------------------------------------------


@dataclass(frozen=True)
class IntersectionPoint:
    coords: tuple  # (w, x, y), exact sympy numbers or complex
    multiplicity: int
    exact: bool

    def at_infinity(self):
        w = self.coords[0]
        return w == 0 if self.exact else abs(complex(w)) < NUMERIC_CLUSTER

    def numeric(self):
        return tuple(complex(c) for c in self.coords)

    def affine(self):
        """(X, Y) for a finite point."""
        w, x, y = self.numeric()
        return x / w, y / w

    def ideal(self):
        """IdealPoint for a point on W = 0, via s = Y/X."""
        _, x, y = self.numeric()
        if abs(x) < 1e-300:
            return ideal_point(INF)
        return ideal_point(y / x)

    def to_json(self):
        if self.exact:
            w, x, y = (exact_str(c) for c in self.coords)
        else:
            w, x, y = ([c.real, c.imag] for c in self.numeric())
        out = {"W": w, "X": x, "Y": y, "mult": self.multiplicity}
        if self.at_infinity():
            out["ideal"] = _ideal_text(self.ideal())
        return out


@dataclass(frozen=True)
class IntersectionCycle:
    points: tuple

    @property
    def total(self):
        return sum(p.multiplicity for p in self.points)

    def at_infinity(self):
        return IntersectionCycle(tuple(p for p in self.points if p.at_infinity()))

    def finite(self):
        return IntersectionCycle(tuple(p for p in self.points if not p.at_infinity()))

    def ideal_labels(self):
        out = []
        for p in self.points:
            if p.at_infinity():
                out.extend([_ideal_text(p.ideal())] * p.multiplicity)
        return out

    def to_json(self):
        return {
            "points": [p.to_json() for p in self.points],
            "total": self.total,
            "ideal_labels": self.ideal_labels(),
        }


def _ideal_text(ip):
    """'p/q' for a labeled ideal point, otherwise 's=<value>'."""
    if ip.label is not None:
        return ip.label
    if is_inf(ip.s):
        return "s=inf"
    s = complex(ip.s)
    return f"s={s.real:.12g}" if abs(s.imag) < 1e-12 else f"s={s.real:.12g}{s.imag:+.12g}i"


def _normalize(coords, exact):
    if exact:
        coords = [sp.nsimplify(c) for c in coords]
        for c in coords:
            if c != 0:
                return tuple(sp.nsimplify(sp.expand(x / c)) for x in coords)
        raise ValidationError("zero projective point")
    coords = [complex(c) for c in coords]
    k = next(i for i, c in enumerate(coords) if abs(c) > 1e-14 * max(abs(d) for d in coords))
    return tuple(c / coords[k] for c in coords)


def _transform(curve_expr, M):
    (a, b, c), (d, e, f), (g, h, i) = M
    sub = {W: a * _U + b * _V + c * _T, X: d * _U + e * _V + f * _T, Y: g * _U + h * _V + i * _T}
    return sp.Poly(sp.expand(curve_expr.subs(sub, simultaneous=True)), _U, _V, _T, domain=DOMAIN)


def _random_matrix(rng):
    while True:
        M = [[rng.randint(-4, 4) for _ in range(3)] for _ in range(3)]
        if sp.Matrix(M).det() != 0:
            return M


def _binary_roots(factor):
    """Projective roots [u : v] of an irreducible binary form, exact when linear."""
    deg = factor.total_degree()
    cu = factor.coeff_monomial(_U ** deg)
    if deg == 1:
        a = factor.coeff_monomial(_U)
        b = factor.coeff_monomial(_V)
        return [((b, -a), True)]
    if cu == 0:
        # divisible by v only if linear, which was handled above
        raise ValidationError("irreducible binary form of degree > 1 with u^deg coefficient 0")
    univ = sp.Poly(factor.as_expr().subs(_V, 1), _U)
    roots = sp.Poly(univ, _U).nroots(n=30, maxsteps=200)
    return [((complex(r), 1 + 0j), False) for r in roots]


def _common_t(F, G, u0, v0, exact):
    """The t-coordinate of the unique common root on the line [u0 : v0 : *]."""
    if exact:
        f = sp.Poly(F.as_expr().subs({_U: u0, _V: v0}), _T, domain=DOMAIN)
        g = sp.Poly(G.as_expr().subs({_U: u0, _V: v0}), _T, domain=DOMAIN)
        h = sp.gcd(f, g)
        if h.degree() != 1:
            return None
        c1, c0 = h.all_coeffs()
        return -c0 / c1
    f = sp.Poly(F.as_expr().subs({_U: u0, _V: v0}), _T)
    g = sp.Poly(G.as_expr().subs({_U: u0, _V: v0}), _T)
    fc = [complex(c) for c in f.all_coeffs()]
    gc = [complex(c) for c in g.all_coeffs()]
    cand = np.roots(fc)
    gscale = lambda t: sum(abs(c) * abs(t) ** k for k, c in enumerate(gc[::-1]))
    vals = sorted((abs(np.polyval(gc, t)) / gscale(t), t) for t in cand)
    if not vals or vals[0][0] > 1e-6:
        return None
    if len(vals) > 1 and vals[1][0] < 1e-6 and abs(vals[1][1] - vals[0][1]) > 1e-6:
        return None
    return complex(vals[0][1])


def _cluster_cycle(points):
    """Merge numerically coincident points (radius 1e-7), adding multiplicities."""
    merged = []
    for p in points:
        q = p.numeric()
        for k, (rep, m) in enumerate(merged):
            r = rep.numeric()
            if max(abs(a - b) for a, b in zip(q, r)) < NUMERIC_CLUSTER:
                merged[k] = (rep, m + p.multiplicity)
                break
        else:
            merged.append((p, p.multiplicity))
    return IntersectionCycle(tuple(IntersectionPoint(r.coords, m, r.exact) for r, m in merged))


def intersect(c1, c2, seed=0):
    """Intersection cycle of two curves without a common component."""
    g = sp.gcd(c1.poly, c2.poly)
    if g.total_degree() > 0:
        raise CommonComponent(f"common component {g.as_expr()}")
    rng = random.Random(seed)
    numeric = c1.numeric or c2.numeric
    for _ in range(MAX_PROJECTION_TRIES):
        M = _random_matrix(rng)
        F, G = _transform(c1.expr, M), _transform(c2.expr, M)
        # the projection center (0 : 0 : 1) must lie on neither curve
        if F.coeff_monomial(_T ** c1.degree) == 0 or G.coeff_monomial(_T ** c2.degree) == 0:
            continue
        res = sp.Poly(sp.resultant(F.as_expr(), G.as_expr(), _T), _U, _V, domain=DOMAIN)
        _, factors = res.factor_list()
        pts = []
        ok = True
        for fac, mult in factors:
            if fac.total_degree() == 0:
                continue
            for (u0, v0), exact in _binary_roots(fac):
                t0 = _common_t(F, G, u0, v0, exact)
                if t0 is None:
                    ok = False
                    break
                (a, b, c), (d, e, f), (gg, h, i) = M
                coords = (
                    a * u0 + b * v0 + c * t0,
                    d * u0 + e * v0 + f * t0,
                    gg * u0 + h * v0 + i * t0,
                )
                pts.append(IntersectionPoint(_normalize(coords, exact), int(mult), exact))
            if not ok:
                break
        if not ok:
            continue
        cycle = IntersectionCycle(tuple(pts))
        if cycle.total != c1.degree * c2.degree:
            continue
        return _cluster_cycle(pts) if numeric else cycle
    raise ValidationError("no generic projection found for this pair of curves")


def intersect_at_infinity(curve):
    """The cycle C • L on the line W = 0, with ideal-point labels."""
    rest = curve.restrict_infinity()
    if rest.is_zero:
        raise ContainsInfinityLine(f"{curve.label} contains the line at infinity")
    if rest.total_degree() != curve.degree:
        raise ContainsInfinityLine("restriction to W = 0 drops degree")
    _, factors = rest.factor_list()
    pts = []
    for fac, mult in factors:
        if fac.total_degree() == 0:
            continue
        fac_uv = sp.Poly(fac.as_expr().subs({X: _U, Y: _V}, simultaneous=True), _U, _V, domain=DOMAIN)
        for (x0, y0), exact in _binary_roots(fac_uv):
            pts.append(IntersectionPoint(_normalize((0, x0, y0), exact), int(mult), exact))
    cycle = IntersectionCycle(tuple(pts))
    return _cluster_cycle(pts) if curve.numeric else cycle


# -- membership -----------------------------------------------------------------


def member(g, n, rho, tol=1e-6, poly_tol=1e-8, report=False):
    """Whether [g] lies on Per_n(ρ): some exact-period n cycle has eigenvalue ρ.

    For n <= 3 the verdict is cross-checked against the normalized value of
    the defining polynomial at (1, X, Y); with ``report`` both verdicts are
    returned.
    """
    from .cycles import cycles

    rho_c = complex(sp.N(rho)) if isinstance(rho, sp.Basic) else complex(exact_value(rho))
    cyc = cycles(g, n)
    numeric = any(abs(c.eigenvalue - rho_c) < tol for c in cyc)
    if n == 1:
        numeric = any(abs(v - rho_c) < tol for v in _all_fixed_eigen(g))
    poly = None
    if n <= 3:
        pt = moduli_point(g)
        curve = ProjectiveCurve.from_expr(per_polynomial(n, sp.nsimplify(rho_c, rational=True)))
        poly = curve.affine_value(pt.X, pt.Y) < poly_tol
    if report:
        return {"cycles": numeric, "polynomial": poly, "agree": poly is None or poly == numeric}
    return numeric


def _all_fixed_eigen(g):
    from .moduli import eigen_triple

    return eigen_triple(g).values


def exact_value(rho):
    if isinstance(rho, str):
        r, _ = exact_number(rho)
        return complex(sp.N(r))
    return complex(rho) if not isinstance(rho, Fraction) else float(rho)
