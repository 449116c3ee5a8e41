import cmath
from fractions import Fraction

import numpy as np
import pytest

from qrm import INF, MobiusTransform, chordal, is_inf, quadratic_polynomial
from qrm.degeneration import DegenerationPath, path_maps
from qrm.errors import DegenerateFixedPoints, NotEscaping, ValidationError
from qrm.moduli import (
    EigenTriple,
    FNormalForm,
    ModuliPoint,
    alpha_beta_from_chi,
    boundedness_audit,
    characteristic_roots,
    eigen_triple,
    f_map,
    F_to_f,
    f_to_F,
    fNormalForm,
    from_moduli,
    ideal_limit,
    ideal_point,
    moduli_point,
    phi_closed_form,
)

from conftest import random_map, random_maps

SQ5 = 5 ** 0.5


def same_multiset(a, b, tol):
    b = list(b)
    for x in a:
        j = min(range(len(b)), key=lambda k: abs(x - b[k]))
        if abs(x - b[j]) > tol:
            return False
        b.pop(j)
    return True


def test_eigen_triple_examples():
    t = eigen_triple(f_map(0.5, 0.25))
    assert same_multiset(t.values, [0.5, 0.25, 10 / 7], 1e-12)
    t = eigen_triple(quadratic_polynomial(-1))
    assert same_multiset(t.values, [1 + SQ5, 1 - SQ5, 0], 1e-12)
    t = eigen_triple(quadratic_polynomial(0.25))
    assert any(abs(v - 1) < 1e-9 for v in t.values)
    assert t.residual() < 1e-9


def test_moduli_point_examples():
    pt = moduli_point(f_map(0.5, 0.25))
    assert abs(pt.X - 61 / 28) < 1e-12 and abs(pt.Y - 67 / 56) < 1e-12
    pt = moduli_point(quadratic_polynomial(-1))
    assert abs(pt.X - 2) < 1e-12 and abs(pt.Y + 4) < 1e-12
    for c in (0.3, -2 + 1j, 0.25, 1j):
        assert abs(moduli_point(quadratic_polynomial(c)).X - 2) < 1e-10


def test_sigma3_is_X_minus_2():
    for g in random_maps(30, 11):
        t = eigen_triple(g)
        x, _, s3 = t.symmetric()
        assert abs(s3 - (x - 2)) < 1e-9 * max(1, abs(x))


def test_from_moduli_examples():
    g = from_moduli(ModuliPoint(61 / 28, 67 / 56))
    assert same_multiset(eigen_triple(g).values, [0.5, 0.25, 10 / 7], 1e-9)
    g = from_moduli(ModuliPoint(2, -4))
    assert same_multiset(eigen_triple(g).values, [1 + SQ5, 1 - SQ5, 0], 1e-9)


def test_from_moduli_all_pairings_inadmissible():
    # (t - 1)^3: every pairing has α = β = 1, so the F normal form is used;
    # it is F_{1,0}, whose only fixed point 0 is triple
    g = from_moduli(ModuliPoint(3, 3))
    fps = g.fixed_points()
    assert len(fps) == 1 and fps[0].multiplicity == 3
    assert same_multiset(eigen_triple(g).values, [1, 1, 1], 1e-12)


def test_from_moduli_round_trip_random():
    rng = np.random.default_rng(5)
    for _ in range(50):
        X, Y = rng.normal(size=2) * 3 + 1j * rng.normal(size=2) * 3
        pt = moduli_point(from_moduli(ModuliPoint(X, Y)))
        assert abs(pt.X - X) < 1e-7 and abs(pt.Y - Y) < 1e-7


def test_characteristic_roots():
    roots = characteristic_roots(ModuliPoint(2, -4))
    assert same_multiset(roots, [0, 1 + SQ5, 1 - SQ5], 1e-12)


def test_f_to_F_flip_example():
    nf = fNormalForm(-1, 0)
    F, _ = f_to_F(nf, branch=-1)
    assert abs(F.gamma - 3) < 1e-12 and abs(F.delta + 1) < 1e-12
    a, b = F.fixed_pair()
    assert same_multiset([a, b], [2, -1], 1e-12)
    assert abs((1 - a * a) / F.gamma - (-1)) < 1e-12 or abs((1 - b * b) / F.gamma - (-1)) < 1e-12


def conj_check(nf, branch):
    f = nf.to_map()
    F, phi = f_to_F(nf, branch)
    Fm = F.to_map()
    inv = phi.inverse()
    rng = np.random.default_rng(0)
    zs = rng.normal(size=20) + 1j * rng.normal(size=20)
    for z in zs:
        assert chordal(Fm(z), inv(f(phi(z)))) < 1e-8
    # φ sends +1, -1, a, b, 0 to χ+, χ-, 0, ∞, 1
    chi_p, chi_m = (nf if branch > 0 else nf.swapped_branch()).chi()
    a, b = F.fixed_pair()
    images = {phi(1 + 0j): chi_p, phi(-1 + 0j): chi_m, phi(0j): 1}
    for got, want in images.items():
        assert chordal(got, want) < 1e-8
    # fixed_pair does not order a and b
    pa, pb = phi(a), phi(b)
    if chordal(pa, 0) > chordal(pb, 0):
        pa, pb = pb, pa
    assert chordal(pa, 0) < 1e-8 and chordal(pb, INF) < 1e-8
    return F


@pytest.mark.parametrize("ab", [(0.5, 0.25), (-1, 0), (0.3 + 1j, -2j), (2, 3)])
def test_f_to_F_conjugacy(ab):
    nf = fNormalForm(*ab)
    F1 = conj_check(nf, 1)
    F2 = conj_check(nf, -1)
    # swapping the marking of the critical points is conjugation by z -> -z
    assert abs(F1.gamma - F2.gamma) < 1e-9
    assert abs(F1.delta + F2.delta) < 1e-9


def test_f_to_F_gamma_from_fixed_points():
    nf = fNormalForm(0.5, 0.25)
    F, _ = f_to_F(nf)
    a, b = F.fixed_pair()
    g = F.to_map()
    assert abs(g(a) - a) < 1e-10 and abs(g(b) - b) < 1e-10
    assert abs(F.gamma - (1 - a * b)) < 1e-12


def test_F_to_f_examples():
    f = F_to_f(FNormalForm(3, -1))
    assert same_multiset([f.alpha, f.beta], [-1, 0], 1e-12)
    f = F_to_f(FNormalForm(0.5, 0))
    assert abs(f.alpha - f.beta) < 1e-12


def test_F_round_trip():
    rng = np.random.default_rng(8)
    for _ in range(20):
        gamma, delta = rng.normal(size=2) + 1j * rng.normal(size=2)
        F = FNormalForm(gamma, delta)
        back, _ = f_to_F(F_to_f(F))
        assert abs(back.gamma - gamma) < 1e-9 and abs(back.delta - delta) < 1e-9


def test_F_to_f_degenerate():
    # δ^2 = 4(1 - γ)
    with pytest.raises(DegenerateFixedPoints):
        F_to_f(FNormalForm(0.75, 1))


def test_F_derivative_uses_squared_denominator():
    F = FNormalForm(2 + 1j, 0.4)
    g = F.to_map()
    for z in (0.3, -1.2 + 0.5j, 2j):
        assert abs(F.derivative(z) - g.multiplier(z)) < 1e-12
    a, _ = F.fixed_pair()
    assert abs(F.derivative(a) - (1 - a * a) / F.gamma) < 1e-12


def test_phi_closed_form():
    nf = fNormalForm(0.5, 0.25)
    phi = phi_closed_form(nf)
    _, psi = f_to_F(nf)
    for z in (0.2, 1 + 1j, -3):
        assert chordal(phi(z), psi(z)) < 1e-10


def test_alpha_beta_from_chi():
    nf = fNormalForm(0.3 - 0.2j, 1.7j)
    a, b = alpha_beta_from_chi(*nf.chi())
    assert abs(a - nf.alpha) < 1e-10 and abs(b - nf.beta) < 1e-10


def test_ideal_point_examples():
    p = ideal_point(p=1, q=2)
    assert abs(p.s + 2) < 1e-15 and p.label == "1/2"
    p = ideal_point(p=1, q=3)
    assert abs(p.s + 1) < 1e-12 and p.label == "1/3"
    assert ideal_point(s=0.123).label is None
    assert ideal_point(s=INF).label is None


def test_ideal_limit_path():
    path = DegenerationPath(1, 2, 1.0)
    pts = [moduli_point(EigenTriple(path.triple(e))) for e in np.logspace(-3, -7, 9)]
    assert ideal_limit(pts).label == "1/2"


def test_ideal_limit_not_escaping():
    g = f_map(0.5, 0.25)
    with pytest.raises(NotEscaping):
        ideal_limit([moduli_point(g)] * 5)


def test_boundedness_audit():
    rep = boundedness_audit([f_map(0.5, 0.25)] * 4)
    assert rep["eigen_verdict"] == rep["moduli_verdict"] == "bounded"
    path = DegenerationPath(1, 2, 1.0)
    triples = [EigenTriple(path.triple(e)) for e in (1e-3, 1e-5, 1e-7)]
    rep = boundedness_audit(triples)
    assert rep["eigen_verdict"] == rep["moduli_verdict"] == "unbounded"


def test_boundedness_type_D_samples():
    # the two finite points of Per_2(0) . Per_3(0)
    maps = [from_moduli(ModuliPoint(x, -2 * x)) for x in (-2 + 2.309401076758503j, -2 - 2.309401076758503j)]
    rep = boundedness_audit(maps)
    assert rep["eigen_verdict"] == rep["moduli_verdict"] == "bounded"


def test_abc_residual_random():
    for g in random_maps(100, 13):
        assert eigen_triple(g).residual() < 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_conjugate_maps_same_coordinates(seed):
    rng = np.random.default_rng(300 + seed)
    g = random_map(rng)
    h = g.conjugate(MobiusTransform(*(rng.normal(size=4) + 1j * rng.normal(size=4))))
    p, q = moduli_point(g), moduli_point(h)
    assert abs(p.X - q.X) < 1e-8 * max(1, abs(p.X)) and abs(p.Y - q.Y) < 1e-8 * max(1, abs(p.Y))


def test_distinct_classes_distinct_coordinates():
    maps = random_maps(20, 17)
    pts = [moduli_point(g) for g in maps]
    for i in range(len(pts)):
        for j in range(i):
            assert abs(pts[i].X - pts[j].X) + abs(pts[i].Y - pts[j].Y) > 1e-6


def test_f_normal_form_fixed_points_random():
    rng = np.random.default_rng(21)
    count = 0
    while count < 200:
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        try:
            nf = fNormalForm(a, b)
            f = nf.to_map()
        except ValidationError:
            continue
        count += 1
        assert abs(f(0)) < 1e-12 and abs(f(1) - 1) < 1e-9 and is_inf(f(INF))
        assert abs(f.multiplier(0) - a) < 1e-9
        assert abs(f.multiplier(INF) - b) < 1e-9
        assert abs(f.multiplier(1) - nf.gamma) < 1e-9 * max(1, abs(nf.gamma))


def test_f_normal_form_derived_quantities():
    rng = np.random.default_rng(22)
    for _ in range(50):
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        nf = fNormalForm(a, b)
        f = nf.to_map()
        eps = nf.eps
        assert abs(eps - (1 - a) * (1 - b) / (nf.gamma - 1)) < 1e-9 * max(1, abs(eps))
        assert is_inf(f(nf.mu)) or chordal(f(nf.mu), INF) < 1e-8
        assert chordal(f(nf.nu), 0) < 1e-8
        cp, cm = nf.chi()
        assert abs((cp + cm) / 2 - nf.mu) < 1e-9 * max(1, abs(nf.mu))
        assert abs(((cp - cm) / (cp + cm)) ** 2 - eps) < 1e-9 * max(1, abs(eps))
        for c in (cp, cm):
            assert abs(f.multiplier(c)) < 1e-8 * max(1, abs(c))


def test_f_normal_form_rejects_inadmissible():
    for a, b in ((1, 0.3), (0.3, 1), (2, 0.5)):
        with pytest.raises(ValidationError):
            fNormalForm(a, b)
