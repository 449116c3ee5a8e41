"""Acceptance criteria, one test each.  Every test prints a PASS/FAIL line."""

import math
import time
from functools import lru_cache

import numpy as np
import pytest
import sympy as sp

from qrm import INF, is_inf
from qrm.cycles import cycles
from qrm.degeneration import DegenerationPath, index_limit, limit_error, q_cycle_count, track_cycles, g_map
from qrm.local import fs_audit, ind_contour, index_sum_audit, mult_contour, fixed_point_records
from qrm.moduli import ModuliPoint, eigen_triple, from_moduli
from qrm.percurves import (
    W,
    X,
    Y,
    d_of_n,
    intersect,
    intersect_at_infinity,
    per_curve,
    per_polynomial,
)
from qrm.render import RenderJob, render
from qrm.sphere import RationalMap2

from conftest import random_maps


def verdict(number, ok, detail):
    print(f"\n[acceptance {number}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


@lru_cache(maxsize=None)
def sample():
    return tuple(random_maps(500, 2024))


def test_01_index_formula():
    start = time.perf_counter()
    worst, mult_ok = 0.0, True
    for g in sample():
        recs = fixed_point_records(g)
        mult_ok &= sum(r.multiplicity for r in recs) == 3
        worst = max(worst, abs(sum(r.index for r in recs) - 1))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and mult_ok and elapsed < 30
    verdict(1, ok, f"max |Σ ind - 1| = {worst:.2e}, multiplicities sum to 3: {mult_ok}, {elapsed:.1f} s")


def test_02_eigenvalue_relation():
    worst = max(eigen_triple(g).residual() for g in sample())
    verdict(2, worst < 1e-9, f"max |αβγ - (α+β+γ) + 2| = {worst:.2e}")


def test_03_contour_invariants():
    parabolic = RationalMap2([1, 1, 0, 0, 0, 1])
    m1 = mult_contour(parabolic, 0)
    i1 = ind_contour(parabolic, 0)
    m2 = mult_contour(g_map(0).to_map(), INF)
    i2 = ind_contour(g_map(2).to_map(), INF)
    ok = m1 == 2 and abs(i1) < 1e-8 and m2 == 3 and abs(i2 - 0.75) < 1e-8
    verdict(3, ok, f"mult(z+z²,0)={m1}, ind(z+z²,0)={abs(i1):.1e}, mult(G_0,∞)={m2}, ind(G_2,∞)-0.75={abs(i2 - 0.75):.1e}")


def test_04_exact_curve_facts():
    I = sp.I
    facts = {}
    facts["degrees"] = all(per_curve(n, sp.Rational(1, 5)).degree == d_of_n(n) for n in (1, 2, 3))
    rhos = [0, 1, 2, -3, sp.Rational(1, 2), sp.Rational(-7, 3), I, 1 + I, sp.Rational(2, 9) - 3 * I, 5]
    facts["infinity"] = all(
        sorted(intersect_at_infinity(per_curve(2, r)).ideal_labels()) == ["1/2"]
        and sorted(intersect_at_infinity(per_curve(3, r)).ideal_labels()) == ["1/2", "1/3", "1/3"]
        for r in rhos
    )
    omega = sp.Rational(-1, 2) + sp.sqrt(3) * I / 2
    prod = -per_polynomial(2, -3) * per_polynomial(1, omega) * per_polynomial(1, sp.conjugate(omega))
    facts["product"] = sp.expand(prod - per_polynomial(3, 1)) == 0
    tangent = True
    for r in (0, 2, I):
        cyc = intersect(per_curve(2, -3), per_curve(3, r))
        tangent &= [(p.multiplicity, p.ideal().label) for p in cyc.points] == [(3, "1/2")]
    facts["tangency"] = tangent
    bezout = True
    for n1, r1, n2, r2 in [
        (1, 0, 2, 0),
        (1, 0, 3, 0),
        (2, 0, 3, 0),
        (2, -3, 3, 0),
        (2, -3, 3, 2),
        (2, -3, 3, I),
        (1, sp.Rational(1, 3), 3, 1 + I),
        (3, 0, 3, 2),
        (1, 2, 1, -1),
    ]:
        c = intersect(per_curve(n1, r1), per_curve(n2, r2))
        bezout &= c.total == d_of_n(n1) * d_of_n(n2)
    facts["bezout"] = bezout
    verdict(4, all(facts.values()), ", ".join(f"{k}: {v}" for k, v in facts.items()))


def test_05_dynamical_algebraic_agreement():
    (p,) = intersect(per_curve(1, 0), per_curve(2, 0)).points
    x, y = p.affine()
    g = from_moduli(ModuliPoint(x, y))
    fixed = min(abs(r.eigenvalue) for r in fixed_point_records(g))
    two = min(abs(c.eigenvalue) for c in cycles(g, 2))
    ok = (x, y) == (2, -4) and fixed < 1e-8 and two < 1e-8
    detail = f"(2,-4): fixed |ρ|={fixed:.1e}, 2-cycle |ρ|={two:.1e}"
    pts = intersect(per_curve(1, 0), per_curve(3, 0)).points
    ok &= len(pts) == 3
    worst_c, worst_rho = 0.0, 0.0
    for q in pts:
        x, y = q.affine()
        c = y / 4
        worst_c = max(worst_c, abs(c ** 3 + 2 * c ** 2 + c + 1), abs(x - 2))
        g = from_moduli(ModuliPoint(x, y))
        worst_rho = max(worst_rho, min(abs(cy.eigenvalue) for cy in cycles(g, 3)))
    ok &= worst_c < 1e-10 and worst_rho < 1e-8
    verdict(5, ok, detail + f"; Per_1(0)•Per_3(0): cubic residual {worst_c:.1e}, 3-cycle |ρ| {worst_rho:.1e}")


def test_06_d_sequence():
    seq = [d_of_n(n) for n in range(1, 11)]
    degrees = [per_curve(n, 0).degree for n in (1, 2, 3)]
    ok = seq == [1, 1, 3, 6, 15, 27, 63, 120, 252, 495] and degrees == seq[:3]
    verdict(6, ok, f"d(1..10) = {seq}, curve degrees {degrees}")


def test_07_degeneration_convergence():
    path = DegenerationPath(1, 2, 1.0)
    e4 = limit_error(path, 1e-4, r=1.0)
    e6 = limit_error(path, 1e-6, r=1.0)
    ratio = e4 / e6
    ok = e4 < 0.05 and 5 <= ratio <= 20
    verdict(7, ok, f"sup error {e4:.3e} at ε=1e-4 (< 0.05: {e4 < 0.05}), error ratio {ratio:.1f} (want [5, 20])")


def test_08_index_sum_limit():
    rep = index_limit(DegenerationPath(1, 2, 1.0), 1e-4)
    S = rep["S"]
    ok = abs(S - 0.5) < 1e-3 and rep["rederived_limit"] == 0.5
    verdict(8, ok, f"S = {S.real:.7f}{S.imag:+.1e}i, 1-q/T² = {rep['rederived_limit']}, printed 1-1/T² = {rep['printed_limit']}")


def test_09_cycle_tracking():
    rep = track_cycles(DegenerationPath(1, 2, 0.5), [1e-6], 2)
    cs = rep["positions"][0]["cycles"]
    ok = len(cs) == 1
    detail = f"{len(cs)} bounded 2-cycle(s)"
    if ok:
        pts, rho = cs[0]["points"], cs[0]["eigenvalue"]
        near = [z for z in pts if not is_inf(z) and abs(z + 1) < 0.05]
        far = [z for z in pts if is_inf(z) or abs(z) > 1e3]
        ok = len(near) == 1 and len(far) == 1 and abs(rho) < 0.05
        detail += f", points {pts}, |ρ| = {abs(rho):.2e}"
    verdict(9, ok, detail)


def test_10_q_cycle_count():
    n = q_cycle_count(DegenerationPath(1, 2, 1.0), 1e-6, r=10)
    verdict(10, n == 4, f"argument-principle count {n}")


def test_11_fatou_shishikura():
    worst, violations = 0, 0
    for g in random_maps(200, 611):
        rep = fs_audit(g, 6)
        worst = max(worst, rep["count"])
        violations += rep["violation"]
    verdict(11, worst <= 2 and violations == 0, f"largest census {worst}, violations {violations}")


def test_12_rendering():
    job = RenderJob.default("gk-kappa", resolution=64)
    a, b = render(job), render(job)
    identical = a.ppm() == b.ppm()
    grid = a.grid_classes()
    n = len(grid)
    neg = all(
        (grid[i][j].combined, grid[i][j].tags[::-1], grid[i][j].periods[::-1])
        == (grid[n - 1 - i][n - 1 - j].combined, grid[n - 1 - i][n - 1 - j].tags, grid[n - 1 - i][n - 1 - j].periods)
        for i in range(n)
        for j in range(n)
    )
    conj = all(
        (grid[i][j].combined, grid[i][j].tags, grid[i][j].periods)
        == (grid[n - 1 - i][j].combined, grid[n - 1 - i][j].tags, grid[n - 1 - i][j].periods)
        for i in range(n)
        for j in range(n)
    )
    per2 = render(RenderJob.default("per2-zero-slice", resolution=128))
    pairs = {tuple(h["periods"]) for h in per2.histogram if h["tag"] == "D"}
    ok = identical and neg and conj and (1, 2) in pairs and (2, 3) in pairs
    verdict(12, ok, f"bit-identical {identical}, κ↔-κ {neg}, κ↔κ̄ {conj}, D pairs include (1,2): {(1, 2) in pairs}, (2,3): {(2, 3) in pairs}")
