import numpy as np
import pytest

from qrm import quadratic_polynomial
from qrm.degeneration import g_map
from qrm.errors import ValidationError
from qrm.moduli import F_map, ModuliPoint, from_moduli
from qrm.percurves import member
from qrm.render import (
    PALETTE,
    RenderJob,
    classify_gk,
    classify_parameter,
    classify_per2,
    histogram,
    render,
)

TYPE_D_X = (-2 + 2.309401076758503j, -2 - 2.309401076758503j)


def test_basilica_is_D():
    pc = classify_parameter(quadratic_polynomial(-1))
    assert pc.combined == "D" and pc.period_pair() == (1, 2)
    assert all(abs(m) < 1e-8 for m in pc.multipliers)


@pytest.mark.parametrize("x", TYPE_D_X)
def test_per2_per3_points_are_D(x):
    pc = classify_parameter(from_moduli(ModuliPoint(x, -2 * x)))
    assert pc.combined == "D" and pc.period_pair() == (2, 3)


def test_G0_drifts():
    pc = classify_parameter(g_map(0).to_map())
    assert pc.tags == ("drift", "drift") and pc.combined == "escape"


def test_kappa_one_superattracting_fixed_point():
    (pc,) = classify_gk(np.array([1.0]))
    k = pc.periods.index(1)
    assert pc.tags[k] == "attracted" and abs(pc.multipliers[k]) < 1e-8
    assert pc.combined == "mixed"


def test_same_cycle_tags():
    # z^2 + c in the main cardioid: the finite critical point and ∞ see distinct attractors
    assert classify_parameter(quadratic_polynomial(0.1)).combined == "D"
    # F_{0.2,0} attracts both critical orbits to the fixed point 0
    pc = classify_parameter(F_map(0.2, 0.0))
    assert pc.combined == "E" and pc.heuristic


def test_undecided_when_iterations_run_out():
    pc = classify_parameter(g_map(0).to_map(), max_iter=5)
    assert pc.combined == "undecided"


def small_gk(res=32, **kw):
    return render(RenderJob.default("gk-kappa", resolution=res, max_iter=4000, **kw))


def test_gk_determinism():
    assert small_gk().ppm() == small_gk().ppm()


def test_gk_symmetries():
    res = small_gk()
    grid = res.grid_classes()
    n = len(grid)
    for i in range(n):
        for j in range(n):
            a = grid[i][j]
            neg = grid[n - 1 - i][n - 1 - j]  # -κ
            bar = grid[n - 1 - i][j]  # conj(κ)
            assert (a.combined, a.tags[::-1], a.periods[::-1]) == (neg.combined, neg.tags, neg.periods)
            assert (a.combined, a.tags, a.periods) == (bar.combined, bar.tags, bar.periods)
            for m, mb in zip(a.multipliers, bar.multipliers):
                if m is not None:
                    assert abs(m.conjugate() - mb) < 1e-6


def test_gk_grid_orientation():
    job = RenderJob.default("gk-kappa", resolution=4)
    g = job.grid()
    assert g[0, 0].imag > 0 and g[0, 0].real < 0
    assert abs(g.mean()) < 1e-12


def test_per2_slice_contains_superattracting_two_cycle():
    res = render(RenderJob.default("per2-zero-slice", resolution=24, max_iter=4000))
    for c in res.classes:
        assert any(p == 2 and m is not None and abs(m) < 1e-6 for p, m in zip(c.periods, c.multipliers))


def test_per2_pixel_maps_are_members():
    rng = np.random.default_rng(6)
    for x in rng.uniform(-6, 6, size=6) + 1j * rng.uniform(-6, 6, size=6):
        g = from_moduli(ModuliPoint(x, -2 * x))
        assert member(g, 2, 0, tol=1e-6)


def test_per2_basilica_pixel():
    (pc,) = classify_per2(np.array([2.0]))
    assert pc.combined == "D" and pc.period_pair() == (1, 2)


def test_per2_histogram_has_two_D_pairs():
    res = render(RenderJob.default("per2-zero-slice", resolution=64, max_iter=4000))
    pairs = {tuple(h["periods"]) for h in res.histogram if h["tag"] == "D"}
    assert (1, 2) in pairs and (2, 3) in pairs
    assert sum(h["count"] for h in res.histogram) == 64 * 64


def test_job_validation():
    for kw in ({"plane": "nope"}, {"plane": "gk-kappa", "resolution": 5000}, {"plane": "gk-kappa", "tol": 0}):
        with pytest.raises(ValidationError):
            RenderJob(**kw)


def test_ppm_and_sidecar(tmp_path):
    res = small_gk(res=8)
    data = res.ppm()
    assert data.startswith(b"P6\n8 8\n255\n")
    assert len(data) == len(b"P6\n8 8\n255\n") + 8 * 8 * 3
    side = res.write(tmp_path / "img.ppm")
    import json

    meta = json.load(open(side))
    assert meta["job"]["resolution"] == 8 and meta["histogram"] == res.histogram
    assert res.indices().max() < len(PALETTE)


def test_histogram_order_independent():
    classes = small_gk(res=8).classes
    assert histogram(classes) == histogram(classes[::-1])
