import math

import numpy as np
import pytest

from kgcavity import boundary, cauchy, kleingordon as kg
from kgcavity.characteristics_solver import OutsideDomain, build_initial_profile


# ---------------------------------------------------------------------------
# backward-characteristic geometry
# ---------------------------------------------------------------------------

def test_geometry_static_hand_iteration(static_maps):
    # F^{-1}(x) = x - 2: B(2.5, 2) = (2, 0.5), B^2 = (0.5, 0), B^3 leaves
    assert kg.lowest_vertex(static_maps, 2.5, 2.0) == pytest.approx((2.0, 0.5))
    b2 = kg.lowest_vertex(static_maps, *kg.lowest_vertex(static_maps, 2.5, 2.0))
    assert b2 == pytest.approx((0.5, 0.0))
    assert kg.depth(static_maps, 2.5, 2.0) == 2
    assert kg.time_of(2.5, 2.0) == pytest.approx(2.25)


def test_geometry_outside_domain(static_maps):
    with pytest.raises(OutsideDomain):
        kg.depth(static_maps, 1.0, 2.0)


def test_boundary_point_measure_zero(strong_maps):
    # on x = 0 (xi = eta) the rectangles are degenerate
    for t in [0.5, 1.7, 3.1]:
        assert kg.measure_M(strong_maps, t, t) <= 1e-12
    # on t = 0 (xi = -eta) M is a single point
    assert kg.measure_M(strong_maps, 0.4, -0.4) <= 1e-12


def test_measure_M_bound_random(strong_maps):
    rng = np.random.default_rng(17)
    a_max = strong_maps.motion.a_max
    for _ in range(500):
        t = rng.uniform(0.01, 6.0)
        x = rng.uniform(0.0, float(strong_maps.motion.a(t)))
        xi, eta = t + x, t - x
        assert kg.measure_M(strong_maps, xi, eta) <= 2 * a_max * kg.time_of(xi, eta) + 1e-9


def test_theta_alternating_signs(static_maps):
    rects = kg.union_M(static_maps, 2.5, 2.0)
    signs = [r[0] for r in rects]
    assert signs == [-1.0, 1.0, -1.0]
    assert rects[-1][3] is True         # last one clipped


# ---------------------------------------------------------------------------
# picard solver
# ---------------------------------------------------------------------------

def test_picard_zero_mass_shortcut(static_maps):
    data = cauchy.make_bump(1.0, 0.5, 0.25, 1.0, "right")
    fg = kg.picard_solve(data, static_maps, m=0.0, resolution=64, t_max=2.0)
    assert fg.iterations == 0
    assert fg.changes == [0.0]
    # equals the exact massless solution on the lattice
    t, xs, vals = fg.phi_slice(1.0)
    prof = build_initial_profile(data, static_maps)
    exact, _, _ = prof.phi_txy(np.full_like(xs, t), xs)
    assert np.max(np.abs(vals - exact)) <= 1e-12


def test_picard_boundary_samples_exact_zero(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.3, resolution=96, t_max=2.0)
    lat = fg.lattice
    for r in range(0, lat.R, 7):
        assert fg.phi[r, lat.Wmax - 1] == 0.0     # diagonal x = 0


def test_picard_initial_trace(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "standing")
    fg = kg.picard_solve(data, tuned_maps, m=0.3, resolution=96, t_max=2.0)
    t, xs, vals = fg.phi_slice(0.0)
    assert t == 0.0
    assert np.max(np.abs(vals - np.asarray(data.phi0(xs)))) <= 1e-10


def test_picard_eigenmode_convergence_order(static_maps):
    data = cauchy.make_eigenmode(1.0, 1, 1.0)
    om = math.sqrt(math.pi**2 + 0.25)
    errs = []
    for res in (64, 128, 256):
        fg = kg.picard_solve(data, static_maps, m=0.5, resolution=res, t_max=2.0)
        worst = 0.0
        for t in (0.7, 1.3, 1.9):
            ta, xs, vals = fg.phi_slice(t)
            worst = max(worst, float(np.max(np.abs(
                vals - np.sin(np.pi * xs) * math.cos(om * ta)))))
        errs.append(worst)
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0


def test_picard_change_sequence_dominated(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.5, resolution=128, t_max=3.0)
    ch, bd = fg.picard_bound()
    assert len(ch) >= 3
    assert np.all(ch[1:] <= bd[1:] + 1e-13 * fg.sup_phi0)
    # eventually strictly decreasing
    assert np.all(np.diff(ch[2:]) < 0)
    # converged no later than the n_max the factorial bound predicts:
    # n_pred = first n with change_0 * base^n / n! <= tol
    base = 0.5 * tuned_maps.motion.a_max * 0.5**2 * fg.lattice.s[fg.lattice.M]
    term = ch[0]
    n_pred = 0
    while term > fg.tol_abs and n_pred < 1000:
        n_pred += 1
        term *= base / n_pred
    assert fg.iterations <= n_pred


def test_picard_not_converged(static_maps):
    data = cauchy.make_eigenmode(1.0, 1, 1.0)
    with pytest.raises(kg.NotConverged) as exc_info:
        kg.picard_solve(data, static_maps, m=1.0, resolution=64, t_max=2.0,
                        n_max=2)
    assert len(exc_info.value.changes) == 2


def test_picard_incompatible_data(strong_maps):
    from kgcavity.characteristics_solver import IncompatibleData
    with pytest.raises(IncompatibleData):
        kg.picard_solve(cauchy.make_eigenmode(strong_maps.a0), strong_maps,
                        m=0.1, resolution=64, t_max=1.0)


def test_field_bound(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "right")
    for m in (0.2, 0.5):
        fg = kg.picard_solve(data, tuned_maps, m=m, resolution=96, t_max=3.0)
        assert fg.field_bound_ratio() <= 1.1


def test_grid_convergence_uniqueness_probe(tuned_maps):
    # runs at r and 2r converge to each other at O(r^2); probe times are
    # exactly representable on every lattice so no time-snap enters
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "right")
    slices = (0.75, 1.5)
    sols = {}
    for res in (64, 128, 256):
        fg = kg.picard_solve(data, tuned_maps, m=0.4, resolution=res, t_max=2.0)
        sols[res] = [fg.phi_slice(t) for t in slices]
    def diff(res_a, res_b):
        worst = 0.0
        for (ta, xa, va), (tb, xb, vb) in zip(sols[res_a], sols[res_b]):
            assert abs(ta - tb) <= 1e-12
            vi = np.interp(xa, xb, vb)
            worst = max(worst, float(np.max(np.abs(va - vi))))
        return worst
    d1 = diff(64, 128)
    d2 = diff(128, 256)
    assert d2 < d1
    assert d1 / d2 > 2.0


def test_pde_mixed_difference_residual(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "right")
    m = 0.5
    fg = kg.picard_solve(data, tuned_maps, m=m, resolution=128, t_max=2.0)
    lat = fg.lattice
    # interior band nodes with all four diagonal neighbors present
    rng = np.random.default_rng(4)
    worst = 0.0
    count = 0
    while count < 300:
        r = int(rng.integers(2, lat.R - 2))
        i = lat.n0 + r
        jlo = lat.jmin[i]
        if jlo + 3 >= i - 3:
            continue
        j = int(rng.integers(jlo + 3, i - 3))
        if not all(lat.jmin[i + di] <= j - 1 for di in (-1, 0, 1)):
            continue
        c = lat.Wmax - 1 - (i - j)
        d = lat.delta
        mixed = (fg.phi[r + 1, c] - fg.phi[r + 1, c - 2]
                 - fg.phi[r - 1, c + 2] + fg.phi[r - 1, c]) / (4 * d * d)
        # (r+1, c) is (i+1, j+1); (r+1, c-2) is (i+1, j-1), etc.
        val = fg.phi[r, c]
        worst = max(worst, abs(mixed + 0.25 * m**2 * val))
        count += 1
    # stencil truncation ~ d^2 * phi'''' scale
    assert worst <= 0.05


def test_energy_massless_cross_check(tuned_maps):
    # kleingordon.energy on an m = 0 run matches the exact massless formula;
    # combined tolerance is the (k_eff delta)^2 stencil scale, measured
    # 1.7e-3 at resolution 256 and 4.1e-4 at 512 (2nd order)
    data = cauchy.make_bump(0.5, 0.25, 0.15, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.0, resolution=256, t_max=3.0)
    prof = build_initial_profile(data, tuned_maps)
    for t in (0.5, 1.25, 2.3):
        E, Em, ta = fg.energy(t)
        assert Em == 0.0
        assert E == pytest.approx(prof.energy(ta), rel=4e-3)


def test_energy_mass_share_bound(tuned_maps):
    # (m^2/2) int phi^2 <= (m^2/2) a_max c^2 e^{a_max m^2 (t + a_max)}
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "right")
    m = 0.5
    fg = kg.picard_solve(data, tuned_maps, m=m, resolution=128, t_max=3.0)
    amax = tuned_maps.motion.a_max
    c = fg.sup_phi0 * 1.1
    for t in (0.8, 1.9, 2.7):
        _, Em, ta = fg.energy(t)
        bound = 0.5 * m**2 * amax * c**2 * math.exp(amax * m**2 * (ta + amax))
        assert Em <= bound


def test_verify_integral_identity_massless(tuned_maps):
    # m = 0: residual is pure interpolation error (measured 7e-4 at res 256,
    # 2.6e-4 at 512; wall cells contribute the O(delta) piece)
    data = cauchy.make_bump(0.5, 0.25, 0.15, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.0, resolution=256, t_max=2.5)
    res = kg.verify_integral_identity(fg, samples=60, seed=2)
    assert res <= 2.5e-3


def test_verify_integral_identity_massive(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.15, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.4, resolution=256, t_max=2.5,
                         tol=1e-8)
    res = kg.verify_integral_identity(fg, samples=60, seed=2)
    # 10 x (picard tol + interp/quadrature budget); measured residual 7.2e-4
    budget = 10.0 * (1e-8 * fg.sup_phi0 + 3e-4 * max(fg.sup_phi(), 1.0))
    assert res <= budget


def test_reflection_identity_massive(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.15, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.4, resolution=256, t_max=2.5)
    res = kg.reflection_residual(fg, samples=200, seed=5)
    assert res <= 8e-3 * max(fg.sup_phi(), 1.0)   # measured 1.8e-3


def test_export_table(tmp_path, tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.3, resolution=64, t_max=1.5)
    path = tmp_path / "field.csv"
    fg.export_table(str(path), times=[0.3, 0.9])
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,x,phi"
    assert len(lines) > 10
    t, x, phi = (float(s) for s in lines[1].split(","))
    assert abs(float(fg.interp_phi(t + x, t - x)[0]) - phi) <= 1e-9


def test_slice_unavailable_near_horizon(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.1, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.3, resolution=64, t_max=1.5)
    with pytest.raises(kg.SliceUnavailable):
        fg.energy(1.6)


def test_energy_components_additive_nonnegative(tuned_maps):
    data = cauchy.make_bump(0.5, 0.25, 0.15, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.4, resolution=128, t_max=2.0)
    for t in (0.4, 1.1, 1.8):
        E, Em, ta = fg.energy(t)
        kin, grad, mass, tb = fg.energy_components(t)
        assert ta == tb
        assert kin >= 0 and grad >= 0 and mass >= 0
        assert kin + grad + mass == pytest.approx(E, rel=1e-12)
        assert mass == pytest.approx(Em, rel=1e-12)


def test_band_nodes_satisfy_domain_inequalities(tuned_maps):
    # every stored lattice node obeys max(-xi, F^{-1}(xi)) <= eta <= xi
    data = cauchy.make_bump(0.5, 0.25, 0.15, 1.0, "right")
    fg = kg.picard_solve(data, tuned_maps, m=0.3, resolution=96, t_max=2.0)
    lat = fg.lattice
    for r in range(0, lat.R, 5):
        i = lat.n0 + r
        jlo = lat.jmin[i]
        lower = max(-lat.s[i], float(tuned_maps.F_inv(lat.s[i])))
        assert lat.s[jlo] >= lower - 1e-9 * (1 + abs(lower))
        assert jlo <= i
        # the node just below the band would violate the inequality
        if jlo > 0:
            assert lat.s[jlo - 1] < lower + 1e-9
