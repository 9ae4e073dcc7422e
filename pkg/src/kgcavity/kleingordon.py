"""Massive Klein-Gordon solver by Picard iteration on a characteristic lattice.

Route: the equation phi_{xi eta} = -(m^2/4) phi is solved by feeding
f = -(m^2/4) phi^{(n-1)} through the explicit profile construction

    phi^{(n)}(xi, eta) = (m^2/4) T[phi^{(n-1)}](xi, eta) + G(eta) - G(xi),
    T[w](xi, eta) = int_{|eta|}^{xi} dy int_{eta}^{y} dz w(y, z),

with G rebuilt each sweep from the data plus prolongation corrections.
Everything lives on one uniform grid s_j = -a(0) + j*delta shared by both
characteristic coordinates; the admissible nodes form a banded strip
max(-xi, F^{-1}(xi)) <= eta <= xi whose cumulative trapezoid tables give
every triangle integral in O(band) work per sweep.

G is stored as (exact massless part) + (mass correction): the massless part
is evaluated by exact F-pullback, so interpolation error enters only
through the O(m^2) correction.

The backward-characteristic geometry (rectangles Q, vertex map B, depth N,
signed union M) provides an independent integral-identity check of the
converged field.

Concurrency: sweeps are inherently sequential; within a sweep every array
operation is single-threaded numpy with a fixed summation order, so results
are bitwise deterministic.  FieldGrid instances are immutable after the
solve and safe to share read-only.
"""

import math

import numpy as np
from scipy.integrate import simpson

from .characteristics_solver import MasslessProfile, build_initial_profile, in_domain

__all__ = [
    "NotConverged",
    "SliceUnavailable",
    "FieldGrid",
    "picard_solve",
    "verify_integral_identity",
    "energy",
    "time_of",
    "lowest_vertex",
    "rectangle",
    "depth",
    "union_M",
    "theta_sign",
    "measure_M",
]

_G16, _W16 = np.polynomial.legendre.leggauss(16)


class NotConverged(RuntimeError):
    """Picard iteration hit n_max while the sup-norm change exceeded tol."""

    def __init__(self, msg, changes):
        super().__init__(msg)
        self.changes = changes


class SliceUnavailable(ValueError):
    """Requested time slice needs neighbors beyond the stored horizon."""


# ---------------------------------------------------------------------------
# backward-characteristic geometry (pure functions of the maps)
# ---------------------------------------------------------------------------

def time_of(xi, eta):
    """T(xi, eta) = (xi + eta)/2."""
    return 0.5 * (np.asarray(xi) + np.asarray(eta))


def lowest_vertex(maps, xi, eta):
    """B(xi, eta) = (eta, F^{-1}(xi))."""
    return float(eta), float(maps.F_inv(xi))


def rectangle(maps, xi, eta):
    """Q(xi, eta) = [eta, xi] x [F^{-1}(xi), eta] as ((y0, y1), (z0, z1))."""
    return (float(eta), float(xi)), (float(maps.F_inv(xi)), float(eta))


def depth(maps, xi, eta, check=True):
    """N(xi, eta): largest n with B^n still inside the domain.

    Terminates because each B step lowers the time by a(k^{-1}(xi)) >= inf a.
    """
    if check and not bool(in_domain(maps, xi, eta)):
        from .characteristics_solver import OutsideDomain
        raise OutsideDomain("(%g, %g) outside the domain" % (xi, eta))
    n = 0
    cur = (float(xi), float(eta))
    while True:
        nxt = lowest_vertex(maps, *cur)
        if not bool(in_domain(maps, nxt[0], nxt[1])):
            return n
        cur = nxt
        n += 1


def theta_sign(n):
    """Sign of the integrand on Q(B^n): (-1)^(n+1)."""
    return -1.0 if n % 2 == 0 else 1.0


def union_M(maps, xi, eta):
    """Signed rectangles making up M(xi, eta).

    Returns a list of (sign, (y0, y1), (z0, z1), clipped); the last entry is
    Q(B^N) intersected with the domain, i.e. additionally z >= -y.
    """
    N = depth(maps, xi, eta)
    out = []
    cur = (float(xi), float(eta))
    for n in range(N + 1):
        (y0, y1), (z0, z1) = rectangle(maps, *cur)
        out.append((theta_sign(n), (y0, y1), (z0, z1), n == N))
        cur = lowest_vertex(maps, *cur)
    return out


def _rect_area_clipped(y0, y1, z0, z1, clipped):
    """Area of [y0,y1]x[z0,z1], with z >= -y imposed when clipped."""
    if y1 <= y0:
        return 0.0
    if not clipped or z0 >= -y0:
        return max(y1 - y0, 0.0) * max(z1 - z0, 0.0)
    # lower z-limit is max(z0, -y): z-extent z1 - max(z0, -y), clamped at 0
    y0 = max(y0, -z1)          # below this the column is empty
    if y1 <= y0:
        return 0.0
    ysplit = min(max(-z0, y0), y1)   # above ysplit the full column survives
    area = 0.0
    if ysplit > y0:
        # length z1 + y, linear in y
        area += 0.5 * ((z1 + y0) + (z1 + ysplit)) * (ysplit - y0)
    if y1 > ysplit:
        area += (z1 - z0) * (y1 - ysplit)
    return area


def measure_M(maps, xi, eta):
    """Lebesgue measure of M(xi, eta); bounded by 2 a_max T(xi, eta)."""
    total = 0.0
    for _, (y0, y1), (z0, z1), clipped in union_M(maps, xi, eta):
        total += _rect_area_clipped(y0, y1, z0, z1, clipped)
    return total


# ---------------------------------------------------------------------------
# the banded characteristic lattice
# ---------------------------------------------------------------------------

class _Lattice:
    """Shared geometry of the banded (xi, eta) grid for one run."""

    def __init__(self, maps, resolution, t_max):
        self.maps = maps
        a0 = maps.a0
        self.a0 = a0
        self.delta = a0 / int(resolution)
        if self.delta >= maps.motion.a_min:
            raise ValueError("resolution too coarse: delta must be < a_min")
        d = self.delta
        self.n0 = int(resolution)                  # index of s = 0
        x_max = float(maps.k(t_max)) + 4.0 * d
        self.M = int(math.ceil((x_max + a0) / d)) + 2
        self.s = -a0 + d * np.arange(self.M + 1)
        self.t_max = float(t_max)

        self.Finv = np.asarray(maps.F_inv(self.s))      # F^{-1} at every node
        lower = np.maximum(-self.s, self.Finv)
        self.jmin = np.maximum(
            np.ceil((lower + a0) / d - 1e-9).astype(int), 0)
        # rows are i = n0 .. M (xi >= 0)
        self.R = self.M - self.n0 + 1
        rows = np.arange(self.n0, self.M + 1)
        width = rows - self.jmin[rows] + 1
        self.Wmax = int(width.max())
        self.cmin = self.Wmax - width                    # per-row first valid column
        # prolongation stencil for columns beyond the initial interval
        j_pro = np.arange(2 * self.n0 + 1, self.M + 1)
        self.j_pro = j_pro
        eta_star = self.Finv[j_pro]
        self.eta_star = eta_star
        jstar = np.searchsorted(self.s, eta_star - 1e-12 * d, side="left")
        # ensure s[jstar-1] < eta* <= s[jstar]
        jstar = np.clip(jstar, 1, self.M - 1)
        self.jstar = jstar
        self.u = np.maximum(self.s[jstar] - eta_star, 0.0)
        self.lam = 1.0 - self.u / d                      # weight of Corr[jstar]
        self._ar = np.arange(self.Wmax)

    # -- band <-> grid helpers -------------------------------------------
    def alloc(self):
        return np.zeros((self.R, self.Wmax))

    def row_cols(self, r):
        """(jlo, i) column index range of row r (inclusive)."""
        i = self.n0 + r
        return self.jmin[i], i

    def band_from_G(self, Gl):
        """phi[r, c] = Gl[j] - Gl[i] row by row (the massless combination)."""
        out = self.alloc()
        for r in range(self.R):
            i = self.n0 + r
            jlo = self.jmin[i]
            out[r, self.cmin[r]:] = Gl[jlo:i + 1] - Gl[i]
        return out

    def cum_z(self, phi, out=None):
        """C[r, c] = int_{s_j}^{s_i} phi(s_i, z) dz (trapezoid along the row)."""
        if out is None:
            out = self.alloc()
        pair = 0.5 * self.delta * (phi[:, :-1] + phi[:, 1:])
        acc = np.cumsum(pair[:, ::-1], axis=1)[:, ::-1]
        out[:, :-1] = acc
        out[:, -1] = 0.0
        return out

    def cum_y(self, C, out):
        """D[r, c] = int_{|s_j|}^{s_i} C(y, s_j) dy along fixed j, anchored
        where the column enters the band (there y = |s_j| exactly)."""
        d = self.delta
        W = self.Wmax
        out[0].fill(0.0)
        prevC = C[0].copy()
        ar1 = self._ar[1:]
        for r in range(1, self.R):
            # predecessor of (r, c) is (r-1, c+1); invalid => anchor D = 0
            cur = C[r]
            row = out[r]
            row[-1] = 0.0
            np.add(prevC[1:], cur[:-1], out=row[:-1])
            row[:-1] *= 0.5 * d
            row[:-1] += out[r - 1, 1:]
            row[:-1] *= ar1 >= self.cmin[r - 1]
            prevC[:] = cur
            c0 = self.cmin[r]
            if c0 > 0:
                row[:c0] = 0.0
        return out

    def diag_mirror_gather(self, C):
        """E_r = C at (i, 2 n0 - i) for i = n0 .. 2 n0: int_{-y}^{y} phi dz."""
        r = np.arange(self.n0 + 1)
        cols = self.Wmax - 1 - 2 * r
        return C[r, cols]

    def band_sup(self, phi):
        return float(np.max(np.abs(phi)))


class FieldGrid:
    """Converged field over the characteristic lattice up to a time horizon.

    Attributes
    ----------
    phi : banded array of samples, rows xi = s_i (i >= index of 0),
          columns eta = s_j for j in [j_min(i), i].
    Gl : profile values G at every grid node (massless part + correction).
    changes : sup-norm Picard increments, one per sweep.
    """

    def __init__(self, lattice, profile, m, phi, Gl, corr, changes, iterations,
                 converged, tol_abs, sup_phi0):
        self.lattice = lattice
        self.maps = lattice.maps
        self.profile = profile
        self.m = float(m)
        self.phi = phi
        self.Gl = Gl
        self.corr = corr
        self.changes = list(changes)
        self.iterations = int(iterations)
        self.converged = bool(converged)
        self.tol_abs = float(tol_abs)
        self.sup_phi0 = float(sup_phi0)
        self.t_max = lattice.t_max
        self.resolution = int(round(lattice.a0 / lattice.delta))

    # -- invariants -----------------------------------------------------------
    def sup_phi(self):
        return self.lattice.band_sup(self.phi)

    def field_bound_ratio(self):
        """sup over the grid of |phi| e^{-a_max m^2 xi / 2} / sup|phi^(0)|."""
        lat = self.lattice
        amax = self.maps.motion.a_max
        worst = 0.0
        for r in range(lat.R):
            i = lat.n0 + r
            w = math.exp(-0.5 * amax * self.m**2 * lat.s[i])
            rowmax = float(np.max(np.abs(self.phi[r, lat.cmin[r]:])))
            worst = max(worst, rowmax * w)
        return worst / max(self.sup_phi0, 1e-300)

    def picard_bound(self):
        """(measured changes, a-priori bound sequence) from the factorial
        estimate (a_max m^2 xi_max / 2)^n / n! * change_0."""
        if not self.changes:
            return np.array([]), np.array([])
        xi_max = self.lattice.s[self.lattice.M]
        base = 0.5 * self.maps.motion.a_max * self.m**2 * xi_max
        c0 = self.changes[0]
        ns = np.arange(len(self.changes))
        bound = np.array([c0 * base**n / math.factorial(n) for n in ns])
        return np.asarray(self.changes), bound

    # -- slice extraction ------------------------------------------------------
    def slice_L(self, t):
        """Even anti-diagonal index L with node times closest to t."""
        lat = self.lattice
        L = int(round((t + lat.a0) / lat.delta)) * 2
        return L

    def _slice_nodes(self, L):
        """(i indices, x values, phi values) on anti-diagonal i + j = L."""
        lat = self.lattice
        i_lo = L // 2                       # x = 0 sits on the diagonal
        if i_lo < lat.n0 or i_lo > lat.M:
            raise SliceUnavailable("slice time outside the stored lattice")
        i_cap = min(lat.M, L)               # j = L - i must stay >= 0
        iis = np.arange(i_lo, i_cap + 1)
        jjs = L - iis
        ok = jjs >= lat.jmin[iis]
        if bool(ok.all()):
            if i_cap == lat.M and i_cap < L:
                raise SliceUnavailable("slice extends beyond the stored lattice")
            cut = len(iis)
        else:
            cut = int(np.argmin(ok))        # band columns form a contiguous prefix
        iis, jjs = iis[:cut], jjs[:cut]
        rr = iis - lat.n0
        cc = lat.Wmax - 1 - (iis - jjs)
        t = 0.5 * lat.delta * L - lat.a0
        xs = lat.s[iis] - t
        return iis, xs, self.phi[rr, cc], t

    def phi_slice(self, t):
        """(t_actual, x nodes, phi values) on the nearest aligned slice."""
        _, xs, vals, t_act = self._slice_nodes(self.slice_L(t))
        return t_act, xs, vals

    def interp_phi(self, xi, eta):
        """Bilinear interpolation on the band with boundary-anchored cells.

        Near the wall / t = 0 / x = 0 edges the missing stencil nodes are
        replaced by the exact boundary traces (0 on the Dirichlet lines,
        phi0 on the initial line), keeping O(delta) worst-case error in the
        edge cells and O(delta^2) elsewhere.
        """
        lat = self.lattice
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        d = lat.delta
        fi = (xi + lat.a0) / d
        i0 = np.clip(np.floor(fi).astype(int), lat.n0, lat.M - 1)
        wx = fi - i0

        def row_value(i_arr, etav):
            """phi(s_i, eta) per row with anchored linear interpolation."""
            i_arr = np.asarray(i_arr)
            out = np.zeros(i_arr.shape)
            s_i = lat.s[i_arr]
            jlo = lat.jmin[i_arr]
            fj = (etav + lat.a0) / d
            j0 = np.floor(fj).astype(int)
            j1 = j0 + 1
            # clamp to the diagonal: node above z = y is the exact zero at z = s_i
            r = i_arr - lat.n0
            cmax = lat.Wmax - 1

            def node(jj):
                jj_cl = np.clip(jj, 0, lat.M)
                cc = cmax - (i_arr - jj_cl)
                valid = (jj_cl >= jlo) & (jj_cl <= i_arr) & (cc >= 0)
                vals = np.zeros(i_arr.shape)
                rr = np.clip(r, 0, lat.R - 1)
                cc_cl = np.clip(cc, 0, cmax)
                vals[valid] = self.phi[rr[valid], cc_cl[valid]]
                return vals, valid

            v0, ok0 = node(j0)
            v1, ok1 = node(j1)
            z0 = lat.s[np.clip(j0, 0, lat.M)]
            z1 = lat.s[np.clip(j1, 0, lat.M)]
            # above-diagonal stencil -> anchor at (s_i, 0)
            hi_anchor = ~ok1
            z1 = np.where(hi_anchor, s_i, z1)
            v1 = np.where(hi_anchor, 0.0, v1)
            # below-band stencil -> anchor at the binding boundary
            lo_anchor = ~ok0
            wall_bind = lat.Finv[i_arr] >= -s_i
            z_w = np.where(wall_bind, lat.Finv[i_arr], -s_i)
            v_w = np.where(wall_bind, 0.0,
                           np.asarray(self.profile.data.phi0(np.abs(s_i))))
            z0 = np.where(lo_anchor, z_w, z0)
            v0 = np.where(lo_anchor, v_w, v0)
            span = np.maximum(z1 - z0, 1e-300)
            w = np.clip((etav - z0) / span, 0.0, 1.0)
            out = (1.0 - w) * v0 + w * v1
            return out

        va = row_value(i0, eta)
        vb = row_value(np.minimum(i0 + 1, lat.M), eta)
        return (1.0 - wx) * va + wx * vb

    # -- energy ----------------------------------------------------------------
    def _energy_parts(self, t):
        lat = self.lattice
        d = lat.delta
        L = self.slice_L(t)
        _, xs, phi_c, t_act = self._slice_nodes(L)
        _, _, phi_p, _ = self._slice_nodes(L + 2)
        _, _, phi_m, _ = self._slice_nodes(L - 2)
        n = len(xs)
        if n < 7:
            raise SliceUnavailable("slice too short for the stencils")

        phi_x = np.zeros(n)
        k = np.arange(2, n - 2)
        phi_x[k] = (-phi_c[k + 2] + 8.0 * phi_c[k + 1]
                    - 8.0 * phi_c[k - 1] + phi_c[k - 2]) / (12.0 * d)
        # one-sided 4th order at the ends
        c_edge = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        phi_x[0] = np.dot(c_edge, phi_c[0:5]) / d
        phi_x[1] = (-3.0 * phi_c[0] - 10.0 * phi_c[1] + 18.0 * phi_c[2]
                    - 6.0 * phi_c[3] + phi_c[4]) / (12.0 * d)
        phi_x[n - 2] = (3.0 * phi_c[n - 1] + 10.0 * phi_c[n - 2] - 18.0 * phi_c[n - 3]
                        + 6.0 * phi_c[n - 4] - phi_c[n - 5]) / (12.0 * d)
        phi_x[n - 1] = -np.dot(c_edge, phi_c[n - 1:n - 6:-1]) / d

        # slices share x-positions at equal array index (all start at x = 0)
        phi_t = np.zeros(n)
        n_ct = min(n, len(phi_p), len(phi_m))
        k = np.arange(1, n_ct)
        phi_t[k] = (phi_p[k] - phi_m[k]) / (2.0 * d)
        phi_t[0] = 0.0                     # Dirichlet at x = 0
        da_t = float(self.maps.motion.da(t_act))
        for kk in range(n_ct, n):
            if kk < len(phi_m):
                # first-order backward in t; O(1) cells next to the wall
                phi_t[kk] = (phi_c[kk] - phi_m[kk]) / d
            else:
                # wall relation phi_t = -a'(t) phi_x holds on x = a(t)
                phi_t[kk] = -da_t * phi_x[kk]

        kin_dens = 0.5 * phi_t**2
        grad_dens = 0.5 * phi_x**2
        mass_dens = 0.5 * self.m**2 * phi_c**2

        E_kin = float(simpson(kin_dens, dx=d))
        E_grad = float(simpson(grad_dens, dx=d))
        E_mass = float(simpson(mass_dens, dx=d))

        # partial cell [x_last, a(t)] with the exact Dirichlet zero at the wall
        a_t = float(self.maps.motion.a(t_act))
        gap = a_t - xs[-1]
        if gap > 1e-12:
            if gap > 0.1 * d:
                px_w = (0.0 - phi_c[n - 1]) / gap
            else:
                px_w = phi_x[n - 1]
            # on the wall phi_t = -a' phi_x, so the endpoint densities are
            # determined by the slope alone
            E_kin += 0.5 * gap * (kin_dens[-1] + 0.5 * (da_t * px_w) ** 2)
            E_grad += 0.5 * gap * (grad_dens[-1] + 0.5 * px_w**2)
            E_mass += 0.5 * gap * mass_dens[-1]
        return E_kin, E_grad, E_mass, t_act

    def energy(self, t):
        """E_m(t) and the mass-term share (m^2/2) int phi^2.

        Spatial derivative: 4th-order central differences on the aligned
        slice; time derivative: centered difference between the t +- delta
        slices (which share x nodes by lattice alignment); composite Simpson
        in x plus an exactly-anchored partial cell at the moving wall.
        """
        kin, grad, mass, t_act = self._energy_parts(t)
        return kin + grad + mass, mass, t_act

    def energy_components(self, t):
        """(kinetic, gradient, mass) shares of E_m(t) plus the slice time."""
        return self._energy_parts(t)

    def energy_series(self, ts):
        """(t_actual, E, mass share) arrays at the aligned times nearest ts."""
        out_t, out_E, out_M = [], [], []
        for t in np.asarray(ts, dtype=float):
            try:
                E, Em, ta = self.energy(float(t))
            except SliceUnavailable:
                continue
            out_t.append(ta)
            out_E.append(E)
            out_M.append(Em)
        return np.asarray(out_t), np.asarray(out_E), np.asarray(out_M)

    def export_table(self, path, times=None, fmt="%.17g"):
        """Write (t, x, phi) rows for external plotting."""
        if times is None:
            times = np.linspace(0.0, self.t_max, 33)
        with open(path, "w", newline="") as fh:
            fh.write("t,x,phi\n")
            for t in times:
                try:
                    ta, xs, vals = self.phi_slice(float(t))
                except SliceUnavailable:
                    continue
                for x, v in zip(xs, vals):
                    fh.write((fmt + "," + fmt + "," + fmt + "\n") % (ta, x, v))


def picard_solve(data, maps, m, resolution=256, t_max=5.0, tol=1e-9,
                 n_max=40, compatibility_tol=1e-8):
    """Solve the massive problem up to t_max on an a(0)/resolution lattice.

    ``tol`` is relative to sup|phi^(0)|.  m = 0 short-circuits to the exact
    massless solution sampled on the lattice.

    Raises
    ------
    IncompatibleData
        Corner compatibility conditions fail (propagated from the profile).
    NotConverged
        n_max sweeps did not bring the sup change below tolerance.
    """
    profile = build_initial_profile(data, maps, compatibility_tol=compatibility_tol)
    lat = _Lattice(maps, resolution, t_max)

    Gl0 = np.asarray(profile.G(lat.s))
    phi0 = lat.band_from_G(Gl0)
    sup0 = lat.band_sup(phi0)
    tol_abs = tol * max(sup0, 1e-300)

    if m == 0.0:
        return FieldGrid(lat, profile, 0.0, phi0, Gl0, np.zeros_like(Gl0),
                         [0.0], 0, True, tol_abs, sup0)

    quarter_m2 = 0.25 * m * m
    n0 = lat.n0
    d = lat.delta
    phi_prev = phi0
    phi_new = lat.alloc()
    Cwork = lat.alloc()
    Dwork = lat.alloc()
    Gl = Gl0.copy()
    corr = np.zeros_like(Gl0)
    changes = []
    mirror = np.concatenate([np.arange(2 * n0, n0, -1), np.arange(n0, 2 * n0 + 1)])
    # row index of |s_j| for j in [0, 2 n0]
    rhat = mirror - n0

    converged = False
    for sweep in range(1, n_max + 1):
        C = lat.cum_z(phi_prev, Cwork)
        D = lat.cum_y(C, Dwork)

        # initial-interval correction: int_0^{|eta|} dy int_{-y}^{y} phi dz
        E_r = lat.diag_mirror_gather(C)
        cumE = np.concatenate([[0.0], np.cumsum(0.5 * d * (E_r[1:] + E_r[:-1]))])
        corr[:2 * n0 + 1] = quarter_m2 * cumE[rhat]

        # prolongation: Corr(F(eta)) = Corr(eta) + (m^2/4) T(xi, eta) at eta*
        jj = lat.j_pro
        r_of = jj - n0
        c1 = lat.Wmax - 1 - (jj - lat.jstar)
        D1 = D[r_of, c1]
        D2 = D[r_of, np.minimum(c1 + 1, lat.Wmax - 1)]
        # one-sided linear extrapolation of T(s_j, .) down to eta*
        tri = D1 - lat.u * (D2 - D1) / d
        lam = lat.lam
        jstar = lat.jstar
        tri_l = tri.tolist()
        lam_l = lam.tolist()
        js_l = jstar.tolist()
        corr_l = corr[:2 * n0 + 1].tolist() + [0.0] * (lat.M - 2 * n0)
        q4 = quarter_m2
        for idx, j in enumerate(range(2 * n0 + 1, lat.M + 1)):
            js = js_l[idx]
            base = corr_l[js - 1] + lam_l[idx] * (corr_l[js] - corr_l[js - 1])
            corr_l[j] = base + q4 * tri_l[idx]
        corr = np.asarray(corr_l)

        # only the O(m^2) correction is ever interpolated; the massless part
        # of G is exact at every node via F-pullback
        Gl = Gl0 + corr

        # phi_new = (m^2/4) D + G(eta) - G(xi), row by row
        change = 0.0
        for r in range(lat.R):
            i = n0 + r
            jlo = lat.jmin[i]
            c0 = lat.cmin[r]
            seg = q4 * D[r, c0:] + (Gl[jlo:i + 1] - Gl[i])
            prev = phi_prev[r, c0:]
            change = max(change, float(np.max(np.abs(seg - prev))) if seg.size else 0.0)
            phi_new[r, c0:] = seg
            if c0:
                phi_new[r, :c0] = 0.0
        changes.append(change)

        phi_prev, phi_new = phi_new, phi_prev
        if change <= tol_abs:
            converged = True
            break

    if not converged:
        raise NotConverged(
            "picard iteration: change %.3e > tol %.3e after %d sweeps"
            % (changes[-1], tol_abs, len(changes)), changes)

    return FieldGrid(lat, profile, m, phi_prev, Gl, corr, changes,
                     len(changes), True, tol_abs, sup0)


# ---------------------------------------------------------------------------
# independent verification path through the M-set identity
# ---------------------------------------------------------------------------

def _quad_rect(fieldgrid, y0, y1, z0, z1, clipped):
    """Gauss quadrature of the interpolated field over one (possibly
    clipped) backward rectangle, in a single batched interpolation."""
    if y1 - y0 <= 1e-14:
        return 0.0
    yn = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * _G16
    yw = 0.5 * (y1 - y0) * _W16
    zlo = np.maximum(z0, -yn) if clipped else np.full_like(yn, z0)
    span = np.maximum(z1 - zlo, 0.0)
    zn = zlo[:, None] + 0.5 * span[:, None] * (1.0 + _G16[None, :])
    zw = 0.5 * span[:, None] * _W16[None, :]
    vals = fieldgrid.interp_phi(np.repeat(yn, len(_G16)), zn.ravel())
    return float(np.sum(yw[:, None] * zw * vals.reshape(zn.shape)))


def verify_integral_identity(fieldgrid, samples=200, seed=0, margin=None):
    """Max residual of phi = phi0 + (m^2/4) int_M theta phi at random points.

    The right side uses the signed backward-rectangle union M(xi, eta) with
    the converged field interpolated from the lattice and phi0 evaluated
    exactly; this is the independent geometry-route check of the solver.
    """
    lat = fieldgrid.lattice
    maps = fieldgrid.maps
    rng = np.random.default_rng(seed)
    if margin is None:
        margin = 4.0 * lat.delta
    worst = 0.0
    count = 0
    while count < samples:
        t = rng.uniform(margin, lat.t_max - margin)
        x = rng.uniform(margin, float(maps.motion.a(t)) - margin)
        if x <= margin:
            continue
        xi, eta = t + x, t - x
        lhs = float(fieldgrid.interp_phi(xi, eta)[0])
        phi0 = fieldgrid.profile.eval_phi(xi, eta)
        acc = 0.0
        for sign, (y0, y1), (z0, z1), clipped in union_M(maps, xi, eta):
            acc += sign * _quad_rect(fieldgrid, y0, y1, z0, z1, clipped)
        rhs = phi0 + 0.25 * fieldgrid.m**2 * acc
        worst = max(worst, abs(lhs - rhs))
        count += 1
    return worst


def reflection_residual(fieldgrid, samples=500, seed=1, margin=None):
    """Max residual of phi(xi,eta) + phi(B) + (m^2/4) int_Q phi over points
    with T(B) >= 0 (single backward reflection identity)."""
    lat = fieldgrid.lattice
    maps = fieldgrid.maps
    rng = np.random.default_rng(seed)
    if margin is None:
        margin = 4.0 * lat.delta
    worst = 0.0
    count = 0
    while count < samples:
        t = rng.uniform(margin, lat.t_max - margin)
        x = rng.uniform(margin, float(maps.motion.a(t)) - margin)
        xi, eta = t + x, t - x
        b = lowest_vertex(maps, xi, eta)
        if time_of(*b) < margin:
            continue
        lhs = float(fieldgrid.interp_phi(xi, eta)[0])
        phib = float(fieldgrid.interp_phi(b[0], b[1])[0])
        (y0, y1), (z0, z1) = rectangle(maps, xi, eta)
        q = _quad_rect(fieldgrid, y0, y1, z0, z1, False)
        worst = max(worst, abs(lhs + phib + 0.25 * fieldgrid.m**2 * q))
        count += 1
    return worst


def energy(fieldgrid, t):
    """E_m(t) of a converged run (module-level alias of FieldGrid.energy)."""
    return fieldgrid.energy(t)
