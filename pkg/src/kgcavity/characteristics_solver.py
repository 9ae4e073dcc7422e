"""Explicit solution machinery in characteristic coordinates.

With xi = t + x, eta = t - x the field is

    phi(xi, eta) = -int_{|eta|}^{xi} dy int_{eta}^{y} dz f(y,z) + G(eta) - G(xi)

where G is fixed on [-a(0), a(0)] by the Cauchy data,

    G(eta) = -1/2 phi0(|eta|) sgn(eta) - 1/2 int_0^{|eta|} phi1
             - int_0^{|eta|} dy int_{-y}^{y} dz f(y,z),

and extended to all later coordinates by the prolongation

    G(F(eta)) = G(eta) - int_{|eta|}^{F(eta)} dy int_{eta}^{y} dz f(y,z).

For f == 0 everything is exact: G at any coordinate equals its value at the
F-pullback into the initial interval, and the derivative obeys the chain
rule G'(F(eta)) = G'(eta)/F'(eta).  The massless energy is

    E_0(t) = int_{h(t)}^{k(t)} G'(y)^2 dy.

For a general inhomogeneity f the profile is built segment by segment with
Gauss quadrature of the strip integrals; the derivative then comes from
spline differentiation with O(grid^2) error.
"""

import math

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "OutsideDomain",
    "IncompatibleData",
    "MasslessProfile",
    "QuadratureProfile",
    "build_initial_profile",
    "prolong",
    "eval_phi",
    "energy_massless",
    "n_of_eta",
    "K_of_t",
]

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(24)


class OutsideDomain(ValueError):
    """(xi, eta) violates max(-xi, F^{-1}(xi)) <= eta <= xi."""


class IncompatibleData(ValueError):
    """Cauchy data fails the corner compatibility conditions."""


def in_domain(maps, xi, eta, tol=1e-9):
    """Vectorized membership test for the transformed domain."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    lower = np.maximum(-xi, maps.F_inv(xi))
    return (eta <= xi + tol) & (eta >= lower - tol)


def _antiderivative_phi1(data, n=8192):
    """x -> int_0^x phi1, exact when the data family provides it."""
    exact = getattr(data, "int_phi1", None)
    if exact is not None:
        return exact
    xs = np.linspace(0.0, data.a0, n + 1)
    vals = np.asarray(data.phi1(xs), dtype=float)
    h = data.a0 / n
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (vals[1:] + vals[:-1]))])
    interp = PchipInterpolator(xs, cum)
    return lambda x: interp(np.clip(np.asarray(x, dtype=float), 0.0, data.a0))


class MasslessProfile:
    """Exact d'Alembert profile (f == 0) evaluated by F-pullback.

    G and G' are evaluated anywhere by pulling the argument back into
    [-a(0), a(0)) with F^{-1} and applying the closed forms there; no table
    or interpolation enters, so results are exact up to the root-solve
    tolerance of the maps.
    """

    def __init__(self, data, maps):
        self.data = data
        self.maps = maps
        self.a0 = maps.a0
        self.int_phi1 = _antiderivative_phi1(data)
        self.f = None
        # locations where G loses smoothness inside the initial interval
        kinks = {0.0, self.a0, -self.a0}
        for kx in getattr(data, "kinks", ()):
            kinks.add(float(kx))
            kinks.add(-float(kx))
        self._initial_kinks = np.array(sorted(kinks))
        self._image_cache = None

    # -- closed forms on the initial interval -------------------------------
    def _G0(self, eta):
        eta = np.asarray(eta, dtype=float)
        ab = np.abs(eta)
        return -0.5 * np.asarray(self.data.phi0(ab)) * np.sign(eta) \
               - 0.5 * np.asarray(self.int_phi1(ab))

    def _G0_prime(self, eta):
        eta = np.asarray(eta, dtype=float)
        ab = np.abs(eta)
        return -0.5 * (np.asarray(self.data.dphi0(ab))
                       + np.asarray(self.data.phi1(ab)) * np.sign(eta))

    # -- pullback ------------------------------------------------------------
    def pullback(self, eta):
        """(eta0, n, prod) with eta0 = F^{-n}(eta) in [-a(0), a(0)) and
        prod = DF^n(eta0), the accumulated chain-rule factor."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float)).copy()
        if np.any(eta < -self.a0 - 1e-9):
            raise OutsideDomain("coordinate below -a(0)")
        np.clip(eta, -self.a0, None, out=eta)
        n = np.zeros(eta.shape, dtype=int)
        prod = np.ones_like(eta)
        active = eta >= self.a0
        while np.any(active):
            y, d = self.maps.F_inv_and_dF(eta[active])
            eta[active] = y
            prod[active] *= d
            n[active] += 1
            idx = np.nonzero(active)[0]
            active[idx] = eta[idx] >= self.a0
        return eta, n, prod

    def n_of(self, eta):
        """Prolongation depth: eta lies in F^n([-a(0), a(0)))."""
        _, n, _ = self.pullback(eta)
        return n if np.ndim(eta) else int(n[0])

    def K_of(self, t):
        """K(t) = n(t + a_max)."""
        return self.n_of(np.asarray(t, dtype=float) + self.maps.motion.a_max)

    # -- profile evaluation ---------------------------------------------------
    def G(self, eta):
        eta0, _, _ = self.pullback(eta)
        out = self._G0(eta0)
        return out if np.ndim(eta) else float(out[0])

    def G_prime(self, eta):
        eta0, _, prod = self.pullback(eta)
        out = self._G0_prime(eta0) / prod
        return out if np.ndim(eta) else float(out[0])

    def eval_phi(self, xi, eta, check=True):
        """Field value G(eta) - G(xi); raises OutsideDomain off the domain."""
        xi_a = np.atleast_1d(np.asarray(xi, dtype=float))
        eta_a = np.atleast_1d(np.asarray(eta, dtype=float))
        if check and not np.all(in_domain(self.maps, xi_a, eta_a)):
            raise OutsideDomain("point outside the characteristic domain")
        out = self.G(eta_a) - self.G(xi_a)
        return out if np.ndim(xi) or np.ndim(eta) else float(out[0])

    def phi_txy(self, t, x):
        """(phi, phi_t, phi_x) at space-time points, vectorized."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        xi, eta = t + x, t - x
        gxi, geta = self.G(xi), self.G(eta)
        dxi, deta = self.G_prime(xi), self.G_prime(eta)
        return geta - gxi, deta - dxi, -(deta + dxi)

    # -- breakpoints and energy -----------------------------------------------
    def breakpoints(self, x_max):
        """Sorted F-images of the initial kink set up to x_max."""
        # idempotent memo: concurrent rebuilds produce identical arrays, so
        # sharing across workers stays deterministic
        cache = self._image_cache
        if cache is not None and cache[0] >= x_max:
            brks = cache[1]
            return brks[brks <= x_max]
        pts = list(self._initial_kinks)
        current = np.array([k for k in self._initial_kinks if k > -self.a0])
        limit = x_max + 1e-12
        while len(current) > 0:
            current = np.asarray(self.maps.F(current))
            current = current[current <= limit]
            pts.extend(current.tolist())
        brks = np.unique(np.asarray(pts))
        self._image_cache = (x_max, brks)
        return brks

    def energy(self, t):
        return float(self.energy_series(np.asarray([t]))[0])

    def energy_series(self, ts):
        """E_0 at each time by breakpoint-split Gauss quadrature of G'^2."""
        ts = np.asarray(ts, dtype=float)
        his = np.asarray(self.maps.k(ts))
        los = np.asarray(self.maps.h(ts))
        brks = self.breakpoints(float(np.max(his)) + 1e-9)

        all_nodes, all_weights, owner = [], [], []
        for i, (lo, hi) in enumerate(zip(los, his)):
            inner = brks[(brks > lo + 1e-13) & (brks < hi - 1e-13)]
            edges = np.concatenate([[lo], inner, [hi]])
            e0, e1 = edges[:-1], edges[1:]
            nodes = 0.5 * (e0 + e1)[:, None] + 0.5 * (e1 - e0)[:, None] * _GAUSS_NODES
            weights = 0.5 * (e1 - e0)[:, None] * _GAUSS_WEIGHTS
            all_nodes.append(nodes.ravel())
            all_weights.append(weights.ravel())
            owner.append(np.full(nodes.size, i))
        nodes = np.concatenate(all_nodes)
        weights = np.concatenate(all_weights)
        owner = np.concatenate(owner)
        vals = self.G_prime(nodes) ** 2
        out = np.zeros(ts.shape)
        np.add.at(out, owner, weights * vals)
        return out

    def sample_table(self, x_max, per_interval=2048):
        """Materialized (grid, G, G') samples honoring the breakpoints."""
        brks = self.breakpoints(x_max)
        edges = np.concatenate([brks[brks < x_max], [x_max]])
        segs = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(8, int(math.ceil((hi - lo) / (self.a0 / per_interval))))
            segs.append(np.linspace(lo, hi, n, endpoint=False))
        grid = np.concatenate(segs + [[x_max]])
        return grid, self.G(grid), self.G_prime(grid)


class QuadratureProfile:
    """Profile for a general smooth inhomogeneity f(y, z).

    G is sampled on per-interval grids (spacing a(0)/per_interval within
    each fundamental F-image) and the strip integrals of f are done with
    Gauss panels; G' comes from monotone-cubic spline differentiation with
    O(grid^2) error.  Interpolation never crosses the interval breakpoints.
    """

    def __init__(self, data, maps, f, per_interval=512):
        self.data = data
        self.maps = maps
        self.f = f
        self.a0 = maps.a0
        self.per_interval = int(per_interval)
        self.int_phi1 = _antiderivative_phi1(data)
        self._edges = [-self.a0, self.a0]     # interval breakpoints built so far
        self._segments = []                    # list of (xs, G values, interp)
        self._build_initial()

    # triangle int_0^{Y} dy int_{-y}^{y} dz f(y, z), cumulative on a grid
    def _build_initial(self):
        n = 2 * self.per_interval
        ys = np.linspace(0.0, self.a0, n + 1)
        # W(y) = int_{-y}^{y} f(y, z) dz by Gauss in z
        W = np.zeros(n + 1)
        for i, y in enumerate(ys[1:], start=1):
            zs = 0.5 * (y + (-y)) + 0.5 * (2.0 * y) * _GAUSS_NODES
            wz = 0.5 * (2.0 * y) * _GAUSS_WEIGHTS
            W[i] = float(np.sum(wz * np.asarray(self.f(np.full_like(zs, y), zs))))
        h = self.a0 / n
        cumW = np.concatenate([[0.0], np.cumsum(0.5 * h * (W[1:] + W[:-1]))])
        cum_interp = PchipInterpolator(ys, cumW)

        xs = np.linspace(-self.a0, self.a0, 2 * n + 1)
        ab = np.abs(xs)
        G = (-0.5 * np.asarray(self.data.phi0(ab)) * np.sign(xs)
             - 0.5 * np.asarray(self.int_phi1(ab))
             - cum_interp(ab))
        self._segments = [(xs, G, PchipInterpolator(xs, G))]

    def _strip_integral(self, eta, xi):
        """int_{|eta|}^{xi} dy int_{eta}^{y} dz f(y, z), composite Gauss."""
        lo = abs(eta)
        if xi <= lo:
            return 0.0
        ny = max(8, int(math.ceil((xi - lo) / (self.a0 / 64))))
        edges = np.linspace(lo, xi, ny + 1)
        total = 0.0
        for e0, e1 in zip(edges[:-1], edges[1:]):
            ynod = 0.5 * (e0 + e1) + 0.5 * (e1 - e0) * _GAUSS_NODES
            ywts = 0.5 * (e1 - e0) * _GAUSS_WEIGHTS
            inner = np.zeros_like(ynod)
            for iy, y in enumerate(ynod):
                if y <= eta:
                    continue
                zn = 0.5 * (y + eta) + 0.5 * (y - eta) * _GAUSS_NODES
                zw = 0.5 * (y - eta) * _GAUSS_WEIGHTS
                inner[iy] = float(np.sum(zw * np.asarray(self.f(np.full_like(zn, y), zn))))
            total += float(np.sum(ywts * inner))
        return total

    def prolong_to(self, x_max):
        """Extend G segment by segment until it covers [-a(0), x_max]."""
        while self._edges[-1] < x_max:
            lo = self._edges[-1]
            hi = float(self.maps.F(lo))
            n = max(8, int(math.ceil((hi - lo) / (self.a0 / self.per_interval))))
            xs = np.linspace(lo, hi, n + 1)
            etas = np.asarray(self.maps.F_inv(xs))
            G = np.array([
                self.G(float(e)) - self._strip_integral(float(e), float(x))
                for e, x in zip(etas, xs)
            ])
            self._segments.append((xs, G, PchipInterpolator(xs, G)))
            self._edges.append(hi)
        return self

    def _locate(self, x):
        edges = self._edges
        if x < edges[0] - 1e-9:
            raise OutsideDomain("coordinate below -a(0)")
        for k in range(len(self._segments)):
            if x <= edges[k + 1] + 1e-12:
                return self._segments[k]
        raise OutsideDomain("profile not prolonged up to %g" % x)

    def G(self, x):
        if np.ndim(x):
            return np.array([self.G(float(v)) for v in np.asarray(x).ravel()]).reshape(np.shape(x))
        seg = self._locate(float(x))
        return float(seg[2](np.clip(x, seg[0][0], seg[0][-1])))

    def G_prime(self, x):
        if np.ndim(x):
            return np.array([self.G_prime(float(v)) for v in np.asarray(x).ravel()]).reshape(np.shape(x))
        seg = self._locate(float(x))
        return float(seg[2].derivative()(np.clip(x, seg[0][0], seg[0][-1])))

    def eval_phi(self, xi, eta, check=True):
        if np.ndim(xi) or np.ndim(eta):
            xi_a = np.broadcast_to(np.asarray(xi, dtype=float), np.broadcast_shapes(np.shape(xi), np.shape(eta))).ravel()
            eta_a = np.broadcast_to(np.asarray(eta, dtype=float), xi_a.shape).ravel()
            return np.array([self.eval_phi(float(a), float(b), check) for a, b in zip(xi_a, eta_a)]).reshape(np.broadcast_shapes(np.shape(xi), np.shape(eta)))
        if check and not bool(in_domain(self.maps, xi, eta)):
            raise OutsideDomain("point outside the characteristic domain")
        return -self._strip_integral(eta, xi) + self.G(eta) - self.G(xi)

    def prolongation_residual(self, etas):
        """G(F(eta)) - G(eta) + strip integral; zero up to quadrature error."""
        out = []
        for e in np.atleast_1d(etas):
            e = float(e)
            Fe = float(self.maps.F(e))
            out.append(self.G(Fe) - self.G(e) + self._strip_integral(e, Fe))
        return np.asarray(out)


def build_initial_profile(data, maps, f=None, compatibility_tol=1e-8,
                          per_interval=512):
    """Profile on the initial interval; exact massless path when f is None.

    Verifies the corner compatibility conditions first and raises
    :class:`IncompatibleData` on failure (with the report attached).
    """
    from . import cauchy as _cauchy

    report = _cauchy.check_compatibility(data, maps.motion, tolerance=compatibility_tol)
    if not report.all_passed:
        err = IncompatibleData("; ".join(
            line for line, ok in zip(report.lines(), report.passed) if not ok))
        err.report = report
        raise err
    if f is None:
        return MasslessProfile(data, maps)
    return QuadratureProfile(data, maps, f, per_interval=per_interval)


def prolong(profile, x_max):
    """Extend the profile so G is defined on [-a(0), x_max]."""
    if isinstance(profile, QuadratureProfile):
        return profile.prolong_to(x_max)
    profile.breakpoints(x_max)  # warm the image cache; evaluation is exact
    return profile


def eval_phi(profile, xi, eta):
    return profile.eval_phi(xi, eta)


def energy_massless(profile, t):
    """E_0(t) for a massless profile."""
    if profile.f is not None:
        raise ValueError("energy_massless requires f == 0")
    return profile.energy(t)


def n_of_eta(profile, eta):
    return profile.n_of(eta)


def K_of_t(profile, t):
    return profile.K_of(t)
