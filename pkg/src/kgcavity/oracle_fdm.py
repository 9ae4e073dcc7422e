"""Independent finite-difference oracle on the fixed-domain transformation.

The moving interval 0 <= x <= a(t) is mapped to the unit strip by
y = x / a(t), psi(t, y) = phi(t, x).  Substituting into the Klein-Gordon
equation gives

    psi_tt = 2 (a'/a) y psi_ty
           + [(1 - (a' y)^2) / a^2] psi_yy
           + [a''/a - 2 (a'/a)^2] y psi_y
           - m^2 psi,

marched with a leapfrog scheme: the mixed term is time-centered through a
tridiagonal implicit solve, everything else is explicit and second order.
This solver shares no code with the characteristic machinery and exists to
cross-validate it on short horizons.
"""

import math

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import solve_banded

__all__ = ["Unstable", "NoOverlap", "OracleRun", "solve_oracle", "compare"]


class Unstable(RuntimeError):
    """Discrete solution blew up: wrong transformation or time step."""


class NoOverlap(ValueError):
    """Compared runs have no common (t, x) coverage."""


class OracleRun:
    """Time history of the transformed field on the unit strip.

    ``psi[n, j]`` holds the field at time ``ts[n]`` and y = ``ys[j]``;
    boundary columns are exactly zero.
    """

    def __init__(self, motion, m, ts, ys, psi, cfl):
        self.motion = motion
        self.m = float(m)
        self.ts = ts
        self.ys = ys
        self.psi = psi
        self.cfl = float(cfl)
        self.n_y = len(ys) - 1

    def field_at(self, t, x):
        """phi(t, x) by bilinear interpolation in (t, y); vectorized."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a_t = np.asarray(self.motion.a(t))
        y = x / a_t
        dt = self.ts[1] - self.ts[0]
        dy = self.ys[1] - self.ys[0]
        ft = np.clip((t - self.ts[0]) / dt, 0.0, len(self.ts) - 1 - 1e-12)
        fy = np.clip(y / dy, 0.0, self.n_y - 1e-12)
        it = np.floor(ft).astype(int)
        iy = np.floor(fy).astype(int)
        wt = ft - it
        wy = fy - iy
        p = self.psi
        return ((1 - wt) * ((1 - wy) * p[it, iy] + wy * p[it, iy + 1])
                + wt * ((1 - wy) * p[it + 1, iy] + wy * p[it + 1, iy + 1]))

    def slice_at(self, t):
        """(x nodes, phi values) at the stored time nearest to t."""
        n = int(np.clip(round((t - self.ts[0]) / (self.ts[1] - self.ts[0])),
                        0, len(self.ts) - 1))
        t_act = self.ts[n]
        a_t = float(self.motion.a(t_act))
        return t_act, self.ys * a_t, self.psi[n].copy()

    def energy(self, n):
        """Discrete E_m at step n (centered time derivative)."""
        if n < 1 or n > len(self.ts) - 2:
            raise ValueError("need interior time index")
        t = self.ts[n]
        a_t = float(self.motion.a(t))
        da_t = float(self.motion.da(t))
        dy = self.ys[1] - self.ys[0]
        dt = self.ts[1] - self.ts[0]
        psi_t = (self.psi[n + 1] - self.psi[n - 1]) / (2.0 * dt)
        psi_y = np.gradient(self.psi[n], dy, edge_order=2)
        phi_x = psi_y / a_t
        phi_t = psi_t - (da_t / a_t) * self.ys * psi_y
        dens = 0.5 * (phi_t**2 + phi_x**2 + self.m**2 * self.psi[n] ** 2)
        return float(simpson(dens, dx=dy) * a_t)


def solve_oracle(data, motion, m, n_y=256, t_max=5.0, cfl=0.9,
                 blowup_factor=1e6):
    """March the transformed equation up to t_max.

    The time step comes from a frozen-coefficient bound on the transformed
    characteristic speeds (1 + sup|a'|)/inf a, scaled by ``cfl``.  The first
    step is seeded to second order with phi1 and the PDE itself.

    Raises :class:`Unstable` when sup|psi| exceeds ``blowup_factor`` times
    its initial value.
    """
    if n_y < 64:
        raise ValueError("n_y >= 64 required")
    a0 = motion.a0
    ys = np.linspace(0.0, 1.0, n_y + 1)
    dy = ys[1] - ys[0]
    speed = (1.0 + motion.da_max) / motion.a_min
    dt = cfl * dy / speed
    n_t = int(math.ceil(t_max / dt))
    dt = t_max / n_t
    ts = dt * np.arange(n_t + 1)

    x0 = ys * a0
    psi0 = np.asarray(data.phi0(x0), dtype=float)
    da_0 = float(motion.da(0.0))
    dda_0 = float(motion.dda(0.0))
    psi_t0 = np.asarray(data.phi1(x0)) + da_0 * ys * np.asarray(data.dphi0(x0))
    # second-order Taylor seed using the transformed PDE at t = 0
    psi_y0 = a0 * np.asarray(data.dphi0(x0))
    psi_yy0 = a0**2 * np.asarray(data.ddphi0(x0))
    psi_ty0 = a0 * np.asarray(data.dphi1(x0)) \
        + da_0 * (np.asarray(data.dphi0(x0)) + ys * a0 * np.asarray(data.ddphi0(x0)))
    g0 = da_0 / a0
    c2_0 = (1.0 - (da_0 * ys) ** 2) / a0**2
    c1_0 = (dda_0 / a0 - 2.0 * g0**2) * ys
    psi_tt0 = (2.0 * g0 * ys * psi_ty0 + c2_0 * psi_yy0 + c1_0 * psi_y0
               - m**2 * psi0)
    psi1 = psi0 + dt * psi_t0 + 0.5 * dt**2 * psi_tt0
    psi0[0] = psi0[-1] = 0.0
    psi1[0] = psi1[-1] = 0.0

    psi = np.empty((n_t + 1, n_y + 1))
    psi[0] = psi0
    psi[1] = psi1
    sup0 = max(float(np.max(np.abs(psi0))), 1e-30)

    yint = ys[1:-1]
    idt2 = 1.0 / dt**2
    ab = np.zeros((3, n_y - 1))
    for n in range(1, n_t):
        t = ts[n]
        a_t = float(motion.a(t))
        da_t = float(motion.da(t))
        dda_t = float(motion.dda(t))
        g = (da_t / a_t) * yint
        c2 = (1.0 - (da_t * yint) ** 2) / a_t**2
        c1 = (dda_t / a_t - 2.0 * (da_t / a_t) ** 2) * yint

        cur = psi[n]
        old = psi[n - 1]
        dyy = (cur[2:] - 2.0 * cur[1:-1] + cur[:-2]) / dy**2
        dyc = (cur[2:] - cur[:-2]) / (2.0 * dy)
        dyo = (old[2:] - old[:-2]) / (2.0 * dy)
        rhs = (2.0 * cur[1:-1] - old[1:-1]) * idt2 \
            - (g / dt) * dyo + c2 * dyy + c1 * dyc - m**2 * cur[1:-1]

        # tridiagonal (1/dt^2) I - (g/dt) D_y on the interior
        coef = g / (dt * 2.0 * dy)
        ab[0, 1:] = -coef[:-1]     # superdiagonal
        ab[1, :] = idt2
        ab[2, :-1] = coef[1:]      # subdiagonal
        new = solve_banded((1, 1), ab, rhs)
        psi[n + 1, 1:-1] = new
        psi[n + 1, 0] = psi[n + 1, -1] = 0.0
        if float(np.max(np.abs(new))) > blowup_factor * sup0:
            raise Unstable("|psi| exceeded %g x initial at t=%g" % (blowup_factor, t))

    return OracleRun(motion, m, ts, ys, psi, cfl)


def compare(run, field, times=None, norm="sup"):
    """Discrepancy between the oracle and a characteristic-route solution.

    ``field`` may be a MasslessProfile (exact evaluator) or a FieldGrid;
    both are probed at the oracle's own nodes on the requested time slices.
    Returns (times, per-slice discrepancies, overall value).
    """
    if norm not in ("sup", "l2"):
        raise ValueError("norm must be 'sup' or 'l2'")
    t_lo, t_hi = run.ts[0], run.ts[-1]
    other_hi = getattr(field, "t_max", None)
    if other_hi is not None:
        t_hi = min(t_hi, other_hi)
    if t_hi <= t_lo:
        raise NoOverlap("no common time range")
    if times is None:
        times = np.linspace(t_lo, t_hi, 41)[1:]
    times = np.asarray([t for t in np.asarray(times, dtype=float)
                        if t_lo <= t <= t_hi])
    if times.size == 0:
        raise NoOverlap("no probe times inside the common range")

    out = []
    for t in times:
        t_act, xs, psi_vals = run.slice_at(float(t))
        if t_act > t_hi + 1e-12:
            continue
        interior = slice(1, -1)
        x_in = xs[interior]
        if hasattr(field, "phi_txy"):            # exact massless profile
            ref = field.phi_txy(np.full_like(x_in, t_act), x_in)[0]
        else:                                     # FieldGrid
            ref = field.interp_phi(t_act + x_in, t_act - x_in)
        diff = np.abs(psi_vals[interior] - ref)
        if norm == "sup":
            out.append(float(np.max(diff)))
        else:
            out.append(float(np.sqrt(simpson(diff**2, x=x_in))))
    if not out:
        raise NoOverlap("no probe times inside the common range")
    overall = max(out) if norm == "sup" else max(out)
    return times[:len(out)], np.asarray(out), overall
