"""Moving-wall trajectories and the characteristic maps h, k, F.

The cavity occupies 0 <= x <= a(t) where a is a strictly positive periodic
C^2 function with sub-luminal wall speed |a'(t)| < 1.  The maps

    h = Id - a,   k = Id + a,   F = k o h^{-1}

encode one light-ray reflection off both walls: a ray leaving x = 0 at
characteristic coordinate eta returns to x = 0 at F(eta).  F is a degree-one
lift of a circle diffeomorphism, F(x + T) = F(x) + T.
"""

import math

import numpy as np

__all__ = [
    "RejectedMotion",
    "NoConvergence",
    "BoundaryMotion",
    "CharacteristicMaps",
    "constant_profile",
    "sinusoidal_profile",
    "fourier_profile",
    "validate_motion",
]


class RejectedMotion(ValueError):
    """Wall trajectory violates positivity, periodicity or |a'| < 1."""


class NoConvergence(RuntimeError):
    """Safeguarded root finder for h^{-1} / k^{-1} exceeded its iteration cap.

    Unreachable for validated motions; signals an invariant breach.
    """


class _Profile:
    """Closed-form wall trajectory with two derivatives."""

    kind = "generic"

    def a(self, t):
        raise NotImplementedError

    def da(self, t):
        raise NotImplementedError

    def dda(self, t):
        raise NotImplementedError

    # scalar fast path for long orbit iterations (python floats, no numpy)
    def a_scalar(self, t):
        return float(self.a(t))

    def da_scalar(self, t):
        return float(self.da(t))


class constant_profile(_Profile):
    kind = "constant"

    def __init__(self, alpha):
        self.alpha = float(alpha)

    def a(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.alpha)

    def da(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    dda = da

    def a_scalar(self, t):
        return self.alpha

    def da_scalar(self, t):
        return 0.0

    def describe(self):
        return {"profile": "constant", "alpha": self.alpha}


class sinusoidal_profile(_Profile):
    """a(t) = alpha + beta * sin(2 pi t / period)."""

    kind = "sinusoidal"

    def __init__(self, alpha, beta, period):
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.omega = 2.0 * math.pi / float(period)

    def a(self, t):
        return self.alpha + self.beta * np.sin(self.omega * np.asarray(t, dtype=float))

    def da(self, t):
        return self.beta * self.omega * np.cos(self.omega * np.asarray(t, dtype=float))

    def dda(self, t):
        return -self.beta * self.omega**2 * np.sin(self.omega * np.asarray(t, dtype=float))

    def a_scalar(self, t):
        return self.alpha + self.beta * math.sin(self.omega * t)

    def da_scalar(self, t):
        return self.beta * self.omega * math.cos(self.omega * t)

    def describe(self):
        return {
            "profile": "sinusoidal",
            "alpha": self.alpha,
            "beta": self.beta,
            "period": 2.0 * math.pi / self.omega,
        }


class fourier_profile(_Profile):
    """a(t) = mean + sum_k cos_k cos(2 pi k t / T) + sin_k sin(2 pi k t / T)."""

    kind = "fourier"

    def __init__(self, mean, cos_coeffs, sin_coeffs, period):
        self.mean = float(mean)
        ncos, nsin = len(cos_coeffs), len(sin_coeffs)
        order = max(ncos, nsin, 1)
        self.cos_coeffs = np.zeros(order)
        self.sin_coeffs = np.zeros(order)
        self.cos_coeffs[:ncos] = cos_coeffs
        self.sin_coeffs[:nsin] = sin_coeffs
        self.order = order
        self.omega = 2.0 * math.pi / float(period)
        self._kw = self.omega * np.arange(1, order + 1)

    def a(self, t):
        t = np.asarray(t, dtype=float)
        ph = np.multiply.outer(t, self._kw)
        return self.mean + np.cos(ph) @ self.cos_coeffs + np.sin(ph) @ self.sin_coeffs

    def da(self, t):
        t = np.asarray(t, dtype=float)
        ph = np.multiply.outer(t, self._kw)
        return -np.sin(ph) @ (self._kw * self.cos_coeffs) + np.cos(ph) @ (self._kw * self.sin_coeffs)

    def dda(self, t):
        t = np.asarray(t, dtype=float)
        ph = np.multiply.outer(t, self._kw)
        return -np.cos(ph) @ (self._kw**2 * self.cos_coeffs) - np.sin(ph) @ (self._kw**2 * self.sin_coeffs)

    def a_scalar(self, t):
        s = self.mean
        for k in range(self.order):
            ph = self._kw[k] * t
            s += self.cos_coeffs[k] * math.cos(ph) + self.sin_coeffs[k] * math.sin(ph)
        return s

    def da_scalar(self, t):
        s = 0.0
        for k in range(self.order):
            ph = self._kw[k] * t
            s += self._kw[k] * (-self.cos_coeffs[k] * math.sin(ph) + self.sin_coeffs[k] * math.cos(ph))
        return s

    def describe(self):
        return {
            "profile": "fourier",
            "mean": self.mean,
            "cos": list(self.cos_coeffs),
            "sin": list(self.sin_coeffs),
            "period": 2.0 * math.pi / self.omega,
        }


class BoundaryMotion:
    """Validated periodic wall trajectory a(t) with cached bounds.

    Build through :func:`validate_motion`; instances are immutable after
    construction and safe for concurrent read-only use.

    Attributes
    ----------
    period : float
        Period T of the wall motion.
    a_min, a_max : float
        inf/sup of a over one period.
    da_max : float
        sup |a'(t)| over one period (strictly below 1).
    """

    def __init__(self, profile, period, a_min, a_max, da_max):
        self.profile = profile
        self.period = float(period)
        self.a_min = float(a_min)
        self.a_max = float(a_max)
        self.da_max = float(da_max)
        self.a0 = float(profile.a_scalar(0.0))

    def a(self, t):
        return self.profile.a(t)

    def da(self, t):
        return self.profile.da(t)

    def dda(self, t):
        return self.profile.dda(t)

    def describe(self):
        d = self.profile.describe()
        d["period"] = self.period
        return d

    def __repr__(self):
        return "BoundaryMotion(%s, T=%g, a in [%g, %g], sup|a'|=%g)" % (
            self.profile.kind, self.period, self.a_min, self.a_max, self.da_max)


def _refine_extremum(f, t_lo, t_hi, mode):
    """Refine max/min of f on [t_lo, t_hi] by golden-section search."""
    sign = 1.0 if mode == "max" else -1.0
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = t_lo, t_hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = sign * float(f(c)), sign * float(f(d))
    for _ in range(80):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = sign * float(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = sign * float(f(d))
        if b - a < 1e-14 * (1.0 + abs(a)):
            break
    return sign * max(fc, fd)


def validate_motion(profile, period):
    """Check a wall trajectory and return a :class:`BoundaryMotion`.

    Samples >= 10^4 points per period (10^4 * (order + 1) for Fourier
    profiles) and refines the extrema of a and |a'| around the sampled
    argmax/argmin.

    Raises
    ------
    RejectedMotion
        If period <= 0, inf a <= 0 or sup |a'| >= 1.
    """
    period = float(period)
    if not period > 0.0:
        raise RejectedMotion("period must be positive, got %g" % period)

    order = getattr(profile, "order", 0)
    n = 10_000 * (order + 1)
    ts = np.linspace(0.0, period, n, endpoint=False)
    av = np.asarray(profile.a(ts), dtype=float)
    dav = np.abs(np.asarray(profile.da(ts), dtype=float))
    if not (np.all(np.isfinite(av)) and np.all(np.isfinite(dav))):
        raise RejectedMotion("profile not evaluable on [0, period]")

    dt = period / n

    def refine(values, f, mode):
        idx = int(np.argmax(values)) if mode == "max" else int(np.argmin(values))
        t0 = ts[idx]
        return _refine_extremum(f, t0 - dt, t0 + dt, mode)

    a_min = refine(av, profile.a, "min")
    a_max = refine(av, profile.a, "max")
    da_max = refine(dav, lambda t: np.abs(profile.da(t)), "max")

    if a_min <= 0.0:
        raise RejectedMotion("inf a = %g <= 0" % a_min)
    if da_max >= 1.0:
        raise RejectedMotion("sup |a'| = %g >= 1" % da_max)

    # periodicity sanity check (closed-form profiles satisfy it exactly)
    per = np.asarray(profile.a(ts + period), dtype=float)
    if not np.allclose(per, av, rtol=1e-12, atol=1e-12 * max(1.0, a_max)):
        raise RejectedMotion("a(t + T) != a(t) on the sample grid")

    return BoundaryMotion(profile, period, a_min, a_max, da_max)


class CharacteristicMaps:
    """Evaluators for h, k, their inverses, and the circle-map lift F.

    All evaluations are pure functions of (motion, x); a coarse inverse
    table built at construction seeds the Newton iterations and is never
    mutated afterwards, so instances are safe to share across workers.
    """

    #: residual tolerance for the inverse solves, scaled by (1 + |y|)
    inv_tol = 1e-12

    def __init__(self, motion, table_points=4096):
        self.motion = motion
        self.a0 = motion.a0
        self.T = motion.period
        # F'(x) = (1 + a'(t))/(1 - a'(t)) is bounded by the velocity transfer
        s = motion.da_max
        self.dF_min = (1.0 - s) / (1.0 + s)
        self.dF_max = (1.0 + s) / (1.0 - s)
        # one period of t -> h(t), k(t) for initial inverse guesses
        ts = np.linspace(0.0, motion.period, table_points + 1)
        av = np.asarray(motion.a(ts), dtype=float)
        self._tab_t = ts
        self._tab_h = ts - av
        self._tab_k = ts + av

    # -- forward maps -----------------------------------------------------
    def h(self, t):
        t = np.asarray(t, dtype=float)
        return t - self.motion.a(t)

    def k(self, t):
        t = np.asarray(t, dtype=float)
        return t + self.motion.a(t)

    # -- inverses ----------------------------------------------------------
    def _invert(self, y, sign):
        """Solve t + sign*a(t) = y by Newton with bisection fallback.

        sign = -1 inverts h, sign = +1 inverts k.  Monotone because
        |a'| < 1, so the bracket [y - s*a_max, y - s*a_min] (s = sign)
        always contains the root.
        """
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y).astype(float)
        mot = self.motion

        tab = self._tab_h if sign < 0 else self._tab_k
        # periodic reduction: h(t + T) = h(t) + T, same for k
        shift = np.floor((y - tab[0]) / self.T) * self.T
        t = np.interp(y - shift, tab, self._tab_t) + shift

        lo = y - (sign * mot.a_max if sign > 0 else sign * mot.a_min) - 1e-9
        hi = y - (sign * mot.a_min if sign > 0 else sign * mot.a_max) + 1e-9
        tol = self.inv_tol * (1.0 + np.abs(y))

        for _ in range(60):
            f = t + sign * np.asarray(mot.a(t)) - y
            if np.all(np.abs(f) <= tol):
                break
            df = 1.0 + sign * np.asarray(mot.da(t))
            step = f / df
            t_new = t - step
            # fall back to bisection when Newton leaves the bracket
            bad = (t_new < lo) | (t_new > hi)
            if np.any(bad):
                mid = 0.5 * (lo + hi)
                t_new = np.where(bad, mid, t_new)
            fn = t_new + sign * np.asarray(mot.a(t_new)) - y
            pos = fn > 0.0
            hi = np.where(pos, t_new, hi)
            lo = np.where(pos, lo, t_new)
            t = t_new
        else:
            raise NoConvergence("inverse solve did not reach tolerance")

        return float(t[0]) if scalar else t

    def h_inv(self, y):
        """t with t - a(t) = y, residual <= 1e-12 * (1 + |y|)."""
        return self._invert(y, -1.0)

    def k_inv(self, y):
        """t with t + a(t) = y, residual <= 1e-12 * (1 + |y|)."""
        return self._invert(y, +1.0)

    # -- lift F and its derivative ----------------------------------------
    def F(self, x):
        """F(x) = x + 2 a(h^{-1}(x))."""
        t = self.h_inv(x)
        return x + 2.0 * np.asarray(self.motion.a(t)) if np.ndim(x) else float(x + 2.0 * self.motion.a(t))

    def F_inv(self, x):
        """F^{-1}(x) = x - 2 a(k^{-1}(x))."""
        t = self.k_inv(x)
        return x - 2.0 * np.asarray(self.motion.a(t)) if np.ndim(x) else float(x - 2.0 * self.motion.a(t))

    def dF(self, x):
        """DF(x) = (1 + a'(t)) / (1 - a'(t)) with t = h^{-1}(x); positive."""
        da = np.asarray(self.motion.da(self.h_inv(x)))
        out = (1.0 + da) / (1.0 - da)
        return out if np.ndim(x) else float(out)

    def dF_inv(self, x):
        """(F^{-1})'(x) = (1 - a'(t)) / (1 + a'(t)) with t = k^{-1}(x)."""
        da = np.asarray(self.motion.da(self.k_inv(x)))
        out = (1.0 - da) / (1.0 + da)
        return out if np.ndim(x) else float(out)

    def F_and_dF(self, x):
        """(F(x), DF(x)) sharing one inverse solve."""
        t = self.h_inv(x)
        a = np.asarray(self.motion.a(t))
        da = np.asarray(self.motion.da(t))
        return x + 2.0 * a, (1.0 + da) / (1.0 - da)

    def F_inv_and_dF(self, x):
        """(F^{-1}(x), DF evaluated at F^{-1}(x)), one inverse solve.

        Uses h(k^{-1}(x)) = F^{-1}(x), so the multiplier at the pulled-back
        point costs nothing extra.
        """
        t = self.k_inv(x)
        a = np.asarray(self.motion.a(t))
        da = np.asarray(self.motion.da(t))
        return x - 2.0 * a, (1.0 + da) / (1.0 - da)

    # -- scalar orbit fast path ---------------------------------------------
    def orbit_translation(self, x0, n):
        """(F^n(x0) - x0) via n scalar lift steps; used by rotation numbers.

        Tracks t = h^{-1}(x) along the orbit so each step costs a couple of
        Newton iterations seeded from the previous reflection time.
        """
        a_s = self.motion.profile.a_scalar
        da_s = self.motion.profile.da_scalar
        tol = 1e-13
        x = float(x0)
        # initial reflection time
        t = self._scalar_hinv(x, x + a_s(x))
        total = 0.0
        for _ in range(int(n)):
            step = 2.0 * a_s(t)
            total += step
            x = x + step
            # h(t_next) = x, seeded by the previous time plus the ray flight
            guess = t + step / max(1.0 - da_s(t), 0.05)
            t = self._scalar_hinv(x, guess, tol)
        return total

    def _scalar_hinv(self, y, guess, tol=1e-13):
        a_s = self.motion.profile.a_scalar
        da_s = self.motion.profile.da_scalar
        t = guess
        for _ in range(100):
            f = t - a_s(t) - y
            if abs(f) <= tol * (1.0 + abs(y)):
                return t
            t -= f / (1.0 - da_s(t))
        # Newton stalled (bad seed); fall back to the vector path
        return float(self.h_inv(y))


def make_motion(spec_dict):
    """Build a validated motion from a plain description dict.

    Expected keys: ``profile`` in {constant, sinusoidal, fourier} plus the
    profile parameters and ``period``.
    """
    kind = spec_dict["profile"]
    period = float(spec_dict["period"])
    if kind == "constant":
        prof = constant_profile(spec_dict["alpha"])
    elif kind == "sinusoidal":
        prof = sinusoidal_profile(spec_dict["alpha"], spec_dict["beta"], period)
    elif kind == "fourier":
        prof = fourier_profile(
            spec_dict["mean"],
            spec_dict.get("cos", []),
            spec_dict.get("sin", []),
            period,
        )
    else:
        raise RejectedMotion("unknown profile kind %r" % kind)
    return validate_motion(prof, period)
