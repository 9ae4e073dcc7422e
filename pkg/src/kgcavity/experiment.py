"""Experiment orchestration: config files, energy-growth fits, scans, reports.

Config grammar: flat ``key = value`` lines with dotted section names and
``#`` comments, e.g.::

    boundary.profile = sinusoidal
    boundary.alpha = 0.5
    boundary.beta = 0.01
    boundary.period = 1.0
    mass.values = 0.0, 0.25
    data.family = bump
    data.center = 0.25
    data.width = 0.1
    data.amplitude = 1.0
    data.direction = right
    grid.resolution = 512
    grid.horizon_periods = 24
    analysis.rotation_iterations = 200000
    analysis.max_q = 20
    fit.samples_per_window = 32
    fit.burn_in_windows = 2
    output.dir = out
    seed = 1234

CSV schemas (headers mandatory, '.' decimal, no locale):
  energy series: ``t,E,E_mass_share,E_window_avg``
  scan:          ``param,rho,rho_err,p,q,gamma,gamma_fit,status``
  field export:  ``t,x,phi`` (written by ``FieldGrid.export_table``)
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import boundary, cauchy, circle_dynamics, kleingordon, oracle_fdm
from .characteristics_solver import build_initial_profile

__all__ = [
    "ConfigError",
    "TooFewWindows",
    "NonpositiveEnergy",
    "ExperimentConfig",
    "fit_exponent",
    "run_experiment",
    "scan",
    "run_verify",
]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class EnergySeries:
    """Sampled E_m(t) with window averages and the fitted growth exponent.

    Invariants checked at construction: strictly increasing times,
    nonnegative energies; window averaging uses the resonance period pT
    when one exists.
    """

    def __init__(self, times, energies, mass_share, window):
        self.times = np.asarray(times, dtype=float)
        self.energies = np.asarray(energies, dtype=float)
        self.mass_share = np.asarray(mass_share, dtype=float)
        self.window = float(window)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if np.any(self.energies < 0):
            raise ValueError("energies must be nonnegative")
        self.gamma_fit = None
        self.gamma_fit_half_width = None
        self.gamma_predicted = None
        self.sandwich = None

    def fit(self, burn_in_windows=0, gamma_predicted=None):
        self.gamma_fit, self.gamma_fit_half_width, info = fit_exponent(
            self.times, self.energies, self.window,
            burn_in_windows=burn_in_windows)
        self.window_times = info["window_times"]
        self.window_averages = info["window_averages"]
        self.gamma_predicted = gamma_predicted
        if gamma_predicted:
            self.sandwich = _sandwich(self.window_times, self.window_averages,
                                      gamma_predicted, burn_in_windows)
        return self


class TooFewWindows(ValueError):
    """Exponent fitting needs at least 5 complete windows."""


class NonpositiveEnergy(ValueError):
    """A window-averaged energy was <= 0; its logarithm is undefined."""


_DEFAULTS = {
    "boundary.profile": "sinusoidal",
    "boundary.alpha": 1.0,
    "boundary.beta": 0.1,
    "boundary.period": 1.0,
    "boundary.mean": 1.0,
    "boundary.cos": "",
    "boundary.sin": "",
    "mass.values": "0.0",
    "data.family": "bump",
    "data.center": 0.25,
    "data.width": 0.1,
    "data.amplitude": 1.0,
    "data.direction": "right",
    "data.mode": 1,
    "data.path": "",
    "grid.resolution": 256,
    "grid.horizon_periods": 8.0,
    "analysis.rotation_iterations": 100_000,
    "analysis.max_q": 20,
    "analysis.scan_samples": 10_000,
    "analysis.tolerance": 1e-9,
    "fit.window": "auto",
    "fit.samples_per_window": 32,
    "fit.burn_in_windows": 2,
    "picard.tol": 1e-9,
    "picard.n_max": 40,
    "oracle.enabled": False,
    "oracle.n_y": 256,
    "oracle.horizon": 3.0,
    "output.dir": "out",
    "scan.parameter": "boundary.beta",
    "scan.values": "",
    "scan.simulate": False,
    "scan.sim_periods": 8.0,
    "seed": 1234,
}

_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


class ExperimentConfig:
    """Typed view over the flat key-value config with validation."""

    def __init__(self, values):
        self.values = dict(_DEFAULTS)
        for k, v in values.items():
            if k not in _DEFAULTS:
                raise ConfigError("unknown config key %r" % k)
            self.values[k] = v

    @classmethod
    def from_file(cls, path):
        vals = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError("%s:%d: expected 'key = value'" % (path, lineno))
                key, val = (s.strip() for s in line.split("=", 1))
                vals[key] = val
        return cls(vals)

    # typed accessors ------------------------------------------------------
    def str_(self, key):
        return str(self.values[key])

    def float_(self, key):
        try:
            return float(self.values[key])
        except (TypeError, ValueError):
            raise ConfigError("key %s: expected a number, got %r" % (key, self.values[key]))

    def int_(self, key):
        try:
            return int(float(self.values[key]))
        except (TypeError, ValueError):
            raise ConfigError("key %s: expected an integer, got %r" % (key, self.values[key]))

    def bool_(self, key):
        v = self.values[key]
        if isinstance(v, bool):
            return v
        try:
            return _BOOL[str(v).strip().lower()]
        except KeyError:
            raise ConfigError("key %s: expected a boolean, got %r" % (key, v))

    def list_(self, key):
        v = str(self.values[key]).strip()
        if not v:
            return []
        return [float(s) for s in v.replace(";", ",").split(",") if s.strip()]

    # assembled objects ----------------------------------------------------
    def motion_dict(self, override=None):
        d = {
            "profile": self.str_("boundary.profile"),
            "period": self.float_("boundary.period"),
            "alpha": self.float_("boundary.alpha"),
            "beta": self.float_("boundary.beta"),
            "mean": self.float_("boundary.mean"),
            "cos": self.list_("boundary.cos"),
            "sin": self.list_("boundary.sin"),
        }
        if override:
            d.update(override)
        return d

    def make_motion(self, override=None):
        return boundary.make_motion(self.motion_dict(override))

    def make_data(self, a0):
        fam = self.str_("data.family")
        if fam == "bump":
            return cauchy.make_bump(a0, self.float_("data.center"),
                                    self.float_("data.width"),
                                    self.float_("data.amplitude"),
                                    self.str_("data.direction"))
        if fam == "eigenmode":
            return cauchy.make_eigenmode(a0, self.int_("data.mode"),
                                         self.float_("data.amplitude"))
        if fam == "zero":
            return cauchy.zero_data(a0)
        if fam == "table":
            return cauchy.load_tabulated(self.str_("data.path"), a0)
        raise ConfigError("unknown data.family %r" % fam)

    def validate(self, need_fit=True):
        for key in ("analysis.tolerance", "picard.tol"):
            if self.float_(key) <= 0:
                raise ConfigError("%s must be positive" % key)
        if need_fit and self.float_("grid.horizon_periods") < 2:
            raise ConfigError("grid.horizon_periods must be >= 2 when fitting")
        out = self.str_("output.dir")
        os.makedirs(out, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError("output.dir %r not writable" % out)
        return self


def _fmt(x):
    """Locale-free shortest-roundtrip float formatting for CSV/JSON."""
    if x is None:
        return ""
    return repr(float(x))


def fit_exponent(times, energies, window, samples_per_window=None,
                 burn_in_windows=0):
    """Least-squares growth rate of log window-averaged energy.

    The series is averaged over consecutive windows of length ``window``
    (period averaging removes the within-period oscillation of E), then a
    line is fitted to log(average) against the window midpoint times.

    Returns (gamma_fit, half_width, info) where half_width is the standard
    error of the slope and info carries the window times/averages/residuals.
    """
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if times.size != energies.size:
        raise ValueError("times and energies must have equal length")
    t0 = times[0]
    idx = np.floor((times - t0) / window + 1e-9).astype(int)
    nwin = int(idx.max()) + 1
    # drop a trailing incomplete window
    counts = np.bincount(idx, minlength=nwin)
    if nwin >= 2 and counts[-1] < 0.5 * counts[0]:
        nwin -= 1
    if nwin - burn_in_windows < 5:
        raise TooFewWindows("need >= 5 windows after burn-in, have %d" % (nwin - burn_in_windows))
    tmid = np.empty(nwin)
    avg = np.empty(nwin)
    for k in range(nwin):
        sel = idx == k
        tmid[k] = float(np.mean(times[sel]))
        avg[k] = float(np.mean(energies[sel]))
    if np.any(avg <= 0.0):
        raise NonpositiveEnergy("window average <= 0 at window %d"
                                % int(np.argmax(avg <= 0.0)))
    tw = tmid[burn_in_windows:]
    lw = np.log(avg[burn_in_windows:])
    n = len(tw)
    tbar = np.mean(tw)
    sxx = float(np.sum((tw - tbar) ** 2))
    slope = float(np.sum((tw - tbar) * (lw - np.mean(lw))) / sxx)
    icept = float(np.mean(lw) - slope * tbar)
    resid = lw - (icept + slope * tw)
    sigma2 = float(np.sum(resid**2)) / max(n - 2, 1)
    half_width = math.sqrt(sigma2 / sxx)
    info = {
        "window": window,
        "window_times": tmid,
        "window_averages": avg,
        "fit_windows": n,
        "intercept": icept,
        "residuals": resid,
    }
    return slope, half_width, info


def _sandwich(tmid, avg, gamma, burn_in=0):
    """Residuals r_k = log(avg_k) - gamma t_k and their trend slope.

    min/max of r are the measured stand-ins for ln A, ln B of the two-sided
    exponential envelope; the trend slope should vanish when gamma is right.
    """
    t = np.asarray(tmid, dtype=float)[burn_in:]
    r = np.log(np.asarray(avg, dtype=float)[burn_in:]) - gamma * t
    tbar = np.mean(t)
    slope = float(np.sum((t - tbar) * (r - np.mean(r))) / np.sum((t - tbar) ** 2))
    return {
        "min_residual": float(np.min(r)),
        "max_residual": float(np.max(r)),
        "trend_slope": slope,
    }


def _energy_csv(path, times, E, share, window):
    t0 = times[0] if len(times) else 0.0
    idx = np.floor((np.asarray(times) - t0) / window + 1e-9).astype(int)
    with open(path, "w", newline="") as fh:
        fh.write("t,E,E_mass_share,E_window_avg\n")
        if len(times) == 0:
            return
        nwin = int(idx.max()) + 1
        avg = np.zeros(nwin)
        for k in range(nwin):
            sel = idx == k
            avg[k] = float(np.mean(np.asarray(E)[sel]))
        for t, e, s, k in zip(times, E, share, idx):
            fh.write("%s,%s,%s,%s\n" % (_fmt(t), _fmt(e), _fmt(s), _fmt(avg[k])))


def analyze_config_map(cfg, override=None):
    """Validated motion + maps + MapAnalysis for one config (scan point)."""
    motion = cfg.make_motion(override)
    maps = boundary.CharacteristicMaps(motion)
    analysis = circle_dynamics.analyze_map(
        maps,
        rotation_iterations=cfg.int_("analysis.rotation_iterations"),
        max_q=cfg.int_("analysis.max_q"),
        scan_samples=cfg.int_("analysis.scan_samples"),
    )
    return motion, maps, analysis


def run_experiment(cfg, write_outputs=True):
    """Full pipeline: map analysis, data checks, per-mass runs, fits, report.

    Per-mass errors are caught and recorded; partial results persist.
    """
    cfg.validate()
    outdir = cfg.str_("output.dir")
    report = {"config": {k: str(v) for k, v in sorted(cfg.values.items())},
              "errors": []}

    motion, maps, analysis = analyze_config_map(cfg)
    report["motion"] = {
        **{k: (list(v) if isinstance(v, (list, tuple, np.ndarray)) else v)
           for k, v in motion.describe().items()},
        "a_min": motion.a_min, "a_max": motion.a_max, "da_max": motion.da_max,
    }
    report["map_analysis"] = analysis.to_dict()

    data = cfg.make_data(maps.a0)
    comp = cauchy.check_compatibility(data, motion)
    report["compatibility"] = comp.to_dict()

    if analysis.J:
        normJ = float(cauchy.check_hypothesis_J(data, analysis))
        report["hypothesis_J_norm"] = normJ
        report["hypothesis_J_warning"] = bool(normJ <= 1e-12)
    else:
        report["hypothesis_J_norm"] = None

    T = motion.period
    if analysis.resonance is not None:
        p, _q = analysis.resonance
        window = p * T
    else:
        w = cfg.values["fit.window"]
        window = T if str(w) == "auto" else float(w)
    horizon = cfg.float_("grid.horizon_periods") * window
    spw = cfg.int_("fit.samples_per_window")
    burn = cfg.int_("fit.burn_in_windows")
    gamma_pred = analysis.gamma

    report["masses"] = []
    for m in cfg.list_("mass.values"):
        entry = {"m": m}
        try:
            if m == 0.0:
                profile = build_initial_profile(data, maps)
                nwin = int(round(horizon / window))
                times = window / spw * np.arange(nwin * spw)
                E = profile.energy_series(times)
                share = np.zeros_like(E)
                entry["solver"] = "massless-exact"
            else:
                fg = kleingordon.picard_solve(
                    data, maps, m,
                    resolution=cfg.int_("grid.resolution"),
                    t_max=horizon + 2.0 / spw * window,
                    tol=cfg.float_("picard.tol"),
                    n_max=cfg.int_("picard.n_max"))
                nwin = int(round(horizon / window))
                want = window / spw * (np.arange(nwin * spw) + 0.5)
                times, E, share = fg.energy_series(want)
                entry["solver"] = "picard"
                entry["iterations"] = fg.iterations
                entry["changes"] = [float(c) for c in fg.changes]
                ch, bd = fg.picard_bound()
                entry["picard_bound_ok"] = bool(
                    np.all(ch[1:] <= bd[1:] + 1e-13 * fg.sup_phi0))
                entry["field_bound_ratio"] = float(fg.field_bound_ratio())
            series = EnergySeries(times, E, share, window).fit(
                burn_in_windows=burn, gamma_predicted=gamma_pred)
            entry["gamma_fit"] = series.gamma_fit
            entry["gamma_fit_half_width"] = series.gamma_fit_half_width
            entry["gamma_predicted"] = gamma_pred
            if series.sandwich:
                entry["sandwich"] = series.sandwich
            if write_outputs:
                path = os.path.join(outdir, "energy_m%s.csv" % _fmt(m))
                _energy_csv(path, times, E, share, window)
                entry["energy_csv"] = path
        except Exception as exc:   # record and continue with other masses
            entry["error"] = "%s: %s" % (type(exc).__name__, exc)
            report["errors"].append("mass %g: %s" % (m, entry["error"]))
        report["masses"].append(entry)

    if cfg.bool_("oracle.enabled"):
        try:
            run = oracle_fdm.solve_oracle(
                data, motion, m=0.0, n_y=cfg.int_("oracle.n_y"),
                t_max=cfg.float_("oracle.horizon"))
            profile = build_initial_profile(data, maps)
            ts, ds, overall = oracle_fdm.compare(run, profile)
            report["oracle"] = {
                "n_y": cfg.int_("oracle.n_y"),
                "horizon": cfg.float_("oracle.horizon"),
                "sup_discrepancy": float(overall),
            }
        except Exception as exc:
            report["errors"].append("oracle: %s: %s" % (type(exc).__name__, exc))
            report["oracle"] = None

    if write_outputs:
        with open(os.path.join(outdir, "report.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
    return report


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------------------
# parameter scan
# ---------------------------------------------------------------------------

def _parse_scan_values(cfg):
    spec_str = str(cfg.values["scan.values"]).strip()
    if not spec_str:
        return []
    if ":" in spec_str:
        lo, hi, n = spec_str.split(":")
        return list(np.linspace(float(lo), float(hi), int(n)))
    return [float(s) for s in spec_str.split(",") if s.strip()]


def _scan_point(args):
    cfg_values, param, value = args
    cfg = ExperimentConfig(cfg_values)
    row = {"param": value, "rho": None, "rho_err": None, "p": None, "q": None,
           "gamma": None, "gamma_fit": None, "status": "ok"}
    if not param.startswith("boundary."):
        row["status"] = "ConfigError: can only scan boundary.* parameters"
        return row
    field = param.split(".", 1)[1]
    try:
        motion, maps, analysis = analyze_config_map(cfg, {field: value})
    except boundary.RejectedMotion as exc:
        row["status"] = "RejectedMotion: %s" % exc
        return row
    except Exception as exc:
        row["status"] = "%s: %s" % (type(exc).__name__, exc)
        return row
    row["rho"] = analysis.rotation_estimate
    row["rho_err"] = analysis.rotation_half_width
    if analysis.resonance:
        row["p"], row["q"] = analysis.resonance
    row["gamma"] = analysis.gamma
    row["status"] = analysis.status
    if cfg.bool_("scan.simulate") and analysis.status == "ok":
        try:
            data = cfg.make_data(maps.a0)
            profile = build_initial_profile(data, maps)
            p, _ = analysis.resonance
            window = p * motion.period
            spw = cfg.int_("fit.samples_per_window")
            nwin = max(int(cfg.float_("scan.sim_periods")), 6)
            times = window / spw * np.arange(nwin * spw)
            E = profile.energy_series(times)
            gfit, _, _ = fit_exponent(times, E, window, burn_in_windows=1)
            row["gamma_fit"] = gfit
        except Exception as exc:
            row["status"] = "sim:%s: %s" % (type(exc).__name__, exc)
    return row


def scan(cfg, workers=1, write_outputs=True):
    """Sweep one boundary parameter; one CSV row per point, errors in-row.

    Rows are sorted by parameter value before writing, so output bytes are
    identical for any worker count.
    """
    cfg.validate(need_fit=False)
    values = _parse_scan_values(cfg)
    param = cfg.str_("scan.parameter")
    args = [(cfg.values, param, v) for v in values]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_point, args))
    else:
        rows = [_scan_point(a) for a in args]
    rows.sort(key=lambda r: r["param"])
    if write_outputs:
        path = os.path.join(cfg.str_("output.dir"), "scan.csv")
        with open(path, "w", newline="") as fh:
            fh.write("param,rho,rho_err,p,q,gamma,gamma_fit,status\n")
            for r in rows:
                fh.write(",".join([
                    _fmt(r["param"]), _fmt(r["rho"]), _fmt(r["rho_err"]),
                    "" if r["p"] is None else str(r["p"]),
                    "" if r["q"] is None else str(r["q"]),
                    _fmt(r["gamma"]), _fmt(r["gamma_fit"]),
                    str(r["status"]).replace(",", ";"),
                ]) + "\n")
    return rows


# ---------------------------------------------------------------------------
# invariant battery behind the `verify` subcommand
# ---------------------------------------------------------------------------

def _verify_checks(cfg):
    """(name, callable) pairs; each callable returns (ok, detail)."""
    motion = cfg.make_motion()
    maps = boundary.CharacteristicMaps(motion)
    T = motion.period
    a0 = maps.a0
    seed = cfg.int_("seed")
    rng_master = np.random.default_rng(seed)
    spawn = {name: np.random.default_rng([seed, i])
             for i, name in enumerate([
                 "maps", "herman", "profile", "geometry", "massive"])}
    del rng_master

    def chk_motion():
        ts = np.linspace(0.0, T, 1000)
        per = np.max(np.abs(np.asarray(motion.a(ts + T)) - np.asarray(motion.a(ts))))
        ok = per <= 1e-10 * max(1.0, motion.a_max) and motion.a_min > 0 \
            and motion.da_max < 1.0
        return ok, "periodicity %.2e, a in [%g, %g], sup|a'| %.3f" % (
            per, motion.a_min, motion.a_max, motion.da_max)

    def chk_maps():
        rng = spawn["maps"]
        x = rng.uniform(-3 * T, 3 * T, 1000)
        e1 = float(np.max(np.abs(maps.F(maps.F_inv(x)) - x)))
        e2 = float(np.max(np.abs(maps.F(x + T) - maps.F(x) - T)))
        xs = np.sort(x)
        mono = bool(np.all(np.diff(maps.F(xs)) > 0))
        d = np.asarray(maps.dF(x))
        bounds = bool(np.all((d >= maps.dF_min - 1e-12) & (d <= maps.dF_max + 1e-12)))
        step = x - np.asarray(maps.F_inv(x))
        stp = bool(np.all((step >= 2 * motion.a_min - 1e-9)
                          & (step <= 2 * motion.a_max + 1e-9)))
        ok = e1 <= 1e-10 and e2 <= 1e-10 and mono and bounds and stp
        return ok, "inv %.1e, lift %.1e, monotone %s, dF in bounds %s, step identity %s" % (
            e1, e2, mono, bounds, stp)

    def chk_herman():
        rng = spawn["herman"]
        x0 = float(rng.uniform(-a0, a0))
        n = 500
        e1, h1 = circle_dynamics.rotation_number(maps, n, x0)
        e2, _ = circle_dynamics.rotation_number(maps, 10 * n, x0)
        ok = abs(e1 - e2) <= h1
        return ok, "|rho_n - rho_10n| = %.2e <= T/n = %.2e" % (abs(e1 - e2), h1)

    def chk_profile():
        data = cfg.make_data(a0)
        comp = cauchy.check_compatibility(data, motion)
        if not comp.all_passed:
            return False, "compatibility failed: " + "; ".join(
                l for l, okk in zip(comp.lines(), comp.passed) if not okk)
        prof = build_initial_profile(data, maps)
        rng = spawn["profile"]
        eta = rng.uniform(-a0, a0 + 3 * T, 100)
        wall = np.max(np.abs(prof.eval_phi(np.asarray(maps.F(eta)), eta)))
        x = rng.uniform(0.0, a0, 100)
        tr = np.max(np.abs(prof.eval_phi(x, -x) - np.asarray(data.phi0(x))))
        pro = np.max(np.abs(prof.G(np.asarray(maps.F(eta))) - prof.G(eta)))
        ok = wall <= 1e-9 and tr <= 1e-9 and pro <= 1e-9
        return ok, "wall trace %.1e, initial trace %.1e, prolongation %.1e" % (wall, tr, pro)

    def chk_energy_step():
        data = cfg.make_data(a0)
        prof = build_initial_profile(data, maps)
        rng = spawn["profile"]
        t1 = float(rng.uniform(0.5, 3.0))
        t2 = t1 + float(rng.uniform(0.0, 2 * motion.a_min))
        E1, E2 = prof.energy(t1), prof.energy(t2)
        lo = E1 / maps.dF_max - 1e-12
        hi = E1 / maps.dF_min + 1e-12
        ok = lo <= E2 <= hi
        s1, _ = circle_dynamics.weighted_integral(maps, t1, 2, panels=512)
        s2, _ = circle_dynamics.weighted_integral(maps, t2, 2, panels=512)
        okS = (maps.dF_min**2 / maps.dF_max) * s1 - 1e-12 <= s2 <= (maps.dF_max**2 / maps.dF_min) * s1 + 1e-12
        return ok and okS, "E0 step %s, S_j step %s (t1=%.3f, t2=%.3f)" % (ok, okS, t1, t2)

    def chk_geometry():
        rng = spawn["geometry"]
        worst = 0.0
        for _ in range(200):
            t = rng.uniform(0.1, 4.0)
            x = rng.uniform(1e-3, float(motion.a(t)) - 1e-3)
            xi, eta = t + x, t - x
            mm = kleingordon.measure_M(maps, xi, eta)
            bound = 2.0 * motion.a_max * kleingordon.time_of(xi, eta)
            worst = max(worst, mm - bound)
        return worst <= 1e-9, "max(measure(M) - 2 a_max T) = %.2e" % worst

    def chk_massive():
        data = cfg.make_data(a0)
        m = 0.4
        fg = kleingordon.picard_solve(data, maps, m, resolution=128,
                                      t_max=2.5, tol=1e-9)
        ch, bd = fg.picard_bound()
        dom = bool(np.all(ch[1:] <= bd[1:] + 1e-13 * fg.sup_phi0))
        fb = fg.field_bound_ratio() <= 1.1
        res = kleingordon.verify_integral_identity(fg, samples=40,
                                                   seed=cfg.int_("seed"))
        budget = 50.0 * fg.lattice.delta * max(fg.sup_phi(), 1e-30)
        ok = dom and fb and res <= budget
        return ok, "picard bound %s, field bound %s, M-identity %.2e <= %.2e" % (
            dom, fb, res, budget)

    return [
        ("motion_invariants", chk_motion),
        ("map_identities", chk_maps),
        ("rotation_herman", chk_herman),
        ("profile_traces", chk_profile),
        ("energy_sandwich_steps", chk_energy_step),
        ("geometry_measure", chk_geometry),
        ("massive_bounds", chk_massive),
    ]


def _verify_one(args):
    cfg_values, name = args
    cfg = ExperimentConfig(cfg_values)
    checks = dict(_verify_checks(cfg))
    try:
        ok, detail = checks[name]()
    except Exception as exc:
        return name, False, "ERROR %s: %s" % (type(exc).__name__, exc)
    return name, bool(ok), detail


def run_verify(cfg, workers=1, write_outputs=True):
    """Run the invariant battery; returns (all_ok, lines).

    Lines are sorted by check name and written byte-identically regardless
    of the worker count.
    """
    cfg.validate(need_fit=False)
    names = [n for n, _ in _verify_checks(cfg)]
    args = [(cfg.values, n) for n in names]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_verify_one, args))
    else:
        results = [_verify_one(a) for a in args]
    results.sort(key=lambda r: r[0])
    lines = ["%-4s %-24s %s" % ("PASS" if ok else "FAIL", name, detail)
             for name, ok, detail in results]
    all_ok = all(ok for _, ok, _ in results)
    if write_outputs:
        path = os.path.join(cfg.str_("output.dir"), "verify.txt")
        with open(path, "w", newline="") as fh:
            for ln in lines:
                fh.write(ln + "\n")
            fh.write("RESULT %s\n" % ("PASS" if all_ok else "FAIL"))
    return all_ok, lines
