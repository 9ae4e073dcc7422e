"""Sweep the wall-oscillation amplitude and watch the resonance tongue.

At beta = 0 the wall is static and every ray orbit is periodic (the scan
flags the rigid map).  For beta > 0 the 1:1 locking persists over the whole
tongue while the attractor multiplier, and with it the growth exponent
gamma = -ln DF(x*) / T, strengthens continuously.

Run:  python3 demos/demo_resonance_scan.py [workers]
"""

import sys
import tempfile

from kgcavity.experiment import ExperimentConfig, scan

workers = int(sys.argv[1]) if len(sys.argv) > 1 else 1

with tempfile.TemporaryDirectory() as tmp:
    cfg = ExperimentConfig({
        "boundary.profile": "sinusoidal",
        "boundary.alpha": "0.5",
        "boundary.period": "1.0",
        "scan.parameter": "boundary.beta",
        "scan.values": "0.0:0.12:13",
        "scan.simulate": "true",
        "scan.sim_periods": "12",
        "analysis.rotation_iterations": "50000",
        "output.dir": tmp,
    })
    rows = scan(cfg, workers=workers)

print("%8s %10s %5s %10s %10s  %s" % ("beta", "rho", "p/q", "gamma",
                                      "gamma_fit", "status"))
for r in rows:
    pq = "%s/%s" % (r["p"], r["q"]) if r["p"] else "-"
    g = "%.5f" % r["gamma"] if r["gamma"] else "-"
    gf = "%.5f" % r["gamma_fit"] if r["gamma_fit"] else "-"
    print("%8.3f %10.6f %5s %10s %10s  %s"
          % (r["param"], r["rho"], pq, g, gf, r["status"]))
