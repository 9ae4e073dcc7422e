"""kgcavity: a classical Klein-Gordon field in a pulsating cavity.

Library for the 1+1-dimensional Klein-Gordon equation on an interval
0 <= x <= a(t) with Dirichlet walls, one wall moving periodically.  The
solution machinery runs along characteristics: the wall motion induces a
circle-map lift F = (Id + a) o (Id - a)^{-1} whose attracting periodic
orbits focus characteristics and pump field energy exponentially at the
rate gamma = -ln DF^q(a_i0) / (pT), for zero and sufficiently small mass.

Modules
-------
boundary                wall trajectories; maps h, k, F, inverses, DF
circle_dynamics         rotation numbers, periodic orbits, gamma, A_i, S_j
cauchy                  initial data families and corner compatibility
characteristics_solver  exact massless profile G, prolongation, E_0(t)
kleingordon             massive Picard solver, geometry Q/B/N/M, E_m(t)
oracle_fdm              independent finite-difference cross-check
experiment              configs, exponent fitting, scans, verify battery
cli                     analyze-map / simulate / scan / verify
"""

from . import (  # noqa: F401
    boundary,
    cauchy,
    characteristics_solver,
    circle_dynamics,
    experiment,
    kleingordon,
    oracle_fdm,
)

__version__ = "0.1.0"
