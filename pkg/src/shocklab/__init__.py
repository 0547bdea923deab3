"""Numerical laboratory for planar viscous shocks on a slab with slip walls.

Subpackages cover the pieces of the pipeline in dependency order: gas law
and jump conditions (``gas``), the viscous profile connecting the two
states (``profile``), half-space grids with Navier-slip ghost closures
(``grid``), the explicit finite-volume integrator (``solver``), shift and
anti-derivative tracking of the wave (``tracking``), and energy-style
diagnostics (``diagnostics``). ``cli`` wires them into a command line.
"""

__version__ = "0.1.0"

import os as _os

# Cap worker threads before numpy initializes its backends. Applies only
# when the respective backend variables are not already set by the caller.
_threads = _os.environ.get("SHOCKLAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from . import gas  # noqa: F401,E402
