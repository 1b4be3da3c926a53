"""Convex-hull reconstruction of sound-hard polygonal obstacles from single-wave scattering data.

Modules
-------
specfun      Gamma, real-order Bessel J, integer-order Y and H1.
geometry     Directions, polygons, scenes, support functions, corner frames.
forward      Nystrom boundary integral solver, Cauchy data, far fields.
probes       Exponential probes exp(x . c_tau(omega)) and Herglotz densities.
indicators   Indicator integrals I, I' and their ratio from data.
reconstruct  Support, vertex and hull estimates.
asymptotics  Model-integral and corner-expansion checks.
cli          Batch front end (``enclosure`` console script).
"""

from .errors import (
    ConvergenceError,
    DomainError,
    EnclosureError,
    EnclosureWarning,
    ExponentOverflowError,
    IllConditionedError,
    InsufficientDataError,
)
from .geometry import Direction, Polygon, Scene, Screen, convex_hull, corner_frame, singular_directions, support
from .forward import CauchyData, Discretization, FarField, PlaneWave, PointSource, WaveContext, cauchy_data, far_field, solve
from .probes import ProbeParams
from .indicators import IndicatorSample, IndicatorSeries, ratio_series, shift_ratio
from .reconstruct import HullSweep, ReconResult, beta0, farfield_reconstruct, hull_sweep, vertex_estimate

__version__ = "0.1.0"

__all__ = [
    "CauchyData",
    "ConvergenceError",
    "Direction",
    "Discretization",
    "DomainError",
    "EnclosureError",
    "EnclosureWarning",
    "ExponentOverflowError",
    "FarField",
    "HullSweep",
    "IllConditionedError",
    "IndicatorSample",
    "IndicatorSeries",
    "InsufficientDataError",
    "PlaneWave",
    "PointSource",
    "Polygon",
    "ProbeParams",
    "ReconResult",
    "Scene",
    "Screen",
    "WaveContext",
    "beta0",
    "cauchy_data",
    "convex_hull",
    "corner_frame",
    "far_field",
    "farfield_reconstruct",
    "hull_sweep",
    "ratio_series",
    "shift_ratio",
    "singular_directions",
    "solve",
    "support",
    "vertex_estimate",
]
