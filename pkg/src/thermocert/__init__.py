"""Certified thermodynamic formalism for distance-expanding maps."""

from .ball import BallComplex, BallReal, DomainError, PrecisionCapExceeded
from .cones import THETA_INF, ConeParams, GridFunction, cone_contains, khat, theta_distance
from .measure import AtomicMeasure, gibbs_ratio_check, measure_atoms, wasserstein
from .rational import (JuliaSpace, JuliaSystem, RationalMap, distance_to_julia,
                       expansion_constants, geometric_potential, hausdorff_dimension,
                       julia_net, mobius_normalize, spherical_derivative)
from .systems import (CircleSpace, ConstantPotential, CosinePotential, DoublingMap,
                      FirstSymbolPotential, SubshiftOfFiniteType, SymbolicSpace, Word,
                      full_shift)
from .transfer import (CERTIFIED, EMPIRICAL, CertificationInfeasible, compute_constants,
                       eigendata, eigenfunction, pressure)

__version__ = "0.1.0"


def __getattr__(name):
    # sklearn is heavy; load the estimator on first use
    if name == "ThermodynamicEstimator":
        from .estimator import ThermodynamicEstimator
        return ThermodynamicEstimator
    raise AttributeError(name)
