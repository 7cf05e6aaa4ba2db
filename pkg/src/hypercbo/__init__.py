"""Consensus-based optimization on hypersurfaces given by signed distance functions."""
from ._accel import get_backend, set_backend
from .consensus import ConsensusPoint, consensus_point
from .dynamics import Ensemble, RunTrace, SimConfig, StopRule, em_step, manifold_defect_scaling, run
from .errors import CBOError
from .manifold import CustomManifold, Sphere, Torus, parse_manifold
from .objective import Objective, ackley, make_ackley, parse_objective
from .rng import KeyedRNG

__version__ = "0.1.0"

__all__ = [
    "CBOError", "ConsensusPoint", "CustomManifold", "Ensemble", "KeyedRNG", "Objective", "RunTrace",
    "SimConfig", "Sphere", "StopRule", "Torus", "ackley", "consensus_point", "em_step", "get_backend",
    "make_ackley", "manifold_defect_scaling", "parse_manifold", "parse_objective", "run", "set_backend",
]
