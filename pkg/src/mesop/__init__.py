"""mesop: thresholded visco-elastic particle simulation.

One pair law (elasticity K, viscosity Z, thresholds De/Dv, rest length D0)
produces gas, granular, fluid, paste and solid behavior depending on its
parameterization.  The package ships the engine, a set of named experiment
presets, regime classifiers, batch sweeps and a live-steering stream server.
"""

__version__ = "0.1.0"

from .engine import (
    DivergenceError,
    accumulate_forces,
    run,
    step,
    total_energy,
    total_momentum,
)
from .grid import NeighborIndex, brute_force_pairs
from .laws import (
    CollisionRule,
    LennardJonesLaw,
    MaterialLaw,
    PiecewiseLaw,
    Segment,
    elastic_force,
    linearize_lj,
    lj_force,
    pair_force,
    restitution_collide,
    viscous_force,
)
from .state import BOUNDARY, FREE, ForceAccumulator, Particle, SimState

__all__ = [
    "__version__",
    "MaterialLaw", "PiecewiseLaw", "Segment", "LennardJonesLaw", "CollisionRule",
    "elastic_force", "viscous_force", "pair_force", "lj_force", "linearize_lj",
    "restitution_collide",
    "Particle", "SimState", "ForceAccumulator", "FREE", "BOUNDARY",
    "NeighborIndex", "brute_force_pairs",
    "step", "run", "accumulate_forces", "total_momentum", "total_energy",
    "DivergenceError",
    "preset", "Scenario", "ScenarioRun",
]

from .scenarios import Scenario, ScenarioRun, preset  # noqa: E402
