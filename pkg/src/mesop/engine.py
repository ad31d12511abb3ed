"""Fixed-timestep integration loop.

Each step: rebuild the spatial index at the interaction cutoff, accumulate
pair forces once per unordered pair (exact antisymmetry), add gravity and
the ambient per-particle drag, then advance free particles with
semi-implicit Euler (v first, then x).  Boundary particles are never
integrated.  Two runs from bit-identical states produce bit-identical
states at every step.

Stability guard: dt < 2*sqrt(m/K) for the stiffest active contact;
divergence (non-finite position/velocity) raises DivergenceError naming the
first offending particle, the usual sign that dt is too large for K.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .grid import NeighborIndex, PairSet
from .state import ForceAccumulator, SimState

__all__ = ["step", "run", "accumulate_forces", "total_momentum", "total_energy",
           "DivergenceError", "build_index"]


class DivergenceError(RuntimeError):
    """The state went non-finite; names the first offending particle."""

    def __init__(self, particle_index: int, step_count: int):
        self.particle_index = particle_index
        self.step_count = step_count
        super().__init__(
            f"non-finite state at particle {particle_index} after step {step_count}"
            " (dt too large for the stiffest K?)"
        )


def build_index(state: SimState) -> NeighborIndex | None:
    """Index at the state's interaction cutoff; None when nothing interacts."""
    cutoff = state.interaction_cutoff()
    if cutoff <= 0.0 or state.n_particles < 2:
        return None
    return NeighborIndex.build(state.positions, cutoff)


def accumulate_forces(
    state: SimState,
    index: NeighborIndex | None = None,
    parallel: bool = False,
) -> ForceAccumulator:
    """Pair forces + gravity + ambient drag, with contact statistics.

    The per-pair scalar evaluation may run in parallel; the reduction into
    per-particle forces is always the same fixed-order serial kernel, so
    parallel and serial results are bit-identical.
    """
    n, dim = state.n_particles, state.dim
    acc = ForceAccumulator.zeros(n, dim)
    cutoff = state.interaction_cutoff()
    if cutoff > 0.0 and n >= 2:
        if index is None:
            index = NeighborIndex.build(state.positions, cutoff)
        pairs = index.pairs_within(cutoff)
        acc.pair_count = len(pairs)
        if len(pairs):
            K, Z, De, Dv, D0 = state.pair_table()
            kernel = _kernels.pair_scalars_parallel if parallel else _kernels.pair_scalars_serial
            scalar, elastic, active, degenerate = kernel(
                pairs.i, pairs.j, pairs.distance, pairs.unit,
                state.velocities, state.material_ids, K, Z, De, Dv, D0,
            )
            forces, count, stress = _kernels.reduce_forces(
                pairs.i, pairs.j, scalar, elastic, active, pairs.unit, n,
            )
            acc.forces = forces
            acc.contact_count = count
            acc.contact_force_sum = stress
            acc.degenerate_pairs = int(degenerate.sum())
    _kernels.add_body_forces(
        acc.forces, state.velocities, state.masses, state.free_mask,
        state.gravity, state.ambient_viscosity,
    )
    return acc


def step(state: SimState, parallel: bool = False) -> SimState:
    """Advance the state by one dt in place and return it."""
    acc = accumulate_forces(state, parallel=parallel)
    _kernels.integrate(
        state.positions, state.velocities, acc.forces, state.masses,
        state.free_mask, state.dt,
    )
    state.degenerate_pair_events += acc.degenerate_pairs
    state.time += state.dt
    state.step_count += 1
    bad = _kernels.finite_check(state.positions, state.velocities)
    if bad >= 0:
        raise DivergenceError(int(bad), state.step_count)
    return state


def run(state: SimState, steps: int, parallel: bool = False, on_step=None) -> SimState:
    for _ in range(steps):
        step(state, parallel=parallel)
        if on_step is not None:
            on_step(state)
    return state


def total_momentum(state: SimState) -> np.ndarray:
    """Sum of m*v over free particles."""
    free = state.free_mask
    return (state.masses[free, None] * state.velocities[free]).sum(axis=0)


def total_energy(state: SimState, index: NeighborIndex | None = None) -> float:
    """Kinetic plus elastic pair potential.

    The pair potential is 1/2 K (D - D0)^2 clamped to the active elastic
    segment (0, De], zero outside; viscous terms store no energy.  Note for
    adhesive laws (D0 < De) the clamped potential is discontinuous at De,
    so the accounted total steps when pairs cross the threshold; contact
    laws with D0 == De (all shipped presets) are continuous.
    """
    free = state.free_mask
    kinetic = 0.5 * float(
        (state.masses[free] * (state.velocities[free] ** 2).sum(axis=1)).sum()
    )
    cutoff = state.interaction_cutoff()
    if cutoff <= 0.0 or state.n_particles < 2:
        return kinetic
    if index is None:
        index = NeighborIndex.build(state.positions, cutoff)
    pairs: PairSet = index.pairs_within(cutoff)
    if not len(pairs):
        return kinetic
    K, Z, De, Dv, D0 = state.pair_table()
    potential = _kernels.elastic_pair_potential(
        pairs.distance, pairs.i, pairs.j, state.material_ids, K, De, D0,
    )
    return kinetic + float(potential)
