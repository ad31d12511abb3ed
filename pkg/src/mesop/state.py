"""Simulation state: particles, material table, pair rules.

State is stored struct-of-arrays (float64 positions/velocities) for the
numba kernels; ``Particle`` is the record-shaped view used for construction
and inspection.  Particle order is stable across steps and is the anchor
for all determinism guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .laws import MaterialLaw

FREE = 0
BOUNDARY = 1

#: broad wire-tweakable ranges per law field (min, max)
TWEAK_RANGES = {
    "K": (0.0, 1e6),
    "Z": (0.0, 1e6),
    "De": (1e-3, 1e3),
    "Dv": (1e-3, 1e3),
    "D0": (0.0, 1e3),
}


@dataclass
class Particle:
    """One meso-parcel of matter."""

    position: tuple
    velocity: tuple
    mass: float = 1.0
    material_id: int = 0
    kind: int = FREE

    def __post_init__(self):
        if self.kind == FREE and not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError(f"free particle mass must be positive and finite, got {self.mass}")
        if self.kind == BOUNDARY and any(v != 0.0 for v in self.velocity):
            raise ValueError("boundary particles must have zero velocity")


class SimState:
    """Owns the particle arrays, the material table and the pair rules.

    materials:  insertion-ordered name -> MaterialLaw; a particle's
                material_id is the index of its name in this table.
    pair_rules: (name, name) -> law; the value may be a material name
                (resolved against the live table, so editing a material
                edits every rule that references it) or an inline
                MaterialLaw.  Rules are symmetric; absent pairs are inert.
    """

    def __init__(
        self,
        dim: int,
        positions: np.ndarray,
        velocities: np.ndarray,
        masses: np.ndarray,
        material_ids: np.ndarray,
        kinds: np.ndarray,
        materials: dict[str, MaterialLaw],
        pair_rules: dict[tuple[str, str], "MaterialLaw | str"],
        gravity: np.ndarray,
        ambient_viscosity: float = 0.0,
        dt: float = 1.0 / 1050.0,
        rng_seed: int = 0,
    ):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        if dt <= 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        if ambient_viscosity < 0:
            raise ValueError(f"ambient_viscosity must be >= 0, got {ambient_viscosity}")
        n = len(positions)
        self.dim = dim
        self.positions = np.array(positions, dtype=np.float64).reshape(n, dim)
        self.velocities = np.array(velocities, dtype=np.float64).reshape(n, dim)
        self.masses = np.array(masses, dtype=np.float64).reshape(n)
        self.material_ids = np.array(material_ids, dtype=np.int32).reshape(n)
        self.kinds = np.array(kinds, dtype=np.uint8).reshape(n)
        self.materials = dict(materials)
        self.pair_rules = {_sym(k): v for k, v in pair_rules.items()}
        self.gravity = np.array(gravity, dtype=np.float64).reshape(dim)
        self.ambient_viscosity = float(ambient_viscosity)
        self.dt = float(dt)
        self.rng_seed = int(rng_seed)
        self.time = 0.0
        self.step_count = 0
        self.degenerate_pair_events = 0
        self.version = 0  # bumped on material/rule edits; invalidates caches
        self._table_cache = None
        self._cutoff_cache = None
        self._validate()

    # -- construction ---------------------------------------------------

    @classmethod
    def from_particles(
        cls,
        particles: list[Particle],
        dim: int,
        materials: dict[str, MaterialLaw],
        pair_rules: dict[tuple[str, str], "MaterialLaw | str"] | None = None,
        gravity=None,
        ambient_viscosity: float = 0.0,
        dt: float = 1.0 / 1050.0,
        rng_seed: int = 0,
    ) -> "SimState":
        n = len(particles)
        pos = np.zeros((n, dim))
        vel = np.zeros((n, dim))
        mass = np.ones(n)
        mat = np.zeros(n, dtype=np.int32)
        kind = np.zeros(n, dtype=np.uint8)
        for i, p in enumerate(particles):
            pos[i] = p.position
            vel[i] = p.velocity
            mass[i] = p.mass
            mat[i] = p.material_id
            kind[i] = p.kind
        if gravity is None:
            gravity = np.zeros(dim)
        return cls(
            dim, pos, vel, mass, mat, kind, materials, pair_rules or {},
            gravity, ambient_viscosity, dt, rng_seed,
        )

    def _validate(self):
        free = self.kinds == FREE
        if np.any(self.masses[free] <= 0) or not np.all(np.isfinite(self.masses[free])):
            raise ValueError("free particle masses must be positive and finite")
        if np.any(self.velocities[~free] != 0.0):
            raise ValueError("boundary particles must have zero velocity")
        names = self.material_names
        for a, b in self.pair_rules:
            if a not in self.materials or b not in self.materials:
                raise ValueError(f"pair rule ({a}, {b}) references unknown material")
        if len(self.material_ids) and len(names) and (
                self.material_ids.min() < 0 or self.material_ids.max() >= len(names)):
            raise ValueError("material_id out of range of the material table")

    # -- material plumbing ----------------------------------------------

    @property
    def material_names(self) -> list[str]:
        return list(self.materials.keys())

    def material_index(self, name: str) -> int:
        return self.material_names.index(name)

    def set_material(self, name: str, law: MaterialLaw):
        """Replace a material's law; the canonical mutation path (keeps the
        kernel-table caches coherent)."""
        if name not in self.materials:
            raise KeyError(f"unknown material {name!r}")
        self.materials[name] = law
        self.version += 1
        self._table_cache = None
        self._cutoff_cache = None

    def rule_law(self, a: str, b: str) -> MaterialLaw | None:
        """Resolved law for an unordered material pair, or None if inert."""
        entry = self.pair_rules.get(_sym((a, b)))
        if entry is None:
            return None
        if isinstance(entry, str):
            return self.materials[entry]
        return entry

    def resolved_rules(self) -> dict[tuple[str, str], MaterialLaw]:
        return {k: self.rule_law(*k) for k in self.pair_rules}

    def interaction_cutoff(self) -> float:
        """Largest active threshold over all resolved pair rules."""
        if self._cutoff_cache is None:
            radius = 0.0
            for law in self.resolved_rules().values():
                radius = max(radius, law.cutoff)
            self._cutoff_cache = radius
        return self._cutoff_cache

    def pair_table(self) -> tuple[np.ndarray, ...]:
        """Dense (m, m) parameter arrays for the kernels.

        Undefined pairs get zero K and Z (inert); thresholds stay positive
        placeholders so the kernel's range checks remain well-formed.
        """
        if self._table_cache is not None:
            return self._table_cache
        names = self.material_names
        m = max(len(names), 1)
        K = np.zeros((m, m))
        Z = np.zeros((m, m))
        De = np.full((m, m), 1.0)
        Dv = np.full((m, m), 1.0)
        D0 = np.zeros((m, m))
        for (a, b), law in self.resolved_rules().items():
            ia, ib = names.index(a), names.index(b)
            for i, j in ((ia, ib), (ib, ia)):
                K[i, j] = law.K
                Z[i, j] = law.Z
                De[i, j] = law.De
                Dv[i, j] = law.Dv
                D0[i, j] = law.D0
        self._table_cache = (K, Z, De, Dv, D0)
        return self._table_cache

    # -- views and copies -------------------------------------------------

    @property
    def n_particles(self) -> int:
        return len(self.masses)

    @property
    def free_mask(self) -> np.ndarray:
        # kinds are fixed per particle; cache until the arrays grow
        cached = getattr(self, "_free_mask", None)
        if cached is None or len(cached) != len(self.kinds):
            cached = self.kinds == FREE
            self._free_mask = cached
        return cached

    def particles(self) -> list[Particle]:
        return [
            Particle(
                tuple(self.positions[i]),
                tuple(self.velocities[i]),
                float(self.masses[i]),
                int(self.material_ids[i]),
                int(self.kinds[i]),
            )
            for i in range(self.n_particles)
        ]

    def append_particles(self, positions, velocities, masses, material_ids, kinds):
        """Append new rows at the end; existing indices are preserved."""
        k = len(positions)
        if k == 0:
            return
        self.positions = np.concatenate([self.positions, np.asarray(positions, dtype=np.float64).reshape(k, self.dim)])
        self.velocities = np.concatenate([self.velocities, np.asarray(velocities, dtype=np.float64).reshape(k, self.dim)])
        self.masses = np.concatenate([self.masses, np.asarray(masses, dtype=np.float64).reshape(k)])
        self.material_ids = np.concatenate([self.material_ids, np.asarray(material_ids, dtype=np.int32).reshape(k)])
        self.kinds = np.concatenate([self.kinds, np.asarray(kinds, dtype=np.uint8).reshape(k)])

    def copy(self) -> "SimState":
        dup = SimState(
            self.dim,
            self.positions.copy(),
            self.velocities.copy(),
            self.masses.copy(),
            self.material_ids.copy(),
            self.kinds.copy(),
            dict(self.materials),
            dict(self.pair_rules),
            self.gravity.copy(),
            self.ambient_viscosity,
            self.dt,
            self.rng_seed,
        )
        dup.time = self.time
        dup.step_count = self.step_count
        dup.degenerate_pair_events = self.degenerate_pair_events
        return dup

    def arrays_equal(self, other: "SimState") -> bool:
        """Bit-for-bit equality of the particle arrays."""
        return (
            self.positions.tobytes() == other.positions.tobytes()
            and self.velocities.tobytes() == other.velocities.tobytes()
            and self.masses.tobytes() == other.masses.tobytes()
            and self.material_ids.tobytes() == other.material_ids.tobytes()
            and self.kinds.tobytes() == other.kinds.tobytes()
        )


@dataclass
class ForceAccumulator:
    """Per-particle force vectors plus the contact statistics gathered in
    the same pass (count of active elastic contacts, sum of |elastic force|)."""

    forces: np.ndarray
    contact_count: np.ndarray
    contact_force_sum: np.ndarray
    degenerate_pairs: int = 0
    pair_count: int = 0

    @classmethod
    def zeros(cls, n: int, dim: int) -> "ForceAccumulator":
        return cls(
            forces=np.zeros((n, dim)),
            contact_count=np.zeros(n, dtype=np.int64),
            contact_force_sum=np.zeros(n),
        )


def _sym(key: tuple[str, str]) -> tuple[str, str]:
    a, b = key
    return (a, b) if a <= b else (b, a)
