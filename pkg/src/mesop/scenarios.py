"""Experiment setups: interaction presets IP1-IP5, emitters, boundaries and
the named scenario presets.

Preset numeric values are repo-calibrated constants (the source experiments
publish qualitative maps, not numbers); the pilot-run log behind each frozen
value lives in docs/calibration.md.  All presets default to dim=2 and are
also instantiable at dim=3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import engine
from .laws import MaterialLaw
from .state import BOUNDARY, FREE, Particle, SimState

IP_TAGS = ("IP1", "IP2", "IP3", "IP4", "IP5")


@dataclass(frozen=True)
class InteractionPreset:
    """One of the five parameterizations of the single law.

    IP1 pure elastic (Z=0); IP2 pure viscous (K=0); IP3 equal thresholds;
    IP4 elastic reach dominant (De > Dv); IP5 viscous reach dominant
    (Dv > De).
    """

    tag: str

    def __post_init__(self):
        if self.tag not in IP_TAGS:
            raise ValueError(f"unknown interaction preset tag {self.tag!r}")

    def validate(self, law: MaterialLaw) -> MaterialLaw:
        tag = self.tag
        ok = {
            "IP1": law.Z == 0 and law.K > 0,
            "IP2": law.K == 0 and law.Z > 0,
            "IP3": law.K > 0 and law.Z > 0 and law.De == law.Dv,
            "IP4": law.K > 0 and law.Z > 0 and law.De > law.Dv,
            "IP5": law.K > 0 and law.Z > 0 and law.Dv > law.De,
        }[tag]
        if not ok:
            raise ValueError(f"law {law} violates the {tag} constraint")
        return law


@dataclass
class Emitter:
    """Deterministic particle jet.

    Spawn debt accumulates rate*dt per step and floor(debt) particles are
    emitted; positions and velocities are jittered from (jitter_seed,
    spawn_index) so runs replay exactly regardless of history.
    """

    origin: tuple
    direction: tuple
    speed: float
    rate: float
    material: str
    jitter_seed: int = 0
    width: float = 1.0          # spawn band transverse to the jet
    velocity_jitter: float = 0.0
    max_count: int = 0          # 0 = unlimited

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"rate must be >= 0, got {self.rate}")
        d = np.asarray(self.direction, dtype=float)
        norm = float(np.linalg.norm(d))
        if norm == 0:
            raise ValueError("direction must be nonzero")
        self.direction = tuple(d / norm)

    def spawn_batch(self, count: int, first_index: int, dim: int):
        """(positions, velocities) for `count` spawns starting at spawn
        index `first_index`."""
        direction = np.asarray(self.direction, dtype=float)
        origin = np.asarray(self.origin, dtype=float)
        # transverse frame
        if dim == 2:
            perps = [np.array([-direction[1], direction[0]])]
        else:
            helper = np.array([0.0, 0.0, 1.0])
            if abs(direction[2]) > 0.9:
                helper = np.array([1.0, 0.0, 0.0])
            p1 = np.cross(direction, helper)
            p1 /= np.linalg.norm(p1)
            perps = [p1, np.cross(direction, p1)]
        positions = np.empty((count, dim))
        velocities = np.empty((count, dim))
        for k in range(count):
            rng = np.random.default_rng([self.jitter_seed, first_index + k])
            pos = origin.copy()
            for p in perps:
                pos += p * rng.uniform(-0.5, 0.5) * self.width
            pos += direction * rng.uniform(0.0, 0.2)
            vel = direction * self.speed
            if self.velocity_jitter > 0:
                for p in perps:
                    vel = vel + p * rng.normal(0.0, self.velocity_jitter)
            positions[k] = pos
            velocities[k] = vel
        return positions, velocities


@dataclass
class AnalysisHints:
    """Per-scenario inputs the regime metrics need."""

    ground_height: float | None = None
    flow_axis: int | None = None
    contact_radius: float | None = None


@dataclass
class Scenario:
    name: str
    dim: int
    particles: list[Particle]
    materials: dict[str, MaterialLaw]
    pair_rules: dict[tuple[str, str], "MaterialLaw | str"]
    emitters: list[Emitter] = field(default_factory=list)
    gravity: tuple = (0.0, 0.0)
    ambient_viscosity: float = 0.0
    dt: float = 1.0 / 1050.0
    duration: int = 10_000
    rng_seed: int = 0
    analysis: AnalysisHints = field(default_factory=AnalysisHints)

    def __post_init__(self):
        names = list(self.materials.keys())
        for p in self.particles:
            if not 0 <= p.material_id < len(names):
                raise ValueError(f"particle references material id {p.material_id} outside table")
        for e in self.emitters:
            if e.material not in self.materials:
                raise ValueError(f"emitter references unknown material {e.material!r}")

    def to_state(self) -> SimState:
        return SimState.from_particles(
            self.particles, self.dim, dict(self.materials), dict(self.pair_rules),
            gravity=np.asarray(self.gravity, dtype=float),
            ambient_viscosity=self.ambient_viscosity,
            dt=self.dt, rng_seed=self.rng_seed,
        )


class ScenarioRun:
    """Owns a live state plus the emitters' spawn debts; the per-step driver
    used by the CLI, the sweep runner and the stream server."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.reset()

    def reset(self):
        self.state = self.scenario.to_state()
        self._debts = [0.0] * len(self.scenario.emitters)
        self._spawned = [0] * len(self.scenario.emitters)

    def step(self, parallel: bool = False) -> SimState:
        for k, emitter in enumerate(self.scenario.emitters):
            self._debts[k] = spawn(emitter, self.state, self._debts[k], self._spawned, k)
        return engine.step(self.state, parallel=parallel)

    def run(self, steps: int, parallel: bool = False, on_step=None) -> SimState:
        for _ in range(steps):
            self.step(parallel=parallel)
            if on_step is not None:
                on_step(self.state)
        return self.state


def spawn(emitter: Emitter, state: SimState, debt: float, spawned: list[int], k: int) -> float:
    """Accumulate one step of spawn debt and append floor(debt) particles."""
    if emitter.max_count and spawned[k] >= emitter.max_count:
        return debt
    debt += emitter.rate * state.dt
    count = int(math.floor(debt))
    if emitter.max_count:
        count = min(count, emitter.max_count - spawned[k])
    if count > 0:
        debt -= count
        positions, velocities = emitter.spawn_batch(count, spawned[k], state.dim)
        spawned[k] += count
        mat = state.material_index(emitter.material)
        state.append_particles(
            positions, velocities, np.ones(count),
            np.full(count, mat, dtype=np.int32),
            np.full(count, FREE, dtype=np.uint8),
        )
    return debt


# ---------------------------------------------------------------------------
# boundary builders

def ground_row(x_min: float, x_max: float, spacing: float, height: float,
               material_id: int) -> list[Particle]:
    """2D ground: one row of fixed particles."""
    count = max(2, int(round((x_max - x_min) / spacing)) + 1)
    xs = np.linspace(x_min, x_max, count)
    return [Particle((float(x), height), (0.0, 0.0), math.inf, material_id, BOUNDARY)
            for x in xs]


def ground_plane(x_min, x_max, z_min, z_max, spacing, height, material_id) -> list[Particle]:
    """3D ground: a grid of fixed particles in the y = height plane."""
    nx = max(2, int(round((x_max - x_min) / spacing)) + 1)
    nz = max(2, int(round((z_max - z_min) / spacing)) + 1)
    out = []
    for x in np.linspace(x_min, x_max, nx):
        for z in np.linspace(z_min, z_max, nz):
            out.append(Particle((float(x), height, float(z)), (0.0, 0.0, 0.0),
                                math.inf, material_id, BOUNDARY))
    return out


def wall_column(y_min: float, y_max: float, spacing: float, x: float,
                material_id: int) -> list[Particle]:
    count = max(2, int(round((y_max - y_min) / spacing)) + 1)
    ys = np.linspace(y_min, y_max, count)
    return [Particle((x, float(y)), (0.0, 0.0), math.inf, material_id, BOUNDARY)
            for y in ys]


def disc_obstacle(center: tuple, radius: float, spacing: float,
                  material_id: int) -> list[Particle]:
    """Filled disc of boundary particles (concentric rings)."""
    out = [Particle(tuple(center), (0.0,) * len(center), math.inf, material_id, BOUNDARY)]
    r = spacing
    while r <= radius + 1e-9:
        count = max(6, int(round(2 * math.pi * r / spacing)))
        for t in range(count):
            angle = 2 * math.pi * t / count
            out.append(Particle(
                (center[0] + r * math.cos(angle), center[1] + r * math.sin(angle)),
                (0.0, 0.0), math.inf, material_id, BOUNDARY))
        r += spacing
    return out


def block(x0, y0, nx, ny, spacing, material_id, stagger=0.0, z0=None, nz=1) -> list[Particle]:
    """Lattice of free particles; optional row stagger breaks symmetry."""
    out = []
    for iy in range(ny):
        off = stagger * spacing if iy % 2 == 1 else 0.0
        for ix in range(nx):
            if z0 is None:
                out.append(Particle((x0 + ix * spacing + off, y0 + iy * spacing),
                                    (0.0, 0.0), 1.0, material_id, FREE))
            else:
                for iz in range(nz):
                    out.append(Particle(
                        (x0 + ix * spacing + off, y0 + iy * spacing, z0 + iz * spacing),
                        (0.0, 0.0, 0.0), 1.0, material_id, FREE))
    return out


# ---------------------------------------------------------------------------
# named presets (constants frozen from the calibration log)

def _gas_jets(dim: int = 2) -> Scenario:
    law = InteractionPreset("IP1").validate(
        MaterialLaw(K=400.0, Z=0.0, De=0.6, Dv=0.6, D0=0.6))
    per_jet = 150 if dim == 2 else 500
    emitters = [
        Emitter((-9.0, 0.0) if dim == 2 else (-9.0, 0.0, 0.0),
                (1.0, 0.0) if dim == 2 else (1.0, 0.0, 0.0),
                speed=6.0, rate=40.0, material="gas", jitter_seed=11, width=1.2,
                max_count=per_jet),
        Emitter((9.0, 0.35) if dim == 2 else (9.0, 0.35, 0.0),
                (-1.0, 0.0) if dim == 2 else (-1.0, 0.0, 0.0),
                speed=6.0, rate=40.0, material="gas", jitter_seed=12, width=1.2,
                max_count=per_jet),
    ]
    return Scenario(
        name="gas_jets", dim=dim, particles=[],
        materials={"gas": law}, pair_rules={("gas", "gas"): "gas"},
        emitters=emitters, gravity=(0.0,) * dim, ambient_viscosity=0.0,
        dt=0.004, duration=10_000, rng_seed=101,
        analysis=AnalysisHints(ground_height=None, contact_radius=0.6),
    )


def _tray(dim: int, half_width: float, wall_height: float, spacing: float = 0.4):
    """Wide ground with low end walls: keeps stray sliders on the record
    without touching the heap that forms in the middle."""
    ground_law = MaterialLaw(K=4000.0, Z=0.0, De=0.5, Dv=0.5, D0=0.5)
    if dim == 2:
        parts = ground_row(-half_width, half_width, spacing, 0.0, 1)
        parts += wall_column(spacing, wall_height, spacing, -half_width, 1)
        parts += wall_column(spacing, wall_height, spacing, half_width, 1)
    else:
        parts = ground_plane(-half_width, half_width, -half_width, half_width,
                             spacing * 2, 0.0, 1)
    return parts, ground_law


def _rain(dim: int, material: str, rate_2d: float, count_2d: int,
          y0: float = 8.0, width: float = 3.0):
    if dim == 2:
        return [Emitter((0.0, y0), (0.0, -1.0), speed=1.5, rate=rate_2d,
                        material=material, jitter_seed=21, width=width,
                        velocity_jitter=0.08, max_count=count_2d)]
    return [Emitter((0.0, y0, 0.0), (0.0, -1.0, 0.0), speed=1.5, rate=rate_2d * 3,
                    material=material, jitter_seed=21, width=width,
                    velocity_jitter=0.08, max_count=count_2d * 3)]


def _granular_pile(dim: int = 2) -> Scenario:
    grain = InteractionPreset("IP1").validate(
        MaterialLaw(K=1000.0, Z=0.0, De=1.0, Dv=1.0, D0=1.0))
    spacing = 0.4  # <= 0.5 * De_grain, asserted by the preset contract
    boundary, ground_law = _tray(dim, 24.0, 2.5, spacing)
    gravity = (0.0, -10.0) if dim == 2 else (0.0, -10.0, 0.0)
    # grain-ground contact is IP1 as well, at the (coarser) ground scale;
    # the heavy drag gives quasi-static deposition, so the heap arrests as
    # a near-straight wedge instead of fluidizing on impact
    sc = Scenario(
        name="granular_pile", dim=dim, particles=boundary,
        materials={"grain": grain, "ground": ground_law},
        pair_rules={("grain", "grain"): "grain", ("grain", "ground"): ground_law},
        emitters=_rain(dim, "grain", 40.0, 300, y0=6.0, width=6.5),
        gravity=gravity, ambient_viscosity=25.0,
        dt=0.003, duration=10_000, rng_seed=102,
        analysis=AnalysisHints(ground_height=0.0, contact_radius=1.0),
    )
    assert spacing <= 0.5 * grain.De
    assert grain.Z == 0.0  # no grain-grain dissipation; only ambient drag
    return sc


def _dry_to_moist(dim: int = 2, k_scale: float = 1.0, z_scale: float = 1.0) -> Scenario:
    """Family between dry piling and amorphous pasty heaps: lower K, raise Z."""
    base = _granular_pile(dim)
    k = 1000.0 * k_scale
    z = 4.0 * z_scale
    law = MaterialLaw(K=k, Z=z, De=1.0, Dv=1.0, D0=1.0)
    base.name = "dry_to_moist"
    base.materials["grain"] = law
    return base


def _pour(dim: int, material_name: str, law: MaterialLaw, name: str,
          rng_seed: int, ambient: float = 1.0) -> Scenario:
    """Material rains into a wide low-walled tray; what it relaxes into
    depends on the law.  Nothing leaves the measurement plane, so the
    classifier's ooze flux is zero by construction here."""
    boundary, ground_law = _tray(dim, 30.0, 3.0)
    gravity = (0.0, -10.0) if dim == 2 else (0.0, -10.0, 0.0)
    return Scenario(
        name=name, dim=dim, particles=boundary,
        materials={material_name: law, "ground": ground_law},
        pair_rules={(material_name, material_name): material_name,
                    (material_name, "ground"): ground_law},
        emitters=_rain(dim, material_name, 40.0, 300),
        gravity=gravity, ambient_viscosity=ambient,
        dt=0.003, duration=10_000, rng_seed=rng_seed,
        analysis=AnalysisHints(ground_height=0.0, contact_radius=law.De),
    )


def pedestal_pour(
    dim: int,
    tag: str,
    K: float,
    Z: float,
    R_s: float,
    ambient: float = 2.0,
    rate: float = 20.0,
    count: int = 300,
    duration: int = 25_000,
    rng_seed: int = 108,
    name: str = "pedestal_pour",
) -> Scenario:
    """Repose-bench geometry: a two-size grain mix rains onto a raised
    pedestal; excess drains into a catch basin below the measurement plane.

    The size mix (0.8/1.2 with a 1.0 cross rule) frustrates crystallization
    so stiff heaps arrest in a static cone instead of creeping flat; soft
    material drains to a film and high-R_s material keeps oozing off the
    edge.  This is the base of the behavior-map sweeps.  The grouped
    parameter path "materials.g1+g2+g12.K" (or .Z/.R_s) scales the whole
    mix at once.
    """
    if dim != 2:
        raise ValueError("pedestal_pour is 2D (repose bench)")
    InteractionPreset(tag)  # validated per-law below
    d1, d2 = 0.8, 1.2
    dm = 0.5 * (d1 + d2)
    laws = {}
    for nm, d in (("g1", d1), ("g2", d2), ("g12", dm)):
        laws[nm] = InteractionPreset(tag).validate(
            MaterialLaw(K=K, Z=Z, De=d, Dv=R_s * d, D0=d))
    ground_law = MaterialLaw(K=4000.0, Z=40.0, De=0.5, Dv=0.5, D0=0.5)
    parts = ground_row(-8.0, 8.0, 0.4, 0.0, 3)        # pedestal top
    parts += ground_row(-40.0, 40.0, 0.4, -10.0, 3)   # catch basin
    parts += wall_column(-9.6, -2.0, 0.4, -40.0, 3)
    parts += wall_column(-9.6, -2.0, 0.4, 40.0, 3)
    emitters = [
        Emitter((-0.4, 8.0), (0.0, -1.0), speed=1.0, rate=rate / 2,
                material="g1", jitter_seed=21, width=2.0,
                velocity_jitter=0.08, max_count=count // 2),
        Emitter((0.4, 8.0), (0.0, -1.0), speed=1.0, rate=rate / 2,
                material="g2", jitter_seed=22, width=2.0,
                velocity_jitter=0.08, max_count=count - count // 2),
    ]
    return Scenario(
        name=name, dim=dim, particles=parts,
        materials={**laws, "ground": ground_law},
        pair_rules={("g1", "g1"): "g1", ("g2", "g2"): "g2",
                    ("g1", "g2"): "g12",
                    ("g1", "ground"): ground_law, ("g2", "ground"): ground_law},
        emitters=emitters, gravity=(0.0, -10.0), ambient_viscosity=ambient,
        dt=0.003, duration=duration, rng_seed=rng_seed,
        analysis=AnalysisHints(ground_height=0.0, contact_radius=1.2),
    )


def _fluid_spread(dim: int = 2) -> Scenario:
    fluid = InteractionPreset("IP3").validate(
        MaterialLaw(K=60.0, Z=10.0, De=1.0, Dv=1.0, D0=1.0))
    return _pour(dim, "fluid", fluid, "fluid_spread", 103)


def _granular_from_ip3(dim: int = 2) -> Scenario:
    if dim != 2:
        return _pour(dim, "grain", InteractionPreset("IP3").validate(
            MaterialLaw(K=1300.0, Z=10.0, De=1.0, Dv=1.0, D0=1.0)),
            "granular_from_IP3", 107)
    return pedestal_pour(dim, "IP3", K=1300.0, Z=10.0, R_s=1.0,
                         name="granular_from_IP3", rng_seed=107)


def _paste_ooze(dim: int = 2) -> Scenario:
    if dim != 2:
        paste = InteractionPreset("IP5").validate(
            MaterialLaw(K=1000.0, Z=10.0, De=1.0, Dv=4.0, D0=1.0))
        return _pour(dim, "paste", paste, "paste_ooze", 104)
    sc = pedestal_pour(dim, "IP5", K=1000.0, Z=10.0, R_s=4.0,
                       name="paste_ooze", rng_seed=104, duration=10_000)
    for nm in ("g1", "g2", "g12"):
        assert sc.materials[nm].threshold_ratio == 4.0
    return sc


def _kelvin_helmholtz(dim: int = 2) -> Scenario:
    fluid = InteractionPreset("IP2").validate(
        MaterialLaw(K=0.0, Z=8.0, De=1.5, Dv=1.5, D0=1.5))
    # two long opposed lanes in viscous contact at y ~ 0; the early
    # transverse RMS is seed noise, the mixing layer then rolls up.  Lanes
    # are long so the shear interface outlives the whole observation window
    particles = []
    if dim == 2:
        top = block(-120.0, 0.35, 300, 3, 0.8, 0, stagger=0.5)
        bottom = block(-120.0, -2.8, 300, 3, 0.8, 0, stagger=0.5)
        particles = top + bottom
        for idx, p in enumerate(particles):
            vx = 5.0 if p.position[1] > -0.2 else -5.0
            jit = np.random.default_rng([301, idx]).normal(0.0, 0.01)
            p.velocity = (vx, float(jit))
        emitters = [
            Emitter((-120.5, 1.5), (1.0, 0.0), speed=5.0, rate=8.0,
                    material="fluid", jitter_seed=31, width=1.8, velocity_jitter=0.01),
            Emitter((120.5, -1.5), (-1.0, 0.0), speed=5.0, rate=8.0,
                    material="fluid", jitter_seed=32, width=1.8, velocity_jitter=0.01),
        ]
        gravity = (0.0, 0.0)
    else:
        top = block(-60.0, 0.35, 150, 3, 0.8, 0, stagger=0.5, z0=-2.0, nz=5)
        bottom = block(-60.0, -2.8, 150, 3, 0.8, 0, stagger=0.5, z0=-2.0, nz=5)
        particles = top + bottom
        for idx, p in enumerate(particles):
            vx = 5.0 if p.position[1] > -0.2 else -5.0
            jit = np.random.default_rng([301, idx]).normal(0.0, 0.01, size=2)
            p.velocity = (vx, float(jit[0]), float(jit[1]))
        emitters = [
            Emitter((-60.5, 1.5, 0.0), (1.0, 0.0, 0.0), speed=5.0, rate=20.0,
                    material="fluid", jitter_seed=31, width=1.8, velocity_jitter=0.01),
            Emitter((60.5, -1.5, 0.0), (-1.0, 0.0, 0.0), speed=5.0, rate=20.0,
                    material="fluid", jitter_seed=32, width=1.8, velocity_jitter=0.01),
        ]
        gravity = (0.0, 0.0, 0.0)
    return Scenario(
        name="kelvin_helmholtz", dim=dim, particles=particles,
        materials={"fluid": fluid}, pair_rules={("fluid", "fluid"): "fluid"},
        emitters=emitters, gravity=gravity, ambient_viscosity=0.0,
        dt=0.004, duration=6_000, rng_seed=105,
        analysis=AnalysisHints(flow_axis=0, contact_radius=1.5),
    )


def _von_karman(dim: int = 2) -> Scenario:
    # pressure via a wide soft elastic halo, viscosity confined: De > Dv
    fluid = InteractionPreset("IP4").validate(
        MaterialLaw(K=25.0, Z=10.0, De=2.0, Dv=0.9, D0=2.0))
    obstacle_law = MaterialLaw(K=300.0, Z=0.0, De=0.8, Dv=0.8, D0=0.8)
    if dim != 2:
        raise ValueError("von_karman preset is 2D (obstacle disc)")
    obstacle = disc_obstacle((0.0, 0.0), 1.6, 0.45, 1)
    emitters = [
        Emitter((-14.0, 0.0), (1.0, 0.0), speed=6.0, rate=40.0,
                material="fluid", jitter_seed=41, width=6.0, velocity_jitter=0.05),
    ]
    return Scenario(
        name="von_karman", dim=dim, particles=obstacle,
        materials={"fluid": fluid, "obstacle": obstacle_law},
        pair_rules={("fluid", "fluid"): "fluid", ("fluid", "obstacle"): obstacle_law},
        emitters=emitters, gravity=(0.0, 0.0), ambient_viscosity=0.0,
        dt=0.004, duration=10_000, rng_seed=106,
        analysis=AnalysisHints(flow_axis=0, contact_radius=2.0),
    )


def _repose_bench(dim: int = 2, K: float = 1000.0, Z: float = 10.0,
                  R_s: float = 1.0) -> Scenario:
    """The sweep base: IP3 grains on the repose bench at medium viscosity."""
    tag = "IP3" if R_s == 1.0 else "IP5"
    return pedestal_pour(dim, tag, K=K, Z=Z, R_s=R_s, name="repose_bench",
                         rng_seed=108)


PRESETS = {
    "gas_jets": _gas_jets,
    "granular_pile": _granular_pile,
    "dry_to_moist": _dry_to_moist,
    "kelvin_helmholtz": _kelvin_helmholtz,
    "von_karman": _von_karman,
    "fluid_spread": _fluid_spread,
    "granular_from_IP3": _granular_from_ip3,
    "paste_ooze": _paste_ooze,
    "repose_bench": _repose_bench,
}


def preset(name: str, dim: int = 2, **kwargs) -> Scenario:
    """Named deterministic scenario; family presets take keyword scales
    (dry_to_moist: k_scale, z_scale)."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
    return factory(dim=dim, **kwargs)


def apply_param(scenario: Scenario, path: str, value: float) -> None:
    """Resolve a parameter path and set it on the scenario in place.

    Paths: materials.<name>.<K|Z|De|Dv|D0>, materials.<name>.R_s (scales Dv
    at fixed De), gravity.<x|y|z>, ambient_viscosity, dt.
    """
    parts = path.split(".")
    if parts[0] == "materials" and len(parts) == 3:
        names, fieldname = parts[1].split("+"), parts[2]
        for name in names:
            if name not in scenario.materials:
                raise KeyError(f"unknown material {name!r} in path {path!r}")
        for name in names:
            law = scenario.materials[name]
            if fieldname == "R_s":
                new = replace(law, Dv=float(value) * law.De)
            elif fieldname in ("K", "Z", "De", "Dv", "D0"):
                new = replace(law, **{fieldname: float(value)})
            else:
                raise KeyError(f"unknown law field {fieldname!r} in path {path!r}")
            scenario.materials[name] = new
        return
    if parts[0] == "gravity" and len(parts) == 2:
        axis = {"x": 0, "y": 1, "z": 2}[parts[1]]
        if axis >= scenario.dim:
            raise KeyError(f"gravity axis {parts[1]!r} outside dim {scenario.dim}")
        g = list(scenario.gravity)
        g[axis] = float(value)
        scenario.gravity = tuple(g)
        return
    if path == "ambient_viscosity":
        scenario.ambient_viscosity = float(value)
        return
    if path == "dt":
        scenario.dt = float(value)
        return
    raise KeyError(f"unresolvable parameter path {path!r}")
