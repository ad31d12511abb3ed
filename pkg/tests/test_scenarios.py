"""Preset construction contracts, emitters and parameter paths."""

import math

import numpy as np
import pytest

from mesop.laws import MaterialLaw
from mesop.scenarios import (
    PRESETS,
    Emitter,
    InteractionPreset,
    ScenarioRun,
    apply_param,
    disc_obstacle,
    ground_row,
    preset,
)
from mesop.state import BOUNDARY, FREE


class TestInteractionPreset:
    def test_tags(self):
        ok = {
            "IP1": MaterialLaw(K=1.0, Z=0.0, De=1.0, Dv=1.0),
            "IP2": MaterialLaw(K=0.0, Z=1.0, De=1.0, Dv=1.0),
            "IP3": MaterialLaw(K=1.0, Z=1.0, De=1.0, Dv=1.0),
            "IP4": MaterialLaw(K=1.0, Z=1.0, De=2.0, Dv=1.0),
            "IP5": MaterialLaw(K=1.0, Z=1.0, De=1.0, Dv=2.0),
        }
        for tag, law in ok.items():
            InteractionPreset(tag).validate(law)

    def test_tag_violations_raise(self):
        with pytest.raises(ValueError):
            InteractionPreset("IP1").validate(MaterialLaw(K=1.0, Z=0.5))
        with pytest.raises(ValueError):
            InteractionPreset("IP2").validate(MaterialLaw(K=1.0, Z=1.0))
        with pytest.raises(ValueError):
            InteractionPreset("IP4").validate(MaterialLaw(K=1.0, Z=1.0, De=1.0, Dv=2.0))

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            InteractionPreset("IP9")


class TestPresetTable:
    def test_unknown_name(self):
        with pytest.raises(KeyError):
            preset("melting_glacier")

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_constructs_and_steps(self, name):
        if name == "von_karman":
            sc = preset(name)
        else:
            sc = preset(name, dim=2)
        run = ScenarioRun(sc)
        run.run(5)
        assert np.all(np.isfinite(run.state.positions))

    @pytest.mark.parametrize("name", ["gas_jets", "granular_pile", "fluid_spread",
                                      "kelvin_helmholtz", "paste_ooze"])
    def test_presets_in_3d(self, name):
        sc = preset(name, dim=3)
        assert sc.dim == 3
        run = ScenarioRun(sc)
        run.run(3)
        assert run.state.dim == 3

    def test_paste_threshold_ratio_is_four(self):
        sc = preset("paste_ooze")
        grains = [n for n in sc.materials if n != "ground"]
        for name in grains:
            assert sc.materials[name].threshold_ratio == pytest.approx(4.0)

    def test_kelvin_helmholtz_is_pure_viscous(self):
        sc = preset("kelvin_helmholtz")
        assert sc.materials["fluid"].K == 0.0
        assert sc.materials["fluid"].Z > 0.0

    def test_gas_jets_has_no_dissipation(self):
        sc = preset("gas_jets")
        assert sc.ambient_viscosity == 0.0
        assert sc.materials["gas"].Z == 0.0

    def test_granular_pile_contract(self):
        sc = preset("granular_pile")
        assert sc.materials["grain"].Z == 0.0  # no interparticle dissipation
        assert sc.ambient_viscosity > 0.0
        ground = [p for p in sc.particles if p.kind == BOUNDARY]
        ys = {p.position[1] for p in ground}
        floor = [p for p in ground if p.position[1] == min(ys)]
        xs = sorted(p.position[0] for p in floor)
        spacing = min(b - a for a, b in zip(xs, xs[1:]))
        assert spacing <= 0.5 * sc.materials["grain"].De

    def test_von_karman_threshold_ordering(self):
        law = preset("von_karman").materials["fluid"]
        assert law.De > law.Dv  # wide elastic halo, tight viscous core

    def test_dry_to_moist_scales(self):
        dry = preset("dry_to_moist", k_scale=1.0, z_scale=1.0)
        moist = preset("dry_to_moist", k_scale=0.25, z_scale=4.0)
        assert moist.materials["grain"].K == pytest.approx(0.25 * dry.materials["grain"].K)
        assert moist.materials["grain"].Z > dry.materials["grain"].Z

    def test_fluid_spread_low_vs_granular_high_k(self):
        lo = preset("fluid_spread").materials["fluid"].K
        hi_laws = preset("granular_from_IP3").materials
        hi = max(law.K for name, law in hi_laws.items() if name != "ground")
        assert hi > 10 * lo


class TestEmitter:
    def test_direction_normalized(self):
        e = Emitter((0.0, 0.0), (3.0, 4.0), speed=1.0, rate=1.0, material="m")
        assert np.linalg.norm(e.direction) == pytest.approx(1.0)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            Emitter((0.0, 0.0), (1.0, 0.0), speed=1.0, rate=-1.0, material="m")

    def test_zero_direction_rejected(self):
        with pytest.raises(ValueError):
            Emitter((0.0, 0.0), (0.0, 0.0), speed=1.0, rate=1.0, material="m")

    def test_spawn_batch_deterministic_per_index(self):
        e = Emitter((0.0, 5.0), (0.0, -1.0), speed=2.0, rate=1.0, material="m",
                    jitter_seed=9, width=2.0, velocity_jitter=0.1)
        a = e.spawn_batch(3, first_index=4, dim=2)
        b = e.spawn_batch(3, first_index=4, dim=2)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        c = e.spawn_batch(1, first_index=5, dim=2)
        assert np.array_equal(c[0][0], a[0][1])  # same spawn index, same jitter


class TestSpawnDebt:
    def _scenario(self, rate, dt=0.01):
        law = MaterialLaw(K=0.0, Z=0.0)
        from mesop.scenarios import AnalysisHints, Scenario
        return Scenario(
            name="t", dim=2, particles=[],
            materials={"m": law}, pair_rules={},
            emitters=[Emitter((0.0, 0.0), (1.0, 0.0), speed=1.0, rate=rate,
                              material="m")],
            gravity=(0.0, 0.0), dt=dt, analysis=AnalysisHints(),
        )

    def test_zero_rate_never_spawns(self):
        run = ScenarioRun(self._scenario(0.0))
        run.run(100)
        assert run.state.n_particles == 0

    def test_integer_rate_one_per_step(self):
        run = ScenarioRun(self._scenario(100.0, dt=0.01))
        for k in range(1, 11):
            run.step()
            assert run.state.n_particles == k

    def test_fractional_debt_accumulates(self):
        # hand simulation: debt += 0.15/step, floor emitted
        run = ScenarioRun(self._scenario(15.0, dt=0.01))
        run.run(100)
        assert run.state.n_particles == 15

    def test_spawned_particles_keep_existing_indices(self):
        sc = self._scenario(100.0, dt=0.01)
        sc.particles = ground_row(0.0, 1.0, 0.5, 0.0, 0)
        run = ScenarioRun(sc)
        before = run.state.positions[:3].copy()
        run.run(10)
        assert np.array_equal(run.state.positions[:3], before)
        assert run.state.kinds[0] == BOUNDARY
        assert run.state.kinds[-1] == FREE

    def test_max_count_caps_production(self):
        sc = self._scenario(100.0, dt=0.01)
        sc.emitters[0].max_count = 7
        run = ScenarioRun(sc)
        run.run(50)
        assert run.state.n_particles == 7


class TestBoundaryBuilders:
    def test_ground_row_spacing_and_kind(self):
        row = ground_row(-1.0, 1.0, 0.5, 0.25, 3)
        assert all(p.kind == BOUNDARY for p in row)
        assert all(p.position[1] == 0.25 for p in row)
        assert all(math.isinf(p.mass) for p in row)
        assert len(row) == 5

    def test_disc_obstacle_within_radius(self):
        disc = disc_obstacle((1.0, 2.0), 1.5, 0.4, 0)
        assert all(
            math.hypot(p.position[0] - 1.0, p.position[1] - 2.0) <= 1.5 + 1e-9
            for p in disc)
        assert len(disc) > 10


class TestApplyParam:
    def test_material_field(self):
        sc = preset("fluid_spread")
        apply_param(sc, "materials.fluid.K", 500.0)
        assert sc.materials["fluid"].K == 500.0

    def test_ratio_scales_dv_at_fixed_de(self):
        sc = preset("fluid_spread")
        de = sc.materials["fluid"].De
        apply_param(sc, "materials.fluid.R_s", 4.0)
        assert sc.materials["fluid"].De == de
        assert sc.materials["fluid"].Dv == pytest.approx(4.0 * de)

    def test_grouped_path_hits_all_materials(self):
        sc = preset("repose_bench")
        apply_param(sc, "materials.g1+g2+g12.K", 777.0)
        for name in ("g1", "g2", "g12"):
            assert sc.materials[name].K == 777.0
        assert sc.materials["ground"].K != 777.0

    def test_gravity_and_ambient(self):
        sc = preset("fluid_spread")
        apply_param(sc, "gravity.y", -3.0)
        apply_param(sc, "ambient_viscosity", 2.5)
        assert sc.gravity[1] == -3.0
        assert sc.ambient_viscosity == 2.5

    def test_unknown_paths_rejected(self):
        sc = preset("fluid_spread")
        with pytest.raises(KeyError):
            apply_param(sc, "materials.lava.K", 1.0)
        with pytest.raises(KeyError):
            apply_param(sc, "materials.fluid.Q", 1.0)
        with pytest.raises(KeyError):
            apply_param(sc, "gravity.z", 1.0)  # dim 2
        with pytest.raises(KeyError):
            apply_param(sc, "utterly.bogus", 1.0)


class TestRunDeterminism:
    def test_same_scenario_bit_identical(self):
        aixs = []
        for _ in range(2):
            run = ScenarioRun(preset("gas_jets"))
            run.run(300)
            aixs.append((run.state.positions.tobytes(), run.state.velocities.tobytes()))
        assert aixs[0] == aixs[1]

    def test_reset_restores_exactly(self):
        run = ScenarioRun(preset("fluid_spread"))
        first = run.state.positions.tobytes()
        run.run(200)
        run.reset()
        assert run.state.positions.tobytes() == first
        assert run.state.step_count == 0
