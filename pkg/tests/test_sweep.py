"""Sweep machinery: degenerate sweeps, cell independence, resumability and
serialization.  The behavior-map physics itself is covered by the
acceptance suite; here the cells run short."""

import json
import os

import numpy as np
import pytest

from mesop import metrics
from mesop.sweep import (
    LABEL_COLORS,
    Axis,
    BehaviorMap,
    SweepSpec,
    build_cell_scenario,
    cell_seed,
    run_and_classify,
    run_cell,
    run_sweep,
)


def tiny_spec(steps=400):
    return SweepSpec("fluid_spread", Axis("materials.fluid.K", [40.0, 400.0]),
                     steps=steps, seed=7)


class TestSpecModel:
    def test_json_round_trip(self):
        spec = SweepSpec("repose_bench", Axis("materials.g1+g2+g12.K", [1.0, 2.0]),
                         Axis("materials.g1+g2+g12.R_s", [1.0, 4.0]),
                         steps=123, seed=9)
        assert SweepSpec.from_json(spec.to_json()) == spec

    def test_empty_axis_rejected(self):
        with pytest.raises(ValueError):
            Axis("materials.fluid.K", [])

    def test_non_monotone_axis_rejected(self):
        with pytest.raises(ValueError):
            Axis("materials.fluid.K", [1.0, 3.0, 2.0])


class TestDegenerateSweep:
    def test_1x1_equals_direct_run_plus_classify(self):
        spec = SweepSpec("fluid_spread", Axis("materials.fluid.K", [60.0]),
                         steps=300, seed=3)
        bmap = run_sweep(spec)
        assert len(bmap.cells) == 1
        cell = bmap.cells[0]

        scenario = build_cell_scenario(spec, 0, 0)
        report, _ = run_and_classify(scenario, steps=300)
        assert cell.label == report.label
        assert cell.report.repose_angle_deg == report.repose_angle_deg
        assert cell.report.kinetic_energy_per_particle == report.kinetic_energy_per_particle


class TestCellIndependence:
    def test_standalone_cell_reproduces_sweep_cell(self):
        spec = tiny_spec()
        bmap = run_sweep(spec)
        for i in range(2):
            alone = run_cell(spec, i, 0)
            incl = [c for c in bmap.cells if c.i == i][0]
            assert alone.label == incl.label
            assert alone.report.stress_cv == incl.report.stress_cv
            assert alone.report.shear_rms == incl.report.shear_rms

    def test_cell_seeds_stable_and_distinct(self):
        assert cell_seed(7, 0, 0) == cell_seed(7, 0, 0)
        seeds = {cell_seed(7, i, j) for i in range(5) for j in range(5)}
        assert len(seeds) == 25


class TestResume:
    def test_completed_cells_skipped_and_map_identical(self, tmp_path):
        spec = tiny_spec()
        out = str(tmp_path / "sweep")
        full = run_sweep(spec, out_dir=out)

        # second run resumes from the saved cells: identical map without
        # recomputation (poison the engine to prove cells are not re-run)
        calls = []
        import mesop.sweep as sweep_mod
        original = sweep_mod.run_cell

        def counting(spec_, i, j):
            calls.append((i, j))
            return original(spec_, i, j)

        sweep_mod_run_cell = sweep_mod.run_cell
        try:
            sweep_mod.run_cell = counting
            again = run_sweep(spec, out_dir=out, resume=True)
        finally:
            sweep_mod.run_cell = sweep_mod_run_cell
        assert calls == []
        assert [c.label for c in again.cells] == [c.label for c in full.cells]
        assert [c.report.repose_angle_deg for c in again.cells] == \
               [c.report.repose_angle_deg for c in full.cells]

    def test_partial_resume_completes_missing_cells(self, tmp_path):
        spec = tiny_spec()
        out = str(tmp_path / "sweep")
        full = run_sweep(spec, out_dir=out)
        # drop one cell file: resume recomputes exactly that cell
        victims = [n for n in os.listdir(out) if n.startswith("cell_1_")]
        os.remove(os.path.join(out, victims[0]))
        again = run_sweep(spec, out_dir=out, resume=True)
        assert [c.label for c in again.cells] == [c.label for c in full.cells]

    def test_provenance_change_invalidates_cache(self, tmp_path):
        out = str(tmp_path / "sweep")
        run_sweep(tiny_spec(steps=300), out_dir=out)
        files_a = set(os.listdir(out))
        run_sweep(tiny_spec(steps=350), out_dir=out)  # different spec
        files_b = set(os.listdir(out))
        assert files_a and files_b and not files_a & files_b == files_a | files_b
        assert len(files_b) > len(files_a)


class TestSerialization:
    def test_csv_long_form(self):
        bmap = run_sweep(tiny_spec())
        text = bmap.to_csv()
        lines = text.strip().splitlines()
        assert lines[0].startswith("axis1_path,axis1_value,axis2_path,axis2_value,step")
        assert len(lines) == 3
        assert "materials.fluid.K,40" in lines[1]

    def test_ppm_raster_shape_and_colors(self):
        bmap = run_sweep(tiny_spec())
        ppm = bmap.to_ppm(scale=4)
        header, rest = ppm.split(b"\n", 1)
        assert header == b"P6"
        dims, rest = rest.split(b"\n", 1)
        w, h = (int(v) for v in dims.split())
        assert (w, h) == (2 * 4, 1 * 4)
        maxval, payload = rest.split(b"\n", 1)
        img = np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3)
        left = tuple(img[0, 0])
        assert left == LABEL_COLORS[bmap.cells[0].label]

    def test_provenance_recorded(self):
        bmap = run_sweep(tiny_spec())
        assert bmap.provenance["seed"] == 7
        assert "constants_hash" in bmap.provenance
        assert bmap.provenance["engine_version"]


class TestParallelWorkers:
    def test_two_workers_match_serial(self, tmp_path):
        spec = tiny_spec(steps=250)
        serial = run_sweep(spec, workers=1)
        parallel = run_sweep(spec, workers=2)
        for a, b in zip(serial.cells, parallel.cells):
            assert a.label == b.label
            assert a.report.repose_angle_deg == b.report.repose_angle_deg
