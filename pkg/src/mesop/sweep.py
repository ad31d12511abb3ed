"""Batch parameter exploration: behavior maps over law parameters.

Each cell builds its scenario from a named preset, applies the axis values
through parameter paths, runs for the configured step count and classifies the
end state.  Cells are independent and reproducible in isolation: the cell
seed is a stable hash of (spec seed, cell coordinates), so re-running one
cell standalone reproduces the sweep's cell bit-exactly.  Diverged cells
are recorded as failed and never abort the map.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, metrics
from .engine import DivergenceError
from .metrics import THRESHOLDS, RegimeReport
from .scenarios import Scenario, ScenarioRun, apply_param, preset

#: fixed label -> RGB for the map raster (hex in README)
LABEL_COLORS = {
    "gas": (160, 200, 255),
    "granular": (194, 154, 96),
    "fluid_laminar": (64, 128, 224),
    "fluid_turbulent": (32, 64, 160),
    "paste": (200, 120, 200),
    "unclassified": (128, 128, 128),
    "failed": (0, 0, 0),
}

EARLY_SHEAR_STEP = 100


@dataclass
class Axis:
    path: str
    values: list[float]

    def __post_init__(self):
        if not self.values:
            raise ValueError("axis needs at least one value")
        diffs = np.diff(self.values)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError(f"axis values must be strictly monotone: {self.values}")


@dataclass
class SweepSpec:
    scenario: str
    axis1: Axis
    axis2: Axis | None = None
    steps: int = 25_000
    seed: int = 0
    dim: int = 2

    def to_json(self) -> str:
        d = {"scenario": self.scenario, "axis1": asdict(self.axis1),
             "axis2": asdict(self.axis2) if self.axis2 else None,
             "steps": self.steps, "seed": self.seed, "dim": self.dim}
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SweepSpec":
        d = json.loads(text)
        return cls(
            scenario=d["scenario"],
            axis1=Axis(d["axis1"]["path"], list(d["axis1"]["values"])),
            axis2=Axis(d["axis2"]["path"], list(d["axis2"]["values"])) if d.get("axis2") else None,
            steps=int(d.get("steps", 25_000)),
            seed=int(d.get("seed", 0)),
            dim=int(d.get("dim", 2)),
        )


@dataclass
class CellResult:
    i: int
    j: int
    value1: float
    value2: float | None
    label: str
    report: RegimeReport | None
    failed: bool = False
    error: str = ""


@dataclass
class BehaviorMap:
    spec: SweepSpec
    cells: list[CellResult]
    provenance: dict = field(default_factory=dict)

    def shape(self) -> tuple[int, int]:
        n2 = len(self.spec.axis2.values) if self.spec.axis2 else 1
        return len(self.spec.axis1.values), n2

    def label_at(self, i: int, j: int = 0) -> str:
        for c in self.cells:
            if c.i == i and c.j == j:
                return "failed" if c.failed else c.label
        raise KeyError((i, j))

    def labels_axis1(self, j: int = 0) -> list[str]:
        return [self.label_at(i, j) for i in range(len(self.spec.axis1.values))]

    def to_csv(self) -> str:
        header = ["axis1_path", "axis1_value", "axis2_path", "axis2_value"]
        header += list(metrics.CSV_COLUMNS)
        rows = [",".join(header)]
        for c in sorted(self.cells, key=lambda c: (c.i, c.j)):
            ax2p = self.spec.axis2.path if self.spec.axis2 else ""
            ax2v = f"{c.value2:.9g}" if c.value2 is not None else ""
            prefix = f"{self.spec.axis1.path},{c.value1:.9g},{ax2p},{ax2v}"
            if c.failed or c.report is None:
                body = ",".join([""] * (len(metrics.CSV_COLUMNS) - 1) + ["failed"])
            else:
                body = c.report.csv_row()
            rows.append(prefix + "," + body)
        return "\n".join(rows) + "\n"

    def to_ppm(self, scale: int = 24) -> bytes:
        """P6 raster, axis1 left-to-right, axis2 bottom-to-top."""
        n1, n2 = self.shape()
        img = np.zeros((n2 * scale, n1 * scale, 3), dtype=np.uint8)
        for c in self.cells:
            color = LABEL_COLORS["failed" if c.failed else c.label]
            row = (n2 - 1 - c.j) * scale
            col = c.i * scale
            img[row:row + scale, col:col + scale] = color
        header = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
        return header + img.tobytes()


def cell_seed(seed: int, i: int, j: int) -> int:
    """Stable per-cell seed: sha256 of (seed, i, j)."""
    digest = hashlib.sha256(f"{seed}:{i}:{j}".encode()).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFF


def constants_hash() -> str:
    """Fingerprint of the frozen classifier constants + engine version."""
    payload = f"{__version__}|{THRESHOLDS!r}"
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def cell_provenance(spec: SweepSpec, i: int, j: int) -> str:
    payload = f"{constants_hash()}|{spec.to_json()}|{i}|{j}"
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_cell_scenario(spec: SweepSpec, i: int, j: int) -> Scenario:
    sc = preset(spec.scenario, dim=spec.dim)
    apply_param(sc, spec.axis1.path, spec.axis1.values[i])
    if spec.axis2 is not None:
        apply_param(sc, spec.axis2.path, spec.axis2.values[j])
    sc.rng_seed = cell_seed(spec.seed, i, j)
    return sc


def run_and_classify(
    scenario: Scenario,
    steps: int | None = None,
    parallel: bool = False,
    thresholds=THRESHOLDS,
):
    """Run a scenario to its end and produce the classified report.

    Temporal features: for flow scenarios (analysis.flow_axis set) the
    transverse shear RMS is sampled early and at the end, their ratio is the
    classifier's shear_growth; for heap scenarios the efflux of particles
    across the measurement plane over the trailing window is the ooze rate.
    Returns (report, end_state).
    """
    steps = scenario.duration if steps is None else steps
    run = ScenarioRun(scenario)
    hints = scenario.analysis
    gh = hints.ground_height if hints.ground_height is not None else 0.0
    early_shear = None
    done = 0
    if hints.flow_axis is not None and steps > EARLY_SHEAR_STEP:
        run.run(EARLY_SHEAR_STEP, parallel=parallel)
        done = EARLY_SHEAR_STEP
        early_shear = metrics.shear_rms(run.state, hints.flow_axis)
    window = min(2000, max(1, (steps - done) // 5))
    run.run(steps - done - window, parallel=parallel)
    n_before = metrics.above_ground_count(run.state, gh)
    run.run(window, parallel=parallel)
    state = run.state
    n_after = metrics.above_ground_count(state, gh)
    ooze = (n_before - n_after) / (window * state.dt)
    shear_growth = None
    if early_shear is not None:
        shear_growth = metrics.shear_rms(state, hints.flow_axis) / max(early_shear, 1e-12)
    report = metrics.compute_report(
        state, hints.ground_height, hints.flow_axis, hints.contact_radius,
        shear_growth=shear_growth, ooze_rate=ooze, thresholds=thresholds,
    )
    return report, state


def run_cell(spec: SweepSpec, i: int, j: int) -> CellResult:
    v1 = spec.axis1.values[i]
    v2 = spec.axis2.values[j] if spec.axis2 else None
    try:
        scenario = build_cell_scenario(spec, i, j)
        report, _ = run_and_classify(scenario, steps=spec.steps)
        return CellResult(i, j, v1, v2, report.label, report)
    except DivergenceError as err:
        return CellResult(i, j, v1, v2, "failed", None, failed=True, error=str(err))


def run_sweep(
    spec: SweepSpec,
    workers: int | None = None,
    out_dir: str | None = None,
    resume: bool = False,
    progress=None,
) -> BehaviorMap:
    n1 = len(spec.axis1.values)
    n2 = len(spec.axis2.values) if spec.axis2 else 1
    coords = [(i, j) for i in range(n1) for j in range(n2)]
    results: dict[tuple[int, int], CellResult] = {}

    pending = []
    for i, j in coords:
        if resume and out_dir:
            cached = _load_cell(out_dir, spec, i, j)
            if cached is not None:
                results[(i, j)] = cached
                continue
        pending.append((i, j))

    if workers is None:
        workers = _default_workers()
    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {(i, j): pool.submit(run_cell, spec, i, j) for i, j in pending}
            for (i, j), fut in futures.items():
                results[(i, j)] = fut.result()
                if progress:
                    progress(results[(i, j)])
    else:
        for i, j in pending:
            results[(i, j)] = run_cell(spec, i, j)
            if progress:
                progress(results[(i, j)])

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for (i, j), cell in results.items():
            _save_cell(out_dir, spec, cell)

    cells = [results[c] for c in coords]
    provenance = {
        "engine_version": __version__,
        "seed": spec.seed,
        "constants_hash": constants_hash(),
        "scenario": spec.scenario,
        "steps": spec.steps,
    }
    return BehaviorMap(spec=spec, cells=cells, provenance=provenance)


def _default_workers() -> int:
    env = os.environ.get("MESOP_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _cell_path(out_dir: str, spec: SweepSpec, i: int, j: int) -> str:
    return os.path.join(out_dir, f"cell_{i}_{j}_{cell_provenance(spec, i, j)}.json")


def _save_cell(out_dir: str, spec: SweepSpec, cell: CellResult):
    payload = {
        "i": cell.i, "j": cell.j, "value1": cell.value1, "value2": cell.value2,
        "label": cell.label, "failed": cell.failed, "error": cell.error,
        "report": None if cell.report is None else {
            k: getattr(cell.report, k)
            for k in ("step", "time", "repose_angle_deg", "spread_ratio",
                      "cluster_count", "largest_cluster_fraction", "stress_cv",
                      "shear_rms", "kinetic_energy_per_particle", "label",
                      "shear_growth", "ooze_rate")
        },
    }
    with open(_cell_path(out_dir, spec, cell.i, cell.j), "w") as fh:
        json.dump(payload, fh)


def _load_cell(out_dir: str, spec: SweepSpec, i: int, j: int) -> CellResult | None:
    path = _cell_path(out_dir, spec, i, j)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        d = json.load(fh)
    report = None
    if d.get("report"):
        report = RegimeReport(**d["report"])
    return CellResult(d["i"], d["j"], d["value1"], d["value2"], d["label"],
                      report, d["failed"], d.get("error", ""))


# ---------------------------------------------------------------------------
# shipped reference sweeps (constants from docs/calibration.md)

GROUP_PATH = "materials.g1+g2+g12"

ELASTICITY_K_VALUES = [18.0, 30.0, 1000.0, 1300.0, 2000.0, 2400.0]
THRESHOLD_RATIO_VALUES = [1.0, 2.0, 3.0, 4.0]
VISCOSITY_SCALE_VALUES = [10.0, 20.0, 30.0, 40.0]
MAP_K_VALUES = [18.0, 30.0, 120.0, 1000.0, 2000.0, 2400.0]
MAP_RS_VALUES = [1.0, 1.6, 2.2, 2.8, 3.4, 4.0]


def elasticity_sweep_spec(seed: int = 0) -> SweepSpec:
    """Stiffness axis on the repose bench: spreading turns into piling."""
    return SweepSpec("repose_bench", Axis(f"{GROUP_PATH}.K", ELASTICITY_K_VALUES), seed=seed)


def threshold_ratio_sweep_spec(seed: int = 0) -> SweepSpec:
    """Viscous-reach axis at granular-range stiffness: piling turns creamy."""
    return SweepSpec("repose_bench", Axis(f"{GROUP_PATH}.R_s", THRESHOLD_RATIO_VALUES), seed=seed)


def viscosity_scaling_sweep_spec(seed: int = 0) -> SweepSpec:
    """Control axis: scaling Z alone (reach fixed) keeps the material granular."""
    return SweepSpec("repose_bench", Axis(f"{GROUP_PATH}.Z", VISCOSITY_SCALE_VALUES), seed=seed)


def behavior_map_spec(seed: int = 0) -> SweepSpec:
    """The (K, R_s) plane at medium viscosity."""
    return SweepSpec(
        "repose_bench",
        Axis(f"{GROUP_PATH}.K", MAP_K_VALUES),
        Axis(f"{GROUP_PATH}.R_s", MAP_RS_VALUES),
        seed=seed,
    )
