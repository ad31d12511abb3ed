"""Regime metrics and the matter-state classifier.

Quantitative stand-ins for the qualitative feature language: pile repose
angle, contact clustering, contact-force heterogeneity, transverse shear
RMS and kinetic energy, combined by a frozen decision table into one of
{gas, granular, fluid_laminar, fluid_turbulent, paste, unclassified}.

Classifier thresholds are repo constants calibrated once by pilot runs
(docs/calibration.md) and frozen; classify() is a pure function of its
input vector.  Temporal regimes (turbulence onset, paste creep) enter
through two optional caller-computed features: shear_growth and
spread_rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import accumulate_forces
from .grid import NeighborIndex
from .state import ForceAccumulator, SimState

CSV_COLUMNS = (
    "step", "time", "repose_angle_deg", "spread_ratio", "cluster_count",
    "largest_cluster_fraction", "stress_cv", "shear_rms",
    "kinetic_energy_per_particle", "label",
)

LABELS = ("gas", "granular", "fluid_laminar", "fluid_turbulent", "paste", "unclassified")


class MetricError(ValueError):
    """The metric is undefined for this frame (too few particles, no
    contacts, degenerate geometry)."""


@dataclass(frozen=True)
class ClassifierThresholds:
    """Frozen decision-table constants (see docs/calibration.md)."""

    gas_min_kinetic: float = 1.0          # per-particle KE floor for gas
    gas_max_cluster_fraction: float = 0.3
    turbulent_min_shear_growth: float = 5.0
    granular_min_repose_deg: float = 12.0  # theta_g
    granular_min_stress_cv: float = 0.5
    # sustained efflux (particles/s leaving the measured heap) means the
    # material is still oozing: pastes ooze, arrested granular does not
    freeze_max_ooze_rate: float = 0.05
    fluid_max_repose_deg: float = 6.0      # theta_f
    fluid_max_spread_ratio: float = 0.25
    paste_min_cluster_fraction: float = 0.3
    paste_min_repose_deg: float = 5.0
    paste_max_kinetic: float = 1.0


THRESHOLDS = ClassifierThresholds()


@dataclass
class RegimeReport:
    """Metric vector for one frame plus the classified state label."""

    step: int
    time: float
    repose_angle_deg: float
    spread_ratio: float
    cluster_count: int
    largest_cluster_fraction: float
    stress_cv: float
    shear_rms: float
    kinetic_energy_per_particle: float
    label: str
    shear_growth: float | None = None
    ooze_rate: float | None = None

    def csv_row(self) -> str:
        vals = [self.step, self.time, self.repose_angle_deg, self.spread_ratio,
                self.cluster_count, self.largest_cluster_fraction, self.stress_cv,
                self.shear_rms, self.kinetic_energy_per_particle, self.label]
        out = []
        for v in vals:
            if isinstance(v, float):
                out.append(f"{v:.9g}")
            else:
                out.append(str(v))
        return ",".join(out)

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_COLUMNS)


def _free_positions(state: SimState) -> np.ndarray:
    return state.positions[state.free_mask]


def angle_of_repose(state: SimState, ground_height: float, bin_width: float | None = None) -> float:
    """Mean flank slope of the pile silhouette, in degrees.

    Bins free particles along the horizontal axis (default bin width: the
    dominant material's De), takes the max height per bin, then fits one
    line per flank (apex to each base extent) by least squares.  A flat
    sheet gives 0.
    """
    pos = _free_positions(state)
    above = pos[pos[:, 1] > ground_height]
    if len(above) < 10:
        raise MetricError(f"need >= 10 free particles above ground, got {len(above)}")
    if bin_width is None:
        bin_width = _dominant_de(state)
    if state.dim == 2:
        horiz = above[:, 0]
    else:
        centroid = above.mean(axis=0)
        horiz = np.sqrt((above[:, 0] - centroid[0]) ** 2 + (above[:, 2] - centroid[2]) ** 2)
    height = above[:, 1] - ground_height
    bins = np.floor(horiz / bin_width).astype(np.int64)
    uniq = np.unique(bins)
    if len(uniq) < 2:
        raise MetricError("all particles fall in one silhouette bin")
    centers = (uniq + 0.5) * bin_width
    tops = np.array([height[bins == b].max() for b in uniq])
    apex = int(np.argmax(tops))
    angles = []
    for lo, hi in ((0, apex + 1), (apex, len(uniq))):
        if hi - lo >= 2:
            slope = np.polyfit(centers[lo:hi], tops[lo:hi], 1)[0]
            angles.append(abs(np.degrees(np.arctan(slope))))
    if not angles:
        raise MetricError("degenerate silhouette: apex at both extents")
    return float(np.mean(angles))


def spread_ratio(state: SimState, ground_height: float | None = None) -> float:
    """Height/width of the free-particle extent (height above ground when a
    ground level is given)."""
    pos = _free_positions(state)
    if len(pos) == 0:
        raise MetricError("no free particles")
    base = ground_height if ground_height is not None else float(pos[:, 1].min())
    height = float(pos[:, 1].max()) - base
    if state.dim == 2:
        width = float(pos[:, 0].max() - pos[:, 0].min())
    else:
        width = max(float(pos[:, 0].max() - pos[:, 0].min()),
                    float(pos[:, 2].max() - pos[:, 2].min()))
    if width == 0:
        raise MetricError("zero horizontal extent")
    return height / width


def cluster_count(state: SimState, contact_radius: float) -> tuple[int, float]:
    """Connected components of the free-particle contact graph via
    union-find; returns (count, largest component fraction)."""
    if contact_radius <= 0:
        raise ValueError(f"contact_radius must be > 0, got {contact_radius}")
    pos = _free_positions(state)
    n = len(pos)
    if n == 0:
        return 0, 0.0
    parent = np.arange(n)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    pairs = NeighborIndex.build(pos, contact_radius).pairs_within(contact_radius)
    for k in range(len(pairs)):
        ra, rb = find(int(pairs.i[k])), find(int(pairs.j[k]))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(n)])
    _, sizes = np.unique(roots, return_counts=True)
    return int(len(sizes)), float(sizes.max()) / n


def stress_heterogeneity(state: SimState, acc: ForceAccumulator | None = None) -> float:
    """Coefficient of variation of per-particle summed |elastic contact
    force| over free particles with at least one active contact."""
    if acc is None:
        acc = accumulate_forces(state)
    free = state.free_mask
    loaded = free & (acc.contact_count > 0)
    values = acc.contact_force_sum[loaded]
    if len(values) == 0:
        raise MetricError("no particle has an active elastic contact")
    mean = float(values.mean())
    if mean == 0.0:
        return 0.0
    return float(values.std()) / mean


def shear_rms(state: SimState, flow_axis: int) -> float:
    """RMS of the velocity components transverse to the flow axis, over
    free particles; grows when shear-layer rolls form."""
    vel = state.velocities[state.free_mask]
    if len(vel) == 0:
        return 0.0
    transverse = np.delete(vel, flow_axis, axis=1)
    return float(np.sqrt((transverse ** 2).sum(axis=1).mean()))


def kinetic_energy_per_particle(state: SimState) -> float:
    free = state.free_mask
    if not free.any():
        return 0.0
    m = state.masses[free]
    v2 = (state.velocities[free] ** 2).sum(axis=1)
    return float(0.5 * (m * v2).mean())


def above_ground_count(state: SimState, ground_height: float) -> int:
    """Free particles above the measurement plane; its decay rate is the
    ooze flux fed to the classifier."""
    pos = _free_positions(state)
    if len(pos) == 0:
        return 0
    return int((pos[:, 1] > ground_height).sum())


def classify(
    repose_angle_deg: float,
    spread: float,
    largest_cluster_fraction: float,
    stress_cv: float,
    kinetic: float,
    shear_growth: float | None = None,
    ooze_rate: float | None = None,
    thresholds: ClassifierThresholds = THRESHOLDS,
) -> str:
    """Frozen decision table; contradictory inputs fall through to
    'unclassified' rather than guessing.

    Rule order: gas, fluid_turbulent, granular, fluid_laminar, paste.  The
    two optional temporal features sharpen regimes that are inherently
    dynamic: shear_growth (late/early transverse RMS ratio) flags
    turbulence onset, ooze_rate (sustained efflux from the measured heap)
    separates arrested granular matter from still-flowing paste."""
    t = thresholds
    if kinetic >= t.gas_min_kinetic and largest_cluster_fraction <= t.gas_max_cluster_fraction:
        return "gas"
    if shear_growth is not None and shear_growth >= t.turbulent_min_shear_growth:
        return "fluid_turbulent"
    arrested = ooze_rate is None or abs(ooze_rate) <= t.freeze_max_ooze_rate
    if (repose_angle_deg >= t.granular_min_repose_deg
            and stress_cv >= t.granular_min_stress_cv and arrested):
        return "granular"
    if repose_angle_deg < t.fluid_max_repose_deg and spread <= t.fluid_max_spread_ratio:
        return "fluid_laminar"
    if (largest_cluster_fraction >= t.paste_min_cluster_fraction
            and repose_angle_deg >= t.paste_min_repose_deg
            and kinetic <= t.paste_max_kinetic):
        return "paste"
    return "unclassified"


def compute_report(
    state: SimState,
    ground_height: float | None = None,
    flow_axis: int | None = None,
    contact_radius: float | None = None,
    shear_growth: float | None = None,
    ooze_rate: float | None = None,
    acc: ForceAccumulator | None = None,
    thresholds: ClassifierThresholds = THRESHOLDS,
) -> RegimeReport:
    """Full metric vector + label for one frame.

    Metrics that are undefined for the frame (no pile, no contacts) fall
    back to 0.0, which can only suppress the rules that needed them.
    """
    if contact_radius is None:
        contact_radius = _dominant_de(state)
    gh = ground_height if ground_height is not None else 0.0
    try:
        repose = angle_of_repose(state, gh)
    except MetricError:
        repose = 0.0
    try:
        spread = spread_ratio(state, ground_height)
    except MetricError:
        spread = 0.0
    count, fraction = cluster_count(state, contact_radius)
    try:
        cv = stress_heterogeneity(state, acc)
    except MetricError:
        cv = 0.0
    shear = shear_rms(state, flow_axis if flow_axis is not None else 0)
    kinetic = kinetic_energy_per_particle(state)
    label = classify(repose, spread, fraction, cv, kinetic,
                     shear_growth=shear_growth, ooze_rate=ooze_rate,
                     thresholds=thresholds)
    return RegimeReport(
        step=state.step_count, time=state.time,
        repose_angle_deg=repose, spread_ratio=spread,
        cluster_count=count, largest_cluster_fraction=fraction,
        stress_cv=cv, shear_rms=shear, kinetic_energy_per_particle=kinetic,
        label=label, shear_growth=shear_growth, ooze_rate=ooze_rate,
    )


def _dominant_de(state: SimState) -> float:
    """De of the most common free-particle material (bin width default)."""
    free_ids = state.material_ids[state.free_mask]
    names = state.material_names
    if len(free_ids) and len(names):
        counts = np.bincount(free_ids, minlength=len(names))
        return state.materials[names[int(np.argmax(counts))]].De
    return 1.0
