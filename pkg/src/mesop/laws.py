"""Pair-interaction laws.

The engine's canonical interaction is the single-threshold visco-elastic
``MaterialLaw``: a linear spring active for distances in (0, De] plus a
linear damper on the radial relative velocity, active in (0, Dv].  Both
scalar laws are signed along the line of centers with the *restoring*
convention: a positive scalar acts to reduce the pair distance (attraction),
a negative one to increase it (repulsion).  ``pair_force`` applies the
summed scalar as ``F_i = -(s_e + s_v) * khat`` with ``khat`` the unit vector
from particle j to particle i, so a compressed spring pushes the pair apart
and the damper always opposes relative radial motion.

``PiecewiseLaw`` generalizes to an arbitrary list of linear segments with
per-segment activity windows (the wider family of radial profiles, including
linearized Lennard-Jones shapes).  ``LennardJonesLaw`` and ``CollisionRule``
are reference laws used for validation and comparison only; ``lj_force``
keeps the conventional separation-signed form (positive = repulsive) of its
fractional formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MaterialLaw",
    "Segment",
    "PiecewiseLaw",
    "LennardJonesLaw",
    "CollisionRule",
    "elastic_force",
    "viscous_force",
    "pair_force",
    "lj_force",
    "linearize_lj",
    "restitution_collide",
]


@dataclass(frozen=True)
class MaterialLaw:
    """Single-threshold visco-elastic pair law.

    K    elastic stiffness (>= 0); slope of the spring term
    Z    viscosity (>= 0); damping on the radial relative velocity
    De   elastic threshold (> 0); spring active for 0 < D <= De
    Dv   viscous threshold (> 0); damper active for 0 < D <= Dv
    D0   elastic rest length (>= 0)

    With D0 == De the law is a continuous, purely repulsive contact; with
    D0 < De it has an adhesion band on (D0, De].
    """

    K: float = 0.0
    Z: float = 0.0
    De: float = 1.0
    Dv: float = 1.0
    D0: float = 1.0

    def __post_init__(self):
        if self.K < 0 or self.Z < 0:
            raise ValueError(f"K and Z must be >= 0, got K={self.K}, Z={self.Z}")
        if self.De <= 0 or self.Dv <= 0:
            raise ValueError(f"thresholds must be > 0, got De={self.De}, Dv={self.Dv}")
        if self.D0 < 0:
            raise ValueError(f"rest length must be >= 0, got D0={self.D0}")
        if not all(math.isfinite(v) for v in (self.K, self.Z, self.De, self.Dv, self.D0)):
            raise ValueError("law parameters must be finite")

    @property
    def threshold_ratio(self) -> float:
        """R_s = Dv / De, the viscous-to-elastic reach ratio."""
        return self.Dv / self.De

    @property
    def cutoff(self) -> float:
        """Largest distance at which this law exerts any force."""
        radius = 0.0
        if self.K > 0:
            radius = max(radius, self.De)
        if self.Z > 0:
            radius = max(radius, self.Dv)
        return radius

    def as_piecewise(self) -> "PiecewiseLaw":
        """Elastic profile as a single segment (restoring-signed)."""
        return PiecewiseLaw([Segment(0.0, self.De, self.K, self.D0)])


@dataclass(frozen=True)
class Segment:
    """One linear piece: contributes slope*(D - rest) for DT1 <= D <= DT2."""

    DT1: float
    DT2: float
    slope: float
    rest: float

    def __post_init__(self):
        if self.DT1 < 0 or self.DT1 > self.DT2:
            raise ValueError(f"need 0 <= DT1 <= DT2, got [{self.DT1}, {self.DT2}]")


@dataclass(frozen=True)
class PiecewiseLaw:
    """Ordered list of non-overlapping linear segments.

    Adjacent segments may share an endpoint (the natural encoding of an
    interpolant); at a shared point the earlier segment wins, so evaluation
    is single-valued everywhere.  Outside every segment the value is 0,
    which keeps the profile finite for all D >= 0 including D = 0.
    """

    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        for a, b in zip(segs, segs[1:]):
            if b.DT1 < a.DT2:
                raise ValueError(f"segments overlap: [{a.DT1},{a.DT2}] and [{b.DT1},{b.DT2}]")
            if b.DT1 < a.DT1:
                raise ValueError("segments must be sorted by DT1")

    def evaluate(self, D: float) -> float:
        if D < 0:
            raise ValueError(f"distance must be >= 0, got {D}")
        for seg in self.segments:
            if seg.DT1 <= D <= seg.DT2:
                return seg.slope * (D - seg.rest)
        return 0.0

    def __call__(self, D: float) -> float:
        return self.evaluate(D)


@dataclass(frozen=True)
class LennardJonesLaw:
    """Fractional reference law F(D) = -a/D^m + b/D^n with n > m."""

    a: float
    b: float
    m: int
    n: int

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("coefficients a, b must be > 0")
        if self.m < 1 or self.n < 1 or self.n <= self.m:
            raise ValueError(f"need positive integer exponents with n > m, got m={self.m}, n={self.n}")

    def root(self) -> float:
        """Distance D* > 0 where attraction balances repulsion."""
        return (self.b / self.a) ** (1.0 / (self.n - self.m))


@dataclass(frozen=True)
class CollisionRule:
    """Restitution collision between equal-mass hard disks."""

    r: float
    disk_radius: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"restitution coefficient must be in [0, 1], got {self.r}")
        if self.disk_radius <= 0:
            raise ValueError("disk_radius must be > 0")


def elastic_force(law: MaterialLaw, D: float) -> float:
    """Spring scalar K*(D - D0), active for 0 < D <= De, else 0.

    Restoring-signed: positive (stretched) contracts the pair, negative
    (compressed) pushes it apart.  Zero at D = 0 by the degeneracy rule.
    """
    if D < 0:
        raise ValueError(f"distance must be >= 0, got {D}")
    if 0.0 < D <= law.De:
        return law.K * (D - law.D0)
    return 0.0


def viscous_force(law: MaterialLaw, D: float, D_dot: float) -> float:
    """Damper scalar Z*Ddot, active for 0 < D <= Dv, else 0.

    Ddot is the time derivative of the pair distance (relative velocity
    projected on the line of centers).  Under the restoring convention the
    resulting force always opposes relative radial motion.
    """
    if D < 0:
        raise ValueError(f"distance must be >= 0, got {D}")
    if 0.0 < D <= law.Dv:
        return law.Z * D_dot
    return 0.0


def pair_force(
    pos_i: np.ndarray,
    vel_i: np.ndarray,
    pos_j: np.ndarray,
    vel_j: np.ndarray,
    law: MaterialLaw,
) -> np.ndarray:
    """Force vector on particle i (negate for particle j).

    F_i = -(elastic + viscous) * khat with khat = (x_i - x_j)/D.  Coincident
    particles (D = 0) yield the zero vector; the engine counts those events.
    """
    delta = np.asarray(pos_i, dtype=float) - np.asarray(pos_j, dtype=float)
    D = float(np.sqrt(np.dot(delta, delta)))
    if D == 0.0:
        return np.zeros_like(delta)
    khat = delta / D
    d_dot = float(np.dot(np.asarray(vel_i, dtype=float) - np.asarray(vel_j, dtype=float), khat))
    scalar = elastic_force(law, D) + viscous_force(law, D, d_dot)
    return -scalar * khat


def lj_force(law: LennardJonesLaw, D: float) -> float:
    """-a/D^m + b/D^n; separation-signed (positive = repulsive).

    Unlike the piecewise family this law has a pole at D = 0.
    """
    if D <= 0:
        raise ValueError(f"Lennard-Jones law undefined at D={D} (pole at 0)")
    return -law.a / D**law.m + law.b / D**law.n


def linearize_lj(law: LennardJonesLaw, knots: list[float]) -> PiecewiseLaw:
    """Piecewise-linear interpolant of lj_force sampled at the knots.

    Agrees with lj_force exactly at every knot and is 0 outside
    [knots[0], knots[-1]] (compact support).
    """
    if len(knots) < 2:
        raise ValueError(f"need at least 2 knots, got {len(knots)}")
    ks = [float(k) for k in knots]
    if any(k <= 0 for k in ks):
        raise ValueError("knots must be > 0")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("knots must be strictly increasing")
    values = [lj_force(law, k) for k in ks]
    segments = []
    for (d0, d1), (f0, f1) in zip(zip(ks, ks[1:]), zip(values, values[1:])):
        slope = (f1 - f0) / (d1 - d0)
        if slope == 0.0:
            if f0 != 0.0:
                raise ValueError(
                    f"cannot encode constant nonzero piece {f0} on [{d0},{d1}] as slope*(D-rest)"
                )
            rest = d0
        else:
            rest = d0 - f0 / slope
        segments.append(Segment(d0, d1, slope, rest))
    return PiecewiseLaw(tuple(segments))


def restitution_collide(
    u1: np.ndarray,
    u2: np.ndarray,
    k: np.ndarray,
    rule: CollisionRule,
) -> tuple[np.ndarray, np.ndarray]:
    """Post-collision velocities of two equal-mass disks.

    u1' = u1 - J, u2' = u2 + J with J = (1+r)/2 * [k.(u1-u2)] k; tangential
    components are untouched and momentum is conserved exactly for any r.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    k = np.asarray(k, dtype=float)
    norm = float(np.sqrt(np.dot(k, k)))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"k must be a unit vector, |k| = {norm}")
    impulse = 0.5 * (1.0 + rule.r) * float(np.dot(k, u1 - u2)) * k
    return u1 - impulse, u2 + impulse
