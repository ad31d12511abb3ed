"""Pair-law unit tests: thresholded visco-elastic scalars, the piecewise
family, the fractional reference law and the restitution collision rule."""

import math

import numpy as np
import pytest

from mesop.laws import (
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


class TestMaterialLaw:
    def test_threshold_ratio(self):
        law = MaterialLaw(K=1.0, Z=1.0, De=1.0, Dv=4.0, D0=1.0)
        assert law.threshold_ratio == 4.0

    def test_rejects_negative_stiffness(self):
        with pytest.raises(ValueError):
            MaterialLaw(K=-1.0)
        with pytest.raises(ValueError):
            MaterialLaw(Z=-0.5)

    def test_rejects_nonpositive_thresholds(self):
        with pytest.raises(ValueError):
            MaterialLaw(De=0.0)
        with pytest.raises(ValueError):
            MaterialLaw(Dv=-1.0)

    def test_cutoff_ignores_inert_terms(self):
        assert MaterialLaw(K=1.0, Z=0.0, De=2.0, Dv=9.0).cutoff == 2.0
        assert MaterialLaw(K=0.0, Z=1.0, De=9.0, Dv=3.0).cutoff == 3.0
        assert MaterialLaw(K=0.0, Z=0.0).cutoff == 0.0


class TestElasticForce:
    def test_direct_substitution(self):
        law = MaterialLaw(K=2.0, D0=1.0, De=1.5)
        assert elastic_force(law, 1.2) == pytest.approx(2.0 * 0.2)

    def test_zero_at_rest_length(self):
        law = MaterialLaw(K=2.0, D0=1.0, De=1.5)
        assert elastic_force(law, 1.0) == 0.0

    def test_zero_outside_threshold(self):
        law = MaterialLaw(K=2.0, D0=1.0, De=1.5)
        assert elastic_force(law, 1.5 + 1e-12) == 0.0
        assert elastic_force(law, 1.5) != 0.0  # boundary is active

    def test_zero_at_coincidence(self):
        law = MaterialLaw(K=2.0, D0=1.0, De=1.5)
        assert elastic_force(law, 0.0) == 0.0

    def test_independent_of_velocity_by_construction(self):
        # signature takes no velocities; spot-check the value is pure in D
        law = MaterialLaw(K=3.0, D0=0.5, De=2.0)
        assert elastic_force(law, 1.7) == elastic_force(law, 1.7)


class TestViscousForce:
    def test_no_relative_motion(self):
        law = MaterialLaw(Z=3.0, Dv=2.0)
        assert viscous_force(law, 1.0, 0.0) == 0.0

    def test_resists_approach(self):
        law = MaterialLaw(Z=3.0, Dv=2.0)
        assert viscous_force(law, 1.0, -0.5) == pytest.approx(-1.5)

    def test_zero_outside_threshold(self):
        law = MaterialLaw(Z=3.0, Dv=2.0)
        assert viscous_force(law, 2.0 + 1e-12, -0.5) == 0.0

    def test_odd_in_ddot(self):
        law = MaterialLaw(Z=2.5, Dv=3.0)
        rng = np.random.default_rng(5)
        for _ in range(50):
            d = float(rng.uniform(0.01, 3.0))
            ddot = float(rng.normal())
            assert viscous_force(law, d, ddot) == -viscous_force(law, d, -ddot)


class TestPairForce:
    def test_outside_thresholds_zero(self):
        law = MaterialLaw(K=5.0, Z=5.0, De=1.0, Dv=1.0, D0=1.0)
        f = pair_force(np.array([0.0, 0.0]), np.zeros(2),
                       np.array([5.0, 0.0]), np.zeros(2), law)
        assert np.all(f == 0.0)

    def test_rest_at_d0(self):
        law = MaterialLaw(K=5.0, Z=5.0, De=2.0, Dv=2.0, D0=1.0)
        f = pair_force(np.array([0.0, 0.0]), np.zeros(2),
                       np.array([1.0, 0.0]), np.zeros(2), law)
        assert np.all(f == 0.0)

    def test_compressed_pair_repels(self):
        law = MaterialLaw(K=5.0, Z=0.0, De=1.0, Dv=1.0, D0=1.0)
        f_i = pair_force(np.array([0.3, 0.0]), np.zeros(2),
                         np.array([0.0, 0.0]), np.zeros(2), law)
        assert f_i[0] > 0  # pushed away from j

    def test_stretched_adhesive_pair_attracts(self):
        law = MaterialLaw(K=5.0, Z=0.0, De=2.0, Dv=1.0, D0=1.0)
        f_i = pair_force(np.array([1.5, 0.0]), np.zeros(2),
                         np.array([0.0, 0.0]), np.zeros(2), law)
        assert f_i[0] < 0  # pulled back toward j

    def test_damper_opposes_approach(self):
        law = MaterialLaw(K=0.0, Z=2.0, De=1.0, Dv=3.0, D0=1.0)
        f_i = pair_force(np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
                         np.array([0.0, 0.0]), np.array([0.0, 0.0]), law)
        assert f_i[0] > 0

    def test_coincident_zero(self):
        law = MaterialLaw(K=5.0, Z=5.0, De=1.0, Dv=1.0, D0=0.5)
        f = pair_force(np.ones(3), np.zeros(3), np.ones(3), np.zeros(3), law)
        assert np.all(f == 0.0)

    def test_matches_scalar_projection_oracle(self):
        # independent recomputation: scalar laws then explicit projection
        rng = np.random.default_rng(42)
        for _ in range(200):
            dim = int(rng.integers(2, 4))
            law = MaterialLaw(
                K=float(rng.uniform(0, 10)), Z=float(rng.uniform(0, 10)),
                De=float(rng.uniform(0.2, 3)), Dv=float(rng.uniform(0.2, 3)),
                D0=float(rng.uniform(0, 2)),
            )
            xi, xj = rng.normal(size=(2, dim))
            vi, vj = rng.normal(size=(2, dim))
            got = pair_force(xi, vi, xj, vj, law)
            delta = xi - xj
            dist = math.sqrt(float(delta @ delta))
            khat = delta / dist
            ddot = float((vi - vj) @ khat)
            expected = -(elastic_force(law, dist) + viscous_force(law, dist, ddot)) * khat
            assert got == pytest.approx(expected, abs=1e-14)

    def test_magnitude_bound(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            law = MaterialLaw(
                K=float(rng.uniform(0, 10)), Z=float(rng.uniform(0, 10)),
                De=float(rng.uniform(0.2, 3)), Dv=float(rng.uniform(0.2, 3)),
                D0=float(rng.uniform(0, 2)),
            )
            xi, xj = rng.normal(size=(2, 2))
            vi, vj = rng.normal(size=(2, 2))
            delta = xi - xj
            dist = math.sqrt(float(delta @ delta))
            ddot = float((vi - vj) @ (delta / dist))
            bound = law.K * max(law.De, law.D0) + law.Z * abs(ddot) + 1e-12
            assert np.linalg.norm(pair_force(xi, vi, xj, vj, law)) <= bound


class TestPiecewiseLaw:
    def test_finite_everywhere_including_zero(self):
        law = PiecewiseLaw((Segment(0.0, 1.0, -5.0, 1.0), Segment(1.0, 2.0, 3.0, 1.0)))
        for d in (0.0, 0.5, 1.0, 1.5, 2.0, 5.0):
            assert math.isfinite(law(d))

    def test_zero_outside_segments(self):
        law = PiecewiseLaw((Segment(1.0, 2.0, 3.0, 1.5),))
        assert law(0.5) == 0.0
        assert law(2.5) == 0.0

    def test_first_segment_wins_at_shared_endpoint(self):
        law = PiecewiseLaw((Segment(0.0, 1.0, 2.0, 0.0), Segment(1.0, 2.0, -4.0, 1.5)))
        assert law(1.0) == pytest.approx(2.0)

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            PiecewiseLaw((Segment(0.0, 1.5, 1.0, 0.0), Segment(1.0, 2.0, 1.0, 0.0)))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            PiecewiseLaw((Segment(2.0, 3.0, 1.0, 0.0), Segment(0.0, 1.0, 1.0, 0.0)))

    def test_material_law_as_piecewise(self):
        mat = MaterialLaw(K=4.0, De=1.5, D0=1.0)
        pw = mat.as_piecewise()
        for d in (0.1, 0.7, 1.0, 1.4):
            assert pw(d) == pytest.approx(elastic_force(mat, d))


class TestLennardJones:
    def test_balance_point(self):
        law = LennardJonesLaw(a=1.0, b=1.0, m=1, n=2)
        assert lj_force(law, 1.0) == pytest.approx(0.0)

    def test_direct_substitution(self):
        law = LennardJonesLaw(a=1.0, b=1.0, m=1, n=2)
        assert lj_force(law, 2.0) == pytest.approx(-0.25)

    def test_pole_at_zero(self):
        law = LennardJonesLaw(a=1.0, b=1.0, m=1, n=2)
        with pytest.raises(ValueError):
            lj_force(law, 0.0)

    def test_root_matches_bisection_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = float(rng.uniform(0.1, 5))
            b = float(rng.uniform(0.1, 5))
            m = int(rng.integers(1, 6))
            n = int(rng.integers(m + 1, m + 7))
            law = LennardJonesLaw(a=a, b=b, m=m, n=n)
            lo, hi = 1e-6, 1e6
            assert lj_force(law, lo) > 0 > lj_force(law, hi)
            for _ in range(200):
                mid = math.sqrt(lo * hi)
                if lj_force(law, mid) > 0:
                    lo = mid
                else:
                    hi = mid
            assert law.root() == pytest.approx(lo, rel=1e-6)

    def test_vanishes_at_infinity(self):
        law = LennardJonesLaw(a=2.0, b=3.0, m=2, n=5)
        assert abs(lj_force(law, 1e9)) < 1e-15


class TestLinearizeLJ:
    def test_root_is_preserved(self):
        law = LennardJonesLaw(a=1.0, b=1.0, m=1, n=2)
        d_star = law.root()
        pw = linearize_lj(law, [d_star, 2 * d_star])
        assert pw(d_star) == pytest.approx(0.0, abs=1e-12)

    def test_agrees_at_every_knot(self):
        law = LennardJonesLaw(a=2.0, b=1.5, m=2, n=4)
        knots = [0.5, 0.8, 1.0, 1.3, 1.9, 2.5, 4.0]
        pw = linearize_lj(law, knots)
        for k in knots:
            assert pw(k) == pytest.approx(lj_force(law, k), abs=1e-12)

    def test_compact_support(self):
        law = LennardJonesLaw(a=2.0, b=1.5, m=2, n=4)
        pw = linearize_lj(law, [0.5, 1.0, 2.0])
        assert pw(2.0 + 1e-9) == 0.0
        assert pw(0.0) == 0.0

    def test_needs_two_knots(self):
        law = LennardJonesLaw(a=1.0, b=1.0, m=1, n=2)
        with pytest.raises(ValueError):
            linearize_lj(law, [1.0])

    def test_rejects_unsorted_knots(self):
        law = LennardJonesLaw(a=1.0, b=1.0, m=1, n=2)
        with pytest.raises(ValueError):
            linearize_lj(law, [1.0, 0.5])


class TestRestitution:
    def test_elastic_headon_exchanges_velocities(self):
        u1p, u2p = restitution_collide(
            np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
            np.array([1.0, 0.0]), CollisionRule(r=1.0))
        assert u1p == pytest.approx([-1.0, 0.0])
        assert u2p == pytest.approx([1.0, 0.0])

    def test_plastic_headon_kills_normal_motion(self):
        u1p, u2p = restitution_collide(
            np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
            np.array([1.0, 0.0]), CollisionRule(r=0.0))
        assert u1p == pytest.approx([0.0, 0.0])
        assert u2p == pytest.approx([0.0, 0.0])

    def test_equal_velocities_unchanged(self):
        u = np.array([0.3, -0.8, 0.1])
        k = np.array([0.0, 0.0, 1.0])
        for r in (0.0, 0.37, 1.0):
            u1p, u2p = restitution_collide(u, u, k, CollisionRule(r=r))
            assert u1p == pytest.approx(u)
            assert u2p == pytest.approx(u)

    def test_momentum_conserved_exactly(self):
        # one impulse applied with exact +/- symmetry; "exactly" means to the
        # final IEEE rounding of the two independent vector additions
        eps = np.finfo(float).eps
        rng = np.random.default_rng(11)
        for _ in range(1000):
            dim = int(rng.integers(2, 4))
            u1, u2 = rng.normal(size=(2, dim))
            k = rng.normal(size=dim)
            k /= np.linalg.norm(k)
            r = float(rng.uniform(0, 1))
            u1p, u2p = restitution_collide(u1, u2, k, CollisionRule(r=r))
            scale = np.abs(u1).max() + np.abs(u2).max() + np.abs(u1p).max()
            assert np.abs((u1p + u2p) - (u1 + u2)).max() <= 8 * eps * scale

    def test_kinetic_energy(self):
        rng = np.random.default_rng(13)
        for _ in range(500):
            u1, u2 = rng.normal(size=(2, 2))
            k = rng.normal(size=2)
            k /= np.linalg.norm(k)
            e0 = float(u1 @ u1 + u2 @ u2)
            u1p, u2p = restitution_collide(u1, u2, k, CollisionRule(r=1.0))
            e1 = float(u1p @ u1p + u2p @ u2p)
            assert e1 == pytest.approx(e0, rel=1e-12)
            r = float(rng.uniform(0, 1))
            u1p, u2p = restitution_collide(u1, u2, k, CollisionRule(r=r))
            assert float(u1p @ u1p + u2p @ u2p) <= e0 + 1e-12

    def test_tangential_untouched(self):
        u1 = np.array([1.0, 2.0])
        u2 = np.array([-0.5, 0.7])
        k = np.array([1.0, 0.0])
        u1p, u2p = restitution_collide(u1, u2, k, CollisionRule(r=0.5))
        assert u1p[1] == u1[1]
        assert u2p[1] == u2[1]

    def test_rejects_non_unit_k(self):
        with pytest.raises(ValueError):
            restitution_collide(np.zeros(2), np.zeros(2),
                                np.array([1.0, 1.0]), CollisionRule(r=1.0))
