"""Spatial hash exactness against the brute-force oracle."""

import numpy as np
import pytest

from mesop.grid import ContractViolation, NeighborIndex, brute_force_pairs


def test_empty_index():
    idx = NeighborIndex.build(np.empty((0, 2)), 1.0)
    assert len(idx.pairs_within(1.0)) == 0


def test_single_particle():
    idx = NeighborIndex.build(np.array([[0.5, 0.5]]), 1.0)
    assert len(idx.pairs_within(1.0)) == 0


def test_two_in_same_cell():
    idx = NeighborIndex.build(np.array([[0.2, 0.2], [0.3, 0.3]]), 1.0)
    pairs = idx.pairs_within(1.0)
    assert pairs.index_pairs() == {(0, 1)}


def test_distance_exactly_radius_included():
    pos = np.array([[0.0, 0.0], [2.5, 0.0]])
    pairs = NeighborIndex.build(pos, 2.5).pairs_within(2.5)
    assert pairs.index_pairs() == {(0, 1)}


def test_distance_just_beyond_radius_excluded():
    pos = np.array([[0.0, 0.0], [2.5 + 1e-9, 0.0]])
    pairs = NeighborIndex.build(pos, 2.5).pairs_within(2.5)
    assert len(pairs) == 0


def test_radius_above_cell_size_rejected():
    idx = NeighborIndex.build(np.zeros((2, 2)), 1.0)
    with pytest.raises(ContractViolation):
        idx.pairs_within(1.5)


def test_non_finite_position_rejected():
    pos = np.array([[0.0, 0.0], [np.nan, 1.0]])
    with pytest.raises(ValueError, match="particle 1"):
        NeighborIndex.build(pos, 1.0)


def test_cell_size_positive():
    with pytest.raises(ValueError):
        NeighborIndex.build(np.zeros((1, 2)), 0.0)


def test_coincident_pair_has_zero_unit():
    pos = np.array([[1.0, 1.0], [1.0, 1.0]])
    pairs = NeighborIndex.build(pos, 1.0).pairs_within(1.0)
    assert pairs.index_pairs() == {(0, 1)}
    assert pairs.distance[0] == 0.0
    assert np.all(pairs.unit[0] == 0.0)


@pytest.mark.parametrize("mode", ["dense", "sparse", "auto"])
@pytest.mark.parametrize("dim", [2, 3])
def test_matches_brute_force_random_clouds(mode, dim):
    rng = np.random.default_rng(100 + dim)
    for trial in range(25):
        n = int(rng.integers(2, 220))
        scale = 10.0 ** rng.integers(-2, 3)
        pos = rng.uniform(-40, 40, size=(n, dim)) * scale
        radius = float(rng.uniform(0.3, 20)) * scale
        expected = brute_force_pairs(pos, radius)
        got = NeighborIndex.build(pos, radius, mode=mode).pairs_within(radius)
        assert got.index_pairs() == expected.index_pairs(), f"trial {trial}"
        # same lexicographic order and bit-identical geometry
        assert got.i.tobytes() == expected.i.tobytes()
        assert got.j.tobytes() == expected.j.tobytes()
        assert got.distance.tobytes() == expected.distance.tobytes()
        assert got.unit.tobytes() == expected.unit.tobytes()


def test_clustered_cloud_matches_brute_force():
    # many particles piled into few cells stresses the per-cell scan
    rng = np.random.default_rng(9)
    pos = rng.normal(0.0, 0.8, size=(500, 2))
    radius = 1.1
    got = NeighborIndex.build(pos, radius).pairs_within(radius)
    expected = brute_force_pairs(pos, radius)
    assert got.index_pairs() == expected.index_pairs()


def test_emission_order_deterministic():
    rng = np.random.default_rng(21)
    pos = rng.uniform(0, 30, size=(300, 2))
    a = NeighborIndex.build(pos, 1.5).pairs_within(1.5)
    b = NeighborIndex.build(pos.copy(), 1.5).pairs_within(1.5)
    assert a.i.tobytes() == b.i.tobytes()
    assert a.j.tobytes() == b.j.tobytes()
    lex = sorted(zip(a.i.tolist(), a.j.tolist()))
    assert lex == list(zip(a.i.tolist(), a.j.tolist()))


def test_index_snapshots_positions():
    pos = np.array([[0.0, 0.0], [0.5, 0.0]])
    idx = NeighborIndex.build(pos, 1.0)
    pos[1, 0] = 100.0  # mutate the caller's array after the build
    pairs = idx.pairs_within(1.0)
    assert pairs.index_pairs() == {(0, 1)}
    assert pairs.distance[0] == 0.5
