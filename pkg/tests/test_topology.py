import numpy as np
import pytest

from airtree import (
    Spacing,
    label_components,
    largest_component,
    parse_branches,
    skeletonize,
    tree_length,
)
from airtree.topology import flat_indices, skeleton_from_voxels

from conftest import line_mask, make_mask, random_mask
from oracles import count_components, flood_fill_labels, has_full_block, thin_oracle


def voxel_set(mask_data):
    return {tuple(v) for v in np.argwhere(mask_data)}


class TestLabelComponents:
    def test_empty(self):
        cl = label_components(make_mask(np.zeros((4, 4, 4), bool)))
        assert cl.count == 0
        assert cl.component_sizes.size == 0

    def test_two_blobs(self):
        data = np.zeros((8, 4, 4), bool)
        data[0:2, 0, 0] = True
        data[5:7, 2, 2] = True
        cl = label_components(make_mask(data))
        assert cl.count == 2
        assert sorted(cl.component_sizes.tolist()) == [2, 2]

    def test_matches_flood_fill_oracle(self, rng):
        for _ in range(10):
            mask = random_mask(rng, rng.integers(4, 25, 3), density=0.35)
            cl = label_components(mask)
            labels, sizes = flood_fill_labels(mask.data)
            assert cl.count == len(sizes)
            assert cl.component_sizes.tolist() == sizes
            for (x, y, z), lab in labels.items():
                assert cl.labels[x, y, z] == lab
            assert cl.component_sizes.sum() == mask.foreground_count


class TestLargestComponent:
    def test_keeps_biggest(self):
        data = np.zeros((12, 4, 4), bool)
        data[0:5, 0, 0] = True
        data[8:11, 2, 2] = True
        out = largest_component(make_mask(data))
        assert out.foreground_count == 5
        assert out.data[0, 0, 0]

    def test_single_component_identity(self, rng):
        data = np.zeros((6, 6, 6), bool)
        data[2:5, 2:5, 2:5] = True
        m = make_mask(data)
        assert largest_component(m) == m

    def test_tie_goes_to_smallest_linear_index(self):
        data = np.zeros((12, 4, 4), bool)
        data[8:12, 1, 1] = True  # later in scan order, same size
        data[0:4, 0, 0] = True   # contains voxel (0,0,0)
        out = largest_component(make_mask(data))
        assert out.data[0, 0, 0]
        assert not out.data[8, 1, 1]
        assert out.foreground_count == 4

    def test_empty_maps_to_empty(self):
        out = largest_component(make_mask(np.zeros((3, 3, 3), bool)))
        assert out.foreground_count == 0

    def test_oracle_max_size(self, rng):
        for _ in range(10):
            mask = random_mask(rng, rng.integers(4, 25, 3), density=0.3)
            out = largest_component(mask)
            _, sizes = flood_fill_labels(mask.data)
            if sizes:
                assert out.foreground_count == max(sizes)
                assert label_components(out).count == 1
            else:
                assert out.foreground_count == 0


class TestSkeletonize:
    def test_thin_curve_unchanged(self):
        # 26-connected staircase curve is already one voxel thick
        data = np.zeros((10, 10, 10), bool)
        path = [(1, 1, 1), (2, 2, 2), (3, 2, 3), (4, 3, 3), (5, 4, 4), (6, 4, 5)]
        for v in path:
            data[v] = True
        skel = skeletonize(make_mask(data))
        assert voxel_set(data) == {tuple(v) for v in skel.voxels}

    @pytest.mark.parametrize("axis", [0, 1, 2])
    def test_bar_matches_reference_oracle(self, axis):
        dims = [5, 5, 5]
        dims[axis] = 11
        data = np.zeros(dims, bool)
        sl = [slice(1, 4)] * 3
        sl[axis] = slice(1, 10)
        data[tuple(sl)] = True
        skel = skeletonize(make_mask(data))
        assert {tuple(v) for v in skel.voxels} == thin_oracle(data)

    def test_x_bar_keeps_full_axis(self):
        # the sweep order thins the cross-section of an x-aligned bar
        # before its ends, so the full 9-voxel axis line survives
        data = np.zeros((11, 5, 5), bool)
        data[1:10, 1:4, 1:4] = True
        skel = skeletonize(make_mask(data))
        assert {tuple(v) for v in skel.voxels} == {(x, 2, 2) for x in range(1, 10)}

    def test_random_masks_match_oracle(self, rng):
        for _ in range(5):
            mask = random_mask(rng, rng.integers(4, 12, 3), density=0.55)
            skel = skeletonize(mask)
            assert {tuple(v) for v in skel.voxels} == thin_oracle(mask.data)

    def test_skeleton_subset_and_betti(self, rng):
        for _ in range(10):
            mask = random_mask(rng, rng.integers(4, 20, 3), density=0.5)
            skel = skeletonize(mask)
            sk = {tuple(v) for v in skel.voxels}
            assert sk <= voxel_set(mask.data)
            assert count_components(sk) == label_components(mask).count
            assert not has_full_block(sk)

    def test_idempotent(self, rng):
        for _ in range(5):
            mask = random_mask(rng, (12, 12, 12), density=0.5)
            skel = skeletonize(mask)
            again = skeletonize(skel.to_mask())
            assert np.array_equal(skel.voxels, again.voxels)

    def test_deterministic(self, rng):
        mask = random_mask(rng, (15, 15, 15), density=0.5)
        a = skeletonize(mask)
        b = skeletonize(mask)
        assert np.array_equal(a.voxels, b.voxels)

    def test_empty(self):
        skel = skeletonize(make_mask(np.zeros((4, 4, 4), bool)))
        assert skel.n_voxels == 0


class TestParseBranches:
    def test_straight_line(self):
        skel = parse_branches(skeletonize(line_mask(10)), Spacing(1, 1, 1))
        assert len(skel.branches) == 1
        assert skel.end_points.shape[0] == 2
        assert skel.branch_points.shape[0] == 0
        assert skel.branches[0].length_mm == pytest.approx(9.0)

    def test_y_shape(self):
        # three 6-voxel arms meeting at one junction voxel
        data = np.zeros((16, 16, 16), bool)
        c = (8, 8, 8)
        data[c] = True
        for k in range(1, 7):
            data[8, 8, 8 - k] = True       # down arm
            data[8 - k, 8, 8 + k] = True   # diagonal arm
            data[8 + k, 8, 8 + k] = True   # diagonal arm
        skel = parse_branches(skeletonize(make_mask(data)), Spacing(1, 1, 1))
        assert skel.n_voxels == 19
        assert len(skel.branches) == 3
        assert skel.end_points.shape[0] == 3
        assert skel.branch_points.shape[0] == 1
        assert tuple(skel.branch_points[0]) == c
        for b in skel.branches:
            assert b.owned.shape[0] == 6  # junction voxel owned by no branch

    def test_every_voxel_in_exactly_one_branch(self, rng):
        for _ in range(10):
            mask = random_mask(rng, rng.integers(6, 20, 3), density=0.5)
            skel = parse_branches(skeletonize(mask), Spacing(1, 1, 1))
            junction = set()
            for c in skel.junction_clusters:
                junction |= {tuple(v) for v in c}
            seen = {}
            for i, b in enumerate(skel.branches):
                for v in map(tuple, b.owned):
                    assert v not in junction
                    assert v not in seen, f"voxel {v} owned twice"
                    seen[v] = i
            all_vox = {tuple(v) for v in skel.voxels}
            assert set(seen) | junction == all_vox

    def test_branch_count_equals_contracted_edges(self, rng):
        # independent reconstruction: contract junction clusters to
        # nodes, count chain components connecting them
        for _ in range(10):
            mask = random_mask(rng, rng.integers(6, 18, 3), density=0.5)
            skel = parse_branches(skeletonize(mask), Spacing(1, 1, 1))
            junction = set()
            for c in skel.junction_clusters:
                junction |= {tuple(v) for v in c}
            chain = {tuple(v) for v in skel.voxels} - junction
            expected = count_chain_components(chain)
            assert len(skel.branches) == expected

    def test_isolated_voxel_is_zero_length_branch(self):
        data = np.zeros((5, 5, 5), bool)
        data[2, 2, 2] = True
        skel = parse_branches(skeletonize(make_mask(data)), Spacing(1, 1, 1))
        assert len(skel.branches) == 1
        assert skel.branches[0].length_mm == 0.0

    def test_cycle_is_single_branch(self):
        # a 4-voxel square loop in a plane, no junctions
        data = np.zeros((6, 6, 3), bool)
        for v in ((1, 1, 1), (1, 2, 1), (2, 2, 1), (2, 1, 1)):
            data[v] = True
        skel = parse_branches(skeletonize(make_mask(data)), Spacing(1, 1, 1))
        assert len(skel.branches) == 1
        assert skel.branches[0].is_cycle

    def test_pruning_dissolves_short_spur(self):
        # main line with a 2-voxel spur off the middle
        data = np.zeros((16, 8, 8), bool)
        data[1:13, 2, 2] = True
        data[6, 3, 3] = True
        data[6, 4, 4] = True
        m = make_mask(data)
        unpruned = parse_branches(skeletonize(m), Spacing(1, 1, 1))
        assert len(unpruned.branches) == 3
        pruned = parse_branches(skeletonize(m), Spacing(1, 1, 1), min_branch_mm=4.0)
        assert len(pruned.branches) == 2
        junction = set()
        for c in pruned.junction_clusters:
            junction |= {tuple(v) for v in c}
        assert (6, 3, 3) in junction and (6, 4, 4) in junction

    def test_paths_are_26_connected_no_repeats(self, rng):
        for _ in range(5):
            mask = random_mask(rng, (14, 14, 14), density=0.5)
            skel = parse_branches(skeletonize(mask), Spacing(1, 1, 1))
            for b in skel.branches:
                steps = np.abs(np.diff(b.path, axis=0))
                assert steps.max(initial=0) <= 1
                assert (steps.sum(axis=1) > 0).all()
                seen = set(map(tuple, b.path))
                assert len(seen) == b.path.shape[0]


def count_chain_components(chain):
    comps = 0
    left = set(chain)
    while left:
        comps += 1
        seed = next(iter(left))
        left.discard(seed)
        stack = [seed]
        while stack:
            x, y, z = stack.pop()
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        nb = (x + dx, y + dy, z + dz)
                        if nb in left:
                            left.discard(nb)
                            stack.append(nb)
    return comps


class TestTreeLength:
    def test_line_arithmetic(self):
        skel = parse_branches(skeletonize(line_mask(10, spacing=(0.5, 0.5, 0.7))))
        assert tree_length(skel) == pytest.approx(9 * 0.7)

    def test_diagonal_step(self):
        data = np.zeros((4, 4, 3), bool)
        data[1, 1, 1] = True
        data[2, 2, 1] = True
        skel = parse_branches(skeletonize(make_mask(data, spacing=(0.6, 0.8, 1.0))))
        assert tree_length(skel) == pytest.approx(1.0)  # sqrt(0.36 + 0.64)

    def test_axis_permutation_invariance(self, rng):
        mask = random_mask(rng, (10, 12, 14), density=0.5, spacing=(0.5, 0.7, 1.1))
        base = tree_length(parse_branches(skeletonize(mask)))
        permuted_data = np.transpose(mask.data, (2, 0, 1))
        permuted = make_mask(permuted_data, spacing=(1.1, 0.5, 0.7))
        assert tree_length(parse_branches(skeletonize(permuted))) == pytest.approx(base)

    def test_requires_parsed_branches(self):
        from airtree import EvaluationError

        skel = skeletonize(line_mask(5))
        with pytest.raises(EvaluationError):
            tree_length(skel)


class TestSkeletonGraphBasics:
    def test_from_voxels_orders_by_scan(self):
        voxels = np.array([[3, 1, 1], [1, 1, 1], [2, 1, 1]], dtype=np.int32)
        skel = skeleton_from_voxels(voxels, (5, 5, 5), Spacing(1, 1, 1))
        flats = flat_indices(skel.voxels, (5, 5, 5))
        assert (np.diff(flats) > 0).all()

    def test_json_export_shape(self):
        skel = parse_branches(skeletonize(line_mask(6)))
        doc = skel.to_json_dict()
        assert doc["summary"]["branches"] == 1
        assert doc["summary"]["end_points"] == 2
        assert len(doc["branches"][0]["path"]) == 6
        assert doc["branches"][0]["length_mm"] == pytest.approx(5.0)
