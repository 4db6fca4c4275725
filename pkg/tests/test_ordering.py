import numpy as np
import pytest
import scipy.sparse
import scipy.sparse.csgraph

from ddilu.ordering import classify_and_order, partition, rcm, row_block_owner
from ddilu.problems import poisson2d
from ddilu.sparse import csr_from_dense, csr_identity, permute_symmetric

from conftest import bandwidth, path_graph


class TestPartition:
    def test_single_domain(self):
        a = poisson2d(4, 4)
        assert np.array_equal(partition(a, 1), np.zeros(16, dtype=np.int64))

    def test_box_split_of_square_grid(self):
        a = poisson2d(4, 4)
        owner = partition(a, 2, grid_hint=(4, 4))
        # x runs fastest; two domains split the x axis down the middle
        expect = np.tile([0, 0, 1, 1], 4)
        assert np.array_equal(owner, expect)

    def test_box_split_four_domains(self):
        a = poisson2d(4, 4)
        owner = partition(a, 4, grid_hint=(4, 4))
        assert np.array_equal(np.bincount(owner), [4, 4, 4, 4])
        # each domain is a contiguous 2x2 box
        for d in range(4):
            nodes = np.where(owner == d)[0]
            xs, ys = nodes % 4, nodes // 4
            assert xs.max() - xs.min() == 1 and ys.max() - ys.min() == 1

    def test_growth_fallback_sizes_are_exact(self):
        a = path_graph(10)
        owner = partition(a, 3)
        assert np.array_equal(np.sort(np.bincount(owner)), [3, 3, 4])

    def test_growth_fallback_is_deterministic(self):
        a = poisson2d(6, 6)
        assert np.array_equal(partition(a, 4), partition(a, 4))

    def test_growth_regions_are_connected(self):
        a = poisson2d(8, 8)
        owner = partition(a, 4)
        g = scipy.sparse.csr_matrix(
            (a.values, a.col_idx, a.row_ptr), shape=a.shape
        )
        for d in range(4):
            nodes = np.where(owner == d)[0]
            sub = g[np.ix_(nodes, nodes)]
            ncomp, _ = scipy.sparse.csgraph.connected_components(sub, directed=False)
            assert ncomp == 1

    def test_more_domains_than_nodes(self):
        with pytest.raises(ValueError):
            partition(csr_identity(3), 4)

    def test_nonpositive_domain_count(self):
        with pytest.raises(ValueError):
            partition(csr_identity(3), 0)

    def test_bad_grid_hint(self):
        with pytest.raises(ValueError):
            partition(poisson2d(4, 4), 2, grid_hint=(5, 5))


class TestRowBlockOwner:
    def test_even_split(self):
        assert np.array_equal(row_block_owner(6, 3), [0, 0, 1, 1, 2, 2])

    def test_remainder_goes_to_leading_blocks(self):
        assert np.array_equal(row_block_owner(7, 3), [0, 0, 0, 1, 1, 2, 2])

    def test_single_block(self):
        assert np.array_equal(row_block_owner(4, 1), np.zeros(4))

    def test_slabs_on_grid(self):
        # on a 4x4 grid with x fastest, two blocks are the lower and upper
        # halves in y
        owner = row_block_owner(16, 2)
        assert np.array_equal(owner, np.repeat([0, 1], 8))
        layout = classify_and_order(poisson2d(4, 4), owner)
        assert layout.n_exterior == 8

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            row_block_owner(3, 0)
        with pytest.raises(ValueError):
            row_block_owner(3, 4)


class TestClassifyAndOrder:
    def test_single_domain_has_no_exterior(self):
        a = poisson2d(3, 3)
        layout = classify_and_order(a, np.zeros(9, dtype=np.int64))
        assert layout.n_interior == 9
        assert layout.n_exterior == 0
        assert len(layout.exterior_of[0]) == 0

    def test_path_split_marks_the_cut_edge(self):
        a = path_graph(6)
        owner = np.array([0, 0, 0, 1, 1, 1])
        layout = classify_and_order(a, owner)
        assert np.array_equal(layout.interior_of[0], [0, 1])
        assert np.array_equal(layout.exterior_of[0], [2])
        assert np.array_equal(layout.interior_of[1], [4, 5])
        assert np.array_equal(layout.exterior_of[1], [3])

    def test_dense_coupling_makes_everything_exterior(self):
        a = csr_from_dense(np.ones((4, 4)))
        layout = classify_and_order(a, np.array([0, 0, 1, 1]))
        assert layout.n_interior == 0
        assert layout.n_exterior == 4

    def test_one_sided_coupling_marks_both_endpoints(self):
        d = np.eye(4)
        d[0, 3] = 1.0  # directed edge only
        layout = classify_and_order(csr_from_dense(d), np.array([0, 0, 1, 1]))
        assert np.array_equal(layout.exterior_of[0], [0])
        assert np.array_equal(layout.exterior_of[1], [3])

    def test_interior_block_is_block_diagonal(self):
        a = poisson2d(8, 8)
        owner = partition(a, 4, grid_hint=(8, 8))
        layout = classify_and_order(a, owner)
        b = permute_symmetric(a, layout.global_perm)
        dense_b = b.to_dense()
        ni = layout.n_interior
        starts = layout.interior_starts
        for d in range(4):
            rows = slice(starts[d], starts[d + 1])
            inside = dense_b[rows, :ni].copy()
            inside[:, starts[d]:starts[d + 1]] = 0.0
            assert np.count_nonzero(inside) == 0

    def test_global_perm_places_interiors_first(self):
        a = poisson2d(6, 6)
        owner = partition(a, 2, grid_hint=(6, 6))
        layout = classify_and_order(a, owner)
        order = layout.global_perm.inverse
        expect = np.concatenate(layout.interior_of + layout.exterior_of)
        assert np.array_equal(order, expect)

    def test_deterministic(self):
        a = poisson2d(6, 6)
        owner = partition(a, 3, grid_hint=(6, 6))
        l1 = classify_and_order(a, owner)
        l2 = classify_and_order(a, owner)
        assert np.array_equal(l1.global_perm.forward, l2.global_perm.forward)
        assert l1.n_interior == l2.n_interior

    def test_wrong_owner_length(self):
        with pytest.raises(ValueError):
            classify_and_order(csr_identity(3), np.zeros(4, dtype=np.int64))

    def test_owner_out_of_range(self):
        with pytest.raises(ValueError):
            classify_and_order(csr_identity(3), np.array([0, 1, 2]), p=2)


class TestRcm:
    def test_single_node(self):
        p = rcm(csr_identity(1))
        assert np.array_equal(p.forward, [0])

    def test_reversed_path_recovers_bandwidth_one(self):
        a = path_graph(8, order=np.arange(8)[::-1])
        p = rcm(a)
        assert bandwidth(permute_symmetric(a, p)) == 1

    def test_scrambled_paths_get_bandwidth_one(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 30))
            a = path_graph(n, order=rng.permutation(n))
            assert bandwidth(permute_symmetric(a, rcm(a))) == 1

    def test_never_worse_than_scipy_by_much(self, rng):
        for _ in range(20):
            n = 40
            d = np.zeros((n, n))
            for _e in range(3 * n):
                i, j = rng.integers(0, n, 2)
                if i != j:
                    d[i, j] = d[j, i] = 1.0
            d += np.eye(n) * (np.sum(d, axis=1) + 1.0)
            a = csr_from_dense(d)
            ours = bandwidth(permute_symmetric(a, rcm(a)))
            g = scipy.sparse.csr_matrix((a.values, a.col_idx, a.row_ptr), shape=a.shape)
            sp_order = scipy.sparse.csgraph.reverse_cuthill_mckee(g, symmetric_mode=True)
            theirs = bandwidth(csr_from_dense(d[np.ix_(sp_order, sp_order)]))
            assert ours <= 2 * theirs + 2

    def test_disconnected_components_give_valid_permutation(self):
        d = np.zeros((6, 6))
        d[0, 1] = d[1, 0] = 1.0
        d[3, 4] = d[4, 3] = 1.0
        np.fill_diagonal(d, 2.0)
        p = rcm(csr_from_dense(d))
        assert np.array_equal(np.sort(p.forward), np.arange(6))

    def test_deterministic(self):
        a = poisson2d(7, 5)
        assert np.array_equal(rcm(a).forward, rcm(a).forward)

    def test_rejects_rectangular(self):
        d = np.ones((2, 3))
        with pytest.raises(ValueError):
            rcm(csr_from_dense(d))
