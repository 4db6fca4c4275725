import numpy as np
import pytest

from ddilu.factor import (
    FillRule,
    MiluVectors,
    extract_two_level_blocks,
    factorize,
    ilu0,
    iluk,
    ilut,
    milu0,
    partial_ilu,
)
from ddilu.problems import poisson2d
from ddilu.sparse import csr_from_dense, spmv

from conftest import (
    dense_lu_nopivot,
    dense_schur,
    fill_levels_dense,
    path_graph,
    random_pattern_symmetric,
    random_spd_dense,
)


def lu_dense(f):
    """Dense (L, U) with the implicit unit diagonal restored."""
    lo = f.lower.to_dense() + np.eye(f.n)
    return lo, f.upper.to_dense()


def tridiag(n):
    return path_graph(n)


class TestFillRule:
    def test_parse_and_str_roundtrip(self):
        for text in ("ilu0", "iluk:2", "ilut:0.01,10"):
            assert str(FillRule.parse(text)) == text

    def test_parse_fields(self):
        r = FillRule.parse("ilut:0.5,7")
        assert r.kind == "ilut" and r.tau == 0.5 and r.maxfill == 7
        assert FillRule.parse("iluk:3").level == 3

    @pytest.mark.parametrize("bad", ["iluk", "ilut:0.1", "bogus", "ilu0:1"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            FillRule.parse(bad)

    def test_validation(self):
        with pytest.raises(ValueError):
            FillRule("iluk", level=-1)
        with pytest.raises(ValueError):
            FillRule("ilut", tau=-0.1, maxfill=5)
        with pytest.raises(ValueError):
            FillRule("ilut", tau=0.1, maxfill=0)


class TestIlu0:
    def test_diagonal_matrix(self):
        a = csr_from_dense(np.diag([2.0, 3.0, 4.0]))
        f = ilu0(a)
        assert f.lower.nnz == 0
        assert np.array_equal(f.upper.to_dense(), np.diag([2.0, 3.0, 4.0]))
        assert f.kind == "ilu0"

    def test_tridiagonal_pivots_exact(self):
        a = tridiag(3)
        f = ilu0(a)
        u = f.upper.to_dense()
        assert u[0, 0] == 2.0
        assert u[1, 1] == 1.5
        assert abs(u[2, 2] - 4.0 / 3.0) < 1e-15
        l_ref, u_ref = dense_lu_nopivot(a.to_dense())
        lo, up = lu_dense(f)
        assert np.max(np.abs(lo - l_ref)) < 1e-15
        assert np.max(np.abs(up - u_ref)) < 1e-15

    def test_residual_vanishes_on_pattern(self):
        a = poisson2d(4, 4)
        f = ilu0(a)
        lo, up = lu_dense(f)
        resid = a.to_dense() - lo @ up
        mask = a.to_dense() != 0.0
        assert np.max(np.abs(resid[mask])) <= 1e-14 * np.max(np.abs(a.values))

    def test_residual_on_pattern_random(self, rng):
        for _ in range(30):
            n = int(rng.integers(5, 25))
            a = random_pattern_symmetric(rng, n)
            d = a.to_dense()
            f = ilu0(a)
            lo, up = lu_dense(f)
            resid = d - lo @ up
            scale = np.max(np.abs(d))
            assert np.max(np.abs(resid[d != 0.0])) <= 1e-12 * scale

    def test_safeguard_replaces_zero_pivot(self):
        a = csr_from_dense(np.array([[0.0, 1.0], [1.0, 0.0]]), keep_zeros=True)
        f = ilu0(a)
        assert f.upper.to_dense()[0, 0] == 1e-6  # delta * max|row|, zero goes +

    def test_safeguard_keeps_sign(self):
        a = csr_from_dense(np.array([[-1e-9, 1.0], [0.0, 1.0]]))
        f = ilu0(a)
        assert f.upper.to_dense()[0, 0] == -1e-6

    def test_solve_inverts_lu(self, rng):
        a = tridiag(6)
        f = ilu0(a)  # exact for tridiagonal
        b = rng.standard_normal(6)
        x = f.solve(b)
        assert np.max(np.abs(spmv(a, x) - b)) < 1e-12

    def test_lu_matvec_matches_dense(self, rng):
        a = poisson2d(3, 3)
        f = ilu0(a)
        lo, up = lu_dense(f)
        y = rng.standard_normal(9)
        assert np.max(np.abs(f.lu_matvec(y) - lo @ (up @ y))) < 1e-13

    def test_deterministic_bitwise(self):
        a = poisson2d(5, 5)
        f1, f2 = ilu0(a), ilu0(a)
        assert np.array_equal(f1.lower.values, f2.lower.values)
        assert np.array_equal(f1.upper.values, f2.upper.values)

    def test_rejects_rectangular(self):
        with pytest.raises(ValueError):
            ilu0(csr_from_dense(np.ones((2, 3))))


class TestIluk:
    def test_level_zero_is_ilu0_bitwise(self):
        a = poisson2d(4, 3)
        f0 = ilu0(a)
        fk = iluk(a, 0)
        assert np.array_equal(fk.lower.values, f0.lower.values)
        assert np.array_equal(fk.upper.values, f0.upper.values)
        assert np.array_equal(fk.upper.col_idx, f0.upper.col_idx)

    def test_high_level_is_exact(self, rng):
        d = random_spd_dense(rng, 10)
        d[np.abs(d) < 0.3] = 0.0
        d = (d + d.T) / 2 + 10 * np.eye(10)
        a = csr_from_dense(d)
        f = iluk(a, 10)
        l_ref, u_ref = dense_lu_nopivot(d)
        lo, up = lu_dense(f)
        scale = np.max(np.abs(d))
        assert np.max(np.abs(lo - l_ref)) <= 1e-12 * scale
        assert np.max(np.abs(up - u_ref)) <= 1e-12 * scale

    def test_pattern_matches_fill_level_oracle(self, rng):
        for _ in range(25):
            n = int(rng.integers(3, 9))
            a = random_pattern_symmetric(rng, n, extra=n)
            d = a.to_dense()
            lev = fill_levels_dense(d != 0.0)
            for k in (0, 1, 2, 3):
                f = iluk(a, k)
                got = (f.lower.to_dense() != 0.0) | (f.upper.to_dense() != 0.0)
                np.fill_diagonal(got, True)  # diagonal always stored
                expect = lev <= k
                # compare patterns structurally: factor stores position j of
                # row i exactly when the fill level allows it
                stored = np.zeros((n, n), dtype=bool)
                lo, up = f.lower, f.upper
                for i in range(n):
                    stored[i, lo.col_idx[lo.row_ptr[i]:lo.row_ptr[i + 1]]] = True
                    stored[i, up.col_idx[up.row_ptr[i]:up.row_ptr[i + 1]]] = True
                assert np.array_equal(stored, expect)

    def test_levels_nest(self, rng):
        a = random_pattern_symmetric(rng, 12, extra=12)
        prev = -1
        for k in range(4):
            f = iluk(a, k)
            nnz = f.lower.nnz + f.upper.nnz
            assert nnz >= prev
            prev = nnz

    def test_kind_label(self):
        assert iluk(tridiag(3), 2).kind == "iluk:2"

    def test_negative_level_rejected(self):
        with pytest.raises(ValueError):
            iluk(tridiag(3), -1)


class TestIlut:
    def test_no_dropping_is_exact(self, rng):
        d = random_spd_dense(rng, 12)
        a = csr_from_dense(d)
        f = ilut(a, 0.0, 12)
        l_ref, u_ref = dense_lu_nopivot(d)
        lo, up = lu_dense(f)
        scale = np.max(np.abs(d))
        assert np.max(np.abs(lo - l_ref)) <= 1e-12 * scale
        assert np.max(np.abs(up - u_ref)) <= 1e-12 * scale

    def test_huge_tau_keeps_diagonal_only(self):
        a = poisson2d(3, 3)
        f = ilut(a, 10.0, 5)
        assert f.lower.nnz == 0
        u = f.upper.to_dense()
        assert np.count_nonzero(u - np.diag(np.diag(u))) == 0
        assert np.array_equal(np.diag(u), np.full(9, 4.0))

    def test_tridiagonal_matches_ilu0(self):
        a = tridiag(7)
        f0 = ilu0(a)
        ft = ilut(a, 0.0, 2)
        lo0, up0 = lu_dense(f0)
        lot, upt = lu_dense(ft)
        assert np.array_equal(lot, lo0)
        assert np.array_equal(upt, up0)

    def test_tie_breaks_toward_smaller_column(self):
        d = np.array([
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.5, 0.5, 2.0],
        ])
        f = ilut(csr_from_dense(d), 0.0, 1)
        lo = f.lower
        cols = lo.col_idx[lo.row_ptr[2]:lo.row_ptr[3]]
        assert np.array_equal(cols, [0])

    def test_maxfill_caps_each_part(self, rng):
        d = random_spd_dense(rng, 15)
        f = ilut(csr_from_dense(d), 0.0, 3)
        for i in range(15):
            assert f.lower.row_ptr[i + 1] - f.lower.row_ptr[i] <= 3
            assert f.upper.row_ptr[i + 1] - f.upper.row_ptr[i] <= 3 + 1  # diagonal extra

    def test_kind_label(self):
        assert ilut(tridiag(3), 0.01, 5).kind == "ilut:0.01,5"


class TestMilu0:
    def test_tridiagonal_equals_ilu0(self):
        a = tridiag(6)
        fm = milu0(a)
        f0 = ilu0(a)
        assert np.array_equal(fm.lower.values, f0.lower.values)
        assert np.array_equal(fm.upper.values, f0.upper.values)
        assert fm.kind == "milu0"

    def test_row_sums_preserved_on_grid(self):
        a = poisson2d(8, 8)
        f = milu0(a)
        ones = np.ones(64)
        lhs = f.lu_matvec(ones)
        rhs = spmv(a, ones)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(a.values))

    def test_general_target_identity(self, rng):
        for _ in range(20):
            n = int(rng.integers(4, 21))
            d = random_spd_dense(rng, n)
            d[np.abs(d) < 0.2] = 0.0
            d = (d + d.T) / 2 + n * np.eye(n)
            a = csr_from_dense(d)
            y = rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)
            w = rng.standard_normal(n)
            f = milu0(a, MiluVectors(y=y, z=np.empty(0), w=w))
            lhs = f.lu_matvec(y)
            rhs = spmv(a, y) - w
            scale = max(np.max(np.abs(rhs)), 1.0)
            assert np.max(np.abs(lhs - rhs)) <= 1e-11 * scale

    def test_zero_target_rejected(self):
        a = tridiag(3)
        with pytest.raises(ValueError):
            milu0(a, MiluVectors(y=np.array([1.0, 0.0, 1.0]), z=np.empty(0),
                                 w=np.zeros(3)))

    def test_wrong_length_rejected(self):
        a = tridiag(3)
        with pytest.raises(ValueError):
            milu0(a, MiluVectors(y=np.ones(2), z=np.empty(0), w=np.zeros(2)))


class TestPartialIlu:
    def test_worked_example_no_dropping(self):
        a = poisson2d(2, 2)
        pf = partial_ilu(a, 2, FillRule("ilut", tau=0.0, maxfill=8))
        expect = np.array([[56.0, -16.0], [-16.0, 56.0]]) / 15.0
        assert np.max(np.abs(pf.s_tilde.to_dense() - expect)) == 0.0

    def test_worked_example_confined(self):
        a = poisson2d(2, 2)
        pf = partial_ilu(a, 2, FillRule("ilu0"))
        expect = np.array([[15.0 / 4.0, -1.0], [-1.0, 56.0 / 15.0]])
        assert np.max(np.abs(pf.s_tilde.to_dense() - expect)) == 0.0
        assert np.array_equal(pf.w_block.to_dense(),
                              [[-0.25, 0.0], [0.0, -4.0 / 15.0]])
        assert np.array_equal(pf.z_block.to_dense(),
                              [[-1.0, 0.0], [0.0, -1.0]])

    def test_full_interior_recovers_plain_factorization(self):
        a = poisson2d(3, 4)
        pf = partial_ilu(a, 12, FillRule("ilu0"))
        f = ilu0(a)
        assert np.array_equal(pf.interior.lower.values, f.lower.values)
        assert np.array_equal(pf.interior.upper.values, f.upper.values)
        assert pf.s_tilde.shape == (0, 0)
        assert pf.w_block.shape == (0, 12)
        assert pf.z_block.shape == (12, 0)

    def test_zero_interior_leaves_matrix_untouched(self):
        a = poisson2d(3, 3)
        pf = partial_ilu(a, 0, FillRule("ilu0"))
        assert np.array_equal(pf.s_tilde.to_dense(), a.to_dense())

    def test_block_diagonal_input_gives_trivial_coupling(self):
        d = np.zeros((5, 5))
        d[:3, :3] = random_spd_dense(np.random.default_rng(3), 3)
        d[3:, 3:] = [[4.0, -1.0], [-1.0, 4.0]]
        a = csr_from_dense(d)
        pf = partial_ilu(a, 3, FillRule("ilu0"))
        assert pf.w_block.nnz == 0
        assert pf.z_block.nnz == 0
        assert np.array_equal(pf.s_tilde.to_dense(), d[3:, 3:])

    def test_no_dropping_matches_dense_schur(self, rng):
        for _ in range(15):
            n = int(rng.integers(6, 41))
            d = random_spd_dense(rng, n)
            ni = int(rng.integers(1, n))
            a = csr_from_dense(d)
            pf = partial_ilu(a, ni, FillRule("ilut", tau=0.0, maxfill=n))
            expect = dense_schur(d, ni)
            scale = np.max(np.abs(d))
            assert np.max(np.abs(pf.s_tilde.to_dense() - expect)) <= 1e-11 * scale

    def test_confined_schur_pattern(self):
        a = poisson2d(6, 6)
        ni = 20
        pf = partial_ilu(a, ni, FillRule("ilu0"))
        c_pattern = a.to_dense()[ni:, ni:] != 0.0
        np.fill_diagonal(c_pattern, True)
        got = pf.s_tilde.to_dense() != 0.0
        assert not np.any(got & ~c_pattern)

    def test_schur_drop_tol_thins_rows(self, rng):
        d = random_spd_dense(rng, 20)
        a = csr_from_dense(d)
        dense_pf = partial_ilu(a, 12, FillRule("ilut", tau=0.0, maxfill=20))
        thin_pf = partial_ilu(a, 12, FillRule("ilut", tau=0.0, maxfill=20),
                              schur_drop_tol=0.2)
        assert thin_pf.s_tilde.nnz < dense_pf.s_tilde.nnz
        # diagonal survives
        sd = thin_pf.s_tilde.to_dense()
        assert np.all(np.diag(sd) != 0.0)

    def test_schur_factors_present_by_default(self):
        a = poisson2d(4, 4)
        pf = partial_ilu(a, 10, FillRule("ilu0"))
        assert pf.schur is not None
        assert pf.schur.n == 6
        none_pf = partial_ilu(a, 10, FillRule("ilu0"), factor_schur=False)
        assert none_pf.schur is None

    def test_interior_size_out_of_range(self):
        with pytest.raises(ValueError):
            partial_ilu(poisson2d(2, 2), 5, FillRule("ilu0"))


class TestExtractTwoLevelBlocks:
    def test_matches_partial_route_for_ilu0(self):
        a = poisson2d(5, 5)
        ni = 15
        blocks = extract_two_level_blocks(ilu0(a), ni)
        pf = partial_ilu(a, ni, FillRule("ilu0"))
        assert np.array_equal(blocks.interior.lower.to_dense(),
                              pf.interior.lower.to_dense())
        assert np.array_equal(blocks.interior.upper.to_dense(),
                              pf.interior.upper.to_dense())
        assert np.array_equal(blocks.w_tilde.to_dense(), pf.w_block.to_dense())
        assert np.array_equal(blocks.z_tilde.to_dense(), pf.z_block.to_dense())
        # trailing factor blocks act as an ilu0 of the confined Schur block
        sf = factorize(pf.s_tilde, FillRule("ilu0"))
        tol = 1e-13 * np.max(np.abs(a.values))
        assert np.max(np.abs(blocks.schur.lower.to_dense()
                             - sf.lower.to_dense())) <= tol
        assert np.max(np.abs(blocks.schur.upper.to_dense()
                             - sf.upper.to_dense())) <= tol

    def test_kind_propagates(self):
        a = poisson2d(3, 3)
        blocks = extract_two_level_blocks(iluk(a, 2), 5)
        assert blocks.interior.kind == "iluk:2"
        assert blocks.schur.kind == "iluk:2"
