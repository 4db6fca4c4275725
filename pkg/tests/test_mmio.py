import numpy as np
import pytest

from ddilu.mmio import read_matrix_market, write_matrix_market
from ddilu.sparse import csr_from_dense


def test_roundtrip_general(tmp_path, rng):
    d = rng.standard_normal((7, 5))
    d[rng.random((7, 5)) < 0.5] = 0.0
    a = csr_from_dense(d)
    path = tmp_path / "general.mtx"
    write_matrix_market(path, a)
    b = read_matrix_market(path)
    assert b.shape == a.shape
    assert np.array_equal(b.to_dense(), d)


def test_roundtrip_symmetric_expands_triangle(tmp_path, rng):
    d = rng.standard_normal((6, 6))
    d = d + d.T
    d[np.abs(d) < 0.8] = 0.0
    d = (d + d.T) / 2.0
    a = csr_from_dense(d)
    path = tmp_path / "sym.mtx"
    write_matrix_market(path, a, symmetric=True)
    header = path.read_text().splitlines()[0]
    assert "symmetric" in header
    b = read_matrix_market(path)
    assert np.array_equal(b.to_dense(), d)
    n_diag = int(np.count_nonzero(np.diag(d)))
    stored = sum(
        1 for line in path.read_text().splitlines()
        if line and not line.startswith("%")
    ) - 1  # size line
    assert a.nnz == 2 * (stored - n_diag) + n_diag


def test_indices_are_one_based_on_disk(tmp_path):
    path = tmp_path / "one.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real general\n"
        "2 2 1\n"
        "1 2 3.5\n"
    )
    a = read_matrix_market(path)
    assert np.array_equal(a.to_dense(), [[0.0, 3.5], [0.0, 0.0]])


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_matrix_market(tmp_path / "absent.mtx")


def test_malformed_header(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("not a matrix market file\n1 1 1\n1 1 1.0\n")
    with pytest.raises(ValueError):
        read_matrix_market(path)


def test_complex_field_rejected(tmp_path):
    path = tmp_path / "cplx.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate complex general\n"
        "1 1 1\n"
        "1 1 1.0 0.0\n"
    )
    with pytest.raises(ValueError):
        read_matrix_market(path)


def test_dense_array_format_rejected(tmp_path):
    path = tmp_path / "arr.mtx"
    path.write_text(
        "%%MatrixMarket matrix array real general\n"
        "2 1\n"
        "1.0\n"
        "2.0\n"
    )
    with pytest.raises(ValueError):
        read_matrix_market(path)


def test_skew_symmetry_rejected(tmp_path):
    path = tmp_path / "skew.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real skew-symmetric\n"
        "2 2 1\n"
        "2 1 1.0\n"
    )
    with pytest.raises(ValueError):
        read_matrix_market(path)


def test_out_of_range_index_rejected(tmp_path):
    path = tmp_path / "oob.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real general\n"
        "2 2 1\n"
        "3 1 1.0\n"
    )
    with pytest.raises(ValueError):
        read_matrix_market(path)


def test_symmetric_write_rejects_nonsymmetric():
    a = csr_from_dense(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        write_matrix_market("/dev/null", a, symmetric=True)
