import numpy as np
import pytest

from mcsvgd import io
from mcsvgd.models import CountRegressionData, Lattice, Network


def test_lattice_roundtrip(tmp_path):
    lat = Lattice(np.array([[0, 3, 1], [2, 2, 0]]), 4)
    io.write_lattice(lat, tmp_path / "l.csv")
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "1,4,2"
    back = io.read_lattice(tmp_path / "l.csv", K=4)
    np.testing.assert_array_equal(back.values, lat.values)


def test_lattice_raw_thickness(tmp_path):
    (tmp_path / "t.csv").write_text("0,250\n1000,1500\n")
    lat = io.read_lattice(tmp_path / "t.csv", raw_thickness=True)
    assert lat.K == 4 and lat.values.min() >= 0 and lat.values.max() <= 3


def test_lattice_errors(tmp_path):
    with pytest.raises(io.DataError, match="not found"):
        io.read_lattice(tmp_path / "missing.csv")
    (tmp_path / "bad.csv").write_text("1,a\n2,1\n")
    with pytest.raises(io.DataError):
        io.read_lattice(tmp_path / "bad.csv")
    (tmp_path / "frac.csv").write_text("1,1.5\n2,1\n")
    with pytest.raises(io.DataError, match="integers"):
        io.read_lattice(tmp_path / "frac.csv")


def test_counts_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    data = CountRegressionData(np.array([0, 3, 1]), rng.normal(size=(3, 2)), 1.5)
    io.write_counts(data, tmp_path / "c.csv")
    back = io.read_counts(tmp_path / "c.csv", 1.5)
    np.testing.assert_array_equal(back.y, data.y)
    np.testing.assert_array_equal(back.X, data.X)


def test_counts_errors(tmp_path):
    (tmp_path / "c.csv").write_text("count,x1\n1,0.2\n")
    with pytest.raises(io.DataError, match="'y'"):
        io.read_counts(tmp_path / "c.csv", 1.0)
    (tmp_path / "n.csv").write_text("y,x1\n-1,0.2\n")
    with pytest.raises(io.DataError, match="non-negative"):
        io.read_counts(tmp_path / "n.csv", 1.0)


def test_network_roundtrip(tmp_path):
    A = np.zeros((4, 4), dtype=np.int64)
    for i, j in [(0, 1), (1, 2), (0, 3)]:
        A[i, j] = A[j, i] = 1
    net = Network(A, np.array([7, 8, 7, 9]), np.array([0, 1, 1, 0]))
    io.write_network(net, tmp_path / "e.csv", tmp_path / "n.csv")
    back = io.read_network(tmp_path / "e.csv", tmp_path / "n.csv")
    np.testing.assert_array_equal(back.adjacency, A)
    np.testing.assert_array_equal(back.grade, net.grade)


def test_network_errors(tmp_path):
    (tmp_path / "n.csv").write_text("node,grade,sex\n0,7,0\n1,8,1\n")
    (tmp_path / "e.csv").write_text("i,j\n0,0\n")
    with pytest.raises(io.DataError, match="invalid edge"):
        io.read_network(tmp_path / "e.csv", tmp_path / "n.csv")
    (tmp_path / "e.csv").write_text("from,to\n0,1\n")
    with pytest.raises(io.DataError, match="i,j"):
        io.read_network(tmp_path / "e.csv", tmp_path / "n.csv")


def test_particles_roundtrip(tmp_path):
    x = np.random.default_rng(1).normal(size=(7, 3))
    io.write_particles(x, tmp_path / "p.csv")
    np.testing.assert_array_equal(io.read_particles(tmp_path / "p.csv"), x)


def test_trace_roundtrip(tmp_path):
    recs = [{"iteration": 100, "kl": 0.1, "ksd": 2.5, "ess_refresh_count": 3, "elapsed_seconds": 0.4},
            {"iteration": 200, "kl": None, "ksd": 1.5, "ess_refresh_count": 0, "elapsed_seconds": 0.9}]
    io.write_trace(recs, tmp_path / "t.csv")
    assert io.read_trace(tmp_path / "t.csv") == recs
