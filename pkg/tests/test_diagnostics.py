import math

import numpy as np
import pytest

from mcsvgd.diagnostics import (effective_sample_size, finite_diff_score, hpd_interval, ksd_vstat,
                                read_summary_csv, summarize, write_summary_csv)
from mcsvgd.kernel import KernelConfig
from mcsvgd.models import COMPModel, Lattice, PottsModel
from mcsvgd.svgd import ParticleSet


def gauss_score(x):
    return -np.asarray(x)


def test_ksd_single_particle():
    for d, h in [(1, 1.0), (3, 0.5)]:
        cfg = KernelConfig(h, "fixed")
        val = ksd_vstat(np.zeros((1, d)), np.zeros((1, d)), cfg)
        assert val == pytest.approx(math.sqrt(2 * d / h), rel=1e-12)


def ksd_loop(x, s, h):
    n, d = x.shape
    tot = 0.0
    for i in range(n):
        for j in range(n):
            r = x[i] - x[j]
            k = math.exp(-(r @ r) / h)
            tot += k * (s[i] @ s[j] + 2 / h * (s[i] @ r - s[j] @ r) + 2 * d / h - 4 * (r @ r) / h**2)
    return math.sqrt(tot / n**2)


@pytest.mark.parametrize("h", [0.4, 1.0, 3.0])
def test_ksd_matches_double_loop(h):
    rng = np.random.default_rng(7)
    x = rng.normal(size=(25, 2))
    s = rng.normal(size=(25, 2))
    assert ksd_vstat(x, s, KernelConfig(h, "fixed")) == pytest.approx(ksd_loop(x, s, h), rel=1e-10)


def test_ksd_callable_matches_array():
    x = np.random.default_rng(0).normal(size=(40, 2))
    assert ksd_vstat(x, gauss_score) == pytest.approx(ksd_vstat(x, -x), rel=1e-14)


def test_ksd_shrinks_with_sample_size_and_grows_with_shift():
    rng = np.random.default_rng(1)
    small = np.mean([ksd_vstat(x, -x) for x in rng.normal(size=(10, 50, 1))])
    large = np.mean([ksd_vstat(x, -x) for x in rng.normal(size=(10, 800, 1))])
    assert large < small
    shifted = rng.normal(1.0, 1, size=(800, 1))
    assert ksd_vstat(shifted, -shifted) > 2.5 * large


def test_ksd_shape_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        ksd_vstat(np.zeros((3, 2)), np.zeros((3, 3)))


def test_hpd_examples():
    assert hpd_interval(np.arange(1, 101)) == (1.0, 95.0)
    assert hpd_interval(np.full(50, 2.5)) == (2.5, 2.5)
    lo, hi = hpd_interval(np.random.default_rng(2).normal(size=200_000))
    assert abs(lo + 1.96) < 0.03 and abs(hi - 1.96) < 0.03


def test_hpd_errors():
    with pytest.raises(ValueError):
        hpd_interval([])
    with pytest.raises(ValueError):
        hpd_interval([1.0, 2.0], prob=1.0)


def test_summarize_and_csv_roundtrip(tmp_path):
    x = np.column_stack([np.arange(1, 101), np.full(100, 3.0)]).astype(float)
    rows = summarize(ParticleSet(x))
    assert [r.coordinate for r in rows] == [1, 2]
    assert rows[0].mean == 50.5 and (rows[0].hpd_low, rows[0].hpd_high) == (1.0, 95.0)
    write_summary_csv(rows, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "coord,mean,hpd_low,hpd_high,prob"
    assert read_summary_csv(tmp_path / "s.csv") == rows


def test_finite_diff_score_matches_analytic():
    lat = Lattice(np.array([[0, 1, 1], [0, 0, 1]]), 2)
    m = PottsModel((2, 3), 2)
    assert finite_diff_score(m, lat, [0.3])[0] == pytest.approx(m.suffstats(lat)[0], rel=1e-8)
    rng = np.random.default_rng(3)
    cm = COMPModel(rng.normal(0, 0.5, (20, 2)), 1.3)
    y = cm.simulate_counts([0.5, -0.2], rng)
    theta = np.array([0.4, 0.1])
    np.testing.assert_allclose(finite_diff_score(cm, y, theta), cm.score_h(cm.suffstats(y), theta),
                               rtol=1e-6)


def test_ess_of_independent_and_sticky_chains():
    rng = np.random.default_rng(4)
    iid = rng.normal(size=5000)
    assert 3500 < effective_sample_size(iid) < 6500
    ar = np.empty(5000)
    ar[0] = 0.0
    for t in range(1, 5000):
        ar[t] = 0.95 * ar[t - 1] + rng.normal()
    # integrated autocorrelation time of AR(1) is (1 + a) / (1 - a) = 39
    assert 5000 / 80 < effective_sample_size(ar) < 5000 / 20
