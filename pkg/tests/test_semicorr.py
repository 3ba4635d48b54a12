import numpy as np
import pytest
from scipy import stats

from factortree.copula import BVN, GUMBEL, SGUMBEL, T5, tau_to_theta
from factortree.data import CutpointSet
from factortree.model import ModelSpec, ParamVector
from factortree.semicorr import (calibrate_theta, normal_scores_corr, observed_semi_corr,
                                 semi_corr, theoretical_semi_corr)
from factortree.simulate import path_tree, sample

TABLE = {"bvn": (0.16, 0.16), "t2": (0.49, 0.49), "t5": (0.35, 0.35), "frank": (0.10, 0.10),
         "gumbel": (0.11, 0.37), "sgumbel": (0.37, 0.11)}


@pytest.mark.parametrize("family", list(TABLE))
def test_table_values(family):
    lo, up = theoretical_semi_corr(family, 0.35)
    assert lo == pytest.approx(TABLE[family][0], abs=0.01)
    assert up == pytest.approx(TABLE[family][1], abs=0.01)


def test_independence_zero():
    assert theoretical_semi_corr("independence") == (0.0, 0.0)


def test_bvn_normal_scores_identity():
    for r in (-0.5, 0.2, 0.7):
        assert normal_scores_corr(BVN, r) == pytest.approx(r, abs=1e-8)
    assert calibrate_theta("bvn", 0.35) == 0.35


def _mc_semi(z):
    out = []
    for s in (-1, 1):
        m = (s * z[:, 0] > 0) & (s * z[:, 1] > 0)
        out.append(np.corrcoef(z[m, 0], z[m, 1])[0, 1])
    return out


def test_bvn_and_t5_against_monte_carlo():
    rng = np.random.default_rng(0)
    n = 2_000_000
    r = 0.5
    z = rng.multivariate_normal([0, 0], [[1, r], [r, 1]], size=n)
    lo, up = semi_corr(BVN, r)
    mc = _mc_semi(z)
    assert lo == pytest.approx(mc[0], abs=5e-3) and up == pytest.approx(mc[1], abs=5e-3)
    x = z / np.sqrt(rng.chisquare(5, n) / 5)[:, None]
    zt = stats.norm.ppf(stats.t.cdf(x, 5))
    lo, up = semi_corr(T5, r)
    mc = _mc_semi(zt)
    assert lo == pytest.approx(mc[0], abs=5e-3) and up == pytest.approx(mc[1], abs=5e-3)
    assert normal_scores_corr(T5, r) == pytest.approx(np.corrcoef(zt.T)[0, 1], abs=3e-3)


def test_reflection_swaps_tails():
    for th in (1.3, 2.0):
        g = semi_corr(GUMBEL, th)
        s = semi_corr(SGUMBEL, th)
        assert g[0] == pytest.approx(s[1], abs=1e-10) and g[1] == pytest.approx(s[0], abs=1e-10)
        assert g[1] > g[0]


def test_calibration_hits_target():
    for fam in ("t2", "t5", "gumbel", "frank"):
        th = calibrate_theta(fam, 0.35)
        assert normal_scores_corr(fam, th) == pytest.approx(0.35, abs=1e-8)


def test_tau_calibration_option():
    lo, up = theoretical_semi_corr("frank", 0.35, calibration="tau")
    assert lo == pytest.approx(up, abs=1e-8)
    with pytest.raises(ValueError):
        theoretical_semi_corr("frank", 0.35, calibration="spearman")


def test_observed_semi_correlations_show_upper_tail():
    d = 6
    spec = ModelSpec.build(d, 1, f1=GUMBEL, tree=path_tree(d), tree_family=GUMBEL)
    par = ParamVector([tau_to_theta(GUMBEL, 0.6)] * d, delta=[1.2] * (d - 1))
    data = sample(4000, CutpointSet.equal(d, 5), spec, par, np.random.default_rng(2))
    rho, lo, up = observed_semi_corr(data)
    assert np.isfinite([rho, lo, up]).all()
    assert 0 < lo < up < rho
