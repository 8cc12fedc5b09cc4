import numpy as np
import pytest
from scipy import special as sp
from scipy import stats

from trustdyn.special import betainc, chi2_sf, f_sf, gammainc, gammaincc, log_beta, t_two_sided


def test_betainc_against_scipy():
    rng = np.random.default_rng(0)
    for a, b, x in zip(rng.uniform(0.1, 200, 200), rng.uniform(0.1, 200, 200), rng.uniform(0, 1, 200)):
        assert betainc(a, b, x) == pytest.approx(sp.betainc(a, b, x), abs=1e-12)
    assert betainc(2, 3, 0.0) == 0.0 and betainc(2, 3, 1.0) == 1.0


def test_gammainc_against_scipy():
    rng = np.random.default_rng(1)
    for a, x in zip(rng.uniform(0.1, 100, 200), rng.uniform(0, 150, 200)):
        assert gammainc(a, x) == pytest.approx(sp.gammainc(a, x), abs=1e-12)
        assert gammaincc(a, x) == pytest.approx(sp.gammaincc(a, x), abs=1e-12)


def test_log_beta():
    assert log_beta(2.5, 7.0) == pytest.approx(sp.betaln(2.5, 7.0), abs=1e-13)


def test_tail_probabilities():
    assert f_sf(3.2, 2, 27) == pytest.approx(stats.f.sf(3.2, 2, 27), abs=1e-12)
    assert f_sf(0.0, 2, 27) == 1.0
    assert t_two_sided(-2.1, 14) == pytest.approx(2 * stats.t.sf(2.1, 14), abs=1e-12)
    assert chi2_sf(15.5, 8) == pytest.approx(stats.chi2.sf(15.5, 8), abs=1e-12)
    assert chi2_sf(0.0, 8) == 1.0
