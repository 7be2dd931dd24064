import math
import random

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from intdiff import analysis
from intdiff.analysis import (
    RateParams,
    check_beta_conditions,
    eval_grid,
    integrated_variance_factor,
    maae,
    moment_check_diffusion,
    moment_check_drift,
    rate_diffusion,
    rate_diffusion_terms,
    rate_drift,
    rate_fit,
    rate_remark2,
)
from intdiff.errors import ConditionNotApplicableError, InvalidEstimateError, ParameterError
from intdiff.estimators import EstimateCurve
from intdiff.sde import SdeModel, make_ou_model

PTS = np.array([0.0, 0.5, 1.0])


def curve(values, pts=PTS):
    v = np.asarray(values, float)
    return EstimateCurve(np.asarray(pts, float), v, np.ones_like(v), 0.1, 10)


def zero(x):
    return 0.0 * x


def test_maae_examples():
    assert maae([curve([0, 0, 0])], zero).maae == 0.0
    rep = maae([curve([0.1, -0.3, 0.2])], zero)
    assert rep.maae == pytest.approx(0.3) and rep.nan_count == 0
    rep = maae([curve([0.2, 0, 0]), curve([0, -0.4, 0])], zero)
    assert rep.maae == pytest.approx(0.3)
    assert rep.per_replication_max_err.tolist() == [0.2, 0.4]


def test_maae_errors():
    with pytest.raises(InvalidEstimateError) as info:
        maae([curve([0, 0, 0]), curve([0, math.nan, 0])], zero)
    assert (info.value.replication, info.value.point) == (1, 1)
    with pytest.raises(ParameterError):
        maae([curve([0, 0, 0]), curve([0, 0, 0], pts=[0, 0.5, 2.0])], zero)
    with pytest.raises(ParameterError):
        maae([], zero)


@given(errs=st.lists(st.lists(st.floats(-5, 5), min_size=3, max_size=3), min_size=1, max_size=8), k=st.integers(0, 7))
def test_maae_properties(errs, k):
    curves = [curve(e) for e in errs]
    base = maae(curves, zero).maae
    assert base >= 0
    assert maae(curves[::-1], zero).maae == pytest.approx(base, rel=1e-12, abs=1e-300)
    bumped = [list(e) for e in errs]
    k %= len(errs)
    bumped[k][0] = abs(bumped[k][0]) + 1.0
    assert maae([curve(e) for e in bumped], zero).maae >= base
    assert np.mean(maae(curves, zero).per_replication_max_err) == pytest.approx(base, rel=1e-12, abs=1e-300)


def test_eval_grid():
    assert eval_grid(0, 1, 3).tolist() == [0.0, 0.5, 1.0]
    g = eval_grid(0.078, 0.09, 50)
    assert len(g) == 50 and np.allclose(np.diff(g), 0.012 / 49, rtol=1e-10)
    assert eval_grid(-2.79, -2.7, 2).tolist() == [-2.79, -2.7]
    with pytest.raises(ParameterError):
        eval_grid(1, 1, 5)
    with pytest.raises(ParameterError):
        eval_grid(0, 1, 1)


def test_rate_remark2():
    mp.mp.dps = 40
    assert rate_remark2(1000) == pytest.approx(float(mp.power(mp.log(1000) ** 3 / 1000, 0.4)), rel=1e-14)
    assert rate_remark2(1000) == pytest.approx(0.641511, abs=1e-6)
    assert rate_remark2(9000) < rate_remark2(1000)
    grid = [1000, 3000, 5000, 7000, 9000]
    assert all(rate_remark2(a) > rate_remark2(b) for a, b in zip(grid, grid[1:]))
    with pytest.raises(ParameterError):
        rate_remark2(1)


@given(n=st.integers(21, 10**7))
def test_rate_remark2_decreasing(n):
    assert rate_remark2(n + 1) < rate_remark2(n)


def oracle_diffusion(d, h, n, q):
    mp.mp.dps = 40
    d, h, q = mp.mpf(d), mp.mpf(h), mp.mpf(q)
    return d * h ** (-1 / (1 + q)) + mp.sqrt(mp.log(n) ** 3 / (n * h)) + h**2


def oracle_drift(d, h, T, q, tb):
    mp.mp.dps = 40
    d, h, T, q, tb = map(mp.mpf, (d, h, T, q, tb))
    return d ** (mp.mpf(1) / 2 - 1 / (2 + q)) + mp.sqrt(mp.log(T) / (T**tb * h)) + h**2


def test_rate_examples():
    p = RateParams(q=38)
    n = 1000
    assert rate_diffusion(0.0, 1.0, n, p) == pytest.approx(math.sqrt(math.log(n) ** 3 / n) + 1, rel=1e-14)
    disc, var, smooth = rate_diffusion_terms(0.008, 0.12, 9000, p)
    assert var > smooth > disc
    assert rate_diffusion_terms(0.008, 0.24, 9000, p)[2] == 4 * smooth
    assert rate_diffusion(0.008, 0.12, 9000, p) == pytest.approx(float(oracle_diffusion(0.008, 0.12, 9000, 38)), rel=1e-13)
    pd = RateParams(q=38, theta_bar=0.9)
    assert rate_drift(0.004, 0.3046, 20.0, pd) == pytest.approx(0.979948107707770, rel=1e-12)
    p998 = RateParams(q=998)
    d, h, T = 0.01, 0.5, 50.0
    assert analysis.rate_drift_terms(d, h, T, p998)[0] == pytest.approx(d ** (0.5 - 1 / 1000), rel=1e-14)
    assert analysis.rate_drift_terms(d, h, T, p998)[2] == h * h
    with pytest.raises(ParameterError):
        rate_drift(0.01, 0.1, 1.0, p)
    with pytest.raises(ParameterError):
        rate_diffusion(0.01, 0.1, 1000, "not params")


def _random_params(rnd):
    return RateParams(
        q=rnd.uniform(0.5, 200),
        theta=rnd.uniform(0.01, 0.99),
        kappa_exp=rnd.uniform(0.01, 0.49),
        theta_bar=rnd.uniform(0.01, 0.99),
        kappa_bar=rnd.uniform(0.01, 3),
        beta_mix=rnd.uniform(0.1, 60),
    )


def test_rates_match_oracle_on_random_tuples():
    rnd = random.Random(2024)
    for _ in range(50):
        p = _random_params(rnd)
        d, h, n = rnd.uniform(1e-4, 0.05), rnd.uniform(0.01, 1.0), rnd.randint(2, 10**6)
        T = rnd.uniform(1.5, 1e4)
        assert rate_diffusion(d, h, n, p) == pytest.approx(float(oracle_diffusion(d, h, n, p.q)), rel=1e-12)
        assert rate_drift(d, h, T, p) == pytest.approx(float(oracle_drift(d, h, T, p.q, p.theta_bar)), rel=1e-12)


@pytest.mark.parametrize("bad", [dict(q=0), dict(theta=1.0), dict(kappa_exp=0.5), dict(theta_bar=0), dict(beta_mix=-1)])
def test_rate_params_validation(bad):
    with pytest.raises(ParameterError):
        RateParams(**bad)


def beta_oracle(p):
    """Direct re-evaluation of the two printed inequalities, in exact rationals where possible."""
    diff_ok = drift_ok = None
    if 1 - p.theta - p.kappa_exp > 0:
        a = (2 + 3 * p.theta) / (1 - p.theta - p.kappa_exp)
        b = (2 + 1 / (2 + p.q)) / (1 - 2 * p.kappa_exp)
        diff_ok = p.beta_mix > a and p.beta_mix > b
    g = 1 - p.theta_bar * (1 + 4 / p.q) - 2 * p.kappa_bar / p.q
    if g > 0:
        a = (3 / 2 + p.theta_bar + p.kappa_bar) / g - 2
        b = (2 + 1 / (2 + p.q)) * p.theta_bar / (1 - p.theta_bar)
        drift_ok = p.beta_mix > a and p.beta_mix > b
    return diff_ok, drift_ok


def test_beta_examples():
    p = RateParams(q=38, theta=0.4, kappa_exp=0.4, beta_mix=17)
    assert analysis.beta_bound_diffusion(p) == pytest.approx(16.0, rel=1e-14)
    assert check_beta_conditions(p)[0] is True
    assert check_beta_conditions(RateParams(q=38, theta=0.4, kappa_exp=0.4, beta_mix=15.9))[0] is False
    assert check_beta_conditions(RateParams(beta_mix=0.1)) == (False, False)
    assert check_beta_conditions(RateParams(q=1e6, theta_bar=0.999, kappa_bar=0.001, beta_mix=1000))[1] is False
    with pytest.raises(ConditionNotApplicableError):
        check_beta_conditions(RateParams(theta=0.7, kappa_exp=0.4))
    with pytest.raises(ConditionNotApplicableError):
        analysis.beta_bound_drift(RateParams(q=2, theta_bar=0.4))


def test_beta_conditions_agree_with_oracle():
    rnd = random.Random(7)
    checked = 0
    while checked < 100:
        p = _random_params(rnd)
        want = beta_oracle(p)
        if None in want:
            with pytest.raises(ConditionNotApplicableError):
                check_beta_conditions(p)
            continue
        assert check_beta_conditions(p) == want
        checked += 1


def test_rate_fit_examples():
    rate = np.array([0.6, 0.5, 0.45, 0.4, 0.37])
    s, i, r = rate_fit(2 * rate, rate)
    assert s == pytest.approx(2) and i == pytest.approx(0, abs=1e-14) and r == pytest.approx(1)
    s, i, r = rate_fit(np.full(5, 0.3), rate)
    assert s == 0 and r == 0
    with pytest.raises(ParameterError):
        rate_fit([1, 2, 3], [1, 1, 1])
    with pytest.raises(ParameterError):
        rate_fit([1, 2], [1, 2])


def test_rate_fit_on_published_column():
    ns = [1000, 3000, 5000, 7000, 9000]
    maae1 = np.array([0.4022, 0.272, 0.2331, 0.2126, 0.2016]) * 1e-3
    rates = np.array([rate_remark2(n) for n in ns])
    s, i, r = rate_fit(maae1, rates)
    # independent least squares
    A = np.vstack([rates, np.ones_like(rates)]).T
    (s2, i2), *_ = np.linalg.lstsq(A, maae1, rcond=None)
    assert s == pytest.approx(s2, rel=1e-10) and i == pytest.approx(i2, rel=1e-8)
    assert r == pytest.approx(np.corrcoef(maae1, rates)[0, 1], rel=1e-12)
    assert r > 0.98


def test_moment_check_degenerate_diffusion():
    model = SdeModel(lambda x: 0.5 * (1.0 - x), lambda x: 0.0 * x, name="ode")
    d = 0.004
    rep = moment_check_diffusion(model, 0.0, d, 10, 200, 1)
    assert rep.target == 0.0 and rep.mc_stderr == 0.0
    # squared drift-only increment is O(delta) with constant bounded by sup|b'b|^2 ... < 1 here
    assert abs(rep.mc_estimate) <= 1.0 * d


def test_moment_check_ou_examples():
    ou = make_ou_model(0.5, -2.75, 0.43)
    rep = moment_check_diffusion(ou, -2.75, 0.004, 10, 100_000, 11)
    assert rep.target == pytest.approx(2 / 3 * 0.1849)
    assert abs(rep.mc_estimate - rep.target) <= 4 * rep.mc_stderr + 2 * 0.004 * rep.target
    assert rep.passes()
    drift = moment_check_drift(ou, -2.79, 0.004, 10, 100_000, 12)
    assert drift.target == pytest.approx(0.02) and drift.passes()
    assert moment_check_drift(ou, -2.75, 0.004, 10, 10_000, 3).target == 0.0


def test_moment_check_stderr_scaling():
    ou = make_ou_model(0.5, -2.75, 0.43)
    a = moment_check_diffusion(ou, -2.75, 0.004, 10, 20_000, 1)
    b = moment_check_diffusion(ou, -2.75, 0.004, 10, 40_000, 2)
    assert a.mc_stderr / b.mc_stderr == pytest.approx(math.sqrt(2), rel=0.2)


def test_moment_check_validation():
    ou = make_ou_model(0.5, -2.75, 0.43)
    with pytest.raises(ParameterError):
        moment_check_diffusion(ou, -2.75, 0.004, 10, 50, 1)


@pytest.mark.parametrize("M", [1, 2, 4])
def test_integrated_variance_factor_matches_simulation(M):
    # Brownian motion: sigma = 1, no drift
    bm = SdeModel(lambda x: 0.0 * x, lambda x: 1.0 + 0.0 * x, name="bm")
    d = 0.01
    rep = moment_check_diffusion(bm, 0.0, d, M, 200_000, 5, factor=integrated_variance_factor(M))
    assert abs(rep.mc_estimate - rep.target) <= 4 * rep.mc_stderr
    assert integrated_variance_factor(1) == 1.0
    assert integrated_variance_factor(10) == pytest.approx(2 / 3 + 1 / 300)
