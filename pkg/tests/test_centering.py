import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bimosum.centering import (
    centering_field,
    deviation_sup,
    empirical_vs_centering,
    excursion_max,
    tilde_params,
    write_centering_csv,
)
from bimosum.errors import ConfigurationError, WindowRangeError
from bimosum.series import ChangeConfig, Exponential, Gamma, Normal, generate


def mean_shift(h=100):
    return ChangeConfig(1000, (500,), (Normal(0, 1), Normal(2, 1)))


def direct_left(p1, p2, c, h, t):
    """Mixture limits of the left window written out term by term (oracle)."""
    a = (c - (t - h)) / h
    b = (t - c) / h
    mu = a * p1.mu + b * p2.mu
    s2 = a * (p1.sigma2 + (mu - p1.mu) ** 2) + b * (p2.sigma2 + (mu - p2.mu) ** 2)

    def m4(p):
        d = mu - p.mu
        return p.mu4 - 4 * p.mu3 * d + 6 * p.sigma2 * d * d + d**4

    return mu, s2, a * m4(p1) + b * m4(p2) - s2 * s2


def test_tilde_hand_example():
    tp = tilde_params(mean_shift(), 100, 550)
    assert tp["left"]["mu"] == pytest.approx(1.0)
    assert tp["left"]["sigma2"] == pytest.approx(2.0)
    assert tp["right"] == pytest.approx({"mu": 2.0, "sigma2": 1.0, "mu3": 0.0, "mu4": 3.0, "nu2": 2.0})


def test_tilde_pure_window():
    cfg = ChangeConfig(1000, (500,), (Gamma(2, 1), Normal(3, 2)))
    tp = tilde_params(cfg, 100, 500)
    pop = cfg.segments[0].population()
    assert tp["left"]["mu"] == pop.mu
    assert tp["left"]["sigma2"] == pop.sigma2
    assert tp["left"]["nu2"] == pop.nu2


def test_constant_expectation_error_terms_vanish():
    cfg = ChangeConfig(1000, (500,), (Normal(1.3, 1), Normal(1.3, 3)))
    for t in range(420, 600, 7):
        tp = tilde_params(cfg, 100, t)
        assert tp["left"]["mu"] == 1.3 and tp["right"]["mu"] == 1.3


@pytest.mark.parametrize(
    "segs",
    [
        (Normal(0, 1), Normal(2, 1)),
        (Gamma(2.0, 1.0), Gamma(0.5, 0.25)),
        (Exponential(1.0), Normal(4.0, 0.5)),
    ],
)
def test_nu2_matches_termwise_formula(segs):
    cfg = ChangeConfig(1000, (500,), segs)
    p1, p2 = (s.population() for s in segs)
    for t in (500, 530, 575, 599):
        want = direct_left(p1, p2, 500, 100, t)
        got = tilde_params(cfg, 100, t)["left"]
        assert (got["mu"], got["sigma2"], got["nu2"]) == pytest.approx(want, rel=1e-12)


def test_right_window_substitution():
    cfg = ChangeConfig(1000, (500,), (Normal(0, 1), Normal(2, 3)))
    # right window at t equals left window at t + h
    for t in (400, 430, 470, 499):
        assert tilde_params(cfg, 100, t)["right"] == pytest.approx(tilde_params(cfg, 100, t + 100)["left"])


def test_separation_error():
    cfg = ChangeConfig(1000, (420, 500), (Normal(0, 1), Normal(2, 1), Normal(2, 3)))
    with pytest.raises(ConfigurationError, match="closer than 2h"):
        centering_field(cfg, 70)
    centering_field(cfg, 40)
    with pytest.raises(WindowRangeError):
        tilde_params(cfg, 40, 10)


def test_outside_neighborhood_and_at_c():
    cfg = ChangeConfig(1000, (300, 700), (Normal(0, 1), Normal(3, 2), Gamma(2, 1)))
    cf = centering_field(cfg, 100)
    far = (np.abs(cf.t - 300) >= 100) & (np.abs(cf.t - 700) >= 100)
    assert np.all(cf.e[far] == 0) and np.all(cf.v[far] == 0)
    assert np.all(cf.D1[far] == 1) and np.all(cf.D2[far] == 1)
    for c in (300, 700):
        i = cf.index(c)
        assert cf.D1[i] == 1.0 and cf.D2[i] == 1.0
    i = cf.index(300)
    a, b = (s.population() for s in cfg.segments[:2])
    assert cf.e[i] == pytest.approx(10 * 3 / math.sqrt(5))
    assert cf.v[i] == pytest.approx(10 * 3 / math.sqrt(a.nu2 + b.nu2))


def test_hat_shape():
    cfg = ChangeConfig(1000, (500,), (Normal(0, 1), Normal(1, 1)))
    cf = centering_field(cfg, 100)
    t, d = excursion_max(cf, 500)
    assert t == 500
    e = cf.e[cf.index(400) : cf.index(600) + 1]
    assert np.all(np.diff(e[:101]) > 0) and np.all(np.diff(e[100:]) < 0)
    assert cf.e[cf.index(400)] == 0 and cf.e[cf.index(600)] == 0


def test_mixture_limits_by_monte_carlo():
    """Large windows straddling a change: estimator means and variances against the limits."""
    p = (Gamma(2.0, 1.0), Normal(4.0, 0.7))
    m, reps, w1 = 4000, 4000, 0.3
    rng = np.random.default_rng(17)
    k = int(w1 * m)
    x = np.concatenate([p[0].sample(rng, (reps, k)), p[1].sample(rng, (reps, m - k))], axis=1)
    mu = x.mean(axis=1)
    d = x - mu[:, None]
    s2 = (d**2).mean(axis=1)
    nu2 = (d**4).mean(axis=1) - s2**2

    # the left window at t = m holds k points of segment 1 and m - k of segment 2
    cfg = ChangeConfig(3 * m, (k,), p)
    cf = centering_field(cfg, m)
    i = cf.index(m)
    L = cf.left
    assert mu.mean() == pytest.approx(L["mu"][i], rel=2e-3)
    assert s2.mean() == pytest.approx(L["sigma2"][i], rel=5e-3)
    assert nu2.mean() == pytest.approx(L["nu2"][i], rel=2e-2)
    # D~ denominators: asymptotic variances of the estimators
    pops = [s.population() for s in p]
    w = np.array([w1, 1 - w1])
    avar_mean = sum(wi * q.sigma2 for wi, q in zip(w, pops))
    assert m * mu.var() == pytest.approx(avar_mean, rel=0.06)
    e = [L["mu"][i] - q.mu for q in pops]
    avar_var = sum(wi * (q.nu2 - 4 * q.mu3 * ei + 4 * q.sigma2 * ei * ei) for wi, q, ei in zip(w, pops, e))
    assert m * s2.var() == pytest.approx(avar_var, rel=0.06)


def test_d2_oracle_in_field():
    cfg = ChangeConfig(1000, (500,), (Normal(0, 1), Normal(3, 1)))
    cf = centering_field(cfg, 100)
    i = cf.index(550)
    # closed form: left window is half/half, right window is pure segment 2
    e = 1.5
    den = 0.5 * (2 + 4 * e * e) * 2 + 2
    num = cf.left["nu2"][i] + cf.right["nu2"][i]
    assert cf.D2[i] == pytest.approx(math.sqrt(num / den))
    assert cf.D1[i] == pytest.approx(math.sqrt((1 + e * e + 1) / 2))


def test_convergence_without_change(get_q):
    cfg = ChangeConfig(1000, (), (Normal(0, 1),))
    rows = empirical_vs_centering(cfg, 50, range(400), ns=(1,))
    q95 = rows[0].summary()["q95"]
    Q = get_q(1000, (50,), replicas=20_000).Q
    assert q95 == pytest.approx(Q, abs=0.25)


def test_convergence_diagnostic_n():
    cfg = ChangeConfig(100, (50,), (Normal(0, 1), Normal(1, 1.5)))
    rows = empirical_vs_centering(cfg, 20, range(60), ns=(1, 10, 100))
    med = [float(np.median(r.sups)) for r in rows]
    assert med[2] <= med[0]


def test_deviation_sup_zero_for_no_change():
    cfg = ChangeConfig(400, (), (Normal(0, 1),))
    x = generate(cfg, 1)
    from bimosum.mosum import field_slice

    sl = field_slice(x, 50)
    assert deviation_sup(x, cfg, 50) == pytest.approx(np.nanmax(np.hypot(sl.E, sl.V)))


def test_csv(tmp_path):
    cf = centering_field(mean_shift(), 100)
    path = tmp_path / "c.csv"
    write_centering_csv(cf, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "h,t,e,v,D1,D2"
    assert len(lines) == 1 + cf.t.size
    row = dict(zip(lines[0].split(","), lines[1 + cf.index(500)].split(",")))
    assert float(row["e"]) == pytest.approx(cf.e[cf.index(500)])
