import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from bimosum.effects import (
    angle,
    chi2_2_quantile,
    classify,
    contour,
    effect_from_detection,
    summarize,
    theoretical_center,
)
from bimosum.errors import ConfigurationError, DegenerateEstimateError, DomainError
from bimosum.mosum import d_mahalanobis, mosum_field
from bimosum.series import ChangeConfig, Gamma, Normal, Series, generate


@pytest.mark.parametrize("level", [0.5, 0.66, 0.95, 0.999])
def test_chi2_quantile(level):
    assert chi2_2_quantile(level) == pytest.approx(stats.chi2(2).ppf(level), rel=1e-12)
    with pytest.raises(ConfigurationError):
        chi2_2_quantile(1.0)


def test_polyline_closes_and_has_64_points():
    pts = contour((1.0, -2.0), 0.4, 0.95).polyline()
    assert pts.shape == (64, 2)
    assert np.array_equal(pts[0], pts[-1])


def test_isotropic_contour_is_circle():
    pts = contour((3.0, 4.0), 0.0, 0.66).polyline()
    r = np.hypot(pts[:, 0] - 3.0, pts[:, 1] - 4.0)
    assert np.ptp(r) < 1e-9
    assert r[0] == pytest.approx(math.sqrt(chi2_2_quantile(0.66)))


@pytest.mark.parametrize("rho", [-0.9, -0.3, 0.3, 0.8])
def test_contour_is_mahalanobis_level_set(rho):
    c = contour((0.5, 0.5), rho, 0.95)
    pts = c.polyline(200)
    d = d_mahalanobis(pts[:, 0] - 0.5, pts[:, 1] - 0.5, rho)
    assert_allclose(d, math.sqrt(chi2_2_quantile(0.95)), rtol=1e-10)
    a, b = c.half_lengths
    assert a >= b if rho > 0 else a <= b


def test_contour_domain():
    with pytest.raises(DomainError):
        contour((0, 0), 1.0, 0.95)


@pytest.mark.parametrize(
    "E, V, name",
    [
        (5, 0, "expectation_up"),
        (5, -0.5, "expectation_up"),
        (0, 3, "variance_up"),
        (-2, 0.1, "expectation_down"),
        (0, -1, "variance_down"),
        (1, 1, "mixed"),
    ],
)
def test_classes(E, V, name):
    assert classify(angle(E, V)) == name


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_property_angle_range(E, V):
    w = angle(E, V)
    assert 0.0 <= w < 2 * math.pi


def test_summary_strength():
    s = summarize(500, 100, 3.0, 4.0, 0.0)
    assert s.strength == pytest.approx(0.5)
    assert [c.level for c in s.contours] == [0.66, 0.95]
    doc = s.to_dict()
    assert doc["contours"][1]["center"] == [3.0, 4.0]


def test_theoretical_center_normal():
    th = theoretical_center(Normal(2, 4), Normal(10, 4), 100)
    assert th.j[0] == pytest.approx(10 * 8 / math.sqrt(32))
    assert th.j[1] == 0.0
    assert th.rho_c == 0.0
    assert_allclose(th.gamma.gamma, np.eye(2))


def test_theoretical_center_gamma_rho():
    a, b = Gamma(2.0, 1.0), Gamma(2.0, 0.5)
    th = theoretical_center(a, b, 50)
    pa, pb = a.population(), b.population()
    want = (pa.mu3 + pb.mu3) / math.sqrt((pa.sigma2 + pb.sigma2) * (pa.nu2 + pb.nu2))
    assert th.rho_c == pytest.approx(want)
    # equal segments reduce to the population correlation
    assert theoretical_center(a, a, 50).rho_c == pytest.approx(math.sqrt(2 / 5))


def test_effect_from_detection():
    cfg = ChangeConfig(600, (300,), (Normal(0, 1), Normal(0, 3)))
    fld = mosum_field(generate(cfg, 3), [100])
    eff = effect_from_detection(fld, 300, 100)
    assert eff.omega_class == "variance_up"
    assert eff.E == fld[100].J(300)[0]


def test_effect_on_missing_point():
    fld = mosum_field(Series(np.r_[np.zeros(200), np.arange(200.0)]), [50])
    with pytest.raises(DegenerateEstimateError):
        effect_from_detection(fld, 100, 50)
