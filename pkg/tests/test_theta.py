import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from sectionhyp import theta
from sectionhyp.errors import DomainError
from sectionhyp.precision import PrecisionContext

CTX = PrecisionContext(bits=256)
Q1, Q2 = mpmath.mpf("0.3092493386"), mpmath.mpf("0.5169593598")


def test_values_match_nsum_oracle(oracle):
    for q, u, want in oracle["psi_samples"]:
        got = theta.theta_eval(q, u, CTX).value
        want = mpmath.mpf(want)
        assert abs(got - want) <= mpmath.mpf(10) ** -26 * max(1, abs(want))


def test_zero_argument_and_domain():
    assert theta.theta_eval("0.5", 0, CTX).value == 1
    with pytest.raises(DomainError):
        theta.theta_eval(1, "-1", CTX)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.02, max_value=0.95), st.floats(min_value=-1.0, max_value=1.0))
def test_truncation_bound_is_honest(q, t):
    q = mpmath.mpf(q)
    u = t * q ** -6
    s = theta.theta_eval(q, u, CTX)
    longer = theta.psi_partial_sum(q, u, 4 * s.terms, CTX.bits + 64)
    assert abs(longer - s.value) <= s.bound + mpmath.mpf(2) ** -(CTX.bits - 8) * max(1, abs(s.value))


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.05, max_value=0.9), st.floats(min_value=-30, max_value=5))
def test_derivative_matches_finite_difference(q, u):
    h = mpmath.mpf(2) ** -(CTX.bits // 3)
    q, u = mpmath.mpf(q), mpmath.mpf(u)
    fd = (theta.theta_eval(q, u + h, CTX).value - theta.theta_eval(q, u - h, CTX).value) / (2 * h)
    d = theta.theta_du(q, u, CTX).value
    scale = 1 + abs(d) + abs(theta.theta_eval(q, u, CTX).value)
    assert abs(d - fd) <= 100 * h * h * scale * max(1, abs(u)) ** 3


def test_functional_relation_pointwise():
    q, u = mpmath.mpf("0.37"), mpmath.mpf("-4.5")
    lhs = theta.theta_eval(q, u, CTX).value
    rhs = 1 + q * u * theta.theta_eval(q, q * u, CTX).value
    assert abs(lhs - rhs) < mpmath.mpf(10) ** -60


@pytest.mark.parametrize("q,u", [("0.25", "-3"), ("0.6", "-12.5"), ("0.09", "0.7")])
def test_form_conversions_agree(q, u):
    forms = theta.convert_forms(q, u, CTX)
    assert forms.consistent
    assert forms.psi_gap < mpmath.mpf(10) ** -60 and forms.g_gap < mpmath.mpf(10) ** -60


def test_first_root_at_quarter(oracle):
    roots = theta.real_roots("0.25", 3, CTX)
    assert roots.complete
    assert abs(roots.roots[0] - mpmath.mpf(oracle["psi_root_quarter"])) < mpmath.mpf(10) ** -28


@pytest.mark.parametrize("q", ["0.2", "0.45", "0.8"])
def test_roots_interlace_critical_points(q):
    roots = theta.real_roots(q, 6, CTX)
    crit = theta.critical_points(q, 7, CTX)
    assert roots.complete and crit.complete
    us = [c.u for c in crit.points]
    for hi, lo in zip(roots.roots, roots.roots[1:]):
        inside = [c for c in us if lo < c < hi]
        assert len(inside) == 1


def test_sign_pattern_flips_at_spectrum_points():
    below = theta.critical_points(Q1 - mpmath.mpf("0.01"), 2, CTX).points
    between = theta.critical_points(Q1 + mpmath.mpf("0.01"), 3, CTX).points
    assert below[0].value < 0
    assert between[0].value > 0
    assert min(p.value for p in between[1:]) < 0
    # near the second point the leading minimum changes sign the same way
    assert theta.critical_points(Q2 - mpmath.mpf("0.01"), 1, CTX).points[0].value < 0
    past = theta.critical_points(Q2 + mpmath.mpf("0.01"), 3, CTX).points
    assert past[0].value > 0 and past[2].value < 0


def test_sign_certificate():
    cert = theta.sign_certificate("0.25", 20, CTX)
    assert cert.ok and cert.m >= 1


def test_first_critical_pair_matches_newton_oracle(oracle):
    pair = theta.critical_pair_first(CTX)
    assert abs(pair.q_hat - mpmath.mpf(oracle["q_hat_1"])) < mpmath.mpf(10) ** -28
    assert abs(pair.u_hat - mpmath.mpf(oracle["u_hat_1"])) < mpmath.mpf(10) ** -26
    assert pair.residual_psi <= CTX.eps_residual and pair.residual_dpsi <= CTX.eps_residual


def test_short_spectrum_is_increasing():
    pairs = theta.spectrum(3, CTX)
    assert [p.index for p in pairs] == [1, 2, 3]
    assert pairs[0].q_hat < pairs[1].q_hat < pairs[2].q_hat
    assert all(max(p.residual_psi, p.residual_dpsi) <= CTX.eps_residual for p in pairs)
    assert [mpmath.nstr(p.q_hat, 6) for p in pairs] == ["0.309249", "0.516959", "0.630628"]


def test_functional_residual_on_grid(oracle):
    grid = theta.uniform_grid(101)
    r = theta.functional_residual("0.25", mpmath.mpf(oracle["psi_root_quarter"]), grid, PrecisionContext(bits=128))
    assert r < mpmath.mpf(10) ** -20


def test_sampling_and_csv():
    rows = theta.sample("0.25", -10, 0, 4, CTX)
    assert len(rows) == 5 and rows[-1][1] == 1
    text = theta.sample_csv(rows)
    assert text.splitlines()[0] == "u,psi" and len(text.splitlines()) == 6


def test_theta_section_normalizations():
    s = theta.theta_section("0.5", 4, "psi", CTX)
    assert s.poly.degree == 4
    with pytest.raises(DomainError):
        theta.theta_section("0.5", 4, "unknown", CTX)
