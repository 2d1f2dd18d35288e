"""Structural condition checks: oscillation constants, flux/gradient
conditions, parameter regimes, and the envelope condition."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from koforge.funcs import (
    GridSpec,
    KoforgeError,
    constant,
    exp_power,
    from_callable,
    mean_curvature,
    power,
    power_log,
)
from koforge.structural import (
    StructuralProfile,
    check_b_tilde,
    check_grad_ell,
    check_parameter_regimes,
    check_phi,
    check_phi_ell,
    check_theta,
    estimate_c_increasing,
)

RNG_SEED = 20240817


def _prof(phi=None, ell=None, f=None, b=None, **kw):
    return StructuralProfile(
        phi=phi or power(1, 1),
        ell=ell or constant(1),
        f=f or power(1, 2),
        b_tilde=b or constant(1),
        **kw,
    )


# -- oscillation constant estimation ---------------------------------------------------


def test_c_increasing_monotone_is_one():
    est = estimate_c_increasing(power(1, 2))
    assert est.holds and est.c_est == 1.0


def test_c_increasing_oscillating_against_brute_force():
    fn = lambda t: t ** 2 * (2.0 + np.sin(t))
    # brute-force oracle on a dense grid: max over pairs s <= t of fn(s)/fn(t)
    dense = np.geomspace(1e-3, 1e3, 200_000)
    vals = fn(dense)
    oracle = float(np.max(np.maximum.accumulate(vals) / vals))
    spec = from_callable(fn, 1e-3, 1e3, 8192)
    est = estimate_c_increasing(spec, GridSpec(1e-3, 1e3, 8192))
    assert est.holds
    assert 1.0 <= est.c_est <= 3.0
    assert est.c_est == pytest.approx(oracle, rel=1e-2)


def test_c_increasing_decreasing_fails_with_witness():
    spec = from_callable(lambda t: np.exp(-t), 1e-6, 600.0)
    est = estimate_c_increasing(spec, GridSpec(1e-3, 600.0, 2048))
    assert not est.holds
    s, t = est.witness
    assert s < t


def test_c_increasing_rejects_nonpositive_samples():
    spec = from_callable(lambda t: 1.0 - t, 1e-6, 10.0)
    with pytest.raises(KoforgeError, match="t="):
        estimate_c_increasing(spec, GridSpec(1e-3, 10.0, 512))


@settings(max_examples=60, deadline=None)
@given(a=st.floats(min_value=0.05, max_value=4.0), c=st.floats(min_value=0.1, max_value=10.0))
def test_c_increasing_one_on_any_nondecreasing_builtin(a, c):
    est = estimate_c_increasing(power(c, a), GridSpec(1e-4, 1e4, 512))
    assert est.holds
    assert est.c_est <= 1.0 + 1e-9


# -- flux conditions --------------------------------------------------------------------


def test_check_phi_power():
    rep = check_phi(_prof(phi=power(1, 1), A_bound=1.0, delta=1.0))
    assert rep.holds("Phi0") and rep.holds("Phi1") and rep.holds("Phi2")
    assert rep["Phi1"].method == "exact"


def test_check_phi_mean_curvature_flux_domination():
    rep = check_phi(_prof(phi=mean_curvature(), A_bound=1.0, delta=1.0))
    assert rep.holds("Phi2") and rep["Phi2"].method == "exact"


def test_check_phi_exp_flux_fails_domination():
    rep = check_phi(_prof(phi=exp_power(), A_bound=1.0, delta=1.0))
    e = rep["Phi2"]
    assert e.holds == "no"
    t_w, gap = e.witness
    assert t_w == 2.0
    # independent evaluation of phi - t phi' at the witness
    assert gap == pytest.approx(2 * np.e ** 4 - 2 * np.e ** 4 * 9, rel=1e-12)
    assert gap < 0


def test_check_phi_envelope_mismatch():
    rep = check_phi(_prof(phi=power(1, 2), A_bound=1.0, delta=1.0))
    assert rep["Phi1"].holds == "no" and rep["Phi1"].witness is not None


# -- gradient factor ----------------------------------------------------------------------


def test_check_grad_ell_examples():
    rep = check_grad_ell(_prof(ell=power(1, 0.5), chi=0.5))
    assert rep.all_hold()
    assert rep["L3"].constant == pytest.approx(1.0)
    rep = check_grad_ell(_prof(ell=constant(1), chi=0.0))
    assert rep.all_hold()
    rep = check_grad_ell(_prof(ell=from_callable(lambda t: np.exp(-t), 1e-6, 600.0),
                               chi=0.0),
                         GridSpec(1e-3, 600.0, 1024))
    assert rep["L2"].holds == "no"


# -- oscillation of the kernel weights ------------------------------------------------------


def test_check_theta_power_arithmetic():
    # power flux/gradient: both parts hold iff theta >= q - p + 2
    rep = check_theta(_prof(phi=power(1, 2), ell=constant(1), theta=0.0))
    assert rep.holds("theta_1") and rep.holds("theta_2")
    assert rep["theta_1"].method == "exact"
    rep = check_theta(_prof(phi=power(1, 1), ell=power(1, 1), theta=0.0))
    assert rep["theta_1"].holds == "no" and rep["theta_2"].holds == "no"
    # p = 2, q = 1: the threshold sits at theta = q - p + 2 = 1
    for theta, want in [(0.99, "no"), (1.0, "yes"), (1.5, "yes")]:
        rep = check_theta(_prof(phi=power(1, 1), ell=power(1, 1), theta=theta))
        assert rep["theta_1"].holds == want


def test_check_theta_mean_curvature():
    # second part holds iff theta >= 1 + q for the mean curvature flux
    for q, theta, want in [(0.5, 1.5, "yes"), (0.5, 1.6, "yes"), (0.5, 1.4, "no"),
                           (0.0, 1.0, "yes"), (0.0, 0.9, "no")]:
        rep = check_theta(_prof(phi=mean_curvature(), ell=power(1, q), theta=theta))
        assert rep["theta_2"].holds == want, (q, theta)


# -- flux/gradient compatibility ---------------------------------------------------------


def test_check_phi_ell_power_families():
    rep = check_phi_ell(_prof(phi=power(1, 2), ell=power(1, 1)))  # p=3, q=1
    assert rep.holds("phi_ell_1") and rep.holds("phi_ell_2") and rep.holds("phi_ell_3")
    rep = check_phi_ell(_prof(phi=power(1, 1), ell=power(1, 1)))  # boundary p=q+1
    assert rep["phi_ell_1"].holds == "no"
    rep = check_phi_ell(_prof(phi=mean_curvature(), ell=constant(1)))
    assert rep["phi_ell_2"].holds == "no"
    assert rep.holds("phi_ell_3") and rep.holds("phi_ell_1")


def test_theta_implies_phi_ell_battery():
    # wherever both oscillation parts hold with theta < 1, the compatibility
    # conditions must follow (50 random draws over the power families)
    rng = np.random.default_rng(RNG_SEED)
    checked = 0
    while checked < 50:
        p = rng.uniform(1.2, 4.0)
        q = rng.uniform(0.0, 2.0)
        theta = rng.uniform(-2.0, 0.99)
        prof = _prof(phi=power(1, p - 1), ell=power(1, q), theta=theta)
        rep_t = check_theta(prof)
        if not (rep_t.holds("theta_1") and rep_t.holds("theta_2")):
            continue
        rep_pl = check_phi_ell(prof)
        assert rep_pl.holds("phi_ell_1"), (p, q, theta)
        assert rep_pl.holds("phi_ell_2"), (p, q, theta)
        checked += 1


def test_exact_and_sampled_decisions_agree():
    # a capped sampled estimator on a 12-decade grid resolves slopes beyond
    # ~0.5 (cap 1e6 = 10**(12*0.5)); draw parameters past that resolution
    rng = np.random.default_rng(RNG_SEED + 1)
    grid = GridSpec()
    count = 0
    while count < 200:
        p = rng.uniform(1.2, 4.0)
        q = rng.uniform(0.0, 2.0)
        theta = rng.uniform(-2.0, 3.0)
        if abs(theta - (q - p + 2.0)) < 0.6:
            continue
        prof = _prof(phi=power(1, p - 1), ell=power(1, q), theta=theta)
        rep = check_theta(prof)
        sampled_1 = estimate_c_increasing(
            lambda t: prof.phi.derivative(t) * np.asarray(t, float) ** theta
            / np.asarray(prof.ell(t), float), grid)
        want = "yes" if sampled_1.holds else "no"
        assert rep["theta_1"].holds == want, (p, q, theta)
        count += 1


# -- parameter regimes ----------------------------------------------------------------------


def test_parameter_regime_examples():
    prof = _prof(theta=0.0, beta=-2.0, mu=0.0)
    assert check_parameter_regimes(prof, "thetabetamu").holds("thetabetamu")
    prof = _prof(phi=power(1, 1), ell=constant(1), mu=0.0, beta=2.0)
    assert check_parameter_regimes(prof, "corA1").holds("corA1")
    prof = _prof(phi=power(1, 1), ell=constant(1), mu=0.0, beta=2.1)
    assert check_parameter_regimes(prof, "corA1")["corA1"].holds == "no"
    prof = _prof(phi=mean_curvature(), ell=power(1, 1), mu=0.0, beta=0.0)
    assert check_parameter_regimes(prof, "corA2")["corA2"].holds == "no"
    prof = _prof(phi=mean_curvature(), ell=power(1, 0.2), mu=0.1, beta=-2.0)
    assert check_parameter_regimes(prof, "corA2").holds("corA2")


def test_parameter_regimes_pure():
    prof = _prof(theta=0.3, beta=-1.0, mu=0.5)
    a = check_parameter_regimes(prof, "thetabetamu_prime").to_json()
    b = check_parameter_regimes(prof, "thetabetamu_prime").to_json()
    assert a == b


def test_eq38_envelope_reduction():
    # power envelope c/t^mu with lam = 1/mu: the boundary case passes via the
    # second alternative exactly when theta < 1
    prof = _prof(b=power(1, -2.0), lambda_b=0.5, theta=0.0, beta=-2.0, mu=2.0)
    rep = check_parameter_regimes(prof, "eq38")
    assert rep.holds("eq38")
    assert rep["eq38_i"].holds == "no"          # log factor on the boundary
    assert rep["eq38_ii_bound"].holds == "yes"
    prof = _prof(b=power(1, -2.0), lambda_b=0.5, theta=0.5, beta=-2.0)
    assert check_parameter_regimes(prof, "eq38")["eq38"].holds == "no"


def test_eq66_branches():
    # theta = 1 branch: lam >= 1 and t**(beta/2) / b * (running integral) bounded
    prof = _prof(b=power(1, -1.0), lambda_b=2.0, theta=1.0, beta=-2.0)
    rep = check_parameter_regimes(prof, "eq66")
    assert rep.holds("eq66")
    # same data but lam = 1 makes the running integral log-divergent
    prof = _prof(b=power(1, -1.0), lambda_b=1.0, theta=1.0, beta=-2.0)
    assert check_parameter_regimes(prof, "eq66")["eq66"].holds == "no"
    prof = _prof(b=power(1, -1.0), lambda_b=1.0, theta=0.5, beta=-2.0)
    rep = check_parameter_regimes(prof, "eq66")
    assert rep.holds("eq66")


# -- envelope condition -----------------------------------------------------------------------


def test_check_b_tilde_examples():
    prof = _prof(b=power(1, -2.0), lambda_b=0.5)
    assert check_b_tilde(prof).holds("b")
    prof = _prof(b=constant(1.0), lambda_b=1.0)
    assert check_b_tilde(prof).holds("b")
    prof = _prof(b=from_callable(lambda t: np.exp(-t), 1e-6, 500.0,
                                 tail_exponent=None), lambda_b=1.0)
    rep = check_b_tilde(prof, GridSpec(1e-3, 400.0, 1024))
    assert rep["b"].holds == "no"
    assert rep["b_lambda_nonintegrable"].holds == "no"


def test_beta_clamp_warns():
    with pytest.warns(UserWarning, match="clamped"):
        prof = _prof(beta=-5.0)
    assert prof.beta == -2.0


def test_profile_validation():
    with pytest.raises(KoforgeError):
        _prof(lambda_b=0.0)
    with pytest.raises(KoforgeError):
        _prof(delta=-1.0)


def test_condition_report_serialization():
    rep = check_phi(_prof())
    blob = rep.to_json()
    for name, entry in blob.items():
        assert set(entry) == {"holds", "constant", "witness", "method"}
        assert entry["holds"] in ("yes", "no", "inconclusive")
        if entry["holds"] == "no":
            assert entry["witness"] is not None
