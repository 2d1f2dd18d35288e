"""Weak-maximum-principle constants, thresholds, and the sharp example."""

import numpy as np
import pytest

from koforge.funcs import KoforgeError, constant, power
from koforge.geometry import ModelManifold, solve_h, volume_table
from koforge.maxprin import WmpParams, sharpness_example, theoremB_threshold, wmp_constant

RNG_SEED = 77113


def _hand_recompute(p: WmpParams):
    """Independent transcription of the piecewise constant."""
    s, eta = p.sigma_growth, p.eta
    nu = 1.0 + p.delta - p.chi
    if s - eta > 1e-12:
        if s <= 1e-12:
            return 0.0
        if eta < 0:
            return p.A_bound * p.d0 * (s - eta) ** nu
        return p.A_bound * p.d0 * s ** (p.delta - p.chi) * (s - eta)
    if s <= 1e-12:
        return 0.0
    drift = p.delta * (s - 1.0) + p.d0 - 1.0
    if drift <= 0:
        return 0.0
    return p.A_bound * s ** (p.delta - p.chi) * drift


def test_branch_examples():
    p = WmpParams(sigma_growth=1.0, delta=1.0, chi=0.0, mu=-1.0, d0=1.0)
    assert wmp_constant(p) == (4.0, "eta_negative")
    p = WmpParams(sigma_growth=0.0, delta=1.0, chi=0.0, mu=0.5, d0=1.0)
    assert wmp_constant(p)[0] == 0.0
    # critical line with non-positive drift collapses to zero
    p = WmpParams(sigma_growth=0.5, delta=1.0, chi=0.0, mu=1.5, d0=1.0)
    assert p.eta == pytest.approx(p.sigma_growth)
    assert wmp_constant(p) == (0.0, "critical_degenerate")


def test_random_draws_match_hand_recompute():
    rng = np.random.default_rng(RNG_SEED)
    count = 0
    while count < 100:
        delta = rng.uniform(0.2, 3.0)
        chi = rng.uniform(0.0, delta * 0.9)
        sigma = rng.uniform(0.0, 3.0)
        if rng.random() < 0.3:
            sigma = 0.0
        # solve for mu that puts us either strictly above or on the line
        gap = 0.0 if rng.random() < 0.3 else rng.uniform(0.1, 2.0)
        mu = sigma - gap - (sigma - 1.0) * (1.0 + delta - chi)
        d0 = rng.uniform(0.0, 4.0)
        params = WmpParams(sigma_growth=sigma, delta=delta, chi=chi, mu=mu,
                           d0=d0, A_bound=rng.uniform(0.5, 2.0))
        value, _ = wmp_constant(params)
        assert value == pytest.approx(_hand_recompute(params), rel=1e-12, abs=1e-300)
        count += 1


def test_params_validation():
    with pytest.raises(KoforgeError):
        WmpParams(sigma_growth=-1.0, delta=1.0, chi=0.0, mu=0.0, d0=1.0)
    with pytest.raises(KoforgeError):
        WmpParams(sigma_growth=1.0, delta=1.0, chi=1.0, mu=0.0, d0=1.0)
    with pytest.raises(KoforgeError):
        # sigma - eta < 0 rejected
        WmpParams(sigma_growth=1.0, delta=1.0, chi=0.0, mu=2.0, d0=1.0)


def test_threshold_flat_log_volume():
    sol = solve_h(constant(0.0), 25.0)
    tbl = volume_table(ModelManifold.flat(3, 4), sol, np.linspace(0.1, 20.0, 300))
    # critical case sigma = eta: the log-volume quotient tends to m = 3
    params = WmpParams(sigma_growth=2.0, delta=1.0, chi=0.0, mu=0.0, d0=3.0)
    out = theoremB_threshold(params, True, tbl)
    assert out["classification"] == "forces_finite_sup_nonpositive_f"
    assert out["d0_estimate"] == pytest.approx(3.0, rel=0.2)


def test_threshold_weight_matching_growth():
    # weight exp(r**gap) puts the quotient near 1
    gap = 2.0
    sol = solve_h(constant(0.0), 25.0)
    model = ModelManifold(m=3, n=4, warp=power(1, 1), log_weight=power(1, gap))
    tbl = volume_table(model, sol, np.linspace(0.1, 20.0, 300))
    params = WmpParams(sigma_growth=2.0, delta=1.0, chi=0.0, mu=-2.0, d0=1.0)
    assert params.sigma_growth - params.eta == pytest.approx(gap)
    out = theoremB_threshold(params, True, tbl)
    assert out["classification"] == "forces_finite_sup_nonpositive_f"
    assert out["d0_estimate"] == pytest.approx(1.0, rel=0.1)


def test_threshold_overgrown_weight_inconclusive():
    gap = 2.0
    sol = solve_h(constant(0.0), 25.0)
    model = ModelManifold(m=3, n=4, warp=power(1, 1), log_weight=power(1, 2 * gap))
    tbl = volume_table(model, sol, np.linspace(0.1, 20.0, 300))
    params = WmpParams(sigma_growth=2.0, delta=1.0, chi=0.0, mu=-2.0, d0=1.0)
    out = theoremB_threshold(params, True, tbl)
    assert out["classification"] == "inconclusive"


def test_threshold_requires_positive_source_liminf():
    params = WmpParams(sigma_growth=2.0, delta=1.0, chi=0.0, mu=-2.0, d0=1.0)
    out = theoremB_threshold(params, False, None)
    assert out["classification"] == "inconclusive"


def test_sharpness_example_p2_p3():
    r = np.linspace(0.1, 10.0, 400)
    rep = sharpness_example(2.0, 3, r)
    assert rep.residual_max < 1e-10
    assert rep.u_hat == pytest.approx(0.5)
    rep = sharpness_example(3.0, 3, r)
    assert rep.residual_max < 1e-8
    assert rep.u_hat == pytest.approx(2.0 / 3.0)
    # the bound is attained exactly: K <= C u_hat**(delta-chi) = m
    assert rep.bound_value == pytest.approx(3.0, rel=1e-12)
    assert rep.plap_value == 3.0


def test_sharpness_growth_barely_fails():
    # u / r**p' sits at 1/p' (not 0) out to r = 1e3
    pc = 1.5
    r = 1e3
    assert (r ** pc / pc) / r ** pc == pytest.approx(1.0 / pc, abs=1e-4)
    rep = sharpness_example(3.0, 3, np.geomspace(0.1, 1e3, 200))
    assert rep.u_hat == pytest.approx(1.0 / pc, abs=1e-4)
