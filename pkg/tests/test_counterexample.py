"""Entire glued subsolution for the failing blow-up condition."""

import math

import numpy as np
import pytest

from koforge.funcs import KoforgeError, constant, power
from koforge.counterexample import (
    GlueParams,
    _WWorkspace,
    assemble_u,
    build_w,
    probe_lambda,
    solve_glue_params,
    verify_subsolution,
)
from koforge.structural import StructuralProfile


def _ws(p=2.0, f=None, ell=None):
    return _WWorkspace(p, f or power(1, 1), ell or constant(1))


def test_build_w_exponential_closed_form():
    # p = 2, f = t, ell = 1: level map is log, so w(t) = e**t
    prof = StructuralProfile(phi=power(1, 1), ell=constant(1), f=power(1, 1),
                             b_tilde=constant(1))
    ts = np.linspace(0.0, 3.0, 7)
    for t in ts:
        assert build_w(prof, float(t)) == pytest.approx(math.exp(t), rel=1e-9)
    assert build_w(prof, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_w_derivative_identity():
    ws = _ws()
    ts = np.linspace(0.01, 4.0, 60)
    w = ws.w(ts)
    # w' = Kinv(F(w)); for this data both sides are e**t
    lhs = ws.kinv_F(w)
    assert np.max(np.abs(lhs - np.exp(ts)) / np.exp(ts)) < 1e-7


def test_build_w_blocks_convergent_source():
    prof = StructuralProfile(phi=power(1, 1), ell=constant(1), f=power(1, 3),
                             b_tilde=constant(1))
    with pytest.raises(KoforgeError, match="cap"):
        build_w(prof, 1.0)


def test_probe_lambda_reference_values():
    # closed-form oracle: Kinv(F(s)) = s, so t_bar = log(lam),
    # beta0 = lam (1 - log(lam)/2), Lambda = lam/log(lam)
    ws = _ws()
    pr = probe_lambda(2.0, 2, power(1, 1), constant(1), 1.2, _ws=ws)
    assert pr["t_bar"] == pytest.approx(math.log(1.2), rel=1e-10)
    assert pr["beta0"] == pytest.approx(1.2 - 1.2 * math.log(1.2) / 2.0, rel=1e-9)
    assert pr["Lambda"] == pytest.approx(1.2 / math.log(1.2), rel=1e-9)
    assert pr["feasible_i"] and pr["feasible_iii"]


def test_glue_bracketing_and_monotone_lambda():
    # t_bar brackets between (lam-1)/Kinv(F(2)) and (lam-1)/Kinv(F(1)),
    # and the cap steepness grows as the glue level descends
    ws = _ws()
    k1, k2 = ws.kinv_F(1.0), ws.kinv_F(2.0)
    lambdas = [1.0 + 2.0 ** (-k) for k in range(0, 8)]
    caps = []
    for lam in lambdas:
        pr = probe_lambda(2.0, 2, power(1, 1), constant(1), lam, _ws=ws)
        assert (lam - 1.0) / k2 - 1e-12 <= pr["t_bar"] <= (lam - 1.0) / k1 + 1e-12
        caps.append(pr["Lambda"])
    assert all(a < b for a, b in zip(caps, caps[1:]))
    assert caps[0] >= k1  # the cap slope dominates the unit-level slope


def test_solve_glue_params_and_system_residuals():
    params = solve_glue_params(2.0, 2, power(1, 1), constant(1))
    ws = _ws()
    kf = ws.kinv_F(params.glue_lambda)
    assert abs(kf * params.t_bar / params.p_conj + params.beta0
               - params.glue_lambda) <= 1e-8
    assert abs(params.Lambda * params.t_bar ** (params.p_conj - 1.0) - kf) <= 1e-8
    assert (params.m * params.Lambda ** (params.p - 1.0)
            >= float(ws.f(params.glue_lambda)) * float(ws.ell(kf)))
    assert params.beta0 > 0


def test_solve_glue_requires_monotone_source():
    from koforge.funcs import from_callable

    wavy = from_callable(lambda t: t * (2.0 + np.sin(5 * t)), 1e-6, 1e3,
                         origin_exponent=1.0, tail_exponent=1.0)
    with pytest.raises(KoforgeError, match="increasing"):
        solve_glue_params(2.0, 2, wavy, constant(1))


def test_assemble_and_verify():
    params = solve_glue_params(2.0, 2, power(1, 1), constant(1))
    glued = assemble_u(params, 5.0, f=power(1, 1), ell=constant(1))
    assert glued.c1_value_gap <= 1e-8
    assert glued.c1_slope_gap <= 1e-6
    # origin regularity: cap slope vanishes at r = 0
    assert glued.up_inner[0] == 0.0
    assert glued.u_inner[0] == pytest.approx(params.beta0)
    assert np.all(glued.u_inner > 0) and np.all(glued.u_outer > 0)
    margin = verify_subsolution(glued)
    assert margin >= -1e-6
    # outer piece: the residual is exactly the curvature term (m-1)/r (w')^{p-1}
    ws = glued._ws
    r = glued.r_outer
    expected = (params.m - 1.0) / r * glued.up_outer ** (params.p - 1.0)
    from koforge.counterexample import _plap_outer

    plap = _plap_outer(ws, params, glued.u_outer, glued.up_outer, r)
    f_term = np.asarray(ws.f(glued.u_outer)) * np.asarray(ws.ell(glued.up_outer))
    assert np.allclose(plap - f_term, expected, rtol=1e-6)


def test_inner_plap_constant():
    from koforge.counterexample import _plap_inner

    for p, m, lam in [(2.0, 3, 1.0), (3.0, 3, 2.0), (1.5, 2, 0.7)]:
        params = GlueParams(p=p, m=m, glue_lambda=1.5, t_bar=0.2, beta0=1.0,
                            Lambda=lam, p_conj=p / (p - 1.0))
        r = np.linspace(0.0, 0.2, 33)
        plap = _plap_inner(params, r)
        assert np.max(np.abs(plap - m * lam ** (p - 1.0))) < 1e-10


def test_unbounded_over_doublings():
    params = solve_glue_params(2.0, 2, power(1, 1), constant(1))
    tops = []
    for r_max in (4.0, 8.0, 16.0):
        glued = assemble_u(params, r_max, f=power(1, 1), ell=constant(1))
        tops.append(float(glued.u_outer[-1]))
    assert tops[0] < tops[1] < tops[2]
    assert tops[2] > 100 * tops[0]


def test_p3_construction():
    params = solve_glue_params(3.0, 3, power(1, 2), constant(1))
    glued = assemble_u(params, 4.0, f=power(1, 2), ell=constant(1))
    assert verify_subsolution(glued) >= -1e-6
    assert glued.c1_value_gap <= 1e-8


def test_gradient_factor_construction():
    # nontrivial gradient factor: p = 3, ell = t (p > q + 1 holds)
    params = solve_glue_params(3.0, 2, power(1, 2), power(1, 1))
    glued = assemble_u(params, 4.0, f=power(1, 2), ell=power(1, 1))
    assert verify_subsolution(glued) >= -1e-6


def test_glue_params_validation():
    with pytest.raises(KoforgeError):
        GlueParams(p=2.0, m=2, glue_lambda=2.5, t_bar=0.1, beta0=1.0, Lambda=1.0,
                   p_conj=2.0)
    with pytest.raises(KoforgeError):
        GlueParams(p=2.0, m=2, glue_lambda=1.5, t_bar=0.1, beta0=-1.0, Lambda=1.0,
                   p_conj=2.0)
