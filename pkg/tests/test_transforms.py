"""Transforms: primitives, kernels, monotone inversion, and classification."""

import numpy as np
import pytest

from koforge.funcs import (
    KoforgeError,
    constant,
    from_callable,
    mean_curvature,
    power,
    power_log,
    product,
    powered,
)
from koforge.structural import StructuralProfile
from koforge.transforms import (
    MonotoneMap,
    classify_improper,
    classify_ko,
    compute_F,
    compute_Fhat,
    compute_K,
    invert_monotone,
    kernel_map,
)


def _profile(phi, ell, f, **kw):
    return StructuralProfile(phi=phi, ell=ell, f=f, b_tilde=constant(1.0), **kw)


# -- source primitive ---------------------------------------------------------------


def test_compute_F_closed_form_and_zero():
    # antiderivative oracle: t**(q+1)/(q+1)
    assert compute_F(power(1.0, 2.0), 1.0) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert compute_F(power(1.0, 2.0), 0.0) == 0.0
    assert compute_F(power(2.0, -0.5), 4.0) == pytest.approx(2 * 2 * 2.0, rel=1e-9)


def test_compute_F_log_source_against_composite_rule():
    f = power_log(1.0, 1.0, 3.0)
    grid = np.linspace(0.0, 1.0, 1_000_001)
    oracle = float(np.trapezoid(grid * np.log1p(grid) ** 3, grid))
    assert compute_F(f, 1.0) == pytest.approx(oracle, rel=1e-8)


def test_compute_F_divergent_at_zero_errors():
    with pytest.raises(KoforgeError):
        compute_F(power(1.0, -1.5), 1.0)


def test_compute_Fhat_reductions_and_value():
    f = power(1.0, 2.0)
    rho = constant(1.0)
    # omega = 2 kills the exponential factor exactly
    for t in (0.5, 1.0, 3.0):
        assert compute_Fhat(f, rho, 2.0, t) == pytest.approx(compute_F(f, t), abs=1e-10)
    # zero damping likewise
    assert compute_Fhat(f, constant(0.0), 0.0, 1.0) == pytest.approx(compute_F(f, 1.0), abs=1e-10)
    # f = 1, rho = 1, omega = 1: integral of e**s
    assert compute_Fhat(constant(1.0), rho, 1.0, 1.0) == pytest.approx(np.e - 1.0, rel=1e-9)


def test_compute_Fhat_overflow_reports_location():
    with pytest.raises(KoforgeError, match="s="):
        compute_Fhat(constant(1.0), constant(1.0), 0.0, 500.0)


# -- kernels ------------------------------------------------------------------------


def test_kernel_closed_forms():
    # (p-1) t**p / p for the power flux
    assert compute_K(power(1.0, 1.0), constant(1.0), 2.0) == pytest.approx(2.0, rel=1e-10)
    assert compute_K(power(1.0, 2.0), constant(1.0), 1.0) == pytest.approx(2.0 / 3.0, rel=1e-10)
    assert compute_K(power(1.0, 1.0), constant(1.0), 0.0) == 0.0
    # sqrt(1+t**2) - 1 for the mean curvature flux under the alternate kernel
    assert compute_K(mean_curvature(), constant(1.0), 1.0, kernel="Khat") == pytest.approx(
        np.sqrt(2.0) - 1.0, rel=1e-10
    )


def test_kernel_guard_names_failing_condition():
    with pytest.raises(KoforgeError, match="phi-ell"):
        # p <= q makes the kernel integrand non-integrable at 0
        compute_K(power(1.0, 0.5), power(1.0, 2.0), 1.0)


def test_singular_kernel_endpoint():
    # p = 1.5: integrand ~ t**-0.5 at the origin
    val = compute_K(power(1.0, 0.5), constant(1.0), 1.0)
    assert val == pytest.approx(0.5 * 1.0 ** 1.5 / 1.5, rel=1e-8)


# -- monotone map --------------------------------------------------------------------


def test_monotone_map_basics():
    m = MonotoneMap.from_integrand(power(1.0, 1.0), 0.0)
    assert m.forward(0.0) == 0.0
    assert np.all(np.diff(m.knots_y) > 0)
    # inverse of forward is the identity on the knots
    sample = m.knots_t[:: max(1, len(m.knots_t) // 40)]
    for t in sample:
        y = m.forward(float(t))
        assert invert_monotone(m, y) == pytest.approx(float(t), rel=1e-8)


def test_invert_monotone_examples():
    m = MonotoneMap.from_integrand(power(1.0, 1.0), 0.0)  # forward = t^2/2
    assert invert_monotone(m, 2.0) == pytest.approx(2.0, rel=1e-8)
    assert invert_monotone(m, 0.0) == 0.0
    with pytest.raises(KoforgeError):
        invert_monotone(m, -1.0)
    # mean curvature alternate kernel: forward = sqrt(1+t^2)-1
    mk = kernel_map(mean_curvature(), constant(1.0), "Khat")
    assert invert_monotone(mk, np.sqrt(2.0) - 1.0) == pytest.approx(1.0, rel=1e-8)


def test_round_trip_on_log_points():
    for integrand in (power(1.0, 1.0), power(2.0, 0.3),
                      product(power(1.0, 1.0), powered(power(1.0, 0.5), -1.0))):
        m = MonotoneMap.from_integrand(integrand, 0.0,
                                       origin_exponent=integrand.origin_exponent)
        pts = np.geomspace(1e-3, 1e3, 100)
        ys = np.array([m.forward(float(t)) for t in pts])
        back = np.array([invert_monotone(m, float(y)) for y in ys])
        assert np.max(np.abs(back - pts) / pts) < 1e-8


def test_inverse_refined_matches_rigorous_inverse():
    m = MonotoneMap.from_integrand(power(3.0, 2.0), 0.0)  # forward = t^3
    ys = np.geomspace(1e-4, 1e8, 64)
    fast = m.inverse_refined(ys)
    assert np.allclose(fast, np.cbrt(ys), rtol=1e-9)


def test_extension_beyond_float_range_errors():
    m = MonotoneMap.from_integrand(power(1.0, 1.0), 0.0)
    with pytest.raises(KoforgeError):
        m.ensure_t(1e301)


# -- improper classification ----------------------------------------------------------


def test_classify_improper_exact_cases():
    assert classify_improper(power(1.0, -2.0), "infinity").verdict == "Convergent"
    assert classify_improper(power(1.0, -1.0), "infinity").verdict == "Divergent"
    assert classify_improper(power(1.0, -0.5), "zero").verdict == "Convergent"
    assert classify_improper(power(1.0, -1.5), "zero").verdict == "Divergent"
    v = classify_improper(power_log(1.0, -1.0, -3.0), "infinity")
    assert v.verdict == "Convergent" and v.method == "exact-exponent"
    assert classify_improper(power_log(1.0, -1.0, -1.0), "infinity").verdict == "Divergent"


def test_bertrand_oracle_by_decade_summation():
    # independent oracle: sum the integral decade by decade over 10 decades;
    # beta = -3 plainly saturates, beta = -1 keeps growing
    from scipy.integrate import quad

    def decades(beta):
        chunks = []
        for k in range(10):
            val, _ = quad(lambda t: (1 / t) * np.log1p(t) ** beta,
                          10.0 ** (k + 1), 10.0 ** (k + 2), limit=200)
            chunks.append(val)
        return np.array(chunks)

    conv = decades(-3.0)
    div = decades(-1.0)
    assert conv[-1] / conv[0] < 0.05                       # terms collapse
    assert np.sum(conv[5:]) < 0.05 * np.sum(conv)          # partial sums saturate
    assert np.sum(div[5:]) > 0.25 * np.sum(div[:5])        # partial sums keep growing
    assert classify_improper(power_log(1.0, -1.0, -3.0), "infinity").verdict == "Convergent"
    assert classify_improper(power_log(1.0, -1.0, -1.0), "infinity").verdict == "Divergent"


def test_numeric_classification_without_hints():
    decaying = from_callable(lambda t: (1.0 + t) ** -2.3, 1e-6, 1e7,
                             tail_exponent=None)
    v = classify_improper(decaying, "infinity")
    assert v.method == "numeric-tail"
    assert v.verdict == "Convergent"
    assert len(v.evidence) >= 6
    limits = [l for l, _ in v.evidence]
    assert max(limits) / min(limits) >= 1e4
    growing = from_callable(lambda t: np.sqrt(t), 1e-6, 1e7, tail_exponent=None)
    assert classify_improper(growing, "infinity").verdict == "Divergent"
    critical = from_callable(lambda t: 1.0 / (1.0 + t), 1e-6, 1e7, tail_exponent=None)
    assert classify_improper(critical, "infinity").verdict in ("Divergent", "Inconclusive")


def test_sign_change_errors():
    wobble = from_callable(lambda t: np.sin(t), 1e-6, 1e7, tail_exponent=None)
    with pytest.raises(KoforgeError):
        classify_improper(wobble, "infinity")


# -- blow-up condition classification --------------------------------------------------


def test_ko_power_threshold():
    for q, want in [(0.5, "Divergent"), (1.0, "Divergent"),
                    (1.5, "Convergent"), (3.0, "Convergent")]:
        v = classify_ko(_profile(power(1, 1), constant(1), power(1, q)))
        assert (v.verdict, v.method) == (want, "exact-exponent")


def test_ko_general_power_threshold():
    # s+1 > p-q is the convergence line for the power family
    for p, q, s, want in [(3.0, 0.0, 2.5, "Convergent"), (3.0, 0.0, 2.0, "Divergent"),
                          (2.5, 0.5, 1.5, "Convergent"), (2.5, 0.5, 1.0, "Divergent")]:
        v = classify_ko(_profile(power(1, p - 1),
                                 constant(1) if q == 0 else power(1, q),
                                 power(1, s)))
        assert v.verdict == want, (p, q, s)


def test_ko_log_refinement():
    for b, want in [(3.0, "Convergent"), (1.0, "Divergent")]:
        v = classify_ko(_profile(power(1, 1), constant(1), power_log(1, 1, b)))
        assert v.verdict == want


def test_ko_khat_mean_curvature():
    # alternate kernel: threshold s+1 > 1-q
    prof = _profile(mean_curvature(), constant(1), power(1, 2))
    assert classify_ko(prof, "Khat_O").verdict == "Convergent"
    prof = _profile(mean_curvature(), constant(1), power(1, -0.5))
    assert classify_ko(prof, "Khat_O").verdict == "Divergent"
    # plain kernel fails its integrability guard for the mean curvature flux
    with pytest.raises(KoforgeError, match="phi-ell"):
        classify_ko(prof, "KO")


def test_ko_sigma_scale_invariance():
    battery = [
        (2.0, 0.0, 0.5), (2.0, 0.0, 1.0), (2.0, 0.0, 1.5), (2.0, 0.0, 3.0),
        (3.0, 0.0, 1.5), (3.0, 0.0, 2.5), (3.0, 1.0, 1.5), (3.0, 1.0, 0.5),
        (2.5, 0.5, 1.2), (2.5, 0.5, 0.8), (2.2, 0.0, 1.4), (2.2, 1.0, 0.3),
        (4.0, 2.0, 1.4), (4.0, 2.0, 0.6), (2.0, 0.5, 1.1),
    ]
    checked = 0
    for p, q, s in battery:
        prof = _profile(power(1, p - 1), constant(1) if q == 0 else power(1, q),
                        power(1, s))
        base = classify_ko(prof, "KO", 1.0).verdict
        if base == "Inconclusive":
            continue
        for scale in (0.25, 4.0):
            assert classify_ko(prof, "KO", scale).verdict == base
        checked += 1
    assert checked >= 12


def test_ko_sigma_scale_invariance_numeric_path():
    f = from_callable(lambda t: t ** 2.5 / (1.0 + 0.5 * np.cos(np.log1p(t)) ** 2), 1e-8, 1e7,
                      origin_exponent=2.5, tail_exponent=None)
    prof = _profile(power(1, 1), constant(1), f)
    base = classify_ko(prof, "KO", 1.0)
    assert base.method == "numeric-tail"
    if base.verdict != "Inconclusive":
        for scale in (0.25, 4.0):
            assert classify_ko(prof, "KO", scale).verdict == base.verdict


def test_scaling_bound_via_oscillation_constant():
    # sigma**(1/(2-theta)) / Kinv(sigma F) <= B / Kinv(F) with B from the
    # oscillation constant of the kernel integrand weight
    from koforge.structural import estimate_c_increasing
    from koforge.funcs import GridSpec

    for p, q, theta in [(2.0, 0.0, 0.0), (3.0, 1.0, 0.0), (2.5, 0.5, 0.5)]:
        phi = power(1, p - 1)
        ell = constant(1) if q == 0 else power(1, q)
        prof = _profile(phi, ell, power(1, 2), theta=theta)
        from koforge.transforms import phi_prime_spec

        g1 = product(phi_prime_spec(phi), power(1.0, theta), powered(ell, -1.0))
        est = estimate_c_increasing(g1, GridSpec(1e-4, 1e4, 1024))
        assert est.holds
        B = est.c_est ** (1.0 / (2.0 - theta))
        kmap = kernel_map(phi, ell, "K")
        ts = np.geomspace(0.1, 1e3, 60)
        F = np.array([compute_F(prof.f, float(t)) for t in ts])
        for sigma in (0.5, 0.1, 0.01):
            lhs = sigma ** (1.0 / (2.0 - theta)) / kmap.inverse_refined(sigma * F)
            rhs = B / kmap.inverse_refined(F)
            assert np.all(lhs <= rhs * (1.0 + 1e-9))


def test_rho_equivalence_battery():
    # integrable damping with omega <= 2 leaves every verdict unchanged
    rho = product(mean_curvature(), power(1, -1), mean_curvature(), power(1, -1))
    battery = [(2.0, 0.0, s) for s in (0.5, 1.5, 3.0)] + \
              [(3.0, 0.0, s) for s in (1.5, 2.5)] + \
              [(2.5, 0.5, s) for s in (0.8, 1.6)]
    for p, q, s in battery:
        for omega in (0.0, 1.0, 2.0):
            prof = _profile(power(1, p - 1), constant(1) if q == 0 else power(1, q),
                            power(1, s), rho=rho, omega=omega)
            plain = classify_ko(prof, "KO").verdict
            damped = classify_ko(prof, "rhoKO").verdict
            if "Inconclusive" not in (plain, damped):
                assert plain == damped, (p, q, s, omega)


def test_exact_verdicts_never_inconclusive():
    from koforge.transforms import ConvergenceVerdict

    with pytest.raises(KoforgeError):
        ConvergenceVerdict("Inconclusive", "infinity", None, (), "exact-exponent")
