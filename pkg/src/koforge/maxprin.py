"""Weak-maximum-principle constants and growth-threshold arithmetic.

The principle bounds the constant K in the weak inequality

    div(D |grad u|^{-1} phi(|grad u|) grad u) >= K (1+r)^{-mu} |grad u|^chi D

over a superlevel set, in terms of the growth rate sigma of u, the flux
envelope exponents (A, delta), the gradient floor exponent chi, and the
weighted volume growth d0.  The bound is piecewise in the sign pattern of
(sigma - eta, eta) with eta = mu + (sigma-1)(1+delta-chi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .funcs import KoforgeError

_TOL = 1e-12


@dataclass(frozen=True)
class WmpParams:
    sigma_growth: float
    delta: float
    chi: float
    mu: float
    d0: float
    A_bound: float = 1.0

    def __post_init__(self):
        if self.sigma_growth < 0:
            raise KoforgeError("growth exponent sigma must be non-negative")
        if not (0 <= self.chi < self.delta):
            raise KoforgeError("need 0 <= chi < delta")
        if self.sigma_growth - self.eta < -_TOL:
            raise KoforgeError("need sigma - eta >= 0")
        if self.d0 < 0:
            raise KoforgeError("volume growth d0 must be non-negative")

    @property
    def eta(self) -> float:
        return self.mu + (self.sigma_growth - 1.0) * (1.0 + self.delta - self.chi)

    def to_json(self) -> dict:
        return {"sigma": self.sigma_growth, "delta": self.delta, "chi": self.chi,
                "mu": self.mu, "d0": self.d0, "A": self.A_bound, "eta": self.eta}


def wmp_constant(params: WmpParams) -> tuple[float, str]:
    """Piecewise-exact constant of the weak maximum principle.

    Returns (value, branch).  Branches: the degenerate sigma = 0 case, the
    two sign cases of eta when sigma - eta > 0, and the critical case
    sigma - eta = 0 with its own degenerate subcase.
    """
    s = params.sigma_growth
    eta = params.eta
    nu_exp = 1.0 + params.delta - params.chi
    gap = s - eta
    if gap > _TOL:
        if s <= _TOL:
            return 0.0, "sigma_zero"
        if eta < 0:
            return params.A_bound * params.d0 * gap ** nu_exp, "eta_negative"
        return (params.A_bound * params.d0 * s ** (params.delta - params.chi) * gap,
                "eta_nonnegative")
    # critical line sigma == eta
    if s <= _TOL:
        return 0.0, "sigma_zero_critical"
    drift = params.delta * (s - 1.0) + params.d0 - 1.0
    if drift <= 0:
        return 0.0, "critical_degenerate"
    return (params.A_bound * s ** (params.delta - params.chi) * drift,
            "critical")


def theoremB_threshold(
    params: WmpParams,
    f_liminf_positive: bool,
    volume_table=None,
    sup_finite_when_sigma_zero: bool = True,
) -> dict:
    """Classify whether the growth/volume hypotheses force a finite supremum
    with non-positive source value there.

    With a model volume table the relevant volume-growth quotient is
    evaluated along its radii; its minimum over the last decade stands in
    for the liminf, and a clearly growing quotient marks the hypothesis as
    failed (classification inconclusive).
    """
    s = params.sigma_growth
    gap = s - params.eta
    d0_est = params.d0
    quotient = None
    volume_ok = True
    if volume_table is not None:
        radii = np.asarray(volume_table.radii, dtype=float)
        ball = np.asarray(volume_table.ball_D, dtype=float)
        with np.errstate(divide="ignore"):
            log_ball = np.log(np.maximum(ball, 1e-300))
        if gap > _TOL:
            quotient = log_ball / radii ** gap
        else:
            quotient = log_ball / np.log(np.maximum(radii, 1.0 + 1e-12))
        last = radii >= radii[-1] / 10.0
        q_last = quotient[last]
        finite = np.isfinite(q_last)
        if np.count_nonzero(finite) < 3:
            volume_ok = False  # the weighted volume overflowed: clearly diverging
            d0_est = float("inf")
        else:
            d0_est = float(np.min(q_last[finite]))
            slope = float(np.polyfit(np.log(radii[last][finite]), q_last[finite], 1)[0])
            rising = slope > 0.05 * max(abs(d0_est), 1.0)
            volume_ok = not rising and np.all(finite)
    if s > _TOL:
        growth_ok = f_liminf_positive
    else:
        growth_ok = sup_finite_when_sigma_zero
    conclusive = growth_ok and volume_ok
    return {
        "classification": "forces_finite_sup_nonpositive_f" if conclusive else "inconclusive",
        "d0_estimate": d0_est,
        "volume_condition": volume_ok,
        "growth_condition": growth_ok,
        "quotient_curve": None if quotient is None else quotient.tolist(),
    }


@dataclass(frozen=True)
class SharpnessReport:
    p: float
    m: int
    residual_max: float
    u_hat: float
    bound_value: float
    plap_value: float
    branch: str

    def to_json(self) -> dict:
        return {"p": self.p, "m": self.m, "residual_max": self.residual_max,
                "u_hat": self.u_hat, "bound_value": self.bound_value,
                "plap_value": self.plap_value, "branch": self.branch}


def sharpness_example(p: float, m: int, r_grid) -> SharpnessReport:
    """The borderline profile u = r**p'/p' on flat R^m.

    Its radial p-Laplacian is exactly m, and u/r**p' tends to 1/p' rather
    than 0, so the growth hypothesis fails only barely at sigma = p'.  At
    that critical sigma (with delta = p-1, chi = mu = 0, d0 = m) the bound
    equals m: the principle is sharp on this example.
    """
    if p <= 1:
        raise KoforgeError("need p > 1")
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0):
        raise KoforgeError("radial grid must be positive")
    pc = p / (p - 1.0)
    up = r ** (pc - 1.0)
    # combined-exponent closed formula; both exponents are algebraically 0
    e1 = (pc - 1.0) * (p - 2.0) + (pc - 2.0)
    e2 = (pc - 1.0) * (p - 1.0) - 1.0
    plap = (p - 1.0) * (pc - 1.0) * r ** e1 + (m - 1.0) * r ** e2
    residual_max = float(np.max(np.abs(plap - m)))
    u_hat = float((r[-1] ** pc / pc) / r[-1] ** pc)  # -> 1/p'
    params = WmpParams(sigma_growth=pc, delta=p - 1.0, chi=0.0, mu=0.0,
                       d0=float(m), A_bound=1.0)
    c_value, branch = wmp_constant(params)
    bound = c_value * max(u_hat, 0.0) ** (params.delta - params.chi)
    return SharpnessReport(p=p, m=int(m), residual_max=residual_max, u_hat=u_hat,
                           bound_value=float(bound), plap_value=float(m), branch=branch)
