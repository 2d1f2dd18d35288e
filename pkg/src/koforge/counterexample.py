"""Entire subsolution witnessing necessity of the blow-up condition.

When the tail integral of 1/Kinv(F) diverges, the p-Laplace inequality
Delta_p u >= f(u) ell(|grad u|) on flat R^m admits an entire classical weak
subsolution, built in two radial pieces:

* outside a ball: u1 = w(|x|) with w defined implicitly by inverting the
  running integral of 1/Kinv(F) from level 1, so w' = Kinv(F(w));
* inside the ball: the polynomial cap u2 = Lambda r**p'/p' + beta0 (p' the
  conjugate exponent), whose radial p-Laplacian is the constant
  m * Lambda**(p-1).

A geometric scan over glue levels lam = 1 + 2**-k picks parameters making
the two pieces match to first order at the glue radius while the cap's
constant p-Laplacian still dominates the nonlinearity there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .funcs import FunctionSpec, GridSpec, KoforgeError, constant, power
from .structural import StructuralProfile, estimate_c_increasing
from .transforms import MonotoneMap, classify_ko, invert_monotone, kernel_map

_MATCH_TOL = 1e-8
_SLOPE_TOL = 1e-6


@dataclass(frozen=True)
class GlueParams:
    """Parameters of the two-piece subsolution; validated on construction."""

    p: float
    m: int
    glue_lambda: float
    t_bar: float
    beta0: float
    Lambda: float
    p_conj: float

    def __post_init__(self):
        if not 1.0 < self.glue_lambda <= 2.0:
            raise KoforgeError("glue level must lie in (1, 2]")
        if self.beta0 <= 0 or self.Lambda <= 0 or self.t_bar <= 0:
            raise KoforgeError("glue parameters must be positive")

    def to_json(self) -> dict:
        return {
            "p": self.p, "m": self.m, "glue_lambda": self.glue_lambda,
            "t_bar": self.t_bar, "beta0": self.beta0, "Lambda": self.Lambda,
            "p_conj": self.p_conj,
        }


@dataclass(frozen=True, eq=False)
class GluedSolution:
    params: GlueParams
    r_inner: np.ndarray
    u_inner: np.ndarray
    up_inner: np.ndarray
    r_outer: np.ndarray
    u_outer: np.ndarray
    up_outer: np.ndarray
    c1_value_gap: float
    c1_slope_gap: float
    _ws: object = field(default=None, repr=False)

    CSV_HEADER = ("r", "u", "u_prime", "plap_u", "f_term", "residual")


class _WWorkspace:
    """Kernel and level maps for the outer implicit profile."""

    def __init__(self, p: float, f: FunctionSpec, ell: FunctionSpec):
        if p <= 1:
            raise KoforgeError("need p > 1")
        self.p = p
        self.f = f
        self.ell = ell
        self.phi = power(1.0, p - 1.0)
        prof = StructuralProfile(phi=self.phi, ell=ell, f=f, b_tilde=constant(1.0))
        verdict = classify_ko(prof, "KO")
        if verdict.verdict == "Convergent":
            raise KoforgeError(
                "blow-up condition holds: the entire subsolution would cap out"
            )
        self.kmap = kernel_map(self.phi, ell, "K")
        self.fmap = MonotoneMap.from_integrand(f, 0.0, origin_exponent=f.origin_exponent)

        def recip(s):
            s = np.asarray(s, dtype=float)
            return 1.0 / self.kmap.inverse_refined(self.fmap.forward_refined(s))

        # running integral of 1/Kinv(F) from level 1
        self.level_map = MonotoneMap.from_integrand(recip, 1.0, t_first=1.0 + 1e-9)

    def kinv_F(self, s):
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = self.kmap.inverse_refined(self.fmap.forward_refined(arr))
        return float(out[0]) if np.ndim(s) == 0 else out

    def w(self, t):
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = self.level_map.inverse_refined(arr)
        return float(out[0]) if np.ndim(t) == 0 else out


def build_w(profile_or_p, t, ell: Optional[FunctionSpec] = None,
            f: Optional[FunctionSpec] = None):
    """Outer profile value w(t), with w(0)=1 and w' = Kinv(F(w)).

    Accepts either a StructuralProfile (its phi must be a p-Laplacian power)
    or an explicit exponent p with f and ell keywords.
    """
    if isinstance(profile_or_p, StructuralProfile):
        prof = profile_or_p
        pq = prof.power_pq()
        if pq is None:
            raise KoforgeError("outer profile needs a power flux (p-Laplacian)")
        ws = _WWorkspace(pq[0], prof.f, prof.ell)
    else:
        ws = _WWorkspace(float(profile_or_p), f, ell or constant(1.0))
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise KoforgeError("radius must be non-negative")
    return ws.w(t)


def probe_lambda(p: float, m: int, f: FunctionSpec, ell: FunctionSpec, lam: float,
                 _ws: Optional[_WWorkspace] = None) -> dict:
    """Evaluate the glue system at a candidate level lam in (1, 2]."""
    ws = _ws or _WWorkspace(p, f, ell)
    p_conj = p / (p - 1.0)
    t_bar = ws.level_map.forward(lam)
    kf = ws.kinv_F(lam)
    first = kf * t_bar / p_conj
    beta0 = lam - first
    Lambda = kf * t_bar ** (1.0 - p_conj)
    cap_plap = m * Lambda ** (p - 1.0)
    demand = float(f(lam)) * float(ell(kf))
    return {
        "lam": lam,
        "t_bar": t_bar,
        "kinv_F_lam": kf,
        "beta0": beta0,
        "Lambda": Lambda,
        "feasible_i": beta0 > 0,
        "feasible_iii": cap_plap >= demand,
        "cap_plap": cap_plap,
        "demand": demand,
    }


def solve_glue_params(p: float, m: int, f: FunctionSpec, ell: FunctionSpec,
                      max_halvings: int = 40) -> GlueParams:
    """Scan lam = 1 + 2**-k, k = 0, 1, ... and return the first feasible glue."""
    if m < 2 or int(m) != m:
        raise KoforgeError("ambient dimension m must be an integer >= 2")
    f_mono = estimate_c_increasing(f, GridSpec(1e-6, 1e3, 1024))
    if not f_mono.holds or f_mono.c_est > 1.0 + 1e-9:
        raise KoforgeError("the source nonlinearity must be increasing for the glue")
    if f.origin_exponent is not None and f.origin_exponent <= 0 and f.family != "table":
        if f.family == "constant" or f.origin_exponent < 1e-12:
            raise KoforgeError("the source nonlinearity must vanish at 0")
    ell_mono = estimate_c_increasing(ell, GridSpec(1e-6, 1e3, 1024))
    if not ell_mono.holds or ell_mono.c_est > 1.0 + 1e-9:
        raise KoforgeError("the gradient factor must be non-decreasing for the glue")

    ws = _WWorkspace(p, f, ell)
    failures = []
    for k in range(max_halvings + 1):
        lam = 1.0 + 2.0 ** (-k)
        probe = probe_lambda(p, m, f, ell, lam, _ws=ws)
        if probe["feasible_i"] and probe["feasible_iii"]:
            params = GlueParams(
                p=p, m=int(m), glue_lambda=lam, t_bar=probe["t_bar"],
                beta0=probe["beta0"], Lambda=probe["Lambda"],
                p_conj=p / (p - 1.0),
            )
            _validate_glue(params, ws)
            return params
        failures.append((lam, probe["feasible_i"], probe["feasible_iii"]))
    raise KoforgeError(
        "no feasible glue level found; per-probe (lam, cap>0, domination): "
        + ", ".join(f"({l:.4g},{a},{b})" for l, a, b in failures[-5:])
    )


def _validate_glue(params: GlueParams, ws: _WWorkspace):
    lam, tb = params.glue_lambda, params.t_bar
    kf = ws.kinv_F(lam)
    res_i = abs(kf * tb / params.p_conj + params.beta0 - lam)
    res_ii = abs(params.Lambda * tb ** (params.p_conj - 1.0) - kf)
    if res_i > _MATCH_TOL or res_ii > _MATCH_TOL:
        raise KoforgeError(f"glue system residuals too large: {res_i:.2e}, {res_ii:.2e}")
    cap = params.m * params.Lambda ** (params.p - 1.0)
    # the two admissible evaluation points of the gradient factor coincide
    slope_cap = params.Lambda * tb ** (params.p_conj - 1.0)
    if abs(slope_cap - kf) > _MATCH_TOL * max(1.0, kf):
        raise KoforgeError("cap slope and outer slope disagree at the glue radius")
    if cap < float(ws.f(lam)) * float(ws.ell(kf)) - _MATCH_TOL:
        raise KoforgeError("cap p-Laplacian does not dominate the nonlinearity")


def assemble_u(params: GlueParams, r_max: float, grid: int = 2048,
               f: Optional[FunctionSpec] = None, ell: Optional[FunctionSpec] = None,
               _ws: Optional[_WWorkspace] = None) -> GluedSolution:
    """Populate the two radial pieces and assert the first-order match."""
    if r_max <= params.t_bar:
        raise KoforgeError("r_max must exceed the glue radius")
    ws = _ws or _WWorkspace(params.p, f, ell or constant(1.0))
    pc = params.p_conj
    r_in = np.linspace(0.0, params.t_bar, max(grid // 4, 64))
    u_in = params.Lambda / pc * r_in ** pc + params.beta0
    up_in = params.Lambda * r_in ** (pc - 1.0)
    r_out = np.linspace(params.t_bar, r_max, grid)
    u_out = ws.w(r_out)
    up_out = ws.kinv_F(u_out)
    gap_v = abs(u_in[-1] - u_out[0])
    gap_s = abs(up_in[-1] - up_out[0])
    if gap_v > _MATCH_TOL * max(1.0, abs(u_out[0])) or gap_s > _SLOPE_TOL:
        raise KoforgeError(f"first-order match fails at the glue radius: "
                           f"value gap {gap_v:.2e}, slope gap {gap_s:.2e}")
    return GluedSolution(
        params=params, r_inner=r_in, u_inner=u_in, up_inner=up_in,
        r_outer=r_out, u_outer=u_out, up_outer=up_out,
        c1_value_gap=float(gap_v), c1_slope_gap=float(gap_s), _ws=ws,
    )


def _plap_inner(params: GlueParams, r: np.ndarray) -> np.ndarray:
    """Radial p-Laplacian of the polynomial cap: constant m*Lambda**(p-1).

    Evaluated through the combined-exponent closed formula so the r -> 0
    limit needs no special handling beyond the exact r = 0 value.
    """
    p, pc, lam = params.p, params.p_conj, params.Lambda
    e1 = (pc - 1.0) * (p - 2.0) + (pc - 2.0)  # algebraically zero
    e2 = (pc - 1.0) * (p - 1.0) - 1.0         # algebraically zero
    out = np.empty_like(r)
    pos = r > 0
    out[pos] = ((p - 1.0) * (pc - 1.0) * lam ** (p - 1.0) * r[pos] ** e1
                + (params.m - 1.0) * lam ** (p - 1.0) * r[pos] ** e2)
    out[~pos] = params.m * lam ** (p - 1.0)
    return out


def _plap_outer(ws: _WWorkspace, params: GlueParams, w: np.ndarray, wp: np.ndarray,
                r: np.ndarray) -> np.ndarray:
    p = params.p
    # w'' = f(w) ell(w') / phi'(w') from differentiating w' = Kinv(F(w))
    phi_p = (p - 1.0) * wp ** (p - 2.0)
    wpp = np.asarray(ws.f(w), dtype=float) * np.asarray(ws.ell(wp), dtype=float) / phi_p
    return (p - 1.0) * wp ** (p - 2.0) * wpp + (params.m - 1.0) / r * wp ** (p - 1.0)


def verify_subsolution(glued: GluedSolution) -> float:
    """Min normalized residual of Delta_p u - f(u) ell(|u'|) over both pieces."""
    ws = glued._ws
    params = glued.params
    plap_in = _plap_inner(params, glued.r_inner)
    f_in = (np.asarray(ws.f(glued.u_inner), dtype=float)
            * np.asarray(ws.ell(glued.up_inner), dtype=float))
    plap_out = _plap_outer(ws, params, glued.u_outer, glued.up_outer, glued.r_outer)
    f_out = (np.asarray(ws.f(glued.u_outer), dtype=float)
             * np.asarray(ws.ell(glued.up_outer), dtype=float))
    resid = np.concatenate((plap_in - f_in, plap_out - f_out))
    scale = np.concatenate((np.maximum(np.abs(plap_in), np.abs(f_in)),
                            np.maximum(np.abs(plap_out), np.abs(f_out))))
    return float(np.min(resid / np.maximum(scale, 1e-300)))


def residual_rows(glued: GluedSolution):
    """Per-radius CSV rows across both pieces (inner first)."""
    ws = glued.params, glued._ws
    params, w = ws
    plap_in = _plap_inner(params, glued.r_inner)
    f_in = (np.asarray(w.f(glued.u_inner), dtype=float)
            * np.asarray(w.ell(glued.up_inner), dtype=float))
    plap_out = _plap_outer(w, params, glued.u_outer, glued.up_outer, glued.r_outer)
    f_out = (np.asarray(w.f(glued.u_outer), dtype=float)
             * np.asarray(w.ell(glued.up_outer), dtype=float))
    for i in range(len(glued.r_inner)):
        yield (glued.r_inner[i], glued.u_inner[i], glued.up_inner[i],
               plap_in[i], f_in[i], plap_in[i] - f_in[i])
    for i in range(len(glued.r_outer)):
        yield (glued.r_outer[i], glued.u_outer[i], glued.up_outer[i],
               plap_out[i], f_out[i], plap_out[i] - f_out[i])
