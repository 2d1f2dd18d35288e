"""Weighted comparison geometry on radial model manifolds.

A model here is a radial warped product with a radial weight: base dimension
m, synthetic dimension n > m, warping s(r) with s(0)=0, s'(0)=1, and a
log-weight w(r) (density D = exp(w)).  On such models every comparison
quantity has a one-dimensional formula:

    Lr            = (m-1) s'/s + w'
    Ricc_{n,m}    = -(m-1) s''/s - w'' - w'^2/(n-m)      (radial component)
    area_D(r)     = c_m s(r)^(m-1) e^{w(r)},  ball_D by the co-area formula

so the comparison ODE h'' = G h, the sphere/ball quotient monotonicity, and
the L^p integral-curvature volume bounds are all directly testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .funcs import FunctionSpec, KoforgeError, constant, power, spec_from_json, table

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def sphere_area(m: int) -> float:
    """Surface area of the unit (m-1)-sphere in R^m."""
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


def flat_warp() -> FunctionSpec:
    return power(1.0, 1.0)


def sinh_warp(B: float = 1.0) -> FunctionSpec:
    """s(r) = sinh(B r)/B: constant radial curvature -B^2 warping."""
    if B <= 0:
        raise KoforgeError("sinh warp rate must be positive")
    kt = np.geomspace(1e-8, 64.0, 2048)
    fn = lambda r: np.sinh(B * np.asarray(r, float)) / B
    return table(
        kt,
        fn(kt),
        fn=fn,
        deriv=lambda r: np.cosh(B * np.asarray(r, float)),
        deriv2=lambda r: B * np.sinh(B * np.asarray(r, float)),
        origin_exponent=1.0,
        label=f"sinh({B}r)/{B}",
    )


@dataclass
class ModelManifold:
    """Radial warped-product weighted model."""

    m: int
    n: float
    warp: FunctionSpec
    log_weight: FunctionSpec
    sphere_constant: float = None

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise KoforgeError("base dimension m must be an integer >= 2")
        self.m = int(self.m)
        if not self.n > self.m:
            raise KoforgeError("synthetic dimension n must exceed m")
        if self.sphere_constant is None:
            self.sphere_constant = sphere_area(self.m)
        s0 = float(self.warp(1e-8))
        sp0 = float(self.warp.derivative(1e-8))
        if abs(s0) > 1e-6 or abs(sp0 - 1.0) > 1e-4:
            raise KoforgeError("warp must satisfy s(0)=0, s'(0)=1")

    @classmethod
    def flat(cls, m: int, n: float, log_weight: Optional[FunctionSpec] = None) -> "ModelManifold":
        return cls(m=m, n=n, warp=flat_warp(), log_weight=log_weight or constant(0.0))

    @classmethod
    def from_json(cls, blob: dict) -> "ModelManifold":
        known = {"m", "n", "warp", "log_weight", "G"}
        extra = set(blob) - known
        if extra:
            raise KoforgeError(f"unknown keys in model block: {sorted(extra)}")
        warp_blob = blob.get("warp", {"kind": "flat"})
        if isinstance(warp_blob, dict) and warp_blob.get("kind") == "flat":
            warp = flat_warp()
        elif isinstance(warp_blob, dict) and warp_blob.get("kind") == "sinh":
            warp = sinh_warp(warp_blob.get("B", 1.0))
        else:
            warp = spec_from_json(warp_blob)
        lw = blob.get("log_weight")
        log_weight = constant(0.0) if lw is None else spec_from_json(lw)
        return cls(m=blob["m"], n=blob["n"], warp=warp, log_weight=log_weight)


def model_Lr(model: ModelManifold, r) -> float | np.ndarray:
    """Drift Laplacian of the distance function: (m-1) s'/s + w'."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise KoforgeError("model_Lr needs r > 0")
    s = model.warp
    out = (model.m - 1) * s.derivative(r_arr) / np.asarray(s(r_arr)) \
        + model.log_weight.derivative(r_arr)
    return float(out) if np.ndim(r) == 0 else out


def ricci_nm_radial(model: ModelManifold, r, n: Optional[float] = None) -> float | np.ndarray:
    """Radial component of the modified Bakry-Emery Ricci tensor."""
    r_arr = np.asarray(r, dtype=float)
    n_eff = model.n if n is None else n
    s = model.warp
    w = model.log_weight
    wp = w.derivative(r_arr)
    out = (
        -(model.m - 1) * s.second_derivative(r_arr) / np.asarray(s(r_arr))
        - w.second_derivative(r_arr)
        - wp * wp / (n_eff - model.m)
    )
    return float(out) if np.ndim(r) == 0 else out


# -- comparison ODE ---------------------------------------------------------------


@dataclass
class ComparisonSolution:
    """Solution of h'' = G h with h(0)=0, h'(0)=1 on a uniform grid."""

    r: np.ndarray
    h: np.ndarray
    hp: np.ndarray
    first_zero: Optional[float] = None
    _h_interp: PchipInterpolator = field(default=None, repr=False)
    _hp_interp: PchipInterpolator = field(default=None, repr=False)

    def h_at(self, r):
        if self._h_interp is None:
            object.__setattr__(self, "_h_interp", PchipInterpolator(self.r, self.h))
        return self._h_interp(r)

    def hp_at(self, r):
        if self._hp_interp is None:
            object.__setattr__(self, "_hp_interp", PchipInterpolator(self.r, self.hp))
        return self._hp_interp(r)


def solve_h(G: FunctionSpec, r_max: float, grid: int = 4096) -> ComparisonSolution:
    """Integrate the comparison ODE h'' = G h from a series start at 0.

    Classic fixed-step RK4; the step count is raised so the global error on
    smooth curvature functions stays near 1e-10.  The first zero beyond the
    origin, if any, is located by sign change plus interpolation.
    """
    if r_max <= 0:
        raise KoforgeError("r_max must be positive")
    n_steps = max(int(grid), 4096)
    r0 = r_max * 1e-9
    g0 = float(G(0.0)) if _safe_at_zero(G) else float(G(r0))
    h = r0 + g0 * r0 ** 3 / 6.0
    hp = 1.0 + g0 * r0 ** 2 / 2.0
    rs = np.linspace(r0, r_max, n_steps + 1)
    dt = rs[1] - rs[0]
    hs = np.empty_like(rs)
    hps = np.empty_like(rs)
    hs[0], hps[0] = h, hp

    g_mid = np.asarray(G(rs[:-1] + 0.5 * dt), dtype=float)
    g_lo = np.asarray(G(rs[:-1]), dtype=float)
    g_hi = np.asarray(G(rs[1:]), dtype=float)
    for i in range(n_steps):
        k1h = hp
        k1p = g_lo[i] * h
        k2h = hp + 0.5 * dt * k1p
        k2p = g_mid[i] * (h + 0.5 * dt * k1h)
        k3h = hp + 0.5 * dt * k2p
        k3p = g_mid[i] * (h + 0.5 * dt * k2h)
        k4h = hp + dt * k3p
        k4p = g_hi[i] * (h + dt * k3h)
        h = h + dt * (k1h + 2 * k2h + 2 * k3h + k4h) / 6.0
        hp = hp + dt * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0
        hs[i + 1] = h
        hps[i + 1] = hp
        if not (np.isfinite(h) and np.isfinite(hp)):
            raise KoforgeError(f"comparison ODE step failed near r={rs[i + 1]:.6g}")

    first_zero = None
    neg = np.nonzero(hs <= 0)[0]
    if neg.size:
        j = int(neg[0])
        lo, hi_ = rs[j - 1], rs[j]
        flo, fhi = hs[j - 1], hs[j]
        for _ in range(80):
            mid = 0.5 * (lo + hi_)
            fm = _rk4_probe(G, rs[j - 1], hs[j - 1], hps[j - 1], mid)
            if fm > 0:
                lo, flo = mid, fm
            else:
                hi_, fhi = mid, fm
        first_zero = 0.5 * (lo + hi_)
        keep = slice(0, j)
        rs, hs, hps = rs[keep], hs[keep], hps[keep]
    return ComparisonSolution(r=rs, h=hs, hp=hps, first_zero=first_zero)


def _safe_at_zero(G: FunctionSpec) -> bool:
    try:
        return bool(np.isfinite(G(0.0)))
    except Exception:
        return False


def _rk4_probe(G, r_start, h, hp, r_target, n=32):
    """Re-integrate h over [r_start, r_target] to refine a zero crossing."""
    dt = (r_target - r_start) / n
    r = r_start
    for _ in range(n):
        g1 = float(G(r))
        gm = float(G(r + 0.5 * dt))
        g2 = float(G(r + dt))
        k1h, k1p = hp, g1 * h
        k2h, k2p = hp + 0.5 * dt * k1p, gm * (h + 0.5 * dt * k1h)
        k3h, k3p = hp + 0.5 * dt * k2p, gm * (h + 0.5 * dt * k2h)
        k4h, k4p = hp + dt * k3p, g2 * (h + dt * k3h)
        h = h + dt * (k1h + 2 * k2h + 2 * k3h + k4h) / 6.0
        hp = hp + dt * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0
        r += dt
    return h


def lr_comparison_bound(sol: ComparisonSolution, n: float, r) -> float | np.ndarray:
    """The comparison upper bound (n-1) h'(r)/h(r)."""
    r_arr = np.asarray(r, dtype=float)
    if sol.first_zero is not None and np.any(r_arr >= sol.first_zero):
        raise KoforgeError(f"radius beyond the first zero {sol.first_zero:.6g} of h")
    if np.any(r_arr > sol.r[-1]):
        raise KoforgeError("radius beyond the computed range")
    out = (n - 1.0) * sol.hp_at(r_arr) / sol.h_at(r_arr)
    return float(out) if np.ndim(r) == 0 else out


def check_riccati_inequality(model: ModelManifold, r_range, n: Optional[float] = None) -> float:
    """Max over the grid of (Lr)^2/(n-1) + d(Lr)/dr + Ricc_{n,m}.

    On a valid model (n > m) this is non-positive; the optional n override
    exists so hypothesis-violating witnesses can be evaluated.
    """
    r = _as_grid(r_range)
    if np.any(r < 1e-3):
        raise KoforgeError("Riccati check needs r >= 1e-3 (coordinate singularity)")
    n_eff = model.n if n is None else n
    s, w = model.warp, model.log_weight
    sv = np.asarray(s(r))
    sp = s.derivative(r)
    spp = s.second_derivative(r)
    lr = (model.m - 1) * sp / sv + w.derivative(r)
    dlr = (model.m - 1) * (spp / sv - (sp / sv) ** 2) + w.second_derivative(r)
    resid = lr * lr / (n_eff - 1.0) + dlr + ricci_nm_radial(model, r, n=n_eff)
    return float(np.max(resid))


def verify_bochner_radial(model: ModelManifold, u: FunctionSpec, r_range) -> float:
    """Max mismatch of the two sides of the weighted Bochner identity on
    radial functions, using the closed radial formulas for both."""
    r = _as_grid(r_range)
    if np.any(r <= 0):
        raise KoforgeError("Bochner check needs r > 0")
    s, w = model.warp, model.log_weight
    sv = np.asarray(s(r))
    sp = s.derivative(r)
    spp = s.second_derivative(r)
    wp = w.derivative(r)
    wpp = w.second_derivative(r)
    up = u.derivative(r)
    upp = u.second_derivative(r)
    # third derivative via 4th-order differences of the exact second derivative
    hstep = np.maximum(1e-4, 1e-4 * r)
    uppp = (
        u.second_derivative(r - 2 * hstep)
        - 8.0 * u.second_derivative(r - hstep)
        + 8.0 * u.second_derivative(r + hstep)
        - u.second_derivative(r + 2 * hstep)
    ) / (12.0 * hstep)

    lr = (model.m - 1) * sp / sv + wp
    lr_p = (model.m - 1) * (spp / sv - (sp / sv) ** 2) + wpp
    # L(|grad u|^2)/2 with |grad u|^2 = u'^2
    lhs = upp * upp + up * uppp + lr * up * upp
    hess_sq = upp * upp + (model.m - 1) * (up * sp / sv) ** 2
    lu_p = uppp + lr * upp + up * lr_p
    ricci_drift = -(model.m - 1) * spp / sv - wpp
    rhs = hess_sq + lu_p * up + ricci_drift * up * up
    return float(np.max(np.abs(lhs - rhs)))


# -- volume comparison --------------------------------------------------------------


@dataclass
class VolumeTable:
    radii: np.ndarray
    area_D: np.ndarray
    ball_D: np.ndarray
    A_Gn: np.ndarray
    V_Gn: np.ndarray
    ratio_area: np.ndarray
    ratio_ball: np.ndarray

    CSV_HEADER = ("r", "area_D", "ball_D", "A_Gn", "V_Gn", "ratio_area", "ratio_ball")

    def rows(self):
        for i in range(len(self.radii)):
            yield (self.radii[i], self.area_D[i], self.ball_D[i], self.A_Gn[i],
                   self.V_Gn[i], self.ratio_area[i], self.ratio_ball[i])


def _as_grid(r_range) -> np.ndarray:
    if isinstance(r_range, tuple) and len(r_range) == 3:
        return np.linspace(*r_range)
    return np.asarray(r_range, dtype=float)


def _cumulative(fn, radii: np.ndarray, head_from: float = 0.0) -> np.ndarray:
    """Running integral of fn along the radii (Gauss-Legendre per segment)."""
    edges = np.concatenate(([head_from], radii))
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.asarray(fn(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return np.cumsum(half * (vals @ _GL_WEIGHTS))


def volume_table(model: ModelManifold, sol: ComparisonSolution, radii) -> VolumeTable:
    """Weighted sphere/ball measures of the model next to the comparison
    model's, with their quotients."""
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise KoforgeError("radii must be positive and strictly increasing")
    if sol.first_zero is not None and radii[-1] >= sol.first_zero:
        raise KoforgeError("radii extend past the first zero of the comparison solution")
    if radii[-1] > sol.r[-1]:
        raise KoforgeError("radii extend past the computed comparison range")
    m, n = model.m, model.n
    s, w = model.warp, model.log_weight

    def area_fn(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore"):
            return (model.sphere_constant * np.asarray(s(r)) ** (m - 1)
                    * np.exp(np.asarray(w(r))))

    def a_gn_fn(r):
        return np.asarray(sol.h_at(r)) ** (n - 1.0)

    area = area_fn(radii)
    ball = _cumulative(area_fn, radii)
    a_gn = a_gn_fn(radii)
    v_gn = _cumulative(a_gn_fn, radii)
    return VolumeTable(
        radii=radii,
        area_D=area,
        ball_D=ball,
        A_Gn=a_gn,
        V_Gn=v_gn,
        ratio_area=area / a_gn,
        ratio_ball=ball / v_gn,
    )


def check_ratio_monotonicity(tbl: VolumeTable, rel_tol: float = 1e-9):
    """Scan both quotient columns for an increase beyond the tolerance.

    Returns (monotone, violation) with violation = (radius, column) or None.
    """
    for name, col in (("ratio_area", tbl.ratio_area), ("ratio_ball", tbl.ratio_ball)):
        bad = np.nonzero(col[1:] > col[:-1] * (1.0 + rel_tol))[0]
        if bad.size:
            return False, (float(tbl.radii[int(bad[0]) + 1]), name)
    return True, None


# -- L^p integral-curvature volume bounds ---------------------------------------------


def petersen_constant(n: float, p: float) -> float:
    """The explicit constant (1/(n-1) - 1/(2p-1))**(-p), defined for p > n/2.

    Evaluated in the rearranged form ((n-1)(2p-1)/(2p-n))**p, which avoids
    the subtractive cancellation of the literal expression.
    """
    if p <= n / 2.0:
        raise KoforgeError(f"need p > n/2 (got p={p}, n={n})")
    return ((n - 1.0) * (2.0 * p - 1.0) / (2.0 * p - n)) ** p


def petersen_volume_bound(
    model: ModelManifold,
    G: FunctionSpec,
    n: float,
    p: float,
    r0: float,
    R: float,
    grid: int = 800,
):
    """Volume-quotient bound under an L^p bound on the curvature deficit.

    Returns (bound, diagnostics); the bound dominates ball_D(R)/V_Gn(R) and
    the diagnostics carry the two sides of the psi-vs-deficit inequality.
    """
    if not 0 < r0 < R:
        raise KoforgeError("need 0 < r0 < R")
    c_np = petersen_constant(n, p)
    sol = solve_h(G, R * 1.01, grid=max(4096, grid * 4))
    r = np.union1d(np.linspace(R / grid * 1e-3, R, grid), [r0])

    def deficit(rr):
        rr = np.asarray(rr, dtype=float)
        return np.maximum(0.0, -(ricci_nm_radial(model, rr, n=n)
                                 + (n - 1.0) * np.asarray(G(rr), dtype=float)))

    def area_fn(rr):
        rr = np.asarray(rr, dtype=float)
        return (model.sphere_constant * np.asarray(model.warp(rr)) ** (model.m - 1)
                * np.exp(np.asarray(model.log_weight(rr))))

    def psi_fn(rr):
        rr = np.asarray(rr, dtype=float)
        return np.maximum(0.0, model_Lr(model, rr)
                          - (n - 1.0) * np.asarray(sol.hp_at(rr)) / np.asarray(sol.h_at(rr)))

    def a_gn_fn(rr):
        return np.asarray(sol.h_at(rr)) ** (n - 1.0)

    rho_p_int = _cumulative(lambda rr: deficit(rr) ** p * area_fn(rr), r)
    v_gn = _cumulative(a_gn_fn, r)
    ball = _cumulative(area_fn, r)
    a_gn = a_gn_fn(r)

    f_vals = (c_np ** (1.0 / (2 * p)) * r * a_gn / v_gn ** (1.0 + 1.0 / (2 * p))
              * rho_p_int ** (1.0 / (2 * p)))

    i0 = int(np.searchsorted(r, r0))
    ball_r0 = float(np.interp(r0, r, ball))
    v_r0 = float(np.interp(r0, r, v_gn))
    c_r0 = (ball_r0 / v_r0) ** (1.0 / (2 * p))
    mask = r >= r0
    f_int = float(np.trapezoid(np.concatenate(([np.interp(r0, r, f_vals)], f_vals[mask])),
                               np.concatenate(([r0], r[mask]))))
    bound = (c_r0 + f_int / (2.0 * p)) ** (2.0 * p)

    lemma_lhs = float(_cumulative(lambda rr: psi_fn(rr) ** (2 * p) * area_fn(rr), r)[-1])
    lemma_rhs = c_np * float(rho_p_int[-1])
    diagnostics = {
        "psi_excess": float(np.max(psi_fn(r))),
        "ricci_deficit": float(np.max(deficit(r))),
        "lemma26_lhs": lemma_lhs,
        "lemma26_rhs": lemma_rhs,
        "ball_over_vgn_at_R": float(ball[-1] / v_gn[-1]),
        "constant_r0": c_r0 ** (2.0 * p),
    }
    return float(bound), diagnostics
