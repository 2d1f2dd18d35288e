"""Structural hypothesis checks for diffusion-type inequalities.

A :class:`StructuralProfile` bundles the flux function phi, the gradient
factor ell, the source nonlinearity f, the radial coefficient envelope
b_tilde, the optional damping coefficient rho, and the scalar parameters
(theta, lambda, beta, mu, A, delta, chi, omega).  The checks decide the
controlled-oscillation ("C-increasing") conditions, the flux/gradient
compatibility conditions, the parameter-regime inequalities, and the
envelope condition, exactly by exponent arithmetic for built-in families
and by log-grid sampling otherwise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .funcs import (
    FunctionSpec,
    GridSpec,
    KoforgeError,
    constant,
    power,
    powered,
    product,
    spec_from_json,
)
from .transforms import classify_improper, kernel_integrand, phi_prime_spec

C_CAP = 1e6
_EXP_TOL = 1e-12


@dataclass
class StructuralProfile:
    """Function bundle plus scalar parameters for the condition checks."""

    phi: FunctionSpec
    ell: FunctionSpec
    f: FunctionSpec
    b_tilde: FunctionSpec
    rho: Optional[FunctionSpec] = None
    g_fn: Optional[FunctionSpec] = None
    h_fn: Optional[FunctionSpec] = None
    theta: float = 0.0
    lambda_b: float = 1.0
    beta: float = -2.0
    mu: float = 0.0
    A_bound: float = 1.0
    delta: float = 1.0
    chi: float = 0.0
    omega: float = 0.0
    c_increasing_tolerance: float = 1e-9

    def __post_init__(self):
        if self.lambda_b <= 0:
            raise KoforgeError("lambda_b must be positive")
        if self.delta <= 0 or self.chi < 0:
            raise KoforgeError("delta must be positive and chi non-negative")
        if self.c_increasing_tolerance <= 0:
            raise KoforgeError("c_increasing_tolerance must be positive")
        if self.beta < -2.0:
            # below -2 the curvature growth gives nothing new; clamp
            warnings.warn(
                f"beta={self.beta} clamped to -2 (no stronger conclusion below -2)",
                stacklevel=2,
            )
            self.beta = -2.0

    def power_pq(self) -> Optional[tuple]:
        """(p, q) when phi = t**(p-1) and ell = t**q up to positive constants."""
        if self.phi.family != "power":
            return None
        c_phi, a_phi = self.phi.params
        if c_phi <= 0:
            return None
        if self.ell.family == "power":
            c_ell, q = self.ell.params
            if c_ell <= 0:
                return None
        elif self.ell.family == "constant" and self.ell.params[0] > 0:
            q = 0.0
        else:
            return None
        return a_phi + 1.0, q

    @classmethod
    def from_json(cls, blob: dict) -> "StructuralProfile":
        known = {"phi", "ell", "f", "b_tilde", "rho", "g_fn", "h_fn", "theta",
                 "lambda_b", "beta", "mu", "A_bound", "delta", "chi", "omega",
                 "c_increasing_tolerance"}
        extra = set(blob) - known
        if extra:
            raise KoforgeError(f"unknown keys in profile block: {sorted(extra)}")
        kwargs = {}
        for key in ("phi", "ell", "f", "b_tilde"):
            if key not in blob:
                raise KoforgeError(f"profile block missing required function {key!r}")
            kwargs[key] = spec_from_json(blob[key])
        for key in ("rho", "g_fn", "h_fn"):
            if key in blob and blob[key] is not None:
                kwargs[key] = spec_from_json(blob[key])
        for key in ("theta", "lambda_b", "beta", "mu", "A_bound", "delta", "chi",
                    "omega", "c_increasing_tolerance"):
            if key in blob:
                kwargs[key] = float(blob[key])
        return cls(**kwargs)


@dataclass(frozen=True)
class ConditionEntry:
    name: str
    holds: str  # "yes" | "no" | "inconclusive"
    constant: Optional[float] = None
    witness: Optional[tuple] = None
    method: str = "sampled"  # "exact" | "sampled"

    def __post_init__(self):
        if self.holds not in ("yes", "no", "inconclusive"):
            raise KoforgeError(f"bad verdict {self.holds!r}")
        if self.holds == "no" and self.witness is None:
            raise KoforgeError(f"entry {self.name}: a 'no' verdict needs a witness")


class ConditionReport:
    """Named condition entries; serializes keyed by condition name."""

    def __init__(self):
        self.entries: dict[str, ConditionEntry] = {}

    def add(self, entry: ConditionEntry):
        self.entries[entry.name] = entry

    def __getitem__(self, name: str) -> ConditionEntry:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def holds(self, name: str) -> bool:
        return self.entries[name].holds == "yes"

    def all_hold(self) -> bool:
        return all(e.holds == "yes" for e in self.entries.values())

    def failures(self) -> list:
        return [e.name for e in self.entries.values() if e.holds == "no"]

    def merge(self, other: "ConditionReport") -> "ConditionReport":
        self.entries.update(other.entries)
        return self

    def to_json(self) -> dict:
        out = {}
        for name, e in self.entries.items():
            w = e.witness
            if w is not None:
                w = [float(x) for x in np.atleast_1d(np.asarray(w, dtype=float))]
            out[name] = {
                "holds": e.holds,
                "constant": None if e.constant is None else float(e.constant),
                "witness": w,
                "method": e.method,
            }
        return out


# -- C-increasing estimation -----------------------------------------------------


@dataclass(frozen=True)
class CIncreasingEstimate:
    holds: bool
    c_est: float
    witness: Optional[tuple]


def estimate_c_increasing(fn, grid: GridSpec | np.ndarray | None = None,
                          cap: float = C_CAP) -> CIncreasingEstimate:
    """Estimate the controlled-oscillation constant sup_{s<=t} fn(s)/fn(t).

    Works in log space so widely varying magnitudes cannot overflow; the
    estimate is clipped below at 1 and capped: beyond the cap the condition
    is reported as failing (an unbounded ratio means no finite constant).
    """
    if grid is None:
        grid = GridSpec()
    pts = grid.points() if isinstance(grid, GridSpec) else np.asarray(grid, dtype=float)
    vals = np.asarray(fn(pts), dtype=float)
    bad = ~(vals > 0) | ~np.isfinite(vals)
    if np.any(bad):
        t_bad = pts[np.argmax(bad)]
        raise KoforgeError(
            f"non-positive or non-finite sample at t={t_bad:.6g} "
            "(C-increasing estimation needs a positive function)"
        )
    logs = np.log(vals)
    run_max = np.maximum.accumulate(logs)
    gaps = run_max - logs
    i_t = int(np.argmax(gaps))
    log_c = float(gaps[i_t])
    i_s = int(np.argmax(logs[: i_t + 1]))
    c_est = float(np.exp(min(log_c, 700.0))) if log_c < 700.0 else float("inf")
    c_est = max(1.0, c_est)
    witness = (float(pts[i_s]), float(pts[i_t]))
    return CIncreasingEstimate(holds=c_est <= cap, c_est=c_est, witness=witness)


# -- exact monotone-signature shortcut ---------------------------------------------

# Factor classes over R+: t**e, log(1+t)**b, (1+t**2)**(k/2), exp(c*t**2).
# t * d/dt log(product) = (e + b) + b*(u(t)-1) + k*v(t) + 2*c*t**2 with
# u in (0,1] decreasing and v in [0,1) increasing, so a crude lower bound is
# (e + b) - max(b, 0) + min(k, 0); when it is >= 0 the product is
# non-decreasing and the oscillation constant is exactly 1.


def _factor_signature(spec: FunctionSpec):
    if spec.family == "power":
        c, a = spec.params
        if c <= 0:
            return None
        return {"e": a, "b": 0.0, "k": 0.0, "c": 0.0}
    if spec.family == "constant":
        return {"e": 0.0, "b": 0.0, "k": 0.0, "c": 0.0} if spec.params[0] > 0 else None
    if spec.family == "power-log":
        c, a, b = spec.params
        if c <= 0:
            return None
        return {"e": a, "b": b, "k": 0.0, "c": 0.0}
    if spec.family == "mean-curvature":
        return {"e": 1.0, "b": 0.0, "k": -1.0, "c": 0.0}
    if spec.family == "exp-power":
        return {"e": 1.0, "b": 0.0, "k": 0.0, "c": 1.0}
    if spec.family == "composite" and spec.op == "product":
        total = {"e": 0.0, "b": 0.0, "k": 0.0, "c": 0.0}
        for p in spec.parts:
            sig = _factor_signature(p)
            if sig is None:
                return None
            for key in total:
                total[key] += sig[key]
        return total
    return None


def _exact_c_increasing(spec: FunctionSpec) -> Optional[ConditionEntry]:
    sig = _factor_signature(spec)
    if sig is None:
        return None
    e, b, k, c = sig["e"], sig["b"], sig["k"], sig["c"]
    oe = e + b
    te = float("inf") if c > 0 else e + k
    if c < 0:
        return ConditionEntry("", "no", None, (1.0, 1e6), "exact")
    if oe < -_EXP_TOL:
        return ConditionEntry("", "no", None, (1e-6, 1.0), "exact")
    if te < -_EXP_TOL or (abs(te) <= _EXP_TOL and b < -_EXP_TOL):
        return ConditionEntry("", "no", None, (1.0, 1e6), "exact")
    lower_bound = oe - max(b, 0.0) + min(k, 0.0)
    if lower_bound >= -_EXP_TOL:
        return ConditionEntry("", "yes", 1.0, None, "exact")
    return None


def _c_increasing_entry(name: str, spec: FunctionSpec, grid, tol: float) -> ConditionEntry:
    exact = _exact_c_increasing(spec)
    if exact is not None:
        return replace(exact, name=name)
    est = estimate_c_increasing(spec, grid)
    holds = "yes" if est.holds else "no"
    if spec.family == "table" and est.holds and est.c_est > 1.0 + tol:
        # a table cannot certify behavior beyond its knots
        holds = "inconclusive"
    return ConditionEntry(name, holds, est.c_est, est.witness, "sampled")


# -- envelope comparisons (phi <= A t**delta, ell >= C t**chi) ---------------------


def _envelope_entry(name: str, spec: FunctionSpec, expo: float, bound: Optional[float],
                    side: str, grid) -> ConditionEntry:
    """side='upper': spec <= bound * t**expo; side='lower': spec >= C t**expo, C>0."""
    oe, te, tl = spec.origin_exponent, spec.tail_exponent, spec.tail_log_exponent
    pts = grid.points() if isinstance(grid, GridSpec) else np.asarray(grid, dtype=float)
    ratio = np.asarray(spec(pts), dtype=float) / np.power(pts, expo)
    method = "sampled"
    if spec.family == "power":
        method = "exact"
    if side == "upper":
        if te is not None and (te > expo + _EXP_TOL or
                               (abs(te - expo) <= _EXP_TOL and (tl or 0.0) > _EXP_TOL)):
            i = int(np.argmax(ratio))
            return ConditionEntry(name, "no", None, (float(pts[i]), float(ratio[i])),
                                  "exact" if method == "exact" else "sampled")
        if oe is not None and oe < expo - _EXP_TOL:
            return ConditionEntry(name, "no", None, (float(pts[0]), float(ratio[0])),
                                  "exact" if method == "exact" else "sampled")
        sup = float(np.max(ratio))
        if bound is not None and sup > bound * (1.0 + 1e-9):
            i = int(np.argmax(ratio))
            return ConditionEntry(name, "no", None, (float(pts[i]), float(ratio[i])), method)
        if te is None or oe is None:
            return ConditionEntry(name, "inconclusive", sup, None, "sampled")
        return ConditionEntry(name, "yes", sup, None, method)
    # lower envelope
    if te is not None and (te < expo - _EXP_TOL or
                           (abs(te - expo) <= _EXP_TOL and (tl or 0.0) < -_EXP_TOL)):
        i = int(np.argmin(ratio))
        return ConditionEntry(name, "no", None, (float(pts[i]), float(ratio[i])), method)
    if oe is not None and oe > expo + _EXP_TOL:
        return ConditionEntry(name, "no", None, (float(pts[0]), float(ratio[0])), method)
    inf = float(np.min(ratio))
    if inf <= 0:
        i = int(np.argmin(ratio))
        return ConditionEntry(name, "no", None, (float(pts[i]), float(ratio[i])), method)
    if te is None or oe is None:
        return ConditionEntry(name, "inconclusive", inf, None, "sampled")
    return ConditionEntry(name, "yes", inf, None, method)


# -- condition checks ---------------------------------------------------------------


def check_phi(profile: StructuralProfile, grid: Optional[GridSpec] = None) -> ConditionReport:
    """Flux conditions: positive slope, power upper envelope, flux domination."""
    grid = grid or GridSpec()
    phi = profile.phi
    report = ConditionReport()
    pts = grid.points()

    dphi = phi_prime_spec(phi)
    dvals = np.asarray(dphi(pts), dtype=float)
    if np.all(dvals > 0):
        method = "exact" if phi.family in ("power", "mean-curvature", "exp-power") else "sampled"
        report.add(ConditionEntry("Phi0", "yes", None, None, method))
    else:
        i = int(np.argmin(dvals))
        report.add(ConditionEntry("Phi0", "no", None, (float(pts[i]), float(dvals[i])),
                                  "sampled"))

    report.add(_envelope_entry("Phi1", phi, profile.delta, profile.A_bound, "upper", grid))

    # Phi2: exists C>0 with phi >= C t phi'(t); decide on the ratio phi/(t phi')
    if phi.family == "power":
        _, a = phi.params
        report.add(ConditionEntry("Phi2", "yes", 1.0 / a if a > 0 else None, None, "exact"))
    elif phi.family == "mean-curvature":
        report.add(ConditionEntry("Phi2", "yes", 1.0, None, "exact"))
    elif phi.family == "exp-power":
        t_w = 2.0
        gap = float(phi(t_w) - t_w * dphi(t_w))
        report.add(ConditionEntry("Phi2", "no", None, (t_w, gap), "exact"))
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.asarray(phi(pts), dtype=float) / (pts * dvals)
        tail = ratio[pts >= pts[-1] / 10.0]
        head = ratio[: max(8, len(pts) // 8)]
        if float(np.min(ratio)) <= 0:
            i = int(np.argmin(ratio))
            report.add(ConditionEntry("Phi2", "no", None, (float(pts[i]), float(ratio[i])),
                                      "sampled"))
        elif np.min(tail) < 0.2 * np.min(head) and tail[-1] < tail[0]:
            i = int(np.argmin(ratio))
            gap = float(phi(pts[i]) - pts[i] * dphi(pts[i]))
            report.add(ConditionEntry("Phi2", "no", None, (float(pts[i]), gap), "sampled"))
        elif phi.family == "table":
            report.add(ConditionEntry("Phi2", "inconclusive", float(np.min(ratio)), None,
                                      "sampled"))
        else:
            report.add(ConditionEntry("Phi2", "yes", float(np.min(ratio)), None, "sampled"))
    return report


def check_grad_ell(profile: StructuralProfile, grid: Optional[GridSpec] = None) -> ConditionReport:
    """Gradient-factor conditions: positivity, controlled oscillation, power floor."""
    grid = grid or GridSpec()
    ell = profile.ell
    report = ConditionReport()
    pts = grid.points()
    vals = np.asarray(ell(pts), dtype=float)
    if np.all(vals > 0):
        method = "exact" if ell.family in ("power", "constant", "mean-curvature",
                                           "exp-power") else "sampled"
        report.add(ConditionEntry("L1", "yes", None, None, method))
    else:
        i = int(np.argmin(vals))
        report.add(ConditionEntry("L1", "no", None, (float(pts[i]), float(vals[i])), "sampled"))
    report.add(_c_increasing_entry("L2", ell, grid, profile.c_increasing_tolerance))
    report.add(_envelope_entry("L3", ell, profile.chi, None, "lower", grid))
    return report


def check_theta(profile: StructuralProfile, grid: Optional[GridSpec] = None) -> ConditionReport:
    """Controlled oscillation of t**theta phi'/ell and t**(theta-1) phi/ell."""
    grid = grid or GridSpec()
    g1 = product(phi_prime_spec(profile.phi), power(1.0, profile.theta),
                 powered(profile.ell, -1.0))
    g2 = product(profile.phi, power(1.0, profile.theta - 1.0), powered(profile.ell, -1.0))
    report = ConditionReport()
    report.add(_c_increasing_entry("theta_1", g1, grid, profile.c_increasing_tolerance))
    report.add(_c_increasing_entry("theta_2", g2, grid, profile.c_increasing_tolerance))
    return report


def check_phi_ell(profile: StructuralProfile, grid: Optional[GridSpec] = None) -> ConditionReport:
    """Flux/gradient compatibility: vanishing ratio at 0+ and kernel integrability."""
    grid = grid or GridSpec()
    ratio = product(profile.phi, powered(profile.ell, -1.0))
    report = ConditionReport()

    oe = ratio.origin_exponent
    if oe is not None:
        if oe > _EXP_TOL:
            report.add(ConditionEntry("phi_ell_1", "yes", None, None, "exact"))
        else:
            t_w = 1e-6
            report.add(ConditionEntry("phi_ell_1", "no", None, (t_w, float(ratio(t_w))),
                                      "exact"))
    else:
        probes = np.geomspace(1e-9, 1e-3, 13)
        vals = np.asarray(ratio(probes), dtype=float)
        if vals[0] < 1e-6 and np.all(np.diff(vals) > 0):
            report.add(ConditionEntry("phi_ell_1", "yes", None, None, "sampled"))
        elif vals[0] > 1e-3 and vals[0] <= vals[-1]:
            report.add(ConditionEntry("phi_ell_1", "no", None,
                                      (float(probes[0]), float(vals[0])), "sampled"))
        else:
            report.add(ConditionEntry("phi_ell_1", "inconclusive", None, None, "sampled"))

    for name, kern in (("phi_ell_2", "K"), ("phi_ell_3", "Khat")):
        integrand = kernel_integrand(profile.phi, profile.ell, kern)
        at_zero = classify_improper(integrand, "zero")
        at_inf = classify_improper(integrand, "infinity")
        method = ("exact" if at_zero.method == "exact-exponent"
                  and at_inf.method == "exact-exponent" else "sampled")
        if at_zero.verdict == "Convergent" and at_inf.verdict == "Divergent":
            report.add(ConditionEntry(name, "yes", None, None, method))
        elif at_zero.verdict == "Inconclusive" or at_inf.verdict == "Inconclusive":
            report.add(ConditionEntry(name, "inconclusive", None, None, method))
        else:
            bad_end = 1e-6 if at_zero.verdict != "Convergent" else 1e6
            report.add(ConditionEntry(name, "no", None, (bad_end, float(integrand(bad_end))),
                                      method))
    return report


def _boundedness_entry(name: str, values: np.ndarray, pts: np.ndarray,
                       exact_exponent: Optional[float] = None,
                       has_log: bool = False) -> ConditionEntry:
    """Is the sampled expression bounded above as t -> oo?"""
    if exact_exponent is not None:
        if exact_exponent < -_EXP_TOL:
            return ConditionEntry(name, "yes", float(np.max(values)), None, "exact")
        if abs(exact_exponent) <= _EXP_TOL and not has_log:
            return ConditionEntry(name, "yes", float(np.max(values)), None, "exact")
        i = int(np.argmax(values))
        return ConditionEntry(name, "no", None, (float(pts[i]), float(values[i])), "exact")
    mask = pts >= pts[-1] / 100.0
    logs = np.log(np.maximum(values[mask], 1e-300))
    slope = float(np.polyfit(np.log(pts[mask]), logs, 1)[0])
    if slope < -0.02:
        return ConditionEntry(name, "yes", float(np.max(values)), None, "sampled")
    if slope > 0.02:
        i = int(np.argmax(values))
        return ConditionEntry(name, "no", None, (float(pts[i]), float(values[i])), "sampled")
    tail_growth = values[mask][-1] / max(values[mask][0], 1e-300)
    if tail_growth < 1.05:
        return ConditionEntry(name, "yes", float(np.max(values)), None, "sampled")
    return ConditionEntry(name, "inconclusive", float(np.max(values)), None, "sampled")


def check_parameter_regimes(profile: StructuralProfile, kind: str,
                            grid: Optional[GridSpec] = None) -> ConditionReport:
    """Pure inequality arithmetic over the scalar parameters (plus envelope
    boundedness for the integral-form regimes)."""
    th, be, mu, lam = profile.theta, profile.beta, profile.mu, profile.lambda_b
    report = ConditionReport()

    def arith(name, ok, witness_vals):
        holds = "yes" if ok else "no"
        report.add(ConditionEntry(name, holds, None,
                                  None if ok else tuple(witness_vals), "exact"))

    if kind == "thetabetamu":
        if mu > 0:
            ok = (th < 1.0 - be / 2.0 - mu) or (abs(th - (1.0 - be / 2.0 - mu)) <= _EXP_TOL
                                                and th < 1.0)
        else:
            ok = th < 1.0 - be / 2.0
        arith("thetabetamu", ok, (th, be, mu))
        return report

    if kind == "thetabetamu_prime":
        case1 = th <= 1.0 and mu > 0 and th < 1.0 - be / 2.0 - mu
        case2 = th < 1.0 and mu > 0 and abs(th - (1.0 - be / 2.0 - mu)) <= _EXP_TOL
        case3 = th <= 1.0 and mu == 0 and th < 1.0 - be / 2.0
        arith("thetabetamu_prime_case1", case1, (th, be, mu))
        arith("thetabetamu_prime_case2", case2, (th, be, mu))
        arith("thetabetamu_prime_case3", case3, (th, be, mu))
        arith("thetabetamu_prime", case1 or case2 or case3, (th, be, mu))
        return report

    if kind == "corA1":
        pq = profile.power_pq()
        if pq is None:
            raise KoforgeError("corA1 regime needs power-family flux and gradient factor")
        p, q = pq
        arith("corA1_pq", p > q + 1.0, (p, q))
        arith("corA1_mu", 0.0 <= mu <= p - q, (mu, p - q))
        arith("corA1_beta", be <= 2.0 * (p - q - mu - 1.0), (be, 2.0 * (p - q - mu - 1.0)))
        ok = (p > q + 1.0) and (0.0 <= mu <= p - q) and (be <= 2.0 * (p - q - mu - 1.0))
        arith("corA1", ok, (p, q, mu, be))
        return report

    if kind == "corA2":
        if profile.ell.family == "power":
            q = profile.ell.params[1]
        elif profile.ell.family == "constant":
            q = 0.0
        else:
            raise KoforgeError("corA2 regime needs a power gradient factor")
        ok = mu >= 0.0 and 0.0 <= q < -be / 2.0 - mu
        arith("corA2", ok, (q, be, mu))
        return report

    if kind in ("eq38", "eq66"):
        grid = grid or GridSpec(lo=1.0, hi=1e6, n=512)
        pts = grid.points()
        b = profile.b_tilde
        bl = powered(b, lam)
        b_vals = np.asarray(b(pts), dtype=float)
        bl_vals = np.asarray(bl(pts), dtype=float)
        running = np.concatenate(([0.0], np.cumsum(0.5 * (bl_vals[1:] + bl_vals[:-1])
                                                   * np.diff(pts))))
        is_power = b.family in ("power", "constant")
        b_exp = (b.tail_exponent or 0.0) if is_power else None

        def expr_entry(name, coeff_exp, with_integral):
            vals = np.power(pts, be / 2.0) * np.power(b_vals, coeff_exp)
            has_log = False
            exact = None
            if is_power:
                exact = be / 2.0 + b_exp * coeff_exp
                int_exp = b_exp * lam
                if with_integral:
                    if int_exp > -1.0 + _EXP_TOL:
                        exact += int_exp + 1.0
                    elif abs(int_exp + 1.0) <= _EXP_TOL:
                        has_log = True
            if with_integral:
                vals = vals * np.maximum(running, 1e-300)
            return _boundedness_entry(name, vals, pts, exact, has_log)

        if kind == "eq38":
            arith("eq38_lambda", lam * (2.0 - th) >= 1.0, (lam, th))
            e_i = expr_entry("eq38_i", lam * (1.0 - th) - 1.0, True)
            report.add(e_i)
            e_ii = expr_entry("eq38_ii_bound", lam * (1.0 - th) - 1.0, False)
            report.add(e_ii)
            arith("eq38_ii_theta", th < 1.0, (th,))
            ok_lam = lam * (2.0 - th) >= 1.0
            ok = ok_lam and (e_i.holds == "yes" or (e_ii.holds == "yes" and th < 1.0))
            inc = ok_lam and not ok and (e_i.holds == "inconclusive"
                                         or e_ii.holds == "inconclusive")
            report.add(ConditionEntry("eq38", "inconclusive" if inc else
                                      ("yes" if ok else "no"), None,
                                      None if (ok or inc) else (lam, th, be), "exact"
                                      if is_power else "sampled"))
        else:
            if th == 1.0:
                arith("eq66_lambda", lam >= 1.0, (lam,))
                e = expr_entry("eq66_bound", -1.0, True)
            else:
                arith("eq66_lambda", lam * (2.0 - th) >= 1.0, (lam, th))
                e = expr_entry("eq66_bound", lam * (1.0 - th) - 1.0, False)
            report.add(e)
            ok = report["eq66_lambda"].holds == "yes" and e.holds == "yes"
            inc = report["eq66_lambda"].holds == "yes" and e.holds == "inconclusive"
            report.add(ConditionEntry("eq66", "inconclusive" if inc else
                                      ("yes" if ok else "no"), None,
                                      None if (ok or inc) else (lam, th, be),
                                      e.method))
        return report

    raise KoforgeError(f"unknown parameter regime {kind!r}")


def check_b_tilde(profile: StructuralProfile, grid: Optional[GridSpec] = None) -> ConditionReport:
    """Envelope condition: positive, eventually non-increasing, with
    non-integrable lambda-power at infinity."""
    grid = grid or GridSpec(lo=1e-3, hi=1e6, n=1024)
    pts = grid.points()
    b = profile.b_tilde
    report = ConditionReport()
    vals = np.asarray(b(pts), dtype=float)
    if np.all(vals > 0):
        report.add(ConditionEntry("b_positive", "yes", None, None,
                                  "exact" if b.family in ("power", "constant") else "sampled"))
    else:
        i = int(np.argmin(vals))
        report.add(ConditionEntry("b_positive", "no", None,
                                  (float(pts[i]), float(vals[i])), "sampled"))

    dvals = np.asarray(b.derivative(pts), dtype=float)
    pos = dvals > profile.c_increasing_tolerance
    if not np.any(pos):
        report.add(ConditionEntry("b_eventually_nonincreasing", "yes", float(pts[0]), None,
                                  "exact" if b.family in ("power", "constant") else "sampled"))
    elif pos[-1]:
        i = len(pts) - 1
        report.add(ConditionEntry("b_eventually_nonincreasing", "no", None,
                                  (float(pts[i]), float(dvals[i])), "sampled"))
    else:
        t_scan = float(pts[int(np.nonzero(pos)[0][-1]) + 1])
        report.add(ConditionEntry("b_eventually_nonincreasing", "yes", t_scan, None, "sampled"))

    verdict = classify_improper(powered(b, profile.lambda_b), "infinity")
    method = "exact" if verdict.method == "exact-exponent" else "sampled"
    if verdict.verdict == "Divergent":
        report.add(ConditionEntry("b_lambda_nonintegrable", "yes", None, None, method))
    elif verdict.verdict == "Convergent":
        report.add(ConditionEntry("b_lambda_nonintegrable", "no", None,
                                  (1e6, float(b(1e6)) ** profile.lambda_b), method))
    else:
        report.add(ConditionEntry("b_lambda_nonintegrable", "inconclusive", None, None, method))

    summary = ("yes" if all(report[k].holds == "yes" for k in
                            ("b_positive", "b_eventually_nonincreasing",
                             "b_lambda_nonintegrable"))
               else ("no" if any(report[k].holds == "no" for k in report.entries)
                     else "inconclusive"))
    witness = None
    if summary == "no":
        first_bad = next(e for e in report.entries.values() if e.holds == "no")
        witness = first_bad.witness
    report.add(ConditionEntry("b", summary, None, witness,
                              "exact" if method == "exact" else "sampled"))
    return report
