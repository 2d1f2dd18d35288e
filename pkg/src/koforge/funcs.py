"""Univariate function atoms on [0, oo).

Everything downstream (condition checks, integral transforms, barrier
construction) consumes functions through :class:`FunctionSpec`: a family tag
plus parameters, an evaluator, optional exact derivatives, and asymptotic
exponent hints.  The hints drive the exact (exponent-arithmetic) decision
paths; when they are missing the callers fall back to sampled decisions.

Built-in families
-----------------
power(c, a)          c * t**a
power-log(c, a, b)   c * t**a * log(1+t)**b
mean-curvature       t / sqrt(1 + t**2)
exp-power            t * exp(t**2)
constant(c)          c
table                sampled knots with monotone (PCHIP) interpolation,
                     optionally backed by exact value/derivative handles
composite            finite sum or product of the above
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator


class KoforgeError(Exception):
    """Domain error raised by library operations."""


FAMILIES = (
    "power",
    "power-log",
    "mean-curvature",
    "exp-power",
    "constant",
    "table",
    "composite",
)

# Relative/absolute floor for the finite-difference fallback step.
_FD_STEP = 1e-6
# 4th-order central difference coefficients for f' on a +/-2h stencil.
_FD4 = (1.0, -8.0, 8.0, -1.0)


def _fd_derivative(fn: Callable, t, h_scale: float = _FD_STEP):
    """4th-order central difference with relative step h = max(h0, h0*t)."""
    t = np.asarray(t, dtype=float)
    h = np.maximum(h_scale, h_scale * np.abs(t))
    num = (
        _FD4[0] * fn(t - 2 * h)
        + _FD4[1] * fn(t - h)
        + _FD4[2] * fn(t + h)
        + _FD4[3] * fn(t + 2 * h)
    )
    return num / (12.0 * h)


@dataclass(frozen=True)
class FunctionSpec:
    """A univariate real function on [0, oo) with derivative and hint data.

    Immutable after construction; evaluation is vectorized over numpy arrays
    and safe to call from concurrent readers.
    """

    family: str
    params: tuple = ()
    label: str = ""
    fn: Optional[Callable] = None
    deriv: Optional[Callable] = None
    deriv2: Optional[Callable] = None
    origin_exponent: Optional[float] = None
    tail_exponent: Optional[float] = None
    tail_log_exponent: Optional[float] = None
    # table family only
    knots_t: Optional[np.ndarray] = field(default=None, repr=False)
    knots_y: Optional[np.ndarray] = field(default=None, repr=False)
    # composite family only
    op: Optional[str] = None
    parts: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KoforgeError(f"unknown function family {self.family!r}")
        if self.family == "table":
            if self.knots_t is None or self.knots_y is None:
                raise KoforgeError("table family requires knot arrays")
            interp = PchipInterpolator(self.knots_t, self.knots_y, extrapolate=True)
            object.__setattr__(self, "_interp", interp)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        out = self._eval(t if not scalar else t.reshape(1))
        return float(out[0]) if scalar else out

    def _eval(self, t: np.ndarray) -> np.ndarray:
        fam = self.family
        if fam == "power":
            c, a = self.params
            return c * np.power(t, a)
        if fam == "power-log":
            c, a, b = self.params
            return c * np.power(t, a) * np.power(np.log1p(t), b)
        if fam == "mean-curvature":
            return t / np.sqrt(1.0 + t * t)
        if fam == "exp-power":
            with np.errstate(over="ignore"):
                return t * np.exp(t * t)
        if fam == "constant":
            return np.full_like(t, float(self.params[0]))
        if fam == "table":
            if self.fn is not None:
                return np.asarray(self.fn(t), dtype=float)
            return self._interp(t)
        # composite: fold constant parts into a scalar to skip allocations
        if self.op == "sum":
            return np.sum([p._eval(t) for p in self.parts], axis=0)
        scalar = 1.0
        out = None
        for p in self.parts:
            if p.family == "constant":
                scalar *= p.params[0]
                continue
            v = p._eval(t)
            out = v if out is None else out * v
        if out is None:
            return np.full_like(t, scalar)
        return out if scalar == 1.0 else scalar * out

    # -- derivatives --------------------------------------------------------

    def derivative(self, t):
        """First derivative: exact for built-ins, handle or FD fallback."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = t.reshape(1) if scalar else t
        out = self._d1(tt)
        return float(out[0]) if scalar else out

    def _d1(self, t: np.ndarray) -> np.ndarray:
        fam = self.family
        if fam == "power":
            c, a = self.params
            return c * a * np.power(t, a - 1.0)
        if fam == "power-log":
            c, a, b = self.params
            L = np.log1p(t)
            return c * np.power(t, a - 1.0) * np.power(L, b - 1.0) * (a * L + b * t / (1.0 + t))
        if fam == "mean-curvature":
            return np.power(1.0 + t * t, -1.5)
        if fam == "exp-power":
            with np.errstate(over="ignore"):
                return np.exp(t * t) * (1.0 + 2.0 * t * t)
        if fam == "constant":
            return np.zeros_like(t)
        if fam == "table":
            if self.deriv is not None:
                return np.asarray(self.deriv(t), dtype=float)
            return self._interp.derivative()(t)
        if fam == "composite":
            if self.op == "sum":
                return np.sum([p._d1(t) for p in self.parts], axis=0)
            # product rule through log-derivative; parts are positive on R+
            vals = [p._eval(t) for p in self.parts]
            ders = [p._d1(t) for p in self.parts]
            prod = vals[0].copy()
            for v in vals[1:]:
                prod *= v
            acc = np.zeros_like(t)
            for v, d in zip(vals, ders):
                acc += d / v
            return prod * acc
        if self.deriv is not None:
            return np.asarray(self.deriv(t), dtype=float)
        return _fd_derivative(self._eval, t)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tt = t.reshape(1) if scalar else t
        out = self._d2(tt)
        return float(out[0]) if scalar else out

    def _d2(self, t: np.ndarray) -> np.ndarray:
        fam = self.family
        if fam == "power":
            c, a = self.params
            return c * a * (a - 1.0) * np.power(t, a - 2.0)
        if fam == "power-log":
            c, a, b = self.params
            L = np.log1p(t)
            u = 1.0 + t
            return c * (
                a * (a - 1.0) * np.power(t, a - 2.0) * np.power(L, b)
                + 2.0 * a * b * np.power(t, a - 1.0) * np.power(L, b - 1.0) / u
                + b * (b - 1.0) * np.power(t, a) * np.power(L, b - 2.0) / (u * u)
                - b * np.power(t, a) * np.power(L, b - 1.0) / (u * u)
            )
        if fam == "mean-curvature":
            return -3.0 * t * np.power(1.0 + t * t, -2.5)
        if fam == "exp-power":
            with np.errstate(over="ignore"):
                return np.exp(t * t) * (6.0 * t + 4.0 * t ** 3)
        if fam == "constant":
            return np.zeros_like(t)
        if fam == "table" and self.deriv2 is not None:
            return np.asarray(self.deriv2(t), dtype=float)
        if fam == "table" and self.deriv is not None:
            return _fd_derivative(lambda x: np.asarray(self.deriv(x), dtype=float), t)
        if fam == "composite":
            return _fd_derivative(self._d1, t)
        if self.deriv2 is not None:
            return np.asarray(self.deriv2(t), dtype=float)
        return _fd_derivative(self._d1, t)

    # -- misc ----------------------------------------------------------------

    @property
    def has_exact_deriv(self) -> bool:
        if self.family in ("power", "power-log", "mean-curvature", "exp-power", "constant"):
            return True
        if self.family == "table":
            return self.deriv is not None
        if self.family == "composite":
            return self.op == "sum" or all(p.has_exact_deriv for p in self.parts)
        return False

    def describe(self) -> str:
        return self.label or f"{self.family}{self.params}"

    def to_json(self) -> dict:
        out = {"family": self.family, "params": list(self.params)}
        if self.label:
            out["label"] = self.label
        return out


# -- constructors -------------------------------------------------------------


def power(c: float, a: float) -> FunctionSpec:
    """c * t**a."""
    return FunctionSpec(
        family="power",
        params=(float(c), float(a)),
        label=f"{c}*t^{a}",
        origin_exponent=float(a),
        tail_exponent=float(a),
        tail_log_exponent=0.0,
    )


def power_log(c: float, a: float, b: float) -> FunctionSpec:
    """c * t**a * log(1+t)**b.  Behaves like t**(a+b) at 0+ and t**a log**b t at oo."""
    return FunctionSpec(
        family="power-log",
        params=(float(c), float(a), float(b)),
        label=f"{c}*t^{a}*log^{b}(1+t)",
        origin_exponent=float(a) + float(b),
        tail_exponent=float(a),
        tail_log_exponent=float(b),
    )


def mean_curvature() -> FunctionSpec:
    """t / sqrt(1+t**2): the flux of the mean curvature operator."""
    return FunctionSpec(
        family="mean-curvature",
        label="t/sqrt(1+t^2)",
        origin_exponent=1.0,
        tail_exponent=0.0,
        tail_log_exponent=0.0,
    )


def exp_power() -> FunctionSpec:
    """t * exp(t**2): the flux of the exponentially-harmonic operator."""
    return FunctionSpec(
        family="exp-power",
        label="t*exp(t^2)",
        origin_exponent=1.0,
        tail_exponent=None,  # superpolynomial
        tail_log_exponent=None,
    )


def constant(c: float) -> FunctionSpec:
    return FunctionSpec(
        family="constant",
        params=(float(c),),
        label=f"const {c}",
        origin_exponent=0.0,
        tail_exponent=0.0,
        tail_log_exponent=0.0,
    )


def table(
    knots_t: Sequence[float],
    knots_y: Sequence[float],
    *,
    fn: Optional[Callable] = None,
    deriv: Optional[Callable] = None,
    deriv2: Optional[Callable] = None,
    origin_exponent: Optional[float] = None,
    tail_exponent: Optional[float] = None,
    tail_log_exponent: Optional[float] = None,
    label: str = "",
) -> FunctionSpec:
    kt = np.asarray(knots_t, dtype=float)
    ky = np.asarray(knots_y, dtype=float)
    if kt.ndim != 1 or kt.shape != ky.shape or kt.size < 4:
        raise KoforgeError("table family needs matching 1-d knot arrays (>= 4 points)")
    if np.any(np.diff(kt) <= 0):
        raise KoforgeError("table knots must be strictly increasing")
    return FunctionSpec(
        family="table",
        label=label or "table",
        fn=fn,
        deriv=deriv,
        deriv2=deriv2,
        origin_exponent=origin_exponent,
        tail_exponent=tail_exponent,
        tail_log_exponent=tail_log_exponent,
        knots_t=kt,
        knots_y=ky,
    )


def from_callable(
    fn: Callable,
    lo: float = 1e-8,
    hi: float = 1e8,
    n: int = 2048,
    **kwargs,
) -> FunctionSpec:
    """Sample a callable onto a log grid and wrap it as a table spec.

    The callable stays attached as the exact evaluator; the knots exist for
    introspection and interpolation-only consumers.
    """
    kt = np.geomspace(lo, hi, n)
    ky = np.asarray(fn(kt), dtype=float)
    return table(kt, ky, fn=fn, **kwargs)


def _combine_hints(op: str, parts: Sequence[FunctionSpec]):
    oes = [p.origin_exponent for p in parts]
    tes = [p.tail_exponent for p in parts]
    tls = [p.tail_log_exponent for p in parts]
    if any(v is None for v in oes):
        oe = None
    elif op == "product":
        oe = float(sum(oes))
    else:
        oe = float(min(oes))  # smallest exponent dominates at 0+
    if any(v is None for v in tes):
        te, tl = None, None
    elif op == "product":
        te = float(sum(tes))
        tl = float(sum(tls)) if all(v is not None for v in tls) else None
    else:
        te = float(max(tes))  # largest exponent dominates at oo
        idx = int(np.argmax(tes))
        tl = tls[idx]
    return oe, te, tl


def product(*parts: FunctionSpec) -> FunctionSpec:
    oe, te, tl = _combine_hints("product", parts)
    return FunctionSpec(
        family="composite",
        op="product",
        parts=tuple(parts),
        label="*".join(p.describe() for p in parts),
        origin_exponent=oe,
        tail_exponent=te,
        tail_log_exponent=tl,
    )


def sum_of(*parts: FunctionSpec) -> FunctionSpec:
    oe, te, tl = _combine_hints("sum", parts)
    return FunctionSpec(
        family="composite",
        op="sum",
        parts=tuple(parts),
        label="+".join(p.describe() for p in parts),
        origin_exponent=oe,
        tail_exponent=te,
        tail_log_exponent=tl,
    )


def scaled(spec: FunctionSpec, factor: float) -> FunctionSpec:
    """spec multiplied by a positive constant (hints preserved)."""
    if factor <= 0:
        raise KoforgeError("scale factor must be positive")
    return product(constant(factor), spec)


def powered(spec: FunctionSpec, exponent: float) -> FunctionSpec:
    """spec(t)**exponent for a positive spec.

    Exact for power/power-log/constant; otherwise wraps the evaluation with
    derivative handles obtained by the chain rule.
    """
    e = float(exponent)
    if spec.family == "power":
        c, a = spec.params
        return power(c ** e, a * e)
    if spec.family == "constant":
        return constant(spec.params[0] ** e)
    if spec.family == "power-log":
        c, a, b = spec.params
        return power_log(c ** e, a * e, b * e)

    def val(t):
        return np.power(spec._eval(np.asarray(t, dtype=float)), e)

    def der(t):
        t = np.asarray(t, dtype=float)
        base = spec._eval(t)
        return e * np.power(base, e - 1.0) * spec._d1(t)

    oe = None if spec.origin_exponent is None else spec.origin_exponent * e
    te = None if spec.tail_exponent is None else spec.tail_exponent * e
    tl = None if spec.tail_log_exponent is None else spec.tail_log_exponent * e
    kt = spec.knots_t if spec.knots_t is not None else np.geomspace(1e-8, 1e8, 512)
    return table(
        kt,
        val(kt),
        fn=val,
        deriv=der,
        origin_exponent=oe,
        tail_exponent=te,
        tail_log_exponent=tl,
        label=f"({spec.describe()})^{e}",
    )


# -- grids ---------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced sampling grid; the default covers [1e-6, 1e6] with 2048 points."""

    lo: float = 1e-6
    hi: float = 1e6
    n: int = 2048

    def __post_init__(self):
        if not (0 < self.lo < self.hi):
            raise KoforgeError("grid bounds must satisfy 0 < lo < hi")
        if self.n < 8 or self.n > 10 ** 6:
            raise KoforgeError("grid size out of range [8, 1e6]")

    def points(self) -> np.ndarray:
        return np.geomspace(self.lo, self.hi, self.n)


def spec_from_json(blob: dict) -> FunctionSpec:
    """Build a FunctionSpec from its scenario-file JSON form."""
    if not isinstance(blob, dict) or "family" not in blob:
        raise KoforgeError(f"function block must be an object with a 'family' key: {blob!r}")
    fam = blob["family"]
    known = {"family", "c", "a", "b", "knots_t", "knots_y", "origin_exponent",
             "tail_exponent", "tail_log_exponent", "op", "parts", "label"}
    extra = set(blob) - known
    if extra:
        raise KoforgeError(f"unknown keys in function block: {sorted(extra)}")
    if fam == "power":
        return power(blob.get("c", 1.0), blob.get("a", 1.0))
    if fam == "power-log":
        return power_log(blob.get("c", 1.0), blob.get("a", 1.0), blob.get("b", 0.0))
    if fam == "mean-curvature":
        return mean_curvature()
    if fam == "exp-power":
        return exp_power()
    if fam == "constant":
        return constant(blob.get("c", 1.0))
    if fam == "table":
        return table(
            blob["knots_t"],
            blob["knots_y"],
            origin_exponent=blob.get("origin_exponent"),
            tail_exponent=blob.get("tail_exponent"),
            tail_log_exponent=blob.get("tail_log_exponent"),
            label=blob.get("label", ""),
        )
    if fam == "composite":
        parts = tuple(spec_from_json(p) for p in blob["parts"])
        if blob.get("op") == "sum":
            return sum_of(*parts)
        return product(*parts)
    raise KoforgeError(f"unknown function family {fam!r}")
