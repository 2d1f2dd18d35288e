"""Built-in demo scenarios.

Each demo is a complete scenario dict reproducing one acceptance-style
check; ``koforge demo all`` runs every demo into its own subdirectory.
"""

from __future__ import annotations

import math

from .funcs import KoforgeError


def _pw(c, a):
    return {"family": "power", "c": c, "a": a}


def _plog(c, a, b):
    return {"family": "power-log", "c": c, "a": a, "b": b}


def _const(c):
    return {"family": "constant", "c": c}


_RHO_RATIONAL = {
    # 1/(1+t^2) as an exact composite product: (mc(t)/t)^2
    "family": "composite", "op": "product",
    "parts": [
        {"family": "mean-curvature"}, _pw(1, -1),
        {"family": "mean-curvature"}, _pw(1, -1),
    ],
}


def _ko_threshold() -> dict:
    tasks = [
        {"kind": "ko", "variant": "KO", "profile_overrides": {"f": _pw(1, q)}}
        for q in (0.5, 1.0, 1.5, 3.0)
    ]
    return {
        "name": "ko-threshold",
        "profile": {"phi": _pw(1, 1), "ell": _const(1), "f": _pw(1, 3),
                    "b_tilde": _const(1)},
        "tasks": tasks,
    }


def _log_refinement() -> dict:
    tasks = [
        {"kind": "ko", "variant": "KO", "profile_overrides": {"f": _plog(1, 1, b)}}
        for b in (3.0, 1.0, 2.0)
    ]
    return {
        "name": "log-refinement",
        "profile": {"phi": _pw(1, 1), "ell": _const(1), "f": _plog(1, 1, 3),
                    "b_tilde": _const(1)},
        "tasks": tasks,
    }


def _supersolution() -> dict:
    base = {"kind": "supersolution", "kernel": "K", "ko_mode": "KO",
            "epsilon": 1.0, "eta": 2.0, "t0": 0.0, "t1": 0.4, "A_geom": 0.0}
    return {
        "name": "supersolution-closed-form",
        "profile": {"phi": _pw(1, 1), "ell": _const(1), "f": _pw(3, 2),
                    "b_tilde": _const(1), "lambda_b": 1.0, "theta": 0.0},
        "tasks": [
            dict(base, sigma=1.0),
            dict(base, sigma=1.0 / 3.0),
            dict(base, sigma="search", t1=math.sqrt(2.0) - 1.01e-2 - 1.0),
        ],
    }


def _dichotomy() -> dict:
    tasks = []
    # finite-blow-up side: sources strong enough that the tail integral converges
    for s in (1.2, 1.4, 1.6, 1.8, 2.0):
        for b_mu in (0.0, 0.5):
            tasks.append({
                "kind": "supersolution", "ko_mode": "KO", "sigma": 1.0,
                "epsilon": 1.0, "eta": 2.0, "t0": 1.0, "t1": 1.2, "A_geom": 0.0,
                "profile_overrides": {"f": _pw(1, s),
                                      "b_tilde": _const(1) if b_mu == 0
                                      else _pw(1, -b_mu)},
            })
    # global side: weak sources, unbounded barrier without finite-radius blow-up
    for s in (0.4, 0.6, 0.8, 1.0):
        for b_mu in (0.0, 0.5):
            tasks.append({
                "kind": "supersolution", "ko_mode": "negKO", "sigma": 1.0,
                "epsilon": 1.0, "eta": 2.0, "t0": 1.0, "t1": 1.2, "A_geom": 0.0,
                "alpha_cap": 1e7,
                "profile_overrides": {"f": _pw(1, s),
                                      "b_tilde": _const(1) if b_mu == 0
                                      else _pw(1, -b_mu)},
            })
    for t in tasks:
        t["grid_n"] = 1024
    return {
        "name": "blowup-dichotomy",
        "profile": {"phi": _pw(1, 1), "ell": _const(1), "f": _pw(1, 2),
                    "b_tilde": _const(1), "lambda_b": 1.0, "theta": 0.0},
        "tasks": tasks,
    }


def _counterexample() -> dict:
    return {
        "name": "counterexample-glue",
        "profile": {"phi": _pw(1, 1), "ell": _const(1), "f": _pw(1, 1),
                    "b_tilde": _const(1)},
        "tasks": [
            {"kind": "counterexample", "p": 2.0, "m": 2, "r_max": 5.0,
             "lambda_probe": 1.2},
        ],
    }


def _geometry() -> dict:
    flat_ok = {"m": 3, "n": 4, "warp": {"kind": "flat"},
               "log_weight": _const(0), "G": _const(0)}
    weighted_ok = {"m": 3, "n": 4, "warp": {"kind": "flat"},
                   "log_weight": _pw(-1, 2), "G": _pw(4.0 / 3.0, 2)}
    sinh_ok = {"m": 2, "n": 3, "warp": {"kind": "sinh", "B": 1.0},
               "log_weight": _const(0), "G": _const(1)}
    violator = {"m": 3, "n": 4, "warp": {"kind": "flat"},
                "log_weight": _pw(1, 3), "G": _const(0)}
    return {
        "name": "geometry-comparison",
        "model": flat_ok,
        "tasks": [
            {"kind": "geometry", "r_lo": 0.05, "r_hi": 5.0, "radii": 200},
            {"kind": "geometry", "r_lo": 0.05, "r_hi": 5.0, "radii": 200,
             "model_overrides": weighted_ok},
            {"kind": "geometry", "r_lo": 0.05, "r_hi": 5.0, "radii": 200,
             "model_overrides": sinh_ok},
            {"kind": "geometry", "r_lo": 0.05, "r_hi": 5.0, "radii": 200,
             "model_overrides": violator},
        ],
    }


def _petersen() -> dict:
    perturbed = {"m": 2, "n": 3, "warp": {"kind": "flat"},
                 "log_weight": _pw(0.1, 2), "G": _const(0)}
    return {
        "name": "petersen-bounds",
        "model": perturbed,
        "tasks": [
            {"kind": "geometry", "r_lo": 0.05, "r_hi": 10.0, "radii": 200,
             "riccati": True, "petersen": {"p": 2.0, "r0": 1.0, "R": 10.0}},
        ],
    }


def _equivalence() -> dict:
    tasks = []
    combos = [(2.0, 0.0, s) for s in (1.5, 2.0, 3.0, 0.5, 1.0)] \
        + [(3.0, 0.5, s) for s in (2.0, 3.0, 1.2)] \
        + [(2.5, 1.0, s) for s in (1.0, 2.5)]
    for p, q, s in combos:
        prof = {"phi": _pw(1, p - 1),
                "ell": _const(1) if q == 0 else _pw(1, q),
                "f": _pw(1, s)}
        for scale in (0.25, 1.0, 4.0):
            tasks.append({"kind": "ko", "variant": "KO", "sigma_scale": scale,
                          "profile_overrides": prof})
        tasks.append({"kind": "ko", "variant": "rhoKO",
                      "profile_overrides": dict(prof, rho=_RHO_RATIONAL, omega=1.0)})
    return {
        "name": "equivalence-lemmas",
        "profile": {"phi": _pw(1, 1), "ell": _const(1), "f": _pw(1, 3),
                    "b_tilde": _const(1), "omega": 1.0},
        "tasks": tasks,
    }


def _wmp() -> dict:
    return {
        "name": "weak-max-principle",
        "model": {"m": 3, "n": 4, "warp": {"kind": "flat"},
                  "log_weight": _const(0), "G": _const(0)},
        "tasks": [
            {"kind": "maxprin", "sigma_growth": 1.0, "delta": 1.0, "chi": 0.0,
             "mu": -1.0, "d0": 1.0, "A_bound": 1.0},
            {"kind": "maxprin", "sigma_growth": 0.0, "delta": 1.0, "chi": 0.0,
             "mu": 0.0, "d0": 1.0},
            {"kind": "maxprin", "sigma_growth": 1.5, "delta": 2.0, "chi": 0.5,
             "mu": 0.0, "d0": 3.0, "use_volume_table": True,
             "sharpness": {"p": 3.0, "m": 3}},
        ],
    }


DEMOS = {
    "ko-threshold": _ko_threshold,
    "log-refinement": _log_refinement,
    "supersolution": _supersolution,
    "dichotomy": _dichotomy,
    "counterexample": _counterexample,
    "geometry": _geometry,
    "petersen": _petersen,
    "equivalence": _equivalence,
    "wmp": _wmp,
}


def demo_scenario(name: str) -> dict:
    if name not in DEMOS:
        raise KoforgeError(f"unknown demo {name!r}; available: {sorted(DEMOS)} + ['all']")
    return DEMOS[name]()
