"""Scenario parsing, task execution, and report emission.

A scenario is a JSON object with a profile block, an optional model block,
an ordered task list, numeric overrides, and an output directory.  Tasks run
sequentially; each produces a JSON-able data payload plus optional CSV
tables and figures.  Reports are byte-stable: keys are sorted, floats are
serialized by repr, and no timestamps enter the payload.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .funcs import FunctionSpec, GridSpec, KoforgeError, spec_from_json
from .structural import (
    ConditionReport,
    StructuralProfile,
    check_b_tilde,
    check_grad_ell,
    check_parameter_regimes,
    check_phi,
    check_phi_ell,
    check_theta,
)
from .transforms import classify_ko
from .geometry import (
    ModelManifold,
    check_ratio_monotonicity,
    check_riccati_inequality,
    petersen_constant,
    petersen_volume_bound,
    solve_h,
    volume_table,
)
from .supersolution import BuildRequest, build_alpha, search_sigma
from .counterexample import (
    GluedSolution,
    assemble_u,
    probe_lambda,
    residual_rows,
    solve_glue_params,
    verify_subsolution,
)
from .maxprin import SharpnessReport, WmpParams, sharpness_example, theoremB_threshold, wmp_constant

_SCENARIO_KEYS = {"name", "profile", "model", "tasks", "numeric", "output"}
_NUMERIC_KEYS = {"grid_points", "grid_lo", "grid_hi", "c_cap", "seed"}
_TASK_KEYS = {
    "conditions": {"kind", "checks", "regimes", "profile_overrides"},
    "ko": {"kind", "variant", "sigma_scale", "profile_overrides"},
    "supersolution": {"kind", "kernel", "rho_mode", "ko_mode", "epsilon", "eta",
                      "t0", "t1", "A_geom", "beta", "sigma", "grid_n", "t_max",
                      "alpha_cap", "profile_overrides"},
    "counterexample": {"kind", "p", "m", "r_max", "lambda_probe", "profile_overrides"},
    "geometry": {"kind", "r_lo", "r_hi", "radii", "riccati", "bochner_power",
                 "petersen", "model_overrides"},
    "maxprin": {"kind", "sigma_growth", "delta", "chi", "mu", "d0", "A_bound",
                "f_liminf_positive", "use_volume_table", "sharpness"},
}


@dataclass
class TaskResult:
    name: str
    status: str  # ok | failed | error | skipped
    data: dict
    tables: list = field(default_factory=list)   # (stem, header, rows)
    figures: list = field(default_factory=list)  # (stem, kind, payload)


@dataclass
class Scenario:
    name: str
    profile_blob: Optional[dict]
    model_blob: Optional[dict]
    tasks: list
    numeric: dict
    output: Optional[str]

    @classmethod
    def from_json(cls, blob: dict) -> "Scenario":
        if not isinstance(blob, dict):
            raise KoforgeError("scenario must be a JSON object")
        extra = set(blob) - _SCENARIO_KEYS
        if extra:
            raise KoforgeError(f"unknown scenario keys: {sorted(extra)}")
        numeric = dict(blob.get("numeric", {}))
        n_extra = set(numeric) - _NUMERIC_KEYS
        if n_extra:
            raise KoforgeError(f"unknown numeric keys: {sorted(n_extra)}")
        if numeric.get("grid_points", 0) > 10 ** 6:
            raise KoforgeError("grid_points override exceeds the 1e6 cap")
        tasks = blob.get("tasks", [])
        if not isinstance(tasks, list):
            raise KoforgeError("tasks must be a list")
        for i, t in enumerate(tasks):
            if not isinstance(t, dict) or "kind" not in t:
                raise KoforgeError(f"task {i} must be an object with a 'kind'")
            kind = t["kind"]
            if kind not in _TASK_KEYS:
                raise KoforgeError(f"task {i}: unknown kind {kind!r}")
            extra = set(t) - _TASK_KEYS[kind]
            if extra:
                raise KoforgeError(f"task {i} ({kind}): unknown keys {sorted(extra)}")
            needs_profile = kind in ("conditions", "ko", "supersolution", "counterexample")
            if needs_profile and blob.get("profile") is None:
                raise KoforgeError(f"task {i} ({kind}) needs a profile block")
            if kind == "geometry" and blob.get("model") is None:
                raise KoforgeError(f"task {i} (geometry) needs a model block")
        return cls(
            name=str(blob.get("name", "scenario")),
            profile_blob=blob.get("profile"),
            model_blob=blob.get("model"),
            tasks=tasks,
            numeric=numeric,
            output=blob.get("output"),
        )

    def grid(self) -> GridSpec:
        return GridSpec(
            lo=float(self.numeric.get("grid_lo", 1e-6)),
            hi=float(self.numeric.get("grid_hi", 1e6)),
            n=int(self.numeric.get("grid_points", 2048)),
        )


def _merged_profile(scn: Scenario, overrides: Optional[dict]) -> StructuralProfile:
    blob = dict(scn.profile_blob or {})
    blob.update(overrides or {})
    return StructuralProfile.from_json(blob)


def _merged_model(scn: Scenario, overrides: Optional[dict]):
    blob = dict(scn.model_blob or {})
    blob.update(overrides or {})
    model = ModelManifold.from_json(blob)
    g_blob = blob.get("G", {"family": "constant", "c": 0.0})
    return model, spec_from_json(g_blob)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (str, bool)) or x is None:
        return x
    return str(x)


# -- task runners ------------------------------------------------------------------


def _run_conditions(scn: Scenario, task: dict, idx: int) -> TaskResult:
    profile = _merged_profile(scn, task.get("profile_overrides"))
    grid = scn.grid()
    checks = task.get("checks", ["phi", "grad_ell", "theta", "phi_ell", "b"])
    report = ConditionReport()
    runners = {
        "phi": check_phi,
        "grad_ell": check_grad_ell,
        "theta": check_theta,
        "phi_ell": check_phi_ell,
        "b": check_b_tilde,
    }
    for name in checks:
        if name not in runners:
            raise KoforgeError(f"unknown check {name!r}")
        report.merge(runners[name](profile, grid))
    for regime in task.get("regimes", []):
        report.merge(check_parameter_regimes(profile, regime, grid))
    failures = report.failures()
    return TaskResult(
        name=f"conditions_{idx}",
        status="ok",
        data={"conditions": report.to_json(), "failures": failures,
              "all_hold": report.all_hold()},
    )


def _run_ko(scn: Scenario, task: dict, idx: int) -> TaskResult:
    profile = _merged_profile(scn, task.get("profile_overrides"))
    verdict = classify_ko(profile, task.get("variant", "KO"),
                          float(task.get("sigma_scale", 1.0)))
    figures = []
    if verdict.evidence:
        figures.append((f"ko_{idx}", "ko_evidence", {
            "limits": [l for l, _ in verdict.evidence],
            "values": [v for _, v in verdict.evidence],
            "verdict": verdict.verdict,
        }))
    return TaskResult(
        name=f"ko_{idx}",
        status="ok",
        data={"variant": task.get("variant", "KO"),
              "sigma_scale": float(task.get("sigma_scale", 1.0)),
              **verdict.to_json()},
        figures=figures,
    )


def _run_supersolution(scn: Scenario, task: dict, idx: int) -> TaskResult:
    profile = _merged_profile(scn, task.get("profile_overrides"))
    req = BuildRequest(
        profile=profile,
        kernel=task.get("kernel", "K"),
        rho_mode=bool(task.get("rho_mode", False)),
        ko_mode=task.get("ko_mode", "KO"),
        epsilon=float(task.get("epsilon", 1.0)),
        eta=float(task.get("eta", 2.0)),
        t0=float(task.get("t0", 0.0)),
        t1=float(task.get("t1", 1.0)),
        A_geom=float(task.get("A_geom", 0.0)),
        beta=task.get("beta"),
        grid_n=int(task.get("grid_n", 4096)),
        t_max=float(task.get("t_max", 1e6)),
        alpha_cap=float(task.get("alpha_cap", 1e9)),
    )
    sigma = task.get("sigma", "search")
    if sigma == "search":
        sig, prof = search_sigma(req)
    else:
        sig = float(sigma)
        prof = build_alpha(req, sig)
    rows = list(prof.rows())
    data = {"request": {"kernel": req.kernel, "ko_mode": req.ko_mode,
                        "rho_mode": req.rho_mode, "epsilon": req.epsilon,
                        "eta": req.eta, "t0": req.t0, "t1": req.t1,
                        "A_geom": req.A_geom, "beta": req.beta},
            **prof.to_json()}
    name = f"supersolution_{idx}"
    return TaskResult(
        name=name,
        status="ok",
        data=data,
        tables=[(name, prof.CSV_HEADER, rows)],
        figures=[(name, "radial_profile",
                  {"t": prof.t, "alpha": prof.alpha, "T_sigma": prof.T_sigma,
                   "blow_up": prof.blow_up})],
    )


def _run_counterexample(scn: Scenario, task: dict, idx: int) -> TaskResult:
    profile = _merged_profile(scn, task.get("profile_overrides"))
    p = float(task.get("p", 2.0))
    m = int(task.get("m", 2))
    r_max = float(task.get("r_max", 5.0))
    params = solve_glue_params(p, m, profile.f, profile.ell)
    glued = assemble_u(params, r_max, f=profile.f, ell=profile.ell)
    margin = verify_subsolution(glued)
    data = {"params": params.to_json(),
            "c1_value_gap": glued.c1_value_gap,
            "c1_slope_gap": glued.c1_slope_gap,
            "min_normalized_residual": margin}
    if "lambda_probe" in task:
        data["lambda_probe"] = probe_lambda(p, m, profile.f, profile.ell,
                                            float(task["lambda_probe"]))
    rows = list(residual_rows(glued))
    name = f"counterexample_{idx}"
    return TaskResult(
        name=name,
        status="ok",
        data=data,
        tables=[(name, GluedSolution.CSV_HEADER, rows)],
        figures=[(name, "glued_profile",
                  {"r_inner": glued.r_inner, "u_inner": glued.u_inner,
                   "r_outer": glued.r_outer, "u_outer": glued.u_outer,
                   "t_bar": params.t_bar})],
    )


def _run_geometry(scn: Scenario, task: dict, idx: int) -> TaskResult:
    model, G = _merged_model(scn, task.get("model_overrides"))
    r_lo = float(task.get("r_lo", 0.05))
    r_hi = float(task.get("r_hi", 5.0))
    n_radii = int(task.get("radii", 200))
    sol = solve_h(G, r_hi * 1.02)
    radii = np.linspace(r_lo, min(r_hi, (sol.first_zero or np.inf) * 0.98), n_radii)
    tbl = volume_table(model, sol, radii)
    monotone, violation = check_ratio_monotonicity(tbl)
    data = {
        "m": model.m, "n": model.n,
        "ratios_nonincreasing": monotone,
        "violation": None if violation is None else
        {"radius": violation[0], "column": violation[1]},
        "first_zero": sol.first_zero,
    }
    if task.get("riccati", True):
        data["riccati_max_residual"] = check_riccati_inequality(
            model, (max(r_lo, 1e-3), r_hi, 200))
    if "petersen" in task:
        pet = task["petersen"]
        bound, diag = petersen_volume_bound(
            model, G, float(pet.get("n", model.n)), float(pet["p"]),
            float(pet.get("r0", 1.0)), float(pet.get("R", r_hi)))
        data["petersen"] = {"bound": bound,
                            "constant": petersen_constant(float(pet.get("n", model.n)),
                                                          float(pet["p"])),
                            **diag}
    name = f"geometry_{idx}"
    return TaskResult(
        name=name,
        status="ok",
        data=data,
        tables=[(name, tbl.CSV_HEADER, list(tbl.rows()))],
        figures=[(name, "volume_ratios",
                  {"radii": tbl.radii, "ratio_area": tbl.ratio_area,
                   "ratio_ball": tbl.ratio_ball})],
    )


def _run_maxprin(scn: Scenario, task: dict, idx: int) -> TaskResult:
    params = WmpParams(
        sigma_growth=float(task.get("sigma_growth", 1.0)),
        delta=float(task.get("delta", 1.0)),
        chi=float(task.get("chi", 0.0)),
        mu=float(task.get("mu", 0.0)),
        d0=float(task.get("d0", 1.0)),
        A_bound=float(task.get("A_bound", 1.0)),
    )
    value, branch = wmp_constant(params)
    tbl = None
    if task.get("use_volume_table") and scn.model_blob is not None:
        model, G = _merged_model(scn, None)
        sol = solve_h(G, 21.0)
        tbl = volume_table(model, sol, np.linspace(0.1, 20.0, 400))
    threshold = theoremB_threshold(params, bool(task.get("f_liminf_positive", True)), tbl)
    threshold.pop("quotient_curve", None)
    data = {"params": params.to_json(), "branch": branch, "C_value": value,
            "threshold": threshold}
    figures = []
    name = f"maxprin_{idx}"
    if "sharpness" in task:
        sh = task["sharpness"]
        r_grid = np.linspace(0.1, 10.0, 500)
        report = sharpness_example(float(sh.get("p", 2.0)), int(sh.get("m", 3)), r_grid)
        data["sharpness"] = report.to_json()
        pc = report.p / (report.p - 1.0)
        rr = np.geomspace(0.1, 1e3, 200)
        figures.append((name, "sharpness",
                        {"r": rr, "quotient": (rr ** pc / pc) / rr ** pc,
                         "limit": 1.0 / pc}))
    return TaskResult(name=name, status="ok", data=data, figures=figures)


_RUNNERS: dict[str, Callable] = {
    "conditions": _run_conditions,
    "ko": _run_ko,
    "supersolution": _run_supersolution,
    "counterexample": _run_counterexample,
    "geometry": _run_geometry,
    "maxprin": _run_maxprin,
}


def execute_scenario(scn: Scenario, strict: bool = False) -> list[TaskResult]:
    """Run the task list in order.  In strict mode a conditions task with
    'no' verdicts halts the remaining tasks (they report as skipped)."""
    results = []
    halted = False
    for idx, task in enumerate(scn.tasks):
        kind = task["kind"]
        if halted:
            results.append(TaskResult(name=f"{kind}_{idx}", status="skipped",
                                      data={"reason": "halted by failed conditions"}))
            continue
        try:
            res = _RUNNERS[kind](scn, task, idx)
        except KoforgeError as err:
            results.append(TaskResult(name=f"{kind}_{idx}", status="error",
                                      data={"error": str(err)}))
            continue
        if kind == "conditions" and res.data.get("failures"):
            if strict:
                res.status = "failed"
                halted = True
        results.append(res)
    return results


def exit_code(results: list[TaskResult], strict: bool) -> int:
    if any(r.status == "error" for r in results):
        return 1
    if strict and any(r.status == "failed" for r in results):
        return 2
    return 0


# -- emission ----------------------------------------------------------------------


def emit_report(scn: Scenario, results: list[TaskResult], out_dir: Path,
                figures: bool = True) -> Path:
    """Write report.json, per-task CSV tables, and (optionally) figures.

    Output is byte-identical across runs with identical inputs: keys are
    sorted and nothing time-dependent is serialized.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    import scipy

    report = {
        "scenario": scn.name,
        "tasks": [{"name": r.name, "status": r.status, "data": _jsonable(r.data)}
                  for r in results],
        "versions": {
            "koforge": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": f"{sys.version_info.major}.{sys.version_info.minor}",
        },
        "numeric_settings": _jsonable(scn.numeric),
    }
    path = out_dir / "report.json"
    with path.open("w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for res in results:
        for stem, header, rows in res.tables:
            with (out_dir / f"{stem}.csv").open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                for row in rows:
                    writer.writerow([repr(float(x)) for x in row])
    if figures:
        from . import plots

        for res in results:
            for stem, kind, payload in res.figures:
                plots.render(kind, payload, out_dir / f"{stem}.png")
    return path


def run_scenario(path, out_dir=None, strict: bool = False,
                 grid: Optional[int] = None, seed: Optional[int] = None,
                 figures: bool = True) -> int:
    """Load, execute, and emit a scenario file; returns the exit code."""
    p = Path(path)
    try:
        blob = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        print(f"scenario parse error at line {err.lineno}, column {err.colno}: "
              f"{err.msg}", file=sys.stderr)
        return 1
    try:
        scn = Scenario.from_json(blob)
        if grid is not None:
            scn.numeric["grid_points"] = int(grid)
            scn.grid()  # re-validate bounds
        if seed is not None:
            scn.numeric["seed"] = int(seed)
        results = execute_scenario(scn, strict=strict)
        target = Path(out_dir) if out_dir else Path(scn.output or "out")
        emit_report(scn, results, target, figures=figures)
    except KoforgeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    code = exit_code(results, strict)
    for r in results:
        print(f"{r.name}: {r.status}")
    return code


def check_scenario(path) -> int:
    """Validate a scenario file without running it."""
    p = Path(path)
    try:
        blob = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        print(f"scenario parse error at line {err.lineno}, column {err.colno}: "
              f"{err.msg}", file=sys.stderr)
        return 1
    try:
        scn = Scenario.from_json(blob)
        if scn.profile_blob is not None:
            _merged_profile(scn, None)
        if scn.model_blob is not None:
            _merged_model(scn, None)
        scn.grid()
    except KoforgeError as err:
        print(f"invalid scenario: {err}", file=sys.stderr)
        return 1
    print(f"scenario '{scn.name}' valid: {len(scn.tasks)} task(s)")
    return 0
