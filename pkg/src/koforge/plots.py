"""Figure rendering for the report path.

Figures are presentation artifacts written next to the CSV tables; the
delimited output remains the data boundary.  Rendering is headless (Agg)
and carries no timestamps, so outputs are stable across runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "font.size": 9,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": "koforge"})
    plt.close(fig)


def render(kind: str, payload: dict, path) -> None:
    with plt.rc_context(_STYLE):
        if kind == "ko_evidence":
            _ko_evidence(payload, path)
        elif kind == "radial_profile":
            _radial_profile(payload, path)
        elif kind == "glued_profile":
            _glued_profile(payload, path)
        elif kind == "volume_ratios":
            _volume_ratios(payload, path)
        elif kind == "sharpness":
            _sharpness(payload, path)
        # unknown kinds are skipped silently: figures are optional artifacts


def _ko_evidence(payload, path):
    fig, ax = plt.subplots()
    limits = np.asarray(payload["limits"], dtype=float)
    values = np.asarray(payload["values"], dtype=float)
    ok = np.isfinite(values)
    ax.loglog(limits[ok], values[ok], "o-", ms=3)
    ax.set_xlabel("upper limit")
    ax.set_ylabel("partial integral")
    ax.set_title(f"tail evidence ({payload['verdict']})")
    _save(fig, path)


def _radial_profile(payload, path):
    fig, ax = plt.subplots()
    t = np.asarray(payload["t"], dtype=float)
    a = np.asarray(payload["alpha"], dtype=float)
    ax.semilogy(t, a)
    if payload.get("blow_up") and np.isfinite(payload.get("T_sigma", np.inf)):
        ax.axvline(payload["T_sigma"], color="crimson", ls="--", lw=1,
                   label="blow-up radius")
        ax.legend()
    ax.set_xlabel("t")
    ax.set_ylabel("alpha(t)")
    ax.set_title("radial barrier")
    _save(fig, path)


def _glued_profile(payload, path):
    fig, ax = plt.subplots()
    ax.plot(payload["r_inner"], payload["u_inner"], label="polynomial cap")
    ax.plot(payload["r_outer"], payload["u_outer"], label="outer profile")
    ax.axvline(payload["t_bar"], color="gray", ls=":", lw=1)
    ax.set_xlabel("r")
    ax.set_ylabel("u(r)")
    ax.set_title("glued entire subsolution")
    ax.legend()
    _save(fig, path)


def _volume_ratios(payload, path):
    fig, ax = plt.subplots()
    r = np.asarray(payload["radii"], dtype=float)
    ax.semilogy(r, payload["ratio_area"], label="sphere quotient")
    ax.semilogy(r, payload["ratio_ball"], label="ball quotient")
    ax.set_xlabel("r")
    ax.set_ylabel("model / comparison")
    ax.set_title("weighted volume quotients")
    ax.legend()
    _save(fig, path)


def _sharpness(payload, path):
    fig, ax = plt.subplots()
    r = np.asarray(payload["r"], dtype=float)
    ax.semilogx(r, np.asarray(payload["quotient"], dtype=float))
    ax.axhline(payload["limit"], color="crimson", ls="--", lw=1,
               label="nonzero limit")
    ax.set_xlabel("r")
    ax.set_ylabel("u / r^p'")
    ax.set_title("borderline growth profile")
    ax.legend()
    _save(fig, path)
