"""Render hyperns CSV outputs as figures.

Five kinds, one function. ``entropy``, ``conservation``, ``blowup-bound``
and ``speeds`` read diagnostics CSVs (and overlay several runs when given
several files); ``convergence`` reads a sweep CSV and annotates the
log-log slopes it fits from the file's own rows. All quantities are
arithmetic on CSV columns, never recomputed from model parameters.
"""

from __future__ import annotations

import dataclasses
import os
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import SchemaError, Table, load_table

KINDS = ("entropy", "conservation", "blowup-bound", "convergence", "speeds")

#: Columns each kind insists on. Conservation additionally picks up every
#: mom_* column it finds.
REQUIRED = {
    "entropy": ("t", "eta1_total", "production_cum"),
    "conservation": ("t", "mass", "etot"),
    "blowup-bound": ("t", "F", "bound"),
    "convergence": ("tau", "err_state", "err_flux"),
    "speeds": ("t", "support_radius", "sigma_max"),
}


@dataclasses.dataclass(frozen=True)
class FigureSpec:
    """One figure: input CSVs, kind, output image path, axis options."""

    kind: str
    inputs: tuple
    output: str
    title: Optional[str] = None
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}, expected one of "
                + ", ".join(KINDS)
            )
        inputs = tuple(str(p) for p in (
            [self.inputs] if isinstance(self.inputs, (str, os.PathLike))
            else self.inputs))
        if not inputs:
            raise ValueError("at least one input CSV is required")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "output", str(self.output))
        ext = os.path.splitext(self.output)[1].lower()
        if ext not in (".svg", ".png"):
            raise ValueError(
                f"output {self.output!r} must end in .svg or .png"
            )
        if self.kind == "convergence" and len(inputs) != 1:
            raise ValueError("convergence takes exactly one sweep CSV")
        if self.dpi <= 0:
            raise ValueError("dpi must be positive")


@dataclasses.dataclass(frozen=True)
class RenderResult:
    path: str
    annotations: dict


def fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x."""
    if x.size < 2:
        raise ValueError("need at least two points to fit a slope")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ValueError("slope fit needs strictly positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _series_label(base: str, table: Table, many: bool) -> str:
    if not many:
        return base
    stem = os.path.splitext(os.path.basename(table.path))[0]
    return f"{base} [{stem}]"


def _draw_entropy(ax, tables):
    many = len(tables) > 1
    for tb in tables:
        t = tb.col("t")
        decay = tb.col("eta1_total") - tb.col("eta1_total")[0]
        ax.plot(t, decay, label=_series_label("eta1_total - initial", tb, many))
        ax.plot(t, -tb.col("production_cum"), linestyle="--",
                label=_series_label("-production_cum", tb, many))
    ax.set_xlabel("t")
    ax.set_ylabel("entropy change")
    ax.legend()
    return {}


def _draw_conservation(ax, tables):
    many = len(tables) > 1
    for tb in tables:
        t = tb.col("t")
        names = ["mass"] + [c for c in tb.columns if c.startswith("mom_")]
        names.append("etot")
        for name in names:
            v = tb.col(name)
            denom = abs(v[0])
            if denom > 0.0:
                drift = v / v[0] - 1.0
                label = name
            else:
                drift = v - v[0]
                label = f"{name} (absolute)"
            ax.plot(t, drift, label=_series_label(label, tb, many))
    ax.set_xlabel("t")
    ax.set_ylabel("drift from initial total")
    ax.legend()
    return {}


def _draw_blowup_bound(ax, tables):
    many = len(tables) > 1
    for tb in tables:
        t = tb.col("t")
        f_vals = tb.col("F")
        bound = tb.col("bound")
        keep = np.isfinite(bound)
        if not np.any(keep):
            raise ValueError(
                f"{tb.path}: bound column has no finite values; the "
                "certificate ledger was not applicable to this run"
            )
        ax.plot(t, f_vals, label=_series_label("F", tb, many))
        ax.plot(t[keep], bound[keep], linestyle="--",
                label=_series_label("lower bound", tb, many))
    ax.set_xlabel("t")
    ax.set_ylabel("weighted moment")
    ax.legend()
    return {}


def _draw_speeds(ax, tables):
    many = len(tables) > 1
    out = {}
    for tb in tables:
        t = tb.col("t")
        r = tb.col("support_radius")
        sigma = float(np.max(tb.col("sigma_max")))
        line, = ax.plot(t, r, label=_series_label("support radius", tb, many))
        ax.plot(t, r[0] + sigma * t, linestyle="--", color=line.get_color(),
                label=_series_label(f"cone at speed {sigma:.4g}", tb, many))
        out[_series_label("sigma", tb, many)] = sigma
    ax.set_xlabel("t")
    ax.set_ylabel("radius")
    ax.legend()
    return out


def _draw_convergence(ax, tables):
    tb = tables[0]
    tau = tb.col("tau")
    keep = np.ones(tau.shape, dtype=bool)
    dropped = 0
    if tb.has("failed"):
        keep = tb.col("failed") == 0.0
        dropped = int(np.sum(~keep))
    if int(np.sum(keep)) < 2:
        raise ValueError(f"{tb.path}: fewer than two non-failed rows")
    tau = tau[keep]
    ann = {}
    for name, marker in (("err_state", "o"), ("err_flux", "s")):
        err = tb.col(name)[keep]
        slope = fit_slope(tau, err)
        ann[f"slope_{name.removeprefix('err_')}"] = slope
        label = f"{name} (slope {slope:.4f})"
        if dropped:
            label += f", {dropped} failed rows dropped"
        ax.loglog(tau, err, marker=marker, label=label)
        mid = len(tau) // 2
        key = f"slope_{name.removeprefix('err_')}"
        ax.annotate(f"{slope:.4f}", (tau[mid], err[mid]),
                    textcoords="offset points", xytext=(6, 6),
                    gid=f"{key}={slope:.17g}")
    ax.set_xlabel("tau")
    ax.set_ylabel("error")
    ax.legend()
    return ann


_DRAWERS = {
    "entropy": _draw_entropy,
    "conservation": _draw_conservation,
    "blowup-bound": _draw_blowup_bound,
    "convergence": _draw_convergence,
    "speeds": _draw_speeds,
}

_TITLES = {
    "entropy": "entropy balance",
    "conservation": "conserved-total drift",
    "blowup-bound": "moment functional vs certified lower bound",
    "convergence": "relaxation-limit convergence",
    "speeds": "support growth vs signal cone",
}


def render(spec: FigureSpec) -> RenderResult:
    """Validate inputs, draw the figure, write SVG or PNG.

    Returns the output path and the annotation values (the slope fits for
    convergence figures, the cone speeds for speed figures) exactly as
    drawn.
    """
    tables = [load_table(p) for p in spec.inputs]
    for tb in tables:
        tb.require(REQUIRED[spec.kind])
    if spec.kind == "conservation":
        for tb in tables:
            if not any(c.startswith("mom_") for c in tb.columns):
                raise SchemaError(f"{tb.path}: missing columns: mom_x")

    with plt.rc_context({"svg.hashsalt": "hyperns-plots"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        try:
            annotations = _DRAWERS[spec.kind](ax, tables)
            ax.set_title(spec.title or _TITLES[spec.kind])
            ax.grid(True, which="both", alpha=0.3)
            fig.tight_layout()
            metadata = {"Date": None}
            if spec.output.lower().endswith(".png"):
                metadata = {k: f"{v:.17g}" for k, v in annotations.items()}
            fig.savefig(spec.output, dpi=spec.dpi, metadata=metadata)
        finally:
            plt.close(fig)
    return RenderResult(path=str(spec.output), annotations=annotations)
