"""Artifact writers: CSV/JSON emitters, the characteristic-diagram SVG, matplotlib figures.

Text artifacts are deterministic (fixed float formatting, sorted keys) so
identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .front_tracking import FrontTrackedSolution

SCHEMA_VERSION = 1

__all__ = [
    "ExperimentManifest",
    "atomic_output_dir",
    "certificate_json",
    "characteristics_svg",
    "config_hash",
    "constants_json",
    "dump_json",
    "shocks_csv",
]


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def config_hash(parameters: dict) -> str:
    canon = json.dumps(_clean(parameters), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class ExperimentManifest:
    subcommand: str
    parameters: dict
    derived_constants: dict = field(default_factory=dict)
    artifact_paths: list[str] = field(default_factory=list)
    wall_time_s: float = 0.0
    status: str = "ok"
    config_hash: str = ""

    def __post_init__(self):
        if not self.config_hash:
            self.config_hash = config_hash({"subcommand": self.subcommand, **self.parameters})

    def to_json(self) -> str:
        return dump_json({"schema_version": SCHEMA_VERSION, **asdict(self)})

    @classmethod
    def from_json(cls, text: str) -> "ExperimentManifest":
        d = json.loads(text)
        d.pop("schema_version", None)
        return cls(**d)


@contextmanager
def atomic_output_dir(out: str | os.PathLike):
    """Yield a temporary sibling directory that replaces ``out`` only on success."""
    out = Path(out).resolve()
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.tmp-", dir=out.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if out.exists():
        old = out.parent / f".{out.name}.old-{os.getpid()}"
        os.rename(out, old)
    os.rename(tmp, out)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)


# -- tabular artifacts -------------------------------------------------------------

SHOCK_COLUMNS = ("label", "t", "z", "v_minus", "v_plus", "speed")


def shocks_csv(sol: FrontTrackedSolution, stride: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SHOCK_COLUMNS)
    for s in sol.shocks:
        idx = np.arange(0, len(s.t), stride)
        if idx[-1] != len(s.t) - 1:
            idx = np.append(idx, len(s.t) - 1)
        for i in idx:
            w.writerow([s.label] + [repr(float(a[i])) for a in (s.t, s.z, s.v_minus, s.v_plus, s.speed)])
    return buf.getvalue()


def constants_json(sol: FrontTrackedSolution, extra: dict | None = None) -> str:
    d = {"mode": sol.mode, "derived": dict(sol.derived_constants), "exact": dict(sol.exact_constants)}
    if extra:
        d.update(extra)
    return dump_json(d)


def certificate_json(cert) -> str:
    return dump_json(cert.to_dict())


def rows_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# -- characteristic diagram --------------------------------------------------------

_SHOCK_STYLE = {"A": "#c0392b", "B": "#2471a3", "C": "#7d3c98", "detected": "#b9770e"}
_GREEK_NAME = {"A": "Γ_A", "B": "Γ_B", "C": "Γ_C", "detected": "Γ_D (detected)"}


def _absorption_time(sol: FrontTrackedSolution, x0: float) -> float:
    """First sampled time at which a shock has swallowed the characteristic from x0."""
    t_hit = math.inf
    for s in sol.shocks:
        inside = (s.xi_minus < x0) & (x0 < s.xi_plus)
        if inside.any():
            t_hit = min(t_hit, float(s.t[int(np.argmax(inside))]))
    return t_hit


def characteristics_svg(
    sol: FrontTrackedSolution,
    x_range: Sequence[float] | None = None,
    t_max: float | None = None,
    n_lines: int = 60,
    width: int = 720,
    height: int = 540,
) -> str:
    """Hand-rolled SVG: x to the right, t upward, characteristics stopped at their shock."""
    if t_max is None:
        t_max = sol.t_end
    knots = sol.v0._x
    if x_range is None:
        x_range = (float(knots[0]) - 3.0, float(knots[-1]) + 3.0)
    x_lo, x_hi = map(float, x_range)
    m = 50.0
    sx = (width - 2 * m) / (x_hi - x_lo)
    st = (height - 2 * m) / t_max

    def px(x):
        return m + (x - x_lo) * sx

    def py(t):
        return height - m - t * st

    def pts(xs, ts):
        return " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, ts))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<defs><clipPath id="plot"><rect x="{m}" y="{m}" width="{width - 2 * m}" '
        f'height="{height - 2 * m}"/></clipPath></defs>',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{m}" y1="{py(0):.2f}" x2="{width - m}" y2="{py(0):.2f}" stroke="black"/>',
        f'<line x1="{px(0) if x_lo < 0 < x_hi else m:.2f}" y1="{py(0):.2f}" '
        f'x2="{px(0) if x_lo < 0 < x_hi else m:.2f}" y2="{m}" stroke="black"/>',
        f'<text x="{width - m}" y="{py(0) + 30:.2f}" font-size="14" text-anchor="end">x</text>',
        f'<text x="{m - 10}" y="{m}" font-size="14" text-anchor="end">t</text>',
        f'<text x="{m}" y="{py(0) + 18:.2f}" font-size="11">{x_lo:g}</text>',
        f'<text x="{width - m}" y="{py(0) + 18:.2f}" font-size="11" text-anchor="end">{x_hi:g}</text>',
        f'<text x="{m - 6}" y="{m + 12}" font-size="11" text-anchor="end">{t_max:.3g}</text>',
        '<g clip-path="url(#plot)" stroke="#9a9a9a" stroke-width="0.7" fill="none">',
    ]
    # feet are spread over the initial window plus the far-field stretch that can enter it
    reach = sol.flux.max_abs_derivative(*sol.v0.value_range) * t_max
    finite = [float(k) for k in knots]
    parts = [np.linspace(x_lo - reach, x_lo, max(2, n_lines // 3)), np.linspace(x_lo, x_hi, n_lines),
             np.asarray(finite)]
    parts += [np.linspace(a, b, 9) for a, b in zip(finite[:-1], finite[1:])]
    feet = np.unique(np.concatenate(parts))
    for x0 in feet:
        t_stop = min(t_max, _absorption_time(sol, float(x0)))
        ts = np.linspace(0.0, t_stop, 2)
        xs = sol.cmap.position(ts, np.full_like(ts, x0))
        out.append(f'<polyline class="characteristic" points="{pts(xs, ts)}"/>')
    out.append("</g>")
    out.append('<g clip-path="url(#plot)" fill="none" stroke-width="2">')
    for s in sol.shocks:
        keep = s.t <= t_max
        idx = np.nonzero(keep)[0]
        if idx.size < 2:
            continue
        idx = idx[np.unique(np.linspace(0, idx.size - 1, min(400, idx.size)).astype(int))]
        color = _SHOCK_STYLE.get(s.label, "black")
        out.append(f'<polyline class="shock" data-label="{s.label}" stroke="{color}" '
                   f'points="{pts(s.z[idx], s.t[idx])}"/>')
    out.append("</g>")
    for s in sol.shocks:
        if s.t[0] > t_max:
            continue
        color = _SHOCK_STYLE.get(s.label, "black")
        t0, z0 = s.origin
        if x_lo <= z0 <= x_hi:
            point = "D" if s.label == "detected" else s.label
            out.append(f'<circle cx="{px(z0):.2f}" cy="{py(t0):.2f}" r="3.5" fill="{color}"/>')
            out.append(f'<text x="{px(z0) + 6:.2f}" y="{py(t0) + 14:.2f}" font-size="13">{point}</text>')
        # label halfway along the visible stretch, on the outer side of the curve
        t_mid = 0.5 * (float(s.t[0]) + min(t_max, float(s.t[-1])))
        k = min(int(np.searchsorted(s.t, t_mid)), len(s.t) - 1)
        lx = px(min(max(float(s.z[k]), x_lo), x_hi))
        left = s.label == "A" or lx > width - 160
        anchor, dx_text = ("end", -8) if left else ("start", 8)
        out.append(f'<text class="shock-label" x="{lx + dx_text:.2f}" y="{py(float(s.t[k])):.2f}" '
                   f'font-size="13" text-anchor="{anchor}" fill="{color}">'
                   f'{_GREEK_NAME.get(s.label, s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- matplotlib figures ------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata={"Software": None})
    _pyplot().close(fig)


def plot_gap(path, x, curves: dict[float, np.ndarray], title: str = "f - u"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for t, d in curves.items():
        ax.plot(x, d, lw=1.2, label=f"t = {t:.3g}")
    ax.axhline(0.0, color="black", lw=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("tracked f minus reference u")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_flux(path, flux, interval=(-2.0, 2.0), argmax: float | None = None):
    plt = _pyplot()
    p = np.linspace(*interval, 801)
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
    for ax, order, name in zip(axes, (0, 1, 2), ("H", "H'", "H''")):
        ax.plot(p, flux.evaluate(p, order), lw=1.4)
        ax.axhline(0.0, color="black", lw=0.5)
        ax.set_title(name)
        ax.set_xlabel("p")
    if argmax is not None:
        axes[0].axvline(argmax, color="tab:red", lw=0.8, ls="--")
    fig.tight_layout()
    _save(fig, path)


def plot_theta(path, theta, report):
    plt = _pyplot()
    t = np.linspace(0.0, 1.0, 801)
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(t, theta(t), lw=1.4)
    ax.plot(list(report.minimizers), [report.well_value] * 2, "o", color="tab:red")
    ax.plot([report.local_max_at], [report.barrier_value], "s", color="tab:green")
    ax.set_xlabel("t")
    ax.set_ylabel("theta(t, 1 - t)")
    fig.tight_layout()
    _save(fig, path)


def plot_frames(path, x, frames: dict[float, np.ndarray], ylabel: str = "v"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for t, v in frames.items():
        ax.plot(x, v, lw=1.1, label=f"t = {t:.3g}")
    ax.set_xlabel("x")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_trajectories(path, ensembles: dict, kept=None):
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(ensembles), figsize=(4 * len(ensembles), 3.6), squeeze=False)
    for ax, (eps, ens) in zip(axes[0], ensembles.items()):
        for m in range(ens.n_members):
            style = "-" if kept is None or kept[m] else ":"
            ax.plot(ens.trajectories[m], ens.times, style, lw=0.8, color="tab:blue")
        ax.set_title(f"eps = {eps:g}")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
    fig.tight_layout()
    _save(fig, path)
