"""Deterministic CSV/JSON writers, a small native SVG line plot and the run manifest.

Floats are written with ``repr`` so files round-trip exactly and two runs
with the same inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from importlib import metadata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np


def jsonable(v: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (complex, np.complexfloating)):
        return [jsonable(v.real), jsonable(v.imag)]
    if isinstance(v, np.ndarray):
        return [jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    return v


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def _cell(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_hash(config: dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a config."""
    text = json.dumps(jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def versions() -> dict[str, str]:
    from . import __version__

    out = {"python": platform.python_version()}
    for dist in ("numpy", "scipy", "jsonschema"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    out["fracop"] = __version__
    return out


# ---------------------------------------------------------------------------
# SVG


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    style: str = "line"  # or "points"


@dataclass
class Plot:
    """A single-panel line plot written as plain SVG markup."""

    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    logx: bool = False
    logy: bool = False
    series: list[Series] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    width: int = 640
    height: int = 420

    def add(self, label: str, x, y, style: str = "line") -> Plot:
        self.series.append(Series(label, np.asarray(x, dtype=float), np.asarray(y, dtype=float), style))
        return self

    def _data(self):
        """Finite (and positive, on log axes) points of each series, transformed."""
        out = []
        for s in self.series:
            ok = np.isfinite(s.x) & np.isfinite(s.y)
            if self.logx:
                ok &= s.x > 0
            if self.logy:
                ok &= s.y > 0
            x = np.log10(s.x[ok]) if self.logx else s.x[ok]
            y = np.log10(s.y[ok]) if self.logy else s.y[ok]
            out.append((s, x, y))
        return out

    def render(self) -> str:
        W, H = self.width, self.height
        left, right, top, bottom = 78, 20, 36, 56 + 14 * len(self.notes)
        pw, ph = W - left - right, H - top - bottom
        data = self._data()
        xs = np.concatenate([d[1] for d in data]) if data else np.zeros(0)
        ys = np.concatenate([d[2] for d in data]) if data else np.zeros(0)
        x0, x1 = _span(xs)
        y0, y1 = _span(ys)

        def px(x):
            return left + (x - x0) / (x1 - x0) * pw

        def py(y):
            return top + ph - (y - y0) / (y1 - y0) * ph

        el = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        if self.title:
            el.append(f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(self.title)}</text>')
        for v in _ticks(x0, x1, self.logx):
            X = px(v)
            el.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 4}" stroke="black"/>')
            el.append(f'<text x="{X:.2f}" y="{top + ph + 16}" text-anchor="middle">{_label(v, self.logx)}</text>')
        for v in _ticks(y0, y1, self.logy):
            Y = py(v)
            el.append(f'<line x1="{left - 4}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
            el.append(f'<text x="{left - 6}" y="{Y + 4:.2f}" text-anchor="end">{_label(v, self.logy)}</text>')
        if self.xlabel:
            el.append(f'<text x="{left + pw / 2:.1f}" y="{top + ph + 34}" text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            el.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
                      f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(self.ylabel)}</text>')
        colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
        for k, (s, x, y) in enumerate(data):
            c = colors[k % len(colors)]
            if s.style == "points":
                for a, b in zip(x, y):
                    el.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{c}"/>')
            elif x.size:
                pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
                el.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
            ly = top + 14 + 14 * k
            el.append(f'<line x1="{left + pw - 130}" y1="{ly - 4}" x2="{left + pw - 112}" y2="{ly - 4}" '
                      f'stroke="{c}" stroke-width="2"/>')
            el.append(f'<text x="{left + pw - 106}" y="{ly}">{escape(s.label)}</text>')
        for i, note in enumerate(self.notes):
            el.append(f'<text x="{left}" y="{top + ph + 50 + 14 * i}">{escape(note)}</text>')
        el.append("</svg>")
        return "\n".join(el) + "\n"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.render())
        return path


def _span(v: np.ndarray) -> tuple[float, float]:
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < 1e-12 * max(1.0, abs(hi)):
        return lo - 0.5, hi + 0.5
    pad = 0.03 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        a, b = math.ceil(lo), math.floor(hi)
        step = max(1, (b - a) // 8 + 1)
        t = [float(k) for k in range(a, b + 1, step)]
        return t if t else [lo, hi]
    raw = (hi - lo) / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step) + 1)]


def _label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}" if abs(v - round(v)) < 1e-9 else f"{10**v:.3g}"
    return f"{v:.4g}"
