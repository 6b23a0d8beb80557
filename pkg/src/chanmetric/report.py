"""Output writers: CSV tables, JSON report records and small SVG line plots."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def encode(obj):
    """Make ``obj`` strict-JSON safe; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode(np.stack([obj.real, obj.imag], axis=-1).tolist())
        return encode(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def decode(obj):
    if isinstance(obj, dict):
        return {k: decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def config_hash(config: dict) -> str:
    canon = json.dumps(encode(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class ReportRecord:
    command: str
    config: dict
    results: dict
    version: str
    wall_time: float = 0.0
    config_hash: str = field(default="")

    def __post_init__(self):
        if not self.config_hash:
            self.config_hash = config_hash(self.config)

    def to_json(self) -> str:
        data = {
            "command": self.command,
            "config": self.config,
            "config_hash": self.config_hash,
            "version": self.version,
            "results": self.results,
            "wall_time": self.wall_time,
        }
        return json.dumps(encode(data), indent=1, sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "ReportRecord":
        d = decode(json.loads(text))
        return cls(d["command"], d["config"], d["results"], d["version"], d["wall_time"], d["config_hash"])


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def svg_line_plot(
    path,
    xs: Sequence[float],
    ys: Sequence[float],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    loglog: bool = False,
    width: int = 480,
    height: int = 320,
) -> None:
    """Write a single-series line plot with markers as a standalone SVG file."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = np.isfinite(xs) & np.isfinite(ys)
    if loglog:
        keep &= (xs > 0) & (ys > 0)
    xs, ys = xs[keep], ys[keep]
    tx, ty = (np.log10(xs), np.log10(ys)) if loglog else (xs, ys)
    m = 50
    if tx.size:
        x0, x1 = tx.min(), tx.max()
        y0, y1 = ty.min(), ty.max()
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def px(v):
        return m + (v - x0) / (x1 - x0) * (width - 2 * m)

    def py(v):
        return height - m - (v - y0) / (y1 - y0) * (height - 2 * m)

    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx, ty))
    fmt = (lambda v: f"1e{v:.2f}") if loglog else (lambda v: f"{v:.4g}")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>',
        f'<text x="{width / 2}" y="{m / 2}" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="12">{_esc(xlabel)}</text>',
        f'<text x="14" y="{height / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {height / 2})">{_esc(ylabel)}</text>',
        f'<text x="{m}" y="{height - m + 16}" font-size="10" text-anchor="middle">{fmt(x0)}</text>',
        f'<text x="{width - m}" y="{height - m + 16}" font-size="10" text-anchor="middle">{fmt(x1)}</text>',
        f'<text x="{m - 4}" y="{height - m}" font-size="10" text-anchor="end">{fmt(y0)}</text>',
        f'<text x="{m - 4}" y="{m + 4}" font-size="10" text-anchor="end">{fmt(y1)}</text>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{pts}"/>',
    ]
    parts += [f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="steelblue"/>' for a, b in zip(tx, ty)]
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
