"""CSV / JSON / SVG writers with atomic replacement."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__

SVG_VERSION_LINE = f"<!-- matthewcf {__version__} -->"


def atomic_write(path, data: bytes | str) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def fmt(x) -> str:
    """Shortest round-tripping float text."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def similarity_csv(sim) -> str:
    rows = ((int(a) + 1, int(b) + 1, fmt(s)) for a, b, s in zip(sim.rank_a, sim.rank_b, sim.score))
    return _csv(["rank_a", "rank_b", "score"], rows)


def heatmap_csv(grid) -> str:
    b = grid.bins
    rows = ((r, c, fmt(grid.mean[r, c]), int(grid.pair_count[r, c])) for r in range(b) for c in range(b))
    return _csv(["bin_row", "bin_col", "mean_score", "pair_count"], rows)


def profile_csv(profile) -> str:
    return _csv(["rank", "count"], zip(profile.ranks.tolist(), profile.counts.tolist()))


def reports_csv(reports) -> str:
    rows = ((r.quantity, fmt(r.mean), fmt(r.stderr), fmt(r.ci_low), fmt(r.ci_high), r.trials, r.seed)
            for r in reports)
    return _csv(["quantity", "mean", "stderr", "ci_low", "ci_high", "trials", "seed"], rows)


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def envelope(seed, inputs: dict, results) -> str:
    doc = {"tool_version": __version__, "seed": seed, "inputs": inputs, "results": results}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


# linear scale between two endpoint colours
_LOW = (247, 251, 255)
_HIGH = (8, 48, 107)


def _colour(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(_LOW, _HIGH))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(grid, title: str, cell: int = 6) -> str:
    """Rank-bin heatmap; (0, 0) top-left is most popular x most popular."""
    b = grid.bins
    values = grid.mean[np.isfinite(grid.mean)]
    lo = float(values.min()) if len(values) else 0.0
    hi = float(values.max()) if len(values) else 0.0
    span = hi - lo if hi > lo else 1.0
    size = b * cell
    pad, legend_h = 40, 50
    width, height = size + 2 * pad, size + 2 * pad + legend_h
    out = ['<?xml version="1.0" encoding="UTF-8"?>', SVG_VERSION_LINE,
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<text x="{pad}" y="{pad - 20}" font-size="12" font-family="sans-serif">{title}</text>',
           f'<text x="{pad}" y="{pad - 6}" font-size="9" font-family="sans-serif">rank bin (most popular at top-left)</text>']
    for r in range(b):
        for c in range(b):
            v = grid.mean[r, c]
            fill = "#ffffff" if not np.isfinite(v) else _colour((v - lo) / span)
            out.append(f'<rect x="{pad + c * cell}" y="{pad + r * cell}" width="{cell}" height="{cell}" fill="{fill}"/>')
    ly = pad + size + 15
    steps = 20
    step_w = size / steps
    for k in range(steps):
        out.append(f'<rect x="{pad + k * step_w:.2f}" y="{ly}" width="{step_w:.2f}" height="10" '
                   f'fill="{_colour(k / (steps - 1))}"/>')
    out.append(f'<text x="{pad}" y="{ly + 24}" font-size="10" font-family="sans-serif">min {lo:.4g}</text>')
    out.append(f'<text x="{pad + size}" y="{ly + 24}" font-size="10" font-family="sans-serif" '
               f'text-anchor="end">max {hi:.4g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def profile_svg(profile, title: str, size: int = 400) -> str:
    """Log-log scatter of neighbourhood count against rank."""
    ranks = profile.ranks.astype(np.float64)
    counts = profile.counts.astype(np.float64)
    keep = counts > 0
    pad = 50
    width, height = size + 2 * pad, size + 2 * pad
    out = ['<?xml version="1.0" encoding="UTF-8"?>', SVG_VERSION_LINE,
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<text x="{pad}" y="{pad - 20}" font-size="12" font-family="sans-serif">{title}</text>',
           f'<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="none" stroke="#888888"/>']
    if keep.sum() > 0:
        lx, ly = np.log10(ranks[keep]), np.log10(counts[keep])
        x_hi = max(lx.max(), 1e-9)
        y_lo, y_hi = ly.min(), ly.max()
        y_span = y_hi - y_lo if y_hi > y_lo else 1.0
        for x, y in zip(lx, ly):
            px = pad + size * x / x_hi
            py = pad + size - size * (y - y_lo) / y_span
            out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="1.5" fill="#08306b"/>')
        out.append(f'<text x="{pad}" y="{pad + size + 16}" font-size="10" font-family="sans-serif">'
                   f'rank 1 .. {int(ranks[keep].max())} (log)</text>')
        out.append(f'<text x="{pad - 4}" y="{pad + 10}" font-size="10" font-family="sans-serif" '
                   f'text-anchor="end">{10 ** y_hi:.4g}</text>')
        out.append(f'<text x="{pad - 4}" y="{pad + size}" font-size="10" font-family="sans-serif" '
                   f'text-anchor="end">{10 ** y_lo:.4g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
