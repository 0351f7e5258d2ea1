"""Deterministic CSV, metadata and SVG emission.

CSV: one header row, full-precision %.17g floats, LF endings.  Identical data
produces byte-identical files, which is the determinism contract the tests
pin down.  Files are staged under a temporary name and renamed only when the
writing run succeeds.
"""

from __future__ import annotations

import os
from pathlib import Path


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


class StagedWriter:
    """Collects finished artifacts and renames them into place atomically."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._staged: list[tuple[Path, Path]] = []

    def stage_text(self, name: str, text: str) -> Path:
        final = self.out_dir / name
        tmp = self.out_dir / (name + ".tmp")
        tmp.write_text(text, encoding="utf-8", newline="\n")
        self._staged.append((tmp, final))
        return final

    def stage_csv(self, name: str, header, rows) -> Path:
        lines = [",".join(header)]
        lines.extend(",".join(fmt(v) for v in row) for row in rows)
        return self.stage_text(name, "\n".join(lines) + "\n")

    def commit(self) -> list[Path]:
        done = []
        for tmp, final in self._staged:
            os.replace(tmp, final)
            done.append(final)
        self._staged.clear()
        return done

    def abort(self):
        for tmp, _ in self._staged:
            try:
                tmp.unlink()
            except OSError:
                pass
        self._staged.clear()


def metadata_text(config_lines: list[str], derived: dict) -> str:
    """Re-parseable config plus '#'-commented derived quantities."""
    lines = ["# scarlab run metadata: re-parseable as a config file"]
    lines.extend(config_lines)
    for key, val in derived.items():
        lines.append(f"# {key} = {fmt(val) if isinstance(val, (int, float, bool)) else val}")
    return "\n".join(lines) + "\n"


def read_csv(path):
    """(header, columns) from one of our CSVs; raises ValueError when malformed."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if len(lines) < 2:
        raise ValueError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2:
        raise ValueError(f"{path}: need at least two columns")
    cols = [[] for _ in header]
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ValueError(f"{path}: row has {len(parts)} fields, header has {len(header)}")
        for c, tok in zip(cols, parts):
            c.append(float(tok))
    return header, cols


def _svg_fmt(x: float) -> str:
    return format(x, ".6g")


def emit_svg(csv_path, svg_path=None) -> Path:
    """Single deterministic line plot of column 1 against column 0."""
    csv_path = Path(csv_path)
    header, cols = read_csv(csv_path)
    xs, ys = cols[0], cols[1]
    width, height = 640, 480
    ml, mr, mt, mb = 70, 20, 20, 50
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(x):
        return ml + (x - x0) / (x1 - x0) * (width - ml - mr)

    def py(y):
        return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" '
        'fill="none" stroke="black"/>',
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        parts.append(f'<text x="{_svg_fmt(px(xv))}" y="{height - mb + 18}" '
                     f'font-size="12" text-anchor="middle">{_svg_fmt(xv)}</text>')
        parts.append(f'<text x="{ml - 6}" y="{_svg_fmt(py(yv) + 4)}" '
                     f'font-size="12" text-anchor="end">{_svg_fmt(yv)}</text>')
    points = " ".join(f"{_svg_fmt(px(x))},{_svg_fmt(py(y))}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    parts.append(f'<text x="{(ml + width - mr) / 2}" y="{height - 12}" font-size="14" '
                 f'text-anchor="middle">{header[0]}</text>')
    parts.append(f'<text x="16" y="{(mt + height - mb) / 2}" font-size="14" '
                 f'text-anchor="middle" transform="rotate(-90 16 {(mt + height - mb) / 2})">'
                 f'{header[1]}</text>')
    parts.append("</svg>")
    out = Path(svg_path) if svg_path else csv_path.with_suffix(".svg")
    out.write_text("\n".join(parts) + "\n", encoding="utf-8", newline="\n")
    return out
