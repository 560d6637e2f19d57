"""Write an ExperimentReport as JSON, one CSV per curve and one SVG plot per
curve. Output depends only on the report, so reruns are byte-identical."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from xml.sax.saxutils import escape

from .evaluate import DRCurve, ExperimentReport
from .fsutil import atomic_write, dump_json

SUMMARY_NAME = "report.json"
CURVE_HEADER = ("parameter", "detection_rate")


def _num(v) -> str:
    if isinstance(v, float) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)


def curve_csv(curve: DRCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for p, dr in curve.grid:
        w.writerow([_num(p), repr(float(dr))])
    return buf.getvalue()


def read_curve_csv(path, attack_name: str = "", model_name: str = "") -> DRCurve:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CURVE_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CURVE_HEADER)}")
    grid = [(float(p), float(dr)) for p, dr in rows[1:]]
    base = next((dr for p, dr in grid if p == 0), grid[0][1] if grid else 0.0)
    return DRCurve(attack_name, model_name, grid, base)


# plotting ---------------------------------------------------------------------

W, H = 480, 320
LEFT, RIGHT, TOP, BOTTOM = 56, 16, 32, 48
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def svg_plot(title: str, series: list[tuple[str, list[tuple[float, float]]]],
             xlabel: str = "parameter", ylabel: str = "detection rate") -> str:
    """Line plot with categorical x positions (one tick per grid value) and
    a fixed [0, 1] y axis."""
    xs = sorted({p for _, pts in series for p, _ in pts})
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(p):
        i = xs.index(p)
        return LEFT + (pw * i / (len(xs) - 1) if len(xs) > 1 else pw / 2)

    def py(v):
        return TOP + ph * (1.0 - min(max(v, 0.0), 1.0))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>']
    for k in range(6):
        v = k / 5
        y = py(v)
        out.append(f'<line x1="{LEFT - 4}" y1="{y:.1f}" x2="{LEFT + pw}" y2="{y:.1f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.1f}" text-anchor="end">{v:.1f}</text>')
    for p in xs:
        x = px(p)
        out.append(f'<line x1="{x:.1f}" y1="{TOP + ph}" x2="{x:.1f}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{TOP + ph + 16}" text-anchor="middle">{_num(p)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, pts) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{px(p):.1f},{py(v):.1f}" for p, v in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        for p, v in pts:
            out.append(f'<circle cx="{px(p):.1f}" cy="{py(v):.1f}" r="3" fill="{color}"/>')
        ly = TOP + 14 * i + 8
        out.append(f'<line x1="{LEFT + pw - 110}" y1="{ly}" x2="{LEFT + pw - 92}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw - 88}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _xlabel(attack: str) -> str:
    if attack == "feature":
        return "feature increment"
    if attack.startswith("add_node"):
        return "eta (new nodes)"
    return {"c2x_benign": "beta", "c2x_malicious": "theta"}.get(attack, "parameter")


def emit_report(report: ExperimentReport, out_dir) -> list[Path]:
    """Write report.json, curves/<attack>__<model>.csv and
    plots/<attack>__<model>.svg. Returns the written paths."""
    out_dir = Path(out_dir)
    written = [atomic_write(out_dir / SUMMARY_NAME, dump_json(report.to_dict()))]
    for c in report.curves:
        written.append(atomic_write(out_dir / "curves" / f"{c.key}.csv", curve_csv(c)))
        svg = svg_plot(f"{c.attack_name} vs {c.model_name}", [(c.model_name, c.grid)],
                       _xlabel(c.attack_name))
        written.append(atomic_write(out_dir / "plots" / f"{c.key}.svg", svg))
    return written


def load_report(path) -> ExperimentReport:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if d.get("format") != "gnnids-report" or d.get("version") != 1:
        raise ValueError(f"{path}: not a version-1 report")
    return ExperimentReport.from_dict(d)
