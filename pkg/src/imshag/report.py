"""Presentation helpers: half-up rounding, text/CSV/Markdown tables and SVG bar charts."""

from __future__ import annotations

import csv
import io
import math
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

FORMATS = ("table", "csv", "md", "svg")
PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1")


def round_half_up(x, places: int = 2) -> Decimal:
    # str() gives the shortest repr, so 0.125 stays 0.125 rather than 0.12499..
    return Decimal(str(float(x))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def fmt_risk(x) -> str:
    return str(round_half_up(x, 2))


def fmt_prob(x) -> str:
    x = float(x)
    if 0 < x < 0.01:
        return str(round_half_up(x, 3))
    return str(round_half_up(x, 2))


def render_rows(headers: Sequence[str], rows: Sequence[Sequence[str]], fmt: str) -> str:
    """Render string cells as an aligned text table, CSV or a Markdown table."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "md":
        lines = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    if fmt == "table":
        widths = [max(len(str(c)) for c in col) for col in zip(headers, *rows)]
        line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
        out = [line(headers), line("-" * w for w in widths)] + [line(r) for r in rows]
        return "\n".join(out) + "\n"
    raise ValueError(f"unsupported format {fmt!r}")


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    exp = math.floor(math.log10(v))
    for step in (1, 2, 2.5, 5, 10):
        top = step * 10 ** exp
        if top >= v:
            return top
    return 10 ** (exp + 1)


def render_bar_chart(categories: Sequence[str], series: Mapping[str, Sequence[float]], *,
                     x_label: str = "", y_label: str = "", title: str = "") -> str:
    """Grouped bar chart as a standalone SVG 1.1 document.

    ``series`` maps a legend label to one value per category.  Output is a
    pure function of the arguments, so identical input gives identical bytes.
    """
    if not categories or not series:
        raise ValueError("bar chart needs at least one category and one series")
    for label, values in series.items():
        if len(values) != len(categories):
            raise ValueError(f"series {label!r} has {len(values)} values for {len(categories)} categories")
        for v in values:
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v) or v < 0:
                raise ValueError(f"series {label!r}: bar values must be finite and >= 0, got {v!r}")

    n_series = len(series)
    bar_w = 18
    group_w = n_series * bar_w + 16
    left, right, top, bottom = 64, 16, 48 if title else 24, 56
    plot_h = 240
    plot_w = group_w * len(categories)
    legend_h = 18 * n_series
    width = left + plot_w + right
    height = top + plot_h + bottom + legend_h
    y_max = _nice_max(max(max(v) for v in series.values()))

    def y(v):
        return top + plot_h - plot_h * v / y_max

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:g}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')

    for k in range(6):
        v = y_max * k / 5
        yy = y(v)
        out.append(f'<line x1="{left}" y1="{yy:.2f}" x2="{left + plot_w}" y2="{yy:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 6}" y="{yy + 4:.2f}" text-anchor="end">{v:g}</text>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="#000000"/>')
    out.append(f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="#000000"/>')

    for gi, cat in enumerate(categories):
        gx = left + gi * group_w + 8
        out.append(f'<g class="bar-group" data-category={quoteattr(cat)}>')
        for si, (label, values) in enumerate(series.items()):
            v = values[gi]
            x = gx + si * bar_w
            yy = y(v)
            colour = PALETTE[si % len(PALETTE)]
            out.append(f'<rect x="{x}" y="{yy:.2f}" width="{bar_w - 2}" height="{top + plot_h - yy:.2f}" '
                       f'fill="{colour}"><title>{escape(label)}: {v:.4g}</title></rect>')
            out.append(f'<text x="{x + (bar_w - 2) / 2:g}" y="{yy - 3:.2f}" text-anchor="middle" '
                       f'font-size="8">{fmt_risk(v)}</text>')
        out.append(f'<text x="{gx + n_series * bar_w / 2:g}" y="{top + plot_h + 16}" '
                   f'text-anchor="middle">{escape(cat)}</text>')
        out.append("</g>")

    if x_label:
        out.append(f'<text x="{left + plot_w / 2:g}" y="{top + plot_h + 36}" '
                   f'text-anchor="middle">{escape(x_label)}</text>')
    if y_label:
        cy = top + plot_h / 2
        out.append(f'<text x="16" y="{cy:g}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {cy:g})">{escape(y_label)}</text>')

    ly = top + plot_h + bottom
    for si, label in enumerate(series):
        colour = PALETTE[si % len(PALETTE)]
        out.append(f'<rect x="{left}" y="{ly + si * 18}" width="12" height="12" fill="{colour}"/>')
        out.append(f'<text x="{left + 18}" y="{ly + si * 18 + 10}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
