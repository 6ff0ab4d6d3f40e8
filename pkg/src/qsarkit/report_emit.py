"""Text, CSV and SVG renderings of run results.

Every renderer works from exactly the numbers written to its CSV, so
re-reading a CSV and rendering again reproduces the SVG byte for byte.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Mapping, Sequence

from .regression import FittedModel, contributions

TABLE_ROWS = (
    "n",
    "df",
    "r2",
    "q2",
    "f_test",
    "best_ran_r2",
    "best_ran_q2",
    "z_score_ran_r2",
    "z_score_ran_q2",
    "alpha_ran_r2",
    "alpha_ran_q2",
    "r2_se",
    "q2_se",
    "pred_r2",
    "pred_r2_se",
)
INTEGER_ROWS = {"n", "df"}

_Q4 = Decimal("0.0001")


def fmt4(value) -> str:
    """Round half-even to 4 decimals; None prints as '-'."""
    if value is None:
        return "-"
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    return str(Decimal(repr(float(value))).quantize(_Q4, rounding=ROUND_HALF_EVEN))


def _num(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- scatter


@dataclass(frozen=True)
class ScatterSeries:
    train: tuple[tuple[str, float, float], ...]
    test: tuple[tuple[str, float, float], ...]
    lo: float
    hi: float

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[str, str, float, float]]) -> "ScatterSeries":
        """Build from (id, set, observed, predicted) rows."""
        train = tuple((i, o, p) for i, s, o, p in rows if s == "train")
        test = tuple((i, o, p) for i, s, o, p in rows if s == "test")
        values = [v for _, _, o, p in rows for v in (o, p)]
        lo, hi = min(values), max(values)
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        return cls(train, test, lo - pad, hi + pad)


def prediction_rows(table) -> list[tuple[str, str, float, float]]:
    return [(r["id"], r["set"], r["observed"], r["predicted"]) for r in table]


def write_scatter_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "set", "observed", "predicted"])
        for cid, side, obs, pred in rows:
            w.writerow([cid, side, _num(obs), _num(pred)])


def read_scatter_csv(path) -> list[tuple[str, str, float, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(r["id"], r["set"], float(r["observed"]), float(r["predicted"])) for r in csv.DictReader(fh)]


SIZE = 480
MARGIN = 60


def render_scatter_svg(series: ScatterSeries, title: str = "Observed vs. predicted pIC50") -> str:
    """Square plot in data coordinates; both axes share one range, so a point
    sits on the identity line exactly when its coordinates are equal."""
    span = series.hi - series.lo
    scale = SIZE / span
    r = 4.0 / scale
    # data (x, y) -> pixel (MARGIN + (x-lo)*scale, MARGIN + SIZE - (y-lo)*scale)
    tx = MARGIN - series.lo * scale
    ty = MARGIN + SIZE + series.lo * scale
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE + 2 * MARGIN}" '
        f'height="{SIZE + 2 * MARGIN}" viewBox="0 0 {SIZE + 2 * MARGIN} {SIZE + 2 * MARGIN}">',
        f'<title>{title}</title>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#444"/>',
        f'<text x="{MARGIN + SIZE / 2}" y="{SIZE + 2 * MARGIN - 15}" text-anchor="middle" '
        'font-size="14">Observed pIC50</text>',
        f'<text x="18" y="{MARGIN + SIZE / 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {MARGIN + SIZE / 2})">Predicted pIC50</text>',
        f'<text x="{MARGIN}" y="{MARGIN + SIZE + 18}" font-size="11">{fmt4(series.lo)}</text>',
        f'<text x="{MARGIN + SIZE}" y="{MARGIN + SIZE + 18}" font-size="11" '
        f'text-anchor="end">{fmt4(series.hi)}</text>',
        f'<g id="data" transform="matrix({_num(scale)} 0 0 {_num(-scale)} {_num(tx)} {_num(ty)})">',
        f'<line id="identity" x1="{_num(series.lo)}" y1="{_num(series.lo)}" '
        f'x2="{_num(series.hi)}" y2="{_num(series.hi)}" stroke="#888" '
        'stroke-dasharray="4 3" vector-effect="non-scaling-stroke"/>',
    ]
    for side, colour in (("train", "#d62728"), ("test", "#1f77b4")):
        points = getattr(series, side)
        if not points:
            continue
        out.append(f'<g class="{side}" fill="{colour}">')
        for cid, obs, pred in points:
            out.append(f'<circle cx="{_num(obs)}" cy="{_num(pred)}" r="{_num(r)}"><title>{cid}</title></circle>')
        out.append("</g>")
    out.append("</g>")
    legend_y = MARGIN - 20
    out.append(f'<circle cx="{MARGIN + 8}" cy="{legend_y}" r="4" fill="#d62728"/>')
    out.append(f'<text x="{MARGIN + 16}" y="{legend_y + 4}" font-size="12">Training set</text>')
    if series.test:
        out.append(f'<circle cx="{MARGIN + 120}" cy="{legend_y}" r="4" fill="#1f77b4"/>')
        out.append(f'<text x="{MARGIN + 128}" y="{legend_y + 4}" font-size="12">Test set</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_scatter(table, out_dir) -> tuple[Path, Path]:
    """Write ``scatter.csv`` and ``scatter.svg`` from a prediction table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = prediction_rows(table)
    csv_path, svg_path = out_dir / "scatter.csv", out_dir / "scatter.svg"
    write_scatter_csv(rows, csv_path)
    # render from the parsed CSV so both files carry identical numbers
    svg_path.write_text(render_scatter_svg(ScatterSeries.from_rows(read_scatter_csv(csv_path))), encoding="utf-8")
    return csv_path, svg_path


# ---------------------------------------------------------- contributions


@dataclass(frozen=True)
class ContributionChart:
    items: tuple[tuple[str, str], ...]  # (descriptor, percentage text at 4 dp)

    @classmethod
    def from_model(cls, model: FittedModel) -> "ContributionChart":
        pairs = contributions(model).sorted()
        return cls(tuple((name, fmt4(pct)) for name, pct in pairs))


def write_contributions_csv(chart: ContributionChart, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["descriptor", "percentage"])
        w.writerows(chart.items)


def read_contributions_csv(path) -> ContributionChart:
    with open(path, newline="", encoding="utf-8") as fh:
        return ContributionChart(tuple((r["descriptor"], r["percentage"]) for r in csv.DictReader(fh)))


def render_contribution_svg(chart: ContributionChart, title: str = "Descriptor contribution (%)") -> str:
    bar_h, gap, half = 24, 10, 200
    label_w = 160
    width = label_w + 2 * half + 80
    height = 50 + len(chart.items) * (bar_h + gap) + 20
    axis_x = label_w + half + 40
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{title}</title>",
        f'<line x1="{axis_x}" y1="30" x2="{axis_x}" y2="{height - 10}" stroke="#444"/>',
    ]
    for i, (name, pct_text) in enumerate(chart.items):
        pct = float(pct_text)
        y = 40 + i * (bar_h + gap)
        length = abs(pct) / 100.0 * half
        x = axis_x if pct >= 0 else axis_x - length
        colour = "#2ca02c" if pct >= 0 else "#d62728"
        cls = "positive" if pct >= 0 else "negative"
        out.append(
            f'<rect class="{cls}" x="{x:.4f}" y="{y}" width="{length:.4f}" height="{bar_h}" '
            f'fill="{colour}"><title>{name}: {pct_text}</title></rect>'
        )
        out.append(
            f'<text x="10" y="{y + bar_h * 0.7:.1f}" font-size="12">{name}</text>'
        )
        tx = x + length + 4 if pct >= 0 else x - 4
        anchor = "start" if pct >= 0 else "end"
        out.append(
            f'<text x="{tx:.4f}" y="{y + bar_h * 0.7:.1f}" font-size="11" text-anchor="{anchor}">{pct_text}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_contribution_chart(model: FittedModel, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    chart = ContributionChart.from_model(model)
    csv_path, svg_path = out_dir / "contributions.csv", out_dir / "contributions.svg"
    write_contributions_csv(chart, csv_path)
    svg_path.write_text(render_contribution_svg(read_contributions_csv(csv_path)), encoding="utf-8")
    return csv_path, svg_path


# ------------------------------------------------------------------ table


def table_column(report, randomization=None) -> dict:
    """Map one method's results onto the statistics-table rows.

    ``n`` is the number of compounds in the regression (training set).
    """
    get = report.get if isinstance(report, Mapping) else lambda k: getattr(report, k)
    col = {
        "n": get("n_train"),
        "df": get("df"),
        "r2": get("r2"),
        "q2": get("q2"),
        "f_test": get("f_test"),
        "r2_se": get("r2_se"),
        "q2_se": get("q2_se"),
        "pred_r2": get("pred_r2"),
        "pred_r2_se": get("pred_r2_se"),
    }
    if randomization is not None:
        rget = randomization.get if isinstance(randomization, Mapping) else lambda k: getattr(randomization, k)
        col.update(
            best_ran_r2=rget("best_ran_r2"),
            best_ran_q2=rget("best_ran_q2"),
            z_score_ran_r2=rget("z_score_r2"),
            z_score_ran_q2=rget("z_score_q2"),
            alpha_ran_r2=rget("alpha_r2"),
            alpha_ran_q2=rget("alpha_q2"),
        )
    return col


def _cell(row: str, value) -> str:
    if value is None:
        return "-"
    if row in INTEGER_ROWS:
        return str(int(value))
    return fmt4(value)


def render_table(columns: Mapping[str, Mapping]) -> tuple[str, list[list[str]]]:
    """Plain-text table and CSV rows for method-indexed columns."""
    methods = list(columns)
    rows = [["parameter", *methods]]
    for row in TABLE_ROWS:
        rows.append([row, *(_cell(row, columns[m].get(row)) for m in methods)])
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for j, r in enumerate(rows):
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if j == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines) + "\n", rows


def emit_table(columns: Mapping[str, Mapping], out_dir) -> tuple[Path, Path]:
    """Write ``stats_table.txt`` and ``stats_table.csv``.

    ``columns`` maps method name to a dict produced by :func:`table_column`.
    """
    if not columns:
        raise ValueError("at least one report is required")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text, rows = render_table(columns)
    txt_path, csv_path = out_dir / "stats_table.txt", out_dir / "stats_table.csv"
    txt_path.write_text(text, encoding="utf-8")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    return txt_path, csv_path
