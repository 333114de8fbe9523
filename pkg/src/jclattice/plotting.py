"""Declarative plot descriptions and their renderer.

A sweep run can emit a ``.plot`` file next to its CSV: a few ``key:
value`` lines naming the table, the axes, and the series to draw.  The
renderer here reads that description plus the CSV and produces a PNG.
Keeping the description on disk means a run's figure can be re-rendered
(or tweaked by hand) without redoing any diagonalization.

Grammar, one directive per line, ``#`` starts a comment:

    title:  text
    csv:    table filename (relative to the description file)
    x:      column / axis label / scale
    y:      axis label / scale
    series: column / matplotlib style / legend label
    group:  column          (optional: one line per distinct value)
    hline:  value / style / legend label   (optional, repeatable)
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field


class PlotError(ValueError):
    """Malformed plot description or missing data column."""


@dataclass
class PlotDescription:
    title: str = ""
    csv: str = ""
    x_column: str = ""
    x_label: str = ""
    x_scale: str = "linear"
    y_label: str = ""
    y_scale: str = "linear"
    series: list[tuple[str, str, str]] = field(default_factory=list)
    group: str | None = None
    hlines: list[tuple[float, str, str]] = field(default_factory=list)


def _split(value: str, n: int, what: str) -> list[str]:
    parts = [p.strip() for p in value.split("/")]
    if len(parts) != n:
        raise PlotError(f"{what} needs {n} '/'-separated fields, got {value!r}")
    return parts


def parse_description(text: str) -> PlotDescription:
    desc = PlotDescription()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise PlotError(f"line {lineno}: expected 'key: value', got {raw!r}")
        key, value = (s.strip() for s in line.split(":", 1))
        if key == "title":
            desc.title = value
        elif key == "csv":
            desc.csv = value
        elif key == "x":
            col, label, scale = _split(value, 3, "x")
            desc.x_column, desc.x_label, desc.x_scale = col, label, scale
        elif key == "y":
            label, scale = _split(value, 2, "y")
            desc.y_label, desc.y_scale = label, scale
        elif key == "series":
            col, style, label = _split(value, 3, "series")
            desc.series.append((col, style, label))
        elif key == "group":
            desc.group = value
        elif key == "hline":
            v, style, label = _split(value, 3, "hline")
            try:
                desc.hlines.append((float(v), style, label))
            except ValueError:
                raise PlotError(f"line {lineno}: hline value {v!r} not a number")
        else:
            raise PlotError(f"line {lineno}: unknown directive {key!r}")
    if not desc.csv:
        raise PlotError("description has no 'csv:' line")
    if not desc.x_column:
        raise PlotError("description has no 'x:' line")
    if not desc.series:
        raise PlotError("description has no 'series:' line")
    for scale in (desc.x_scale, desc.y_scale):
        if scale not in ("linear", "log", "symlog"):
            raise PlotError(f"unknown scale {scale!r}")
    return desc


def format_description(desc: PlotDescription) -> str:
    lines = []
    if desc.title:
        lines.append(f"title: {desc.title}")
    lines.append(f"csv: {desc.csv}")
    lines.append(f"x: {desc.x_column} / {desc.x_label} / {desc.x_scale}")
    lines.append(f"y: {desc.y_label} / {desc.y_scale}")
    if desc.group:
        lines.append(f"group: {desc.group}")
    for col, style, label in desc.series:
        lines.append(f"series: {col} / {style} / {label}")
    for v, style, label in desc.hlines:
        lines.append(f"hline: {v:.12g} / {style} / {label}")
    return "\n".join(lines) + "\n"


def _load_columns(csv_path: str) -> tuple[list[str], list[dict]]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise PlotError(f"{csv_path}: empty table")
        return list(reader.fieldnames), list(reader)


def render(desc_path: str, png_path: str, dpi: int = 150) -> str:
    """Draw the description at ``desc_path`` to ``png_path``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(desc_path, encoding="utf-8") as fh:
        desc = parse_description(fh.read())
    csv_path = os.path.join(os.path.dirname(desc_path) or ".", desc.csv)
    fields, rows = _load_columns(csv_path)
    needed = [desc.x_column] + [c for c, _, _ in desc.series]
    if desc.group:
        needed.append(desc.group)
    for col in needed:
        if col not in fields:
            raise PlotError(f"{csv_path}: no column {col!r}")

    def points(rows_subset, col):
        xs, ys = [], []
        for row in rows_subset:
            sx, sy = row[desc.x_column], row[col]
            if sx == "" or sy == "" or sy in ("true", "false"):
                continue
            xs.append(float(sx))
            ys.append(float(sy))
        return xs, ys

    if desc.group:
        seen: list[str] = []
        for row in rows:
            if row[desc.group] not in seen:
                seen.append(row[desc.group])
        groups = [(g, [r for r in rows if r[desc.group] == g]) for g in seen]
    else:
        groups = [(None, rows)]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for gval, subset in groups:
        for col, style, label in desc.series:
            xs, ys = points(subset, col)
            if not xs:
                continue
            full_label = label if gval is None else f"{label} {desc.group}={gval}"
            ax.plot(xs, ys, style, label=full_label, markersize=3.5, linewidth=1.2)
    for v, style, label in desc.hlines:
        ax.axhline(v, linestyle=style or "--", color="gray", linewidth=1.0,
                   label=label or None)
    ax.set_xlabel(desc.x_label or desc.x_column)
    ax.set_ylabel(desc.y_label)
    ax.set_xscale(desc.x_scale)
    ax.set_yscale(desc.y_scale)
    if desc.title:
        ax.set_title(desc.title)
    if any(lbl for _, _, lbl in desc.series) or desc.hlines:
        ax.legend(fontsize=8, framealpha=0.6)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, dpi=dpi)
    plt.close(fig)
    return png_path


def describe(spec, result, csv_name: str) -> str | None:
    """Build the default description for a finished sweep, or None."""
    axes = spec.axes()
    mode = spec.mode
    desc = PlotDescription(csv=csv_name)

    if mode == "sector":
        if not axes:
            return None
        name = axes[0][0]
        desc.title = "excitation gap across the sweep"
        desc.x_column = name
        desc.x_label = f"{name} (MHz)"
        desc.y_label = "E_x (MHz)"
        desc.series = [("E_x_MHz", "o-", "E_x")]
        if len(axes) == 2:
            desc.group = axes[1][0]
    elif mode == "gaps":
        if not axes:
            return None
        name = axes[0][0]
        M_list = spec.gce.M_list if spec.gce.M_list is not None else (4, 5, 6, 7, 8)
        desc.title = "charge gap, finite sizes and infinite-size estimate"
        desc.x_column = name
        desc.x_label = f"{name} (MHz)"
        desc.y_label = "E_gp (MHz)"
        desc.series = [
            (f"E_gp_M{M}_MHz", ".:", f"M={M}") for M in M_list
        ] + [("E0_gp_MHz", "o-", "extrapolated")]
        if len(axes) == 2:
            desc.group = axes[1][0]
    elif mode == "gce":
        desc.title = "ground-state filling and edge coherence vs chemical potential"
        desc.x_column = "mu_rel_MHz"
        desc.x_label = "mu - omega_c (MHz)"
        desc.y_label = "n, rho1(x_max)"
        desc.series = [("n", "o-", "filling n"), ("rho1_xmax", "s-", "rho1(x_max)")]
    elif mode in ("phase-lambda", "phase-delta"):
        desc.x_column = "lambda" if mode == "phase-lambda" else "delta_MHz"
        desc.x_label = (
            "lambda = ln(g_r/g_l)" if mode == "phase-lambda" else "delta (MHz)"
        )
        desc.title = "lobe boundaries in the chemical potential"
        desc.y_label = "mu - omega_c (MHz)"
        desc.series = []
        for n in spec.fillings:
            desc.series.append((f"mu0_minus_n{n}_rel_MHz", "o-", f"mu- (n={n})"))
            desc.series.append((f"mu0_plus_n{n}_rel_MHz", "s-", f"mu+ (n={n})"))
    elif mode == "analytic":
        if not axes:
            return None
        name = axes[0][0]
        desc.title = "photon-blockade scales from the single-site spectrum"
        desc.x_column = name
        desc.x_label = f"{name} (MHz)"
        desc.y_label = "U(n) (MHz)"
        desc.series = [
            ("U_n1_MHz", "-", "U(1)"),
            ("U_n2_MHz", "--", "U(2)"),
            ("U_n3_MHz", ":", "U(3)"),
        ]
        if len(axes) == 2:
            desc.group = axes[1][0]
    elif mode == "critical-ratio":
        desc.title = "extrapolated charge gap vs coupling ratio"
        desc.x_column = "ratio"
        desc.x_label = "g_r / g_l"
        desc.y_label = "E0_gp (MHz)"
        desc.series = [("E0_gp_MHz", "o-", "extrapolated gap")]
        desc.hlines = [(spec.gap_tol, "--", "threshold")]
    else:  # pragma: no cover
        return None
    return format_description(desc)
