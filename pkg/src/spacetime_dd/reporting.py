"""CSV, SVG, and matplotlib outputs of benchmark runs.

CSV files are RFC-4180-style with a header row, '.' decimal separator, and
shortest round-trip float formatting, so identical runs produce byte-identical
files.  The error-curve plot is written twice: a hand-rolled SVG 1.1 file
with one polyline per method (stable, diffable) and a matplotlib PNG for
reading comfort.
"""

import csv
import os
import xml.sax.saxutils as saxutils

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

_PALETTE = ("#1b6ca8", "#c23b22", "#2e8b57", "#8b5cf6", "#b8860b", "#444444")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_iteration_csv(path, trace):
    rows = []
    for i, inc in enumerate(trace.increments):
        ee = trace.errors[i] if trace.errors is not None else None
        rows.append((i + 1, inc, trace.residual_norms[i], ee))
    _write_rows(path, ("iteration", "increment_norm", "residual_norm", "e_e"), rows)


def write_summary_csv(path, outcomes, monolithic_ee):
    rows = []
    for o in outcomes:
        rows.append((o.spec.name, o.plateau_ee, o.fitted_rate, o.plateau_iteration))
    rows.append(("monolithic", monolithic_ee, None, None))
    _write_rows(path, ("method", "plateau_ee", "fitted_L", "iterations_to_plateau"), rows)


def write_sweep_csv(path, rows):
    _write_rows(
        path,
        ("method", "phi", "s", "converged", "iterations_to_tol", "fitted_L"),
        [(r.method, r.phi, r.s, r.converged, r.iterations, r.fitted_rate) for r in rows],
    )


def write_fields_csv(out_dir, name, fields):
    for region, U in zip((1, 2), fields):
        path = os.path.join(out_dir, f"{name}_field_omega{region}.csv")
        np.savetxt(path, U, delimiter=",")


def _svg_path_points(xs, ys, x_map, y_map):
    return " ".join(f"{x_map(x):.2f},{y_map(y):.2f}" for x, y in zip(xs, ys))


def write_svg(path, curves, title="relative error vs iteration"):
    """Log-y line plot; one <polyline> per named curve, SVG 1.1."""
    width, height = 640, 440
    ml, mr, mt, mb = 70, 20, 40, 50
    plot_w, plot_h = width - ml - mr, height - mt - mb

    all_y = [y for _, ys in curves for y in ys if y > 0.0]
    all_x = [x for xs, _ in (( [i + 1 for i in range(len(ys))], ys) for _, ys in curves) for x in xs]
    if not all_y:
        all_y = [1e-1, 1.0]
    y_lo = 10.0 ** np.floor(np.log10(min(all_y)))
    y_hi = 10.0 ** np.ceil(np.log10(max(all_y)))
    if y_hi <= y_lo:
        y_hi = 10.0 * y_lo
    x_hi = max(all_x) if all_x else 1

    def x_map(x):
        return ml + plot_w * (x - 1) / max(x_hi - 1, 1)

    def y_map(y):
        frac = (np.log10(y) - np.log10(y_lo)) / (np.log10(y_hi) - np.log10(y_lo))
        return mt + plot_h * (1.0 - frac)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{saxutils.escape(title)}</text>',
        f'<rect x="{ml}" y="{mt}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#888" stroke-width="1"/>',
    ]
    decade = y_lo
    while decade <= y_hi * 1.0001:
        y = y_map(decade)
        parts.append(f'<line x1="{ml}" y1="{y:.2f}" x2="{ml + plot_w}" y2="{y:.2f}" '
                     f'stroke="#ddd" stroke-width="1"/>')
        parts.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{decade:.0e}</text>')
        decade *= 10.0
    for k in range(0, x_hi + 1, max(1, x_hi // 10)):
        if k == 0:
            continue
        x = x_map(k)
        parts.append(f'<text x="{x:.2f}" y="{mt + plot_h + 16}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{k}</text>')
    parts.append(f'<text x="{ml + plot_w / 2:.0f}" y="{height - 12}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">iteration</text>')

    for i, (name, ys) in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        xs = [k + 1 for k in range(len(ys))]
        pts = _svg_path_points(xs, [max(y, y_lo) for y in ys], x_map, y_map)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" '
                     f'points="{pts}"/>')
        parts.append(f'<text x="{ml + plot_w - 8}" y="{mt + 16 + 16 * i}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="12" fill="{color}">'
                     f'{saxutils.escape(name)}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(parts) + "\n")


def write_png(path, curves, title="relative error vs iteration"):
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for i, (name, ys) in enumerate(curves):
        xs = np.arange(1, len(ys) + 1)
        ax.semilogy(xs, ys, marker="o", markersize=3,
                    color=_PALETTE[i % len(_PALETTE)], label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if curves:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_run_outputs(out_dir, result, dump_fields=False):
    """All artifacts of one benchmark run; returns the file list."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    curves = []
    for outcome in result.outcomes:
        path = os.path.join(out_dir, f"{outcome.spec.name}.csv")
        write_iteration_csv(path, outcome.result.trace)
        written.append(path)
        if outcome.result.trace.errors is not None:
            curves.append((outcome.spec.name, outcome.result.trace.errors))
        if dump_fields:
            write_fields_csv(out_dir, outcome.spec.name, outcome.result.fields)
    summary = os.path.join(out_dir, "summary.csv")
    write_summary_csv(summary, result.outcomes, result.monolithic_ee)
    written.append(summary)
    svg = os.path.join(out_dir, "ee_curves.svg")
    write_svg(svg, curves)
    written.append(svg)
    png = os.path.join(out_dir, "ee_curves.png")
    write_png(png, curves)
    written.append(png)
    return written
