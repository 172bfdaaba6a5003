"""Turns bench reports and training metrics into plot data (CSV / JSON).

Emits data only, no charts; everything is a pure function of the input
file.  PlotSeries JSON: {"name", "x", "y", "units"}.
"""

from __future__ import annotations

import csv
import io
import json
import math

CSV_HEADER = ["sampler", "kind", "evals_per_pixel", "field_evals",
              "wall_time_per_image", "psnr_db"]


def _check_bench_schema(report: dict):
    if not isinstance(report, dict) or report.get("version") != 1:
        raise ValueError("bench report: unsupported or missing version")
    for key in ("scene_seed", "resolution", "rows"):
        if key not in report:
            raise ValueError(f"bench report: missing key {key!r}")
    for i, row in enumerate(report["rows"]):
        for key in CSV_HEADER + ["reference"]:
            if key not in row:
                raise ValueError(f"bench report: row {i} missing key {key!r}")
        if not math.isfinite(row["psnr_db"]):
            raise ValueError(f"bench report: row {i} has non-finite psnr")


def summarize_bench(report: dict):
    """CSV table plus one PSNR-vs-evaluations series per sampler family.

    Returns (csv_text, series list, flags list).  A flag is raised whenever a
    family's PSNR drops as its evaluation count grows (quality-control
    signal; more samples should not hurt).
    """
    _check_bench_schema(report)
    rows = sorted(report["rows"], key=lambda r: (r["field_evals"], r["sampler"]))
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r[k] for k in CSV_HEADER])

    families: dict[str, list] = {}
    for r in rows:
        if not r["reference"]:
            families.setdefault(r["kind"], []).append(r)
    series = []
    flags = []
    for kind in sorted(families):
        fam = sorted(families[kind], key=lambda r: r["field_evals"])
        series.append({
            "name": kind,
            "x": [r["field_evals"] for r in fam],
            "y": [r["psnr_db"] for r in fam],
            "units": "field evaluations vs dB",
        })
        for a, b in zip(fam, fam[1:]):
            if b["psnr_db"] < a["psnr_db"]:
                flags.append(f"{kind}: psnr drops {a['psnr_db']:.2f} -> "
                             f"{b['psnr_db']:.2f} as evaluations grow "
                             f"({a['field_evals']} -> {b['field_evals']})")
    return buf.getvalue(), series, flags


def summarize_training(metrics_lines, window: int = 1):
    """Loss/PSNR curves from JSON-lines metrics, moving-average smoothed.

    window=1 is the identity.  NaN anywhere raises, naming the line number.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    records = []
    for ln, line in enumerate(metrics_lines, start=1):
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        for key in ("iter", "l_pht", "l_depth", "l_op", "psnr_val"):
            if key not in rec:
                raise ValueError(f"metrics line {ln}: missing {key!r}")
            if isinstance(rec[key], float) and math.isnan(rec[key]):
                raise ValueError(f"metrics line {ln}: NaN in {key!r}")
        records.append(rec)

    def smooth(ys):
        if window == 1:
            return list(ys)
        out = []
        for i in range(len(ys)):
            lo = max(0, i - window + 1)
            out.append(sum(ys[lo:i + 1]) / (i + 1 - lo))
        return out

    iters = [r["iter"] for r in records]
    series = []
    for key, units in (("l_pht", "mse"), ("l_depth", "mse"),
                       ("l_op", "nats"), ("psnr_val", "dB")):
        series.append({
            "name": key,
            "x": iters,
            "y": smooth([r[key] for r in records]),
            "units": units,
        })
    return series
