"""Report assembly and emission.

The JSON report is schema-versioned, key-sorted and uses shortest
round-trip float formatting, so identical inputs produce byte-identical
files. Plots are hand-built SVG (a step ROC curve, per-method OKS
histograms, and 17-panel per-keypoint small multiples) with the same
determinism guarantee.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import ConfigError, DataError
from .identity import DistanceReport, RocCurve
from .keypoints import COCO17_NAMES, HISTOGRAM_BINS, EvalSummary

REPORT_SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"


def _fmt(value: float) -> str:
    return repr(float(value))


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


def summary_to_jsonable(summary: EvalSummary, mode: str) -> dict:
    return {
        "mode": mode,
        "thresholds": list(summary.thresholds),
        "ap": {_fmt(t): summary.ap[t] for t in summary.thresholds},
        "ar": {_fmt(t): summary.ar[t] for t in summary.thresholds},
        "ap_mean": summary.ap_mean,
        "ar_mean": summary.ar_mean,
        "oks_histogram": {"bin_width": 1.0 / HISTOGRAM_BINS,
                          "counts": summary.oks_histogram},
        "per_keypoint_histograms": summary.per_keypoint_histograms,
        "evaluable_count": summary.evaluable_count,
        "unevaluable_count": summary.unevaluable_count,
    }


def distance_report_to_jsonable(report: DistanceReport) -> dict:
    rows = []
    for row in report.rows:
        rows.append({
            "subset": row.subset,
            "intra": list(row.intra),
            "to_original": list(row.to_original) if row.to_original else None,
            "to_avg_original": list(row.to_avg_original) if row.to_avg_original else None,
            "to_avg_target": list(row.to_avg_target),
        })
    return {"target_subset": report.target_subset, "rows": rows}


def roc_to_jsonable(curve: RocCurve) -> dict:
    return {"points": [[far, tar] for far, tar in curve.points], "auc": curve.auc}


def build_report(provenance: dict, deid: dict | None = None,
                 keypoints: dict | None = None, identity: dict | None = None) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "provenance": dict(provenance, tool="deidkit", tool_version=TOOL_VERSION),
        "deid": deid or {},
        "keypoints": keypoints or {},
        "identity": identity or {},
    }


def emit_report(report: dict, path: str | Path, format: str = "json") -> None:
    path = Path(path)
    if format == "json":
        path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                        encoding="utf-8")
    elif format == "csv":
        _emit_csv(report, path)
    else:
        raise ConfigError(f"unknown report format {format!r}")


def _emit_csv(report: dict, path: Path) -> None:
    lines = []
    table = report.get("identity", {}).get("distance_table")
    if table:
        lines.append("table,subset,intra_mean,intra_std,to_original_mean,to_original_std,"
                     "to_avg_original_mean,to_avg_original_std,to_avg_target_mean,to_avg_target_std")
        for row in table["rows"]:
            cells = ["distance", row["subset"]]
            for col in ("intra", "to_original", "to_avg_original", "to_avg_target"):
                pair = row[col]
                cells.extend([_fmt(pair[0]), _fmt(pair[1])] if pair else ["", ""])
            lines.append(",".join(cells))
    for method in sorted(report.get("keypoints", {})):
        summary = report["keypoints"][method]
        lines.append(f"eval,{method},threshold,ap,ar")
        for t in summary["thresholds"]:
            key = _fmt(t)
            lines.append(f"eval,{method},{key},{_fmt(summary['ap'][key])},{_fmt(summary['ar'][key])}")
        lines.append(f"eval,{method},mean,{_fmt(summary['ap_mean'])},{_fmt(summary['ar_mean'])}")
    if not lines:
        raise DataError("report has no tabular sections to emit as CSV")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# SVG plots
# ---------------------------------------------------------------------------

_SVG_HEAD = ('<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
             'viewBox="0 0 {w} {h}">')


def _axis_frame(x, y, w, h):
    return (f'<rect x="{x}" y="{y}" width="{w}" height="{h}" '
            'fill="none" stroke="black" stroke-width="1"/>')


def svg_roc(points, auc: float) -> str:
    w = h = 360
    pad = 40
    plot = w - 2 * pad
    coords = " ".join(
        f"{_fmt(pad + far * plot)},{_fmt(h - pad - tar * plot)}" for far, tar in points
    )
    parts = [
        _SVG_HEAD.format(w=w, h=h),
        _axis_frame(pad, pad, plot, plot),
        f'<polyline points="{coords}" fill="none" stroke="crimson" stroke-width="2"/>',
        f'<text x="{pad + 8}" y="{pad + 18}" font-size="14">AUC = {_fmt(auc)}</text>',
        f'<text x="{w // 2 - 12}" y="{h - 8}" font-size="12">FAR</text>',
        f'<text x="8" y="{h // 2}" font-size="12">TAR</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def _bars(counts, x0, y0, width, height):
    total = max(max(counts), 1)
    bar_w = width / len(counts)
    parts = []
    for i, c in enumerate(counts):
        if c == 0:
            continue
        bh = height * c / total
        parts.append(
            f'<rect x="{_fmt(x0 + i * bar_w)}" y="{_fmt(y0 + height - bh)}" '
            f'width="{_fmt(bar_w)}" height="{_fmt(bh)}" fill="steelblue"/>'
        )
    return parts


def svg_histogram(counts, title: str) -> str:
    w, h = 440, 280
    pad = 40
    parts = [_SVG_HEAD.format(w=w, h=h),
             f'<text x="{pad}" y="24" font-size="14">{title}</text>',
             _axis_frame(pad, 36, w - 2 * pad, h - 36 - pad)]
    parts.extend(_bars(counts, pad, 36, w - 2 * pad, h - 36 - pad))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_per_keypoint(histograms: dict[str, list[int]], title: str) -> str:
    """17 small-multiple panels, one per COCO17 keypoint name."""
    cols, rows = 5, 4
    panel_w, panel_h = 150, 110
    w, h = cols * panel_w + 20, rows * panel_h + 40
    parts = [_SVG_HEAD.format(w=w, h=h),
             f'<text x="10" y="22" font-size="14">{title}</text>']
    for idx, name in enumerate(COCO17_NAMES):
        col, row = idx % cols, idx // cols
        x0 = 10 + col * panel_w
        y0 = 34 + row * panel_h
        parts.append(f'<text x="{x0 + 4}" y="{y0 + 12}" font-size="9">{name}</text>')
        parts.append(_axis_frame(x0 + 4, y0 + 16, panel_w - 12, panel_h - 26))
        counts = histograms.get(name, [0] * HISTOGRAM_BINS)
        if any(counts):
            parts.extend(_bars(counts, x0 + 4, y0 + 16, panel_w - 12, panel_h - 26))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plots(report: dict, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    roc_data = report.get("identity", {}).get("roc")
    if roc_data:
        path = out_dir / "roc.svg"
        path.write_text(svg_roc(roc_data["points"], roc_data["auc"]), encoding="utf-8")
        written.append(path)
    for method in sorted(report.get("keypoints", {})):
        summary = report["keypoints"][method]
        path = out_dir / f"oks_hist_{method}.svg"
        path.write_text(
            svg_histogram(summary["oks_histogram"]["counts"], f"Instance OKS: {method}"),
            encoding="utf-8")
        written.append(path)
        path = out_dir / f"per_keypoint_{method}.svg"
        path.write_text(
            svg_per_keypoint(summary["per_keypoint_histograms"],
                             f"Per-keypoint similarity: {method}"),
            encoding="utf-8")
        written.append(path)
    return written
