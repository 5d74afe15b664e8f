"""Report envelope, JSON schema, and file emitters (JSON, CSV, SVG)."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Optional

import jsonschema
import numpy as np

from . import __version__

SCHEMA_VERSION = "1.0"

_NUM = {"type": "number"}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_SUMMARY = {
    "type": "object",
    "required": ["mean", "sd", "mode", "ci_low", "ci_high", "tail_prob", "tail_threshold"],
    "properties": {
        "mean": _NUM, "sd": {"type": "number", "minimum": 0}, "mode": _NUM,
        "ci_low": _NUM, "ci_high": _NUM, "tail_prob": _PROB, "tail_threshold": _NUM,
    },
    "additionalProperties": False,
}
_BETA = {
    "type": "object",
    "required": ["r", "s"],
    "properties": {"r": {"type": "number", "exclusiveMinimum": 0}, "s": {"type": "number", "exclusiveMinimum": 0}},
}
_MEAN_SD = {
    "type": "object",
    "required": ["mean", "sd"],
    "properties": {"mean": _NUM, "sd": {"type": "number", "minimum": 0}},
}
_DIAG = {
    "type": "object",
    "additionalProperties": {
        "type": "object",
        "required": ["rhat", "ess", "mcse"],
        "properties": {"rhat": _NUM, "ess": _NUM, "mcse": _NUM},
    },
}


def _when(command: str, required: list[str], properties: dict) -> dict:
    return {
        "if": {"properties": {"command": {"const": command}}},
        "then": {"required": required, "properties": properties},
    }


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "vaxinfer report",
    "type": "object",
    "required": ["schema_version", "command", "provenance", "warnings"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["infer", "predict", "severity", "reshape", "succession", "design-study"]},
        "headline": {"type": "string"},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "provenance": {
            "type": "object",
            "required": ["seed", "config", "tool_version"],
            "properties": {
                "seed": {"type": ["integer", "null"]},
                "config": {"type": "object"},
                "tool_version": {"type": "string"},
            },
        },
    },
    "allOf": [
        _when("infer", ["dataset_label", "engine", "summary", "summaries", "beta_fit"], {
            "engine": {"enum": ["gibbs", "exact", "both"]},
            "summary": _SUMMARY,
            "summaries": {"type": "object", "additionalProperties": _SUMMARY, "minProperties": 1},
            "differences": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
            "beta_fit": _BETA,
            "diagnostics": {"anyOf": [_DIAG, {"type": "null"}]},
            "n_va": {"anyOf": [_MEAN_SD, {"type": "null"}]},
        }),
        {
            "if": {"properties": {"command": {"const": "infer"}, "engine": {"const": "both"}}},
            "then": {
                "required": ["differences"],
                "properties": {"summaries": {"required": ["exact", "gibbs"]},
                               "differences": {"minProperties": 1}},
            },
        },
        _when("predict", ["monte_carlo", "approximation", "cohort"], {
            "monte_carlo": {
                "type": "object",
                "required": ["mean", "sd", "n_samples"],
                "properties": {"p_ov": {"type": ["number", "null"]}},
            },
            "approximation": _MEAN_SD,
        }),
        _when("severity", ["dataset_label", "vaccine_arm", "placebo_arm", "severe_free_vaccine"], {
            "vaccine_arm": _BETA,
            "placebo_arm": _BETA,
            "severe_free_vaccine": _PROB,
        }),
        _when("reshape", ["flat_fit", "prior", "posterior"], {
            "flat_fit": _BETA, "prior": _BETA, "posterior": _BETA,
        }),
        _when("succession", ["successes", "trials", "probability"], {"probability": _PROB}),
        _when("design-study", ["baseline", "reduced", "sd_ratio"], {"sd_ratio": _NUM}),
    ],
}


def envelope(command: str, seed: Optional[int], config: dict, **fields: Any) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "warnings": [],
        "provenance": {"seed": seed, "config": config, "tool_version": __version__},
    }
    doc.update(fields)
    return doc


def validate(doc: dict) -> None:
    jsonschema.validate(doc, REPORT_SCHEMA)


def canonical_json(doc: dict) -> str:
    return json.dumps(to_plain(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def to_plain(obj):
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _flatten(obj, prefix: str = "") -> Iterable[tuple[str, Any]]:
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def flat_csv(doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in _flatten(to_plain(doc)):
        writer.writerow([key, "" if value is None else value])
    return buf.getvalue()


def write_report(doc: dict, out_dir: Path, fmt: str = "json") -> Path:
    """Validate and write ``report.json`` or ``report.csv``."""
    doc = to_plain(doc)
    validate(doc)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out_dir / "report.csv"
        path.write_text(flat_csv(doc))
    else:
        path = out_dir / "report.json"
        path.write_text(canonical_json(doc))
    return path


def write_columns(path: Path, header: tuple[str, str], rows: Iterable[tuple]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for a, b in rows:
            writer.writerow([repr(float(a)) if isinstance(a, float) else a,
                             repr(float(b)) if isinstance(b, float) else b])
    return path


def density_svg(grid, density, mean: float, mode: float, title: str,
                width: int = 640, height: int = 400) -> str:
    """Self-contained SVG of one density curve.

    Solid vertical marker at the mean, dashed marker at the mode.
    """
    grid = np.asarray(grid, dtype=float)
    density = np.asarray(density, dtype=float)
    peak = float(density.max()) or 1.0
    visible = np.nonzero(density > 1e-4 * peak)[0]
    lo = max(0.0, float(grid[visible[0]]) - 0.02) if visible.size else 0.0
    hi = min(1.0, float(grid[visible[-1]]) + 0.02) if visible.size else 1.0
    left, right, top, bottom = 60, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - lo) / (hi - lo) * pw

    def sy(y):
        return top + ph - y / (1.05 * peak) * ph

    sel = (grid >= lo) & (grid <= hi)
    points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(grid[sel], density[sel]))
    ticks = []
    for t in np.linspace(lo, hi, 6):
        ticks.append(
            f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 5}" stroke="black"/>'
            f'<text x="{sx(t):.2f}" y="{top + ph + 20}" font-size="12" text-anchor="middle">{t:.3f}</text>'
        )
    esc = title.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" font-size="15" text-anchor="middle">{esc}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        *ticks,
        f'<text x="{left + pw / 2:.1f}" y="{height - 10}" font-size="13" text-anchor="middle">efficacy</text>',
        f'<polyline fill="none" stroke="#1f4e9c" stroke-width="2" points="{points}"/>',
        f'<line class="mean" x1="{sx(mean):.2f}" y1="{top}" x2="{sx(mean):.2f}" y2="{top + ph}" '
        'stroke="#b22222" stroke-width="1.5"/>',
        f'<line class="mode" x1="{sx(mode):.2f}" y1="{top}" x2="{sx(mode):.2f}" y2="{top + ph}" '
        'stroke="#b22222" stroke-width="1.5" stroke-dasharray="6,4"/>',
        "</svg>",
        "",
    ])
