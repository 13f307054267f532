"""Text tables, JSON documents and static SVG figures."""

from __future__ import annotations

import json
import math
from typing import Sequence
from xml.sax.saxutils import escape

from .cues import CueStats, RocPoint, roc_json, roc_points
from .evaluation import Comparison, RefereeAgreement, agreement_summary
from .fft import FFTree, describe_tree
from .logistic import INTERCEPT, LogisticModel
from .metrics import PerformanceRecord, Split, format_percent
from .schema import CueSpec, Dataset, prevalence

SCHEMA_VERSION = 1


def dumps(doc) -> str:
    """Stable JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(x: float, nd: int = 2) -> str:
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{nd}f}"


# ---------------------------------------------------------------------------
# performance table


def performance_rows(records: Sequence[PerformanceRecord | dict]) -> list[tuple[str, dict, dict]]:
    """Pair training and testing records per rule, preserving row order."""
    rows: dict[str, dict] = {}
    for r in records:
        d = r.to_dict() if isinstance(r, PerformanceRecord) else r
        rows.setdefault(d["rule"], {})[d["split"]] = d
    return [(label, v.get("training"), v.get("testing")) for label, v in rows.items()]


def performance_table(records: Sequence[PerformanceRecord | dict]) -> str:
    header_cells = ("#Frug", "%Frug", "Acc", "Sens", "Spec")
    lw = 24

    def cells(d):
        if d is None:
            return "".join(f"{'':>7}" for _ in header_cells)
        frug = f"{d['frug_abs']:.0f}" if float(d["frug_abs"]).is_integer() else f"{d['frug_abs']:.1f}"
        vals = (frug, format_percent(d["frug_rel"]), _fmt(d["acc"]), _fmt(d["sens"]), _fmt(d["spec"]))
        return "".join(f"{v:>7}" for v in vals)

    lines = [
        f"{'Decision rule':<{lw}}{'Training set':^35}   {'Testing set':^35}",
        f"{'':<{lw}}{''.join(f'{h:>7}' for h in header_cells)}   {''.join(f'{h:>7}' for h in header_cells)}",
    ]
    section = None
    for label, tr, te in performance_rows(records):
        kind = "Fast-and-frugal trees" if "(" not in label and label != "All cues" else "Logistic regression"
        if kind != section:
            lines.append(kind)
            section = kind
        lines.append(f"  {label:<{lw - 2}}{cells(tr)}   {cells(te)}")
    lines.append("Note: #Frug = absolute frugality; %Frug = relative frugality; "
                 "Acc = accuracy; Sens = sensitivity; Spec = specificity.")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# regression table


def _aligned(rows: list[tuple[str, ...]]) -> list[str]:
    """First column left-aligned, the rest right-aligned, widths from content."""
    widths = [max(len(r[j]) for r in rows) for j in range(len(rows[0]))]
    return [
        "  ".join(c.ljust(w) if j == 0 else c.rjust(w) for j, (c, w) in enumerate(zip(r, widths))).rstrip()
        for r in rows
    ]


def regression_table(model: LogisticModel, schema: Sequence[CueSpec] | None = None) -> str:
    names = {c.id: c.name for c in schema} if schema else {}
    d = model.diagnostics
    rows = [("Variable", "Estimate", "SE", "LL", "UL", "p", "VIF")]
    for col in list(model.predictors) + [INTERCEPT]:
        lo, hi = d.ci95.get(col, (math.nan, math.nan))
        p = d.p_values.get(col, math.nan)
        p_txt = "NA" if math.isnan(p) else ("<.01" if p < 0.01 else f"{p:.2f}".lstrip("0"))
        v = d.vif.get(col)
        v_txt = "" if v is None else ("inf" if math.isinf(v) else f"{v:.1f}")
        label = "Constant" if col == INTERCEPT else names.get(col, col)
        rows.append((label, _fmt(model.coef(col)), _fmt(d.se.get(col, math.nan)), _fmt(lo), _fmt(hi), p_txt, v_txt))
    lines = _aligned(rows)
    pr = d.pseudo_r2
    lines.append(
        f"AIC = {d.aic:.2f}; chi2({d.df}, N = {len(model.fitted)}) = {d.lr_chi_square:.2f}, "
        f"p {'< .001' if d.lr_p_value < 0.001 else '= ' + format(d.lr_p_value, '.3f')}; "
        f"pseudo-R2: McKelvey-Zavoina = {pr['mckelvey_zavoina']:.2f}, "
        f"Veall-Zimmermann = {pr['veall_zimmermann']:.2f}, McFadden = {pr['mcfadden']:.2f}"
    )
    lines.append(f"Classification cutoff = {model.cutoff:.4f}")
    if d.separated:
        lines.append("Warning: outcome separated by predictors; inference suppressed.")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# cues


def cue_table(stats: Sequence[CueStats], schema: Sequence[CueSpec]) -> str:
    names = {c.id: c.name for c in schema}
    lines = [f"{'Cue':<30}{'Rule':<16}{'Validity':>9}{'Sens':>7}{'Spec':>7}"]
    for s in stats:
        r = s.rule
        rule = f"{r.direction.value} {r.threshold} -> {'O' if r.positive_class_when_true else 'N'}"
        flag = "  (uninformative)" if s.uninformative else ""
        lines.append(f"{names[s.cue_id]:<30}{rule:<16}{_fmt(s.validity):>9}{_fmt(s.sens):>7}{_fmt(s.spec):>7}{flag}")
    return "\n".join(lines) + "\n"


def cue_stats_json(stats: Sequence[CueStats]) -> list[dict]:
    def num(x):
        return None if math.isnan(x) else x

    return [
        {
            "cue_id": s.cue_id,
            "rule": {
                "direction": s.rule.direction.value,
                "threshold": s.rule.threshold,
                "class_when_true": s.rule.positive_class_when_true.label,
            },
            "validity": s.validity,
            "accuracy": s.accuracy,
            "sens": num(s.sens),
            "spec": num(s.spec),
            "uninformative": s.uninformative,
        }
        for s in stats
    ]


# ---------------------------------------------------------------------------
# full analysis document


def analysis_document(
    dataset: Dataset,
    comp: Comparison,
    agreements: Sequence[RefereeAgreement],
    goal: str,
    depth_max: int,
    thresholds: str,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "data": {
            "n_records": len(dataset),
            "n_cues": len(dataset.schema),
            "prevalence": float(prevalence(dataset)),
        },
        "settings": {"goal": goal, "depth_max": depth_max, "thresholds": thresholds},
        "split": comp.plan.to_dict(),
        "cues": cue_stats_json(comp.cue_stats),
        "trees": [
            {**t.to_dict(), "description": describe_tree(t, dataset.schema)} for t in comp.trees
        ],
        "regressions": {
            "All cues": comp.full_model.to_dict(),
            **{label: m.to_dict() for label, m in comp.reduced.items()},
        },
        "performance": [r.to_dict() for r in comp.records],
        "referees": [a.to_dict() for a in agreements],
        "referee_summary": agreement_summary(agreements),
    }


def analysis_text(doc: dict, dataset: Dataset | None = None) -> str:
    out = [performance_table(doc["performance"])]
    out.append("Trees\n")
    for t in doc["trees"]:
        out.append(f"[{t['depth']} cue{'s' if t['depth'] > 1 else ''}]\n{t['description']}\n")
    summ = doc.get("referee_summary", {})
    if summ:
        out.append("Referee agreement (>= 0.80 of judgments reproduced)")
        for split in (sp.value for sp in Split if sp.value in summ):
            s = summ[split]
            out.append(
                f"  {split}: {s['referees']} referees; tree {s['tree_at_or_above']}, "
                f"regression {s['regression_at_or_above']}"
            )
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# SVG


def _svg(width: int, height: int, body: list[str]) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )


def roc_svg(points: Sequence[RocPoint], size: int = 360) -> str:
    m = 40
    span = size - 2 * m
    X = lambda v: m + v * span  # noqa: E731
    Y = lambda v: size - m - v * span  # noqa: E731
    body = [
        f'<rect x="{m}" y="{m}" width="{span}" height="{span}" fill="none" stroke="#333"/>',
        f'<line x1="{X(0)}" y1="{Y(0)}" x2="{X(1)}" y2="{Y(1)}" stroke="#aaa" stroke-dasharray="4 3"/>',
        f'<text x="{size / 2}" y="{size - 8}" text-anchor="middle">1 - specificity</text>',
        f'<text x="12" y="{size / 2}" text-anchor="middle" transform="rotate(-90 12 {size / 2})">sensitivity</text>',
    ]
    for p in points:
        body.append(f'<circle cx="{X(p.x):.2f}" cy="{Y(p.y):.2f}" r="3.5" fill="#1f5fa8"/>')
        body.append(f'<text x="{X(p.x) + 5:.2f}" y="{Y(p.y) - 4:.2f}">{escape(p.label)}</text>')
    return _svg(size, size, body)


def tree_svg(tree: FFTree, schema: Sequence[CueSpec]) -> str:
    names = {c.id: c.name for c in schema}
    w, row = 420, 70
    h = row * tree.depth + 40
    cx = w / 2
    body = []
    for i, rule in enumerate(tree.levels):
        y = 20 + i * row
        cond = f"{names[rule.cue_id]} {rule.direction.value} {rule.threshold}"
        body.append(f'<rect x="{cx - 90}" y="{y}" width="180" height="26" rx="4" fill="#eef3fa" stroke="#1f5fa8"/>')
        body.append(f'<text x="{cx}" y="{y + 17}" text-anchor="middle">{escape(cond)}</text>')
        pos = rule.positive_class_when_true
        exits = [(pos, True)] if i < tree.depth - 1 else [(pos, True), (pos.other(), False)]
        for cls, when in exits:
            # "yes" branch to the side of its class: outstanding right, not outstanding left.
            side = 1 if cls else -1
            ex = cx + side * 150
            body.append(f'<line x1="{cx + side * 90}" y1="{y + 13}" x2="{ex - side * 40}" y2="{y + 13}" stroke="#333"/>')
            body.append(f'<text x="{ex}" y="{y + 17}" text-anchor="middle">{escape(cls.label)}</text>')
            body.append(
                f'<text x="{cx + side * 110}" y="{y + 8}" text-anchor="middle" fill="#666">'
                f'{"yes" if when else "no"}</text>'
            )
        if i < tree.depth - 1:
            body.append(f'<line x1="{cx}" y1="{y + 26}" x2="{cx}" y2="{y + row}" stroke="#333"/>')
            body.append(f'<text x="{cx + 6}" y="{y + 45}" fill="#666">no</text>')
    return _svg(w, h, body)


def agreement_svg(agreements: Sequence[RefereeAgreement], split: Split = Split.TRAINING) -> str:
    rows = [a for a in agreements if a.split is split]
    bar, gap, m = 8, 6, 40
    w = m * 2 + len(rows) * (2 * bar + gap)
    h = 240
    span = h - 2 * m
    body = [
        f'<text x="{m}" y="20">{escape(split.value)}: share of judgments reproduced '
        f'(tree = blue, regression = orange)</text>',
        f'<line x1="{m}" y1="{h - m}" x2="{w - m}" y2="{h - m}" stroke="#333"/>',
        f'<line x1="{m}" y1="{h - m - 0.8 * span:.1f}" x2="{w - m}" y2="{h - m - 0.8 * span:.1f}" '
        f'stroke="#aaa" stroke-dasharray="4 3"/>',
    ]
    for i, a in enumerate(rows):
        x = m + i * (2 * bar + gap)
        for j, (v, color) in enumerate(
            ((a.proportion_correct_tree, "#1f5fa8"), (a.proportion_correct_regression, "#e07b22"))
        ):
            bh = v * span
            body.append(f'<rect x="{x + j * bar}" y="{h - m - bh:.1f}" width="{bar}" height="{bh:.1f}" fill="{color}"/>')
        body.append(
            f'<text x="{x + bar}" y="{h - m + 12}" text-anchor="end" font-size="8" '
            f'transform="rotate(-60 {x + bar} {h - m + 12})">{escape(a.referee_id)}</text>'
        )
    return _svg(max(w, 200), h, body)


def roc_document(stats: Sequence[CueStats]) -> dict:
    return {"schema_version": SCHEMA_VERSION, "points": roc_json(roc_points(stats))}
