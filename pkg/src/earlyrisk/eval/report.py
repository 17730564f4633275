"""Evaluation report: metrics, fairness, transitions; JSON and Markdown."""
from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from ..errors import DataError
from ..seal import EVALUATOR_KEY, Lineage, SealedLabels
from .fairness import FAIRNESS_METRICS, fairness_records
from .metrics import METRIC_NAMES, classification_metrics
from .transitions import CATEGORIES, transition_breakdown

REPORT_VERSION = 1


def _num(v):
    if v is None:
        return None
    v = float(v)
    return None if math.isnan(v) else v


def build_report(y_true, y_pred, prob_low=None, traits=None, prior=None, approach="", cohort="",
                 leakage=(), importance_path=None, ratio_pair="tpr_fnr") -> dict:
    """Assemble the full evaluation record for one set of predictions."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    m = classification_metrics(y_true, y_pred, prob_low)
    recs = fairness_records(y_true, y_pred, traits or {}, ratio_pair)
    trans = None
    if prior is not None:
        trans = transition_breakdown(np.asarray(prior), y_true, y_pred).to_dict()
    return {
        "format_version": REPORT_VERSION,
        "approach": approach,
        "cohort": cohort,
        "n_participants": int(len(y_true)),
        "metrics": {k: _num(m[k]) for k in METRIC_NAMES},
        "fairness": [r.to_dict() for r in recs],
        "fairness_ratio_convention": ratio_pair,
        "all_fairness_reasonable": all(r.reasonable for r in recs),
        "transitions": trans,
        "importance_table": importance_path,
        "leakage_flags": list(leakage),
    }


def generalizability_report(pred, prob_low, sealed: SealedLabels, lineage: Lineage, traits=None,
                            prior=None, approach="", leakage=()) -> dict:
    """Score predictions for an unseen cohort; the only place its labels are unsealed."""
    lineage.check_can_score(sealed.cohort)
    labels = sealed.unseal(EVALUATOR_KEY, purpose=f"generalizability:{approach}")
    if len(labels) != len(pred):
        raise DataError("prediction count differs from the sealed cohort")
    return build_report(labels.values, pred, prob_low, traits, prior, approach, sealed.cohort, leakage)


def report_schema() -> dict:
    return json.loads(resources.files("earlyrisk").joinpath("schemas/report.schema.json").read_text())


def validate_report(report: dict):
    import jsonschema
    jsonschema.validate(report, report_schema())


def _fmt(v, nd=3):
    if v is None:
        return "n/a"
    if isinstance(v, str):
        return v
    return f"{v:.{nd}f}"


def summary_markdown(report: dict) -> str:
    lines = [f"# Evaluation: {report['approach'] or 'model'} on {report['cohort'] or 'cohort'}", ""]
    lines.append(f"Participants: {report['n_participants']}")
    lines.append("")
    lines.append("| " + " | ".join(METRIC_NAMES) + " |")
    lines.append("|" + "---|" * len(METRIC_NAMES))
    lines.append("| " + " | ".join(_fmt(report["metrics"][k]) for k in METRIC_NAMES) + " |")
    lines.append("")
    if report["fairness"]:
        lines.append("## Fairness (ratio = unprotected / protected; **bold** = within the reasonable range)")
        lines.append("")
        lines.append("| trait | " + " | ".join(f"{m} diff | {m} ratio" for m in FAIRNESS_METRICS) + " |")
        lines.append("|---|" + "---|---|" * len(FAIRNESS_METRICS))
        by = {(r["trait"], r["metric"]): r for r in report["fairness"]}
        for t in sorted({r["trait"] for r in report["fairness"]}):
            cells = []
            for m in FAIRNESS_METRICS:
                r = by[(t, m)]
                if r["reason"]:
                    cells += [f"undefined ({r['reason']})", ""]
                    continue
                d, q = _fmt(r["difference"]), _fmt(r["ratio"])
                if r["reasonable"]:
                    d, q = f"**{d}**", f"**{q}**"
                cells += [d, q]
            lines.append(f"| {t} | " + " | ".join(cells) + " |")
        lines.append("")
    if report.get("transitions"):
        tr = report["transitions"]
        lines.append("## Accuracy by performance transition")
        lines.append("")
        lines.append("| category | n | accuracy |")
        lines.append("|---|---|---|")
        for c in CATEGORIES:
            lines.append(f"| {c} | {tr[c]['n']} | {_fmt(tr[c]['accuracy'])} |")
        lines.append(f"| unclassified | {tr['unclassified']} | |")
        lines.append("")
    if report["leakage_flags"]:
        lines.append("## Leakage flags")
        lines.append("")
        lines.extend(f"- {f}" for f in report["leakage_flags"])
        lines.append("")
    return "\n".join(lines)
