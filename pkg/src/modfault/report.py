"""HTML report and key=value summary of an analysis."""

from __future__ import annotations

import html
from dataclasses import dataclass
from typing import Optional

from .analyzer import AnalysisSummary
from .faults import enumerate_sites
from .oracle import ValidationReport
from .pretty import show_statement, show_cond, show_term
from .terms import Verdict

SUMMARY_FIELDS = (
    "plans_sites", "plans", "attacks", "attacks_randomizing", "attacks_zeroing",
    "attacks_mixed", "detected", "harmless", "errors",
)


@dataclass
class Report:
    source: str
    summary: AnalysisSummary
    validation: Optional[ValidationReport] = None


def summary_counts(s: AnalysisSummary) -> dict[str, int]:
    return {
        "plans_sites": s.sites,
        "plans": s.total,
        "attacks": s.count(Verdict.ATTACK),
        "attacks_randomizing": s.count(Verdict.ATTACK, "randomizing"),
        "attacks_zeroing": s.count(Verdict.ATTACK, "zeroing"),
        "attacks_mixed": s.count(Verdict.ATTACK, "mixed"),
        "detected": s.count(Verdict.DETECTED),
        "harmless": s.count(Verdict.HARMLESS),
        "errors": s.count(Verdict.ERROR),
    }


def render_summary(r: Report) -> str:
    lines = [f"source={r.source}"]
    for k, v in r.summary.params.items():
        lines.append(f"{k}={str(v).lower() if isinstance(v, bool) else v}")
    counts = summary_counts(r.summary)
    lines.extend(f"{k}={counts[k]}" for k in SUMMARY_FIELDS)
    v = r.validation
    if v is not None:
        lines.append(f"oracle_attacks_below_threshold={len(v.failures)}")
        lines.append(f"oracle_false_passes={v.false_passes}")
    return "\n".join(lines) + "\n"


_CSS = {
    "body": "font-family:sans-serif;margin:2em;color:#222",
    "table": "border-collapse:collapse;margin:1em 0",
    "cell": "border:1px solid #bbb;padding:2px 8px;text-align:left;vertical-align:top",
    "code": "font-family:monospace;white-space:pre-wrap",
    Verdict.ATTACK: "background:#f8c8c8;font-weight:bold",
    Verdict.DETECTED: "background:#d8f0d8",
    Verdict.HARMLESS: "",
    Verdict.ERROR: "background:#f0e0a0",
}


def _e(x) -> str:
    return html.escape(str(x), quote=True)


def _table(head: list[str], rows: list[tuple[str, list[str]]]) -> list[str]:
    c = _CSS["cell"]
    out = [f'<table style="{_CSS["table"]}">',
           "<tr>" + "".join(f'<th style="{c}">{_e(h)}</th>' for h in head) + "</tr>"]
    for style, cells in rows:
        attr = f' style="{style}"' if style else ""
        out.append(f"<tr{attr}>" + "".join(f'<td style="{c}">{x}</td>' for x in cells) + "</tr>")
    out.append("</table>")
    return out


def render_html(r: Report) -> str:
    s = r.summary
    code = _CSS["code"]
    out = ["<!DOCTYPE html>", '<html><head><meta charset="utf-8">',
           f"<title>Fault analysis of {_e(r.source)}</title></head>",
           f'<body style="{_CSS["body"]}">',
           f"<h1>Fault analysis of {_e(r.source)}</h1>"]

    out.append("<h2>Parameters</h2>")
    out += _table(["parameter", "value"], [("", [_e(k), _e(v)]) for k, v in s.params.items()])
    for w in s.warnings:
        out.append(f"<p><b>warning:</b> {_e(w)}</p>")

    out.append("<h2>Summary</h2>")
    counts = summary_counts(s)
    out += _table(["count", "value"], [("", [_e(k), _e(counts[k])]) for k in SUMMARY_FIELDS])

    out.append("<h2>Program</h2>")
    rows = [("", [_e(i), f'<span style="{code}">{_e(show_statement(st))}</span>'])
            for i, st in enumerate(s.program.statements)]
    rows.append(("", ["%%", f'<span style="{code}">{_e(show_cond(s.program.attack))}</span>']))
    out += _table(["statement", "source"], rows)
    genuine = show_term(s.genuine) if s.genuine is not None else ""
    out.append(f'<p>Genuine result: <span style="{code}">{_e(genuine)}</span></p>')

    out.append("<h2>Fault sites</h2>")
    catalog = enumerate_sites(s.program, bool(s.params.get("transient")),
                              bool(s.params.get("protect_conditions")))
    out += _table(["site", "timing", "role", "target"],
                  [("", [_e(x.id), _e(x.timing.value), _e(x.role),
                         f'<span style="{code}">{_e(x.label)}</span>'])
                   for x in catalog.sites(True)])

    out.append("<h2>Fault plans</h2>")
    rows = []
    for o in s.outcomes:
        witness = show_term(o.witness) if o.witness is not None else ""
        branch = ", ".join(f"{k}={'taken' if v else 'skipped'}" for k, v in (o.branch or ()))
        detail = o.message or branch
        rows.append((_CSS[o.verdict], [
            _e(o.plan), _e(o.verdict.value), _e(o.check or ""),
            f'<span style="{code}">{_e(witness)}</span>', _e(detail)]))
    out += _table(["plan", "verdict", "check", "faulted result", "notes"], rows)

    out.append("<h2>Assumptions</h2>")
    facts = sorted(str(f) for f in s.facts)
    if facts:
        out.append("<ul>" + "".join(f'<li style="{code}">{_e(f)}</li>' for f in facts) + "</ul>")
    else:
        out.append("<p>none</p>")

    out.append("<h2>Numeric validation</h2>")
    v = r.validation
    if v is None:
        out.append("<p>not run</p>")
    else:
        out.append(f"<p>threshold {v.threshold:.0%}; attacks below threshold: "
                   f"{len(v.failures)}; extractions on non-attack samples: {v.false_passes}</p>")
        out += _table(["plan", "verdict", "trials", "extractions", "rate", "aborted",
                       "unchanged", "resampled"],
                      [(_CSS[x.verdict] if x.verdict == Verdict.ATTACK else "",
                        [_e(x.plan), _e(x.verdict.value), _e(x.trials), _e(x.extractions),
                         f"{x.rate:.2f}", _e(x.aborted), _e(x.unchanged), _e(x.skipped)])
                       for x in v.rows])
    out.append("</body></html>")
    return "\n".join(out) + "\n"
