"""Result bundles and their CSV / JSON-tree export.

Output is deterministic: rows keep insertion order, floats are written with
``repr`` (shortest round-trip form), files are UTF-8 with ``\\n`` line ends.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ResultBundle", "loss_curve", "export_results", "FORMATS"]

FORMATS = ("csv", "tree")

REPORT_COLUMNS = [
    "portfolio", "level", "M", "expected_loss", "expected_loss_fit", "expected_loss_se",
    "zero_prob", "zero_prob_fit", "var", "var_fit", "var_se", "cvar", "cvar_fit", "cvar_se", "n_components",
]
RANKING_COLUMNS = ["rank", "portfolio", "expected_loss", "cost", "expected_utility",
                   "expected_loss_se", "utility_se", "certainty_equivalent"]
CURVE_COLUMNS = ["portfolio", "loss", "empirical_cdf", "fitted_cdf"]
TARGETING_COLUMNS = ["attacker", "portfolio", "kind", "target", "value"]
BLOCK_COLUMNS = ["portfolio", "block", "frequency"]
SOURCE_COLUMNS = ["portfolio", "source", "expected_loss"]
META_COLUMNS = ["key", "value"]


@dataclass
class ResultBundle:
    reports: list = field(default_factory=list)       # RiskReport.as_dict() entries
    ranking: list = field(default_factory=list)       # PortfolioEvaluation.as_dict() entries, best first
    loss_curves: dict = field(default_factory=dict)   # portfolio -> {"loss": [...], "empirical_cdf": [...], "fitted_cdf": [...]}
    targeting: list = field(default_factory=list)     # {"attacker", "portfolio", "targets", "tau", "gamma"}
    metadata: dict = field(default_factory=dict)


def loss_curve(losses, model=None):
    """Sorted losses with their empirical and (optionally) fitted CDF values."""
    x = np.sort(np.asarray(losses, dtype=float))
    emp = np.arange(1, x.size + 1) / x.size
    fit = model.cdf(x) if model is not None else np.full(x.size, np.nan)
    return {"loss": x.tolist(), "empirical_cdf": emp.tolist(), "fitted_cdf": np.asarray(fit).tolist()}


def targeting_entry(attacker_id, portfolio_key, est):
    return {
        "attacker": attacker_id,
        "portfolio": portfolio_key,
        "targets": [f"{s}:{a}" if a else s for s, a in est.targets],
        "tau": [float(t) for t in est.tau],
        "actions": list(est.action_labels),
        "action_freq": [float(f) for f in est.action_freq],
        "gamma": {k: [float(g) for g in v] for k, v in est.gamma.items()},
        "n_draws": int(est.n_draws),
    }


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def _csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def _report_rows(bundle):
    for r in bundle.reports:
        row = {k: r.get(k) for k in ("portfolio", "level", "M", "expected_loss_se", "var_se", "cvar_se",
                                     "n_components")}
        for k in ("expected_loss", "zero_prob", "var", "cvar"):
            row[k], row[f"{k}_fit"] = r[k][0], r[k][1]
        yield row


def _csv_files(bundle):
    files = {
        "report.csv": _csv_text(REPORT_COLUMNS, _report_rows(bundle)),
        "ranking.csv": _csv_text(RANKING_COLUMNS, ({"rank": i, **e} for i, e in enumerate(bundle.ranking, 1))),
        "loss_curve.csv": _csv_text(CURVE_COLUMNS, (
            {"portfolio": p, "loss": l, "empirical_cdf": e, "fitted_cdf": f}
            for p, c in bundle.loss_curves.items()
            for l, e, f in zip(c["loss"], c["empirical_cdf"], c["fitted_cdf"]))),
        "block_frequencies.csv": _csv_text(BLOCK_COLUMNS, (
            {"portfolio": r["portfolio"], "block": b, "frequency": f}
            for r in bundle.reports for b, f in r.get("block_frequencies", {}).items())),
        "loss_by_source.csv": _csv_text(SOURCE_COLUMNS, (
            {"portfolio": r["portfolio"], "source": s, "expected_loss": v}
            for r in bundle.reports for s, v in r.get("by_source", {}).items())),
        "targeting.csv": _csv_text(TARGETING_COLUMNS, _targeting_rows(bundle)),
        "metadata.csv": _csv_text(META_COLUMNS, ({"key": k, "value": v} for k, v in bundle.metadata.items())),
    }
    return files


def _targeting_rows(bundle):
    for t in bundle.targeting:
        base = {"attacker": t["attacker"], "portfolio": t["portfolio"]}
        for target, tau in zip(t["targets"], t["tau"]):
            yield {**base, "kind": "tau", "target": target, "value": tau}
        for label, f in zip(t.get("actions", []), t.get("action_freq", [])):
            yield {**base, "kind": "action", "target": label, "value": f}
        for attack, gam in t["gamma"].items():
            for i, g in enumerate(gam):
                yield {**base, "kind": "gamma", "target": f"{attack}[{i}]", "value": g}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def export_results(bundle: ResultBundle, fmt, path):
    """Write the bundle under directory ``path``; returns the written file paths."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r} (choose from {', '.join(FORMATS)})")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            files = _csv_files(bundle)
        else:
            text = json.dumps(_jsonable(asdict(bundle)), indent=2, ensure_ascii=False, allow_nan=False)
            files = {"bundle.json": text + "\n"}
        written = []
        for name, text in files.items():
            p = out / name
            with open(p, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            written.append(p)
    except OSError as exc:
        raise OSError(f"cannot write results to {exc.filename or out}: {exc.strerror or exc}") from exc
    return written
