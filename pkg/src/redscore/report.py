"""Artifact serialization and table rendering.

All artifacts are JSON with sorted keys and embed the producing config
and tool version, so identical runs produce identical bytes. Raw files
keep correlations in [-1, 1]; rendered tables show them x100 with two
decimals and scores with four, matching the reporting convention.
"""

import json

from . import __version__

TOOL = "redscore"


def pct(value):
    return f"{value * 100:.2f}"


def score4(value):
    return f"{value:.4f}"


def weights_dict(w):
    a, b, g, lam = w.as_floats()
    return {"alpha": a, "beta": b, "gamma": g, "lambda": lam, "numerators": list(w.numerators())}


def tau_result_dict(r):
    return {
        "tau": r.tau,
        "variant": r.variant,
        "n": r.n,
        "concordant": r.concordant,
        "discordant": r.discordant,
        "ties_x": r.ties_x,
        "ties_y": r.ties_y,
        "m": r.m,
    }


def bootstrap_dict(s):
    return {
        "runs": s.runs,
        "mean": s.mean,
        "std_dev": s.std_dev,
        "ci_low": s.ci_low,
        "ci_high": s.ci_high,
        "seed": s.seed,
    }


def calibration_dict(result):
    return {
        "best": weights_dict(result.best),
        "best_tau": result.best_tau,
        "p_value": result.p_value,
        "significant": result.significant,
        "sensitivity": [
            {"weights": weights_dict(e.weights), "tau": e.tau, "delta": e.delta}
            for e in result.sensitivity
        ],
        "max_degradation": result.max_degradation,
        "grid_trace": [
            {"weights": weights_dict(w), "tau": t} for w, t in result.grid_trace
        ],
    }


def ablation_rows_dict(rows):
    return [
        {
            "combination": list(r.combination),
            "weights": weights_dict(r.weights),
            "tau": r.tau,
            "mean_score": r.mean_score,
            "std_dev": r.std_dev,
        }
        for r in rows
    ]


def render_table(headers, rows):
    """Align columns on width; returns the table as a string."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(headers))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def calibration_table(result):
    headers = ["alpha", "beta", "gamma", "lambda", "tau", "p"]
    a, b, g, lam = result.best.as_floats()
    rows = [[f"{a:.2f}", f"{b:.2f}", f"{g:.2f}", f"{lam:.1f}", pct(result.best_tau),
             f"{result.p_value:.4g}"]]
    return render_table(headers, rows)


def sensitivity_table(result):
    headers = ["alpha", "beta", "gamma", "lambda", "tau", "delta"]
    rows = []
    for e in result.sensitivity:
        a, b, g, lam = e.weights.as_floats()
        rows.append(
            [f"{a:.2f}", f"{b:.2f}", f"{g:.2f}", f"{lam:.1f}", pct(e.tau), pct(e.delta)]
        )
    return render_table(headers, rows)


def bootstrap_line(summary):
    return (
        f"{pct(summary.mean)} ± {pct(summary.std_dev)}, "
        f"CI [{pct(summary.ci_low)}, {pct(summary.ci_high)}]"
    )


def ablation_table(rows):
    headers = ["combination", "alpha", "beta", "gamma", "lambda", "tau", "std_dev", "mean"]
    body = []
    for r in rows:
        a, b, g, lam = r.weights.as_floats()
        body.append([
            "+".join(r.combination),
            f"{a:.2f}", f"{b:.2f}", f"{g:.2f}", f"{lam:.1f}",
            pct(r.tau),
            pct(r.std_dev) if r.std_dev is not None else "-",
            score4(r.mean_score),
        ])
    return render_table(headers, body)


def strategy_table(rows_by_label):
    headers = ["strategy", "alpha", "beta", "gamma", "lambda", "tau", "std_dev", "mean"]
    body = []
    for label in ("hybrid", "additive", "multiplicative"):
        r = rows_by_label[label]
        a, b, g, lam = r.weights.as_floats()
        body.append([
            label,
            f"{a:.2f}", f"{b:.2f}", f"{g:.2f}", f"{lam:.1f}",
            pct(r.tau),
            pct(r.std_dev) if r.std_dev is not None else "-",
            score4(r.mean_score),
        ])
    return render_table(headers, body)


def artifact(kind, config, results):
    return {"tool": TOOL, "version": __version__, "kind": kind,
            "config": config, "results": results}


def write_artifact(path, kind, config, results):
    payload = artifact(kind, config, results)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def load_artifact(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    for field in ("tool", "kind", "results"):
        if field not in payload:
            raise ValueError(f"{path}: not a {TOOL} artifact (missing {field!r})")
    return payload


def _weights_cells(w):
    return [f"{w['alpha']:.2f}", f"{w['beta']:.2f}", f"{w['gamma']:.2f}", f"{w['lambda']:.1f}"]


def render_artifact(payload):
    """Render a loaded artifact as an aligned plain-text table."""
    kind = payload["kind"]
    results = payload["results"]
    if kind == "calibration":
        headers = ["alpha", "beta", "gamma", "lambda", "tau", "p"]
        best = results["best"]
        rows = [_weights_cells(best) + [pct(results["best_tau"]), f"{results['p_value']:.4g}"]]
        return render_table(headers, rows)
    if kind == "bootstrap":
        return (
            f"{pct(results['mean'])} ± {pct(results['std_dev'])}, "
            f"CI [{pct(results['ci_low'])}, {pct(results['ci_high'])}]\n"
        )
    if kind in ("ablation-sweep", "ablation-strategy"):
        headers = ["combination", "alpha", "beta", "gamma", "lambda", "tau", "std_dev", "mean"]
        if kind == "ablation-strategy":
            headers[0] = "strategy"
        rows = []
        for r in results["rows"]:
            label = r.get("strategy") or "+".join(r["combination"])
            rows.append(
                [label] + _weights_cells(r["weights"]) + [
                    pct(r["tau"]),
                    pct(r["std_dev"]) if r.get("std_dev") is not None else "-",
                    score4(r["mean_score"]),
                ]
            )
        return render_table(headers, rows)
    if kind == "scores":
        headers = ["sample_id"] + [f"z_{c}" for c in results["channels"]] + ["rs"]
        rows = [
            [line["sample_id"]] + [score4(line[f"z_{c}"]) for c in results["channels"]]
            + [score4(line["rs"])]
            for line in results["per_sample"]
        ]
        return render_table(headers, rows)
    raise ValueError(f"cannot render artifact kind {kind!r}")
