"""Dataset files and report emission.

Adjacency: dense n x n CSV of 0/1, optionally preceded by a header row of
agent labels. Covariates: long CSV with header ``i,j,<name_1>,...`` and one
row per ordered pair, agents numbered from 1. Reports are CSV, JSON or a
plain text table; output bytes depend only on the input.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .grouped import BicGrid, GroupedFit
from .likelihood import RhoProfile
from .model import Dataset, DatasetError, DirectedNetwork, DyadCovariates
from .segmentation import SegmentationResult
from .simulation import TRACKED, McSummary
from .step1 import Step1Fit


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return [(k + 1, row) for k, row in enumerate(csv.reader(fh)) if any(c.strip() for c in row)]


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def read_adjacency(path) -> tuple[np.ndarray, Optional[list]]:
    rows = _read_rows(path)
    if not rows:
        raise DatasetError(f"{path}: empty adjacency file")
    labels = None
    if not all(_is_number(c) for c in rows[0][1]):
        labels = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    n = len(rows)
    g = np.zeros((n, n), dtype=np.int8)
    for r, (line, row) in enumerate(rows):
        if len(row) != n:
            raise DatasetError(f"{path}, line {line}: expected {n} entries, found {len(row)}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell not in ("0", "1"):
                raise DatasetError(f"{path}, line {line}: non-binary entry {cell!r} in column {c + 1}")
            g[r, c] = int(cell)
    if labels is not None and len(labels) != n:
        raise DatasetError(f"{path}: header has {len(labels)} labels for {n} rows")
    diag = np.flatnonzero(np.diag(g))
    if diag.size:
        raise DatasetError(f"{path}: self-loop on the diagonal at row {diag[0] + 1}")
    return g, labels


def read_covariates(path, n: int) -> tuple[np.ndarray, list]:
    rows = _read_rows(path)
    if not rows:
        raise DatasetError(f"{path}: empty covariate file")
    line, header = rows[0]
    header = [h.strip() for h in header]
    if len(header) < 3 or header[:2] != ["i", "j"]:
        raise DatasetError(f"{path}, line {line}: header must start with i,j and name at least one covariate")
    names = header[2:]
    d_z = len(names)
    z = np.zeros((n, n, d_z))
    seen = np.zeros((n, n), dtype=bool)
    for line, row in rows[1:]:
        if len(row) != d_z + 2:
            raise DatasetError(f"{path}, line {line}: expected {d_z + 2} columns, found {len(row)}")
        try:
            i, j = int(row[0]), int(row[1])
            vals = [float(c) for c in row[2:]]
        except ValueError as exc:
            raise DatasetError(f"{path}, line {line}: {exc}") from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise DatasetError(f"{path}, line {line}: agent index out of range 1..{n}")
        if i == j:
            raise DatasetError(f"{path}, line {line}: covariates given for the self-pair ({i}, {i})")
        if seen[i - 1, j - 1]:
            raise DatasetError(f"{path}, line {line}: duplicate pair ({i}, {j})")
        if not all(math.isfinite(v) for v in vals):
            raise DatasetError(f"{path}, line {line}: non-finite covariate value")
        seen[i - 1, j - 1] = True
        z[i - 1, j - 1] = vals
    np.fill_diagonal(seen, True)
    if not seen.all():
        missing = [(int(a) + 1, int(b) + 1) for a, b in np.argwhere(~seen)]
        shown = ", ".join(f"({a},{b})" for a, b in missing[:20])
        more = f" and {len(missing) - 20} more" if len(missing) > 20 else ""
        raise DatasetError(f"{path}: missing ordered pairs {shown}{more}")
    return z, names


def load_dataset(adjacency_path, covariates_path) -> Dataset:
    g, labels = read_adjacency(adjacency_path)
    z, names = read_covariates(covariates_path, g.shape[0])
    return Dataset(DirectedNetwork(g), DyadCovariates(z), agent_labels=labels, covariate_names=names)


def write_dataset(data: Dataset, adjacency_path, covariates_path) -> None:
    n = data.n
    with open(adjacency_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if data.agent_labels is not None:
            w.writerow(data.agent_labels)
        w.writerows(data.network.adjacency.tolist())
    names = list(data.covariate_names or [f"z{k + 1}" for k in range(data.d_z)])
    with open(covariates_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", *names])
        for i in range(n):
            for j in range(n):
                if i != j:
                    w.writerow([i + 1, j + 1, *(repr(float(v)) for v in data.covariates.z[i, j])])


# ---------------------------------------------------------------- reports


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else f"{float(x):.6f}"
    return str(x)


def _json_num(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) or math.isinf(x) else x


def estimates_rows(fit) -> tuple[list, list]:
    header = ["parameter", "estimate", "se", "t_value"]
    if isinstance(fit, GroupedFit):
        return header, [list(r) for r in fit.estimates_table()]
    theta = fit.theta_hat
    rows = [[f"beta_{k + 1}", b, None, None] for k, b in enumerate(theta.beta)]
    rows += [["alpha", theta.alpha, None, None], ["rho", theta.rho, None, None]]
    rows += [[f"A_{k + 1}", v, None, None] for k, v in enumerate(fit.gamma_hat.a)]
    rows += [[f"B_{k + 1}", v, None, None] for k, v in enumerate(fit.gamma_hat.b)]
    return header, rows


def groups_rows(result, labels=None) -> tuple[list, list]:
    if isinstance(result, GroupedFit):
        ma, mb = result.groups.membership_a, result.groups.membership_b
    else:
        ma, mb = result
        ma = ma.memberships if isinstance(ma, SegmentationResult) else np.asarray(ma)
        mb = mb.memberships if isinstance(mb, SegmentationResult) else np.asarray(mb)
    names = labels if labels is not None else [str(k + 1) for k in range(len(ma))]
    return ["agent", "sender_group", "receiver_group"], [[a, int(x), int(y)] for a, x, y in zip(names, ma, mb)]


def mc_rows(summary: McSummary) -> tuple[list, list]:
    header = ["estimator"]
    for p in TRACKED:
        header += [f"{p}_bias", f"{p}_rmse"]
    header += ["failures"]
    rows = []
    for e in summary.estimators:
        row = [e]
        for p in TRACKED:
            row += [summary.bias[e][p], summary.rmse[e][p]]
        rows.append(row + [summary.failures[e]])
    return header, rows


def classification_rows(summary: McSummary) -> tuple[list, list]:
    return ["method", "sender", "receiver"], [[m, *summary.classification[m]] for m in sorted(summary.classification)]


def bic_rows(grid: BicGrid) -> tuple[list, list]:
    header = ["k_a"] + [f"k_b={kb}" for kb in grid.k_b_values]
    return header, [[ka, *grid.table[r]] for r, ka in enumerate(grid.k_a_values)]


def profile_rows(profile: RhoProfile) -> tuple[list, list]:
    return ["rho", "profiled_loglik", "converged", "iterations"], [
        [p.rho, p.profiled_loglik, str(p.converged).lower(), p.iterations] for p in profile.points
    ]


def _table(result) -> tuple[list, list]:
    if isinstance(result, (GroupedFit, Step1Fit)):
        return estimates_rows(result)
    if isinstance(result, McSummary):
        return mc_rows(result)
    if isinstance(result, BicGrid):
        return bic_rows(result)
    if isinstance(result, RhoProfile):
        return profile_rows(result)
    if isinstance(result, (SegmentationResult, tuple)):
        return groups_rows(result)
    raise TypeError(f"no report layout for {type(result).__name__}")


def to_json(result) -> dict:
    if isinstance(result, GroupedFit):
        return {
            "estimates": [
                {"parameter": p, "estimate": _json_num(e), "se": _json_num(s), "t_value": _json_num(t)}
                for p, e, s, t in result.estimates_table()
            ],
            "loglik": _json_num(result.loglik_sum),
            "converged": result.converged,
            "iterations": result.iterations,
            "singular_information": result.singular,
            "boundary": list(result.boundary),
            "membership_a": result.groups.membership_a.tolist(),
            "membership_b": result.groups.membership_b.tolist(),
        }
    if isinstance(result, Step1Fit):
        return {
            "beta": [float(b) for b in result.theta_hat.beta],
            "alpha": float(result.theta_hat.alpha),
            "rho": float(result.theta_hat.rho),
            "A": result.gamma_hat.a.tolist(),
            "B": result.gamma_hat.b.tolist(),
            "loglik": _json_num(result.loglik_sum),
            "converged": result.converged,
            "iterations": result.iterations,
            "final_gradient_norm": _json_num(result.final_gradient_norm),
            "separated": [{"agent": a, "side": s} for a, s in result.separated],
            "boundary": list(result.boundary),
        }
    if isinstance(result, McSummary):
        return {
            "n": result.config.n,
            "r": result.config.r,
            "seed": result.config.seed,
            "reps": result.reps,
            "bias": {e: {p: _json_num(v) for p, v in d.items()} for e, d in result.bias.items()},
            "rmse": {e: {p: _json_num(v) for p, v in d.items()} for e, d in result.rmse.items()},
            "classification": {m: {"sender": s, "receiver": r} for m, (s, r) in result.classification.items()},
            "failures": result.failures,
        }
    if isinstance(result, BicGrid):
        return {
            "k_a": result.k_a_values,
            "k_b": result.k_b_values,
            "bic": [[_json_num(v) for v in row] for row in result.table],
            "best": list(result.best),
        }
    if isinstance(result, RhoProfile):
        return {
            "points": [
                {"rho": p.rho, "profiled_loglik": _json_num(p.profiled_loglik), "converged": p.converged}
                for p in result.points
            ],
            "argmax": result.argmax,
            "unimodal": result.unimodal,
        }
    header, rows = _table(result)
    return {"rows": [dict(zip(header, [_json_num(c) if isinstance(c, float) else c for c in r])) for r in rows]}


def render(result, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps(to_json(result), indent=2, sort_keys=True) + "\n"
    header, rows = _table(result)
    cells = [[_fmt(c) for c in r] for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(cells)
        return buf.getvalue()
    if fmt == "text":
        widths = [max(len(h), *(len(r[k]) for r in cells)) if cells else len(h) for k, h in enumerate(header)]
        lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
        lines.append("  ".join("-" * w for w in widths))
        lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}; use csv, json or text")


def emit_report(result, fmt: str = "csv", path=None) -> str:
    """Render ``result`` and write it to ``path`` if given; returns the text."""
    text = render(result, fmt)
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc
    return text
