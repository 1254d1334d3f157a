"""Artifact writers shared by the CLI: headered CSV, summary JSON, figures.

Every file starts with the tool version, a canonical JSON echo of the full
run configuration, and the master seed, so any artifact can be reproduced
from its own header. Nothing time-dependent is written; rerunning with the
same seed yields byte-identical delimited output.
"""

from __future__ import annotations

import json
import os

from . import __version__


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def header_lines(config_dict: dict, seed) -> list:
    seed_txt = "-" if seed is None else str(int(seed))
    return [
        f"# toricbath {__version__}",
        f"# config {canonical_json(config_dict)}",
        f"# seed {seed_txt}",
    ]


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: str, config_dict: dict, seed, columns: dict) -> str:
    """columns: ordered name -> sequence; all sequences equal length."""
    names = list(columns)
    lengths = {len(columns[n]) for n in names}
    if len(lengths) > 1:
        raise ValueError("ragged columns")
    n_rows = lengths.pop() if lengths else 0
    lines = header_lines(config_dict, seed)
    lines.append(",".join(names))
    for i in range(n_rows):
        lines.append(",".join(format_cell(columns[n][i]) for n in names))
    _write_text(path, "\n".join(lines) + "\n")
    return path


def write_summary(path: str, config_dict: dict, seed, results: dict) -> str:
    payload = {
        "version": __version__,
        "config": config_dict,
        "seed": None if seed is None else int(seed),
        "results": results,
    }
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def _write_text(path: str, text: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def save_figure(fig, path: str) -> str:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    fig.savefig(path, dpi=120, metadata={"Software": "toricbath"})
    return path


def new_figure(**kwargs):
    """Agg-backed figure; safe on headless machines."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt.figure(**kwargs)


def parse_header(path: str) -> dict:
    """Recover version, config echo, and seed from an artifact header."""
    with open(path, "r", encoding="utf-8") as fh:
        version_line = fh.readline().strip()
        config_line = fh.readline().strip()
        seed_line = fh.readline().strip()
    if not (version_line.startswith("# toricbath ")
            and config_line.startswith("# config ")
            and seed_line.startswith("# seed ")):
        raise ValueError(f"{path} lacks the standard artifact header")
    seed_txt = seed_line[len("# seed "):]
    return {
        "version": version_line[len("# toricbath "):],
        "config": json.loads(config_line[len("# config "):]),
        "seed": None if seed_txt == "-" else int(seed_txt),
    }


def linear_fit(x, y) -> dict:
    """Least-squares line with R^2, as plain floats for JSON."""
    import numpy as np
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(coef[0]), "intercept": float(coef[1]), "r2": r2}
