"""Persistence: result files, run manifests and small SVG line plots."""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import os
import re
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .integrands import CATALOG_VERSION

TABLE_CSV_COLUMNS = ("row", "integrand", "column", "claimed_t_exp", "claimed_log_exp", "log_order",
                     "fitted_t_exp", "fitted_log_exp", "top_decade_exp", "model", "residual", "pass")
MANIFEST_NAME = "manifest.json"


def stem(ident):
    """File-name-safe form of an integrand id."""
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", ident).strip("_")


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_text(path, text):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    outputs: list = field(default_factory=list)
    started: str = field(default_factory=_now)
    finished: str | None = None
    tool_version: str = __version__
    catalog_version: str = CATALOG_VERSION

    @property
    def config_hash(self):
        return config_hash(self.config)

    def add(self, path):
        self.outputs.append(path)
        return path

    def to_dict(self, root):
        return {
            "command": self.command, "config": self.config, "config_hash": self.config_hash,
            "seed": self.seed, "started": self.started, "finished": self.finished,
            "tool_version": self.tool_version, "catalog_version": self.catalog_version,
            "outputs": [{"path": os.path.relpath(p, root), "sha256": file_sha256(p)}
                        for p in self.outputs],
        }

    def write(self, out_dir):
        self.finished = _now()
        path = os.path.join(out_dir, MANIFEST_NAME)
        return write_text(path, dump_json(self.to_dict(out_dir)))


def verify_manifest(path):
    """Recompute the config hash and every output checksum; returns a list of problems."""
    with open(path) as fh:
        m = json.load(fh)
    root = os.path.dirname(os.path.abspath(path))
    problems = []
    if config_hash(m["config"]) != m["config_hash"]:
        problems.append("config hash mismatch")
    for entry in m["outputs"]:
        p = os.path.join(root, entry["path"])
        if not os.path.exists(p):
            problems.append(f"missing {entry['path']}")
        elif file_sha256(p) != entry["sha256"]:
            problems.append(f"checksum mismatch for {entry['path']}")
    return problems


def table_csv(cells):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_CSV_COLUMNS)
    for c in cells:
        w.writerow([repr(c[k]) if isinstance(c[k], float) else c[k] for k in TABLE_CSV_COLUMNS])
    return buf.getvalue()


def fits_summary(series, fit_rate):
    """Power-law slopes of ``v`` and ``b`` over the whole schedule and the last decade."""
    out = {}
    t = series.t
    for name in ("v", "b"):
        y = getattr(series, name)
        ok = np.isfinite(y) & (y > 0)
        if ok.sum() < 3:
            out[name] = None
            continue
        try:
            fit = fit_rate(t[ok], y[ok], "power")
        except ValueError:  # too few usable points for a fit
            out[name] = None
            continue
        top = ok & (t >= t[ok][-1] / 10)
        slope = float(np.polyfit(np.log(t[top]), np.log(y[top]), 1)[0]) if top.sum() >= 2 else None
        out[name] = {"exponent": fit.exponent, "residual": fit.residual, "last_decade_slope": slope}
    return out


# ---------------------------------------------------------------- SVG ----

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_lineplot(x, series, title="", logx=True, logy=True, width=640, height=400):
    """A bare log-log line plot; nonpositive or nonfinite points are dropped."""
    x = np.asarray(x, dtype=float)
    tx = np.log10 if logx else (lambda a: a)
    ty = np.log10 if logy else (lambda a: a)
    curves = []
    for name, y in series.items():
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(y) & np.isfinite(x)
        if logy:
            ok &= y > 0
        if logx:
            ok &= x > 0
        if ok.sum() >= 2:
            curves.append((name, tx(x[ok]), ty(y[ok])))
    pad = 50
    body = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
            f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>']
    if curves:
        xs = np.concatenate([c[1] for c in curves])
        ys = np.concatenate([c[2] for c in curves])
        x0, x1 = xs.min(), xs.max()
        y0, y1 = ys.min(), ys.max()
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1

        def px(a):
            return pad + (a - x0) / (x1 - x0) * (width - 2 * pad)

        def py(b):
            return height - pad - (b - y0) / (y1 - y0) * (height - 2 * pad)

        body.append(f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" '
                    f'height="{height - 2 * pad}" fill="none" stroke="#999"/>')
        for i, (name, cx, cy) in enumerate(curves):
            col = _COLORS[i % len(_COLORS)]
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(cx, cy))
            body.append(f'<polyline fill="none" stroke="{col}" points="{pts}"/>')
            body.append(f'<text x="{width - pad + 4}" y="{pad + 14 * (i + 1)}" font-size="11" '
                        f'fill="{col}">{name}</text>')
        lab = lambda v, log: f"1e{v:.1f}" if log else f"{v:.3g}"  # noqa: E731
        body.append(f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{lab(x0, logx)}</text>')
        body.append(f'<text x="{width - pad}" y="{height - pad + 16}" font-size="10" '
                    f'text-anchor="end">{lab(x1, logx)}</text>')
        body.append(f'<text x="4" y="{height - pad}" font-size="10">{lab(y0, logy)}</text>')
        body.append(f'<text x="4" y="{pad + 4}" font-size="10">{lab(y1, logy)}</text>')
    body.append("</svg>")
    return "\n".join(body) + "\n"

