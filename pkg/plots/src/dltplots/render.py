"""Figure rendering from the simulator's CSV exports.

Reads only the documented CSV files of one scenario cell directory
(aggregate.csv, per_node_agg.csv, latency.csv, nodes.csv, config.ini) and
writes one PNG per figure kind.  Inputs are never modified; output is
deterministic for identical inputs.
"""

from __future__ import annotations

import configparser
import csv
import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


class SchemaError(ValueError):
    """Input CSV columns do not match the documented schema."""


SCHEMAS = {
    "aggregate.csv": ["t", "dr_mean", "dr_std", "latency_mean",
                      "latency_std", "transit_mean", "transit_std"],
    "per_node_agg.csv": ["t", "node", "dr_mean", "dr_std",
                         "scaled_dr_mean"],
    "latency.csv": ["run", "node", "issue_time", "latency", "work"],
    "nodes.csv": ["run", "node", "reputation", "mode", "assured_rate",
                  "peak_inbox"],
}

MODE_COLOURS = {
    "content": "tab:blue",
    "best-effort": "tab:red",
    "inactive": "tab:gray",
    "malicious": "black",
    "pow": "tab:green",
}


def mode_colour(mode: str) -> str:
    if "->" in mode:
        return "tab:purple"     # nodes that switched mode mid-run
    return MODE_COLOURS.get(mode, "tab:orange")


def read_rows(in_dir: str, name: str):
    path = os.path.join(in_dir, name)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected columns "
                              f"{SCHEMAS[name]}")
        want = SCHEMAS[name]
        if header != want:
            missing = [c for c in want if c not in header]
            extra = [c for c in header if c not in want]
            raise SchemaError(
                f"{path}: column mismatch; missing {missing or 'none'}, "
                f"unexpected {extra or 'none'}")
        return [dict(zip(header, row)) for row in reader]


def scheduling_rate(in_dir: str) -> float:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if parser.read(os.path.join(in_dir, "config.ini")):
        try:
            return parser.getfloat("scheduler", "scheduling_rate")
        except (configparser.Error, ValueError):
            pass
    return float("nan")


def node_table(in_dir: str):
    """reputation and mode per node id (run 0 rows)."""
    out = {}
    for row in read_rows(in_dir, "nodes.csv"):
        if row["run"] == "0":
            out[int(row["node"])] = (float(row["reputation"]), row["mode"])
    return out


def line_width(rep: float, max_rep: float) -> float:
    if max_rep <= 0:
        return 1.0
    return 0.4 + 2.6 * rep / max_rep


def cdf_points(latencies):
    """Empirical CDF support points; y climbs from 1/n to 1."""
    xs = sorted(latencies)
    n = len(xs)
    ys = [(i + 1) / n for i in range(n)]
    return xs, ys


def _float(row, key):
    v = row[key]
    return float(v) if v != "" else math.nan


def _save(fig, out_dir: str, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=110, metadata={"Software": "dltplots"})
    plt.close(fig)
    return path


def render_timeseries(in_dir: str, out_dir: str) -> str:
    rows = read_rows(in_dir, "aggregate.csv")
    nu = scheduling_rate(in_dir)
    t = [_float(r, "t") for r in rows]
    dr = [_float(r, "dr_mean") for r in rows]
    dr_sd = [_float(r, "dr_std") for r in rows]
    lat = [_float(r, "latency_mean") for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    if t:
        if not math.isnan(nu) and nu > 0:
            pct = [v / nu * 100 for v in dr]
            band = [s / nu * 100 for s in dr_sd]
            ax1.plot(t, pct, color="tab:blue")
            ax1.fill_between(t, [p - b for p, b in zip(pct, band)],
                             [p + b for p, b in zip(pct, band)],
                             color="tab:blue", alpha=0.2, linewidth=0)
            ax1.set_ylabel("dissemination rate (% of capacity)")
        else:
            ax1.plot(t, dr, color="tab:blue")
            ax1.set_ylabel("dissemination rate (work/s)")
        ax2.plot(t, lat, color="tab:red")
    ax2.set_ylabel("mean latency (s)")
    ax2.set_xlabel("time (s)")
    fig.suptitle("Dissemination rate and mean latency")
    return _save(fig, out_dir, "timeseries.png")


def render_scaled_rates(in_dir: str, out_dir: str) -> str:
    rows = read_rows(in_dir, "per_node_agg.csv")
    nodes = node_table(in_dir)
    max_rep = max((rep for rep, _ in nodes.values()), default=0.0)
    series = {}
    for r in rows:
        series.setdefault(int(r["node"]), []).append(
            (_float(r, "t"), _float(r, "dr_mean"),
             _float(r, "scaled_dr_mean")))
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    for node, pts in sorted(series.items()):
        rep, mode = nodes.get(node, (0.0, "unknown"))
        if mode == "inactive":
            continue
        pts.sort()
        width = line_width(rep, max_rep)
        colour = mode_colour(mode)
        ax1.plot([p[0] for p in pts], [p[1] for p in pts],
                 color=colour, linewidth=width, alpha=0.85)
        ax2.plot([p[0] for p in pts], [p[2] for p in pts],
                 color=colour, linewidth=width, alpha=0.85)
    ax1.set_ylabel("dissemination rate (work/s)")
    ax2.set_ylabel("scaled rate (work/s per reputation)")
    ax2.set_xlabel("time (s)")
    fig.suptitle("Per-node dissemination rates (width ~ reputation)")
    return _save(fig, out_dir, "scaled_rates.png")


def render_latency_cdf(in_dir: str, out_dir: str) -> str:
    rows = read_rows(in_dir, "latency.csv")
    nodes = node_table(in_dir)
    max_rep = max((rep for rep, _ in nodes.values()), default=0.0)
    per_node = {}
    for r in rows:
        per_node.setdefault(int(r["node"]), []).append(_float(r, "latency"))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for node, lats in sorted(per_node.items()):
        rep, mode = nodes.get(node, (0.0, "unknown"))
        xs, ys = cdf_points(lats)
        ax.step([0.0] + xs, [0.0] + ys, where="post",
                color=mode_colour(mode), linewidth=line_width(rep, max_rep),
                alpha=0.85)
    ax.set_xlabel("latency (s)")
    ax.set_ylabel("cumulative fraction of transactions")
    ax.set_ylim(0.0, 1.05)
    fig.suptitle("Latency distribution per node (width ~ reputation)")
    return _save(fig, out_dir, "latency_cdf.png")


def render_max_transit(in_dir: str, out_dir: str) -> str:
    rows = read_rows(in_dir, "aggregate.csv")
    t = [_float(r, "t") for r in rows]
    tr = [_float(r, "transit_mean") for r in rows]
    sd = [_float(r, "transit_std") for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    if t:
        ax.plot(t, tr, color="tab:blue")
        ax.fill_between(t, [a - b for a, b in zip(tr, sd)],
                        [a + b for a, b in zip(tr, sd)],
                        color="tab:blue", alpha=0.2, linewidth=0)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("max time in transit (s)")
    fig.suptitle("Oldest undisseminated transaction age")
    return _save(fig, out_dir, "max_transit.png")


KINDS = {
    "timeseries": render_timeseries,
    "scaled-rates": render_scaled_rates,
    "latency-cdf": render_latency_cdf,
    "max-transit": render_max_transit,
}


def render(kind: str, in_dir: str, out_dir: str):
    """Render one figure kind, or all four with kind='all'."""
    if kind == "all":
        return [KINDS[k](in_dir, out_dir) for k in KINDS]
    if kind not in KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}; "
                          f"choose from {sorted(KINDS)} or 'all'")
    return [KINDS[kind](in_dir, out_dir)]
