"""Scenario presets reproducing the evaluation experiments, Monte Carlo
orchestration, and CSV export.

Each scenario expands to one or more cells (parameter sweeps and scheduler
comparisons produce one cell per setting); every cell is simulated for the
requested number of Monte Carlo runs, written as per-run rows plus a
pointwise mean/std aggregate.  Identical (scenario, seed) inputs produce
byte-identical CSV trees.
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .config import ConfigError, ModeSwitch, SimConfig, dump_config
from .core import BestEffort, Malicious
from .metrics import (dissemination_series, latency_series, slope,
                      transit_series)
from .network import RunResult, run_simulation
from .pow_baseline import pow_case_config


@dataclass
class Cell:
    label: str              # "" for single-cell scenarios
    config: SimConfig


@dataclass
class Scenario:
    name: str
    description: str
    cells: list


def _honest(base: SimConfig) -> SimConfig:
    return base


def _mode_switch(base: SimConfig) -> SimConfig:
    # the highest-reputation content node joins the best-effort pool mid-run
    switch_node = 0
    return replace(base, switches=[ModeSwitch(90.0, switch_node, BestEffort())])


def default_attackers(n: int) -> list:
    """Mid-ranking attackers: reputable enough to flood hard, low enough
    that the buffer cap is reached while their traffic is still in flight."""
    ids = {min(n - 1, max(1, round(0.38 * n))),
           min(n - 1, max(2, round(0.56 * n)))}
    return sorted(ids)


def _malicious(base: SimConfig) -> SimConfig:
    """Attackers switch on into the converged network.

    A flooding node that is malicious from t=0 free-rides on the unclaimed
    capacity of the warm-up phase: its early transactions disseminate fast
    and the later (slow) ones are exactly the head-of-queue transactions the
    buffer manager removes, so the surviving sample is biased fast.  Starting
    the attack once best-effort traffic has claimed the spare capacity gives
    the published behaviour: the attacker's dissemination rate starts at its
    max-min fair value, its backlog then grows without bound, and buffer
    drops push its dissemination rate to zero.  ``malicious_start=0``
    recovers an attack from the first second.
    """
    ids = base.malicious_nodes or default_attackers(base.node_count)
    start = base.malicious_start
    if start <= 0:
        return replace(base, malicious_nodes=ids)
    switches = [ModeSwitch(start, m, Malicious(base.malicious_multiplier))
                for m in ids]
    return replace(base, malicious_nodes=[], switches=switches)


def _iot(base: SimConfig) -> SimConfig:
    odd = [m for m in range(base.node_count) if m % 2 == 1]
    return replace(base, iot_ids=odd)


def build_scenario(name: str, base: SimConfig) -> Scenario:
    if name == "honest":
        return Scenario(name, "all nodes honest, reference parameters",
                        [Cell("", _honest(base))])
    if name == "mode-switch":
        return Scenario(name, "top content node turns best-effort at 90 s",
                        [Cell("", _mode_switch(base))])
    if name == "malicious":
        return Scenario(name, "flooding attackers at 10x assured rate",
                        [Cell("", _malicious(base))])
    if name == "drr-vs-drrminus":
        return Scenario(name, "scheduler with and without empty-queue accrual",
                        [Cell("drrminus", base),
                         Cell("drr", replace(base, empty_queue_accrual=False))])
    if name == "iot-mixed":
        return Scenario(name, "odd nodes issue light variable-work transactions",
                        [Cell("", _iot(base))])
    if name in ("pow-case1", "pow-case2", "pow-case3"):
        case = int(name[-1])
        pow_base = replace(base, pow_stochastic=True)
        return Scenario(name, f"proof-of-work access control, case {case}",
                        [Cell("", pow_case_config(case, pow_base))])
    if name == "sweep-A":
        cells = [Cell(f"A={v}", replace(base, rate_increase=v))
                 for v in (0.025, 0.075, 0.225)]
        return Scenario(name, "additive increase sensitivity", cells)
    if name == "sweep-beta":
        cells = [Cell(f"beta={v}", replace(base, rate_decrease=v))
                 for v in (0.5, 0.7, 0.9)]
        return Scenario(name, "multiplicative decrease sensitivity", cells)
    if name == "sweep-W":
        cells = [Cell(f"W={v}", replace(base, backlog_threshold=v))
                 for v in (1.0, 2.0, 4.0)]
        return Scenario(name, "backlog threshold sensitivity", cells)
    if name == "sweep-n":
        cells = [Cell(f"n={v}", replace(base, node_count=v))
                 for v in (25, 50, 100)]
        return Scenario(name, "network size scaling, total reputation conserved",
                        cells)
    raise ConfigError(f"unknown scenario {name!r}")


SCENARIO_NAMES = ["honest", "mode-switch", "malicious", "drr-vs-drrminus",
                  "iot-mixed", "pow-case1", "pow-case2", "pow-case3",
                  "sweep-A", "sweep-beta", "sweep-W", "sweep-n"]


SWEEP_PARAMETERS = {
    "A": "rate_increase",
    "beta": "rate_decrease",
    "W": "backlog_threshold",
    "node_count": "node_count",
}


def run_sweep(parameter: str, values, runs: int, base: SimConfig | None = None,
              workers: int = 1, out_dir: str | None = None):
    """Sweep one supported parameter over an explicit value list, all other
    parameters held at their configured values; node-count sweeps conserve
    the total reputation by construction (``reputation_total`` is an
    absolute quantity).  Returns {"<parameter>=<value>": [RunResult]}."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unsupported sweep parameter {parameter!r}; "
                          f"choose from {sorted(SWEEP_PARAMETERS)}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    base = base if base is not None else SimConfig()
    field_name = SWEEP_PARAMETERS[parameter]
    results = {}
    for v in values:
        label = f"{parameter}={v}"
        cfg = replace(base, **{field_name: v}).validate()
        cell_runs = run_cell(cfg, runs, workers)
        results[label] = cell_runs
        if out_dir is not None:
            export_cell(os.path.join(out_dir, f"sweep-{parameter}", label),
                        cfg, cell_runs)
    return results


# -- monte carlo --------------------------------------------------------------

def _one_run(args):
    cfg, run_index = args
    return run_simulation(cfg, run_index)


def run_cell(cfg: SimConfig, runs: int, workers: int = 1):
    jobs = [(cfg, r) for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one_run, jobs))
    return [_one_run(j) for j in jobs]


def run_scenario(name: str, base: SimConfig, runs: int, workers: int = 1,
                 out_dir: str | None = None):
    """Run every cell of a scenario; optionally export CSVs.  Returns
    {cell_label: [RunResult]}."""
    scenario = build_scenario(name, base)
    results = {}
    for cell in scenario.cells:
        cell_runs = run_cell(cell.config.validate(), runs, workers)
        results[cell.label] = cell_runs
        if out_dir is not None:
            target = os.path.join(out_dir, name, cell.label) if cell.label \
                else os.path.join(out_dir, name)
            export_cell(target, cell.config, cell_runs)
    return results


# -- CSV export ---------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def _write(path, header, rows):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def cell_series(result: RunResult):
    cfg = result.config
    led = result.ledger
    dur = cfg.duration
    win, stride = cfg.dr_window, cfg.dr_stride
    grid, dr = dissemination_series(led, dur, win, stride)
    _, lat = latency_series(led, dur, win, stride)
    _, transit = transit_series(led, dur, stride, issuers=led.honest)
    return grid, dr, lat, transit


def export_cell(target: str, cfg: SimConfig, runs: list):
    nu = cfg.scheduling_rate
    ts_rows, pn_rows, lat_rows, drop_rows, node_rows, sum_rows = \
        [], [], [], [], [], []
    series = []
    per_node_series = []
    for res in runs:
        r = res.run_index
        led = res.ledger
        grid, dr, lat, transit = cell_series(res)
        series.append((grid, dr, lat, transit))
        for t, a, b, c in zip(grid, dr, lat, transit):
            ts_rows.append((r, t, a, a / nu * 100.0, b, c))
        node_dr = {}
        for m in range(cfg.node_count):
            g2, d2 = dissemination_series(led, cfg.duration, cfg.dr_window,
                                          cfg.dr_stride, issuer=m)
            node_dr[m] = d2
            rep = res.reputations[m]
            for t, v in zip(g2, d2):
                pn_rows.append((r, t, m, v, v / rep))
        per_node_series.append((grid, node_dr))
        for uid, done in sorted(led.dissem_time.items()):
            issuer, work, t0 = led.issue_meta[uid]
            lat_rows.append((r, issuer, t0, done - t0, work))
        for t, node, uid in led.drops:
            drop_rows.append((r, t, node, uid >> 32, uid & 0xFFFFFFFF,
                              led.issue_meta[uid][1]))
        for m in range(cfg.node_count):
            node_rows.append((r, m, res.reputations[m], res.mode_names[m],
                              res.assured[m], res.peak_inbox[m]))
        final = (max(cfg.duration - 60.0, 0.0), cfg.duration)
        fin_dr = led.dissemination_rate(*final) if final[1] > final[0] else 0.0
        tr_med = statistics.median(transit) if transit else 0.0
        sum_rows.append((
            r, fin_dr, fin_dr / nu * 100.0,
            led.mean_latency(*final) if final[1] > final[0] else math.nan,
            tr_med, max(transit) if transit else 0.0,
            slope(grid[len(grid) * 2 // 3:], transit[len(transit) * 2 // 3:]),
            len(led.drops), max(res.peak_inbox), len(led.issue_meta),
            len(led.dissem_time)))

    _write(os.path.join(target, "timeseries.csv"),
           ["run", "t", "dr", "dr_pct", "mean_latency", "max_transit"],
           ts_rows)
    _write(os.path.join(target, "per_node.csv"),
           ["run", "t", "node", "dr_i", "scaled_dr_i"], pn_rows)
    _write(os.path.join(target, "latency.csv"),
           ["run", "node", "issue_time", "latency", "work"], lat_rows)
    _write(os.path.join(target, "drops.csv"),
           ["run", "t", "node", "issuer", "seq", "work"], drop_rows)
    _write(os.path.join(target, "nodes.csv"),
           ["run", "node", "reputation", "mode", "assured_rate",
            "peak_inbox"], node_rows)
    _write(os.path.join(target, "summary.csv"),
           ["run", "dr_final60", "dr_pct_final60", "mean_latency_final60",
            "max_transit_median", "max_transit_max", "transit_slope_final3rd",
            "drops", "peak_inbox", "issued", "disseminated"], sum_rows)

    # pointwise aggregate over runs
    grid = series[0][0]
    agg_rows = []
    for idx, t in enumerate(grid):
        row = [t]
        for comp in (1, 2, 3):
            vals = [s[comp][idx] for s in series]
            clean = [v for v in vals if not math.isnan(v)]
            if clean:
                row.append(statistics.fmean(clean))
                row.append(statistics.pstdev(clean) if len(clean) > 1 else 0.0)
            else:
                row.append(math.nan)
                row.append(math.nan)
        agg_rows.append(tuple(row))
    _write(os.path.join(target, "aggregate.csv"),
           ["t", "dr_mean", "dr_std", "latency_mean", "latency_std",
            "transit_mean", "transit_std"], agg_rows)

    pn_agg = []
    for idx, t in enumerate(grid):
        for m in range(cfg.node_count):
            vals = [nd[m][idx] for _, nd in per_node_series]
            mean = statistics.fmean(vals)
            std = statistics.pstdev(vals) if len(vals) > 1 else 0.0
            rep = runs[0].reputations[m]
            pn_agg.append((t, m, mean, std, mean / rep))
    _write(os.path.join(target, "per_node_agg.csv"),
           ["t", "node", "dr_mean", "dr_std", "scaled_dr_mean"], pn_agg)

    with open(os.path.join(target, "config.ini"), "w") as fh:
        fh.write(dump_config(cfg))
    meta = {"runs": len(runs), "modes": runs[0].mode_names,
            "reputations": runs[0].reputations}
    with open(os.path.join(target, "cell.json"), "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
