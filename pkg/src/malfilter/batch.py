"""Batch execution across (attack x response x seed) grids and report emission."""

from __future__ import annotations

import os
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import controllers, fluidsim, packetsim
from .config import ScenarioConfig
from .model import ValidationError


class CellFailure(RuntimeError):
    """A batch cell failed; carries the (attack, response, seed) identity."""


def _fluid_policy(cfg: ScenarioConfig, sys, response: str):
    return controllers.make_policy(sys, response, gamma_margin=cfg.gamma_margin,
                                   trigger_level=cfg.trigger_level,
                                   fixed_rate=cfg.fixed_rate)


def run_cell(cfg: ScenarioConfig, attack: str, response: str, seed: int,
             trace_path=None):
    """Run one cell; optionally write its trace CSV atomically.

    Returns (L, z_sq_integral, gamma_star).  L is nan when the run has zero
    disturbance energy.
    """
    if cfg.simulator == "fluid":
        sys = cfg.system()
        policy = _fluid_policy(cfg, sys, response)
        noise = fluidsim.NoiseSpec(mean=cfg.noise_mean, std=cfg.noise_std, seed=seed)
        trace = fluidsim.run_scenario(sys, fluidsim.attack_spec(attack), policy,
                                      noise, horizon=cfg.horizon, dt=cfg.dt)
        writer = fluidsim.write_trace_csv
    else:
        boost = {int(k): float(v) for k, v in cfg.h_boost.items()} or None
        trace = packetsim.run_packet_scenario(
            attack, response, seed, horizon=cfg.horizon, interval=cfg.interval,
            gamma_margin=cfg.gamma_margin, sys=cfg.system() if boost else None)
        writer = packetsim.write_packet_trace_csv
    if trace_path is not None:
        _write_atomic(writer, trace, trace_path)
    try:
        L = fluidsim.cost_ratio(trace)
    except fluidsim.UndefinedRatio:
        L = float("nan")
    return L, trace.z_sq_integral, trace.gamma_star


def _write_atomic(writer, trace, path):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    os.close(fd)
    try:
        writer(trace, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell_worker(args):
    cfg, attack, response, seed, path = args
    try:
        return attack, response, seed, run_cell(cfg, attack, response, seed, path)
    except Exception as exc:
        raise CellFailure(f"cell ({attack}, {response}, seed {seed}): {exc}") from exc


def trace_filename(attack: str, response: str, seed: int) -> str:
    return f"trace_{attack}_{response}_seed{seed}.csv"


def run_batch(cfg: ScenarioConfig):
    """Execute the full grid, write per-run traces and the aggregate summary.

    Returns the list of summary rows (attack, response, mean L, mean z_sq,
    gamma_star).  Cells run in deterministic order; with cfg.workers > 1
    independent cells run in parallel and the summary is assembled in the
    same fixed order.
    """
    cfg.validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    cells = [(cfg, a, r, s, os.path.join(cfg.output_dir, trace_filename(a, r, s)))
             for a in cfg.attacks for r in cfg.responses for s in cfg.seeds]
    if cfg.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_cell_worker, cells))
    else:
        results = [_cell_worker(c) for c in cells]

    by_pair: dict[tuple[str, str], list] = {}
    for attack, response, seed, (L, z_sq, gamma_star) in results:
        by_pair.setdefault((attack, response), []).append((L, z_sq, gamma_star))

    rows = []
    for a in cfg.attacks:
        for r in cfg.responses:
            vals = by_pair.get((a, r), [])
            if not vals:
                continue
            Ls = [v[0] for v in vals]
            zs = [v[1] for v in vals]
            gs = [v[2] for v in vals if v[2] is not None]
            rows.append((a, r, float(np.mean(Ls)), float(np.mean(zs)),
                         float(gs[0]) if gs else float("nan")))
    write_summary_csv(rows, os.path.join(cfg.output_dir, "summary.csv"))
    return rows


def write_summary_csv(rows, path):
    with open(path, "w") as f:
        f.write("attack,response,L,z_sq_integral,gamma_star\n")
        for a, r, L, z_sq, gs in rows:
            f.write(f"{a},{r},{L:.10g},{z_sq:.10g},{gs:.10g}\n")


def emit_figure_data(trace, nodes, quantity: str, path):
    """Per-node time series of one trace quantity for external plotting."""
    arr = getattr(trace, quantity, None)
    if arr is None:
        raise ValidationError(f"unknown trace quantity {quantity!r}")
    n = arr.shape[1] if arr.ndim == 2 else 0
    for node in nodes:
        if not 0 <= node < n:
            raise ValidationError(f"unknown node id {node}")
    with open(path, "w") as f:
        f.write(",".join(["time"] + [f"{quantity}_{i + 1}" for i in nodes]) + "\n")
        for k in range(len(trace.times)):
            vals = [f"{trace.times[k]:.10g}"] + [f"{arr[k, i]:.10g}" for i in nodes]
            f.write(",".join(vals) + "\n")
