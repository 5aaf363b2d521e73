"""Command line entry point.

Verbs:
  synthesize  emit the controller gains file and print gamma*
  run         run a single scenario and write its trace
  batch       run the full (attack x response x seed) grid
  figures     emit per-node time-series CSVs for plotting

Exit codes: 0 success, 2 validation error, 3 synthesis infeasible,
4 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys as _sys

from . import batch as batchmod
from . import controllers, fluidsim, packetsim
from .config import ScenarioConfig, load_config
from .model import ValidationError
from .riccati import SynthesisInfeasible

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_RUNTIME = 4


def _parser():
    p = argparse.ArgumentParser(prog="malfilter",
                                description="Robust malware-filtering control laboratory")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="scenario config file")
        sp.add_argument("--output-dir", default=None, help="override config output_dir")
        sp.add_argument("--seed", type=int, default=None, help="override config seeds")

    sp = sub.add_parser("synthesize", help="emit controller gains and gamma*")
    sp.add_argument("--config", required=True)
    sp.add_argument("--output", default="gains.txt")
    sp.add_argument("--decentralized", action="store_true")

    sp = sub.add_parser("run", help="run one scenario cell")
    common(sp)
    sp.add_argument("--attack", default=None, help="override attack/scenario id")
    sp.add_argument("--response", default=None, help="override response/mode")

    sp = sub.add_parser("batch", help="run the configured grid")
    common(sp)
    sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("figures", help="emit per-node figure CSVs")
    common(sp)
    sp.add_argument("--attack", default=None)
    sp.add_argument("--response", default=None)
    sp.add_argument("--nodes", default="1,2", help="1-based node ids, comma separated")
    sp.add_argument("--quantities", default="x,u,w_a", help="trace quantities to emit")
    return p


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    if getattr(args, "output_dir", None):
        cfg.output_dir = args.output_dir
    if getattr(args, "seed", None) is not None:
        cfg.seeds = [args.seed]
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "attack", None):
        cfg.attacks = [args.attack]
    if getattr(args, "response", None):
        cfg.responses = [args.response]
    return cfg.validate()


def _cmd_synthesize(args) -> int:
    cfg = load_config(args.config)
    system = cfg.system()
    if args.decentralized:
        ctrl = controllers.synthesize_decentralized(system, cfg.gamma_margin).controller
    else:
        ctrl = controllers.synthesize_hinf(system, gamma_margin=cfg.gamma_margin)
    controllers.save_gains(args.output, ctrl)
    print(f"gamma_star {ctrl.gamma_star:.6g}")
    print(f"gamma {ctrl.gamma:.6g}")
    print(f"gains written to {args.output}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _load(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    attack, response = cfg.attacks[0], cfg.responses[0]
    seed = cfg.seeds[0] if cfg.seeds else 0
    path = os.path.join(cfg.output_dir, batchmod.trace_filename(attack, response, seed))
    L, z_sq, gamma_star = batchmod.run_cell(cfg, attack, response, seed, path)
    print(f"{attack} {response} seed={seed} L={L:.6g} z_sq={z_sq:.6g} "
          f"gamma_star={'-' if gamma_star is None else f'{gamma_star:.6g}'}")
    print(f"trace written to {path}")
    return EXIT_OK


def _cmd_batch(args) -> int:
    cfg = _load(args)
    rows = batchmod.run_batch(cfg)
    for a, r, L, z_sq, gs in rows:
        print(f"{a} {r} L={L:.6g} z_sq={z_sq:.6g} gamma_star={gs:.6g}")
    print(f"summary written to {os.path.join(cfg.output_dir, 'summary.csv')}")
    return EXIT_OK


def _cmd_figures(args) -> int:
    cfg = _load(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    attack, response = cfg.attacks[0], cfg.responses[0]
    seed = cfg.seeds[0] if cfg.seeds else 0
    nodes = [int(s) - 1 for s in args.nodes.split(",") if s]
    if cfg.simulator == "fluid":
        system = cfg.system()
        policy = batchmod._fluid_policy(cfg, system, response)
        noise = fluidsim.NoiseSpec(mean=cfg.noise_mean, std=cfg.noise_std, seed=seed)
        trace = fluidsim.run_scenario(system, fluidsim.attack_spec(attack), policy,
                                      noise, horizon=cfg.horizon, dt=cfg.dt)
    else:
        trace = packetsim.run_packet_scenario(attack, response, seed,
                                              horizon=cfg.horizon, interval=cfg.interval,
                                              gamma_margin=cfg.gamma_margin)
    for quantity in [q for q in args.quantities.split(",") if q]:
        path = os.path.join(cfg.output_dir, f"fig_{attack}_{response}_{quantity}.csv")
        batchmod.emit_figure_data(trace, nodes, quantity, path)
        print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "synthesize": _cmd_synthesize,
    "run": _cmd_run,
    "batch": _cmd_batch,
    "figures": _cmd_figures,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_VALIDATION
    except SynthesisInfeasible as exc:
        print(f"synthesis infeasible: {exc}", file=_sys.stderr)
        return EXIT_INFEASIBLE
    except batchmod.CellFailure as exc:
        print(f"error: {exc}", file=_sys.stderr)
        if isinstance(exc.__cause__, SynthesisInfeasible):
            return EXIT_INFEASIBLE
        if isinstance(exc.__cause__, ValidationError):
            return EXIT_VALIDATION
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=_sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
