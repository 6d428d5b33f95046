"""Command-line front end: design, optimize, tradeoff, and simulate workflows.

Configuration comes from a JSON file (``--config``) with flag overrides on
top; every run writes its outputs plus a ``manifest.json`` snapshot of the
fully resolved configuration, and rerunning from that manifest reproduces
the data files byte for byte (``wall_clock_s`` is the one volatile field).
Floats are emitted with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .constellation import SystemConfig, design_constellation
from .embedding import build_embedding, error_report, tag_power, uniform_embedding
from .optimize import (
    BARRIER_GAP_TOL,
    BARRIER_MU,
    BARRIER_T0,
    NEWTON_TOL,
    InfeasibleError,
    SolverError,
    allocate_power,
    tradeoff_curve,
)
from .simulate import (
    TAG_HASH,
    SimConfig,
    make_packet,
    reproduce_fig3,
    simulate_packets,
    simulate_ser,
)

__all__ = ["main", "ConfigError", "DEFAULT_CONFIG"]


class ConfigError(ValueError):
    """Invalid configuration; reported with the offending field path."""


DEFAULT_CONFIG = {
    "system": {
        "n_antennas": 128,
        "sigma2": 1.0,
        "msg_order": 4,
        "max_msg_ser": 1e-5,
        "msg_snr_db": 10.0,
        "msg_snr": None,  # derived; manifests store the linear form alongside dB
        "msg_power": None,
        "total_power": 11.0,
    },
    "design": {
        "ratio_fraction": 0.5,
        "ratios": None,
        "uniform_power": None,
    },
    "optimize": {
        "grid_points": 64,
        "refine_tol": 1e-6,
    },
    "tradeoff": {
        "delta_grid": [1e-6, 3.1623e-6, 1e-5, 3.1623e-5, 1e-4, 3.1623e-4, 1e-3],
    },
    "simulate": {
        "trials": 10_000_000,
        "snr_db_grid": None,
        "full_vector": False,
        "packets": {
            "count": 100_000,
            "symbols": 32,
            "forge_count": 1_000_000,
            "forge_symbols": 10,
        },
    },
    "seed": 0,
    "workers": 1,
    "out": "out",
}


# ---------------------------------------------------------------------------
# serialization: 17-significant-digit floats, sorted keys, value round-trip
# ---------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        return "null"
    return "%.17g" % x


def _json_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{inner}{json.dumps(str(key))}: {_json_text(obj[key], indent + 1)}'
            for key in sorted(obj)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{_json_text(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool | np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> None:
    path.write_text(_json_text(obj) + "\n")


def write_csv(path: Path, header: list[str], rows) -> None:
    def cell(v):
        if isinstance(v, bool | np.bool_):
            return str(int(v))
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return "%.17g" % float(v)
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------

def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if "config" in raw and "command" in raw:  # a manifest from a previous run
        raw = raw["config"]
        if not isinstance(raw, dict):
            raise ConfigError("manifest config snapshot must be a JSON object")
    return _merge(DEFAULT_CONFIG, raw)


def _apply_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    if args.workers is not None:
        cfg["workers"] = args.workers
    if args.trials is not None:
        cfg["simulate"]["trials"] = args.trials
    if args.msg_snr_db is not None:
        cfg["system"]["msg_snr_db"] = args.msg_snr_db
        cfg["system"]["msg_power"] = None
    if getattr(args, "tag_ratio", None) is not None:
        cfg["design"]["ratio_fraction"] = args.tag_ratio
        cfg["design"]["ratios"] = None
        cfg["design"]["uniform_power"] = None
    if getattr(args, "delta_grid", None) is not None:
        try:
            cfg["tradeoff"]["delta_grid"] = [float(s) for s in args.delta_grid.split(",") if s]
        except ValueError as exc:
            raise ConfigError(f"--delta-grid: {exc}") from exc
    if getattr(args, "full_vector", False):
        cfg["simulate"]["full_vector"] = True
    return cfg


def _positive(cfg: dict, section: str, key: str, kind=float):
    value = cfg[section][key]
    try:
        value = kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}.{key}: expected {kind.__name__}") from exc
    if value <= 0:
        raise ConfigError(f"{section}.{key} must be positive")
    return value


def _resolve_msg_power(cfg: dict) -> float:
    sys_cfg = cfg["system"]
    sigma2 = _positive(cfg, "system", "sigma2")
    if sys_cfg.get("msg_power") is not None:
        power = float(sys_cfg["msg_power"])
    elif sys_cfg.get("msg_snr_db") is not None:
        power = sigma2 * 10.0 ** (float(sys_cfg["msg_snr_db"]) / 10.0)
    else:
        raise ConfigError("system: one of msg_power or msg_snr_db is required")
    if not power > 0:
        raise ConfigError("system.msg_power: gamma_m must be positive")
    return power


def _system_config(cfg: dict, with_msg_power: bool) -> SystemConfig:
    n_antennas = _positive(cfg, "system", "n_antennas", int)
    sigma2 = _positive(cfg, "system", "sigma2")
    msg_order = cfg["system"]["msg_order"]
    if not isinstance(msg_order, int) or msg_order < 2:
        raise ConfigError("system.msg_order must be an integer >= 2")
    max_msg_ser = _positive(cfg, "system", "max_msg_ser")
    if max_msg_ser >= 1:
        raise ConfigError("system.max_msg_ser must lie in (0, 1)")
    if with_msg_power:
        msg_power = _resolve_msg_power(cfg)
        total = cfg["system"]["total_power"]
        total = float(total) if total is not None else msg_power
        total = max(total, msg_power)
    else:
        msg_power = None
        total = _positive(cfg, "system", "total_power")
    try:
        return SystemConfig(
            n_antennas=n_antennas,
            sigma2=sigma2,
            msg_order=msg_order,
            total_power=total,
            max_msg_ser=max_msg_ser,
            msg_power=msg_power,
        )
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from exc


def _config_snapshot(cfg: dict) -> dict:
    snap = copy.deepcopy(cfg)
    sys_cfg = snap["system"]
    if sys_cfg.get("msg_power") is None and sys_cfg.get("msg_snr_db") is not None:
        sys_cfg["msg_power"] = float(sys_cfg["sigma2"]) * 10.0 ** (
            float(sys_cfg["msg_snr_db"]) / 10.0
        )
    if sys_cfg.get("msg_snr_db") is None and sys_cfg.get("msg_power") is not None:
        gamma = float(sys_cfg["msg_power"]) / float(sys_cfg["sigma2"])
        sys_cfg["msg_snr_db"] = 10.0 * np.log10(gamma)
    if sys_cfg.get("msg_power") is not None:
        sys_cfg["msg_snr"] = float(sys_cfg["msg_power"]) / float(sys_cfg["sigma2"])
    return snap


def _write_manifest(out_dir: Path, command: str, cfg: dict, outputs: list[str], started: float):
    manifest = {
        "command": command,
        "version": __version__,
        "master_seed": int(cfg["seed"]),
        "config": _config_snapshot(cfg),
        "solver_parameters": {
            "barrier_t0": BARRIER_T0,
            "barrier_mu": BARRIER_MU,
            "barrier_gap_tol": BARRIER_GAP_TOL,
            "newton_tol": NEWTON_TOL,
        },
        "tag_hash": TAG_HASH,
        "outputs": sorted(outputs),
        "wall_clock_s": time.perf_counter() - started,
    }
    write_json(out_dir / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _design_embedding(cfg: dict, base):
    d_cfg = cfg["design"]
    if d_cfg.get("ratios") is not None:
        ratios = np.asarray([float(r) for r in d_cfg["ratios"]], dtype=float)
        if len(ratios) != base.order:
            raise ConfigError(
                f"design.ratios: expected {base.order} entries, got {len(ratios)}"
            )
        try:
            return build_embedding(base, ratios)
        except ValueError as exc:
            raise ConfigError(f"design.ratios: {exc}") from exc
    if d_cfg.get("uniform_power") is not None:
        tau = float(d_cfg["uniform_power"])
        if tau <= 0:
            raise ConfigError("design.uniform_power must be positive")
        emb = uniform_embedding(base, tau)
        if not emb.detector_ok:
            raise ConfigError("design.uniform_power breaks threshold ordering")
        return emb
    fraction = float(d_cfg.get("ratio_fraction", 0.5))
    if not 0 < fraction < 1:
        raise ConfigError("design.ratio_fraction must lie in (0, 1)")
    return build_embedding(base, np.full(base.order, fraction * base.log_step))


def cmd_design(cfg: dict, out_dir: Path, started: float) -> int:
    system = _system_config(cfg, with_msg_power=True)
    base = design_constellation(system)
    emb = _design_embedding(cfg, base)
    report = error_report(emb, system.n_antennas)
    payload = {
        "system": _config_snapshot(cfg)["system"],
        "ratio": base.ratio,
        "log_step": base.log_step,
        "message_powers": base.powers,
        "message_variances": base.variances,
        "message_thresholds": base.thresholds,
        "tag_log_ratios": emb.log_ratios,
        "tag_variances_bit0": emb.var_tag0,
        "tag_variances_bit1": emb.var_tag1,
        "tag_symbol_powers": emb.tag_symbol_powers,
        "avg_tag_power": tag_power(emb),
        "embedded_msg_thresholds": emb.msg_thresholds,
        "tag_thresholds": emb.tag_thresholds,
        "interleaving_ok": bool(emb.detector_ok and np.all(emb.symbol_ok)),
        "analytic": {
            "msg_ser": report.msg_ser,
            "tag_ser": report.tag_ser,
            "msg_ser_upper": report.msg_ser_upper,
        },
    }
    write_json(out_dir / "design.json", payload)
    _write_manifest(out_dir, "design", cfg, ["design.json"], started)
    print(f"design: wrote {out_dir / 'design.json'}")
    return 0


def cmd_optimize(cfg: dict, out_dir: Path, started: float) -> int:
    system = _system_config(cfg, with_msg_power=False)
    grid_points = _positive(cfg, "optimize", "grid_points", int)
    refine_tol = _positive(cfg, "optimize", "refine_tol")
    alloc = allocate_power(system, grid_points=grid_points, refine_tol=refine_tol)
    rows = zip(alloc.alpha_grid, alloc.h_values, alloc.bound_values, alloc.feasible)
    write_csv(out_dir / "h_curve.csv", ["alpha", "tag_ser", "message_ser_upper", "feasible"], rows)
    best = alloc.result_star
    payload = {
        "total_power": system.total_power,
        "max_msg_ser": system.max_msg_ser,
        "alpha0": alloc.alpha0,
        "alpha_star": alloc.alpha_star,
        "h_star": alloc.h_star,
        "unimodal": bool(alloc.unimodal),
        "solution": best.summary() if best is not None else None,
    }
    write_json(out_dir / "optimize.json", payload)
    _write_manifest(out_dir, "optimize", cfg, ["optimize.json", "h_curve.csv"], started)
    print(
        f"optimize: alpha*={alloc.alpha_star:.6f} tag SER={alloc.h_star:.6e} "
        f"-> {out_dir / 'optimize.json'}"
    )
    return 0


def cmd_tradeoff(cfg: dict, out_dir: Path, started: float) -> int:
    system = _system_config(cfg, with_msg_power=False)
    delta_grid = cfg["tradeoff"]["delta_grid"]
    if not delta_grid:
        raise ConfigError("tradeoff.delta_grid must be a nonempty list")
    points = tradeoff_curve(system, [float(d) for d in delta_grid])
    rows = [(p.max_msg_ser, p.min_tag_ser, p.alpha_star, p.feasible) for p in points]
    write_csv(out_dir / "tradeoff.csv", ["delta", "min_tag_ser", "alpha_star", "feasible"], rows)
    _write_manifest(out_dir, "tradeoff", cfg, ["tradeoff.csv"], started)
    feasible = sum(p.feasible for p in points)
    print(f"tradeoff: {feasible}/{len(points)} feasible points -> {out_dir / 'tradeoff.csv'}")
    return 0


def cmd_simulate(cfg: dict, out_dir: Path, started: float) -> int:
    system = _system_config(cfg, with_msg_power=True)
    sim_cfg = cfg["simulate"]
    trials = _positive(cfg, "simulate", "trials", int)
    target = system.max_msg_ser
    if trials < 30 / target:
        print(
            f"warning: trials={trials} gives < 30 expected events at rate {target:g}",
            file=sys.stderr,
        )
    rows, meta = reproduce_fig3(
        n_antennas=system.n_antennas,
        sigma2=system.sigma2,
        msg_order=system.msg_order,
        max_msg_ser=system.max_msg_ser,
        snr_db_grid=sim_cfg.get("snr_db_grid"),
        trials=trials,
        master_seed=int(cfg["seed"]),
        workers=int(cfg["workers"]),
    )
    header = list(rows[0].keys())
    write_csv(out_dir / "fig3.csv", header, ([row[h] for h in header] for row in rows))

    pk = sim_cfg["packets"]
    auth = _run_auth_trials(cfg, meta, pk)
    write_json(out_dir / "auth.json", auth)
    _write_manifest(out_dir, "simulate", cfg, ["fig3.csv", "auth.json"], started)
    print(f"simulate: {len(rows)} SNR points -> {out_dir / 'fig3.csv'}")
    return 0


def _run_auth_trials(cfg: dict, meta: dict, pk: dict) -> dict:
    from .optimize import optimized_embedding

    top = max(meta["snr_db_grid"])
    sigma2 = float(meta["sigma2"])
    msg_power = sigma2 * 10 ** (top / 10)
    system = SystemConfig(
        n_antennas=int(meta["n_antennas"]),
        sigma2=sigma2,
        msg_order=int(meta["msg_order"]),
        total_power=msg_power + 1e6 * sigma2,
        max_msg_ser=float(meta["max_msg_ser"]),
        msg_power=msg_power,
    )
    emb, _ = optimized_embedding(system)
    seed = int(cfg["seed"])
    workers = int(cfg["workers"])

    def block(n_packets, n_symbols, forge):
        sim = SimConfig(
            emb=emb,
            n_antennas=system.n_antennas,
            trials=max(int(n_packets), 10_000),
            master_seed=seed + (1_000_003 if forge else 1_000_001),
            workers=workers,
        )
        stats = simulate_packets(sim, int(n_packets), int(n_symbols), forge_tags=forge)
        return {
            "n_packets": stats.n_packets,
            "symbols_per_packet": int(n_symbols),
            "accepted": stats.accepted,
            "acceptance_rate": stats.acceptance_rate,
            "message_corrupted": stats.message_corrupted,
            "tag_mismatch": stats.tag_mismatch,
        }

    return {
        "tag_hash": TAG_HASH,
        "snr_db": top,
        "legitimate": block(pk["count"], pk["symbols"], False),
        "forgery": block(pk["forge_count"], pk["forge_symbols"], True),
    }


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simoauth",
        description="Power-domain message authentication for energy-detection receivers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (or a manifest.json to rerun)")
        p.add_argument("--seed", type=int, help="master RNG seed (unsigned 64-bit)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="worker processes for simulation")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        p.add_argument("--msg-snr-db", type=float, dest="msg_snr_db", help="message SNR in dB")

    p = sub.add_parser("design", help="constellation, thresholds, analytic error rates")
    common(p)
    p.add_argument(
        "--tag-ratio",
        type=float,
        dest="tag_ratio",
        help="per-symbol tag log-ratio as a fraction of the constellation log-step",
    )

    p = sub.add_parser("optimize", help="tag-power optimization and the H(alpha) sweep")
    common(p)

    p = sub.add_parser("tradeoff", help="minimum tag SER versus message SER cap")
    common(p)
    p.add_argument("--delta-grid", dest="delta_grid", help="comma-separated message SER caps")

    p = sub.add_parser("simulate", help="Monte Carlo SNR sweep plus authentication trials")
    common(p)
    p.add_argument(
        "--full-vector",
        action="store_true",
        dest="full_vector",
        help="materialize per-antenna channel vectors instead of direct energy sampling",
    )
    return parser


_COMMANDS = {
    "design": cmd_design,
    "optimize": cmd_optimize,
    "tradeoff": cmd_tradeoff,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        out_dir = Path(cfg["out"])
        out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out_dir, started)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if exc.min_achievable is not None:
            print(f"minimum achievable message-SER bound: {exc.min_achievable:.6e}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:  # library-level validation surfaced as config error
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
