"""Command-line entry point: ``econcast <command> [options]``.

Every command reads a JSON config, writes one JSON (or CSV) result file and
prints a one-line summary to stdout. Failures print a JSON error object to
stderr and exit with one of the codes below.

Exit codes
----------
0  success
1  unexpected internal error
2  bad command-line usage
3  config file missing or not valid JSON
4  config violates the schema
5  the computation was rejected (infeasible, unsupported topology, regime error)
6  the result could not be written
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as eio
from .analytics import (
    EmptySampleError,
    UndefinedBurstError,
    analytic_burst_length,
    burstiness_report,
    heterogeneity_replicate,
    latency_report,
    normalized_report,
)
from .gibbs import gradient_descent
from .lp import LPError
from .network import NetworkConfig, TopologyError
from .oracle import (
    RegimeError,
    ScheduleError,
    audit_schedule,
    build_periodic_schedule,
    nonclique_bounds,
    schedule_groupput,
    solve_oracle,
)
from .simulator import SimConfig, run_simulation, verify_detailed_balance
from .states import StateSpaceSizeError, ThroughputMode

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_SYNTAX = 3
EXIT_SCHEMA = 4
EXIT_COMPUTE = 5
EXIT_OUTPUT = 6

OUTPUT_ENV = "ECONCAST_OUTPUT_DIR"


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, diagnostics=None):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.diagnostics = diagnostics or []


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "usage", f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# config helpers


def _load(path) -> object:
    if path is None:
        raise CliError(EXIT_USAGE, "usage", "--config is required")
    try:
        doc = eio.load_json(path)
    except FileNotFoundError:
        raise CliError(EXIT_SYNTAX, "config", f"config file not found: {path}") from None
    except OSError as exc:
        raise CliError(EXIT_SYNTAX, "config", f"cannot read {path}: {exc}") from None
    except eio.ConfigSyntaxError as exc:
        raise CliError(EXIT_SYNTAX, "config", str(exc), [eio.Diagnostic("$", exc.line, str(exc)).to_dict()]) from None
    if isinstance(doc, dict) and "config" in doc and "schema" in doc:
        doc = doc["config"]
    return doc


def _validate(doc):
    try:
        return eio.validate_document(doc)
    except eio.ConfigError as exc:
        raise CliError(EXIT_SCHEMA, "schema", f"{len(exc.diagnostics)} schema violation(s)",
                       [d.to_dict() for d in exc.diagnostics]) from None


def _network(args) -> NetworkConfig:
    cfg = _validate(_load(args.config))
    return cfg.network if isinstance(cfg, SimConfig) else cfg


def _sim_config(args) -> SimConfig:
    doc = _load(args.config)
    if not isinstance(doc, dict) or "network" not in doc:
        if isinstance(doc, dict):
            doc = {"network": doc}
    overrides = {}
    for flag in ("sigma", "seed", "duration", "variant", "mode", "estimator", "warmup"):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[flag] = v
    if isinstance(doc, dict):
        doc = {**doc, **overrides}
    return _validate(doc)


def _mode(args, default="groupput") -> ThroughputMode:
    return ThroughputMode.parse(args.mode or default)


# ---------------------------------------------------------------------------
# output


def _output_path(args, command: str, ext: str) -> Path:
    if args.output:
        return Path(args.output)
    base = Path(os.environ.get(OUTPUT_ENV) or ".")
    return base / f"{command}.{ext}"


def _emit(args, command: str, payload: dict, summary: str, csv_rows: list[dict] | None = None) -> int:
    fmt = args.format
    if fmt is None:
        fmt = "csv" if args.output and str(args.output).lower().endswith(".csv") else "json"
    if fmt == "csv" and csv_rows is None:
        raise CliError(EXIT_USAGE, "usage", f"--format csv is not available for '{command}'")
    path = _output_path(args, command, fmt)
    text = eio.rows_to_csv(csv_rows) if fmt == "csv" else eio.dumps(payload)
    try:
        eio.atomic_write(path, text)
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, "output", f"cannot write {path}: {exc}") from None
    print(f"{summary} -> {path}")
    return EXIT_OK


def _doc(command: str, config: dict, result: dict) -> dict:
    return {"schema": f"econcast.{command}/{eio.SCHEMA_VERSION}", "config": config, "result": result}


# ---------------------------------------------------------------------------
# commands


def cmd_oracle(args) -> int:
    net = _network(args)
    mode = _mode(args)
    cfg = eio.network_to_dict(net)
    if net.topology.is_complete:
        sol = solve_oracle(net, mode)
        res = eio.oracle_solution_to_dict(sol)
        rows = [{"node": i, "alpha": a, "beta": b} for i, (a, b) in enumerate(zip(res["alpha"], res["beta"]))]
        summary = f"oracle {mode.value} throughput={sol.throughput:.6g}"
    else:
        if mode is not ThroughputMode.GROUPPUT:
            raise CliError(EXIT_COMPUTE, "compute", "non-clique bounds are defined for groupput only")
        lo, up = nonclique_bounds(net)
        res = {"lower": eio.oracle_solution_to_dict(lo), "upper": eio.oracle_solution_to_dict(up)}
        rows = [{"bound": "lower", "throughput": lo.throughput}, {"bound": "upper", "throughput": up.throughput}]
        summary = f"oracle {mode.value} bounds=[{lo.throughput:.6g}, {up.throughput:.6g}]"
    return _emit(args, "oracle", _doc("oracle", cfg, res), summary, rows)


def cmd_gibbs(args) -> int:
    net = _network(args)
    net.require_clique("the steady-state distribution")
    if args.sigma is None:
        doc = _load(args.config)
        if isinstance(doc, dict) and isinstance(doc.get("sigma"), (int, float)):
            args.sigma = float(doc["sigma"])
        else:
            raise CliError(EXIT_USAGE, "usage", "--sigma is required unless the config sets sigma")
    mode = _mode(args)
    step = args.step_rule
    try:
        step = float(step)
    except ValueError:
        pass
    res = gradient_descent(net, args.sigma, mode, step_rule=step, max_iters=args.max_iters,
                           stop_tol=args.stop_tol, keep_trace=not args.no_trace)
    body = eio.gibbs_result_to_dict(res, include_trace=not args.no_trace)
    cfg = {"network": eio.network_to_dict(net), "sigma": args.sigma, "mode": mode.value}
    rows = [{"node": i, "eta": e, "alpha": a, "beta": b}
            for i, (e, a, b) in enumerate(zip(body["eta"], body["alpha"], body["beta"]))]
    summary = (f"gibbs {mode.value} sigma={args.sigma:g} throughput={res.throughput:.6g} "
               f"iterations={res.iterations} converged={res.converged}")
    return _emit(args, "gibbs", _doc("gibbs", cfg, body), summary, rows)


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    if args.trace_csv and cfg.trace_events == 0:
        cfg = SimConfig(**{**cfg.__dict__, "trace_events": 1_000_000})
    m = run_simulation(cfg)
    body = eio.sim_metrics_to_dict(m, include_samples=not args.no_samples)
    try:
        body["latency"] = {k: v for k, v in eio.latency_to_dict(latency_report(m)).items() if k != "cdf"}
    except EmptySampleError:
        body["latency"] = None
    if args.trace_csv:
        try:
            eio.atomic_write(args.trace_csv, eio.trace_to_csv(m.trace))
        except OSError as exc:
            raise CliError(EXIT_OUTPUT, "output", f"cannot write {args.trace_csv}: {exc}") from None
        body["trace_dropped"] = m.trace_dropped
    rows = [{"node": i, "energy_rate": e, "rho": r, "listen_fraction": l, "transmit_fraction": x}
            for i, (e, r, l, x) in enumerate(zip(body["per_node_energy_rate"], cfg.network.rho,
                                                 body["listen_fraction"], body["transmit_fraction"]))]
    tp = m.groupput if cfg.mode is ThroughputMode.GROUPPUT else m.anyput
    summary = (f"simulate {cfg.variant.value} {cfg.mode.value} sigma={cfg.sigma:g} seed={cfg.seed} "
               f"throughput={tp:.6g} events={m.events}")
    return _emit(args, "simulate", _doc("simulate", eio.sim_config_to_dict(cfg), body), summary, rows)


def _eta_list(text: str | None, n: int):
    if text is None:
        return None
    try:
        eta = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise CliError(EXIT_USAGE, "usage", "--eta must be a comma-separated list of numbers") from None
    if eta.size != n or (eta < 0).any():
        raise CliError(EXIT_USAGE, "usage", f"--eta needs {n} nonnegative values")
    return eta


def cmd_balance(args) -> int:
    cfg = _sim_config(args)
    net = cfg.network
    eta = _eta_list(args.eta, net.n)
    if eta is None:
        eta = gradient_descent(net, cfg.sigma, cfg.mode, keep_trace=False).eta
    rep = verify_detailed_balance(net, eta, cfg.sigma, cfg.variant, cfg.mode)
    body = {"eta": [float(v) for v in eta], "max_violation": rep.max_violation,
            "pairs_checked": rep.pairs_checked,
            "worst_pair": None if rep.worst_pair is None else [int(v) for v in rep.worst_pair]}
    conf = {"network": eio.network_to_dict(net), "sigma": cfg.sigma, "variant": cfg.variant.value, "mode": cfg.mode.value}
    summary = f"balance {cfg.variant.value} {cfg.mode.value} max_violation={rep.max_violation:.3g} pairs={rep.pairs_checked}"
    return _emit(args, "balance", _doc("balance", conf, body), summary, [body | {"eta": args.eta}])


def cmd_burstiness(args) -> int:
    cfg = _sim_config(args)
    net = cfg.network
    net.require_clique("the analytic burst length")
    g = gradient_descent(net, cfg.sigma, cfg.mode, keep_trace=False)
    if args.simulate:
        m = run_simulation(SimConfig(**{**cfg.__dict__, "freeze_multipliers": tuple(g.eta)}))
        rep = burstiness_report(g, m.episode_burst_lengths)
        conf = eio.sim_config_to_dict(cfg)
    else:
        rep = burstiness_report(g, [])
        conf = {"network": eio.network_to_dict(net), "sigma": cfg.sigma, "mode": cfg.mode.value}
    body = eio.burstiness_to_dict(rep)
    summary = f"burstiness {cfg.mode.value} sigma={cfg.sigma:g} analytic={rep.analytic_mean:.6g}"
    if args.simulate:
        summary += f" empirical={rep.empirical_mean:.6g}"
    return _emit(args, "burstiness", _doc("burstiness", conf, body), summary, [body])


def cmd_schedule(args) -> int:
    net = _network(args)
    sol = solve_oracle(net, ThroughputMode.GROUPPUT)
    sched = build_periodic_schedule(sol, slot_length=args.slot_length, max_denominator=args.max_denominator)
    audit = audit_schedule(sched, net)
    body = eio.schedule_to_dict(sched) | {"throughput": schedule_groupput(sched), "oracle_throughput": sol.throughput,
                                          "audit": audit}
    rows = [{"node": i, "slots": s} for i, s in enumerate(body["assignments"])]
    summary = f"schedule period={sched.period} throughput={body['throughput']:.6g} audit={'ok' if all(audit.values()) else 'FAILED'}"
    return _emit(args, "schedule", _doc("schedule", eio.network_to_dict(net), body), summary, rows)


def _replicate(task):
    h, sigmas, n, seed, rep, mode = task
    recs = heterogeneity_replicate(h, sigmas, n, seed, rep, mode)
    return [(r.key, r.oracle, r.gibbs) for r in recs]


def _floats(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(EXIT_USAGE, "usage", f"{flag} must be a comma-separated list of numbers") from None


def cmd_sweep(args) -> int:
    from .analytics import ReplicateRecord

    hs = _floats(args.h, "--h")
    sigmas = _floats(args.sigma_list, "--sigma")
    for h in hs:
        if not 10 <= h <= 250:
            raise CliError(EXIT_USAGE, "usage", f"--h values must lie in [10, 250], got {h:g}")
    if args.replicates < 1:
        raise CliError(EXIT_USAGE, "usage", "--replicates must be at least 1")
    mode = _mode(args)
    seed = 0 if args.seed is None else args.seed
    tasks = [(h, sigmas, args.n, seed, r, mode.value) for h in hs for r in range(args.replicates)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (4 * args.jobs))))
    else:
        results = [_replicate(t) for t in tasks]
    records = [ReplicateRecord(k, o, g) for res in results for k, o, g in res]
    baselines = {}
    if args.config:
        doc = _load(args.config)
        raw = doc.get("baselines", {}) if isinstance(doc, dict) else None
        if not isinstance(raw, dict) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in raw.values()
        ):
            raise CliError(EXIT_SCHEMA, "schema", "baselines must map names to positive numbers",
                           [{"path": "$.baselines", "line": eio._line_of(doc, "baselines"),
                             "message": "must map names to positive numbers"}])
        baselines.update({k: float(v) for k, v in raw.items()})
    for item in args.baseline or []:
        name, _, value = item.partition("=")
        try:
            baselines[name] = float(value)
        except ValueError:
            raise CliError(EXIT_USAGE, "usage", "--baseline takes name=value") from None
    rows = normalized_report(records, baselines)
    conf = {"h": hs, "sigma": sigmas, "n": args.n, "replicates": args.replicates, "seed": seed,
            "mode": mode.value, "baselines": baselines}
    summary = f"sweep {mode.value} rows={len(rows)} replicates={args.replicates}"
    return _emit(args, "sweep", _doc("sweep", conf, {"rows": rows}), summary, rows)


def cmd_validate(args) -> int:
    cfg = _validate(_load(args.config))
    norm = eio.sim_config_to_dict(cfg) if isinstance(cfg, SimConfig) else eio.network_to_dict(cfg)
    kind = "simulation" if isinstance(cfg, SimConfig) else "network"
    return _emit(args, "validate", norm, f"validate ok ({kind}, {cfg.network.n if kind == 'simulation' else cfg.n} nodes)")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    codes = [line.strip() for line in __doc__.split("----------")[1].splitlines() if line.strip()]
    p = _Parser(
        prog="econcast",
        description="Energy-constrained broadcast: oracle, Gibbs solver and simulator.",
        epilog="exit codes:\n  " + "\n  ".join(codes),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt_csv=True):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--output", help=f"result file (default: ${OUTPUT_ENV}/<command>.<format> or ./)")
        sp.add_argument("--format", choices=["json", "csv"] if fmt_csv else ["json"],
                        help="default: csv if --output ends in .csv, else json")
        sp.add_argument("--mode", choices=["groupput", "anyput"])

    def simflags(sp):
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--variant", choices=["capture", "noncapture"])
        sp.add_argument("--estimator", choices=["perfect", "ping"])
        sp.add_argument("--duration", type=float, help="simulated seconds")
        sp.add_argument("--warmup", type=float, help="seconds excluded from metrics")

    sp = sub.add_parser("oracle", help="solve the throughput oracle (bounds for non-clique graphs)")
    common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("gibbs", help="run gradient descent for the Gibbs multipliers")
    common(sp)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--step-rule", default="constant", help="constant, harmonic, theorem or a number")
    sp.add_argument("--max-iters", type=int, default=100_000)
    sp.add_argument("--stop-tol", type=float, default=1e-7)
    sp.add_argument("--no-trace", action="store_true", help="omit the per-iteration trace")
    sp.set_defaults(func=cmd_gibbs)

    sp = sub.add_parser("simulate", help="run the continuous-time protocol simulator")
    common(sp)
    simflags(sp)
    sp.add_argument("--no-samples", action="store_true", help="omit raw burst and latency samples")
    sp.add_argument("--trace-csv", help="also write the state-transition trace as CSV")
    sp.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; a single run is sequential")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("balance", help="check detailed balance of the protocol chain")
    common(sp)
    simflags(sp)
    sp.add_argument("--eta", help="comma-separated multipliers (1/W); default: the solved optimum")
    sp.set_defaults(func=cmd_balance)

    sp = sub.add_parser("burstiness", help="analytic (and optionally simulated) burst length")
    common(sp)
    simflags(sp)
    sp.add_argument("--simulate", action="store_true", help="also simulate with the multipliers frozen at the optimum")
    sp.set_defaults(func=cmd_burstiness)

    sp = sub.add_parser("schedule", help="build a periodic slot schedule for the groupput oracle")
    common(sp)
    sp.add_argument("--slot-length", type=float, default=1e-3)
    sp.add_argument("--max-denominator", type=int, default=10_000)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("sweep", help="heterogeneous-network sweep of normalized throughput")
    sp.add_argument("--config", help="optional JSON with a 'baselines' object of name: constant")
    sp.add_argument("--output")
    sp.add_argument("--format", choices=["json", "csv"])
    sp.add_argument("--mode", choices=["groupput", "anyput"])
    sp.add_argument("--h", default="10,50,100,150,200,250", help="comma-separated heterogeneity values")
    sp.add_argument("--sigma", dest="sigma_list", default="0.5,0.25", help="comma-separated sigma values")
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--replicates", type=int, default=100)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--baseline", action="append", help="name=value; adds ratio_over_<name> columns")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate", help="validate a config and print its normalized form")
    sp.add_argument("--config")
    sp.add_argument("--output")
    sp.add_argument("--format", choices=["json"])
    sp.set_defaults(func=cmd_validate)
    return p


def _fail(err: CliError) -> int:
    payload = {"error": {"code": err.code, "kind": err.kind, "message": str(err), "diagnostics": err.diagnostics}}
    sys.stderr.write(json.dumps(payload) + "\n")
    return err.code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        return _fail(exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (LPError, RegimeError, ScheduleError, TopologyError, StateSpaceSizeError,
            UndefinedBurstError, EmptySampleError) as exc:
        return _fail(CliError(EXIT_COMPUTE, "compute", f"{type(exc).__name__}: {exc}"))
    except ValueError as exc:
        return _fail(CliError(EXIT_COMPUTE, "compute", f"{type(exc).__name__}: {exc}"))
    except Exception as exc:  # noqa: BLE001
        return _fail(CliError(EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}"))


if __name__ == "__main__":
    sys.exit(main())
