"""JSON configuration loading, unit parsing, validation and result serialization.

Configuration files are JSON. Quantities may be plain numbers in SI units or
strings with a unit suffix (``"10uW"``, ``"0.5 mW"``, ``"8ms"``). Validation
collects every problem it finds, each tagged with the JSON path and the line
of the offending key, and raises :class:`ConfigError` carrying the full list.
"""

from __future__ import annotations

import csv
import io as _io
import json
import json.decoder
import json.scanner
import math
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytics import BurstinessReport, LatencyReport
from .gibbs import GibbsResult
from .network import NetworkConfig, NodePowerProfile, Topology, grid_adjacency
from .oracle import OracleSolution, PeriodicSchedule
from .protocol import ProtocolVariant
from .simulator import Estimator, SimConfig, SimMetrics
from .states import ThroughputMode

__all__ = [
    "Diagnostic",
    "ConfigError",
    "ConfigSyntaxError",
    "parse_quantity",
    "load_json",
    "validate_document",
    "validate_config",
    "apply_overrides",
    "network_to_dict",
    "sim_config_to_dict",
    "oracle_solution_to_dict",
    "gibbs_result_to_dict",
    "sim_metrics_to_dict",
    "schedule_to_dict",
    "burstiness_to_dict",
    "latency_to_dict",
    "dumps",
    "atomic_write",
    "rows_to_csv",
    "trace_to_csv",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1

# scale as (multiplier, divisor) so that "10uW" is exactly 1e-05
_PREFIX = {"": (1.0, 1.0), "k": (1e3, 1.0), "m": (1.0, 1e3), "u": (1.0, 1e6), "µ": (1.0, 1e6), "μ": (1.0, 1e6), "n": (1.0, 1e9)}
_TIME_EXTRA = {"min": 60.0, "h": 3600.0}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Zµμ]*)\s*$")


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int | None
    message: str

    def __str__(self) -> str:
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.path}: {self.message}"

    def to_dict(self) -> dict:
        return {"path": self.path, "line": self.line, "message": self.message}


class ConfigSyntaxError(ValueError):
    """The file is not valid JSON."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    """A configuration violates the schema; ``diagnostics`` lists every problem."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


# ---------------------------------------------------------------------------
# JSON with key line numbers


class _Obj(dict):
    """A dict that remembers the line of each key in the source text."""

    lines: dict

    def __init__(self, pairs, lines):
        super().__init__(pairs)
        self.lines = lines
        self.start_line = None


def _key_lines(s: str, start: int, end: int, base_line: int) -> dict:
    # depth-1 keys of the object spanning s[start:end]; start is the '{'
    lines = {}
    depth = 0
    line = base_line
    i = start
    while i < end:
        ch = s[i]
        if ch == "\n":
            line += 1
        elif ch == '"':
            j = i + 1
            while s[j] != '"':
                j += 2 if s[j] == "\\" else 1
            if depth == 1:
                k = j + 1
                while s[k] in " \t\r\n":
                    k += 1
                if s[k] == ":":
                    lines.setdefault(json.loads(s[i : j + 1]), line)
            line += s.count("\n", i, j)
            i = j
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
        i += 1
    return lines


class _LineDecoder(json.JSONDecoder):
    def __init__(self):
        super().__init__()
        self.parse_object = self._parse_object
        self.scan_once = json.scanner.py_make_scanner(self)

    def _parse_object(self, s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo=None):
        s, end = s_and_end
        pairs, new_end = json.decoder.JSONObject(s_and_end, strict, scan_once, None, list, memo)
        base = s.count("\n", 0, end - 1) + 1
        obj = _Obj(pairs, _key_lines(s, end - 1, new_end, base))
        obj.start_line = base
        return obj, new_end


def load_json(path_or_text, *, is_text: bool = False):
    """Parse JSON, returning dicts that carry per-key line numbers."""
    text = path_or_text if is_text else Path(path_or_text).read_text(encoding="utf-8")
    try:
        return _LineDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", exc.lineno) from None


# ---------------------------------------------------------------------------
# units


def parse_quantity(value, dimension: str) -> float:
    """Convert a number or a suffixed string to SI.

    ``dimension`` is ``"power"`` (W), ``"time"`` (s) or ``"energy"`` (J).
    """
    base = {"power": "W", "time": "s", "energy": "J"}[dimension]
    if isinstance(value, bool):
        raise ValueError("expected a number or a quantity string, got a boolean")
    if isinstance(value, (int, float)):
        v = float(value)
    elif isinstance(value, str):
        m = _QTY.match(value)
        if not m:
            raise ValueError(f"cannot parse quantity {value!r}")
        num, unit = float(m.group(1)), m.group(2)
        if unit == "":
            v = num
        elif dimension == "time" and unit in _TIME_EXTRA:
            v = num * _TIME_EXTRA[unit]
        elif unit.endswith(base) and unit[:-1] in _PREFIX:
            mul, div = _PREFIX[unit[:-1]]
            v = num * mul / div
        else:
            raise ValueError(f"unit {unit!r} is not a {dimension} unit (expected e.g. m{base}, u{base})")
    else:
        raise ValueError(f"expected a number or a quantity string, got {type(value).__name__}")
    if not math.isfinite(v):
        raise ValueError("quantity must be finite")
    return v


# ---------------------------------------------------------------------------
# validation


class _Collector:
    def __init__(self):
        self.items: list[Diagnostic] = []

    def add(self, obj, key, path, message):
        line = None
        if isinstance(obj, _Obj):
            line = obj.lines.get(key, obj.start_line)
        self.items.append(Diagnostic(path, line, message))


def _line_of(obj, key=None):
    if isinstance(obj, _Obj):
        return obj.lines.get(key, obj.start_line) if key is not None else obj.start_line
    return None


_NODE_KEYS = {"rho": "power", "listen_cost": "power", "transmit_cost": "power"}


def _qty(obj, key, path, dim, diag, *, positive=True, required=True, default=None):
    if key not in obj:
        if required:
            diag.add(obj, None, f"{path}.{key}", "required field is missing")
        return default
    try:
        v = parse_quantity(obj[key], dim)
    except ValueError as exc:
        diag.add(obj, key, f"{path}.{key}", str(exc))
        return default
    if positive and not v > 0:
        diag.add(obj, key, f"{path}.{key}", f"must be > 0, got {obj[key]!r}")
        return default
    return v


def _unknown(obj, allowed, path, diag):
    for k in obj:
        if k not in allowed:
            diag.add(obj, k, f"{path}.{k}", f"unknown field (allowed: {', '.join(sorted(allowed))})")


def _profile(obj, path, diag):
    if not isinstance(obj, dict):
        diag.add(None, None, path, "node profile must be an object")
        return None
    _unknown(obj, set(_NODE_KEYS), path, diag)
    vals = [_qty(obj, k, path, d, diag) for k, d in _NODE_KEYS.items()]
    if any(v is None for v in vals):
        return None
    return NodePowerProfile(*vals)


def _topology(doc, n, path, diag):
    has_topo = "topology" in doc
    has_grid = "grid" in doc
    if has_topo and has_grid:
        diag.add(doc, "grid", f"{path}.grid", "give either 'grid' or 'topology', not both")
        return None
    spec = doc.get("topology", "clique") if not has_grid else {"grid": doc["grid"]}
    key = "grid" if has_grid else "topology"
    tpath = f"{path}.{key}"
    if spec == "clique":
        return Topology.clique(n) if n else None
    if not isinstance(spec, dict):
        diag.add(doc, key, tpath, "topology must be \"clique\", {\"grid\": [rows, cols]} or {\"adjacency\": matrix}")
        return None
    if "grid" in spec:
        g = spec["grid"]
        if not (isinstance(g, list) and len(g) == 2 and all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in g)):
            diag.add(doc, key, tpath, "grid must be [rows, cols] with positive integers")
            return None
        if n is not None and g[0] * g[1] != n:
            diag.add(doc, key, tpath, f"grid {g[0]}x{g[1]} has {g[0] * g[1]} nodes but {n} profiles were given")
            return None
        return Topology.grid(g[0], g[1])
    if "adjacency" in spec:
        try:
            adj = np.asarray(spec["adjacency"], dtype=float)
            if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or not np.isin(adj, (0, 1)).all():
                raise ValueError("adjacency must be a square 0/1 matrix")
            topo = Topology.graph(adj.astype(bool))
        except ValueError as exc:
            diag.add(doc, key, tpath, str(exc))
            return None
        if n is not None and topo.n != n:
            diag.add(doc, key, tpath, f"adjacency has {topo.n} nodes but {n} profiles were given")
            return None
        return topo
    diag.add(doc, key, tpath, "topology object needs a 'grid' or 'adjacency' entry")
    return None


def _network(doc, path, diag) -> NetworkConfig | None:
    if not isinstance(doc, dict):
        diag.add(None, None, path, "network must be an object")
        return None
    _unknown(doc, {"nodes", "homogeneous", "topology", "grid"}, path, diag)
    profiles = None
    if "nodes" in doc and "homogeneous" in doc:
        diag.add(doc, "homogeneous", f"{path}.homogeneous", "give either 'nodes' or 'homogeneous', not both")
    elif "nodes" in doc:
        nodes = doc["nodes"]
        if not isinstance(nodes, list) or not nodes:
            diag.add(doc, "nodes", f"{path}.nodes", "must be a non-empty list of node profiles")
        else:
            profiles = [_profile(p, f"{path}.nodes[{k}]", diag) for k, p in enumerate(nodes)]
    elif "homogeneous" in doc:
        h = doc["homogeneous"]
        hp = f"{path}.homogeneous"
        if not isinstance(h, dict):
            diag.add(doc, "homogeneous", hp, "must be an object with n, rho, listen_cost, transmit_cost")
        else:
            _unknown(h, {"n", *_NODE_KEYS}, hp, diag)
            n = h.get("n")
            if n is None and ("grid" in doc or isinstance(doc.get("topology"), dict)):
                g = doc.get("grid") or doc.get("topology", {}).get("grid")
                if isinstance(g, list) and len(g) == 2 and all(isinstance(v, int) for v in g):
                    n = g[0] * g[1]
            if not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
                diag.add(h, "n", f"{hp}.n", "must be a positive integer")
            else:
                prof = _profile({k: v for k, v in h.items() if k != "n"} if not isinstance(h, _Obj)
                                else _Obj([(k, v) for k, v in h.items() if k != "n"], h.lines), hp, diag)
                if prof is not None:
                    profiles = [prof] * n
    else:
        diag.add(doc, None, path, "network needs 'nodes' or 'homogeneous'")
    n = len(profiles) if profiles is not None else None
    topo = _topology(doc, n, path, diag)
    if profiles is None or any(p is None for p in profiles) or topo is None:
        return None
    return NetworkConfig(tuple(profiles), topo)


_SIM_FIELDS = {
    "sigma": None,
    "variant": None,
    "mode": None,
    "duration": "time",
    "seed": None,
    "packet_length": "time",
    "delta": None,
    "tau": "time",
    "estimator": None,
    "ping_interval": "time",
    "ping_length": "time",
    "freeze_multipliers": None,
    "warmup": "time",
    "eta0": None,
    "step_schedule": None,
    "phase_offsets": "time_list",
    "battery_capacity": "energy",
    "ping_interval_as_listen": None,
    "collect_occupancy": None,
    "max_events": None,
    "trace_events": None,
    "multiplier_snapshot_every": "time",
}


def _number(obj, key, path, diag, *, positive=False, integer=False, nonneg=False):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        diag.add(obj, key, f"{path}.{key}", f"must be a finite number, got {v!r}")
        return None
    if integer and not (isinstance(v, int) or float(v).is_integer()):
        diag.add(obj, key, f"{path}.{key}", f"must be an integer, got {v!r}")
        return None
    if positive and not v > 0:
        diag.add(obj, key, f"{path}.{key}", f"must be > 0, got {v!r}")
        return None
    if nonneg and v < 0:
        diag.add(obj, key, f"{path}.{key}", f"must be >= 0, got {v!r}")
        return None
    return int(v) if integer else float(v)


def _enum(obj, key, path, diag, parser):
    try:
        return parser(obj[key])
    except ValueError as exc:
        diag.add(obj, key, f"{path}.{key}", str(exc))
        return None


def _sim(doc, diag) -> SimConfig | None:
    _unknown(doc, {"network", *_SIM_FIELDS}, "$", diag)
    net = _network(doc["network"], "$.network", diag)
    kw = {}
    if "sigma" not in doc:
        diag.add(doc, None, "$.sigma", "required field is missing")
    for key, kind in _SIM_FIELDS.items():
        if key not in doc:
            continue
        v = doc[key]
        p = "$"
        if key == "sigma":
            kw[key] = _number(doc, key, p, diag, positive=True)
        elif key in ("delta",):
            kw[key] = _number(doc, key, p, diag, positive=True)
        elif key in ("seed",):
            kw[key] = _number(doc, key, p, diag, integer=True, nonneg=True)
        elif key in ("max_events",):
            kw[key] = None if v is None else _number(doc, key, p, diag, integer=True, positive=True)
        elif key in ("trace_events",):
            kw[key] = _number(doc, key, p, diag, integer=True, nonneg=True)
        elif key == "variant":
            kw[key] = _enum(doc, key, p, diag, ProtocolVariant.parse)
        elif key == "mode":
            kw[key] = _enum(doc, key, p, diag, ThroughputMode.parse)
        elif key == "estimator":
            kw[key] = _enum(doc, key, p, diag, Estimator.parse)
        elif key == "step_schedule":
            if v not in ("constant", "theorem"):
                diag.add(doc, key, f"$.{key}", "must be 'constant' or 'theorem'")
            else:
                kw[key] = v
        elif key in ("ping_interval_as_listen", "collect_occupancy"):
            if not isinstance(v, bool):
                diag.add(doc, key, f"$.{key}", "must be true or false")
            else:
                kw[key] = v
        elif key in ("freeze_multipliers", "eta0"):
            if v is None:
                kw[key] = None
            elif not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) and x >= 0 for x in v):
                diag.add(doc, key, f"$.{key}", "must be a list of nonnegative numbers (1/W)")
            else:
                kw[key] = tuple(float(x) for x in v)
        elif kind == "time_list":
            if v is None:
                kw[key] = None
            elif not isinstance(v, list):
                diag.add(doc, key, f"$.{key}", "must be a list of times")
            else:
                try:
                    kw[key] = tuple(parse_quantity(x, "time") for x in v)
                except ValueError as exc:
                    diag.add(doc, key, f"$.{key}", str(exc))
        elif kind in ("time", "energy"):
            if v is None and key in ("battery_capacity", "multiplier_snapshot_every"):
                kw[key] = None
            else:
                kw[key] = _qty(doc, key, "$", kind, diag, positive=key != "warmup")
                if key == "warmup" and kw[key] is not None and kw[key] < 0:
                    diag.add(doc, key, "$.warmup", "must be >= 0")
    if diag.items or net is None:
        return None
    try:
        return SimConfig(network=net, **{k: v for k, v in kw.items() if v is not None or k in ("battery_capacity",)})
    except ValueError as exc:
        diag.add(doc, None, "$", str(exc))
        return None


def validate_document(doc):
    """Validate a parsed document; returns a NetworkConfig or SimConfig.

    A document with a ``network`` key is a simulation config; one with
    ``nodes``/``homogeneous`` is a bare network. Result files written by the
    CLI (which embed their config under ``config``) validate to that config.

    Raises
    ------
    ConfigError
        Listing every violation found.
    """
    diag = _Collector()
    if isinstance(doc, dict) and "config" in doc and "schema" in doc:
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigError([Diagnostic("$", None, "top level must be a JSON object")])
    if "network" in doc:
        out = _sim(doc, diag)
    else:
        out = _network(doc, "$", diag)
    if diag.items:
        raise ConfigError(sorted(diag.items, key=lambda d: (d.line or 0, d.path)))
    return out


def validate_config(path):
    """Load and validate a config file; see :func:`validate_document`."""
    return validate_document(load_json(path))


def apply_overrides(doc: dict, overrides: dict) -> dict:
    """Return a copy of ``doc`` with dotted-path ``overrides`` applied.

    Keys address existing schema fields (``"sigma"``, ``"network.homogeneous.rho"``).
    """
    out = json.loads(json.dumps(doc))
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        cur = out
        for p in parts[:-1]:
            if not isinstance(cur, dict) or p not in cur:
                raise ConfigError([Diagnostic(f"$.{dotted}", None, "override path does not exist")])
            cur = cur[p]
        if not isinstance(cur, dict):
            raise ConfigError([Diagnostic(f"$.{dotted}", None, "override path does not exist")])
        cur[parts[-1]] = value
    return out


# ---------------------------------------------------------------------------
# serialization


def _f(x):
    return [float(v) for v in np.ravel(x)]


def network_to_dict(net: NetworkConfig) -> dict:
    out = {"nodes": [{"rho": p.rho, "listen_cost": p.listen_cost, "transmit_cost": p.transmit_cost} for p in net.nodes]}
    topo = net.topology
    if topo.kind == "clique":
        out["topology"] = "clique"
    elif topo.grid_shape is not None:
        out["topology"] = {"grid": list(topo.grid_shape)}
    else:
        out["topology"] = {"adjacency": topo.matrix().astype(int).tolist()}
    return out


def sim_config_to_dict(cfg: SimConfig) -> dict:
    out = {"network": network_to_dict(cfg.network)}
    for key in _SIM_FIELDS:
        v = getattr(cfg, key)
        if hasattr(v, "value"):
            v = v.value
        elif isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, np.generic):
            v = v.item()
        if v is None:
            continue
        out[key] = v
    return out


def oracle_solution_to_dict(sol: OracleSolution) -> dict:
    out = {
        "mode": sol.mode.value,
        "throughput": float(sol.throughput),
        "alpha": _f(sol.alpha),
        "beta": _f(sol.beta),
        "awake_fraction": _f(sol.awake),
        "transmit_share_when_awake": _f(sol.transmit_share),
        "duality_gap": float(sol.duality_gap),
    }
    if sol.pair_fractions is not None:
        out["pair_fractions"] = np.asarray(sol.pair_fractions, float).tolist()
    return out


def gibbs_result_to_dict(res: GibbsResult, include_trace: bool = True, include_distribution: bool = True) -> dict:
    out = {
        "mode": res.mode.value,
        "sigma": res.sigma,
        "converged": bool(res.converged),
        "iterations": int(res.iterations),
        "eta": _f(res.eta),
        "throughput": float(res.throughput),
        "entropy": float(res.entropy),
        "objective": float(res.objective),
        "alpha": _f(res.alpha),
        "beta": _f(res.beta),
    }
    if include_distribution:
        out["distribution"] = {
            "n": res.distribution.n,
            "log_partition": float(res.distribution.log_partition),
            "probabilities": _f(res.distribution.probabilities),
        }
    if include_trace:
        out["trace"] = [
            {"eta": _f(r.eta), "throughput": float(r.throughput), "slack": _f(r.slack)} for r in res.trace
        ]
    return out


def sim_metrics_to_dict(m: SimMetrics, include_samples: bool = True) -> dict:
    out = {
        "groupput": m.groupput,
        "anyput": m.anyput,
        "measured_time": m.measured_time,
        "end_time": m.end_time,
        "events": m.events,
        "packets": m.packets,
        "per_node_energy_rate": _f(m.per_node_energy_rate),
        "listen_fraction": _f(m.listen_fraction),
        "transmit_fraction": _f(m.transmit_fraction),
        "ping_listen_fraction": _f(m.ping_listen_fraction),
        "final_multipliers": _f(m.final_multipliers),
        "final_battery": _f(m.final_battery),
        "collided_time": m.collided_time,
        "max_simultaneous_transmitters": m.max_simultaneous_transmitters,
        "burst_count": int(m.burst_lengths.size),
        "mean_burst_length": float(m.burst_lengths.mean()) if m.burst_lengths.size else None,
        "episode_count": int(m.episode_burst_lengths.size),
        "mean_episode_length": float(m.episode_burst_lengths.mean()) if m.episode_burst_lengths.size else None,
        "latency_count": int(m.latencies.size),
        "mean_latency": float(m.latencies.mean()) if m.latencies.size else None,
        "multiplier_trace": {"time": _f(m.multiplier_times), "eta": np.asarray(m.multiplier_trace, float).tolist()},
    }
    if m.occupancy is not None:
        out["occupancy"] = _f(m.occupancy)
    if include_samples:
        out["burst_lengths"] = [int(v) for v in m.burst_lengths]
        out["episode_burst_lengths"] = [int(v) for v in m.episode_burst_lengths]
        out["latencies"] = _f(m.latencies)
    return out


def schedule_to_dict(s: PeriodicSchedule) -> dict:
    return {
        "period": int(s.period),
        "slot_length": float(s.slot_length),
        "transmit_slots": list(s.transmit_slots),
        "listen_slots": list(s.listen_slots),
        "assignments": ["".join("slx"[v] for v in row) for row in s.assignments],
    }


def burstiness_to_dict(r: BurstinessReport) -> dict:
    return {
        "mode": r.mode.value,
        "sigma": r.sigma,
        "analytic_mean": r.analytic_mean,
        "empirical_mean": None if math.isnan(r.empirical_mean) else r.empirical_mean,
        "relative_gap": None if math.isnan(r.relative_gap) else r.relative_gap,
        "samples": r.samples,
    }


def latency_to_dict(r: LatencyReport) -> dict:
    return {"mean": r.mean, "p99": r.p99, "samples": r.samples, "cdf": r.cdf.tolist()}


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def atomic_write(path, data: str | bytes) -> Path:
    """Write ``data`` to ``path`` through a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def rows_to_csv(rows: list[dict]) -> str:
    """Render rows as CSV text; columns are the union of keys in first-seen order."""
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def trace_to_csv(trace) -> str:
    """Event trace as CSV with columns time,node,old_state,new_state."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "node", "old_state", "new_state"])
    for t, node, old, new in zip(trace.time, trace.node, trace.old, trace.new):
        w.writerow([repr(float(t)), int(node), "slx"[old], "slx"[new]])
    return buf.getvalue()
