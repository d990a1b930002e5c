"""File formats: population NDJSON, adjacency CSV, trace NDJSON, run configs.

Vertex indices are 1-based in every file and 0-based in memory. Trace files
carry a header line with the config hash followed by one JSON object per kept
sample; they contain no timestamps, so identical runs produce byte-identical
files.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .errors import ConfigError, ParseError, SchemaError
from .graphs import GraphPopulation, LabelledGraph
from .inference import McmcConfig, Trace
from .metrics import DistanceMatrix


# ---------------------------------------------------------------------------
# Populations and single graphs
# ---------------------------------------------------------------------------


def _edges_1based(g: LabelledGraph) -> list[list[int]]:
    return [[i + 1, j + 1] for i, j in g.edges()]


def _graph_from_record(n: int, edges, line_no: int) -> LabelledGraph:
    pairs = []
    for e in edges:
        if not isinstance(e, (list, tuple)) or len(e) != 2:
            raise ParseError(f"edge {e!r} is not a pair", line_no)
        i, j = e
        if not isinstance(i, int) or not isinstance(j, int):
            raise ParseError(f"edge {e!r} has non-integer endpoints", line_no)
        if i == j:
            raise ParseError(f"edge [{i}, {j}] is a self-loop", line_no)
        if not (1 <= i < j <= n):
            raise ParseError(f"edge [{i}, {j}] outside 1 <= i < j <= {n}", line_no)
        pairs.append((i - 1, j - 1))
    if len(set(pairs)) != len(pairs):
        raise ParseError("duplicate edge in record", line_no)
    return LabelledGraph.from_edges(n, pairs)


def read_population(path: str) -> GraphPopulation:
    """Population NDJSON: one object per line {"id": str, "n": int, "edges": [[i,j],...]}."""
    graphs: list[LabelledGraph] = []
    ids: list[str] = []
    n_common: Optional[int] = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line_no) from exc
            if not isinstance(rec, dict):
                raise ParseError("record is not an object", line_no)
            for key in ("n", "edges"):
                if key not in rec:
                    raise SchemaError("missing", field=key)
            n = rec["n"]
            if not isinstance(n, int) or n < 1:
                raise SchemaError(f"bad vertex count {n!r}", field="n")
            if n_common is None:
                n_common = n
            elif n != n_common:
                raise SchemaError(
                    f"population mixes n={n_common} and n={n} graphs", field="n"
                )
            graphs.append(_graph_from_record(n, rec["edges"], line_no))
            ids.append(str(rec.get("id", f"g{line_no}")))
    if not graphs:
        raise ParseError("file contains no graphs")
    return GraphPopulation(tuple(graphs), tuple(ids))


def write_population(pop: GraphPopulation, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for k, g in enumerate(pop.graphs):
            gid = pop.ids[k] if pop.ids is not None else f"g{k + 1}"
            rec = {"id": gid, "n": g.n_vertices, "edges": _edges_1based(g)}
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_adjacency_csv(path: str) -> LabelledGraph:
    """Adjacency CSV: N rows of N comma-separated 0/1 entries, no header."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([int(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise ParseError(f"non-integer adjacency entry ({exc})", line_no) from exc
    if not rows:
        raise ParseError("empty adjacency file")
    from .graphs import from_adjacency

    return from_adjacency(np.array(rows))


def write_adjacency_csv(g: LabelledGraph, path: str) -> None:
    a = g.to_adjacency()
    with open(path, "w", encoding="utf-8") as fh:
        for row in a:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _mcmc_config_dict(cfg: McmcConfig) -> dict:
    return {
        "n_samples": cfg.n_samples,
        "burn_in": cfg.burn_in,
        "lag": cfg.lag,
        "flip_prob_tau": cfg.flip_prob_tau,
        "kernel_mix_weight": cfg.kernel_mix_weight,
        "step_sizes_upsilon": list(cfg.step_sizes_upsilon),
        "aux_inner_steps": cfg.aux_inner_steps,
        "seed": cfg.seed,
    }


def write_trace(trace: Trace, path: str) -> None:
    """Trace NDJSON: a header with the config hash, then one line per kept sample."""
    cfg_dict = _mcmc_config_dict(trace.config) if trace.config is not None else {}
    header = {
        "type": "trace",
        "config_hash": config_hash(cfg_dict),
        "n_vertices": trace.n_vertices,
        "param": trace.param_name,
        "config": cfg_dict,
        "accept_counts": {k: list(v) for k, v in trace.accept_counts.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for it, (g, p, lk) in enumerate(
            zip(trace.graphs, trace.params, trace.log_kernels)
        ):
            rec = {
                "iter": it,
                "edges": _edges_1based(g),
                "param": float(p),
                "log_kernel": float(lk),
            }
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_trace(path: str) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ParseError("empty trace file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON header ({exc.msg})", 1) from exc
    if header.get("type") != "trace":
        raise SchemaError("first line is not a trace header", field="type")
    n_vertices = header["n_vertices"]
    graphs, params, log_kernels = [], [], []
    for line_no, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line_no) from exc
        graphs.append(_graph_from_record(n_vertices, rec["edges"], line_no))
        params.append(float(rec["param"]))
        log_kernels.append(float(rec["log_kernel"]))
    cfg_dict = header.get("config") or None
    cfg = None
    if cfg_dict:
        cfg = McmcConfig(
            n_samples=cfg_dict["n_samples"],
            burn_in=cfg_dict["burn_in"],
            lag=cfg_dict["lag"],
            flip_prob_tau=cfg_dict["flip_prob_tau"],
            kernel_mix_weight=cfg_dict["kernel_mix_weight"],
            step_sizes_upsilon=tuple(cfg_dict["step_sizes_upsilon"]),
            aux_inner_steps=cfg_dict["aux_inner_steps"],
            seed=cfg_dict["seed"],
        )
    return Trace(
        graphs=graphs,
        params=np.array(params),
        log_kernels=np.array(log_kernels),
        param_name=header["param"],
        n_vertices=n_vertices,
        accept_counts={k: tuple(v) for k, v in header.get("accept_counts", {}).items()},
        config=cfg,
    )


# ---------------------------------------------------------------------------
# Matrices, coordinates, distributions, study tables
# ---------------------------------------------------------------------------


def write_distance_matrix(dmat: DistanceMatrix, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in dmat.values:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def write_mds_coords(ids, coords: np.ndarray, path: str) -> None:
    dim = coords.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id," + ",".join(f"x{k + 1}" for k in range(dim)) + "\n")
        for gid, row in zip(ids, coords):
            fh.write(str(gid) + "," + ",".join(format(v, ".17g") for v in row) + "\n")


def write_exact_distribution(dist, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g, lp in zip(dist.space, dist.log_probs):
            rec = {"edges": _edges_1based(g), "log_prob": float(lp)}
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def write_gamma_profile_csv(rows, path: str) -> None:
    """Box-plot data: one line per profiled gamma value."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("gamma,q1,median,q3,whisker_low,whisker_high,mean\n")
        for r in rows:
            fh.write(
                ",".join(
                    format(v, ".17g")
                    for v in (r.gamma, r.q1, r.median, r.q3, r.whisker_low, r.whisker_high, r.mean)
                )
                + "\n"
            )


def write_qq_csv(rb_values: np.ndarray, df: int, path: str) -> None:
    """Quantile pairs of the binned discrepancy statistic against chi-squared(df)."""
    from scipy import stats as sstats

    rb = np.sort(np.asarray(rb_values))
    k = len(rb)
    theory = sstats.chi2.ppf((np.arange(k) + 0.5) / k, df)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("chi2_quantile,rb_quantile\n")
        for t, v in zip(theory, rb):
            fh.write(f"{format(t, '.17g')},{format(v, '.17g')}\n")


def write_rows_csv(rows: list[dict], path: str) -> None:
    if not rows:
        raise ValueError("no rows to write")
    cols = list(rows[0].keys())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    format(v, ".17g") if isinstance(v, float) else str(v)
                    for v in (row[c] for c in cols)
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# Run configuration: flat key=value documents with a strict schema
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfigKey:
    parse: Callable[[str], Any]
    default: Any = None
    required: bool = False


def _parse_choice(*options):
    def parse(raw: str):
        if raw not in options:
            raise ConfigError(f"expected one of {options}, got {raw!r}")
        return raw

    return parse


def _parse_float(lo=None, hi=None, lo_open=True, hi_open=True):
    def parse(raw: str):
        try:
            v = float(raw)
        except ValueError as exc:
            raise ConfigError(f"not a number: {raw!r}") from exc
        if lo is not None and (v <= lo if lo_open else v < lo):
            raise ConfigError(f"{v} below the allowed minimum {lo}")
        if hi is not None and (v >= hi if hi_open else v > hi):
            raise ConfigError(f"{v} above the allowed maximum {hi}")
        return v

    return parse


def _parse_int(lo=None):
    def parse(raw: str):
        try:
            v = int(raw)
        except ValueError as exc:
            raise ConfigError(f"not an integer: {raw!r}") from exc
        if lo is not None and v < lo:
            raise ConfigError(f"{v} below the allowed minimum {lo}")
        return v

    return parse


def _parse_floats_csv(raw: str):
    try:
        values = tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"not a comma-separated float list: {raw!r}") from exc
    if not values or any(v <= 0 for v in values):
        raise ConfigError("expected a nonempty list of positive numbers")
    return values


def _parse_ints_csv(raw: str):
    try:
        values = tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"not a comma-separated integer list: {raw!r}") from exc
    if not values or any(v < 1 for v in values):
        raise ConfigError("expected a nonempty list of positive integers")
    return values


def _parse_str(raw: str):
    return raw


FIT_SCHEMA: dict[str, ConfigKey] = {
    "data": ConfigKey(_parse_str, required=True),
    "out": ConfigKey(_parse_str, default="out"),
    "model": ConfigKey(_parse_choice("cer", "snf"), default="cer"),
    "metric": ConfigKey(_parse_choice("hamming", "diffusion"), default="hamming"),
    "t": ConfigKey(_parse_float(lo=0.0), default=1.0),
    "phi": ConfigKey(_parse_choice("identity", "square"), default="identity"),
    "g0": ConfigKey(_parse_str, default=None),
    "alpha0": ConfigKey(_parse_float(lo=0.0, hi=0.5), default=0.05),
    "beta_a": ConfigKey(_parse_float(lo=0.0), default=1.0),
    "beta_b": ConfigKey(_parse_float(lo=0.0), default=9.0),
    "gamma0": ConfigKey(_parse_float(lo=0.0), default=1.0),
    "gamma_prior": ConfigKey(_parse_choice("exponential", "uniform"), default="exponential"),
    "gamma_rate": ConfigKey(_parse_float(lo=0.0), default=1.0),
    "gamma_kappa": ConfigKey(_parse_float(lo=0.0), default=50.0),
    "alpha_tilde": ConfigKey(_parse_float(lo=0.0, hi=0.5), default=None),
    "n_samples": ConfigKey(_parse_int(lo=0), default=1000),
    "burn_in": ConfigKey(_parse_int(lo=0), default=1000),
    "lag": ConfigKey(_parse_int(lo=1), default=2),
    "tau": ConfigKey(_parse_float(lo=0.0, hi=1.0), default=None),
    "kernel_mix_weight": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.8),
    "upsilons": ConfigKey(_parse_floats_csv, default=(0.005, 0.02, 0.08)),
    "gamma_upsilons": ConfigKey(_parse_floats_csv, default=None),
    "aux_inner_steps": ConfigKey(_parse_int(lo=1), default=None),
    "seed": ConfigKey(_parse_int(), default=0),
    "threads": ConfigKey(_parse_int(lo=1), default=1),
}


@dataclass(frozen=True)
class RunConfig:
    """Validated flat configuration for the fit subcommands."""

    values: dict[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def as_dict(self) -> dict[str, Any]:
        return dict(self.values)


def parse_config_text(text: str, schema: dict[str, ConfigKey]) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"duplicate config key {key!r}")
        try:
            values[key] = schema[key].parse(raw)
        except ConfigError as exc:
            raise ConfigError(f"key {key!r}: {exc}") from exc
    for key, spec in schema.items():
        if key not in values:
            if spec.required:
                raise ConfigError(f"missing required config key {key!r}")
            values[key] = spec.default
    return values


def read_config(path: str, schema: Optional[dict[str, ConfigKey]] = None) -> RunConfig:
    """Parse and validate a key=value config file against the fit schema."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return RunConfig(parse_config_text(text, schema or FIT_SCHEMA))


def write_manifest(path: str, config: dict, seed: int, outputs: list[str], started: str, finished: str) -> None:
    manifest = {
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "version": _package_version(),
        "started": started,
        "finished": finished,
        "outputs": outputs,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("graphpop")
    except Exception:
        return "0.1.0"


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
