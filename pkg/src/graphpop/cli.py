"""Command-line entry points.

Subcommands: simulate, fit-cer, fit-sn, frechet, distances, mds, diagnose,
experiment. Every run writes its outputs plus a manifest (config, hash, seed,
version, timestamps, file list) under the output directory. Exit codes: 0 on
success, 1 on validation errors, 2 on runtime failures; errors go to stderr as
one JSON line.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import io as gio
from .diagnostics import (
    Chi2Config,
    DegreeQuantile,
    EdgeCount,
    MeanDegree,
    bayes_chi2,
    posterior_predictive_check,
    suggest_gamma_steps,
)
from .errors import (
    ConfigError,
    DomainError,
    EmptyPopulationError,
    EmptyTraceError,
    GraphPopError,
    IndivisiblePopulationError,
    InvalidSpecError,
    NonBinaryEntryError,
    NonSymmetricError,
    NonZeroDiagonalError,
    ParseError,
    SchemaError,
    SizeMismatchError,
    SpaceTooLargeError,
    StepTooLargeError,
    TooFewObservationsError,
)
from .experiments import (
    StudyConfig,
    concentration_study,
    majority_vote_comparison,
    prediction_study,
    robustness_study,
)
from .graphs import (
    ErdosRenyi,
    GraphPopulation,
    LabelledGraph,
    RandomGeometric,
    SmallWorld,
    StochasticBlockModel,
    majority_vote,
    sample_generator,
)
from .inference import (
    CerCerHyper,
    ExponentialPrior,
    McmcConfig,
    SnSnHyper,
    TruncatedUniformPrior,
    fit_cer_cer,
    fit_sn_sn,
    posterior_summary,
    spawn_rng,
)
from .io import ConfigKey, _parse_choice, _parse_float, _parse_int, _parse_ints_csv, _parse_str
from .metrics import MetricSpec, classical_mds, distance_matrix
from .models import CerParams, SnfParams, cer_sample_matrix, sample_frechet_mean
from .inference import snf_sample_matrix

_VALIDATION_ERRORS = (
    ConfigError,
    ParseError,
    SchemaError,
    InvalidSpecError,
    DomainError,
    EmptyPopulationError,
    EmptyTraceError,
    SizeMismatchError,
    SpaceTooLargeError,
    StepTooLargeError,
    TooFewObservationsError,
    IndivisiblePopulationError,
    NonSymmetricError,
    NonBinaryEntryError,
    NonZeroDiagonalError,
    ValueError,
)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _fail(exc: Exception, code: int) -> int:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
    print(line, file=sys.stderr)
    return code


def _metric_from(values: dict) -> MetricSpec:
    return MetricSpec(kind=values["metric"], t=values["t"], phi=values["phi"])


def _stat_from_name(name: str):
    if name == "edge_count":
        return EdgeCount()
    if name == "mean_degree":
        return MeanDegree()
    if name.startswith("degree_q"):
        return DegreeQuantile(float(name[len("degree_q") :]))
    raise ConfigError(f"unknown statistic {name!r}")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SIM_SCHEMA = {
    "kind": ConfigKey(_parse_choice("er", "sbm", "sw", "rgg", "cer", "snf"), required=True),
    "out": ConfigKey(_parse_str, default="out"),
    "n_vertices": ConfigKey(_parse_int(lo=1), required=True),
    "n_graphs": ConfigKey(_parse_int(lo=1), default=1),
    "seed": ConfigKey(_parse_int(), default=0),
    "p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.1),
    "radius": ConfigKey(_parse_float(lo=0.0), default=0.175),
    "n_blocks": ConfigKey(_parse_int(lo=1), default=3),
    "membership_probs": ConfigKey(gio._parse_floats_csv, default=None),
    "within_p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.16),
    "between_p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.075),
    "lattice_degree": ConfigKey(_parse_int(lo=2), default=2),
    "rewire_p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.2),
    "mode": ConfigKey(_parse_str, default=None),
    "alpha": ConfigKey(_parse_float(lo=0.0, hi=0.5), default=0.05),
    "gamma": ConfigKey(_parse_float(lo=0.0), default=1.0),
    "metric": ConfigKey(_parse_choice("hamming", "diffusion"), default="hamming"),
    "t": ConfigKey(_parse_float(lo=0.0), default=1.0),
    "phi": ConfigKey(_parse_choice("identity", "square"), default="identity"),
    "inner_steps": ConfigKey(_parse_int(lo=1), default=None),
}


def _cmd_simulate(args) -> int:
    values = gio.read_config(args.config, SIM_SCHEMA).as_dict()
    if args.out:
        values["out"] = args.out
    out = gio.ensure_dir(values["out"])
    started = _now()
    rng = spawn_rng(values["seed"])
    n, count = values["n_vertices"], values["n_graphs"]
    kind = values["kind"]
    if kind in ("er", "sbm", "sw", "rgg"):
        spec = _generator_from(values)
        graphs = tuple(sample_generator(spec, n, rng) for _ in range(count))
    else:
        if values["mode"] is None:
            raise ConfigError("key 'mode' (adjacency CSV path) is required for model sampling")
        mode = gio.read_adjacency_csv(values["mode"])
        if mode.n_vertices != n:
            raise SchemaError(f"mode file has n={mode.n_vertices}, config says {n}", field="mode")
        if kind == "cer":
            mat = cer_sample_matrix(CerParams(mode, values["alpha"]), count, rng)
        else:
            params = SnfParams(mode, values["gamma"], _metric_from(values))
            steps = values["inner_steps"] or 20 * mode.n_pairs
            mat = snf_sample_matrix(params, count, steps, 1.0 / mode.n_pairs, rng)
        graphs = tuple(LabelledGraph.from_vector(n, row) for row in mat)
    pop = GraphPopulation(graphs, tuple(f"g{k + 1}" for k in range(count)))
    pop_path = f"{out}/population.ndjson"
    gio.write_population(pop, pop_path)
    gio.write_manifest(
        f"{out}/manifest.json", values, values["seed"], ["population.ndjson"], started, _now()
    )
    return 0


def _generator_from(values: dict):
    kind = values["kind"] if "kind" in values else values["generator"]
    if kind == "er":
        return ErdosRenyi(values["p"])
    if kind == "sbm":
        probs = values["membership_probs"]
        if probs is None:
            probs = tuple(1.0 / values["n_blocks"] for _ in range(values["n_blocks"]))
        return StochasticBlockModel(values["n_blocks"], probs, values["within_p"], values["between_p"])
    if kind == "sw":
        return SmallWorld(values["lattice_degree"], values["rewire_p"])
    if kind == "rgg":
        return RandomGeometric(values["radius"])
    raise ConfigError(f"unknown generator {kind!r}")


# ---------------------------------------------------------------------------
# fit-cer / fit-sn
# ---------------------------------------------------------------------------


def _load_fit_inputs(args):
    cfg = gio.read_config(args.config).as_dict()
    if args.out:
        cfg["out"] = args.out
    pop = gio.read_population(cfg["data"])
    if cfg["g0"] is not None:
        g0 = gio.read_adjacency_csv(cfg["g0"])
        if g0.n_vertices != pop.n_vertices:
            raise SchemaError(
                f"g0 has n={g0.n_vertices} but the data has n={pop.n_vertices}", field="g0"
            )
    else:
        g0 = majority_vote(pop)
    return cfg, pop, g0


def _mcmc_from(cfg: dict, upsilons) -> McmcConfig:
    return McmcConfig(
        n_samples=cfg["n_samples"],
        burn_in=cfg["burn_in"],
        lag=cfg["lag"],
        flip_prob_tau=cfg["tau"],
        kernel_mix_weight=cfg["kernel_mix_weight"],
        step_sizes_upsilon=upsilons,
        aux_inner_steps=cfg["aux_inner_steps"],
        seed=cfg["seed"],
    )


def _write_fit_outputs(out: str, cfg: dict, trace, summary_extra: dict, started: str) -> None:
    gio.write_trace(trace, f"{out}/trace.ndjson")
    summ = posterior_summary(trace)
    top = [
        {"edges": gio._edges_1based(g), "frequency": f}
        for g, f in summ.frequencies[:20]
    ]
    report = {
        "mode_edges": gio._edges_1based(summ.mode_graph),
        "mode_frequency": summ.frequencies[0][1],
        "scalar_name": trace.param_name,
        "scalar_mean": summ.scalar_mean,
        "credible_interval": list(summ.interval),
        "level": summ.level,
        "acceptance_rates": trace.acceptance_rates(),
        "top_graphs": top,
        **summary_extra,
    }
    with open(f"{out}/summary.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = ["trace.ndjson", "summary.json"]
    gio.write_manifest(f"{out}/manifest.json", _jsonable(cfg), cfg["seed"], outputs, started, _now())


def _jsonable(cfg: dict) -> dict:
    return {
        k: (list(v) if isinstance(v, tuple) else v)
        for k, v in cfg.items()
    }


def _cmd_fit_cer(args) -> int:
    cfg, pop, g0 = _load_fit_inputs(args)
    out = gio.ensure_dir(cfg["out"])
    started = _now()
    hyper = CerCerHyper(g0=g0, alpha0=cfg["alpha0"], beta_a=cfg["beta_a"], beta_b=cfg["beta_b"])
    trace = fit_cer_cer(pop, hyper, _mcmc_from(cfg, cfg["upsilons"]))
    _write_fit_outputs(out, cfg, trace, {"model": "cer"}, started)
    return 0


def _cmd_fit_sn(args) -> int:
    cfg, pop, g0 = _load_fit_inputs(args)
    out = gio.ensure_dir(cfg["out"])
    started = _now()
    metric = _metric_from(cfg)
    if cfg["gamma_prior"] == "exponential":
        prior = ExponentialPrior(cfg["gamma_rate"])
    else:
        prior = TruncatedUniformPrior(cfg["gamma_kappa"])
    hyper = SnSnHyper(g0=g0, gamma0=cfg["gamma0"], metric=metric, gamma_prior=prior)

    # Plug-in dispersion for the auxiliary density: posterior mean alpha from a
    # CER/CER pre-fit, unless the config pins alpha_tilde.
    alpha_tilde = cfg["alpha_tilde"]
    if alpha_tilde is None:
        pre_hyper = CerCerHyper(g0=g0, alpha0=cfg["alpha0"], beta_a=cfg["beta_a"], beta_b=cfg["beta_b"])
        pre = fit_cer_cer(pop, pre_hyper, _mcmc_from(cfg, cfg["upsilons"]))
        alpha_tilde = float(np.clip(pre.params.mean(), 1e-6, 0.5 - 1e-6))

    gamma_ups = cfg["gamma_upsilons"]
    if gamma_ups is None:
        base_cfg = _mcmc_from(cfg, cfg["upsilons"])
        gamma_ups = suggest_gamma_steps(g0, metric, base_cfg, spawn_rng(cfg["seed"], 7))
    trace = fit_sn_sn(pop, hyper, _mcmc_from(cfg, gamma_ups), alpha_tilde)
    extra = {"model": "snf", "alpha_tilde": alpha_tilde, "gamma_upsilons": list(gamma_ups)}
    _write_fit_outputs(out, cfg, trace, extra, started)
    return 0


# ---------------------------------------------------------------------------
# frechet / distances / mds
# ---------------------------------------------------------------------------


def _cmd_frechet(args) -> int:
    pop = gio.read_population(args.data)
    metric = MetricSpec(kind=args.metric, t=args.t)
    out = gio.ensure_dir(args.out)
    started = _now()
    if pop.n_vertices <= 5:
        mean = sample_frechet_mean(pop, metric)
    else:
        # Restricted search: the data plus the majority vote as candidates.
        candidates = list(pop.graphs) + [majority_vote(pop)]
        mean = sample_frechet_mean(pop, metric, candidates=candidates)
    gio.write_adjacency_csv(mean, f"{out}/frechet_mean.csv")
    config = {"data": args.data, "metric": args.metric, "t": args.t, "out": args.out}
    gio.write_manifest(f"{out}/manifest.json", config, 0, ["frechet_mean.csv"], started, _now())
    return 0


def _cmd_distances(args) -> int:
    pop = gio.read_population(args.data)
    metric = MetricSpec(kind=args.metric, t=args.t)
    out = gio.ensure_dir(args.out)
    started = _now()
    dmat = distance_matrix(pop, metric)
    gio.write_distance_matrix(dmat, f"{out}/distances.csv")
    config = {"data": args.data, "metric": args.metric, "t": args.t, "out": args.out}
    gio.write_manifest(f"{out}/manifest.json", config, 0, ["distances.csv"], started, _now())
    return 0


def _cmd_mds(args) -> int:
    pop = gio.read_population(args.data)
    metric = MetricSpec(kind=args.metric, t=args.t)
    out = gio.ensure_dir(args.out)
    started = _now()
    dmat = distance_matrix(pop, metric)
    coords = classical_mds(dmat, args.dim)
    ids = pop.ids if pop.ids is not None else [f"g{k + 1}" for k in range(len(pop))]
    gio.write_mds_coords(ids, coords, f"{out}/mds.csv")
    config = {
        "data": args.data,
        "metric": args.metric,
        "t": args.t,
        "dim": args.dim,
        "out": args.out,
    }
    gio.write_manifest(f"{out}/manifest.json", config, 0, ["mds.csv"], started, _now())
    return 0


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------


def _cmd_diagnose(args) -> int:
    pop = gio.read_population(args.data)
    trace = gio.read_trace(args.trace)
    stat = _stat_from_name(args.stat)
    metric = MetricSpec(kind=args.metric, t=args.t) if args.model == "snf" else None
    out = gio.ensure_dir(args.out)
    started = _now()
    rng = spawn_rng(args.seed)
    ppc = posterior_predictive_check(
        trace, args.model, pop, stat, args.k, rng, metric=metric
    )
    chi2 = bayes_chi2(
        trace, args.model, pop, stat, Chi2Config(), rng, metric=metric,
        n_sims=args.chi2_sims, max_draws=args.max_draws,
    )
    report = {
        "statistic": args.stat,
        "observed": ppc.eta0,
        "ppc_tail_prob": ppc.tail_prob,
        "chi2_exceedance_fraction": chi2.exceedance_fraction,
        "chi2_threshold": chi2.threshold,
        "chi2_rb_quantiles": {
            "q25": float(np.quantile(chi2.rb_values, 0.25)),
            "q50": float(np.quantile(chi2.rb_values, 0.5)),
            "q75": float(np.quantile(chi2.rb_values, 0.75)),
        },
    }
    with open(f"{out}/diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    gio.write_qq_csv(chi2.rb_values, Chi2Config().n_bins - 1, f"{out}/chi2_qq.csv")
    config = {
        "data": args.data, "trace": args.trace, "model": args.model, "stat": args.stat,
        "metric": args.metric, "t": args.t, "k": args.k, "seed": args.seed,
    }
    gio.write_manifest(
        f"{out}/manifest.json", config, args.seed,
        ["diagnostics.json", "chi2_qq.csv"], started, _now(),
    )
    return 0


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

EXPERIMENT_SCHEMA = {
    "study": ConfigKey(
        _parse_choice("concentration", "comparison", "prediction", "robustness"), required=True
    ),
    "out": ConfigKey(_parse_str, default="out"),
    "generator": ConfigKey(_parse_choice("er", "sbm", "sw", "rgg"), default="er"),
    "p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.1),
    "radius": ConfigKey(_parse_float(lo=0.0), default=0.175),
    "n_blocks": ConfigKey(_parse_int(lo=1), default=3),
    "membership_probs": ConfigKey(gio._parse_floats_csv, default=None),
    "within_p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.16),
    "between_p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.075),
    "lattice_degree": ConfigKey(_parse_int(lo=2), default=2),
    "rewire_p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.2),
    "model": ConfigKey(_parse_choice("cer", "snf"), default="cer"),
    "metric": ConfigKey(_parse_choice("hamming", "diffusion"), default="hamming"),
    "t": ConfigKey(_parse_float(lo=0.0), default=1.0),
    "phi": ConfigKey(_parse_choice("identity", "square"), default="identity"),
    "n_vertices": ConfigKey(_parse_int(lo=2), default=50),
    "sample_sizes": ConfigKey(_parse_ints_csv, default=(3, 5, 7, 10)),
    "n_replicates": ConfigKey(_parse_int(lo=1), default=20),
    "epsilons": ConfigKey(gio._parse_floats_csv, default=(1.0, 2.0, 3.0)),
    "delta": ConfigKey(_parse_float(lo=0.0, hi=1.0), default=0.05),
    "seed": ConfigKey(_parse_int(), default=0),
    "data_alpha": ConfigKey(_parse_float(lo=0.0, hi=0.5), default=0.01),
    "data_gamma": ConfigKey(_parse_float(lo=0.0), default=None),
    "alpha_tilde": ConfigKey(_parse_float(lo=0.0, hi=0.5), default=None),
    "n_samples": ConfigKey(_parse_int(lo=1), default=250),
    "burn_in": ConfigKey(_parse_int(lo=0), default=10000),
    "lag": ConfigKey(_parse_int(lo=1), default=5),
    "tau": ConfigKey(_parse_float(lo=0.0, hi=1.0), default=None),
    "kernel_mix_weight": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.8),
    "upsilons": ConfigKey(gio._parse_floats_csv, default=(0.005, 0.02, 0.08)),
    "aux_inner_steps": ConfigKey(_parse_int(lo=1), default=None),
    "test_size": ConfigKey(_parse_int(lo=1), default=20),
    "n_predictive": ConfigKey(_parse_int(lo=1), default=20),
    "misspecification": ConfigKey(_parse_choice("none", "dependence", "metric"), default="dependence"),
    "persist_p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.9),
    "flip_p": ConfigKey(_parse_float(lo=0.0, hi=1.0, lo_open=False, hi_open=False), default=0.5),
    "statistics": ConfigKey(_parse_str, default="degree_q0.1,degree_q0.5,degree_q0.9"),
    "ppc_draws": ConfigKey(_parse_int(lo=100), default=200),
    "chi2_sims": ConfigKey(_parse_int(lo=10), default=300),
    "chi2_max_draws": ConfigKey(_parse_int(lo=1), default=100),
    "nominal_level": ConfigKey(_parse_float(lo=0.0, hi=1.0), default=0.05),
    "chi2_threshold": ConfigKey(_parse_float(lo=0.0, hi=1.0), default=0.5),
    "threads": ConfigKey(_parse_int(lo=1), default=1),
}

_STUDIES = {
    "concentration": concentration_study,
    "comparison": majority_vote_comparison,
    "prediction": prediction_study,
    "robustness": robustness_study,
}


def _cmd_experiment(args) -> int:
    values = gio.read_config(args.config, EXPERIMENT_SCHEMA).as_dict()
    if args.out:
        values["out"] = args.out
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        values["threads"] = args.threads
    out = gio.ensure_dir(values["out"])
    started = _now()
    gen_values = dict(values)
    gen_values["kind"] = values["generator"]
    stats = tuple(_stat_from_name(s.strip()) for s in values["statistics"].split(","))
    cfg = StudyConfig(
        generator=_generator_from(gen_values),
        model=values["model"],
        n_vertices=values["n_vertices"],
        sample_sizes=values["sample_sizes"],
        n_replicates=values["n_replicates"],
        epsilons=values["epsilons"],
        delta=values["delta"],
        seed=values["seed"],
        data_alpha=values["data_alpha"],
        data_gamma=values["data_gamma"],
        metric=MetricSpec(kind=values["metric"], t=values["t"], phi=values["phi"]),
        mcmc=McmcConfig(
            n_samples=values["n_samples"],
            burn_in=values["burn_in"],
            lag=values["lag"],
            flip_prob_tau=values["tau"],
            kernel_mix_weight=values["kernel_mix_weight"],
            step_sizes_upsilon=values["upsilons"],
            aux_inner_steps=values["aux_inner_steps"],
            seed=values["seed"],
        ),
        alpha_tilde=values["alpha_tilde"],
        test_size=values["test_size"],
        n_predictive=values["n_predictive"],
        misspecification=values["misspecification"],
        persist_p=values["persist_p"],
        flip_p=values["flip_p"],
        statistics=stats,
        ppc_draws=values["ppc_draws"],
        chi2_sims=values["chi2_sims"],
        chi2_max_draws=values["chi2_max_draws"],
        nominal_level=values["nominal_level"],
        chi2_threshold=values["chi2_threshold"],
        n_threads=values["threads"],
    )
    rows = _STUDIES[values["study"]](cfg)
    gio.write_rows_csv(rows, f"{out}/study.csv")
    gio.write_manifest(
        f"{out}/manifest.json", _jsonable(values), values["seed"], ["study.csv"], started, _now()
    )
    return 0


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphpop",
        description="Bayesian modelling of populations of labelled graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample populations from generators or models")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit-cer", help="fit the CER/CER model")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fit_cer)

    p = sub.add_parser("fit-sn", help="fit the SN/SN model (CER pre-fit for the plug-in)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fit_sn)

    for name, func in (("frechet", _cmd_frechet), ("distances", _cmd_distances)):
        p = sub.add_parser(name)
        p.add_argument("--data", required=True)
        p.add_argument("--metric", choices=("hamming", "diffusion"), default="hamming")
        p.add_argument("--t", type=float, default=1.0)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("mds", help="classical multidimensional scaling of a population")
    p.add_argument("--data", required=True)
    p.add_argument("--metric", choices=("hamming", "diffusion"), default="diffusion")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mds)

    p = sub.add_parser("diagnose", help="posterior predictive check and Bayesian chi-squared")
    p.add_argument("--data", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--model", choices=("cer", "snf"), required=True)
    p.add_argument("--metric", choices=("hamming", "diffusion"), default="hamming")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--stat", default="degree_q0.9")
    p.add_argument("--k", type=int, default=200)
    p.add_argument("--chi2-sims", dest="chi2_sims", type=int, default=300)
    p.add_argument("--max-draws", dest="max_draws", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("experiment", help="run a simulation study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        return _fail(exc, 1)
    except GraphPopError as exc:
        return _fail(exc, 2)
    except OSError as exc:
        return _fail(exc, 1)
    except Exception as exc:  # pragma: no cover - unexpected failure path
        return _fail(exc, 2)


if __name__ == "__main__":
    sys.exit(main())
