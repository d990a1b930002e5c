"""Replicated simulation studies: concentration, prediction and robustness.

Every study draws a fresh truth per replicate, simulates data, fits the chosen
hierarchical model and aggregates over replicates. Replicates are deterministic
given (seed, replicate index) and independent, so they can be spread over a
thread pool; aggregation order is fixed by replicate index.

Scales default to desk size (tens of replicates, short chains). The
paper-scale regimes are reachable through the same configuration but take
CPU-days.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import sqrt
from typing import Optional

import numpy as np
from scipy import stats as sstats

from .diagnostics import (
    Chi2Config,
    DegreeQuantile,
    StatisticSpec,
    bayes_chi2,
    posterior_predictive_check,
)
from .errors import DomainError, InvalidSpecError
from .graphs import (
    GeneratorSpec,
    GraphPopulation,
    LabelledGraph,
    majority_vote,
    n_pairs,
    sample_generator,
)
from .inference import (
    CerCerHyper,
    McmcConfig,
    SnSnHyper,
    Trace,
    fit_cer_cer,
    fit_sn_sn,
    posterior_summary,
    snf_sample_matrix,
    spawn_rng,
)
from .metrics import MetricSpec
from .models import CerParams, SnfParams, cer_sample_matrix


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 63-bit child seed for (seed, key...)."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1)[0]
    return int(state) & 0x7FFFFFFFFFFFFFFF


@dataclass(frozen=True)
class StudyConfig:
    """Shared configuration for the simulation studies.

    ``data_alpha``/``data_gamma`` are the true dispersion of the simulated data
    and double as the prior concentration hyperparameters, mirroring the
    simulation regimes. Study-specific fields (test set size, predictive draw
    count, misspecification parameters, diagnostic knobs) are ignored by the
    studies that do not use them.
    """

    generator: GeneratorSpec
    model: str = "cer"  # "cer" | "snf"
    n_vertices: int = 50
    sample_sizes: tuple[int, ...] = (3, 5, 7, 10)
    n_replicates: int = 20
    epsilons: tuple[float, ...] = (1.0, 2.0, 3.0)
    delta: float = 0.05
    seed: int = 0
    data_alpha: float = 0.01
    data_gamma: Optional[float] = None  # default: log((1-alpha)/alpha) at data_alpha
    metric: MetricSpec = MetricSpec()
    mcmc: McmcConfig = McmcConfig(n_samples=250, burn_in=10_000, lag=5)
    alpha_tilde: Optional[float] = None  # SNF plug-in; None derives it per fit
    # Prediction study.
    test_size: int = 20
    n_predictive: int = 20
    # Robustness study.
    misspecification: str = "dependence"  # "none" | "dependence" | "metric"
    persist_p: float = 0.9
    flip_p: float = 0.5
    statistics: tuple[StatisticSpec, ...] = (
        DegreeQuantile(0.1),
        DegreeQuantile(0.5),
        DegreeQuantile(0.9),
    )
    ppc_draws: int = 200
    chi2_sims: int = 300
    chi2_max_draws: int = 100
    nominal_level: float = 0.05
    chi2_threshold: float = 0.5
    n_threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(self.sample_sizes))
        object.__setattr__(self, "epsilons", tuple(self.epsilons))
        object.__setattr__(self, "statistics", tuple(self.statistics))
        if self.model not in ("cer", "snf"):
            raise InvalidSpecError(f"model must be 'cer' or 'snf', got {self.model!r}")
        if self.n_replicates < 1:
            raise InvalidSpecError("n_replicates must be at least 1")
        if any(e <= 0 for e in self.epsilons):
            raise InvalidSpecError("epsilons must be positive")
        if not 0.0 < self.delta < 1.0:
            raise InvalidSpecError("delta must lie in (0, 1)")
        if self.misspecification not in ("none", "dependence", "metric"):
            raise InvalidSpecError(f"unknown misspecification {self.misspecification!r}")
        if not 0.0 < self.data_alpha < 0.5:
            raise InvalidSpecError("data_alpha must lie in (0, 0.5)")

    @property
    def resolved_gamma(self) -> float:
        if self.data_gamma is not None:
            return self.data_gamma
        return float(np.log((1.0 - self.data_alpha) / self.data_alpha))


def _fit_once(
    cfg: StudyConfig, pop: GraphPopulation, g0: LabelledGraph, fit_seed: int
) -> Trace:
    mcmc = replace(cfg.mcmc, seed=fit_seed)
    if cfg.model == "cer":
        hyper = CerCerHyper(g0=g0, alpha0=cfg.data_alpha)
        return fit_cer_cer(pop, hyper, mcmc)
    hyper = SnSnHyper(g0=g0, gamma0=cfg.resolved_gamma, metric=cfg.metric)
    if cfg.alpha_tilde is not None:
        alpha_tilde = cfg.alpha_tilde
    else:
        pre = fit_cer_cer(pop, CerCerHyper(g0=g0, alpha0=cfg.data_alpha), mcmc)
        alpha_tilde = float(np.clip(pre.params.mean(), 1e-6, 0.5 - 1e-6))
    return fit_sn_sn(pop, hyper, mcmc, alpha_tilde)


def _simulate_truth_and_data(
    cfg: StudyConfig, n: int, rng: np.random.Generator
) -> tuple[LabelledGraph, LabelledGraph, GraphPopulation]:
    """Draw the true mode, a prior mode perturbed from it, and n observations."""
    truth = sample_generator(cfg.generator, cfg.n_vertices, rng)
    if cfg.model == "cer":
        params = CerParams(truth, cfg.data_alpha)
        g0_vec = cer_sample_matrix(params, 1, rng)[0]
        data = cer_sample_matrix(params, n, rng)
    else:
        params = SnfParams(truth, cfg.resolved_gamma, cfg.metric)
        ne = n_pairs(cfg.n_vertices)
        steps = cfg.mcmc.resolved_aux_steps(ne)
        tau = cfg.mcmc.resolved_tau(ne)
        g0_vec = snf_sample_matrix(params, 1, steps, tau, rng)[0]
        data = snf_sample_matrix(params, n, steps, tau, rng)
    g0 = LabelledGraph.from_vector(cfg.n_vertices, g0_vec)
    pop = GraphPopulation(
        tuple(LabelledGraph.from_vector(cfg.n_vertices, row) for row in data)
    )
    return truth, g0, pop


def _model_metric(cfg: StudyConfig) -> MetricSpec:
    return MetricSpec(kind="hamming") if cfg.model == "cer" else cfg.metric


def _run_replicates(cfg: StudyConfig, worker):
    """Map ``worker(replicate_index)`` over replicates, order fixed by index."""
    indices = range(cfg.n_replicates)
    if cfg.n_threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_threads) as pool:
            return list(pool.map(worker, indices))
    return [worker(r) for r in indices]


def binomial_ci_half_width(fraction: float, count: int) -> float:
    return 1.96 * sqrt(max(fraction * (1.0 - fraction), 0.0) / count) if count else 0.0


# ---------------------------------------------------------------------------
# Concentration study
# ---------------------------------------------------------------------------


def concentration_study(cfg: StudyConfig) -> list[dict]:
    """Posterior concentration around the true mode as the sample size grows.

    Per replicate, reports whether at least 1-delta of the kept posterior mass
    lies within each epsilon-ball of the truth, plus the distance from the
    posterior mode estimate to the truth. Rows aggregate over replicates.
    """
    metric = _model_metric(cfg)

    def one(args):
        n, r = args
        rng = spawn_rng(derive_seed(cfg.seed, n, r))
        truth, g0, pop = _simulate_truth_and_data(cfg, n, rng)
        trace = _fit_once(cfg, pop, g0, derive_seed(cfg.seed, n, r, 1))
        dists = np.array([metric.distance(g, truth) for g in trace.graphs])
        inside = {eps: float((dists <= eps).mean()) >= 1.0 - cfg.delta for eps in cfg.epsilons}
        mode_est = posterior_summary(trace).mode_graph
        return inside, metric.distance(mode_est, truth)

    rows = []
    for n in cfg.sample_sizes:
        results = _run_replicates(cfg, lambda r, n=n: one((n, r)))
        mode_dists = [d for _, d in results]
        for eps in cfg.epsilons:
            frac = float(np.mean([res[0][eps] for res in results]))
            rows.append(
                {
                    "n": n,
                    "generator": type(cfg.generator).__name__,
                    "epsilon": eps,
                    "fraction_concentrated": frac,
                    "ci_half_width": binomial_ci_half_width(frac, cfg.n_replicates),
                    "mean_mode_distance": float(np.mean(mode_dists)),
                }
            )
    return rows


# ---------------------------------------------------------------------------
# Majority-vote comparison
# ---------------------------------------------------------------------------


def majority_vote_comparison(cfg: StudyConfig) -> list[dict]:
    """Point-estimate accuracy of the posterior mode versus the majority vote."""
    for n in cfg.sample_sizes:
        if n % 2 == 0:
            raise InvalidSpecError("majority-vote comparison requires odd sample sizes")
    metric = _model_metric(cfg)

    def one(args):
        n, r = args
        rng = spawn_rng(derive_seed(cfg.seed, n, r))
        truth, g0, pop = _simulate_truth_and_data(cfg, n, rng)
        trace = _fit_once(cfg, pop, g0, derive_seed(cfg.seed, n, r, 1))
        d_model = metric.distance(posterior_summary(trace).mode_graph, truth)
        d_mv = metric.distance(majority_vote(pop), truth)
        return d_model, d_mv

    rows = []
    for n in cfg.sample_sizes:
        results = _run_replicates(cfg, lambda r, n=n: one((n, r)))
        for eps in cfg.epsilons:
            model_frac = float(np.mean([dm <= eps for dm, _ in results]))
            mv_frac = float(np.mean([dv <= eps for _, dv in results]))
            rows.append(
                {
                    "n": n,
                    "generator": type(cfg.generator).__name__,
                    "epsilon": eps,
                    "majority_vote_fraction": mv_frac,
                    "model_fraction": model_frac,
                }
            )
    return rows


# ---------------------------------------------------------------------------
# Prediction study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictionResult:
    psi_delta: float
    rho_delta: float

    def __post_init__(self):
        if self.psi_delta < 0 or self.rho_delta < 0:
            raise DomainError("radii must be nonnegative")

    @property
    def ratio(self) -> float:
        return self.psi_delta / self.rho_delta


def model_contour_radius(cfg: StudyConfig, truth: LabelledGraph, rng) -> float:
    """Smallest radius whose model ball around the truth holds >= 1-delta mass.

    Exact for the CER family (a Binomial quantile of the Hamming distance);
    Monte Carlo under the configured metric for the SNF.
    """
    if cfg.model == "cer":
        ne = n_pairs(cfg.n_vertices)
        return float(sstats.binom.ppf(1.0 - cfg.delta, ne, cfg.data_alpha))
    params = SnfParams(truth, cfg.resolved_gamma, cfg.metric)
    ne = n_pairs(cfg.n_vertices)
    draws = snf_sample_matrix(
        params, 2000, cfg.mcmc.resolved_aux_steps(ne), cfg.mcmc.resolved_tau(ne), rng
    )
    truth_vec = truth.to_vector()
    dists = np.array(
        [
            cfg.metric.distance(
                LabelledGraph.from_vector(cfg.n_vertices, row), truth
            )
            for row in draws
        ]
    )
    return float(np.quantile(dists, 1.0 - cfg.delta))


def prediction_study(cfg: StudyConfig) -> list[dict]:
    """Covering radius of the predictive relative to the model contour radius.

    Per replicate, one sample of size max(sample_sizes) + test_size is drawn
    and partitioned: each training size n uses the first n graphs, and all
    share the held-out test set, so ratios at different n are compared on
    common data. The covering radius estimate is the 1-delta quantile over
    predictive draws of the minimum distance to the test set.
    """
    metric = _model_metric(cfg)
    max_n = max(cfg.sample_sizes)

    def one(r):
        rng = spawn_rng(derive_seed(cfg.seed, r))
        truth, g0, full = _simulate_truth_and_data(cfg, max_n + cfg.test_size, rng)
        test = full.graphs[max_n:]
        rho = model_contour_radius(cfg, truth, rng)
        out = {}
        for n in cfg.sample_sizes:
            train = GraphPopulation(full.graphs[:n])
            trace = _fit_once(cfg, train, g0, derive_seed(cfg.seed, r, n, 1))
            pred_rng = spawn_rng(derive_seed(cfg.seed, r, n, 2))
            idx = pred_rng.integers(len(trace), size=cfg.n_predictive)
            minima = np.empty(cfg.n_predictive)
            for out_i, trace_i in enumerate(idx):
                mode, theta = trace.graphs[trace_i], float(trace.params[trace_i])
                if cfg.model == "cer":
                    pred_vec = cer_sample_matrix(CerParams(mode, theta), 1, pred_rng)[0]
                else:
                    ne = n_pairs(cfg.n_vertices)
                    pred_vec = snf_sample_matrix(
                        SnfParams(mode, theta, cfg.metric),
                        1,
                        cfg.mcmc.resolved_aux_steps(ne),
                        cfg.mcmc.resolved_tau(ne),
                        pred_rng,
                    )[0]
                pred = LabelledGraph.from_vector(cfg.n_vertices, pred_vec)
                minima[out_i] = min(metric.distance(pred, t) for t in test)
            psi = float(np.quantile(minima, 1.0 - cfg.delta))
            out[n] = PredictionResult(psi, rho)
        return out

    results = _run_replicates(cfg, one)
    rows = []
    for n in cfg.sample_sizes:
        per_n = [res[n] for res in results]
        rows.append(
            {
                "n": n,
                "generator": type(cfg.generator).__name__,
                "psi_delta": float(np.mean([p.psi_delta for p in per_n])),
                "rho_delta": float(np.mean([p.rho_delta for p in per_n])),
                "ratio": float(np.mean([p.ratio for p in per_n])),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Markov misspecification generator and robustness study
# ---------------------------------------------------------------------------


def dynamic_markov_sample(
    g_init: LabelledGraph,
    persist_p: float,
    flip_p: float,
    n: int,
    rng: np.random.Generator,
) -> GraphPopulation:
    """Markov chain of graphs: each edge indicator persists w.p. persist_p, else
    is resampled Bernoulli(flip_p), independently across edges given the
    previous graph. The chain starts at ``g_init``.
    """
    if not 0.0 <= persist_p <= 1.0 or not 0.0 <= flip_p <= 1.0:
        raise DomainError("persist_p and flip_p must lie in [0, 1]")
    if n < 1:
        raise DomainError("need at least one graph")
    ne = g_init.n_pairs
    current = g_init.to_vector()
    graphs = [g_init]
    for _ in range(n - 1):
        keep = rng.random(ne) < persist_p
        fresh = (rng.random(ne) < flip_p).astype(np.uint8)
        current = np.where(keep, current, fresh).astype(np.uint8)
        graphs.append(LabelledGraph.from_vector(g_init.n_vertices, current))
    return GraphPopulation(tuple(graphs))


def _misspecified_data(
    cfg: StudyConfig, n: int, rng: np.random.Generator
) -> tuple[LabelledGraph, GraphPopulation]:
    truth = sample_generator(cfg.generator, cfg.n_vertices, rng)
    if cfg.misspecification == "none":
        if cfg.model == "cer":
            mat = cer_sample_matrix(CerParams(truth, cfg.data_alpha), n, rng)
        else:
            ne = n_pairs(cfg.n_vertices)
            mat = snf_sample_matrix(
                SnfParams(truth, cfg.resolved_gamma, cfg.metric),
                n,
                cfg.mcmc.resolved_aux_steps(ne),
                cfg.mcmc.resolved_tau(ne),
                rng,
            )
    elif cfg.misspecification == "dependence":
        return truth, dynamic_markov_sample(truth, cfg.persist_p, cfg.flip_p, n, rng)
    else:  # "metric": generate from the other family
        if cfg.model == "cer":
            ne = n_pairs(cfg.n_vertices)
            diffusion = MetricSpec(kind="diffusion", t=cfg.metric.t)
            mat = snf_sample_matrix(
                SnfParams(truth, cfg.resolved_gamma, diffusion),
                n,
                cfg.mcmc.resolved_aux_steps(ne),
                cfg.mcmc.resolved_tau(ne),
                rng,
            )
        else:
            mat = cer_sample_matrix(CerParams(truth, cfg.data_alpha), n, rng)
    pop = GraphPopulation(
        tuple(LabelledGraph.from_vector(cfg.n_vertices, row) for row in mat)
    )
    return truth, pop


def robustness_study(cfg: StudyConfig) -> list[dict]:
    """Rejection rates of both diagnostics under the configured misspecification.

    The prior mode is centred at a perturbation of the data's starting graph,
    as in the other studies. Rejection means a posterior predictive tail
    probability below the nominal level, or a chi-squared exceedance fraction
    above the configured threshold. The chi-squared binning coarsens to n
    equal bins when n falls below the default five.
    """
    fit_metric = None if cfg.model == "cer" else cfg.metric

    def one(args):
        n, r = args
        n_bins = min(5, n)
        chi2_cfg = Chi2Config(tuple(np.linspace(0.0, 1.0, n_bins + 1)))
        rng = spawn_rng(derive_seed(cfg.seed, n, r))
        truth, pop = _misspecified_data(cfg, n, rng)
        g0_vec = cer_sample_matrix(CerParams(truth, cfg.data_alpha), 1, rng)[0]
        g0 = LabelledGraph.from_vector(cfg.n_vertices, g0_vec)
        trace = _fit_once(cfg, pop, g0, derive_seed(cfg.seed, n, r, 1))
        out = {}
        for stat in cfg.statistics:
            ppc = posterior_predictive_check(
                trace, cfg.model, pop, stat, cfg.ppc_draws, rng, metric=fit_metric
            )
            chi2 = bayes_chi2(
                trace,
                cfg.model,
                pop,
                stat,
                chi2_cfg,
                rng,
                metric=fit_metric,
                n_sims=cfg.chi2_sims,
                max_draws=cfg.chi2_max_draws,
            )
            out[stat.name] = (
                ppc.tail_prob < cfg.nominal_level,
                chi2.exceedance_fraction > cfg.chi2_threshold,
            )
        return out

    rows = []
    for n in cfg.sample_sizes:
        results = _run_replicates(cfg, lambda r, n=n: one((n, r)))
        for stat in cfg.statistics:
            ppc_rate = float(np.mean([res[stat.name][0] for res in results]))
            chi2_rate = float(np.mean([res[stat.name][1] for res in results]))
            rows.append(
                {
                    "model": cfg.model,
                    "misspecification": cfg.misspecification,
                    "n": n,
                    "statistic": stat.name,
                    "ppc_rejection_rate": ppc_rate,
                    "chi2_rejection_rate": chi2_rate,
                }
            )
    return rows
