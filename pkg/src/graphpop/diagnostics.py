"""Model-fit diagnostics: posterior predictive checks and the Bayesian chi-squared.

Both diagnostics reduce a network to a univariate summary (degree quantiles by
default). Replicate populations are simulated per posterior draw: directly for
the CER family, and through inner Metropolis chains for the SNF. The model CDF
needed by the chi-squared has no closed form for either family, so it is
estimated by Monte Carlo; a randomized probability integral transform repairs
the discreteness of the statistic before binning.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy import stats as sstats

from .errors import DomainError, EmptyTraceError, TooFewObservationsError
from .graphs import GraphPopulation, LabelledGraph, n_pairs, pair_positions
from .inference import McmcConfig, Trace, _MetricEngine, snf_mh_matrix
from .metrics import MetricSpec
from .models import CerParams, cer_sample_matrix


# ---------------------------------------------------------------------------
# Univariate network statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DegreeQuantile:
    q: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"quantile level {self.q} outside [0, 1]")

    @property
    def name(self) -> str:
        return f"degree_q{self.q:g}"


@dataclass(frozen=True)
class EdgeCount:
    name: str = "edge_count"


@dataclass(frozen=True)
class MeanDegree:
    name: str = "mean_degree"


StatisticSpec = Union[DegreeQuantile, EdgeCount, MeanDegree]


@lru_cache(maxsize=32)
def _incidence(n_vertices: int) -> np.ndarray:
    """(n_pairs, n_vertices) 0/1 matrix mapping edge indicators to degree sums."""
    ii, jj = pair_positions(n_vertices)
    m = np.zeros((n_pairs(n_vertices), n_vertices), dtype=np.float64)
    m[np.arange(len(ii)), ii] = 1.0
    m[np.arange(len(jj)), jj] = 1.0
    return m


def statistic_values(stat: StatisticSpec, mat: np.ndarray, n_vertices: int) -> np.ndarray:
    """Evaluate the statistic on every row of an edge-indicator matrix."""
    if isinstance(stat, EdgeCount):
        return mat.sum(axis=1).astype(np.float64)
    if isinstance(stat, MeanDegree):
        return 2.0 * mat.sum(axis=1) / n_vertices
    degrees = mat.astype(np.float64) @ _incidence(n_vertices)
    return np.quantile(degrees, stat.q, axis=1)


def statistic_of_population(stat: StatisticSpec, pop_mat: np.ndarray, n_vertices: int) -> float:
    """The statistic averaged over the networks of one population."""
    return float(statistic_values(stat, pop_mat, n_vertices).mean())


def _simulate_population(
    model: str,
    mode: LabelledGraph,
    theta: float,
    size: int,
    rng: np.random.Generator,
    metric: Optional[MetricSpec],
    inner_steps: int,
    tau: float,
) -> np.ndarray:
    if model == "cer":
        return cer_sample_matrix(CerParams(mode, theta), size, rng)
    engine = _MetricEngine(metric, mode.n_vertices)
    states, _ = snf_mh_matrix(
        mode.to_vector(), theta, engine, size, inner_steps, tau, rng
    )
    return states


def _resolve_sim_knobs(model, metric, inner_steps, tau, n_vertices):
    if model not in ("cer", "snf"):
        raise DomainError(f"model must be 'cer' or 'snf', got {model!r}")
    if model == "snf" and metric is None:
        raise DomainError("SNF replicate simulation needs the fitted metric")
    ne = n_pairs(n_vertices)
    if inner_steps is None:
        inner_steps = 20 * ne
    if tau is None:
        tau = 1.0 / ne
    return inner_steps, tau


# ---------------------------------------------------------------------------
# Posterior predictive check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PpcResult:
    eta0: float
    draws: np.ndarray
    tail_prob: float


def posterior_predictive_check(
    trace: Trace,
    model: str,
    pop: GraphPopulation,
    stat: StatisticSpec,
    k_draws: int,
    rng: np.random.Generator,
    metric: Optional[MetricSpec] = None,
    inner_steps: Optional[int] = None,
    tau: Optional[float] = None,
) -> PpcResult:
    """Two-sided tail probability of the observed statistic under the predictive.

    For each of ``k_draws`` posterior draws, a replicate population of the
    observed size is simulated from the fitted model and summarized by the
    statistic averaged over its networks; the result compares the observed
    value against those replicates.
    """
    if len(trace) == 0:
        raise EmptyTraceError("posterior predictive check needs a non-empty trace")
    if k_draws < 100:
        raise DomainError("k_draws must be at least 100 for a usable tail estimate")
    n_vertices = pop.n_vertices
    inner_steps, tau = _resolve_sim_knobs(model, metric, inner_steps, tau, n_vertices)
    eta0 = statistic_of_population(stat, pop.to_matrix(), n_vertices)
    idx = rng.integers(len(trace), size=k_draws)
    draws = np.empty(k_draws)
    for out_i, trace_i in enumerate(idx):
        rep = _simulate_population(
            model,
            trace.graphs[trace_i],
            float(trace.params[trace_i]),
            len(pop),
            rng,
            metric,
            inner_steps,
            tau,
        )
        draws[out_i] = statistic_of_population(stat, rep, n_vertices)
    p_hi = float((draws >= eta0).mean())
    p_lo = float((draws <= eta0).mean())
    tail = min(1.0, 2.0 * min(p_hi, p_lo))
    return PpcResult(eta0, draws, tail)


# ---------------------------------------------------------------------------
# Bayesian chi-squared
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chi2Config:
    """Partition of [0, 1) into bins; defaults to five equal bins."""

    bin_edges: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", tuple(self.bin_edges))
        e = self.bin_edges
        if len(e) < 2 or e[0] != 0.0 or e[-1] != 1.0:
            raise DomainError("bin edges must start at 0 and end at 1")
        if any(b <= a for a, b in zip(e, e[1:])):
            raise DomainError("bin edges must be strictly increasing")

    @property
    def n_bins(self) -> int:
        return len(self.bin_edges) - 1


@dataclass(frozen=True)
class Chi2Result:
    rb_values: np.ndarray
    exceedance_fraction: float
    threshold: float


def randomized_pit(
    y_obs: np.ndarray, sim_values: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Randomized probability integral transform against an empirical CDF.

    For a discrete statistic the plain PIT is non-uniform; drawing uniformly
    between the left and right CDF limits at each observation restores
    uniformity under a correctly specified model.
    """
    sims = np.sort(np.asarray(sim_values))
    m = len(sims)
    f_left = np.searchsorted(sims, y_obs, side="left") / m
    f_right = np.searchsorted(sims, y_obs, side="right") / m
    return f_left + rng.random(len(y_obs)) * (f_right - f_left)


def rb_statistic(pit_values: np.ndarray, cfg: Chi2Config) -> float:
    """Binned discrepancy sum_k (C_k - n p_k)^2 / (n p_k) of PIT values."""
    edges = np.asarray(cfg.bin_edges)
    # Keep values inside [0, 1) so the top bin is closed.
    u = np.clip(pit_values, 0.0, np.nextafter(1.0, 0.0))
    counts = np.histogram(u, bins=edges)[0]
    n = len(pit_values)
    p_k = np.diff(edges)
    return float((((counts - n * p_k) ** 2) / (n * p_k)).sum())


def bayes_chi2(
    trace: Trace,
    model: str,
    pop: GraphPopulation,
    stat: StatisticSpec,
    cfg: Chi2Config,
    rng: np.random.Generator,
    metric: Optional[MetricSpec] = None,
    n_sims: int = 500,
    max_draws: Optional[int] = None,
    inner_steps: Optional[int] = None,
    tau: Optional[float] = None,
) -> Chi2Result:
    """Binned goodness-of-fit statistic R^B per posterior draw.

    Per draw, the model CDF of the statistic is estimated from ``n_sims``
    simulations; randomized PIT values of the observations are binned, and
    R^B sums the squared standardized discrepancies between bin counts and
    their expectations. Reported alongside is the fraction of draws whose R^B
    exceeds the 0.95 quantile of chi-squared with D-1 degrees of freedom.
    """
    if len(trace) == 0:
        raise EmptyTraceError("the Bayesian chi-squared needs a non-empty trace")
    n = len(pop)
    if n < cfg.n_bins:
        raise TooFewObservationsError(
            f"{n} observations cannot fill {cfg.n_bins} bins meaningfully"
        )
    n_vertices = pop.n_vertices
    inner_steps, tau = _resolve_sim_knobs(model, metric, inner_steps, tau, n_vertices)
    y_obs = statistic_values(stat, pop.to_matrix(), n_vertices)
    if max_draws is not None and len(trace) > max_draws:
        draw_idx = rng.integers(len(trace), size=max_draws)
    else:
        draw_idx = np.arange(len(trace))
    rb = np.empty(len(draw_idx))
    for out_i, trace_i in enumerate(draw_idx):
        sims = _simulate_population(
            model,
            trace.graphs[trace_i],
            float(trace.params[trace_i]),
            n_sims,
            rng,
            metric,
            inner_steps,
            tau,
        )
        sim_vals = statistic_values(stat, sims, n_vertices)
        u = randomized_pit(y_obs, sim_vals, rng)
        rb[out_i] = rb_statistic(u, cfg)
    threshold = float(sstats.chi2.ppf(0.95, cfg.n_bins - 1))
    return Chi2Result(rb, float((rb > threshold).mean()), threshold)


# ---------------------------------------------------------------------------
# Gamma profiling and trace health
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GammaProfileRow:
    gamma: float
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    mean: float


def gamma_profile(
    mode: LabelledGraph,
    metric: MetricSpec,
    gammas,
    draws_per_gamma: int,
    cfg: McmcConfig,
    rng: np.random.Generator,
) -> list[GammaProfileRow]:
    """Distribution of d(., mode) under the SNF across a grid of gamma values.

    Summaries are box-plot ready (quartiles plus Tukey whiskers). The profile
    informs step-size scales and prior mass placement for gamma.
    """
    gammas = list(gammas)
    if not gammas:
        raise DomainError("gamma grid must be nonempty")
    ne = n_pairs(mode.n_vertices)
    tau = cfg.resolved_tau(ne)
    steps = cfg.resolved_aux_steps(ne)
    engine = _MetricEngine(metric, mode.n_vertices)
    mode_vec = mode.to_vector()
    rows = []
    for gamma in gammas:
        states, dists = snf_mh_matrix(
            mode_vec, float(gamma), engine, draws_per_gamma, steps, tau, rng
        )
        q1, med, q3 = np.quantile(dists, [0.25, 0.5, 0.75])
        iqr = q3 - q1
        inside = dists[(dists >= q1 - 1.5 * iqr) & (dists <= q3 + 1.5 * iqr)]
        rows.append(
            GammaProfileRow(
                float(gamma),
                float(q1),
                float(med),
                float(q3),
                float(inside.min()),
                float(inside.max()),
                float(dists.mean()),
            )
        )
    return rows


def suggest_gamma_steps(
    mode: LabelledGraph,
    metric: MetricSpec,
    cfg: McmcConfig,
    rng: np.random.Generator,
    draws_per_gamma: int = 200,
) -> tuple[float, float, float]:
    """Heuristic gamma random-walk scales from the distance-vs-gamma profile.

    Finds the smallest profiled gamma at which the median distance drops below
    half its near-uniform value and keys the step sizes to that scale.
    """
    grid = [2.0**k for k in range(-6, 7)]
    rows = gamma_profile(mode, metric, grid, draws_per_gamma, cfg, rng)
    base = rows[0].median
    scale = grid[-1]
    for row in rows:
        if base > 0 and row.median <= 0.5 * base:
            scale = row.gamma
            break
    return (0.02 * scale, 0.1 * scale, 0.5 * scale)


@dataclass(frozen=True)
class TraceHealth:
    acceptance_rates: dict[str, float]
    autocorrelation: Optional[np.ndarray]  # lags 1..50; None when undefined
    distinct_graphs: int


def trace_health(trace: Trace) -> TraceHealth:
    """Descriptive trace summaries: acceptance rates, scalar ACF, distinct modes."""
    if len(trace) == 0:
        raise EmptyTraceError("cannot summarize an empty trace")
    x = trace.params
    var = x.var()
    if len(x) < 2 or np.ptp(x) == 0 or var == 0:
        acf = None
    else:
        centred = x - x.mean()
        max_lag = min(50, len(x) - 1)
        acf = np.array(
            [
                float((centred[: len(x) - k] * centred[k:]).sum() / (len(x) * var))
                for k in range(1, max_lag + 1)
            ]
        )
    distinct = len({g.edge_bits for g in trace.graphs})
    return TraceHealth(trace.acceptance_rates(), acf, distinct)
