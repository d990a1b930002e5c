"""Posterior samplers for the hierarchical graph-population models.

``fit_cer_cer`` runs plain Metropolis-Hastings for the CER/CER model, whose
normalizing constants are tractable. ``fit_sn_sn`` handles the SN/SN model,
whose likelihood contains the mode- and gamma-dependent partition function, via
the auxiliary-variable exchange construction: each proposal of (mode, gamma)
is accompanied by synthetic graphs drawn from the model at the proposed values,
so the intractable normalizers cancel from the acceptance ratio. The auxiliary
draws come from a finite inner Metropolis chain, making the sampler approximate;
enumeration-based exact posteriors are provided to bound that bias at small N.

All randomness flows through ``numpy.random.Generator`` seeded from the config;
parallel replicates should derive substreams with ``spawn_rng``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import exp, inf, lgamma, log
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    DomainError,
    EmptyTraceError,
    IndivisiblePopulationError,
    NonFiniteLogRatioError,
    SpaceTooLargeError,
    StepTooLargeError,
)
from .graphs import (
    GraphPopulation,
    LabelledGraph,
    enumerate_graph_space,
    majority_vote,
    n_pairs,
)
from .metrics import MetricSpec, heat_kernel
from .models import (
    SnfParams,
    _logsumexp,
    _space_distance_table,
    sample_frechet_mean,
    space_distances,
)


def spawn_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Deterministic RNG substream for (seed, stream); stream 0 is the main chain."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# Hyperparameters and configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CerCerHyper:
    """Prior mode graph, prior flip rate alpha0, and scaled-Beta shapes for alpha."""

    g0: LabelledGraph
    alpha0: float
    beta_a: float = 1.0
    beta_b: float = 9.0

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 0.5:
            raise DomainError(f"alpha0={self.alpha0} outside (0, 0.5)")
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise DomainError("Beta shape parameters must be positive")

    def log_alpha_prior(self, alpha: float) -> float:
        # Scaled Beta on (0, 1/2): alpha = X/2 with X ~ Beta(a, b).
        if not 0.0 < alpha < 0.5:
            return -inf
        a, b = self.beta_a, self.beta_b
        log_norm = lgamma(a + b) - lgamma(a) - lgamma(b)
        return log_norm + log(2.0) + (a - 1.0) * log(2.0 * alpha) + (b - 1.0) * log(1.0 - 2.0 * alpha)


@dataclass(frozen=True)
class ExponentialPrior:
    rate: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise DomainError("exponential rate must be positive")

    def log_pdf(self, x: float) -> float:
        if x <= 0:
            return -inf
        return log(self.rate) - self.rate * x


@dataclass(frozen=True)
class TruncatedUniformPrior:
    """Uniform on (0, kappa)."""

    kappa: float

    def __post_init__(self):
        if self.kappa <= 0:
            raise DomainError("kappa must be positive")

    def log_pdf(self, x: float) -> float:
        if 0 < x < self.kappa:
            return -log(self.kappa)
        return -inf


GammaPrior = Union[ExponentialPrior, TruncatedUniformPrior]


@dataclass(frozen=True)
class SnSnHyper:
    """Prior mode graph, prior concentration gamma0, metric and gamma prior."""

    g0: LabelledGraph
    gamma0: float
    metric: MetricSpec = MetricSpec()
    gamma_prior: GammaPrior = ExponentialPrior(1.0)

    def __post_init__(self):
        if self.gamma0 <= 0:
            raise DomainError(f"gamma0={self.gamma0} must be positive")


@dataclass(frozen=True)
class McmcConfig:
    """Sampler tuning knobs.

    ``flip_prob_tau`` and ``aux_inner_steps`` of ``None`` resolve at fit time to
    1/N_e (one expected flip per proposal) and 20*N_e inner steps respectively.
    ``kernel_mix_weight`` is the probability of the independent-flip kernel; the
    complementary move is the empirical-Bernoulli independence kernel.
    """

    n_samples: int
    burn_in: int = 0
    lag: int = 1
    flip_prob_tau: Optional[float] = None
    kernel_mix_weight: float = 0.8
    step_sizes_upsilon: tuple[float, ...] = (0.005, 0.02, 0.08)
    aux_inner_steps: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "step_sizes_upsilon", tuple(self.step_sizes_upsilon))
        if self.n_samples < 0 or self.burn_in < 0:
            raise DomainError("n_samples and burn_in must be nonnegative")
        if self.lag < 1:
            raise DomainError("lag must be at least 1")
        if self.flip_prob_tau is not None and not 0.0 < self.flip_prob_tau < 1.0:
            raise DomainError("flip_prob_tau must lie in (0, 1)")
        if not 0.0 <= self.kernel_mix_weight <= 1.0:
            raise DomainError("kernel_mix_weight must lie in [0, 1]")
        if not self.step_sizes_upsilon or any(u <= 0 for u in self.step_sizes_upsilon):
            raise DomainError("step_sizes_upsilon must be a nonempty list of positive reals")
        if self.aux_inner_steps is not None and self.aux_inner_steps < 1:
            raise DomainError("aux_inner_steps must be positive")

    def resolved_tau(self, ne: int) -> float:
        return self.flip_prob_tau if self.flip_prob_tau is not None else 1.0 / ne

    def resolved_aux_steps(self, ne: int) -> int:
        return self.aux_inner_steps if self.aux_inner_steps is not None else 20 * ne


@dataclass
class Trace:
    """Kept posterior samples of (mode graph, scalar) plus bookkeeping."""

    graphs: list[LabelledGraph]
    params: np.ndarray
    log_kernels: np.ndarray
    param_name: str
    n_vertices: int
    accept_counts: dict[str, tuple[int, int]] = field(default_factory=dict)
    config: Optional[McmcConfig] = None

    def __len__(self) -> int:
        return len(self.graphs)

    def acceptance_rates(self) -> dict[str, float]:
        return {
            k: (acc / prop if prop else float("nan"))
            for k, (acc, prop) in self.accept_counts.items()
        }


# ---------------------------------------------------------------------------
# Proposal kernels
# ---------------------------------------------------------------------------


def propose_mode_flip(g: LabelledGraph, tau: float, rng: np.random.Generator) -> LabelledGraph:
    """Flip every edge indicator independently with probability tau (symmetric)."""
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau={tau} outside (0, 1)")
    vec = g.to_vector()
    mask = (rng.random(vec.shape[0]) < tau).astype(np.uint8)
    return LabelledGraph.from_vector(g.n_vertices, vec ^ mask)


def propose_mode_empirical(
    pop: GraphPopulation, rng: np.random.Generator
) -> tuple[LabelledGraph, Callable[[LabelledGraph], float]]:
    """Independence proposal with per-edge empirical inclusion frequencies.

    Frequencies of exactly 0 or 1 are clamped to [1/(2n), 1 - 1/(2n)] so every
    graph has positive proposal mass. Returns the draw together with the log
    proposal density needed for the Hastings correction.
    """
    kernel = _EmpiricalKernel(pop.to_matrix())
    vec = kernel.propose(rng)
    n_vertices = pop.n_vertices

    def log_density(g: LabelledGraph) -> float:
        return kernel.log_q(g.to_vector())

    return LabelledGraph.from_vector(n_vertices, vec), log_density


class _EmpiricalKernel:
    def __init__(self, data_mat: np.ndarray):
        n = data_mat.shape[0]
        freq = data_mat.mean(axis=0)
        self.freq = np.clip(freq, 1.0 / (2 * n), 1.0 - 1.0 / (2 * n))
        self.log_f = np.log(self.freq)
        self.log_1mf = np.log1p(-self.freq)
        self.base = float(self.log_1mf.sum())
        self.w = self.log_f - self.log_1mf

    def propose(self, rng: np.random.Generator) -> np.ndarray:
        return (rng.random(self.freq.shape[0]) < self.freq).astype(np.uint8)

    def log_q(self, vec: np.ndarray) -> float:
        return self.base + float(self.w @ vec)


def reflected_walk(
    x: float,
    lower: float,
    upper: Optional[float],
    upsilons: tuple[float, ...],
    rng: np.random.Generator,
) -> float:
    """One step of the uniform random-walk mixture with single boundary reflection.

    A step size is chosen uniformly from ``upsilons``, noise Unif(-u, u) is
    added, and the proposal reflects once at the boundaries: y < lower maps to
    2*lower - y, y > upper to 2*upper - y. For bounded intervals every step
    size must be smaller than the interval width so one reflection suffices.
    """
    if upper is not None:
        width = upper - lower
        for u in upsilons:
            if u >= width:
                raise StepTooLargeError(u, width)
        if not lower < x < upper:
            raise DomainError(f"x={x} not strictly inside ({lower}, {upper})")
    elif x <= lower:
        raise DomainError(f"x={x} not strictly above {lower}")
    u = upsilons[rng.integers(len(upsilons))]
    y = x + rng.uniform(-u, u)
    if y < lower:
        y = 2.0 * lower - y
    elif upper is not None and y > upper:
        y = 2.0 * upper - y
    return y


# ---------------------------------------------------------------------------
# Metric engine: batched distances from chain states to a mode graph
# ---------------------------------------------------------------------------


class _MetricEngine:
    """Raw-distance computations between uint8 edge matrices and a mode vector.

    For N <= 5 the full pairwise table over the enumerated space is used, which
    makes diffusion distances a table lookup inside the samplers.
    """

    def __init__(self, metric: MetricSpec, n_vertices: int):
        self.metric = metric
        self.n_vertices = n_vertices
        self.ne = n_pairs(n_vertices)
        self.small = n_vertices <= 5
        if self.small:
            self.table = _space_distance_table(n_vertices, metric.kind, metric.t)
            self.pow2 = 1 << np.arange(self.ne, dtype=np.uint64)

    def row_bits(self, mat: np.ndarray) -> np.ndarray:
        return mat.astype(np.uint64) @ self.pow2

    def vec_bits(self, vec: np.ndarray) -> int:
        return int(vec.astype(np.uint64) @ self.pow2) if self.small else _vec_to_bits(vec)

    def dist_to(self, mat: np.ndarray, mode_vec: np.ndarray) -> np.ndarray:
        """Raw distances from each row of ``mat`` to the mode."""
        if self.small:
            return self.table[self.vec_bits(mode_vec)][self.row_bits(mat)]
        if self.metric.kind == "hamming":
            return (mat != mode_vec).sum(axis=1).astype(np.float64)
        mode_kernel = heat_kernel(
            LabelledGraph(self.n_vertices, _vec_to_bits(mode_vec)), self.metric.t
        )
        out = np.empty(mat.shape[0], dtype=np.float64)
        for i in range(mat.shape[0]):
            k = heat_kernel(
                LabelledGraph(self.n_vertices, _vec_to_bits(mat[i])), self.metric.t
            )
            diff = k - mode_kernel
            out[i] = (diff * diff).sum()
        return out

    def dist_single(self, vec_a: np.ndarray, vec_b: np.ndarray) -> float:
        return float(self.dist_to(vec_a[None, :], vec_b)[0])


def _vec_to_bits(vec: np.ndarray) -> int:
    bits = 0
    for p in np.flatnonzero(vec):
        bits |= 1 << int(p)
    return bits


def _hamming_rows(mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return (mat != vec).sum(axis=1)


def snf_mh_matrix(
    mode_vec: np.ndarray,
    gamma: float,
    engine: _MetricEngine,
    n_chains: int,
    steps: int,
    tau: float,
    rng: np.random.Generator,
    start: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run ``n_chains`` independent flip-kernel Metropolis chains targeting the SNF.

    Chains start at the mode unless ``start`` rows are given; returns the final
    states as a uint8 matrix plus their raw distances to the mode.
    """
    if engine.small:
        return _snf_mh_small(mode_vec, gamma, engine, n_chains, steps, tau, rng, start)
    if start is None:
        states = np.tile(mode_vec, (n_chains, 1))
    else:
        states = start.copy()
    d = engine.dist_to(states, mode_vec)
    phi = engine.metric.apply_phi
    # Bound the pregenerated proposal block to ~4M bytes of mask bits.
    block = max(1, min(steps, (1 << 22) // max(1, n_chains * engine.ne)))
    done = 0
    while done < steps:
        m = min(block, steps - done)
        masks = (rng.random((m, n_chains, engine.ne)) < tau).astype(np.uint8)
        logu = np.log(rng.random((m, n_chains)))
        for t in range(m):
            cand = states ^ masks[t]
            dc = engine.dist_to(cand, mode_vec)
            acc = logu[t] < -gamma * (phi(dc) - phi(d))
            if acc.any():
                states[acc] = cand[acc]
                d[acc] = dc[acc]
        done += m
    return states, d


def _snf_mh_small(mode_vec, gamma, engine, n_chains, steps, tau, rng, start):
    """Enumerable-space path: states are table indices, the step loop is scalar."""
    mode_bits = engine.vec_bits(mode_vec)
    dvec = engine.table[mode_bits]
    evec = [float(e) for e in engine.metric.apply_phi(dvec)]
    total = steps * n_chains
    mask_ints = (rng.random((total, engine.ne)) < tau).astype(np.uint64) @ engine.pow2
    mask_ints = [int(m) for m in mask_ints]
    logu = np.log(rng.random(total))
    if start is None:
        start_bits = [mode_bits] * n_chains
    else:
        start_bits = [int(b) for b in engine.row_bits(start)]
    out_bits = np.empty(n_chains, dtype=np.int64)
    k = 0
    for c in range(n_chains):
        s = start_bits[c]
        es = evec[s]
        for _ in range(steps):
            m = mask_ints[k]
            if m:
                cand = s ^ m
                ec = evec[cand]
                if logu[k] < -gamma * (ec - es):
                    s, es = cand, ec
            k += 1
        out_bits[c] = s
    states = np.stack(
        [LabelledGraph(engine.n_vertices, int(b)).to_vector() for b in out_bits]
    )
    return states, dvec[out_bits]


def snf_sample_matrix(
    params: SnfParams,
    count: int,
    inner_steps: int,
    tau: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """``count`` approximate SNF draws as a (count, n_pairs) uint8 matrix.

    Each draw is the endpoint of an independent ``inner_steps``-step flip-kernel
    Metropolis chain started at the mode.
    """
    engine = _MetricEngine(params.metric, params.mode.n_vertices)
    states, _ = snf_mh_matrix(
        params.mode.to_vector(), params.gamma, engine, count, inner_steps, tau, rng
    )
    return states


# ---------------------------------------------------------------------------
# CER/CER fitting
# ---------------------------------------------------------------------------


def fit_cer_cer(pop: GraphPopulation, hyper: CerCerHyper, cfg: McmcConfig) -> Trace:
    """Metropolis-Hastings over (mode, alpha) for the CER/CER model.

    The mode moves by a mixture of the independent-flip kernel and the
    empirical-Bernoulli independence kernel (with full Hastings correction);
    alpha moves by the (0, 0.5)-reflected uniform walk. All normalizing
    constants are tractable, so the target is evaluated exactly.
    """
    n_vertices = pop.n_vertices
    ne = n_pairs(n_vertices)
    if hyper.g0.n_vertices != n_vertices:
        raise DomainError("prior mode lives on a different vertex set than the data")
    for u in cfg.step_sizes_upsilon:
        if u >= 0.5:
            raise StepTooLargeError(u, 0.5)
    tau = cfg.resolved_tau(ne)
    rng = spawn_rng(cfg.seed)

    data = pop.to_matrix()
    n = data.shape[0]
    g0_vec = hyper.g0.to_vector()
    empirical = _EmpiricalKernel(data)

    lw_prior = log(hyper.alpha0) - log(1.0 - hyper.alpha0)
    const_prior = ne * log(1.0 - hyper.alpha0)

    mode_vec = majority_vote(pop).to_vector()
    d0 = int(np.count_nonzero(mode_vec != g0_vec))
    dsum = int(np.count_nonzero(data != mode_vec))
    alpha = 0.5 * hyper.beta_a / (hyper.beta_a + hyper.beta_b)

    def log_target(d0_, dsum_, alpha_):
        return (
            const_prior
            + d0_ * lw_prior
            + hyper.log_alpha_prior(alpha_)
            + dsum_ * log(alpha_)
            + (n * ne - dsum_) * log(1.0 - alpha_)
        )

    accepts = {"flip": [0, 0], "empirical": [0, 0], "alpha_walk": [0, 0]}
    kept_graphs: list[LabelledGraph] = []
    kept_alpha: list[float] = []
    kept_logk: list[float] = []

    total = cfg.burn_in + cfg.n_samples * cfg.lag
    for it in range(total):
        # Mode update.
        use_flip = rng.random() < cfg.kernel_mix_weight
        if use_flip:
            mask = (rng.random(ne) < tau).astype(np.uint8)
            cand = mode_vec ^ mask
            log_q_diff = 0.0
            key = "flip"
        else:
            cand = empirical.propose(rng)
            log_q_diff = empirical.log_q(mode_vec) - empirical.log_q(cand)
            key = "empirical"
        d0_c = int(np.count_nonzero(cand != g0_vec))
        dsum_c = int(np.count_nonzero(data != cand))
        lw_lik = log(alpha) - log(1.0 - alpha)
        log_ratio = (d0_c - d0) * lw_prior + (dsum_c - dsum) * lw_lik + log_q_diff
        accepts[key][1] += 1
        if log(rng.random()) < log_ratio:
            mode_vec, d0, dsum = cand, d0_c, dsum_c
            accepts[key][0] += 1

        # Alpha update (reflected walk is symmetric).
        alpha_c = reflected_walk(alpha, 0.0, 0.5, cfg.step_sizes_upsilon, rng)
        accepts["alpha_walk"][1] += 1
        if 0.0 < alpha_c < 0.5:
            log_ratio = log_target(d0, dsum, alpha_c) - log_target(d0, dsum, alpha)
            if log(rng.random()) < log_ratio:
                alpha = alpha_c
                accepts["alpha_walk"][0] += 1

        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.lag == cfg.lag - 1:
            kept_graphs.append(LabelledGraph.from_vector(n_vertices, mode_vec))
            kept_alpha.append(alpha)
            kept_logk.append(log_target(d0, dsum, alpha))

    return Trace(
        graphs=kept_graphs,
        params=np.array(kept_alpha),
        log_kernels=np.array(kept_logk),
        param_name="alpha",
        n_vertices=n_vertices,
        accept_counts={k: (v[0], v[1]) for k, v in accepts.items()},
        config=cfg,
    )


@dataclass(frozen=True)
class ExactJointPosterior:
    """Exact posterior over (graph space x scalar grid), normalized on the grid."""

    space: tuple[LabelledGraph, ...]
    grid: np.ndarray
    log_post: np.ndarray  # shape (len(space), len(grid))

    @property
    def joint(self) -> np.ndarray:
        return np.exp(self.log_post)

    @property
    def graph_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def scalar_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)


def exact_posterior_cer(
    pop: GraphPopulation, hyper: CerCerHyper, alpha_grid
) -> ExactJointPosterior:
    """Enumeration oracle for the CER/CER posterior on a grid of alpha values."""
    n_vertices = pop.n_vertices
    if n_vertices > 4:
        raise SpaceTooLargeError(n_vertices, 4)
    grid = np.asarray(alpha_grid, dtype=np.float64)
    if grid.min() <= 0.0 or grid.max() >= 0.5:
        raise DomainError("alpha grid must lie strictly inside (0, 0.5)")
    ne = n_pairs(n_vertices)
    n = len(pop)
    space = enumerate_graph_space(n_vertices)
    hamming_metric = MetricSpec(kind="hamming")
    d0 = space_distances(hyper.g0, hamming_metric)
    table = _space_distance_table(n_vertices, "hamming", 1.0)
    data_rows = np.array([g.edge_bits for g in pop])
    dsum = table[data_rows].sum(axis=0)

    log_prior_graph = d0 * log(hyper.alpha0) + (ne - d0) * log(1.0 - hyper.alpha0)
    log_prior_alpha = np.array([hyper.log_alpha_prior(a) for a in grid])
    log_lik = dsum[:, None] * np.log(grid)[None, :] + (n * ne - dsum)[:, None] * np.log1p(
        -grid
    )[None, :]
    log_post = log_prior_graph[:, None] + log_prior_alpha[None, :] + log_lik
    log_post -= _logsumexp(log_post.ravel())
    return ExactJointPosterior(tuple(space), grid, log_post)


# ---------------------------------------------------------------------------
# SN/SN fitting (exchange algorithm)
# ---------------------------------------------------------------------------


def sample_snf_prior_mh(
    hyper: SnSnHyper, cfg: McmcConfig, rng: Optional[np.random.Generator] = None
) -> Trace:
    """Metropolis sampling of the SNF prior exp(-gamma0 phi(d(., g0))).

    Uses the flip kernel; the partition function cancels from the ratio.
    """
    n_vertices = hyper.g0.n_vertices
    ne = n_pairs(n_vertices)
    tau = cfg.resolved_tau(ne)
    if rng is None:
        rng = spawn_rng(cfg.seed)
    engine = _MetricEngine(hyper.metric, n_vertices)
    g0_vec = hyper.g0.to_vector()
    phi = hyper.metric.apply_phi

    state = g0_vec.copy()
    energy = float(phi(engine.dist_to(state[None, :], g0_vec)[0]))
    accepts = [0, 0]
    kept: list[LabelledGraph] = []
    kept_logk: list[float] = []
    total = cfg.burn_in + cfg.n_samples * cfg.lag
    for it in range(total):
        mask = (rng.random(ne) < tau).astype(np.uint8)
        cand = state ^ mask
        energy_c = float(phi(engine.dist_to(cand[None, :], g0_vec)[0]))
        accepts[1] += 1
        if log(rng.random()) < -hyper.gamma0 * (energy_c - energy):
            state, energy = cand, energy_c
            accepts[0] += 1
        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.lag == cfg.lag - 1:
            kept.append(LabelledGraph.from_vector(n_vertices, state))
            kept_logk.append(-hyper.gamma0 * energy)
    return Trace(
        graphs=kept,
        params=np.full(len(kept), hyper.gamma0),
        log_kernels=np.array(kept_logk),
        param_name="gamma",
        n_vertices=n_vertices,
        accept_counts={"flip": (accepts[0], accepts[1])},
        config=cfg,
    )


def fit_sn_sn(
    pop: GraphPopulation,
    hyper: SnSnHyper,
    cfg: McmcConfig,
    alpha_tilde: float,
) -> Trace:
    """Auxiliary-variable exchange sampler for the SN/SN posterior.

    Each iteration proposes (mode', gamma') with the CER/CER kernels (the gamma
    walk reflecting at 0 only), draws n auxiliary graphs from the model at the
    proposed values via inner Metropolis chains started at the proposed mode,
    and accepts with the five-factor ratio: CER auxiliary-density ratio with
    plug-in dispersion alpha_tilde (new auxiliaries scored at the proposed mode
    in the numerator, current auxiliaries at the current mode in the
    denominator), prior ratio for (mode, gamma), data-kernel ratio, the inverse
    ratio of the SNF kernels at the auxiliaries, and the proposal ratio. The
    partition functions cancel exactly; the finite inner chains are the only
    approximation.
    """
    if not 0.0 < alpha_tilde < 0.5:
        raise DomainError(f"alpha_tilde={alpha_tilde} outside (0, 0.5)")
    n_vertices = pop.n_vertices
    if hyper.g0.n_vertices != n_vertices:
        raise DomainError("prior mode lives on a different vertex set than the data")
    ne = n_pairs(n_vertices)
    n = len(pop)
    tau = cfg.resolved_tau(ne)
    aux_steps = cfg.resolved_aux_steps(ne)
    rng = spawn_rng(cfg.seed)
    engine = _MetricEngine(hyper.metric, n_vertices)
    phi = hyper.metric.apply_phi

    data = pop.to_matrix()
    g0_vec = hyper.g0.to_vector()
    empirical = _EmpiricalKernel(data)
    lw_aux = log(alpha_tilde) - log(1.0 - alpha_tilde)

    mode_vec = majority_vote(pop).to_vector()
    gamma = hyper.gamma0

    def data_energy(mvec: np.ndarray) -> float:
        return float(phi(engine.dist_to(data, mvec)).sum())

    def prior_energy(mvec: np.ndarray) -> float:
        return float(phi(engine.dist_to(mvec[None, :], g0_vec)[0]))

    s_data = data_energy(mode_vec)
    e_prior = prior_energy(mode_vec)
    aux, aux_d = snf_mh_matrix(mode_vec, gamma, engine, n, aux_steps, tau, rng)
    s_aux = float(phi(aux_d).sum())
    s_aux_h = int(_hamming_rows(aux, mode_vec).sum())

    accepts = {"flip": [0, 0], "empirical": [0, 0]}
    kept_graphs: list[LabelledGraph] = []
    kept_gamma: list[float] = []
    kept_logk: list[float] = []

    total = cfg.burn_in + cfg.n_samples * cfg.lag
    for it in range(total):
        use_flip = rng.random() < cfg.kernel_mix_weight
        if use_flip:
            mask = (rng.random(ne) < tau).astype(np.uint8)
            cand = mode_vec ^ mask
            log_q_diff = 0.0
            key = "flip"
        else:
            cand = empirical.propose(rng)
            log_q_diff = empirical.log_q(mode_vec) - empirical.log_q(cand)
            key = "empirical"
        gamma_c = reflected_walk(gamma, 0.0, None, cfg.step_sizes_upsilon, rng)

        aux_c, aux_dc = snf_mh_matrix(cand, gamma_c, engine, n, aux_steps, tau, rng)
        s_aux_c = float(phi(aux_dc).sum())
        s_aux_h_c = int(_hamming_rows(aux_c, cand).sum())
        s_data_c = data_energy(cand)
        e_prior_c = prior_energy(cand)

        log_ratio = (
            lw_aux * (s_aux_h_c - s_aux_h)
            + (-hyper.gamma0 * (e_prior_c - e_prior))
            + (hyper.gamma_prior.log_pdf(gamma_c) - hyper.gamma_prior.log_pdf(gamma))
            + (-gamma_c * s_data_c + gamma * s_data)
            + (-gamma * s_aux + gamma_c * s_aux_c)
            + log_q_diff
        )
        if np.isnan(log_ratio):
            raise NonFiniteLogRatioError(
                "exchange ratio is NaN; check the metric/phi combination"
            )
        accepts[key][1] += 1
        if log(rng.random()) < log_ratio:
            mode_vec, gamma = cand, gamma_c
            aux, aux_d = aux_c, aux_dc
            s_aux, s_aux_h = s_aux_c, s_aux_h_c
            s_data, e_prior = s_data_c, e_prior_c
            accepts[key][0] += 1

        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.lag == cfg.lag - 1:
            kept_graphs.append(LabelledGraph.from_vector(n_vertices, mode_vec))
            kept_gamma.append(gamma)
            kept_logk.append(
                -hyper.gamma0 * e_prior + hyper.gamma_prior.log_pdf(gamma) - gamma * s_data
            )

    return Trace(
        graphs=kept_graphs,
        params=np.array(kept_gamma),
        log_kernels=np.array(kept_logk),
        param_name="gamma",
        n_vertices=n_vertices,
        accept_counts={k: (v[0], v[1]) for k, v in accepts.items()},
        config=cfg,
    )


def exact_posterior_snf(
    pop: GraphPopulation, hyper: SnSnHyper, gamma_grid
) -> ExactJointPosterior:
    """Enumeration oracle for the SN/SN posterior including the Z(mode, gamma)^-n term."""
    n_vertices = pop.n_vertices
    if n_vertices > 4:
        raise SpaceTooLargeError(n_vertices, 4)
    grid = np.asarray(gamma_grid, dtype=np.float64)
    if grid.min() <= 0.0:
        raise DomainError("gamma grid must be strictly positive")
    n = len(pop)
    space = enumerate_graph_space(n_vertices)
    table = _space_distance_table(n_vertices, hyper.metric.kind, hyper.metric.t)
    energies = hyper.metric.apply_phi(table)
    data_rows = np.array([g.edge_bits for g in pop])
    data_term = energies[data_rows].sum(axis=0)  # per-candidate-mode sum of phi(d)
    prior_term = hyper.metric.apply_phi(space_distances(hyper.g0, hyper.metric))
    log_prior_gamma = np.array([hyper.gamma_prior.log_pdf(g) for g in grid])

    size = len(space)
    log_post = np.empty((size, len(grid)))
    for j, gamma in enumerate(grid):
        kernels = -gamma * energies  # (size, size): kernel of s given mode m in column m
        log_z = np.logaddexp.reduce(kernels, axis=0)
        log_post[:, j] = (
            -hyper.gamma0 * prior_term
            + log_prior_gamma[j]
            - gamma * data_term
            - n * log_z
        )
    log_post -= _logsumexp(log_post.ravel())
    return ExactJointPosterior(tuple(space), grid, log_post)


# ---------------------------------------------------------------------------
# Summaries and divide-and-conquer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PosteriorSummary:
    mode_graph: LabelledGraph
    frequencies: tuple[tuple[LabelledGraph, float], ...]
    scalar_mean: float
    interval: tuple[float, float]
    level: float


def posterior_summary(trace: Trace, level: float = 0.95) -> PosteriorSummary:
    """Most-visited graph, visit-frequency table and equal-tailed scalar interval."""
    if len(trace) == 0:
        raise EmptyTraceError("cannot summarize an empty trace")
    if not 0.0 < level < 1.0:
        raise DomainError(f"level={level} outside (0, 1)")
    counts: dict[int, int] = {}
    for g in trace.graphs:
        counts[g.edge_bits] = counts.get(g.edge_bits, 0) + 1
    total = len(trace)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    freq = tuple(
        (LabelledGraph(trace.n_vertices, bits), c / total) for bits, c in ordered
    )
    lo = (1.0 - level) / 2.0
    interval = (
        float(np.quantile(trace.params, lo)),
        float(np.quantile(trace.params, 1.0 - lo)),
    )
    return PosteriorSummary(freq[0][0], freq, float(trace.params.mean()), interval, level)


@dataclass(frozen=True)
class DivideAndConquerResult:
    mode: LabelledGraph
    gamma_samples: np.ndarray
    subset_modes: tuple[LabelledGraph, ...]
    subset_traces: tuple[Trace, ...]


def divide_and_conquer_fit(
    pop: GraphPopulation,
    hyper: SnSnHyper,
    cfg: McmcConfig,
    n_subsets: int,
    alpha_tilde: Optional[float] = None,
) -> DivideAndConquerResult:
    """Fit SN/SN independently on equal-size subsets and combine.

    The point estimate is the restricted Frechet mean of the per-subset
    posterior modes under the model's metric. Gamma samples are combined by
    re-centring per subset, re-scaling each subset's spread to the pooled
    spread divided by sqrt(n_subsets) (a heuristic stand-in for the full-data
    dispersion), and re-centring at the grand mean.

    When ``alpha_tilde`` is None, each subset derives its own plug-in from a
    CER/CER pre-fit whose alpha0 maps gamma0 through alpha = 1/(1 + e^gamma).
    """
    n = len(pop)
    if n % n_subsets != 0:
        raise IndivisiblePopulationError(n, n_subsets)
    size = n // n_subsets
    traces: list[Trace] = []
    modes: list[LabelledGraph] = []
    for i in range(n_subsets):
        sub = GraphPopulation(pop.graphs[i * size : (i + 1) * size])
        if n_subsets == 1:
            sub_cfg = cfg  # degenerate split is exactly a plain fit
        else:
            sub_seed = int(
                np.random.SeedSequence(cfg.seed, spawn_key=(i,)).generate_state(1)[0]
            )
            sub_cfg = replace(cfg, seed=sub_seed)
        if alpha_tilde is None:
            a0 = min(max(1.0 / (1.0 + exp(hyper.gamma0)), 1e-6), 0.5 - 1e-6)
            pre = fit_cer_cer(sub, CerCerHyper(g0=hyper.g0, alpha0=a0), sub_cfg)
            at = float(np.clip(pre.params.mean(), 1e-6, 0.5 - 1e-6))
        else:
            at = alpha_tilde
        trace = fit_sn_sn(sub, hyper, sub_cfg, at)
        traces.append(trace)
        modes.append(posterior_summary(trace).mode_graph)

    combined_mode = (
        modes[0]
        if n_subsets == 1
        else sample_frechet_mean(GraphPopulation(tuple(modes)), hyper.metric, candidates=modes)
    )

    per_subset = [t.params for t in traces]
    means = np.array([s.mean() for s in per_subset])
    sds = np.array([s.std(ddof=1) if len(s) > 1 else 0.0 for s in per_subset])
    pooled = float(np.sqrt((sds**2).mean()))
    target = pooled / np.sqrt(n_subsets)
    grand_mean = float(means.mean())
    combined = []
    for s, m, sd in zip(per_subset, means, sds):
        centred = s - m
        if sd > 0 and target > 0:
            centred = centred * (target / sd)
        combined.append(centred + grand_mean)
    gamma_samples = np.concatenate(combined)
    return DivideAndConquerResult(combined_mode, gamma_samples, tuple(modes), tuple(traces))
