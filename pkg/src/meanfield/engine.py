"""Stochastic optimizer for the mean-field Gaussian approximation.

The approximation lives in the unconstrained space: q(zeta) = N(mu,
diag(exp(2*omega))). Each iteration draws standard-Gaussian samples,
inverts the standardization zeta = exp(omega)*eta + mu, differentiates the
transformed log joint on a fresh tape, and takes an adaptive-stepsize
ascent step; the stepsize uses the summed squared gradients of a sliding
window (finite-memory variant of the accumulate-everything schedule).

Randomness is derived from a single seed through named substreams
(`SeedSequence(seed, spawn_key=(kind, iteration[, sample]))`), so gradient
samples could be evaluated in parallel without changing results, and reruns
with one seed are bit-identical.

The trace's elapsed_ms column is a deterministic work clock: cumulative
tape nodes evaluated by gradient estimation, at a nominal 1000 nodes per
millisecond. Real wall-clock duration is reported separately (and recorded
in run manifests) so output files stay byte-reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .errors import ConfigurationError, DomainError, EvaluationFailure, \
    ShapeError
from .model import Dataset, ModelDefinition, constrain_blocks, \
    log_joint_unconstrained, minibatch_log_joint
from .transforms import BlockSpec, constrained_dim

__all__ = [
    "VariationalParams", "FitConfig", "OptState", "ElboTrace",
    "PosteriorDraws", "substream", "inverse_standardize", "estimate_elbo",
    "estimate_gradients", "adagrad_step", "fit", "draw_posterior",
]

# Named substreams hanging off the run seed.
STREAM_INIT = 0
STREAM_GRAD = 1
STREAM_ELBO = 2
STREAM_BATCH = 3
STREAM_DRAW = 4

_OMEGA_BOUND = 20.0
_NODES_PER_MS = 1000.0  # nominal rate of the deterministic work clock
_MAX_REDRAWS = 10


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for a named position in the run's stream tree."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=tuple(path)))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.SeedSequence):
        return np.random.default_rng(rng)
    return np.random.default_rng(int(rng))


@dataclass(frozen=True)
class VariationalParams:
    """Mean and log standard deviation of the factorized Gaussian."""

    mu: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        if mu.ndim != 1 or omega.shape != mu.shape:
            raise ShapeError("mu and omega must be equal-length vectors")
        if not (np.isfinite(mu).all() and np.isfinite(omega).all()):
            raise ValueError("variational parameters must be finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "omega", omega)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(self.omega)


@dataclass(frozen=True)
class FitConfig:
    grad_samples: int = 1
    elbo_samples: int = 100
    step_scale: float = 0.1
    step_offset: float = 1.0
    window: int = 10
    threshold: float = 0.01
    eval_interval: int = 100
    max_iterations: int = 1000
    seed: int = 0
    minibatch: int | None = None
    init: str = "zero"  # "zero" or "gaussian"

    def __post_init__(self):
        if self.grad_samples < 1:
            raise ConfigurationError("grad_samples must be >= 1")
        if self.elbo_samples < 1:
            raise ConfigurationError("elbo_samples must be >= 1")
        if self.step_scale <= 0.0:
            raise ConfigurationError("step_scale must be > 0")
        if self.window < 1:
            raise ConfigurationError("window must be >= 1")
        if self.threshold <= 0.0:
            raise ConfigurationError("threshold must be > 0")
        if self.eval_interval < 1:
            raise ConfigurationError("eval_interval must be >= 1")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be >= 0")
        if self.minibatch is not None and self.minibatch < 1:
            raise ConfigurationError("minibatch must be >= 1")
        if self.init not in ("zero", "gaussian"):
            raise ConfigurationError(
                f"init must be 'zero' or 'gaussian', got {self.init!r}")


@dataclass
class OptState:
    """Sliding window of squared gradients for the adaptive stepsize.

    The window sum is recomputed from the buffer in chronological order on
    every step (no running-sum drift), so it equals the brute-force sum of
    the last min(iteration, window) squared gradients exactly. No RNG state
    lives here: streams are pure functions of (seed, stream kind,
    iteration), so the iteration counter is the whole of it.
    """

    dim: int
    window: int
    iteration: int = 0
    _pos: int = 0
    buffer: np.ndarray = field(init=False)

    def __post_init__(self):
        self.buffer = np.zeros((self.window, self.dim))

    def update(self, squared: np.ndarray) -> np.ndarray:
        self.buffer[self._pos] = squared
        self._pos = (self._pos + 1) % self.window
        self.iteration += 1
        count = min(self.iteration, self.window)
        if self.iteration <= self.window:
            order = range(count)
        else:
            order = ((self._pos + j) % self.window for j in range(count))
        total = np.zeros(self.dim)
        for idx in order:
            total = total + self.buffer[idx]
        return total


@dataclass
class ElboTrace:
    """Objective estimates recorded during optimization."""

    rows: list[tuple[int, float, float]] = field(default_factory=list)
    clamp_events: int = 0
    wall_time_s: float = 0.0

    def append(self, iteration: int, elapsed_ms: float, elbo: float):
        if self.rows and iteration <= self.rows[-1][0]:
            raise ValueError("trace iterations must be strictly increasing")
        self.rows.append((iteration, elapsed_ms, elbo))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


@dataclass(frozen=True)
class PosteriorDraws:
    """Constrained-space samples from the fitted approximation."""

    blocks: tuple[BlockSpec, ...]
    samples: dict[str, np.ndarray]
    size: int

    def column_names(self) -> list[str]:
        names = []
        for b in self.blocks:
            names.extend(b.column_names())
        return names

    def flattened(self) -> np.ndarray:
        """(size x total constrained dim) array in column_names() order."""
        parts = [self.samples[b.name].reshape(self.size, -1)
                 for b in self.blocks]
        return np.concatenate(parts, axis=1)

    def row_values(self, s: int) -> dict:
        """Draw ``s`` as named python values usable by model evaluators."""
        out = {}
        for b in self.blocks:
            arr = self.samples[b.name]
            if b.scalar:
                out[b.name] = float(arr[s])
            elif b.rows is None:
                out[b.name] = [float(v) for v in arr[s]]
            else:
                out[b.name] = [[float(v) for v in row] for row in arr[s]]
        return out


def inverse_standardize(params: VariationalParams,
                        eta: Sequence[float]) -> np.ndarray:
    """Map a standardized draw back to the unconstrained space:
    zeta_k = exp(omega_k) * eta_k + mu_k."""
    eta = np.asarray(eta, dtype=float)
    if eta.shape != params.mu.shape:
        raise ShapeError(
            f"eta has length {eta.shape}, expected {params.mu.shape}")
    return np.exp(params.omega) * eta + params.mu


def _entropy(params: VariationalParams) -> float:
    k = params.dim
    return 0.5 * k * (1.0 + math.log(2.0 * math.pi)) + \
        float(np.sum(params.omega))


def estimate_elbo(model: ModelDefinition, data: Dataset,
                  params: VariationalParams, n_samples: int, rng) -> float:
    """Monte Carlo objective estimate (tape-free model evaluations).

    Averages the transformed log joint over draws from the current
    approximation and adds the Gaussian entropy in closed form. Draws whose
    evaluation is non-finite or out of domain are dropped; if every draw
    fails, raises :class:`EvaluationFailure`.
    """
    if n_samples < 1:
        raise ConfigurationError("n_samples must be >= 1")
    gen = _as_generator(rng)
    values = []
    for _ in range(n_samples):
        zeta = inverse_standardize(params, gen.standard_normal(params.dim))
        try:
            v = log_joint_unconstrained(model, data, zeta)
        except DomainError:
            continue
        if math.isfinite(v):
            values.append(v)
    if not values:
        raise EvaluationFailure(
            f"all {n_samples} objective samples were non-finite")
    return math.fsum(values) / len(values) + _entropy(params)


def _gradient_sample(model, data, zeta, batch):
    """One tape evaluation; returns (grad wrt zeta, node count) or None
    when the joint is non-finite or out of domain."""
    g = ad.Graph()
    zv = [g.leaf(float(z)) for z in zeta]
    try:
        if batch is None:
            out = log_joint_unconstrained(model, data, zv)
        else:
            out = minibatch_log_joint(model, data, batch, zv)
    except DomainError:
        return None
    if not math.isfinite(out.val):
        return None
    adj = g.adjoints(out)
    return np.array([adj[v.i] for v in zv]), len(g)


def _counted_gradients(model, data, params, m, rng, batch):
    """Gradient estimate plus the tape-node count that produced it."""
    if m < 1:
        raise ConfigurationError("m must be >= 1")
    if not isinstance(rng, np.random.SeedSequence):
        rng = np.random.SeedSequence(int(rng))
    # children derived by key, not by SeedSequence.spawn(): spawn mutates
    # its counter, and this estimator must be a pure function of its inputs
    children = [np.random.SeedSequence(entropy=rng.entropy,
                                       spawn_key=tuple(rng.spawn_key) + (i,))
                for i in range(m)]
    sigma = np.exp(params.omega)
    g_mu = np.zeros(params.dim)
    g_omega = np.zeros(params.dim)
    nodes = 0
    for child in children:
        gen = np.random.default_rng(child)
        result = None
        for _ in range(1 + _MAX_REDRAWS):
            eta = gen.standard_normal(params.dim)
            zeta = inverse_standardize(params, eta)
            result = _gradient_sample(model, data, zeta, batch)
            if result is not None:
                break
        if result is None:
            raise EvaluationFailure(
                f"gradient sample stayed non-finite after {_MAX_REDRAWS} "
                "redraws")
        d_zeta, n = result
        nodes += n
        g_mu += d_zeta
        g_omega += d_zeta * eta * sigma
    g_mu /= m
    g_omega /= m
    g_omega += 1.0
    return g_mu, g_omega, nodes


def estimate_gradients(model: ModelDefinition, data: Dataset,
                       params: VariationalParams, m: int, rng,
                       batch: Sequence[int] | None = None):
    """Monte Carlo gradients of the objective w.r.t. (mu, omega).

    Per standardized draw eta, the gradient of the transformed log joint
    w.r.t. zeta comes from one reverse sweep; the mu gradient is its MC
    mean and the omega gradient additionally carries the eta*exp(omega)
    chain factor plus the entropy term's constant 1. ``rng`` is an integer
    seed or a SeedSequence; each of the ``m`` samples uses its own child
    substream, so samples could be evaluated in parallel without changing
    the result. A draw whose evaluation is non-finite is redrawn up to 10
    times before the whole estimate fails.
    """
    g_mu, g_omega, _ = _counted_gradients(model, data, params, m, rng, batch)
    return g_mu, g_omega


def adagrad_step(state: OptState, grad: np.ndarray,
                 config: FitConfig) -> np.ndarray:
    """Per-coordinate stepsizes step_scale / (step_offset + sqrt(s)), where
    s sums the squared gradients of the last ``window`` steps."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != (state.dim,):
        raise ShapeError(
            f"gradient has shape {grad.shape}, expected ({state.dim},)")
    s = state.update(grad * grad)
    return config.step_scale / (config.step_offset + np.sqrt(s))


def _initial_params(dim: int, config: FitConfig) -> VariationalParams:
    if config.init == "gaussian":
        gen = substream(config.seed, STREAM_INIT)
        mu = gen.standard_normal(dim)
    else:
        mu = np.zeros(dim)
    return VariationalParams(mu, np.zeros(dim))


def fit(model: ModelDefinition, data: Dataset,
        config: FitConfig) -> tuple[VariationalParams, ElboTrace]:
    """Run the stochastic ascent loop until the objective stabilizes.

    Every ``eval_interval`` iterations the objective is re-estimated with
    ``elbo_samples`` fresh draws and appended to the trace; the loop stops
    when the relative change between consecutive estimates drops below
    ``threshold``, or at ``max_iterations``. With ``minibatch`` set, each
    iteration scores a uniformly drawn (without replacement, sorted) batch
    through the N/B-scaled joint.
    """
    n_obs = model.num_observations(data)
    if config.minibatch is not None:
        if not model.subsample_ok:
            raise ConfigurationError(
                f"model {model.name} does not support subsampling")
        if config.minibatch > n_obs:
            raise ConfigurationError(
                f"minibatch {config.minibatch} exceeds {n_obs} observations")
    params = _initial_params(model.dim, config)
    trace = ElboTrace()
    opt_mu = OptState(model.dim, config.window)
    opt_omega = OptState(model.dim, config.window)
    work_nodes = 0
    last_elbo = None
    wall_start = time.perf_counter()
    for i in range(config.max_iterations):
        batch = None
        if config.minibatch is not None:
            gen = substream(config.seed, STREAM_BATCH, i)
            chosen = gen.choice(n_obs, size=config.minibatch, replace=False)
            batch = [int(v) for v in np.sort(chosen)]
        try:
            g_mu, g_omega, nodes = _counted_gradients(
                model, data, params, config.grad_samples,
                np.random.SeedSequence(config.seed,
                                       spawn_key=(STREAM_GRAD, i)),
                batch)
        except EvaluationFailure as exc:
            raise EvaluationFailure(
                f"iteration {i}: {exc}; mu={params.mu.tolist()}, "
                f"omega={params.omega.tolist()}") from exc
        work_nodes += nodes
        rho_mu = adagrad_step(opt_mu, g_mu, config)
        rho_omega = adagrad_step(opt_omega, g_omega, config)
        mu = params.mu + rho_mu * g_mu
        omega = params.omega + rho_omega * g_omega
        clipped = np.clip(omega, -_OMEGA_BOUND, _OMEGA_BOUND)
        trace.clamp_events += int(np.sum(clipped != omega))
        params = VariationalParams(mu, clipped)
        if (i + 1) % config.eval_interval == 0:
            try:
                elbo = estimate_elbo(model, data, params,
                                     config.elbo_samples,
                                     substream(config.seed, STREAM_ELBO, i))
            except EvaluationFailure as exc:
                raise EvaluationFailure(
                    f"iteration {i}: {exc}; mu={params.mu.tolist()}, "
                    f"omega={params.omega.tolist()}") from exc
            trace.append(i + 1, work_nodes / _NODES_PER_MS, elbo)
            if last_elbo is not None:
                rel = abs(elbo - last_elbo) / max(abs(last_elbo), 1e-12)
                if rel < config.threshold:
                    break
            last_elbo = elbo
    trace.wall_time_s = time.perf_counter() - wall_start
    return params, trace


def draw_posterior(model: ModelDefinition, params: VariationalParams,
                   size: int, rng) -> PosteriorDraws:
    """Sample the fitted approximation and map draws back to the support."""
    if size < 1:
        raise ConfigurationError("size must be >= 1")
    if params.dim != model.dim:
        raise ShapeError(
            f"params have dim {params.dim}, model needs {model.dim}")
    gen = _as_generator(rng)
    eta = gen.standard_normal((size, params.dim))
    zeta = np.exp(params.omega) * eta + params.mu
    out: dict[str, np.ndarray] = {}
    for b in model.blocks:
        d = constrained_dim(b.kind)
        if b.scalar:
            out[b.name] = np.empty(size)
        elif b.rows is None:
            out[b.name] = np.empty((size, d))
        else:
            out[b.name] = np.empty((size, b.rows, d))
    for s in range(size):
        values, _ = constrain_blocks(model, zeta[s])
        for b in model.blocks:
            out[b.name][s] = values[b.name]
    return PosteriorDraws(blocks=model.blocks, samples=out, size=size)
