"""Built-in model collection and synthetic data generators.

Seven ready-made models, each returning a :class:`ModelDefinition` whose
log joint is differentiable through the tape:

* ``poisson_exponential`` - Poisson counts with an Exponential(rate) prior
  on the rate; the smallest nonconjugate example.
* ``linreg_ard`` - linear regression with automatic relevance
  determination: per-coefficient Gamma precision hyperpriors and an
  inverse-Gamma noise variance.
* ``hier_logistic`` - hierarchical logistic regression with five grouped
  coefficient vectors, five fixed effects, and Interval(0,100) group
  scales.
* ``gamma_poisson_nmf`` - nonnegative matrix factorization with Gamma
  factors; the per-user loadings are constrained positive ordered to pin
  the scaling/permutation ambiguity.
* ``dirichlet_exponential_nmf`` - nonnegative matrix factorization with
  simplex user loadings and Exponential item factors.
* ``gmm`` - diagonal Gaussian mixture with Dirichlet weights, Gaussian
  location priors, and lognormal scale priors; mixture assignments are
  marginalized with log_sum_exp.
* ``gmm_minibatch`` - the same mixture, intended for subsampled runs where
  each iteration scales a random batch's likelihood by N/B.

Dimensions that define the block layout (K, D, U, I, group counts) are
passed via ``dims``; real-valued prior settings via ``hyperparams``.
:func:`model_for_data` infers the data-determined dimensions from a
dataset, which is what the command line uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import autodiff as ad
from . import densities as dens
from .errors import ConfigurationError
from .model import Dataset, ModelDefinition
from .transforms import BlockSpec, Identity, Interval, LowerBound, \
    PositiveOrdered, Simplex

__all__ = ["ZOO_NAMES", "make_model", "model_for_data",
           "simulate_poisson_exponential", "simulate_linreg_ard",
           "simulate_hier_logistic", "simulate_nmf_counts", "simulate_gmm"]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _build_poisson_exponential(hypers, dims):
    rate = hypers["rate"]

    def log_prior(v, data):
        return dens.exponential(v["lam"], rate)

    def loglik(v, data, n):
        return dens.poisson(data["x"][n], v["lam"])

    return ModelDefinition(
        name="poisson_exponential",
        blocks=(BlockSpec("lam", LowerBound(0.0), scalar=True),),
        log_prior=log_prior,
        loglik_term=loglik,
        num_observations=lambda data: len(data["x"]),
        hyperparams=dict(hypers),
    )


def _build_linreg_ard(hypers, dims):
    d = dims["D"]
    a0, b0, c0, d0 = (hypers[k] for k in ("a0", "b0", "c0", "d0"))

    def log_prior(v, data):
        w, sigma2, alpha = v["w"], v["sigma2"], v["alpha"]
        out = dens.inverse_gamma(sigma2, a0, b0)
        sigma = ad.sqrt(sigma2)
        for i in range(d):
            out = out + dens.gamma(alpha[i], c0, d0)
            out = out + dens.normal(w[i], 0.0, sigma / ad.sqrt(alpha[i]))
        return out

    def loglik(v, data, n):
        mean = ad.dot(v["w"], data["x"][n])
        return dens.normal(data["y"][n], mean, ad.sqrt(v["sigma2"]))

    return ModelDefinition(
        name="linreg_ard",
        blocks=(
            BlockSpec("w", Identity(d)),
            BlockSpec("sigma2", LowerBound(0.0), scalar=True),
            BlockSpec("alpha", LowerBound(0.0, d)),
        ),
        log_prior=log_prior,
        loglik_term=loglik,
        num_observations=lambda data: len(data["y"]),
        hyperparams=dict(hypers),
    )


_HIER_GROUPS = ("a", "b", "c", "d", "e")
_HIER_INDEX = {"a": "age", "b": "edu", "c": "age_edu", "d": "state",
               "e": "region_full"}
_HIER_DIMS = ("n_age", "n_edu", "n_age_edu", "n_state", "n_region_full")


def _build_hier_logistic(hypers, dims):
    sizes = {g: dims[n] for g, n in zip(_HIER_GROUPS, _HIER_DIMS)}

    def log_prior(v, data):
        out = 0.0
        for g in _HIER_GROUPS:
            scale = v[f"sigma_{g}"]
            out = out + dens.uniform(scale, 0.0, 100.0)
            for x in v[g]:
                out = out + dens.normal(x, 0.0, scale)
        for x in v["beta"]:
            out = out + dens.normal(x, 0.0, 100.0)
        return out

    def loglik(v, data, n):
        beta = v["beta"]
        female = data["female"][n]
        black = data["black"][n]
        yhat = (beta[0]
                + beta[1] * black
                + beta[2] * female
                + beta[4] * (female * black)
                + beta[3] * data["v_prev_full"][n])
        for g in _HIER_GROUPS:
            yhat = yhat + v[g][data[_HIER_INDEX[g]][n]]
        return dens.bernoulli_logit(data["y"][n], yhat)

    blocks = tuple(BlockSpec(g, Identity(sizes[g])) for g in _HIER_GROUPS)
    blocks = blocks + (BlockSpec("beta", Identity(5)),)
    blocks = blocks + tuple(
        BlockSpec(f"sigma_{g}", Interval(0.0, 100.0), scalar=True)
        for g in _HIER_GROUPS)
    return ModelDefinition(
        name="hier_logistic",
        blocks=blocks,
        log_prior=log_prior,
        loglik_term=loglik,
        num_observations=lambda data: len(data["y"]),
        hyperparams=dict(hypers),
    )


def _nmf_num_observations(data):
    y = data["y"]
    return len(y) * (len(y[0]) if y else 0)


def _nmf_loglik(v, data, n):
    y = data["y"]
    cols = len(y[0])
    u, i = divmod(n, cols)
    return dens.poisson(y[u][i], ad.dot(v["theta"][u], v["beta"][i]))


def _build_gamma_poisson_nmf(hypers, dims):
    u, i, k = dims["U"], dims["I"], dims["K"]
    a, b, c, d = (hypers[key] for key in ("a", "b", "c", "d"))

    def log_prior(v, data):
        out = 0.0
        for row in v["theta"]:
            for x in row:
                out = out + dens.gamma(x, a, b)
        for row in v["beta"]:
            for x in row:
                out = out + dens.gamma(x, c, d)
        return out

    return ModelDefinition(
        name="gamma_poisson_nmf",
        blocks=(
            BlockSpec("theta", PositiveOrdered(k), rows=u),
            BlockSpec("beta", LowerBound(0.0, k), rows=i),
        ),
        log_prior=log_prior,
        loglik_term=_nmf_loglik,
        num_observations=_nmf_num_observations,
        hyperparams=dict(hypers),
    )


def _build_dirichlet_exponential_nmf(hypers, dims):
    u, i, k = dims["U"], dims["I"], dims["K"]
    alpha0, lambda0 = hypers["alpha0"], hypers["lambda0"]
    alpha_vec = [alpha0] * k

    def log_prior(v, data):
        out = 0.0
        for row in v["theta"]:
            out = out + dens.dirichlet(row, alpha_vec)
        for row in v["beta"]:
            for x in row:
                out = out + dens.exponential(x, lambda0)
        return out

    return ModelDefinition(
        name="dirichlet_exponential_nmf",
        blocks=(
            BlockSpec("theta", Simplex(k), rows=u),
            BlockSpec("beta", LowerBound(0.0, k), rows=i),
        ),
        log_prior=log_prior,
        loglik_term=_nmf_loglik,
        num_observations=_nmf_num_observations,
        hyperparams=dict(hypers),
    )


def _build_gmm(hypers, dims, name="gmm"):
    k, d = dims["K"], dims["D"]
    alpha0 = hypers["alpha0"]
    mu_sigma0 = hypers["mu_sigma0"]
    sigma_sigma0 = hypers["sigma_sigma0"]
    alpha_vec = [alpha0] * k

    def log_prior(v, data):
        out = dens.dirichlet(v["theta"], alpha_vec)
        for kk in range(k):
            for dd in range(d):
                out = out + dens.normal(v["mu"][kk][dd], 0.0, mu_sigma0)
                out = out + dens.lognormal(v["sigma"][kk][dd], 0.0,
                                           sigma_sigma0)
        return out

    def loglik(v, data, n):
        yn = data["y"][n]
        theta, mu, sigma = v["theta"], v["mu"], v["sigma"]
        comps = []
        for kk in range(k):
            mk, sk = mu[kk], sigma[kk]
            z = [(yn[dd] - mk[dd]) / sk[dd] for dd in range(d)]
            lp = ad.log(theta[kk]) - d * _HALF_LOG_2PI
            for dd in range(d):
                lp = lp - ad.log(sk[dd])
            comps.append(lp - 0.5 * ad.dot(z, z))
        return ad.log_sum_exp(comps)

    return ModelDefinition(
        name=name,
        blocks=(
            BlockSpec("theta", Simplex(k)),
            BlockSpec("mu", Identity(d), rows=k),
            BlockSpec("sigma", LowerBound(0.0, d), rows=k),
        ),
        log_prior=log_prior,
        loglik_term=loglik,
        num_observations=lambda data: len(data["y"]),
        hyperparams=dict(hypers),
    )


@dataclass(frozen=True)
class _ZooEntry:
    builder: Callable[[dict, dict], ModelDefinition]
    hyper_defaults: Mapping[str, float]
    dim_names: tuple[str, ...]
    dim_defaults: Mapping[str, int]
    infer_dims: Callable[[Dataset], dict]


_ZOO: dict[str, _ZooEntry] = {
    "poisson_exponential": _ZooEntry(
        _build_poisson_exponential,
        {"rate": 1.0}, (), {}, lambda data: {}),
    "linreg_ard": _ZooEntry(
        _build_linreg_ard,
        {"a0": 1.0, "b0": 1.0, "c0": 1.0, "d0": 1.0},
        ("D",), {},
        lambda data: {"D": len(data["x"][0])}),
    "hier_logistic": _ZooEntry(
        _build_hier_logistic,
        {}, _HIER_DIMS, {},
        lambda data: {n: int(data[n]) for n in _HIER_DIMS}),
    "gamma_poisson_nmf": _ZooEntry(
        _build_gamma_poisson_nmf,
        {"a": 1.0, "b": 1.0, "c": 1.0, "d": 1.0},
        ("U", "I", "K"), {"K": 10},
        lambda data: {"U": len(data["y"]), "I": len(data["y"][0])}),
    "dirichlet_exponential_nmf": _ZooEntry(
        _build_dirichlet_exponential_nmf,
        {"alpha0": 1000.0, "lambda0": 0.1},
        ("U", "I", "K"), {"K": 10},
        lambda data: {"U": len(data["y"]), "I": len(data["y"][0])}),
    "gmm": _ZooEntry(
        lambda h, d: _build_gmm(h, d, name="gmm"),
        {"alpha0": 10000.0, "mu_sigma0": 0.1, "sigma_sigma0": 0.1},
        ("K", "D"), {"K": 10},
        lambda data: {"D": len(data["y"][0])}),
    "gmm_minibatch": _ZooEntry(
        lambda h, d: _build_gmm(h, d, name="gmm_minibatch"),
        {"alpha0": 10000.0, "mu_sigma0": 0.1, "sigma_sigma0": 0.1},
        ("K", "D"), {"K": 10},
        lambda data: {"D": len(data["y"][0])}),
}

ZOO_NAMES = tuple(_ZOO)


def make_model(name: str, hyperparams: Mapping[str, float] | None = None,
               dims: Mapping[str, int] | None = None) -> ModelDefinition:
    """Instantiate a zoo model by name.

    ``dims`` supplies the block-layout dimensions the model requires
    (missing ones fall back to defaults where a default exists);
    ``hyperparams`` overrides prior settings. Unknown names in either
    mapping are rejected.
    """
    try:
        entry = _ZOO[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown model {name!r}; available: {', '.join(ZOO_NAMES)}"
        ) from None
    hypers = dict(entry.hyper_defaults)
    for key, value in (hyperparams or {}).items():
        if key not in entry.hyper_defaults:
            raise ConfigurationError(
                f"model {name}: unknown hyperparameter {key!r}; "
                f"accepts {sorted(entry.hyper_defaults) or 'none'}")
        hypers[key] = float(value)
    resolved = dict(entry.dim_defaults)
    for key, value in (dims or {}).items():
        if key not in entry.dim_names:
            raise ConfigurationError(
                f"model {name}: unknown dimension {key!r}; "
                f"accepts {list(entry.dim_names) or 'none'}")
        resolved[key] = int(value)
    missing = [k for k in entry.dim_names if k not in resolved]
    if missing:
        raise ConfigurationError(
            f"model {name}: missing dimensions {missing}")
    for key, value in resolved.items():
        if value < 1:
            raise ConfigurationError(
                f"model {name}: dimension {key} must be >= 1, got {value}")
    return entry.builder(hypers, resolved)


def model_for_data(name: str, data: Dataset,
                   settings: Mapping[str, float] | None = None
                   ) -> ModelDefinition:
    """Build a zoo model around a dataset, inferring data-bound dimensions.

    ``settings`` mixes hyperparameters and explicit dimensions (e.g. K);
    keys are routed by name. Explicit settings win over inferred values.
    """
    if name not in _ZOO:
        raise ConfigurationError(
            f"unknown model {name!r}; available: {', '.join(ZOO_NAMES)}")
    entry = _ZOO[name]
    try:
        dims = dict(entry.infer_dims(data))
    except (IndexError, TypeError) as exc:
        raise ConfigurationError(
            f"model {name}: could not infer dimensions from dataset "
            f"({exc})") from exc
    hypers = {}
    for key, value in (settings or {}).items():
        if key in entry.dim_names:
            dims[key] = int(value)
        else:
            hypers[key] = value
    return make_model(name, hypers, dims)


# -- synthetic data -----------------------------------------------------------

def simulate_poisson_exponential(rng: np.random.Generator, n: int = 20,
                                 rate: float = 2.0):
    """Poisson counts at a rate drawn from Exponential(1)-ish scale."""
    lam = float(rng.exponential(rate))
    x = rng.poisson(lam, size=n)
    return Dataset({"N": n, "x": [int(v) for v in x]}), {"lam": lam}


def simulate_linreg_ard(rng: np.random.Generator, n: int, d: int,
                        noise: float = 1.0):
    """Regression data where only the first half of the coefficients act."""
    active = d // 2
    w = np.zeros(d)
    w[:active] = rng.uniform(1.0, 3.0, size=active) * \
        rng.choice([-1.0, 1.0], size=active)
    x = rng.standard_normal((n, d))
    y = x @ w + noise * rng.standard_normal(n)
    data = Dataset({"N": n, "D": d, "x": x.tolist(), "y": y.tolist()})
    return data, {"w": w.tolist(), "noise": noise, "active": active}


def simulate_hier_logistic(rng: np.random.Generator, n: int,
                           n_age: int = 4, n_edu: int = 4,
                           n_state: int = 8, n_region: int = 4):
    """Grouped binary outcomes with the model's own covariate structure."""
    n_age_edu = n_age * n_edu
    scales = {g: float(rng.uniform(0.3, 1.0)) for g in _HIER_GROUPS}
    sizes = dict(zip(_HIER_GROUPS, (n_age, n_edu, n_age_edu, n_state,
                                    n_region)))
    effects = {g: rng.normal(0.0, scales[g], size=sizes[g])
               for g in _HIER_GROUPS}
    beta = rng.normal(0.0, 1.0, size=5)
    age = rng.integers(0, n_age, size=n)
    edu = rng.integers(0, n_edu, size=n)
    age_edu = age * n_edu + edu
    state = rng.integers(0, n_state, size=n)
    region = rng.integers(0, n_region, size=n)
    female = rng.integers(0, 2, size=n).astype(float)
    black = rng.integers(0, 2, size=n).astype(float)
    v_prev = rng.standard_normal(n)
    yhat = (beta[0] + beta[1] * black + beta[2] * female
            + beta[4] * female * black + beta[3] * v_prev
            + effects["a"][age] + effects["b"][edu]
            + effects["c"][age_edu] + effects["d"][state]
            + effects["e"][region])
    y = (rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-yhat))).astype(int)
    data = Dataset({
        "N": n, "n_age": n_age, "n_edu": n_edu, "n_age_edu": n_age_edu,
        "n_state": n_state, "n_region_full": n_region,
        "age": age.tolist(), "edu": edu.tolist(),
        "age_edu": age_edu.tolist(), "state": state.tolist(),
        "region_full": region.tolist(), "female": female.tolist(),
        "black": black.tolist(), "v_prev_full": v_prev.tolist(),
        "y": [int(v) for v in y],
    })
    truth = {"beta": beta.tolist(), "scales": scales}
    return data, truth


def simulate_nmf_counts(rng: np.random.Generator, u: int, i: int, k: int,
                        scale: float = 1.0):
    """Low-rank Poisson count matrix shared by both factorization models."""
    theta = np.sort(rng.gamma(1.0, scale, size=(u, k)), axis=1)
    beta = rng.gamma(1.0, scale, size=(i, k))
    y = rng.poisson(theta @ beta.T)
    data = Dataset({"U": u, "I": i, "y": [[int(v) for v in row]
                                          for row in y]})
    return data, {"theta": theta.tolist(), "beta": beta.tolist()}


def simulate_gmm(rng: np.random.Generator, n: int, means, sigma: float = 0.5,
                 weights=None):
    """Well-separated diagonal Gaussian clusters around given means."""
    means = np.asarray(means, dtype=float)
    k, d = means.shape
    if weights is None:
        weights = np.full(k, 1.0 / k)
    weights = np.asarray(weights, dtype=float)
    z = rng.choice(k, size=n, p=weights / weights.sum())
    y = means[z] + sigma * rng.standard_normal((n, d))
    data = Dataset({"N": n, "y": y.tolist()})
    truth = {"means": means.tolist(), "sigma": sigma,
             "weights": weights.tolist(), "assignments": z.tolist()}
    return data, truth
