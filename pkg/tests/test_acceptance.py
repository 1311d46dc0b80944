"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. Stochastic criteria pin
seeds; every tolerance is stated inline next to its assertion.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from meanfield import autodiff as ad
from meanfield import transforms as tr
from meanfield import zoo
from meanfield.cli import main as cli_main
from meanfield.engine import FitConfig, VariationalParams, draw_posterior, \
    estimate_gradients, fit, substream, STREAM_GRAD
from meanfield.model import Dataset, log_joint_unconstrained, \
    minibatch_log_joint, constrain_blocks
from util import EMPTY_DATA, central_diff, gaussian_toy, numeric_jacobian, \
    small_zoo_instance


def _report(number, text):
    print(f"\nACCEPTANCE {number} PASS: {text}")


def test_c01_gradient_oracle_all_zoo_models():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    for name in zoo.ZOO_NAMES:
        model, data = small_zoo_instance(name)
        for _ in range(20):
            zeta = list(rng.normal(0.0, 1.0, model.dim))
            g = ad.Graph()
            leaves = [g.leaf(z) for z in zeta]
            out = log_joint_unconstrained(model, data, leaves)
            assert math.isfinite(out.val), name
            grads = ad.gradient(out, leaves)
            fd = central_diff(
                lambda z: log_joint_unconstrained(model, data, z),
                zeta, h=1e-5)
            for gv, fv in zip(grads, fd):
                assert abs(gv - fv) <= 1e-5 * max(1.0, abs(fv)), name
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _report(1, f"7 zoo models x 20 points, AD vs central differences "
               f"within 1e-5 relative ({elapsed:.1f}s)")


_ACCEPT_KINDS = [
    tr.Identity(3),
    tr.LowerBound(0.0, 3),
    tr.UpperBound(4.0, 3),
    tr.Interval(-2.0, 5.0, 3),
    tr.Simplex(4),
    tr.Ordered(4),
    tr.PositiveOrdered(4),
]


def test_c02_transform_suite():
    started = time.perf_counter()
    rng = np.random.default_rng(202)
    for kind in _ACCEPT_KINDS:
        n = tr.unconstrained_dim(kind)
        for _ in range(100):
            zeta = list(rng.normal(0.0, 2.0, n))
            theta, _ = tr.constrain(kind, zeta)
            assert np.allclose(tr.unconstrain(kind, theta), zeta,
                               atol=1e-10, rtol=0.0)
        for _ in range(20):
            zeta = list(rng.normal(0.0, 1.5, n))
            _, log_det = tr.constrain(kind, zeta)

            def free(z, kind=kind):
                th, _ = tr.constrain(kind, z)
                return th[:-1] if isinstance(kind, tr.Simplex) else th

            _, logabs = np.linalg.slogdet(numeric_jacobian(free, zeta,
                                                           h=1e-6))
            assert abs(log_det - logabs) <= 1e-5 * max(1.0, abs(logabs))
        for _ in range(1000):
            zeta = list(rng.normal(0.0, 2.5, n))
            theta, _ = tr.constrain(kind, zeta)
            tr.check_value(kind, theta)  # raises if any predicate fails
            if isinstance(kind, tr.Simplex):
                assert abs(math.fsum(theta) - 1.0) <= 1e-12
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    _report(2, f"round trip 1e-10, numeric Jacobian 1e-5, predicates on "
               f"1000 draws per kind ({elapsed:.1f}s)")


def test_c03_gradient_estimator_unbiased():
    started = time.perf_counter()
    toy = gaussian_toy()
    rng = np.random.default_rng(52)
    n = 100_000
    for point in range(5):
        mu = float(rng.uniform(-2.0, 2.0))
        omega = float(rng.uniform(-1.0, 0.5))
        params = VariationalParams([mu], [omega])
        samples_mu = np.empty(n)
        samples_omega = np.empty(n)
        for i in range(n):
            g_mu, g_omega = estimate_gradients(
                toy, EMPTY_DATA, params, 1,
                np.random.SeedSequence(52, spawn_key=(point, i)))
            samples_mu[i] = g_mu[0]
            samples_omega[i] = g_omega[0]
        for samples, analytic in [
                (samples_mu, -mu),
                (samples_omega, 1.0 - math.exp(2.0 * omega))]:
            se = samples.std(ddof=1) / math.sqrt(n)
            assert abs(samples.mean() - analytic) <= 3.0 * se, \
                (point, mu, omega, samples.mean(), analytic, se)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    _report(3, f"mean of 1e5 single-sample gradients within 3 SE of the "
               f"analytic gradient at 5 points ({elapsed:.1f}s)")


def test_c04_conjugate_recovery_standard_normal():
    toy = gaussian_toy()
    params, _ = fit(toy, EMPTY_DATA, FitConfig(max_iterations=2000, seed=3))
    assert abs(params.mu[0]) < 0.05
    assert abs(params.omega[0]) < 0.05
    _report(4, f"standard-normal prior recovered to |mu|={abs(params.mu[0]):.3f}, "
               f"|omega|={abs(params.omega[0]):.3f} (< 0.05) in 2000 iterations")


def test_c05_conjugate_recovery_poisson_exponential():
    model = zoo.make_model("poisson_exponential")
    data = Dataset({"x": [3, 5]})
    cfg = FitConfig(max_iterations=3000, seed=0, grad_samples=40,
                    threshold=1e-6, eval_interval=500, elbo_samples=200)
    params, _ = fit(model, data, cfg)
    draws = draw_posterior(model, params, 10_000, substream(0, 500))
    lam = draws.samples["lam"]
    mean, var = float(lam.mean()), float(lam.var())
    # exact posterior is Gamma(9, 3): mean 3.0, variance 1.0
    assert abs(mean - 3.0) <= 0.05 * 3.0
    assert abs(var - 1.0) <= 0.15 * 1.0
    _report(5, f"Poisson-exponential posterior mean {mean:.3f} (5% of 3.0), "
               f"variance {var:.3f} (15% of 1.0) from 1e4 draws")


def test_c06_gmm_marginalization_oracle():
    rng = np.random.default_rng(606)
    for n, k in [(1, 2), (2, 3), (3, 2), (4, 3)]:
        data = Dataset({"y": [[float(v)] for v in rng.normal(0.0, 2.0, n)]})
        model = zoo.model_for_data(
            "gmm", data, {"K": k, "alpha0": 2.0, "mu_sigma0": 2.0,
                          "sigma_sigma0": 1.0})
        zeta = list(rng.normal(0.0, 0.8, model.dim))
        values, _ = constrain_blocks(model, zeta)
        theta, mu, sigma = values["theta"], values["mu"], values["sigma"]
        mixture = math.fsum(model.loglik_term(values, data, i)
                            for i in range(n))
        total = 0.0
        for assignment in np.ndindex(*(k,) * n):
            logp = 0.0
            for i, z in enumerate(assignment):
                y = data["y"][i][0]
                logp += (math.log(theta[z])
                         - 0.5 * math.log(2.0 * math.pi)
                         - math.log(sigma[z][0])
                         - 0.5 * ((y - mu[z][0]) / sigma[z][0]) ** 2)
            total += math.exp(logp)
        assert abs(mixture - math.log(total)) <= 1e-10, (n, k)
    _report(6, "mixture log likelihood equals brute-force assignment "
               "enumeration within 1e-10 for N<=4, K<=3, D=1")


def test_c07_desk_scale_gmm_fit():
    started = time.perf_counter()
    rng = np.random.default_rng(0)
    true_means = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]]
    data, _ = zoo.simulate_gmm(rng, 1000, true_means, sigma=0.5)
    model = zoo.model_for_data(
        "gmm", data, {"K": 3, "mu_sigma0": 10.0, "sigma_sigma0": 1.0})
    cfg = FitConfig(max_iterations=3000, seed=0, minibatch=250,
                    init="gaussian", eval_interval=500, elbo_samples=10,
                    threshold=1e-8)
    assert cfg.max_iterations <= 10_000
    params, _ = fit(model, data, cfg)
    draws = draw_posterior(model, params, 1000, substream(0, 700))
    fitted = draws.samples["mu"].mean(axis=0)
    worst = min(
        max(float(np.linalg.norm(fitted[p] - np.asarray(true_means[k])))
            for k, p in enumerate(perm))
        for perm in itertools.permutations(range(3)))
    elapsed = time.perf_counter() - started
    assert worst <= 0.1
    assert elapsed < 300.0
    _report(7, f"3-component GMM means recovered to {worst:.3f} "
               f"(<= 0.1) after label alignment in {elapsed:.0f}s")


def test_c08_minibatch_correctness():
    rng = np.random.default_rng(808)
    for name in zoo.ZOO_NAMES:
        model, data = small_zoo_instance(name)
        n = model.num_observations(data)
        zeta = list(rng.normal(0.0, 0.7, model.dim))
        full = log_joint_unconstrained(model, data, zeta)
        b = 2 if n % 2 == 0 else 1
        scaled = [minibatch_log_joint(model, data,
                                      list(range(i, i + b)), zeta)
                  for i in range(0, n, b)]
        assert abs(math.fsum(scaled) / len(scaled) - full) <= \
            1e-12 * max(1.0, abs(full)), name

    model, data = small_zoo_instance("gmm")
    n = model.num_observations(data)
    params = VariationalParams(np.zeros(model.dim), np.zeros(model.dim))
    seed = np.random.SeedSequence(5, spawn_key=(STREAM_GRAD, 0))
    g_full = estimate_gradients(model, data, params, 2, seed)
    g_batch = estimate_gradients(model, data, params, 2, seed,
                                 batch=list(range(n)))
    assert g_full[0].tolist() == g_batch[0].tolist()
    assert g_full[1].tolist() == g_batch[1].tolist()

    cfg_full = FitConfig(max_iterations=30, seed=9, eval_interval=15,
                         elbo_samples=5)
    cfg_bn = FitConfig(max_iterations=30, seed=9, eval_interval=15,
                       elbo_samples=5, minibatch=n)
    p_full, _ = fit(model, data, cfg_full)
    p_bn, _ = fit(model, data, cfg_bn)
    assert p_full.mu.tolist() == p_bn.mu.tolist()
    assert p_full.omega.tolist() == p_bn.omega.tolist()
    _report(8, "partition-averaged minibatch joints equal the full joint "
               "(1e-12); B=N path bit-identical to full batch")


def test_c09_ard_shrinkage_and_heldout_rmse():
    rng = np.random.default_rng(2024)
    data, truth = zoo.simulate_linreg_ard(rng, n=2200, d=50)
    x, y = data["x"], data["y"]
    train = Dataset({"N": 2000, "D": 50, "x": x[:2000], "y": y[:2000]})
    ho_x, ho_y = np.asarray(x[2000:]), np.asarray(y[2000:])
    active = truth["active"]

    model = zoo.model_for_data("linreg_ard", train, {})
    cfg = FitConfig(max_iterations=2500, seed=0, minibatch=250,
                    threshold=1e-8, eval_interval=500, elbo_samples=10)
    params, _ = fit(model, train, cfg)
    draws = draw_posterior(model, params, 400, substream(0, 900))
    w_mean = draws.samples["w"].mean(axis=0)

    abs_w = np.abs(w_mean)
    null_mean = float(abs_w[active:].mean())
    active_mean = float(abs_w[:active].mean())
    assert null_mean <= active_mean / 3.0

    rmse_vi = float(np.sqrt(np.mean((ho_x @ w_mean - ho_y) ** 2)))
    xtr, ytr = np.asarray(train["x"]), np.asarray(train["y"])
    w_ridge = np.linalg.solve(xtr.T @ xtr + 1.0 * np.eye(50), xtr.T @ ytr)
    rmse_ridge = float(np.sqrt(np.mean((ho_x @ w_ridge - ho_y) ** 2)))
    assert abs(rmse_vi - rmse_ridge) <= 0.10 * rmse_ridge
    _report(9, f"null |w| mean {null_mean:.3f} <= active/3 "
               f"({active_mean / 3:.3f}); held-out RMSE {rmse_vi:.3f} vs "
               f"ridge {rmse_ridge:.3f} (within 10%)")


def test_c10_cli_reproducibility(tmp_path):
    data_path = tmp_path / "d.json"
    data_path.write_text('{"N": 4, "x": [3, 5, 2, 4]}')
    rng = np.random.default_rng(0)
    gmm_data, _ = zoo.simulate_gmm(rng, 40, [[-2.0], [2.0]], sigma=0.6)
    gmm_path = tmp_path / "g.json"
    gmm_path.write_text(json.dumps(dict(gmm_data.entries)))

    runs = [
        ["--model", "poisson_exponential", "--data", str(data_path),
         "--seed", "7", "--max-iters", "200", "--draws", "100"],
        ["--model", "gmm_minibatch", "--data", str(gmm_path),
         "--seed", "11", "--max-iters", "120", "--minibatch", "10",
         "--draws", "50", "--init", "gaussian", "--hyper", "K=2",
         "--hyper", "mu_sigma0=3.0", "--hyper", "sigma_sigma0=1.0",
         "--hyper", "alpha0=5.0"],
    ]
    for tag, argv in zip(("poisson", "gmm"), runs):
        outputs = []
        for rep in ("a", "b"):
            out = tmp_path / f"{tag}_{rep}.csv"
            diag = tmp_path / f"{tag}_{rep}_diag.csv"
            assert cli_main(argv + ["--output", str(out),
                                    "--diagnostic", str(diag)]) == 0
            outputs.append((out.read_bytes(), diag.read_bytes()))
        assert outputs[0][0] == outputs[1][0], f"{tag}: samples differ"
        assert outputs[0][1] == outputs[1][1], f"{tag}: diagnostics differ"
    _report(10, "repeated CLI runs with a shared seed produce byte-identical "
                "samples and diagnostics CSVs")
