"""Acceptance gate.  Each test carries a ``criterion`` marker; the run ends with one PASS/FAIL line per criterion."""

import math
import time
from math import comb

import numpy as np
import pytest

from complexity_transfer.active import ActiveConfig, make_hidden_label_oracle, run_active_learning
from complexity_transfer.adapt import argmax_theta, likelihood, posterior_row, run_map_adaptation
from complexity_transfer.capacity import (
    CapacityParams,
    deviation_term,
    lambda_of_theta,
    log_growth,
    vc_dimension,
    weight_count,
)
from complexity_transfer.dataset import ShiftSpec, SplitSpec, make_shifted_pair, split_unlabeled
from complexity_transfer.harness import ExperimentSpec, run_experiment
from complexity_transfer.learner import NetConfig, loss_and_grad, training_counter
from complexity_transfer.prior import ComplexityPrior, PriorConfig, estimate_prior, search_interval

criterion = pytest.mark.criterion


@criterion(1, "log-growth matches exact binomial sums")
def test_log_growth_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for q in range(1, 61):
        partial = 0
        for d in range(0, q + 1):
            partial += comb(q, d)
            exact = math.log(partial)
            got = log_growth(q, d)
            err = abs(got - exact) / exact if exact else abs(got)
            worst = max(worst, err)
    assert worst <= 1e-10
    assert time.perf_counter() - t0 < 5.0


@criterion(2, "capacity hand values")
def test_capacity_hand_values():
    t0 = time.perf_counter()
    assert weight_count(20, 2, 25) == 577
    assert weight_count(3, 6, 10) == 106
    params = CapacityParams(20, 2, delta=0.05, n_examples=100)
    assert vc_dimension(weight_count(20, 2, 25)) >= 2 * params.n_examples
    dev = deviation_term(params, 25)
    assert dev == pytest.approx(3.3823, abs=1e-3)
    assert time.perf_counter() - t0 < 1.0


@criterion(3, "likelihood law")
def test_likelihood_law():
    rng = np.random.default_rng(2024)
    lam = rng.uniform(0.01, 50.0, 1000)
    err = rng.uniform(0.0, 1.0, 1000)
    reference = np.array([float(l) * math.exp(-float(l) * float(e)) for l, e in zip(lam, err)])
    np.testing.assert_array_max_ulp(likelihood(err, lam), reference, maxulp=2)
    grid = np.linspace(0.0, 1.0, 201)
    for l in (0.1, 1.0, 3.38, 25.0):
        values = likelihood(grid, l)
        assert np.all(np.diff(values) < 0)


@criterion(4, "simplicity preference when lambda times error is at least one")
def test_simplicity_regime():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 500:
        n_in, n_out = int(rng.integers(1, 30)), int(rng.integers(2, 6))
        n = int(rng.integers(10, 600))
        params = CapacityParams(n_in, n_out, float(rng.uniform(0.1, 2.0)), 0.05, n)
        t1, t2 = sorted(rng.choice(np.arange(1, 60), 2, replace=False))
        lam1, lam2 = lambda_of_theta(params, int(t1)), lambda_of_theta(params, int(t2))
        err = float(rng.uniform(0.0, 1.0))
        if min(lam1, lam2) * err < 1.0:
            continue
        density = float(rng.uniform(1e-3, 1.0))
        rows = [posterior_row(t1, err, lam1, density), posterior_row(t2, err, lam2, density)]
        small, big = (rows[0], rows[1]) if lam1 <= lam2 else (rows[1], rows[0])
        assert small.unnormalized_posterior >= big.unnormalized_posterior
        winner = argmax_theta([r.theta for r in rows], [r.unnormalized_posterior for r in rows])
        assert next(r for r in rows if r.theta == winner).unnormalized_posterior == small.unnormalized_posterior
        checked += 1


@criterion(5, "argmax invariant to scaling priors or likelihoods")
def test_argmax_invariances():
    rng = np.random.default_rng(11)
    for _ in range(100):
        size = int(rng.integers(2, 40))
        thetas = np.arange(2, 2 + size)
        lik = rng.uniform(0.0, 5.0, size)
        dens = rng.uniform(0.0, 0.4, size)
        if rng.random() < 0.3:
            lik[rng.integers(size)] = lik.max()
        base = argmax_theta(thetas, lik * dens)
        for c in (1e-6, 0.37, 2.0, 1e6):
            assert argmax_theta(thetas, lik * (dens * c)) == base
            assert argmax_theta(thetas, (lik * c) * dens) == base


@criterion(6, "prior procedure recovers the planted width")
def test_prior_procedure():
    assert search_interval(ComplexityPrior(23.19, 12.63), (2, 50)) == (10, 36)
    hits, mus = 0, []
    for seed in range(10):
        source, _ = make_shifted_pair(ShiftSpec(source_size=300, target_size=30, seed=1000 + seed))
        prior = estimate_prior(source, PriorConfig(k=20, theta_grid=tuple(range(2, 17)), seed=seed))
        mus.append(prior.mu)
        hits += 3.0 <= prior.mu <= 8.0
    print("prior means:", [round(m, 2) for m in mus])
    assert hits >= 8


@criterion(7, "active-learning accounting")
def test_active_accounting():
    _, target = make_shifted_pair(ShiftSpec(source_size=30, target_size=400, marginal_shift=0.5, seed=5))
    pool, _ = split_unlabeled(target, SplitSpec(0.5, 0))
    config = ActiveConfig(initial_size=10, budget=100, net_config=NetConfig(hidden_nodes=4, epochs=30), seed=8)
    logs = []
    for _ in range(2):
        oracle = make_hidden_label_oracle(pool)
        labeled, _ = run_active_learning(pool, oracle, config)
        assert oracle.query_count == 110
        assert len(labeled) == 110
        assert len(set(labeled.rows)) == 110
        logs.append([(r.iteration, r.row, r.label, repr(r.margin)) for r in labeled.log])
    assert logs[0] == logs[1]


TREND_SHIFT = ShiftSpec(
    n_features=2,
    source_size=300,
    target_size=1100,
    marginal_shift=0.5,
    posterior_shift=0.25,
    noise=0.2,
    seed=21,
)


@criterion(8, "end-to-end trend against budget and the source-only model")
def test_end_to_end_trend():
    t0 = time.perf_counter()
    spec = ExperimentSpec(
        source=TREND_SHIFT,
        prior_config=PriorConfig(k=10, theta_grid=tuple(range(2, 17)), seed=4),
        active_config=ActiveConfig(initial_size=10, batch_per_query=10),
        budgets=[50, 100, 200, 300, 400, 500],
        repetitions=10,
        seed=6,
    )
    report = run_experiment(spec)
    elapsed = time.perf_counter() - t0
    for agg in report.aggregates():
        print(f"budget {agg['budget']}: map {agg['mean_accuracy']:.3f} source {agg['mean_source_accuracy']:.3f}")
    assert np.median(report.accuracies(500)) >= np.median(report.accuracies(50)) + 0.02
    for b in (100, 200, 300, 400, 500):
        rows = [r for r in report.rows if r["budget"] == b]
        assert sum(r["accuracy"] >= r["source_accuracy"] for r in rows) >= 8
    assert elapsed < 600


@criterion(9, "adapt trains far fewer models than the prior sweep")
def test_cost_bound():
    source, target = make_shifted_pair(ShiftSpec(source_size=200, target_size=300, marginal_shift=0.5, seed=9))
    net = NetConfig(epochs=30)
    grid = tuple(range(2, 13))
    training_counter.reset()
    prior = estimate_prior(source, PriorConfig(k=4, theta_grid=grid, net_template=net, seed=1))
    prior_fits = training_counter.value
    assert prior_fits == 4 * len(grid)
    prior = ComplexityPrior.from_json(prior.to_json())

    budget = 100
    pool, _ = split_unlabeled(target, SplitSpec(0.5, 3))
    training_counter.reset()
    oracle = make_hidden_label_oracle(pool)
    labeled_pool, _ = run_active_learning(
        pool, oracle, ActiveConfig(10, budget, net_config=net.with_theta(prior.mean_theta), seed=2)
    )
    labeled = labeled_pool.to_table(pool, 2)
    params = CapacityParams(2, 2, n_examples=labeled.n_rows)
    result = run_map_adaptation(prior, labeled, params, net, (grid[0], grid[-1]))
    t_min, t_max = result.interval
    assert training_counter.value <= (t_max - t_min + 1) + budget + 1


@criterion(10, "analytic gradients match central differences")
def test_gradient_check():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5, 3))
    Y = np.eye(2)[[0, 1, 1, 0, 1]]
    params = [rng.standard_normal((4, 4)), rng.standard_normal((5, 2))]
    _, analytic = loss_and_grad(params, X, Y)
    eps = 1e-6
    for k, (P, A) in enumerate(zip(params, analytic)):
        numeric = np.zeros_like(P)
        for idx in np.ndindex(P.shape):
            up = [p.copy() for p in params]
            down = [p.copy() for p in params]
            up[k][idx] += eps
            down[k][idx] -= eps
            numeric[idx] = (loss_and_grad(up, X, Y)[0] - loss_and_grad(down, X, Y)[0]) / (2 * eps)
        rel = np.linalg.norm(A - numeric) / max(np.linalg.norm(A) + np.linalg.norm(numeric), 1e-12)
        assert rel <= 1e-4
