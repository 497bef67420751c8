"""End-to-end acceptance suite.

Each test checks one headline property of the package and prints a
single PASS/FAIL line (run with -s to see them on success). The later
criteria run full optimization loops and take minutes, not seconds.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize

from lbopt import bayes, benchmarks, gates, nets
from lbopt.baselines import marginal_objective
from lbopt.benchmarks import SequenceSpec, branin, branin_space, perturbed_sequence
from lbopt.engine import (LBOConfig, LBOOptimizer, SnapshotStore, elbo_objective,
                          fit_task, snapshot)
from lbopt.harness import ExperimentConfig, run, seed_for


def _verdict(n, desc, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {desc}"
    print("\n" + line + (f"  ({detail})" if detail else ""))
    assert ok, line + (f" -- {detail}" if detail else "")


def test_criterion_1_primal_dual_equality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    ok = True
    for _ in range(50):
        n, k = int(rng.integers(1, 21)), int(rng.integers(1, 11))
        Phi = rng.normal(size=(n, k))
        y = rng.normal(size=n)
        lam, beta = rng.uniform(0.1, 10, size=2)
        p = bayes.log_marginal_primal(Phi, y, lam, beta)
        d = bayes.log_marginal_dual(Phi, y, lam, beta)
        ok &= abs(p - d) <= 1e-6 * max(1.0, abs(p))
    scalar = bayes.log_marginal([[1.0]], [2.0], 1.0, 1.0)
    ok &= abs(scalar - (-2.2655)) <= 1e-4
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    _verdict(1, "primal/dual marginal likelihood equality", ok,
             f"scalar={scalar:.5f}, {elapsed:.2f}s")


def test_criterion_2_posterior_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    ok = True
    for _ in range(20):
        n, k = int(rng.integers(2, 15)), int(rng.integers(1, 6))
        Phi = rng.normal(size=(n, k))
        y = rng.normal(size=n)
        lam, beta = rng.uniform(0.1, 10, size=2)
        head = bayes.fit_posterior(Phi, y, lam, beta)
        A = beta * Phi.T @ Phi + lam * np.eye(k)
        cov = np.linalg.inv(A)
        mean = beta * cov @ Phi.T @ y
        ok &= bool(np.allclose(head.mean, mean, atol=1e-10))
        phi = rng.normal(size=k)
        mu, var = head.predict(phi)
        ok &= abs(mu[0] - float(phi @ mean)) < 1e-10
        draws = mean + rng.normal(size=(100_000, k)) @ np.linalg.cholesky(cov).T
        f = draws @ phi
        se_mu = f.std() / np.sqrt(len(f))
        ok &= abs(mu[0] - f.mean()) < 3 * max(se_mu, 1e-12)
        se_var = f.var() * np.sqrt(2.0 / len(f))
        ok &= abs((var[0] - 1.0 / beta) - f.var()) < 3 * max(se_var, 1e-12)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30.0
    _verdict(2, "posterior matches dense and sampling oracles", ok, f"{elapsed:.1f}s")


def test_criterion_3_gradient_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    ok = True

    # plain feature-net backward, relative error < 1e-4
    for _ in range(20):
        params = nets.init_net(int(rng.integers(1, 4)), int(rng.integers(2, 6)), 3, rng)
        X = rng.normal(size=(3, params[0].shape[0]))
        U = rng.normal(size=(3, params[-1].shape[0]))
        _, acts = nets.forward_cached(params, X)
        g = nets.backward(params, acts, U)
        d = [rng.normal(size=p.shape) for p in params]
        eps = 1e-5
        plus = float(np.sum(U * nets.forward([p + eps * x for p, x in zip(params, d)], X)))
        minus = float(np.sum(U * nets.forward([p - eps * x for p, x in zip(params, d)], X)))
        num = (plus - minus) / (2 * eps)
        ana = sum(float(np.sum(a * b)) for a, b in zip(g, d))
        ok &= abs(num - ana) <= 1e-4 * max(1.0, abs(num))

    # full ELBO gradients under common random numbers, relative error < 1e-3
    M, feat = 3, 5
    X = rng.uniform(size=(12, 2))
    y = rng.normal(size=12)
    params = {m: nets.init_net(2, feat, 2, rng) for m in range(2)}
    lg = rng.normal(size=M)
    _, pi = gates.sample_sticks(2.0, M, rng)
    u = rng.uniform(0.1, 0.9, size=M)
    anchors = {0: [[p + 0.1 for p in params[0]]]}
    _, grads, _ = elbo_objective(params, X, y, lg, 0.2, 0.8, pi, u, 0.5,
                                 anchors, reg_weight=0.7)
    eps = 1e-6

    def val(ps, lgv, ll, lb):
        v, _, _ = elbo_objective(ps, X, y, lgv, ll, lb, pi, u, 0.5,
                                 anchors, reg_weight=0.7)
        return v

    for m, g in grads["nets"].items():
        d = [rng.normal(size=p.shape) for p in params[m]]
        hi = dict(params); hi[m] = [p + eps * x for p, x in zip(params[m], d)]
        lo = dict(params); lo[m] = [p - eps * x for p, x in zip(params[m], d)]
        num = (val(hi, lg, 0.2, 0.8) - val(lo, lg, 0.2, 0.8)) / (2 * eps)
        ana = sum(float(np.sum(a * b)) for a, b in zip(g, d))
        ok &= abs(num - ana) <= 1e-3 * max(1.0, abs(num))
    d = rng.normal(size=M)
    num = (val(params, lg + eps * d, 0.2, 0.8) - val(params, lg - eps * d, 0.2, 0.8)) / (2 * eps)
    ok &= abs(num - float(grads["log_gammas"] @ d)) <= 1e-3 * max(1.0, abs(num))
    num = (val(params, lg, 0.2 + eps, 0.8) - val(params, lg, 0.2 - eps, 0.8)) / (2 * eps)
    ok &= abs(num - grads["log_lam"]) <= 1e-3 * max(1.0, abs(num))
    num = (val(params, lg, 0.2, 0.8 + eps) - val(params, lg, 0.2, 0.8 - eps)) / (2 * eps)
    ok &= abs(num - grads["log_beta"]) <= 1e-3 * max(1.0, abs(num))

    # single-net marginal objective (used by the NN baselines)
    p1 = nets.init_net(2, 4, 2, rng)
    _, g1, dll, dlb = marginal_objective(p1, X, y, 0.1, 0.5)
    d = [rng.normal(size=p.shape) for p in p1]
    num = (marginal_objective([p + eps * x for p, x in zip(p1, d)], X, y, 0.1, 0.5)[0]
           - marginal_objective([p - eps * x for p, x in zip(p1, d)], X, y, 0.1, 0.5)[0]) / (2 * eps)
    ana = sum(float(np.sum(a * b)) for a, b in zip(g1, d))
    ok &= abs(num - ana) <= 1e-3 * max(1.0, abs(num))

    # gate reparametrization derivative dz/dgamma
    for _ in range(20):
        gamma = float(rng.uniform(0.2, 5.0))
        uu = float(rng.uniform(0.05, 0.95))
        tau = float(rng.uniform(0.2, 1.0))
        z = gates.gate_from_uniform(gamma, uu, tau)
        ana = z * (1.0 - z) / (tau * gamma)
        h = 1e-6 * gamma
        num = (gates.gate_from_uniform(gamma + h, uu, tau)
               - gates.gate_from_uniform(gamma - h, uu, tau)) / (2 * h)
        ok &= abs(num - ana) <= 1e-3 * max(1.0, abs(num))

    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60.0
    _verdict(3, "gradient suite passes finite-difference checks", ok, f"{elapsed:.1f}s")


def test_criterion_4_ibp_statistics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    ok = True
    for alpha in (0.5, 2.0):
        draws = np.array([gates.sample_sticks(alpha, 10, rng)[1]
                          for _ in range(100_000)])
        expected = (alpha / (alpha + 1.0)) ** np.arange(1, 11)
        se = draws.std(axis=0) / np.sqrt(len(draws))
        ok &= bool(np.all(np.abs(draws.mean(axis=0) - expected) < 3 * se))
    for gamma in (0.1, 1.0, 10.0):
        for tau in (0.1, 0.5, 1.0):
            total, _ = quad(
                lambda s: np.exp(gates.concrete_log_density_logit(s, gamma, tau)),
                -np.inf, np.inf, limit=400)
            ok &= abs(total - 1.0) <= 1e-3
    pi = np.array([0.6, 0.3, 0.1])
    vals = [gates.kl_estimate(gates.prior_ratio(pi), pi, 0.5, rng)
            for _ in range(4000)]
    se = np.std(vals) / np.sqrt(len(vals))
    ok &= abs(np.mean(vals)) < 3 * se + 1e-6
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60.0
    _verdict(4, "IBP stick-breaking and Concrete gate statistics", ok, f"{elapsed:.1f}s")


BRANIN_MIN = 0.397887


def _branin_oracle_min():
    x1 = np.linspace(-5, 10, 300)
    x2 = np.linspace(0, 15, 300)
    X1, X2 = np.meshgrid(x1, x2)
    V = branin(X1, X2)
    i = np.unravel_index(np.argmin(V), V.shape)
    res = minimize(lambda x: branin(x[0], x[1]), [X1[i], X2[i]],
                   method="Nelder-Mead", options={"fatol": 1e-12})
    return float(res.fun)


def test_criterion_5_branin_single_task():
    t0 = time.perf_counter()
    oracle = _branin_oracle_min()
    assert abs(oracle - BRANIN_MIN) < 1e-4
    space = branin_space()
    cfg = LBOConfig(M=10, feat_dim=50, alpha=2.0, n_steps=300, update_steps=15,
                    plateau=30, reg_weight=1e-3, n_candidates=3000)
    bests = []
    for seed in range(10):
        opt = LBOOptimizer(space, cfg, sense="min", rng=seed_for(seed, "c5"))
        opt.start_task(1)
        for p in space.sample_uniform(5, seed_for(seed, "c5-init")):
            opt.tell(p, branin(*p))
        for _ in range(195):
            p = opt.ask()
            opt.tell(p, branin(*p))
        bests.append(opt.best())
    hits = sum(b <= oracle + 0.1 for b in bests)
    elapsed = time.perf_counter() - t0
    ok = hits >= 8 and elapsed < 1200.0
    _verdict(5, "LBO reaches Branin optimum + 0.1 in >= 8/10 seeds", ok,
             f"hits={hits}/10, bests={[round(b, 3) for b in bests]}, {elapsed:.0f}s")


LBO_SPEC = {"kind": "lbo", "M": 10, "feat_dim": 50, "alpha": 2.0,
            "n_steps": 200, "update_steps": 10, "plateau": 30,
            "reg_weight": 1e-2, "n_candidates": 2000}


def _mean_best_at(rows, name, rep, at=50, tasks=(2, 3, 4, 5)):
    vals = [float(r["best"]) for r in rows
            if r["optimizer"] == name and int(r["rep"]) == rep
            and int(r["task"]) in tasks and int(r["eval_index"]) == at]
    return float(np.mean(vals))


def test_criterion_6_lifelong_benefit(tmp_path):
    t0 = time.perf_counter()

    def sequence_run(sigma, rival, outdir):
        cfg = ExperimentConfig(
            benchmark={"type": "branin_sequence", "sigma": sigma,
                       "n_functions": 5, "seed": 123},
            optimizers=[LBO_SPEC, rival],
            budget=50, init=5, repetitions=10, seed=0, outdir=str(outdir))
        rows, _ = run(cfg)
        return rows

    rows = sequence_run(0.01, {"kind": "single_task_nn", "fit_steps": 200,
                               "update_steps": 10, "n_candidates": 2000},
                        tmp_path / "s001")
    wins_small = 0
    for rep in range(10):
        if _mean_best_at(rows, "lbo", rep) <= _mean_best_at(rows, "single_task_nn", rep):
            wins_small += 1

    rows = sequence_run(1.0, {"kind": "shared_nn", "width": 50, "fit_steps": 200,
                              "update_steps": 10, "n_candidates": 2000},
                        tmp_path / "s1")
    wins_big = 0
    for rep in range(10):
        ys = [float(r["y"]) for r in rows
              if int(r["rep"]) == rep and int(r["task"]) in (2, 3, 4, 5)]
        value_range = max(ys) - min(ys)
        lbo = _mean_best_at(rows, "lbo", rep)
        shared = _mean_best_at(rows, "shared_nn_50", rep)
        if lbo <= shared + 0.05 * value_range:
            wins_big += 1

    elapsed = time.perf_counter() - t0
    ok = wins_small >= 7 and wins_big >= 7 and elapsed < 7200.0
    _verdict(6, "lifelong benefit over per-task and shared-net baselines", ok,
             f"sigma=0.01: {wins_small}/10 vs single-task; "
             f"sigma=1: {wins_big}/10 within 5% of shared; {elapsed:.0f}s")


CAP_CFG = LBOConfig(M=10, feat_dim=50, alpha=2.0, n_steps=600, plateau=0,
                    reg_weight=1.0)


def _design(space, f, rng, n=40):
    pts = space.sample_uniform(n, rng)
    X = space.encode_many(pts)
    y = np.array([f(p) for p in pts])
    return X, y


def test_criterion_7_capacity_behavior():
    t0 = time.perf_counter()
    space = branin_space()
    small_mtilde = no_increase = new_net = 0
    mtildes = []
    for seed in range(10):
        rng = seed_for(seed, "c7")
        store = SnapshotStore()
        fns = perturbed_sequence(SequenceSpec(sigma=0.01, seed=100 + seed))
        last = None
        for t, f in enumerate(fns, start=1):
            X, y = _design(space, f, rng)
            model = fit_task(t, X, y, store, CAP_CFG, rng)
            snapshot(model, store)
            last = (X, y)
        mtilde5 = store.active_count(CAP_CFG.M)
        mtildes.append(mtilde5)
        small_mtilde += mtilde5 <= 5

        # identical task again: no previously unused network should switch on
        used = store.gate_matrix(CAP_CFG.M).any(axis=0)
        model6 = fit_task(6, last[0], last[1], store, CAP_CFG, rng)
        row6 = model6.gate_row()
        no_increase += not any(row6[m] and not used[m] for m in range(CAP_CFG.M))
        snapshot(model6, store)

        # deliberately dissimilar task: at least one fresh network activates
        used7 = store.gate_matrix(CAP_CFG.M).any(axis=0)
        f7 = lambda p: 50.0 * np.sin(4.0 * p[0]) * np.sin(4.0 * p[1])
        X7, y7 = _design(space, f7, rng)
        model7 = fit_task(7, X7, y7, store, CAP_CFG, rng)
        row7 = model7.gate_row()
        new_net += any(row7[m] and not used7[m] for m in range(CAP_CFG.M))

    elapsed = time.perf_counter() - t0
    ok = small_mtilde > 5 and no_increase >= 8 and new_net >= 8
    _verdict(7, "network capacity grows with dissimilarity only", ok,
             f"mtilde={mtildes}, small={small_mtilde}/10, "
             f"no_increase={no_increase}/10, new_net={new_net}/10, {elapsed:.0f}s")


def test_criterion_8_lifelong_scalability():
    t0 = time.perf_counter()
    space = branin_space()
    cfg = LBOConfig(M=10, feat_dim=50, alpha=2.0, n_steps=150, plateau=0,
                    reg_weight=1e-2)
    fns = perturbed_sequence(SequenceSpec(sigma=0.01, n_functions=10, seed=42))
    times = np.full(10, np.inf)
    for attempt in range(2):   # keep the minimum of two passes per task
        rng = seed_for(7, "c8", attempt)
        store = SnapshotStore()
        for t, f in enumerate(fns, start=1):
            X, y = _design(space, f, rng)
            t1 = time.perf_counter()
            model = fit_task(t, X, y, store, cfg, rng)
            times[t - 1] = min(times[t - 1], time.perf_counter() - t1)
            snapshot(model, store)
    ratio = times[9] / times[1]

    cum = np.cumsum(times)
    ts = np.arange(1, 11, dtype=float)
    coef, cov = np.polyfit(ts, cum, 2, cov=True)
    c2, se2 = coef[0], float(np.sqrt(cov[0, 0]))
    linear_enough = abs(c2) <= 2 * se2 or abs(c2) * 10 <= abs(coef[1])

    elapsed = time.perf_counter() - t0
    ok = ratio <= 2.0 and linear_enough
    _verdict(8, "per-task cost flat, cumulative cost at most linear", ok,
             f"t10/t2={ratio:.2f}, c2={c2:.4f} (se {se2:.4f}), {elapsed:.0f}s")


def test_criterion_9_determinism_and_resume(tmp_path):
    t0 = time.perf_counter()

    def cfg(outdir, optimizers):
        return ExperimentConfig(
            benchmark={"type": "branin_sequence", "sigma": 0.5,
                       "n_functions": 3, "seed": 9},
            optimizers=optimizers, budget=8, init=3, repetitions=2,
            seed=5, outdir=str(outdir))

    lbo_tiny = {"kind": "lbo", "M": 3, "feat_dim": 8, "n_steps": 40,
                "update_steps": 5, "plateau": 0, "reg_weight": 1e-3,
                "n_candidates": 300}
    both = [{"kind": "random"}, lbo_tiny]

    run(cfg(tmp_path / "a", both))
    run(cfg(tmp_path / "b", both))
    identical = (tmp_path / "a" / "results.csv").read_bytes() \
        == (tmp_path / "b" / "results.csv").read_bytes()

    # kill/resume: first finish only one optimizer, then rerun with both
    run(cfg(tmp_path / "c", [{"kind": "random"}]))
    run(cfg(tmp_path / "c", both))
    resumed = (tmp_path / "a" / "results.csv").read_bytes() \
        == (tmp_path / "c" / "results.csv").read_bytes()

    elapsed = time.perf_counter() - t0
    ok = identical and resumed
    _verdict(9, "byte-identical reruns and kill/resume equivalence", ok,
             f"identical={identical}, resumed={resumed}, {elapsed:.0f}s")
