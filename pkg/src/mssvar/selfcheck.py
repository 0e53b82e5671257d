"""Built-in correctness checks behind the ``selfcheck`` subcommand."""

from __future__ import annotations

import tempfile

import numpy as np
from scipy import integrate, stats

from . import priors, regimes, structural
from .config import ModelConfig
from .geweke import geweke_joint_test
from .patterns import build_pattern_set


def _check(name: str, ok: bool, detail: str = "") -> bool:
    tag = "ok" if ok else "FAIL"
    print(f"[{tag}] {name}" + (f": {detail}" if detail else ""))
    return ok


def check_filter_enumeration() -> bool:
    """Filtered and smoothed marginals against brute-force path enumeration."""
    rng = np.random.default_rng(7)
    T, M = 8, 2
    loglik = rng.normal(size=(T, M))
    P = rng.dirichlet(np.ones(M) * 3, size=M)
    pi0 = rng.dirichlet(np.ones(M))
    filtered, logml = regimes.forward_filter(loglik, P, pi0)
    smoothed = regimes.smoothed_probabilities(loglik, P, pi0)

    joint = np.zeros([M] * T)
    for path in np.ndindex(*([M] * T)):
        lp = np.log(pi0[path[0]]) + loglik[0, path[0]]
        for t in range(1, T):
            lp += np.log(P[path[t - 1], path[t]]) + loglik[t, path[t]]
        joint[path] = np.exp(lp)
    total = joint.sum()
    err = abs(logml - np.log(total))
    for t in range(T):
        axes = tuple(i for i in range(T) if i != t)
        marg = joint.sum(axis=axes) / total
        err = max(err, np.max(np.abs(marg - smoothed[t])))
    # filtered marginals condition on y_{1:t} only, so the enumeration must
    # stop the likelihood at t; marginalizing the full-sample joint over
    # future states would give the smoothed marginals again
    for t in range(T):
        part = np.zeros([M] * (t + 1))
        for path in np.ndindex(*([M] * (t + 1))):
            lp = np.log(pi0[path[0]]) + loglik[0, path[0]]
            for u in range(1, t + 1):
                lp += np.log(P[path[u - 1], path[u]]) + loglik[u, path[u]]
            part[path] = np.exp(lp)
        cond = part.sum(axis=tuple(range(t)))
        err = max(err, np.max(np.abs(cond / cond.sum() - filtered[t])))
    return _check("filter vs path enumeration", err < 1e-10, f"max abs err {err:.2e}")


def check_pattern_marginal(n_instances: int = 8) -> bool:
    """Closed-form pattern marginal against adaptive quadrature (r <= 2)."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(n_instances):
        r = int(rng.integers(1, 3))
        T_m = int(rng.integers(1, 9))
        gamma = float(rng.uniform(0.3, 3.0))
        G = rng.normal(size=(r, r))
        S = G @ G.T + np.eye(r)
        w = rng.normal(size=r)
        got = structural.pattern_log_marginal(S, w, gamma, T_m)

        def integrand(*b):
            b = np.asarray(b)
            return float(
                (2 * np.pi * gamma) ** (-r / 2)
                * np.abs(b @ w) ** T_m
                * np.exp(-0.5 * b @ S @ b)
            )

        lim = 8.0 / np.sqrt(np.linalg.eigvalsh(S).min()) * max(1.0, np.sqrt(T_m))
        val, _ = integrate.nquad(
            integrand, [(-lim, lim)] * r, opts={"epsabs": 1e-12, "epsrel": 1e-9, "limit": 200}
        )
        worst = max(worst, abs(np.log(val) - got))
    return _check("pattern marginal vs quadrature", worst < 1e-6, f"max abs log err {worst:.2e}")


def check_distributions(n: int = 100_000) -> bool:
    """KS agreement between samplers and integrated hand-coded densities."""
    rng = np.random.default_rng(23)
    crit = 1.63 / np.sqrt(n)
    ok = True

    draws = priors.sample_ig2(3.0, 7.0, rng, size=n)
    stat = stats.kstest(draws, lambda x: stats.chi2.sf(3.0 / x, 7.0)).statistic
    ok &= _check("IG2 sampler vs density", stat < crit, f"KS {stat:.4f} < {crit:.4f}")

    draws = priors.sample_gamma(2.5, 1.7, rng, size=n)
    stat = stats.kstest(draws, lambda x: stats.gamma.cdf(x, 2.5, scale=1.7)).statistic
    ok &= _check("gamma sampler vs density", stat < crit, f"KS {stat:.4f} < {crit:.4f}")

    draws = np.array([priors.sample_gig(0.5, 2.0, 3.0, rng) for _ in range(n // 10)])
    grid = np.linspace(1e-6, draws.max() * 1.5, 4000)
    pdf = np.exp(priors.gig_log_density(grid, 0.5, 2.0, 3.0))
    cdf = integrate.cumulative_trapezoid(pdf, grid, initial=0.0)
    cdf /= cdf[-1]
    stat = stats.kstest(draws, lambda x: np.interp(x, grid, cdf)).statistic
    crit10 = 1.63 / np.sqrt(n // 10)
    ok &= _check("GIG sampler vs density", stat < crit10, f"KS {stat:.4f} < {crit10:.4f}")

    draws = np.array(
        [priors.sample_truncated_normal(0.4, 2.0, -1.0, 1.0, rng) for _ in range(n // 10)]
    )
    sd = np.sqrt(2.0)
    a, b = (-1.0 - 0.4) / sd, (1.0 - 0.4) / sd
    stat = stats.kstest(draws, lambda x: stats.truncnorm.cdf(x, a, b, loc=0.4, scale=sd)).statistic
    ok &= _check("truncated normal sampler vs density", stat < crit10, f"KS {stat:.4f} < {crit10:.4f}")
    return bool(ok)


def check_store_roundtrip() -> bool:
    from .data import empty_dataset
    from .engine import run_chain
    from .store import load_store, persist_store

    config = ModelConfig(
        N=2, p=1, M=2, draws=20, burnin=5,
        patterns=build_pattern_set({0: ["**", "*0"]}, 2),
        nu_s_B=10.0, s_s_B=10.0,
    )
    store = run_chain(config, empty_dataset(2, 1))
    with tempfile.TemporaryDirectory() as tmp:
        persist_store(store, tmp)
        loaded = load_store(tmp)
        same = all(
            np.array_equal(store.blocks[k], loaded.blocks[k]) for k in store.blocks
        )
    return _check("store round trip", same, "bit-exact" if same else "mismatch")


def check_geweke(fast: bool) -> bool:
    # Tight shrinkage keeps the prior predictive numerically bounded: with
    # loose hyperpriors the unit-mean prior on the own lag puts real mass on
    # explosive systems and the resimulation cycle overflows float64.
    config = ModelConfig(
        N=2, p=1, M=2,
        patterns=build_pattern_set({0: ["**", "*0"]}, 2),
        nu_B=60.0, nu_gamma_B=60.0, s_s_B=55.0, nu_s_B=60.0,
        nu_A=60.0, nu_gamma_A=60.0, s_s_A=2.2, nu_s_A=60.0,
        omega_shape=3.0, omega_scale=0.1,
    )
    cycles = 2_000 if fast else 20_000
    bound = 5.0 if fast else 4.0
    result = geweke_joint_test(config, cycles, np.random.default_rng(5), T=30)
    z = result.max_abs_z
    return _check(
        "joint-distribution test", z < bound, f"max |z| {z:.2f} over {len(result.z_scores)} stats"
    )


def run_selfcheck(fast: bool = False) -> bool:
    ok = True
    ok &= check_filter_enumeration()
    ok &= check_pattern_marginal()
    ok &= check_distributions()
    ok &= check_store_roundtrip()
    ok &= check_geweke(fast)
    print("selfcheck " + ("passed" if ok else "FAILED"))
    return bool(ok)
