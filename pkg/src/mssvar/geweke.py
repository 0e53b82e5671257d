"""Joint-distribution test of the sampler (prior simulator vs. Gibbs cycle).

Two routes to the same joint law of (parameters, data): independent draws
from prior and data simulator, versus a chain alternating one Gibbs sweep
with a fresh data simulation given the current parameters.  Matching
moments of monitored statistics (z-scores from independent and
autocorrelation-robust standard errors) is a necessary condition for every
conditional update being correct.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sv
from .config import ModelConfig
from .data import Dataset, build_design
from .engine import gibbs_sweep
from .patterns import apply_pattern
from .priors import ShrinkageChain, sample_gamma
from .simulate import DgpTruth, _simulate_regimes, _simulate_volatility, simulate_observations
from .state import ParameterState


def prior_draw(config: ModelConfig, T: int, rng: np.random.Generator) -> ParameterState:
    """Ancestral draw of every unknown, hierarchy first."""
    N, M = config.N, config.M
    shrink_B = ShrinkageChain.from_prior(
        N, rng, nu=config.nu_B, nu_gamma=config.nu_gamma_B, s_s=config.s_s_B, nu_s=config.nu_s_B
    )
    shrink_A = ShrinkageChain.from_prior(
        N, rng, nu=config.nu_A, nu_gamma=config.nu_gamma_A, s_s=config.s_s_A, nu_s=config.nu_s_A
    )
    from .var import minnesota_moments

    mean_rows, omega_diag = minnesota_moments(N, config.p, config.d_dim)
    A = mean_rows + np.sqrt(shrink_A.gamma[:, None] * omega_diag[None, :]) * rng.standard_normal(
        mean_rows.shape
    )
    P = np.empty((M, M))
    for m in range(M):
        alpha = np.ones(M)
        alpha[m] += config.d_m
        P[m] = rng.dirichlet(alpha)
    pi0 = rng.dirichlet(np.ones(M))
    s = _simulate_regimes(P, pi0, T, rng)
    sigma2_omega = sample_gamma(config.omega_shape, config.omega_scale, rng, size=N)
    if config.fix_omega_at_zero:
        omega = np.zeros((N, M))
    else:
        omega = np.sqrt(sigma2_omega)[:, None] * rng.standard_normal((N, M))
    rho = -1.0 + 2.0 * rng.random(N)
    h = _simulate_volatility(rho, T, rng)
    kappa = np.zeros((N, M), dtype=np.int64)
    B = np.zeros((M, N, N))
    for n in range(N):
        K = config.patterns.K(n)
        for m in range(M):
            k = int(rng.integers(K)) if K > 1 else 0
            kappa[n, m] = k
            pat = config.patterns.equations[n][k]
            b = np.sqrt(shrink_B.gamma[n]) * rng.standard_normal(pat.r)
            B[m, n, :] = apply_pattern(b, pat)
    modal = int(np.argmax(sv.MIXTURE.probs))
    return ParameterState(
        A=A,
        B=B,
        kappa=kappa,
        s=s,
        P=P,
        pi0=pi0,
        h=h,
        omega=omega,
        rho=rho,
        sigma2_omega=sigma2_omega,
        indicators=np.full((N, T), modal, dtype=np.int64),
        shrink_B=shrink_B,
        shrink_A=shrink_A,
        omega_mean=np.zeros((N, M)),
        omega_var=np.tile(sigma2_omega[:, None], (1, M)),
        logml=0.0,
    )


def simulate_given_state(
    state: ParameterState, config: ModelConfig, presample: np.ndarray, rng: np.random.Generator
) -> Dataset:
    """Fresh observations given the state's parameters and latent paths."""
    truth = DgpTruth(A=state.A, B=state.B, P=state.P, pi0=state.pi0,
                     omega=state.omega, rho=state.rho)
    y, _ = simulate_observations(truth, state.s, state.h, presample, rng)
    y_raw = np.vstack([presample, y])
    return build_design(y_raw, np.ones((y_raw.shape[0], 1)), config.p)


def _statistics(state: ParameterState, config: ModelConfig) -> dict[str, float]:
    stats: dict[str, float] = {}
    N, M = config.N, config.M
    for n in range(N):
        for m in range(M):
            w = float(state.omega[n, m])
            stats[f"omega[{n},{m}]"] = w
            stats[f"omega2[{n},{m}]"] = w * w
            # folded moment: lighter-tailed than the square, more power
            # against variance corruption of the loadings draw
            stats[f"omega_abs[{n},{m}]"] = abs(w)
            # conditional second moment; same expectation as omega2 with
            # the draw noise integrated out
            stats[f"omega2rb[{n},{m}]"] = float(
                state.omega_mean[n, m] ** 2 + state.omega_var[n, m]
            )
    # pooled spread of the loadings: per-entry noise averages out, so these
    # carry the most power against a miscalibrated loadings draw
    stats["omega_abs_sum"] = float(np.abs(state.omega).sum())
    stats["omega2_sum"] = float((state.omega ** 2).sum())
    for n in range(N):
        stats[f"gamma_B[{n}]"] = float(state.shrink_B.gamma[n])
        stats[f"sigma2_omega[{n}]"] = float(state.sigma2_omega[n])
    stats["gamma_A[0]"] = float(state.shrink_A.gamma[0])
    stats["rho[0]"] = float(state.rho[0])
    stats["P[0,0]"] = float(state.P[0, 0])
    stats["pi0[0]"] = float(state.pi0[0])
    stats["A[0,0]"] = float(state.A[0, 0])
    stats["A2[0,0]"] = float(state.A[0, 0] ** 2)
    stats["A[0,last]"] = float(state.A[0, -1])
    b0 = float(state.B[0, 0, 0])
    stats["Btanh[0,0,0]"] = float(np.tanh(b0))
    stats["B2[0,0,0]"] = b0 * b0
    for n in config.patterns.tvi_equations:
        for m in range(M):
            stats[f"kappa0[{n},{m}]"] = float(state.kappa[n, m] == 0)
    stats["s_frac[0]"] = float(np.mean(state.s == 0)) if state.s.size else 0.5
    stats["h_tanh[0,last]"] = float(np.tanh(state.h[0, -1])) if state.h.shape[1] else 0.0
    return stats


@dataclass
class GewekeResult:
    z_scores: dict[str, float]
    mc_means: dict[str, float]
    sc_means: dict[str, float]

    @property
    def max_abs_z(self) -> float:
        return max(abs(z) for z in self.z_scores.values())

    def summary(self) -> str:
        lines = [f"{'statistic':<16} {'prior-sim':>12} {'gibbs-sim':>12} {'z':>8}"]
        for name, z in sorted(self.z_scores.items()):
            lines.append(
                f"{name:<16} {self.mc_means[name]:>12.4f} {self.sc_means[name]:>12.4f} {z:>8.2f}"
            )
        return "\n".join(lines)


def _batch_se(series: np.ndarray, n_batches: int = 50) -> float:
    """Standard error of the mean from non-overlapping batch means."""
    n = series.shape[0]
    n_batches = min(n_batches, n)
    size = n // n_batches
    trimmed = series[: size * n_batches].reshape(n_batches, size)
    bm = trimmed.mean(axis=1)
    return float(np.sqrt(bm.var(ddof=1) / n_batches))


def geweke_joint_test(
    config: ModelConfig,
    iterations: int,
    rng: np.random.Generator,
    *,
    T: int = 30,
    omega_sd_inflation: float = 1.0,
    batches: int = 50,
) -> GewekeResult:
    """Run both simulators for ``iterations`` rounds and compare moments.

    The prior side draws each round independently, so its standard error
    is the plain iid one; the Gibbs side is a Markov chain and gets a
    batch-means standard error.  ``omega_sd_inflation`` corrupts the
    loadings draw on the Gibbs side only, for mutation testing.
    """
    rng_mc, rng_sc = rng.spawn(2)
    presample = np.zeros((config.p, config.N))

    mc_rows = []
    for _ in range(iterations):
        state = prior_draw(config, T, rng_mc)
        mc_rows.append(_statistics(state, config))

    state = prior_draw(config, T, rng_sc)
    data = simulate_given_state(state, config, presample, rng_sc)
    sc_rows = []
    for _ in range(iterations):
        gibbs_sweep(state, data, config, rng_sc, omega_sd_inflation=omega_sd_inflation)
        data = simulate_given_state(state, config, presample, rng_sc)
        sc_rows.append(_statistics(state, config))

    names = list(mc_rows[0])
    z_scores, mc_means, sc_means = {}, {}, {}
    for name in names:
        a = np.array([row[name] for row in mc_rows])
        b = np.array([row[name] for row in sc_rows])
        se_a = float(np.sqrt(a.var(ddof=1) / a.shape[0]))
        se_b = _batch_se(b, batches)
        denom = np.hypot(se_a, se_b)
        z_scores[name] = float((a.mean() - b.mean()) / denom) if denom > 0 else 0.0
        mc_means[name] = float(a.mean())
        sc_means[name] = float(b.mean())
    return GewekeResult(z_scores=z_scores, mc_means=mc_means, sc_means=sc_means)
