"""Complete parameter snapshot for the Gibbs sampler."""

from __future__ import annotations

import copy
from dataclasses import dataclass, fields

import numpy as np

from .config import ModelConfig
from .priors import ShrinkageChain


@dataclass
class ParameterState:
    """One full set of model unknowns, latent paths included."""

    A: np.ndarray                 # (N, J)
    B: np.ndarray                 # (M, N, N)
    kappa: np.ndarray             # (N, M) pattern indices, zero for fixed equations
    s: np.ndarray                 # (T,) regime path
    P: np.ndarray                 # (M, M)
    pi0: np.ndarray               # (M,)
    h: np.ndarray                 # (N, T)
    omega: np.ndarray             # (N, M)
    rho: np.ndarray               # (N,)
    sigma2_omega: np.ndarray      # (N,)
    indicators: np.ndarray        # (N, T) mixture component labels
    shrink_B: ShrinkageChain
    shrink_A: ShrinkageChain
    omega_mean: np.ndarray        # (N, M) conditional posterior means at the draw
    omega_var: np.ndarray         # (N, M) conditional posterior variances
    logml: float = 0.0

    def copy(self) -> "ParameterState":
        out = copy.copy(self)
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, np.ndarray):
                setattr(out, f.name, val.copy())
        return out

    def validate(self, config: ModelConfig, T: int | None = None) -> None:
        """Raise if any structural invariant is broken."""
        N, M, J = config.N, config.M, config.n_coefficients
        if T is None:
            T = self.s.shape[0]
        checks = {
            "A": (self.A, (N, J)),
            "B": (self.B, (M, N, N)),
            "kappa": (self.kappa, (N, M)),
            "s": (self.s, (T,)),
            "P": (self.P, (M, M)),
            "pi0": (self.pi0, (M,)),
            "h": (self.h, (N, T)),
            "omega": (self.omega, (N, M)),
            "rho": (self.rho, (N,)),
            "sigma2_omega": (self.sigma2_omega, (N,)),
            "indicators": (self.indicators, (N, T)),
            "omega_mean": (self.omega_mean, (N, M)),
            "omega_var": (self.omega_var, (N, M)),
        }
        for name, (arr, shape) in checks.items():
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        if np.any(np.abs(self.P.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition matrix rows must sum to one")
        if np.any(self.P < 0) or np.any(self.pi0 < 0):
            raise ValueError("negative probabilities")
        if abs(self.pi0.sum() - 1.0) > 1e-12:
            raise ValueError("initial regime probabilities must sum to one")
        if T and (self.s.min() < 0 or self.s.max() >= M):
            raise ValueError("regime path out of range")
        if np.any(self.sigma2_omega <= 0):
            raise ValueError("loading variances must be positive")
        if np.any(np.abs(self.rho) >= 1.0):
            raise ValueError("volatility persistence must lie in (-1, 1)")
        for n in range(N):
            K = config.patterns.K(n)
            if self.kappa[n].min() < 0 or self.kappa[n].max() >= K:
                raise ValueError(f"equation {n + 1}: pattern index out of range")
            for m in range(M):
                pat = config.patterns.equations[n][self.kappa[n, m]]
                restricted = ~np.asarray(pat.mask)
                if np.any(self.B[m, n, restricted] != 0.0):
                    raise ValueError(
                        f"equation {n + 1}, regime {m + 1}: restricted entries are non-zero"
                    )
        for m in range(M):
            sign, _ = np.linalg.slogdet(self.B[m])
            if sign == 0:
                raise ValueError(f"structural matrix for regime {m + 1} is singular")
