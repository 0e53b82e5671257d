"""Model configuration and the flat key-value config file format."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, replace

from .data import ColumnTransform
from .patterns import PatternSet, build_pattern_set


@dataclass(frozen=True)
class ModelConfig:
    """Everything a chain needs besides the data.

    Hyperparameter defaults follow the benchmark setup: heavy-tailed
    hierarchical shrinkage on both the structural and autoregressive
    coefficients, a persistent-regime Dirichlet prior, and a unit-scale
    gamma prior on the volatility-loading variance.
    """

    N: int
    p: int = 1
    M: int = 1
    d_dim: int = 1
    patterns: PatternSet | None = None
    # structural-coefficient shrinkage chain
    nu_B: float = 10.0
    nu_gamma_B: float = 10.0
    s_s_B: float = 100.0
    nu_s_B: float = 1.0
    # autoregressive shrinkage chain
    nu_A: float = 10.0
    nu_gamma_A: float = 10.0
    s_s_A: float = 10.0
    nu_s_A: float = 10.0
    # regime persistence: prior adds d_m to the diagonal transition count
    d_m: float = 11.0
    # volatility loading variance prior, Gamma(shape, scale)
    omega_shape: float = 1.0
    omega_scale: float = 1.0
    fix_omega_at_zero: bool = False
    # chain controls
    draws: int = 10_000
    burnin: int = 5_000
    thin: int = 1
    seed: int = 0
    chains: int = 1
    variables: tuple[str, ...] = ()
    det_columns: tuple[str, ...] = ()
    transforms: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.N < 1 or self.p < 1 or self.M < 1 or self.d_dim < 1:
            raise ValueError("N, p, M and d_dim must be positive")
        if self.draws < 1 or self.burnin < 0 or self.thin < 1 or self.chains < 1:
            raise ValueError("invalid chain controls")
        if self.patterns is None:
            object.__setattr__(self, "patterns", build_pattern_set(None, self.N))
        if self.patterns.N != self.N:
            raise ValueError("pattern set does not match N")
        for nm in ("nu_B", "nu_gamma_B", "s_s_B", "nu_s_B", "nu_A",
                   "nu_gamma_A", "s_s_A", "nu_s_A", "omega_shape", "omega_scale"):
            if getattr(self, nm) <= 0:
                raise ValueError(f"{nm} must be positive")
        if self.d_m < 0:
            raise ValueError("d_m must be non-negative")

    @property
    def n_coefficients(self) -> int:
        return self.N * self.p + self.d_dim

    def transform_map(self) -> dict[str, ColumnTransform]:
        return {name: ColumnTransform.parse(tok) for name, tok in self.transforms}

    def with_updates(self, **kw) -> "ModelConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "p": self.p,
            "M": self.M,
            "d_dim": self.d_dim,
            "patterns": [[pat.spec for pat in eq] for eq in self.patterns.equations],
            "nu_B": self.nu_B,
            "nu_gamma_B": self.nu_gamma_B,
            "s_s_B": self.s_s_B,
            "nu_s_B": self.nu_s_B,
            "nu_A": self.nu_A,
            "nu_gamma_A": self.nu_gamma_A,
            "s_s_A": self.s_s_A,
            "nu_s_A": self.nu_s_A,
            "d_m": self.d_m,
            "omega_shape": self.omega_shape,
            "omega_scale": self.omega_scale,
            "fix_omega_at_zero": self.fix_omega_at_zero,
            "draws": self.draws,
            "burnin": self.burnin,
            "thin": self.thin,
            "seed": self.seed,
            "chains": self.chains,
            "variables": list(self.variables),
            "det_columns": list(self.det_columns),
            "transforms": [list(t) for t in self.transforms],
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        pats = d.pop("patterns", None)
        pattern_set = None
        if pats is not None:
            pattern_set = PatternSet(
                equations=tuple(
                    tuple(_parse(p) for p in eq) for eq in pats
                )
            )
        d["variables"] = tuple(d.get("variables", ()))
        d["det_columns"] = tuple(d.get("det_columns", ()))
        d["transforms"] = tuple(tuple(t) for t in d.get("transforms", ()))
        return cls(patterns=pattern_set, **d)


def _parse(spec: str):
    from .patterns import parse_pattern

    return parse_pattern(spec)


_INT_KEYS = {"lags", "regimes", "draws", "burnin", "thin", "seed", "chains"}
_FLOAT_KEYS = {
    "nu_B", "nu_gamma_B", "s_s_B", "nu_s_B",
    "nu_A", "nu_gamma_A", "s_s_A", "nu_s_A",
    "d_m", "omega_shape", "omega_scale",
}
_BOOL_KEYS = {"fix_omega_at_zero"}


def parse_config(text: str) -> ModelConfig:
    """Parse the sectioned key-value config format.

    Sections: ``[model]`` (variables, lags, regimes, det_columns),
    ``[priors]``, ``[chain]``, ``[transforms]`` (column = kind, kinds are
    none / log / logdiff with optional ``_x100`` suffix), and
    ``[patterns]`` (eq<i> = comma-separated pattern strings over ``{*, 0}``).
    """
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"config parse error: {exc}") from None

    kw: dict = {}
    model = cp["model"] if cp.has_section("model") else {}
    if "variables" not in model:
        raise ValueError("config needs [model] variables = ...")
    variables = tuple(v.strip() for v in model["variables"].split(",") if v.strip())
    kw["variables"] = variables
    kw["N"] = len(variables)
    kw["p"] = int(model.get("lags", 1))
    kw["M"] = int(model.get("regimes", 1))
    det = tuple(v.strip() for v in model.get("det_columns", "").split(",") if v.strip())
    kw["det_columns"] = det
    kw["d_dim"] = 1 + len(det)

    for section in ("priors", "chain"):
        if not cp.has_section(section):
            continue
        for key, val in cp[section].items():
            if key in _FLOAT_KEYS:
                kw[key] = float(val)
            elif key in _INT_KEYS:
                name = {"lags": "p", "regimes": "M"}.get(key, key)
                kw[name] = int(val)
            elif key in _BOOL_KEYS:
                kw[key] = val.strip().lower() in ("1", "true", "yes")
            else:
                raise ValueError(f"unknown key {key!r} in [{section}]")

    if cp.has_section("transforms"):
        trs = []
        for key, val in cp["transforms"].items():
            if key not in variables:
                raise ValueError(f"[transforms] references unknown variable {key!r}")
            ColumnTransform.parse(val)  # validate
            trs.append((key, val.strip().lower()))
        kw["transforms"] = tuple(trs)

    declarations: dict[int, list[str]] = {}
    if cp.has_section("patterns"):
        for key, val in cp["patterns"].items():
            if not key.startswith("eq"):
                raise ValueError(f"[patterns] keys look like eq<i>, got {key!r}")
            try:
                n = int(key[2:]) - 1
            except ValueError:
                raise ValueError(f"[patterns] keys look like eq<i>, got {key!r}") from None
            declarations[n] = [s.strip() for s in val.split(",") if s.strip()]
    kw["patterns"] = build_pattern_set(declarations, kw["N"])

    return ModelConfig(**kw)


def load_config(path: str) -> ModelConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(config: ModelConfig) -> str:
    """Render a config back to the file format (round-trips parse_config)."""
    lines = ["[model]"]
    lines.append("variables = " + ", ".join(config.variables or tuple(f"y{i+1}" for i in range(config.N))))
    lines.append(f"lags = {config.p}")
    lines.append(f"regimes = {config.M}")
    if config.det_columns:
        lines.append("det_columns = " + ", ".join(config.det_columns))
    lines.append("")
    lines.append("[priors]")
    for key in sorted(_FLOAT_KEYS):
        lines.append(f"{key} = {getattr(config, key):g}")
    if config.fix_omega_at_zero:
        lines.append("fix_omega_at_zero = true")
    lines.append("")
    lines.append("[chain]")
    for key in ("draws", "burnin", "thin", "seed", "chains"):
        lines.append(f"{key} = {getattr(config, key)}")
    if config.transforms:
        lines.append("")
        lines.append("[transforms]")
        for name, tok in config.transforms:
            lines.append(f"{name} = {tok}")
    lines.append("")
    lines.append("[patterns]")
    for n, eq in enumerate(config.patterns.equations):
        lines.append(f"eq{n + 1} = " + ", ".join(pat.spec for pat in eq))
    return "\n".join(lines) + "\n"
