"""On-disk posterior sample layout: JSON manifest plus flat float64 blocks.

Each parameter block lives in its own little-endian binary file in
draw-major order, so a stored chain round-trips bit for bit.  The manifest
pins dimensions, chain provenance, the config digest, and per-block
checksums that are verified on load.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig

FORMAT_VERSION = 1


@dataclass
class DrawStore:
    config: ModelConfig
    T: int
    chain_id: int = 0
    blocks: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        if not self.blocks:
            return 0
        return next(iter(self.blocks.values())).shape[0]

    def block(self, name: str) -> np.ndarray:
        if name not in self.blocks:
            raise KeyError(f"store has no block {name!r}")
        return self.blocks[name]

    def __contains__(self, name: str) -> bool:
        return name in self.blocks


def block_layout(config: ModelConfig, T: int) -> dict[str, tuple[int, ...]]:
    """Per-draw shapes of every stored block."""
    N, M, J = config.N, config.M, config.n_coefficients
    return {
        "A": (N, J),
        "B": (M, N, N),
        "kappa": (N, M),
        "s": (T,),
        "P": (M, M),
        "pi0": (M,),
        "h": (N, T),
        "omega": (N, M),
        "rho": (N,),
        "sigma2_omega": (N,),
        "gamma_B": (N,),
        "s_B": (N,),
        "s_gamma_B": (1,),
        "gamma_A": (N,),
        "s_A": (N,),
        "s_gamma_A": (1,),
        "omega_mean": (N, M),
        "omega_var": (N, M),
        "logml": (1,),
    }


def allocate_store(config: ModelConfig, T: int, n_draws: int, chain_id: int = 0) -> DrawStore:
    blocks = {
        name: np.empty((n_draws, *shape))
        for name, shape in block_layout(config, T).items()
    }
    return DrawStore(config=config, T=T, chain_id=chain_id, blocks=blocks)


def record_draw(store: DrawStore, i: int, state) -> None:
    b = store.blocks
    b["A"][i] = state.A
    b["B"][i] = state.B
    b["kappa"][i] = state.kappa
    b["s"][i] = state.s
    b["P"][i] = state.P
    b["pi0"][i] = state.pi0
    b["h"][i] = state.h
    b["omega"][i] = state.omega
    b["rho"][i] = state.rho
    b["sigma2_omega"][i] = state.sigma2_omega
    b["gamma_B"][i] = state.shrink_B.gamma
    b["s_B"][i] = state.shrink_B.s
    b["s_gamma_B"][i] = state.shrink_B.s_gamma
    b["gamma_A"][i] = state.shrink_A.gamma
    b["s_A"][i] = state.shrink_A.s
    b["s_gamma_A"][i] = state.shrink_A.s_gamma
    b["omega_mean"][i] = state.omega_mean
    b["omega_var"][i] = state.omega_var
    b["logml"][i] = state.logml


def _block_digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr, dtype="<f8").tobytes()).hexdigest()


def persist_store(store: DrawStore, path: str) -> None:
    os.makedirs(path, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config_digest": store.config.digest(),
        "config": store.config.to_dict(),
        "T": store.T,
        "chain_id": store.chain_id,
        "n_draws": store.n_draws,
        "blocks": {},
    }
    for name, arr in store.blocks.items():
        flat = np.ascontiguousarray(arr, dtype="<f8")
        fname = f"{name}.f64"
        with open(os.path.join(path, fname), "wb") as fh:
            fh.write(flat.tobytes())
        manifest["blocks"][name] = {
            "file": fname,
            "shape": list(arr.shape),
            "sha256": _block_digest(arr),
        }
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def load_store(
    path: str,
    expected_config: ModelConfig | None = None,
    *,
    allow_config_mismatch: bool = False,
) -> DrawStore:
    manifest_path = os.path.join(path, "manifest.json")
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"{path}: not a draw store (missing manifest.json)")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported store format {manifest.get('format_version')}")
    config = ModelConfig.from_dict(manifest["config"])
    if config.digest() != manifest["config_digest"]:
        raise ValueError(f"{path}: config digest mismatch; manifest corrupted")
    if expected_config is not None and expected_config.digest() != manifest["config_digest"]:
        msg = f"{path}: store was produced under a different config"
        if not allow_config_mismatch:
            raise ValueError(msg + " (pass allow_config_mismatch=True to load anyway)")
        warnings.warn(msg)
    blocks = {}
    for name, meta in manifest["blocks"].items():
        shape = tuple(meta["shape"])
        fpath = os.path.join(path, meta["file"])
        raw = np.fromfile(fpath, dtype="<f8")
        expected = int(np.prod(shape))
        if raw.size != expected:
            raise ValueError(
                f"{path}: block {name!r} holds {raw.size} values, expected {expected}; "
                "file is truncated or padded"
            )
        arr = raw.reshape(shape)
        if _block_digest(arr) != meta["sha256"]:
            raise ValueError(f"{path}: block {name!r} fails its checksum")
        blocks[name] = arr
    return DrawStore(config=config, T=manifest["T"], chain_id=manifest["chain_id"], blocks=blocks)
