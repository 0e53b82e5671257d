"""Exclusion-restriction patterns for structural matrix rows.

A pattern is a string over ``{*, 0}``: ``*`` marks a free entry, ``0`` an
exclusion restriction.  Each pattern maps to a selection matrix ``V``
(``r x N``, one unit entry per row, at most one per column) so that a free
coefficient vector ``b`` of length ``r`` expands to a full row ``b @ V``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Pattern:
    mask: tuple[bool, ...]
    label: str = ""

    def __post_init__(self) -> None:
        if not any(self.mask):
            raise ValueError(f"pattern {self.label or self.spec!r} restricts every entry")

    @property
    def N(self) -> int:
        return len(self.mask)

    @property
    def r(self) -> int:
        return int(sum(self.mask))

    @property
    def free_idx(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.mask))

    @property
    def selection(self) -> np.ndarray:
        """Dense r x N selection matrix V."""
        V = np.zeros((self.r, self.N))
        V[np.arange(self.r), self.free_idx] = 1.0
        return V

    @property
    def spec(self) -> str:
        return "".join("*" if m else "0" for m in self.mask)


def parse_pattern(text: str, label: str = "") -> Pattern:
    text = text.strip()
    if not text or any(ch not in "*0" for ch in text):
        raise ValueError(f"pattern {text!r} must be a non-empty string over {{*, 0}}")
    return Pattern(mask=tuple(ch == "*" for ch in text), label=label or text)


def lower_triangular_pattern(n: int, N: int) -> Pattern:
    """Row ``n`` (0-based) of a lower-triangular structure."""
    return parse_pattern("*" * (n + 1) + "0" * (N - n - 1))


@dataclass(frozen=True)
class PatternSet:
    """Per-equation lists of admissible patterns.

    Equations with more than one pattern carry a data-driven restriction
    indicator; single-pattern equations are fixed.
    """

    equations: tuple[tuple[Pattern, ...], ...]

    def __post_init__(self) -> None:
        N = len(self.equations)
        for n, pats in enumerate(self.equations):
            if not pats:
                raise ValueError(f"equation {n + 1} declares no pattern")
            for pat in pats:
                if pat.N != N:
                    raise ValueError(
                        f"equation {n + 1}: pattern {pat.spec} has length {pat.N}, expected {N}"
                    )
            specs = [pat.spec for pat in pats]
            if len(set(specs)) != len(specs):
                raise ValueError(f"equation {n + 1}: duplicate patterns")

    @property
    def N(self) -> int:
        return len(self.equations)

    def K(self, n: int) -> int:
        return len(self.equations[n])

    @property
    def tvi_equations(self) -> tuple[int, ...]:
        return tuple(n for n in range(self.N) if self.K(n) > 1)

    def restricted_share(self, n: int, col: int) -> float:
        """Prior probability that entry (n, col) is restricted to zero."""
        pats = self.equations[n]
        return sum(1 for p in pats if not p.mask[col]) / len(pats)


def build_pattern_set(
    declarations: dict[int, list[str]] | None,
    N: int,
) -> PatternSet:
    """Build a PatternSet from per-equation declarations (0-based keys).

    Undeclared equations default to the corresponding lower-triangular row.
    """
    declarations = declarations or {}
    for n in declarations:
        if not 0 <= n < N:
            raise ValueError(f"equation index {n} out of range for N={N}")
    equations = []
    for n in range(N):
        if n in declarations:
            equations.append(tuple(parse_pattern(s) for s in declarations[n]))
        else:
            equations.append((lower_triangular_pattern(n, N),))
    return PatternSet(equations=tuple(equations))


def apply_pattern(b: np.ndarray, pattern: Pattern) -> np.ndarray:
    """Expand free coefficients into a full structural row."""
    b = np.asarray(b, dtype=float)
    if b.shape != (pattern.r,):
        raise ValueError(f"expected {pattern.r} free coefficients, got shape {b.shape}")
    row = np.zeros(pattern.N)
    row[pattern.free_idx] = b
    return row


def extract_free(row: np.ndarray, pattern: Pattern) -> np.ndarray:
    """Inverse of :func:`apply_pattern` on the free entries."""
    row = np.asarray(row, dtype=float)
    if row.shape != (pattern.N,):
        raise ValueError("row length does not match pattern")
    return row[pattern.free_idx].copy()
